//! BIC-driven adaptive tuning of one rank-one component.
//!
//! Coordinate search over `(λ_u, λ_v, α_u, α_v)`: each parameter in turn is
//! scanned over its grid with the others held fixed, for two sweeps. The
//! score
//!
//! ```text
//! BIC(u, v) = log(‖X − d·ûv̂ᵀ‖²_F / np) + log(np)/(np) · (df_u + df_v)
//! ```
//!
//! uses Euclidean-normalized `û, v̂`, `d = ûᵀXv̂` and nonzero counts as
//! degrees of freedom. Lower is better.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SfpcaError};
use crate::linalg::{build_difference_penalty, build_smoother, thin_svd, DenseMatrix, SmoothingOperator};
use crate::rank1::{fit_rank1, Rank1Config, Rank1Fit};

pub const TUNE_SWEEPS: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneGrid {
    pub lambda_u: Vec<f64>,
    pub lambda_v: Vec<f64>,
    pub alpha_u: Vec<f64>,
    pub alpha_v: Vec<f64>,
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

impl TuneGrid {
    pub fn single(lambda_u: f64, lambda_v: f64, alpha_u: f64, alpha_v: f64) -> Self {
        Self {
            lambda_u: vec![lambda_u],
            lambda_v: vec![lambda_v],
            alpha_u: vec![alpha_u],
            alpha_v: vec![alpha_v],
        }
    }

    /// Grid scaled to the data: λ runs up to half the level at which the
    /// leading pair would be thresholded away entirely, α over four decades.
    pub fn default_for(x: &DenseMatrix) -> Result<Self> {
        let svd = thin_svd(x)?;
        let s1 = svd.d[0];
        let top_u = s1 * svd.u.column(0).amax();
        let top_v = s1 * svd.v.column(0).amax();
        let lam = |top: f64| {
            let mut g = vec![0.0];
            g.extend(log_grid(top * 0.005, top * 0.5, 6));
            g
        };
        let mut alphas = vec![0.0];
        alphas.extend(log_grid(0.1, 10.0, 4));
        Ok(Self {
            lambda_u: lam(top_u),
            lambda_v: lam(top_v),
            alpha_u: alphas.clone(),
            alpha_v: alphas,
        })
    }

    fn validate(&self) -> Result<()> {
        let lists = [&self.lambda_u, &self.lambda_v, &self.alpha_u, &self.alpha_v];
        if lists.iter().any(|l| l.is_empty()) {
            return Err(SfpcaError::Config("every tuning grid needs at least one value".into()));
        }
        if lists.iter().flat_map(|l| l.iter()).any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(SfpcaError::Config("tuning grid values must be finite and ≥ 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TunedParams {
    pub lambda_u: f64,
    pub lambda_v: f64,
    pub alpha_u: f64,
    pub alpha_v: f64,
    pub bic: f64,
}

#[derive(Debug, Clone)]
pub struct TuneResult {
    pub params: TunedParams,
    pub config: Rank1Config,
    pub fit: Rank1Fit,
    /// Distinct parameter combinations fitted.
    pub evaluations: usize,
}

/// Smoothers keyed by `(dim, α)` for a fixed difference order.
#[derive(Debug, Clone)]
pub struct SmootherCache {
    order: usize,
    map: HashMap<(usize, u64), Arc<SmoothingOperator>>,
}

impl SmootherCache {
    pub fn new(order: usize) -> Self {
        Self {
            order,
            map: HashMap::new(),
        }
    }

    pub fn get(&mut self, dim: usize, alpha: f64) -> Result<Arc<SmoothingOperator>> {
        if let Some(s) = self.map.get(&(dim, alpha.to_bits())) {
            return Ok(s.clone());
        }
        let s = if alpha == 0.0 {
            SmoothingOperator::identity(dim)
        } else {
            build_smoother(&build_difference_penalty(dim, self.order)?, alpha)?
        };
        let s = Arc::new(s);
        self.map.insert((dim, alpha.to_bits()), s.clone());
        Ok(s)
    }
}

/// BIC of a fitted pair; `+∞` for a collapsed fit.
pub fn bic_score(x: &DenseMatrix, u: &crate::linalg::Vector, v: &crate::linalg::Vector) -> f64 {
    let (nu, nv) = (u.norm(), v.norm());
    if nu == 0.0 || nv == 0.0 {
        return f64::INFINITY;
    }
    let (uh, vh) = (u / nu, v / nv);
    let d = uh.dot(&(x * &vh));
    let resid = (x - &uh * vh.transpose() * d).norm_squared();
    let np = (x.nrows() * x.ncols()) as f64;
    let df = u.iter().filter(|&&a| a != 0.0).count() + v.iter().filter(|&&a| a != 0.0).count();
    (resid / np).max(f64::MIN_POSITIVE).ln() + np.ln() / np * df as f64
}

type Key = [u64; 4];

pub fn bic_tune(
    x: &DenseMatrix,
    grid: &TuneGrid,
    template: &Rank1Config,
    cache: &mut SmootherCache,
) -> Result<TuneResult> {
    grid.validate()?;
    let (n, p) = x.shape();
    let mut current = [grid.lambda_u[0], grid.lambda_v[0], grid.alpha_u[0], grid.alpha_v[0]];
    let mut seen: HashMap<Key, Option<(f64, Rank1Config, Rank1Fit)>> = HashMap::new();

    let mut evaluate = |params: [f64; 4], cache: &mut SmootherCache| -> Result<f64> {
        let key = params.map(f64::to_bits);
        if let Some(entry) = seen.get(&key) {
            return Ok(entry.as_ref().map_or(f64::INFINITY, |e| e.0));
        }
        let mut cfg = template.clone();
        cfg.lambda_u = params[0];
        cfg.lambda_v = params[1];
        cfg.s_u = cache.get(n, params[2])?;
        cfg.s_v = cache.get(p, params[3])?;
        let entry = match fit_rank1(x, &cfg) {
            Ok(fit) => Some((bic_score(x, &fit.u, &fit.v), cfg, fit)),
            Err(e) => {
                log::warn!("tuning fit at {params:?} failed: {e}");
                None
            }
        };
        let score = entry.as_ref().map_or(f64::INFINITY, |e| e.0);
        seen.insert(key, entry);
        Ok(score)
    };

    let lists = [&grid.lambda_u, &grid.lambda_v, &grid.alpha_u, &grid.alpha_v];
    let mut best_score = evaluate(current, cache)?;
    for _ in 0..TUNE_SWEEPS {
        for (slot, values) in lists.iter().enumerate() {
            for &val in values.iter() {
                let mut cand = current;
                cand[slot] = val;
                let score = evaluate(cand, cache)?;
                if score < best_score {
                    best_score = score;
                    current = cand;
                }
            }
        }
    }
    if !best_score.is_finite() {
        return Err(SfpcaError::TuningDegenerate);
    }
    let evaluations = seen.len();
    let (bic, config, fit) = seen
        .remove(&current.map(f64::to_bits))
        .flatten()
        .expect("best candidate was evaluated");
    Ok(TuneResult {
        params: TunedParams {
            lambda_u: current[0],
            lambda_v: current[1],
            alpha_u: current[2],
            alpha_v: current[3],
            bic,
        },
        config,
        fit,
        evaluations,
    })
}
