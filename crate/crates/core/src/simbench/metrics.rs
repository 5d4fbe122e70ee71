//! Evaluation metrics shared by every method.

use serde::{Deserialize, Serialize};

use crate::deflation::{DeflationScheme, DeflationState};
use crate::error::{Result, SfpcaError};
use crate::linalg::{condition_number, DenseMatrix};
use crate::mansfpca::EngineStats;

/// Entries with magnitude at or below this count as zero.
pub const SUPPORT_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub cpve: Vec<f64>,
    pub rss_error_u: f64,
    pub rss_error_v: f64,
    pub tpr_u: f64,
    pub tpr_v: f64,
    pub fpr_u: f64,
    pub fpr_v: f64,
    /// Minimization objective of the manifold problem at the reported factors.
    pub objective: Option<f64>,
    /// `objective` minus the best objective of the replicate.
    pub suboptimality: Option<f64>,
    /// Seconds; only recorded on request since it breaks byte determinism.
    pub wall_time: Option<f64>,
    pub engine_stats: Option<EngineStats>,
    pub converged: bool,
}

fn nonzero_columns(b: &DenseMatrix) -> DenseMatrix {
    let live: Vec<usize> = (0..b.ncols())
        .filter(|&j| b.column(j).iter().any(|&a| a != 0.0))
        .collect();
    b.select_columns(&live)
}

/// `CPVE_r = 1 − ‖X_r‖²_F / ‖X₀‖²_F` where `X_r` is the normalized block
/// projection deflation of `x0` by the first `r` pairs. Exactly zero pairs
/// contribute nothing.
pub fn metric_cpve(x0: &DenseMatrix, u: &DenseMatrix, v: &DenseMatrix) -> Result<Vec<f64>> {
    if u.nrows() != x0.nrows() || v.nrows() != x0.ncols() || u.ncols() != v.ncols() {
        return Err(SfpcaError::Dimension(format!(
            "factors {:?}/{:?} do not fit {:?}",
            u.shape(),
            v.shape(),
            x0.shape()
        )));
    }
    let total = x0.norm_squared();
    if total == 0.0 {
        return Err(SfpcaError::Degenerate("CPVE of a zero matrix".into()));
    }
    let state = DeflationState::new(x0.clone())?;
    let mut out = Vec::with_capacity(u.ncols());
    for r in 1..=u.ncols() {
        let live: Vec<usize> = (0..r)
            .filter(|&j| {
                u.column(j).iter().any(|&a| a != 0.0) && v.column(j).iter().any(|&a| a != 0.0)
            })
            .collect();
        if live.is_empty() {
            out.push(0.0);
            continue;
        }
        let deflated = state.deflate_block(
            &u.select_columns(&live),
            &v.select_columns(&live),
            DeflationScheme::projection(),
        )?;
        out.push(1.0 - deflated.x_current().norm_squared() / total);
    }
    Ok(out)
}

fn projector(b: &DenseMatrix, name: &str) -> Result<DenseMatrix> {
    let b = nonzero_columns(b);
    if b.ncols() == 0 {
        return Err(SfpcaError::Degenerate(format!("{name} block is entirely zero")));
    }
    let gram = b.tr_mul(&b);
    let cond = condition_number(&gram)?;
    if !(cond < 1e12) {
        return Err(SfpcaError::Conditioning {
            factor: format!("{name} block"),
            condition: cond,
            bound: 1e12,
        });
    }
    let chol = nalgebra::Cholesky::new(gram)
        .ok_or_else(|| SfpcaError::Degenerate(format!("{name} Gram matrix not positive definite")))?;
    Ok(&b * chol.solve(&b.transpose()))
}

/// `‖P̂ − P*‖_F / ‖P_svd − P*‖_F` with orthogonal projectors onto the column
/// spaces.
pub fn metric_rss_error(u_hat: &DenseMatrix, u_star: &DenseMatrix, u_svd: &DenseMatrix) -> Result<f64> {
    let p_star = projector(u_star, "truth")?;
    let p_hat = projector(u_hat, "estimate")?;
    let p_svd = projector(u_svd, "SVD reference")?;
    let denom = (&p_svd - &p_star).norm();
    if denom == 0.0 {
        return Err(SfpcaError::Degenerate("SVD reference coincides with the truth".into()));
    }
    Ok((p_hat - p_star).norm() / denom)
}

fn abs_cosine(a: nalgebra::DVectorView<'_, f64>, b: nalgebra::DVectorView<'_, f64>) -> f64 {
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (a.dot(&b) / (na * nb)).abs()
    }
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; k], &mut out);
    out
}

/// Permutation `π` maximizing `Σ_j |cos(est_{π(j)}, truth_j)|`; the first
/// maximizer in lexicographic order wins ties.
pub fn match_columns(est: &DenseMatrix, truth: &DenseMatrix) -> Vec<usize> {
    let k = truth.ncols();
    let mut best = (f64::NEG_INFINITY, (0..k).collect::<Vec<_>>());
    for perm in permutations(k) {
        let score: f64 = (0..k).map(|j| abs_cosine(est.column(perm[j]), truth.column(j))).sum();
        if score > best.0 {
            best = (score, perm);
        }
    }
    best.1
}

/// `(TPR, FPR)` of the entrywise support after matching columns to the truth.
pub fn metric_support(u_hat: &DenseMatrix, u_star: &DenseMatrix, threshold: f64) -> Result<(f64, f64)> {
    if u_hat.shape() != u_star.shape() {
        return Err(SfpcaError::Dimension(format!(
            "estimate {:?} and truth {:?} differ in shape",
            u_hat.shape(),
            u_star.shape()
        )));
    }
    if u_hat.ncols() > 8 {
        return Err(SfpcaError::Config("column matching supports at most 8 columns".into()));
    }
    let perm = match_columns(u_hat, u_star);
    let (mut hits, mut positives, mut alarms, mut negatives) = (0usize, 0usize, 0usize, 0usize);
    for (j, &pj) in perm.iter().enumerate() {
        for i in 0..u_star.nrows() {
            let truth = u_star[(i, j)].abs() > threshold;
            let est = u_hat[(i, pj)].abs() > threshold;
            match (truth, est) {
                (true, true) => {
                    hits += 1;
                    positives += 1
                }
                (true, false) => positives += 1,
                (false, true) => {
                    alarms += 1;
                    negatives += 1
                }
                (false, false) => negatives += 1,
            }
        }
    }
    let rate = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    Ok((rate(hits, positives), rate(alarms, negatives)))
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let v = sorted(values);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}
