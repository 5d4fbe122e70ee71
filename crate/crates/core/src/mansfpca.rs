//! Multi-rank SFPCA on the generalized Stiefel manifolds:
//!
//! ```text
//! max  Tr(UᵀXV) − λ_U‖U‖₁ − λ_V‖V‖₁   s.t.  UᵀS_uU = I_k,  VᵀS_vV = I_k
//! ```
//!
//! Outer loop alternates a U-subproblem (V fixed) and a V-subproblem. Each
//! subproblem is `min −Tr(UᵀA) + λ‖U‖₁` over the manifold with `A = XV` and
//! is handled by one of three engines: MADMM (Procrustes + soft threshold
//! splitting), ManPG (proximal descent directions iterated to stationarity)
//! or A-ManPG (a single ManPG step per block per sweep).

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SfpcaError};
use crate::linalg::{
    ensure_finite, l1_norm, thin_svd, DenseMatrix, SmoothingOperator, Vector,
};
use crate::manifold::{cholesky_normalize, init_leading_svd, StiefelPoint};
use crate::subsolvers::{
    armijo_search, prox_l1_metric, solve_descent_direction, solve_procrustes_scaled, DescentOptions,
    DescentProblem,
};

const PROX_TOL: f64 = 1e-12;
const PROX_MAX_ITER: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Madmm,
    Manpg,
    Amanpg,
}

impl Engine {
    pub const ALL: [Engine; 3] = [Engine::Madmm, Engine::Manpg, Engine::Amanpg];

    pub fn name(self) -> &'static str {
        match self {
            Engine::Madmm => "madmm",
            Engine::Manpg => "manpg",
            Engine::Amanpg => "amanpg",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Engine {
    type Err = SfpcaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "madmm" => Ok(Engine::Madmm),
            "manpg" => Ok(Engine::Manpg),
            "amanpg" | "a-manpg" => Ok(Engine::Amanpg),
            other => Err(SfpcaError::Config(format!(
                "unknown engine '{other}' (expected madmm, manpg or amanpg)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ManConfig {
    pub k: usize,
    pub lambda_u: f64,
    pub lambda_v: f64,
    pub s_u: Arc<SmoothingOperator>,
    pub s_v: Arc<SmoothingOperator>,
    pub engine: Engine,
    /// MADMM augmented-Lagrangian weight relative to `σ₁(X)`; the splitting
    /// uses `ρ·σ₁(X)` so its behaviour does not depend on the data scale.
    pub rho: f64,
    pub outer_tol: f64,
    pub max_outer: usize,
    pub inner_tol: f64,
    pub max_inner: usize,
    /// Columns weighted by `(1+ε)^{k−1}, …, 1` in the trace; 0 gives the plain trace.
    pub order_weight_epsilon: f64,
}

impl ManConfig {
    pub fn new(
        k: usize,
        lambda_u: f64,
        lambda_v: f64,
        s_u: Arc<SmoothingOperator>,
        s_v: Arc<SmoothingOperator>,
        engine: Engine,
    ) -> Self {
        Self {
            k,
            lambda_u,
            lambda_v,
            s_u,
            s_v,
            engine,
            rho: 1.0,
            outer_tol: 1e-5,
            max_outer: 100,
            inner_tol: 1e-7,
            max_inner: 1000,
            order_weight_epsilon: 0.0,
        }
    }

    /// Unpenalized, unsmoothed configuration for an `n × p` matrix.
    pub fn plain(n: usize, p: usize, k: usize, engine: Engine) -> Self {
        Self::new(
            k,
            0.0,
            0.0,
            Arc::new(SmoothingOperator::identity(n)),
            Arc::new(SmoothingOperator::identity(p)),
            engine,
        )
    }

    pub fn validate(&self, x: &DenseMatrix) -> Result<()> {
        let (n, p) = x.shape();
        if self.k < 1 || self.k > n.min(p) {
            return Err(SfpcaError::Config(format!(
                "rank k = {} invalid for a {n}×{p} matrix",
                self.k
            )));
        }
        if !(self.rho > 0.0) || !(self.outer_tol > 0.0) || !(self.inner_tol > 0.0) {
            return Err(SfpcaError::Config("ρ and tolerances must be positive".into()));
        }
        if self.max_outer < 1 || self.max_inner < 1 {
            return Err(SfpcaError::Config("iteration limits must be ≥ 1".into()));
        }
        if !(self.lambda_u >= 0.0) || !(self.lambda_v >= 0.0) || !(self.order_weight_epsilon >= 0.0) {
            return Err(SfpcaError::Config("λ and ε must be nonnegative".into()));
        }
        if self.s_u.dim() != n || self.s_v.dim() != p {
            return Err(SfpcaError::Dimension(format!(
                "smoother dims ({}, {}) do not match data {n}×{p}",
                self.s_u.dim(),
                self.s_v.dim()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineStats {
    pub svd_calls: usize,
    pub retractions: usize,
    pub descent_solves: usize,
    /// MADMM splitting iterations or ManPG steps, summed over subproblems.
    pub inner_iterations: usize,
    /// Subproblems that hit `max_inner` or stalled in the line search.
    pub inner_failures: usize,
    /// MADMM iterations whose primal residual did not exceed the previous one.
    pub primal_decreases: usize,
}

impl EngineStats {
    fn absorb(&mut self, other: &EngineStats) {
        self.svd_calls += other.svd_calls;
        self.retractions += other.retractions;
        self.descent_solves += other.descent_solves;
        self.inner_iterations += other.inner_iterations;
        self.inner_failures += other.inner_failures;
        self.primal_decreases += other.primal_decreases;
    }
}

#[derive(Debug, Clone)]
pub struct BlockFit {
    pub u: DenseMatrix,
    pub v: DenseMatrix,
    /// Diagonal of `UᵀXV`.
    pub d: Vector,
    /// Minimization objective `−objective_manifold` after initialization and
    /// after every outer sweep.
    pub objective_trace: Vec<f64>,
    /// Minimization objective at the reported factors.
    pub final_objective: f64,
    pub converged: bool,
    /// Some column was shrunk to exactly zero; feasibility cannot hold.
    pub degenerate: bool,
    pub sweeps: usize,
    pub engine_stats: EngineStats,
}

impl BlockFit {
    pub fn feasibility_residual(&self, cfg: &ManConfig) -> f64 {
        cfg.s_u
            .feasibility_residual(&self.u)
            .max(cfg.s_v.feasibility_residual(&self.v))
    }
}

/// `(1+ε)^{k−1}, …, (1+ε)^0`.
pub fn order_weights(k: usize, eps: f64) -> Vector {
    Vector::from_fn(k, |j, _| (1.0 + eps).powi((k - 1 - j) as i32))
}

fn weighted(m: DenseMatrix, w: &Vector, eps: f64) -> DenseMatrix {
    if eps == 0.0 {
        return m;
    }
    let mut m = m;
    for (j, mut col) in m.column_iter_mut().enumerate() {
        col *= w[j];
    }
    m
}

/// `Tr(UᵀXV·D_ε) − λ_U‖U‖₁ − λ_V‖V‖₁` with `D_ε` from [`order_weights`].
pub fn objective_manifold(x: &DenseMatrix, u: &DenseMatrix, v: &DenseMatrix, cfg: &ManConfig) -> Result<f64> {
    if u.nrows() != x.nrows() || v.nrows() != x.ncols() || u.ncols() != v.ncols() {
        return Err(SfpcaError::Dimension(format!(
            "factors {:?} and {:?} do not fit data {:?}",
            u.shape(),
            v.shape(),
            x.shape()
        )));
    }
    let w = order_weights(u.ncols(), cfg.order_weight_epsilon);
    let xv = x * v;
    let trace: f64 = (0..u.ncols()).map(|j| w[j] * u.column(j).dot(&xv.column(j))).sum();
    Ok(trace - cfg.lambda_u * l1_norm(u) - cfg.lambda_v * l1_norm(v))
}

/// Which factor a subproblem updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    U,
    V,
}

fn side_params<'c>(cfg: &'c ManConfig, side: Side) -> (&'c SmoothingOperator, f64) {
    match side {
        Side::U => (&cfg.s_u, cfg.lambda_u),
        Side::V => (&cfg.s_v, cfg.lambda_v),
    }
}

/// Linear term `A` of a subproblem: `X·V·D_ε` for the U side, `Xᵀ·U·D_ε` for V.
fn linear_term(x: &DenseMatrix, other: &DenseMatrix, side: Side, cfg: &ManConfig) -> DenseMatrix {
    let w = order_weights(other.ncols(), cfg.order_weight_epsilon);
    let a = match side {
        Side::U => x * other,
        Side::V => x.tr_mul(other),
    };
    weighted(a, &w, cfg.order_weight_epsilon)
}

/// Splitting state carried between MADMM subproblems of the same block.
#[derive(Debug, Clone)]
pub struct MadmmWarm {
    pub w: DenseMatrix,
    pub z: DenseMatrix,
}

#[derive(Debug, Clone)]
pub struct MadmmOutcome {
    /// Manifold iterate (Procrustes output).
    pub u: DenseMatrix,
    /// Sparse iterate (soft-threshold output).
    pub w: DenseMatrix,
    pub converged: bool,
    pub iterations: usize,
    pub stats: EngineStats,
}

/// One MADMM subproblem for the block `side`, with the other factor fixed.
/// `rho` is the absolute augmented-Lagrangian weight (see [`ManConfig::rho`]).
///
/// Both blocks of the splitting use the S-weighted augmented term: the smooth
/// block is the closed-form Procrustes update and the sparse block the
/// S-metric ℓ1 prox, so fixed points are stationary for the original problem.
pub fn subproblem_madmm(
    x: &DenseMatrix,
    other: &DenseMatrix,
    current: &DenseMatrix,
    side: Side,
    cfg: &ManConfig,
    rho: f64,
    warm: Option<MadmmWarm>,
) -> Result<(MadmmOutcome, MadmmWarm)> {
    let (s, lambda) = side_params(cfg, side);
    let a = linear_term(x, other, side, cfg);
    let scaled_a = if s.is_identity() { a } else { s.s_inv_sqrt() * a };
    let (mut w, mut z) = match warm {
        Some(MadmmWarm { w, z }) if w.shape() == current.shape() => (w, z),
        _ => (current.clone(), DenseMatrix::zeros(current.nrows(), current.ncols())),
    };
    let tau = lambda / rho;
    let mut stats = EngineStats::default();
    let mut u = current.clone();
    let mut converged = false;
    let mut iterations = 0;
    let mut last_r = f64::INFINITY;
    for it in 0..cfg.max_inner {
        iterations = it + 1;
        stats.svd_calls += 1;
        u = match solve_procrustes_scaled(s, &scaled_a, &(&w - &z), rho) {
            Ok(next) => next,
            Err(SfpcaError::Degenerate(msg)) => {
                // full shrinkage drives the target to rank deficiency
                log::debug!("MADMM subproblem stopped: {msg}");
                break;
            }
            Err(e) => return Err(e),
        };
        let (next, _) = prox_l1_metric(s, &(&u + &z), tau, Some(&w), PROX_TOL, PROX_MAX_ITER);
        w = next;
        let primal = &u - &w;
        z += &primal;
        let r = primal.norm();
        if r <= last_r {
            stats.primal_decreases += 1;
        }
        last_r = r;
        if r <= cfg.inner_tol {
            converged = true;
            break;
        }
    }
    stats.inner_iterations = iterations;
    if !converged {
        stats.inner_failures = 1;
    }
    let out = MadmmOutcome {
        u,
        w: w.clone(),
        converged,
        iterations,
        stats,
    };
    Ok((out, MadmmWarm { w, z }))
}

#[derive(Debug, Clone)]
pub struct ManpgOutcome {
    pub u: DenseMatrix,
    /// Last descent direction norm fell below `inner_tol`.
    pub converged: bool,
    /// Two consecutive line searches gave up.
    pub stalled: bool,
    pub iterations: usize,
    pub last_direction_norm: f64,
    pub stats: EngineStats,
}

/// ManPG subproblem: descent direction, line search, retraction, repeated
/// until `‖D‖_F ≤ inner_tol`. `single_step` gives the A-ManPG update.
pub fn subproblem_manpg(
    x: &DenseMatrix,
    other: &DenseMatrix,
    current: &DenseMatrix,
    side: Side,
    cfg: &ManConfig,
    trust: f64,
    single_step: bool,
) -> Result<ManpgOutcome> {
    let (s, lambda) = side_params(cfg, side);
    let a = linear_term(x, other, side, cfg);
    let eval = |m: &DenseMatrix| -m.dot(&a) + lambda * l1_norm(m);
    let mut point = StiefelPoint::relaxed(current.clone(), s)?;
    let mut stats = EngineStats::default();
    let opts = DescentOptions::default();
    let limit = if single_step { 1 } else { cfg.max_inner };
    let mut converged = false;
    let mut stalled = false;
    let mut stalls = 0;
    let mut iterations = 0;
    let mut last_norm = f64::INFINITY;
    for it in 0..limit {
        iterations = it + 1;
        let sol = solve_descent_direction(
            &DescentProblem {
                grad_term: &a,
                base: &point,
                lambda,
                trust,
            },
            &opts,
        )?;
        stats.descent_solves += 1;
        last_norm = sol.direction.norm();
        if last_norm <= cfg.inner_tol {
            converged = true;
            break;
        }
        let step = armijo_search(&point, &sol.direction, eval);
        stats.retractions += step.retractions;
        if step.alpha == 0.0 {
            stalls += 1;
            if stalls >= 2 {
                stalled = true;
                break;
            }
        } else {
            stalls = 0;
            point = step.next;
        }
    }
    stats.inner_iterations = iterations;
    if !single_step && !converged {
        stats.inner_failures = 1;
    }
    Ok(ManpgOutcome {
        u: point.into_inner(),
        converged,
        stalled,
        iterations,
        last_direction_norm: last_norm,
        stats,
    })
}

/// Fits the rank-`k` manifold problem with the configured engine, starting
/// from the leading singular vectors of `x`.
pub fn fit_manifold(x: &DenseMatrix, cfg: &ManConfig) -> Result<BlockFit> {
    ensure_finite(x, "data matrix")?;
    cfg.validate(x)?;
    if x.iter().all(|&a| a == 0.0) {
        return Err(SfpcaError::Degenerate("data matrix is identically zero".into()));
    }
    let mut stats = EngineStats::default();
    let sigma1 = thin_svd(x)?.d[0];
    let (u0, v0) = init_leading_svd(x, cfg.k, &cfg.s_u, &cfg.s_v)?;
    stats.svd_calls += 2;
    // singular vectors are only feasible when S = I; a zero-step retraction fixes that
    let mut u = cholesky_normalize(&u0, &cfg.s_u)?;
    let mut v = cholesky_normalize(&v0, &cfg.s_v)?;
    stats.retractions += 2;
    let trust = 1.0 / sigma1;
    let rho = cfg.rho * sigma1;

    let mut warm_u: Option<MadmmWarm> = None;
    let mut warm_v: Option<MadmmWarm> = None;
    let mut sparse_u = u.clone();
    let mut sparse_v = v.clone();

    let mut current = -objective_manifold(x, &u, &v, cfg)?;
    let mut trace = vec![current];
    let mut best = (current, u.clone(), v.clone(), sparse_u.clone(), sparse_v.clone());
    let mut converged = false;
    let mut sweeps = 0;

    for sweep in 0..cfg.max_outer {
        sweeps = sweep + 1;
        let (u_prev, v_prev) = (u.clone(), v.clone());
        let previous = current;
        let mut small_steps = true;
        match cfg.engine {
            Engine::Madmm => {
                let (out, wu) = subproblem_madmm(x, &v, &u, Side::U, cfg, rho, warm_u.take())?;
                stats.absorb(&out.stats);
                u = out.u;
                sparse_u = out.w;
                warm_u = Some(wu);
                let (out, wv) = subproblem_madmm(x, &u, &v, Side::V, cfg, rho, warm_v.take())?;
                stats.absorb(&out.stats);
                v = out.u;
                sparse_v = out.w;
                warm_v = Some(wv);
            }
            Engine::Manpg | Engine::Amanpg => {
                let single = cfg.engine == Engine::Amanpg;
                let out = subproblem_manpg(x, &v, &u, Side::U, cfg, trust, single)?;
                stats.absorb(&out.stats);
                small_steps &= out.last_direction_norm <= cfg.inner_tol;
                u = out.u;
                let out = subproblem_manpg(x, &u, &v, Side::V, cfg, trust, single)?;
                stats.absorb(&out.stats);
                small_steps &= out.last_direction_norm <= cfg.inner_tol;
                v = out.u;
                sparse_u = u.clone();
                sparse_v = v.clone();
            }
        }
        current = -objective_manifold(x, &u, &v, cfg)?;
        if !current.is_finite() {
            return Err(SfpcaError::NonFinite("manifold objective".into()));
        }
        trace.push(current);
        if current <= best.0 {
            best = (current, u.clone(), v.clone(), sparse_u.clone(), sparse_v.clone());
        }
        let rel = (current - previous).abs() / current.abs().max(1e-300);
        let change = (&u - &u_prev).norm() + (&v - &v_prev).norm();
        // A-ManPG may also stop once both single steps are negligible.
        let stationary = cfg.engine == Engine::Amanpg && small_steps;
        if (rel <= cfg.outer_tol && change <= cfg.outer_tol) || stationary {
            converged = true;
            break;
        }
    }

    if !converged {
        log::warn!(
            "{} outer loop stopped after {sweeps} sweeps without converging",
            cfg.engine
        );
        let (_, bu, bv, bsu, bsv) = best;
        u = bu;
        v = bv;
        sparse_u = bsu;
        sparse_v = bsv;
    }

    let mut degenerate = false;
    if cfg.engine == Engine::Madmm {
        let (fu, du) = finalize_sparse(&sparse_u, &cfg.s_u)?;
        let (fv, dv) = finalize_sparse(&sparse_v, &cfg.s_v)?;
        stats.retractions += 2;
        u = fu;
        v = fv;
        degenerate = du || dv;
    }
    let (u, v) = canonicalize(&u, &v);
    let xv = x * &v;
    let d = Vector::from_fn(cfg.k, |j, _| u.column(j).dot(&xv.column(j)));
    let final_objective = -objective_manifold(x, &u, &v, cfg)?;
    Ok(BlockFit {
        u,
        v,
        d,
        objective_trace: trace,
        final_objective,
        converged,
        degenerate,
        sweeps,
        engine_stats: stats,
    })
}

/// [`fit_manifold`] with the A-ManPG engine regardless of `cfg.engine`.
pub fn fit_amanpg(x: &DenseMatrix, cfg: &ManConfig) -> Result<BlockFit> {
    let mut c = cfg.clone();
    c.engine = Engine::Amanpg;
    fit_manifold(x, &c)
}

/// Retracts the nonzero columns of a sparse MADMM iterate and restores its
/// exact zeros. Returns the factor and whether any column was entirely zero.
fn finalize_sparse(w: &DenseMatrix, s: &SmoothingOperator) -> Result<(DenseMatrix, bool)> {
    let live: Vec<usize> = (0..w.ncols())
        .filter(|&j| w.column(j).iter().any(|&a| a != 0.0))
        .collect();
    let mut out = DenseMatrix::zeros(w.nrows(), w.ncols());
    if live.is_empty() {
        return Ok((out, true));
    }
    let sub = w.select_columns(&live);
    let retracted = match cholesky_normalize(&sub, s) {
        Ok(r) => r,
        Err(SfpcaError::RankDeficient(msg)) => {
            log::warn!("sparse factor is rank deficient ({msg}); reporting it unretracted");
            sub.clone()
        }
        Err(e) => return Err(e),
    };
    for (c, &j) in live.iter().enumerate() {
        for i in 0..w.nrows() {
            if w[(i, j)] != 0.0 {
                out[(i, j)] = retracted[(i, c)];
            }
        }
    }
    Ok((out, live.len() < w.ncols()))
}

fn cmp_abs_columns(u: &DenseMatrix, a: usize, b: usize) -> Ordering {
    for i in 0..u.nrows() {
        // descending in |U|
        match u[(i, b)].abs().total_cmp(&u[(i, a)].abs()) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// Canonical representative of `(U, V)` under simultaneous column
/// permutation and sign flips. Columns are sorted by `|U|` lexicographically
/// in descending order (stable); then each column pair is negated when the
/// U column has more negative than positive entries, with ties settled by
/// making the first nonzero entry positive.
pub fn canonicalize(u: &DenseMatrix, v: &DenseMatrix) -> (DenseMatrix, DenseMatrix) {
    let k = u.ncols();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| cmp_abs_columns(u, a, b));
    let mut u_out = u.select_columns(&order);
    let mut v_out = v.select_columns(&order);
    for j in 0..k {
        let col = u_out.column(j);
        let pos = col.iter().filter(|&&a| a > 0.0).count();
        let neg = col.iter().filter(|&&a| a < 0.0).count();
        let flip = match neg.cmp(&pos) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => col.iter().find(|&&a| a != 0.0).is_some_and(|&a| a < 0.0),
        };
        if flip {
            u_out.column_mut(j).neg_mut();
            v_out.column_mut(j).neg_mut();
        }
    }
    (u_out, v_out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{build_difference_penalty, build_smoother, max_principal_angle};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spiked(rng: &mut ChaCha8Rng, n: usize, p: usize, sv: &[f64]) -> DenseMatrix {
        let a = DenseMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        let b = DenseMatrix::from_fn(p, p, |_, _| rng.random::<f64>() - 0.5);
        let qa = a.qr().q();
        let qb = b.qr().q();
        let mut x = DenseMatrix::zeros(n, p);
        for (j, &s) in sv.iter().enumerate() {
            x += qa.column(j) * qb.column(j).transpose() * s;
        }
        x
    }

    #[test]
    fn objective_examples() {
        let x = DenseMatrix::from_diagonal(&Vector::from_vec(vec![3.0, 1.0]));
        let cfg = ManConfig::plain(2, 2, 2, Engine::Madmm);
        let i = DenseMatrix::identity(2, 2);
        assert!((objective_manifold(&x, &i, &i, &cfg).unwrap() - 4.0).abs() < 1e-15);
        let mut cfg = cfg;
        cfg.order_weight_epsilon = 0.5;
        // 1.5·3 + 1
        assert!((objective_manifold(&x, &i, &i, &cfg).unwrap() - 5.5).abs() < 1e-15);
        let swap = DenseMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!((objective_manifold(&x, &swap, &swap, &cfg).unwrap() - 4.5).abs() < 1e-15);
    }

    #[test]
    fn engines_reduce_to_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = spiked(&mut rng, 15, 10, &[10.0, 7.0, 5.0, 2.0, 1.0]);
        let svd = thin_svd(&x).unwrap();
        let (u_ref, v_ref) = svd.leading(3);
        for engine in Engine::ALL {
            let mut cfg = ManConfig::plain(15, 10, 3, engine);
            cfg.max_outer = 400;
            let fit = fit_manifold(&x, &cfg).unwrap();
            assert!(fit.converged, "{engine}");
            assert!(max_principal_angle(&fit.u, &u_ref).unwrap() < 1e-4, "{engine}");
            assert!(max_principal_angle(&fit.v, &v_ref).unwrap() < 1e-4, "{engine}");
            assert!(fit.feasibility_residual(&cfg) < 1e-8);
        }
    }

    #[test]
    fn smoothed_sparse_fit_is_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = spiked(&mut rng, 30, 20, &[12.0, 8.0, 3.0]) + DenseMatrix::from_fn(30, 20, |_, _| 0.1 * (rng.random::<f64>() - 0.5));
        let su = Arc::new(build_smoother(&build_difference_penalty(30, 2).unwrap(), 1.0).unwrap());
        let sv = Arc::new(build_smoother(&build_difference_penalty(20, 2).unwrap(), 1.0).unwrap());
        for engine in Engine::ALL {
            let cfg = ManConfig::new(2, 0.05, 0.05, su.clone(), sv.clone(), engine);
            let fit = fit_manifold(&x, &cfg).unwrap();
            assert!(!fit.degenerate, "{engine}");
            assert!(fit.feasibility_residual(&cfg) < 1e-6, "{engine}: {}", fit.feasibility_residual(&cfg));
            assert!(fit.final_objective < fit.objective_trace[0], "{engine}");
        }
    }

    #[test]
    fn amanpg_sweep_costs_two_descent_solves() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = spiked(&mut rng, 12, 9, &[5.0, 3.0, 1.0]);
        let mut cfg = ManConfig::plain(12, 9, 2, Engine::Amanpg);
        cfg.lambda_u = 0.1;
        cfg.lambda_v = 0.1;
        cfg.max_outer = 1;
        let fit = fit_manifold(&x, &cfg).unwrap();
        assert_eq!(fit.engine_stats.descent_solves, 2);
    }

    #[test]
    fn huge_penalty_flags_degenerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = spiked(&mut rng, 8, 6, &[3.0, 2.0]);
        let mut cfg = ManConfig::plain(8, 6, 2, Engine::Madmm);
        cfg.lambda_u = 1e6;
        cfg.lambda_v = 1e6;
        cfg.max_outer = 3;
        cfg.max_inner = 50;
        let fit = fit_manifold(&x, &cfg).unwrap();
        assert!(fit.degenerate);
        assert!(fit.u.iter().all(|&a| a == 0.0));
    }

    #[test]
    fn canonicalize_restores_permutation_and_signs() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = DenseMatrix::from_fn(6, 3, |_, _| rng.random::<f64>() - 0.5);
        let v = DenseMatrix::from_fn(5, 3, |_, _| rng.random::<f64>() - 0.5);
        let (cu, cv) = canonicalize(&u, &v);
        let (cu2, cv2) = canonicalize(&cu, &cv);
        assert_eq!(cu, cu2);
        assert_eq!(cv, cv2);
        let perm = [2, 0, 1];
        let mut pu = cu.select_columns(&perm);
        let mut pv = cv.select_columns(&perm);
        pu.column_mut(1).neg_mut();
        pv.column_mut(1).neg_mut();
        let (ru, rv) = canonicalize(&pu, &pv);
        assert_eq!(ru, cu);
        assert_eq!(rv, cv);
    }

    #[test]
    fn canonical_sign_tie_break() {
        let u = DenseMatrix::from_column_slice(2, 1, &[-1.0, 1.0]);
        let v = DenseMatrix::from_column_slice(1, 1, &[1.0]);
        let (cu, cv) = canonicalize(&u, &v);
        assert_eq!(cu.as_slice(), &[1.0, -1.0]);
        assert_eq!(cv[0], -1.0);
    }
}
