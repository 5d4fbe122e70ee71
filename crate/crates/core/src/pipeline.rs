//! Greedy multi-component SFPCA: a rank-one fit on the current matrix,
//! deflation by the fitted pair, repeat. Each component may be BIC-tuned.

use serde::Serialize;

use crate::deflation::{DeflationScheme, DeflationState};
use crate::error::{Result, SfpcaError};
use crate::linalg::{DenseMatrix, Vector};
use crate::rank1::{fit_rank1, Rank1Config};
use crate::simbench::tune::{bic_tune, SmootherCache, TuneGrid, TunedParams};

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub k: usize,
    /// Template for every component; tuning replaces λ and the smoothers.
    pub rank1: Rank1Config,
    pub scheme: DeflationScheme,
    /// Per-component BIC tuning over this grid.
    pub tune: Option<TuneGrid>,
    /// Difference-penalty order used to build smoothers while tuning.
    pub penalty_order: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComponentSummary {
    pub index: usize,
    pub d: f64,
    pub converged: bool,
    pub iterations: usize,
    pub inner_iterations: usize,
    pub zero: bool,
    pub final_objective: f64,
    pub tuned: Option<TunedParams>,
}

#[derive(Debug, Clone)]
pub struct PipelineFit {
    /// n×k, one fitted pair per column (zero columns after a collapse).
    pub u: DenseMatrix,
    pub v: DenseMatrix,
    pub d: Vector,
    pub components: Vec<ComponentSummary>,
    pub state: DeflationState,
    pub converged: bool,
}

impl PipelineFit {
    pub fn total_inner_iterations(&self) -> usize {
        self.components.iter().map(|c| c.inner_iterations).sum()
    }
}

pub fn fit_pipeline(x: &DenseMatrix, cfg: &PipelineConfig) -> Result<PipelineFit> {
    let (n, p) = x.shape();
    if cfg.k < 1 || cfg.k > n.min(p) {
        return Err(SfpcaError::Config(format!("rank {} invalid for a {n}×{p} matrix", cfg.k)));
    }
    let mut state = DeflationState::new(x.clone())?;
    let mut u = DenseMatrix::zeros(n, cfg.k);
    let mut v = DenseMatrix::zeros(p, cfg.k);
    let mut d = Vector::zeros(cfg.k);
    let mut components = Vec::with_capacity(cfg.k);
    let mut cache = SmootherCache::new(cfg.penalty_order);
    for j in 0..cfg.k {
        let current = state.x_current().clone();
        let (fit, tuned) = match &cfg.tune {
            Some(grid) => {
                let t = bic_tune(&current, grid, &cfg.rank1, &mut cache)?;
                (t.fit, Some(t.params))
            }
            None => (fit_rank1(&current, &cfg.rank1)?, None),
        };
        let zero = fit.is_zero();
        components.push(ComponentSummary {
            index: j + 1,
            d: fit.d,
            converged: fit.converged,
            iterations: fit.iterations,
            inner_iterations: fit.inner_iterations,
            zero,
            final_objective: fit.objective_trace.last().copied().unwrap_or(0.0),
            tuned,
        });
        if zero {
            // nothing left to deflate by; later components stay zero
            log::warn!("component {} collapsed to zero; stopping the pipeline", j + 1);
            break;
        }
        u.set_column(j, &fit.u);
        v.set_column(j, &fit.v);
        d[j] = fit.d;
        state = state.deflate_vector(&fit.u, &fit.v, cfg.scheme)?;
    }
    let converged = components.iter().all(|c| c.converged);
    Ok(PipelineFit {
        u,
        v,
        d,
        components,
        state,
        converged,
    })
}
