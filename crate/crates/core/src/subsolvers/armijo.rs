use crate::error::SfpcaError;
use crate::linalg::DenseMatrix;
use crate::manifold::StiefelPoint;

pub const ARMIJO_SHRINK: f64 = 0.8;
/// `0.8^60 ≈ 1.5e-6`.
pub const ARMIJO_MAX_SHRINKS: usize = 60;

#[derive(Debug, Clone)]
pub struct ArmijoOutcome<'s> {
    /// Accepted step size; 0 when the search gave up.
    pub alpha: f64,
    pub next: StiefelPoint<'s>,
    pub objective: f64,
    pub retractions: usize,
}

/// Backtracking on the nonsmooth objective `eval`: start at α = 1 and shrink
/// by 0.8 while `eval(Retr(α·d)) > eval(base)` (ties accept). After 60
/// shrinks the base point is returned with α = 0. A retraction that fails on
/// rank deficiency counts as a rejection.
pub fn armijo_search<'s, F>(base: &StiefelPoint<'s>, d: &DenseMatrix, eval: F) -> ArmijoOutcome<'s>
where
    F: Fn(&DenseMatrix) -> f64,
{
    let base_obj = eval(base.u());
    let mut alpha = 1.0;
    let mut retractions = 0;
    for _ in 0..=ARMIJO_MAX_SHRINKS {
        retractions += 1;
        match base.retract(&(d * alpha)) {
            Ok(candidate) => {
                let obj = eval(candidate.u());
                if !(obj > base_obj) && obj.is_finite() {
                    return ArmijoOutcome {
                        alpha,
                        next: candidate,
                        objective: obj,
                        retractions,
                    };
                }
            }
            Err(SfpcaError::RankDeficient(_)) => {}
            Err(e) => {
                log::warn!("retraction failed during line search: {e}");
            }
        }
        alpha *= ARMIJO_SHRINK;
    }
    ArmijoOutcome {
        alpha: 0.0,
        next: base.clone(),
        objective: base_obj,
        retractions,
    }
}
