//! Inner solvers of the manifold engines: the closed-form generalized
//! unbalanced Procrustes update (MADMM smooth block), the tangency-constrained
//! descent-direction problem (ManPG family) and its Armijo line search.

mod armijo;
mod descent;
mod metric_prox;
mod procrustes;

pub use armijo::{armijo_search, ArmijoOutcome, ARMIJO_MAX_SHRINKS, ARMIJO_SHRINK};
pub use descent::{
    descent_objective, project_tangent, solve_descent_direction, DescentOptions, DescentProblem,
    DescentSolution,
};
pub use metric_prox::prox_l1_metric;
pub use procrustes::{procrustes_objective, solve_procrustes, solve_procrustes_scaled, ProcrustesProblem};

use nalgebra::SymmetricEigen;

use crate::error::{Result, SfpcaError};
use crate::linalg::DenseMatrix;

/// Solves `MΛ + ΛM = C` for symmetric positive definite `M` (k×k).
pub fn solve_symmetric_sylvester(m: &DenseMatrix, c: &DenseMatrix) -> Result<DenseMatrix> {
    if !m.is_square() || m.shape() != c.shape() {
        return Err(SfpcaError::Dimension(format!(
            "Sylvester system shapes {:?} and {:?}",
            m.shape(),
            c.shape()
        )));
    }
    let eig = SymmetricEigen::new(m.clone());
    let q = &eig.eigenvectors;
    let theta = &eig.eigenvalues;
    if theta.min() <= 0.0 {
        return Err(SfpcaError::RankDeficient(format!(
            "Sylvester operator not positive definite (min eigenvalue {:.3e})",
            theta.min()
        )));
    }
    let mut ct = q.transpose() * c * q;
    let k = ct.nrows();
    for i in 0..k {
        for j in 0..k {
            ct[(i, j)] /= theta[i] + theta[j];
        }
    }
    Ok(q * ct * q.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sylvester_solves_system() {
        let m = DenseMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let c = DenseMatrix::from_row_slice(2, 2, &[1.0, -3.0, -3.0, 4.0]);
        let lam = solve_symmetric_sylvester(&m, &c).unwrap();
        assert!((&m * &lam + &lam * &m - &c).amax() < 1e-13);
        assert!((&lam - lam.transpose()).amax() < 1e-13);
    }
}
