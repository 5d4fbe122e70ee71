use crate::error::{Result, SfpcaError};
use crate::linalg::{ensure_same_shape, thin_svd, DenseMatrix, SmoothingOperator};

/// `argmin_{XᵀSX = I} −Tr(Xᵀa) + (ρ/2)‖X − b‖²_S`.
#[derive(Debug, Clone)]
pub struct ProcrustesProblem<'a> {
    pub s: &'a SmoothingOperator,
    pub a: DenseMatrix,
    pub b: DenseMatrix,
    pub rho: f64,
}

/// Objective value of the generalized unbalanced Procrustes problem at `x`.
pub fn procrustes_objective(p: &ProcrustesProblem<'_>, x: &DenseMatrix) -> f64 {
    let diff = x - &p.b;
    let quad = diff.dot(&p.s.apply(&diff));
    -x.dot(&p.a) + 0.5 * p.rho * quad
}

/// Closed form `S^{-1/2}·A·Bᵀ` where `A·Δ·Bᵀ` is the thin SVD of
/// `S^{-1/2}a + ρS^{1/2}b`.
pub fn solve_procrustes(p: &ProcrustesProblem<'_>) -> Result<DenseMatrix> {
    ensure_same_shape(&p.a, &p.b, "Procrustes a/b")?;
    if p.a.nrows() != p.s.dim() {
        return Err(SfpcaError::Dimension(format!(
            "Procrustes blocks have {} rows, smoother has dim {}",
            p.a.nrows(),
            p.s.dim()
        )));
    }
    if !(p.rho > 0.0) {
        return Err(SfpcaError::Config(format!("ρ must be positive, got {}", p.rho)));
    }
    let scaled_a = if p.s.is_identity() {
        p.a.clone()
    } else {
        p.s.s_inv_sqrt() * &p.a
    };
    solve_procrustes_scaled(p.s, &scaled_a, &p.b, p.rho)
}

/// Same as [`solve_procrustes`] with `S^{-1/2}a` supplied precomputed; MADMM
/// reuses it across all inner iterations of a subproblem.
pub fn solve_procrustes_scaled(
    s: &SmoothingOperator,
    scaled_a: &DenseMatrix,
    b: &DenseMatrix,
    rho: f64,
) -> Result<DenseMatrix> {
    let target = if s.is_identity() {
        scaled_a + b * rho
    } else {
        scaled_a + (s.s_sqrt() * b) * rho
    };
    let svd = thin_svd(&target)?;
    let k = target.ncols();
    let smax = svd.d[0];
    let smin = svd.d[k - 1];
    if !(smin > smax * 1e-13 * target.nrows() as f64) {
        return Err(SfpcaError::Degenerate(format!(
            "Procrustes target is rank deficient (σ_min = {smin:.3e}, σ_max = {smax:.3e})"
        )));
    }
    let polar = &svd.u * svd.v.transpose();
    Ok(if s.is_identity() {
        polar
    } else {
        s.s_inv_sqrt() * polar
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{build_difference_penalty, build_smoother, DifferencePenalty};
    use crate::manifold::StiefelPoint;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DenseMatrix {
        DenseMatrix::from_fn(r, c, |_, _| rng.random::<f64>() * 2.0 - 1.0)
    }

    #[test]
    fn orthonormal_a_small_rho() {
        let s = SmoothingOperator::identity(3);
        let a = DenseMatrix::from_row_slice(3, 2, &[0.6, 0.0, 0.8, 0.0, 0.0, 1.0]);
        let p = ProcrustesProblem {
            s: &s,
            a: a.clone(),
            b: DenseMatrix::zeros(3, 2),
            rho: 1e-9,
        };
        let x = solve_procrustes(&p).unwrap();
        assert!((x - a).amax() < 1e-12);
    }

    #[test]
    fn hand_derived_scaled_identity() {
        // S = 4I: S^{-1/2}a = e₁, SVD gives A = e₁, B = 1, X̂ = e₁/2.
        let pen = DifferencePenalty::from_matrix(DenseMatrix::identity(2, 2)).unwrap();
        let s = build_smoother(&pen, 3.0).unwrap();
        let p = ProcrustesProblem {
            s: &s,
            a: DenseMatrix::from_column_slice(2, 1, &[2.0, 0.0]),
            b: DenseMatrix::zeros(2, 1),
            rho: 1.0,
        };
        let x = solve_procrustes(&p).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-12 && x[1].abs() < 1e-12);
        assert!((s.gram(&x)[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn beats_random_feasible_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pen = build_difference_penalty(12, 2).unwrap();
        let s = build_smoother(&pen, 2.0).unwrap();
        for _ in 0..5 {
            let p = ProcrustesProblem {
                s: &s,
                a: random_matrix(&mut rng, 12, 3),
                b: random_matrix(&mut rng, 12, 3),
                rho: 0.7,
            };
            let x = solve_procrustes(&p).unwrap();
            assert!(s.feasibility_residual(&x) <= 1e-10);
            let best = procrustes_objective(&p, &x);
            for _ in 0..200 {
                let pt = StiefelPoint::from_ambient(&random_matrix(&mut rng, 12, 3), &s).unwrap();
                assert!(best <= procrustes_objective(&p, pt.u()) + 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_target_errors() {
        let s = SmoothingOperator::identity(3);
        let p = ProcrustesProblem {
            s: &s,
            a: DenseMatrix::zeros(3, 2),
            b: DenseMatrix::zeros(3, 2),
            rho: 1.0,
        };
        assert!(matches!(solve_procrustes(&p), Err(SfpcaError::Degenerate(_))));
    }
}
