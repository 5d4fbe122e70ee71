//! Generalized Stiefel manifold `{U ∈ ℝ^{n×k} : UᵀSU = I_k}`.
//!
//! Points carry a borrowed [`SmoothingOperator`]; steps taken in the ambient
//! space are pulled back with the Cholesky retraction
//! `Retr_U(Δ) = (U + Δ)·L^{-T}`, `L·Lᵀ = (U + Δ)ᵀS(U + Δ)`.

use nalgebra::Cholesky;

use crate::error::{Result, SfpcaError};
use crate::linalg::{thin_svd, DenseMatrix, SmoothingOperator};

/// Feasibility tolerance on `‖UᵀSU − I‖_F` for strictly constructed points.
pub const FEASIBILITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct StiefelPoint<'s> {
    u: DenseMatrix,
    smoother: &'s SmoothingOperator,
}

impl<'s> StiefelPoint<'s> {
    /// Strict construction: fails unless `UᵀSU = I` within [`FEASIBILITY_TOL`].
    pub fn new(u: DenseMatrix, smoother: &'s SmoothingOperator) -> Result<Self> {
        check_dims(&u, smoother)?;
        let residual = smoother.feasibility_residual(&u);
        if !(residual <= FEASIBILITY_TOL) {
            return Err(SfpcaError::Infeasible {
                residual,
                tolerance: FEASIBILITY_TOL,
            });
        }
        Ok(Self { u, smoother })
    }

    /// Construction used inside solver loops: an infeasible iterate is only
    /// logged.
    pub fn relaxed(u: DenseMatrix, smoother: &'s SmoothingOperator) -> Result<Self> {
        check_dims(&u, smoother)?;
        let residual = smoother.feasibility_residual(&u);
        if !(residual <= FEASIBILITY_TOL) {
            log::warn!("iterate off the manifold: ‖UᵀSU − I‖_F = {residual:.3e}");
        }
        Ok(Self { u, smoother })
    }

    /// Retracts an arbitrary full-rank matrix onto the manifold.
    pub fn from_ambient(y: &DenseMatrix, smoother: &'s SmoothingOperator) -> Result<Self> {
        check_dims(y, smoother)?;
        Ok(Self {
            u: cholesky_normalize(y, smoother)?,
            smoother,
        })
    }

    pub fn u(&self) -> &DenseMatrix {
        &self.u
    }

    pub fn into_inner(self) -> DenseMatrix {
        self.u
    }

    pub fn smoother(&self) -> &'s SmoothingOperator {
        self.smoother
    }

    pub fn nrows(&self) -> usize {
        self.u.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.u.ncols()
    }

    pub fn feasibility_residual(&self) -> f64 {
        self.smoother.feasibility_residual(&self.u)
    }

    /// Cholesky retraction of `base + step`.
    ///
    /// Fails with [`SfpcaError::RankDeficient`] when `YᵀSY` is not positive
    /// definite; callers shrink the step and retry.
    pub fn retract(&self, step: &DenseMatrix) -> Result<StiefelPoint<'s>> {
        if step.shape() != self.u.shape() {
            return Err(SfpcaError::Dimension(format!(
                "step shape {:?} does not match point shape {:?}",
                step.shape(),
                self.u.shape()
            )));
        }
        let y = &self.u + step;
        Ok(StiefelPoint {
            u: cholesky_normalize(&y, self.smoother)?,
            smoother: self.smoother,
        })
    }

    /// `‖DᵀSU + UᵀSD‖_F`; zero exactly when `D` lies in the tangent space.
    pub fn tangency_residual(&self, d: &DenseMatrix) -> Result<f64> {
        if d.shape() != self.u.shape() {
            return Err(SfpcaError::Dimension(format!(
                "direction shape {:?} does not match point shape {:?}",
                d.shape(),
                self.u.shape()
            )));
        }
        let su = self.smoother.apply(&self.u);
        let m = d.transpose() * &su;
        Ok((&m + m.transpose()).norm())
    }
}

fn check_dims(u: &DenseMatrix, smoother: &SmoothingOperator) -> Result<()> {
    if u.nrows() != smoother.dim() {
        return Err(SfpcaError::Dimension(format!(
            "point has {} rows but smoother has dim {}",
            u.nrows(),
            smoother.dim()
        )));
    }
    if u.ncols() == 0 || u.ncols() > u.nrows() {
        return Err(SfpcaError::Dimension(format!(
            "manifold order {} invalid for ambient dimension {}",
            u.ncols(),
            u.nrows()
        )));
    }
    Ok(())
}

/// `Y·L^{-T}` with `L·Lᵀ = YᵀSY`.
pub(crate) fn cholesky_normalize(y: &DenseMatrix, smoother: &SmoothingOperator) -> Result<DenseMatrix> {
    let gram = smoother.gram(y);
    if gram.iter().any(|x| !x.is_finite()) {
        return Err(SfpcaError::NonFinite("retraction Gram matrix".into()));
    }
    let chol = Cholesky::new(gram).ok_or_else(|| {
        SfpcaError::RankDeficient("YᵀSY is not positive definite; shrink the step".into())
    })?;
    let l = chol.l();
    let zt = l
        .solve_lower_triangular(&y.transpose())
        .ok_or_else(|| SfpcaError::RankDeficient("singular Cholesky factor in retraction".into()))?;
    Ok(zt.transpose())
}

/// Leading `k` left/right singular vectors of `x`.
///
/// The smoothers only fix dimensions: the vectors are *not* retracted onto the
/// generalized manifolds, so the pair is infeasible whenever `α > 0`.
pub fn init_leading_svd(
    x: &DenseMatrix,
    k: usize,
    s_u: &SmoothingOperator,
    s_v: &SmoothingOperator,
) -> Result<(DenseMatrix, DenseMatrix)> {
    let (n, p) = x.shape();
    if k == 0 || k > n.min(p) {
        return Err(SfpcaError::Dimension(format!(
            "rank {k} invalid for a {n}×{p} matrix"
        )));
    }
    if s_u.dim() != n || s_v.dim() != p {
        return Err(SfpcaError::Dimension(format!(
            "smoother dims ({}, {}) do not match data {n}×{p}",
            s_u.dim(),
            s_v.dim()
        )));
    }
    Ok(thin_svd(x)?.leading(k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{build_difference_penalty, build_smoother};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DenseMatrix {
        DenseMatrix::from_fn(r, c, |_, _| rng.random::<f64>() * 2.0 - 1.0)
    }

    #[test]
    fn zero_step_is_identity() {
        let s = SmoothingOperator::identity(4);
        let u = DenseMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let base = StiefelPoint::new(u.clone(), &s).unwrap();
        let out = base.retract(&DenseMatrix::zeros(4, 2)).unwrap();
        assert!((out.u() - &u).amax() < 1e-12);
    }

    #[test]
    fn orthogonal_step_normalizes() {
        let s = SmoothingOperator::identity(2);
        let base = StiefelPoint::new(DenseMatrix::from_column_slice(2, 1, &[1.0, 0.0]), &s).unwrap();
        let out = base
            .retract(&DenseMatrix::from_column_slice(2, 1, &[0.0, 1.0]))
            .unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert!((out.u()[0] - h).abs() < 1e-15 && (out.u()[1] - h).abs() < 1e-15);
    }

    #[test]
    fn random_steps_stay_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pen = build_difference_penalty(30, 2).unwrap();
        let s = build_smoother(&pen, 3.0).unwrap();
        for _ in 0..20 {
            let base = StiefelPoint::from_ambient(&random_matrix(&mut rng, 30, 3), &s).unwrap();
            assert!(base.feasibility_residual() <= 1e-10);
            let step = random_matrix(&mut rng, 30, 3) * 0.1;
            let out = base.retract(&step).unwrap();
            assert!(out.feasibility_residual() <= 1e-10);
        }
    }

    #[test]
    fn retraction_is_first_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pen = build_difference_penalty(20, 2).unwrap();
        let s = build_smoother(&pen, 1.0).unwrap();
        let base = StiefelPoint::from_ambient(&random_matrix(&mut rng, 20, 2), &s).unwrap();
        // tangent direction: project a random matrix
        let raw = random_matrix(&mut rng, 20, 2);
        let su = s.apply(base.u());
        let m = su.transpose() * &su;
        let c = su.transpose() * &raw;
        let sym = (&c + c.transpose()) * 0.5;
        let lam = crate::subsolvers::solve_symmetric_sylvester(&m, &(sym * 2.0)).unwrap();
        let d = &raw - &su * lam;
        assert!(base.tangency_residual(&d).unwrap() < 1e-10);
        let d = &d / d.norm();
        let errs: Vec<f64> = [1e-2, 1e-3]
            .iter()
            .map(|&h| {
                let step = &d * h;
                (base.retract(&step).unwrap().u() - (base.u() + &step)).norm()
            })
            .collect();
        let c1 = errs[0] / 1e-4;
        let c2 = errs[1] / 1e-6;
        assert!(c1 < 50.0 && c2 < 50.0, "{errs:?}");
        assert!((c1 / c2 - 1.0).abs() < 0.2, "error not quadratic in h: {errs:?}");
    }

    #[test]
    fn rank_deficient_step_errors() {
        let s = SmoothingOperator::identity(2);
        let base = StiefelPoint::new(DenseMatrix::from_column_slice(2, 1, &[1.0, 0.0]), &s).unwrap();
        let err = base
            .retract(&DenseMatrix::from_column_slice(2, 1, &[-1.0, 0.0]))
            .unwrap_err();
        assert!(matches!(err, SfpcaError::RankDeficient(_)));
    }

    #[test]
    fn tangency_examples() {
        let s = SmoothingOperator::identity(2);
        let base = StiefelPoint::new(DenseMatrix::from_column_slice(2, 1, &[1.0, 0.0]), &s).unwrap();
        assert_eq!(base.tangency_residual(&DenseMatrix::zeros(2, 1)).unwrap(), 0.0);
        let e2 = DenseMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
        assert_eq!(base.tangency_residual(&e2).unwrap(), 0.0);
        let e1 = DenseMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        assert_eq!(base.tangency_residual(&e1).unwrap(), 2.0);
        assert!(base.tangency_residual(&DenseMatrix::zeros(3, 1)).is_err());
    }

    #[test]
    fn strict_construction_rejects_infeasible() {
        let s = SmoothingOperator::identity(2);
        let u = DenseMatrix::from_column_slice(2, 1, &[2.0, 0.0]);
        assert!(matches!(
            StiefelPoint::new(u.clone(), &s),
            Err(SfpcaError::Infeasible { .. })
        ));
        assert!(StiefelPoint::relaxed(u, &s).is_ok());
    }

    #[test]
    fn init_svd_diag() {
        let x = DenseMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 1.0]);
        let s = SmoothingOperator::identity(2);
        let (u, v) = init_leading_svd(&x, 1, &s, &s).unwrap();
        assert!((u[0].abs() - 1.0).abs() < 1e-14 && u[1].abs() < 1e-14);
        assert!((v[0].abs() - 1.0).abs() < 1e-14 && v[1].abs() < 1e-14);
        let (u, v) = init_leading_svd(&x, 2, &s, &s).unwrap();
        assert_eq!(u.ncols(), 2);
        assert_eq!(v.ncols(), 2);
        assert!(init_leading_svd(&x, 3, &s, &s).is_err());
    }
}
