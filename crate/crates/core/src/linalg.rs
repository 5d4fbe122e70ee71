//! Dense kernels shared by every solver: roughness penalties, smoothing
//! operators `S = I + αΩ` with cached factorizations, the ℓ1 proximal map
//! and a thin SVD wrapper.
//!
//! All matrices are dense `f64` [`DenseMatrix`] values. Operators are built
//! once and never mutated, so they can be shared freely between fits.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen, SVD};

use crate::error::{Result, SfpcaError};

pub type DenseMatrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative symmetry tolerance for penalty matrices.
const SYMMETRY_TOL: f64 = 1e-12;
/// Smallest eigenvalue accepted as "positive semi-definite".
const PSD_TOL: f64 = -1e-10;
const SVD_MAX_ITER: usize = 10_000;

/// Fails with [`SfpcaError::NonFinite`] if any entry is NaN or infinite.
pub fn ensure_finite(m: &DenseMatrix, what: &str) -> Result<()> {
    match m.iter().position(|x| !x.is_finite()) {
        None => Ok(()),
        Some(idx) => Err(SfpcaError::NonFinite(format!(
            "{what}: entry ({}, {}) is {}",
            idx % m.nrows(),
            idx / m.nrows(),
            m[idx]
        ))),
    }
}

pub(crate) fn ensure_same_shape(a: &DenseMatrix, b: &DenseMatrix, what: &str) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(SfpcaError::Dimension(format!(
            "{what}: shape {:?} does not match {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

/// Sum of absolute entries.
pub fn l1_norm(m: &DenseMatrix) -> f64 {
    m.iter().map(|x| x.abs()).sum()
}

/// Symmetric roughness penalty `Ω = DᵀD` built from a finite-difference operator.
#[derive(Debug, Clone)]
pub struct DifferencePenalty {
    dim: usize,
    order: usize,
    omega: DenseMatrix,
}

impl DifferencePenalty {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn omega(&self) -> &DenseMatrix {
        &self.omega
    }

    /// Wraps an arbitrary symmetric PSD matrix as a penalty.
    ///
    /// `order` is recorded as 0. Symmetry and semi-definiteness are checked.
    pub fn from_matrix(omega: DenseMatrix) -> Result<Self> {
        if !omega.is_square() {
            return Err(SfpcaError::Dimension(format!(
                "penalty must be square, got {:?}",
                omega.shape()
            )));
        }
        ensure_finite(&omega, "penalty")?;
        let scale = omega.amax().max(1.0);
        let asym = (&omega - omega.transpose()).amax();
        if asym > SYMMETRY_TOL * scale {
            return Err(SfpcaError::Numeric(format!(
                "penalty is not symmetric (max asymmetry {asym:.3e})"
            )));
        }
        let min_eig = SymmetricEigen::new(omega.clone()).eigenvalues.min();
        if min_eig < PSD_TOL * scale {
            return Err(SfpcaError::Numeric(format!(
                "penalty is not positive semi-definite (min eigenvalue {min_eig:.3e})"
            )));
        }
        Ok(Self {
            dim: omega.nrows(),
            order: 0,
            omega,
        })
    }
}

/// Interior-only finite-difference operator of the given order, shape
/// `(dim − order) × dim`. Row `i` holds the signed binomial coefficients
/// starting at column `i`.
pub fn difference_operator(dim: usize, order: usize) -> Result<DenseMatrix> {
    if dim < order + 1 {
        return Err(SfpcaError::Dimension(format!(
            "difference operator of order {order} needs dim ≥ {}, got {dim}",
            order + 1
        )));
    }
    let mut coeffs = vec![0.0; order + 1];
    let mut binom = 1.0_f64;
    for (j, c) in coeffs.iter_mut().enumerate() {
        let sign = if (order - j) % 2 == 0 { 1.0 } else { -1.0 };
        *c = sign * binom;
        binom = binom * (order - j) as f64 / (j + 1) as f64;
    }
    let rows = dim - order;
    let mut d = DenseMatrix::zeros(rows, dim);
    for i in 0..rows {
        for (j, &c) in coeffs.iter().enumerate() {
            d[(i, i + j)] = c;
        }
    }
    Ok(d)
}

/// `Ω = DᵀD` for the interior difference operator of order 2 or 4.
pub fn build_difference_penalty(dim: usize, order: usize) -> Result<DifferencePenalty> {
    if order != 2 && order != 4 {
        return Err(SfpcaError::Config(format!(
            "penalty order must be 2 or 4, got {order}"
        )));
    }
    let d = difference_operator(dim, order)?;
    Ok(DifferencePenalty {
        dim,
        order,
        omega: d.transpose() * d,
    })
}

/// Smoothing operator `S = I + αΩ` together with the factors the solvers need.
#[derive(Debug, Clone)]
pub struct SmoothingOperator {
    dim: usize,
    alpha: f64,
    s: DenseMatrix,
    chol_s: DenseMatrix,
    s_sqrt: DenseMatrix,
    s_inv_sqrt: DenseMatrix,
    s_inv: DenseMatrix,
    eig_min: f64,
    eig_max: f64,
}

impl SmoothingOperator {
    /// The unit smoother `S = I`.
    pub fn identity(dim: usize) -> Self {
        let eye = DenseMatrix::identity(dim, dim);
        Self {
            dim,
            alpha: 0.0,
            s: eye.clone(),
            chol_s: eye.clone(),
            s_sqrt: eye.clone(),
            s_inv_sqrt: eye.clone(),
            s_inv: eye,
            eig_min: 1.0,
            eig_max: 1.0,
        }
    }

    /// Builds a smoother from an arbitrary symmetric positive definite matrix.
    pub fn from_spd(s: DenseMatrix) -> Result<Self> {
        Self::assemble(s, f64::NAN)
    }

    fn assemble(s: DenseMatrix, alpha: f64) -> Result<Self> {
        ensure_finite(&s, "smoothing matrix")?;
        let dim = s.nrows();
        let chol = Cholesky::new(s.clone()).ok_or_else(|| {
            SfpcaError::Numeric("Cholesky factorization of S failed; S is not positive definite".into())
        })?;
        let eig = SymmetricEigen::new(s.clone());
        let eig_min = eig.eigenvalues.min();
        let eig_max = eig.eigenvalues.max();
        if eig_min <= 0.0 {
            return Err(SfpcaError::Numeric(format!(
                "S has non-positive eigenvalue {eig_min:.3e}"
            )));
        }
        let q = &eig.eigenvectors;
        let spectral = |f: fn(f64) -> f64| {
            let mut scaled = q.clone();
            for (j, mut col) in scaled.column_iter_mut().enumerate() {
                col *= f(eig.eigenvalues[j]);
            }
            let mut out = &scaled * q.transpose();
            symmetrize(&mut out);
            out
        };
        let s_sqrt = spectral(f64::sqrt);
        let s_inv_sqrt = spectral(|x| 1.0 / x.sqrt());
        let s_inv = spectral(|x| 1.0 / x);
        Ok(Self {
            dim,
            alpha,
            chol_s: chol.l(),
            s,
            s_sqrt,
            s_inv_sqrt,
            s_inv,
            eig_min,
            eig_max,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Smoothing strength; NaN when built directly from a matrix.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn s(&self) -> &DenseMatrix {
        &self.s
    }

    /// Lower-triangular `L` with `L·Lᵀ = S`.
    pub fn chol_s(&self) -> &DenseMatrix {
        &self.chol_s
    }

    pub fn s_sqrt(&self) -> &DenseMatrix {
        &self.s_sqrt
    }

    pub fn s_inv_sqrt(&self) -> &DenseMatrix {
        &self.s_inv_sqrt
    }

    pub fn s_inv(&self) -> &DenseMatrix {
        &self.s_inv
    }

    pub fn eig_min(&self) -> f64 {
        self.eig_min
    }

    pub fn eig_max(&self) -> f64 {
        self.eig_max
    }

    pub fn is_identity(&self) -> bool {
        self.alpha == 0.0
    }

    /// `S·m`, skipping the product when `S = I`.
    pub fn apply(&self, m: &DenseMatrix) -> DenseMatrix {
        if self.is_identity() {
            m.clone()
        } else {
            &self.s * m
        }
    }

    /// `mᵀ S m`.
    pub fn gram(&self, m: &DenseMatrix) -> DenseMatrix {
        let sm = self.apply(m);
        let mut g = m.transpose() * sm;
        symmetrize(&mut g);
        g
    }

    /// `‖mᵀSm − I‖_F`.
    pub fn feasibility_residual(&self, m: &DenseMatrix) -> f64 {
        let k = m.ncols();
        (self.gram(m) - DenseMatrix::identity(k, k)).norm()
    }
}

/// Builds `S = I + αΩ` and caches its Cholesky factor and spectral roots.
pub fn build_smoother(omega: &DifferencePenalty, alpha: f64) -> Result<SmoothingOperator> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(SfpcaError::Config(format!(
            "smoothing strength must be finite and ≥ 0, got {alpha}"
        )));
    }
    if alpha == 0.0 {
        return Ok(SmoothingOperator::identity(omega.dim));
    }
    let s = DenseMatrix::identity(omega.dim, omega.dim) + omega.omega() * alpha;
    SmoothingOperator::assemble(s, alpha)
}

/// Penalty family; only the elementwise ℓ1 norm ships.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyKind {
    L1,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PenaltySpec {
    pub kind: PenaltyKind,
    pub lambda: f64,
}

impl PenaltySpec {
    pub fn l1(lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(SfpcaError::Config(format!(
                "penalty strength must be finite and ≥ 0, got {lambda}"
            )));
        }
        Ok(Self {
            kind: PenaltyKind::L1,
            lambda,
        })
    }

    /// `λ·P(m)`.
    pub fn value(&self, m: &DenseMatrix) -> f64 {
        match self.kind {
            PenaltyKind::L1 => self.lambda * l1_norm(m),
        }
    }

    /// Proximal map of `t·λ·P`.
    pub fn prox(&self, m: &DenseMatrix, t: f64) -> DenseMatrix {
        match self.kind {
            PenaltyKind::L1 => soft_threshold(m, t * self.lambda),
        }
    }
}

#[inline]
pub fn soft_threshold_scalar(z: f64, tau: f64) -> f64 {
    let mag = z.abs() - tau;
    if mag > 0.0 {
        mag.copysign(z)
    } else {
        0.0
    }
}

/// Entrywise `sign(z)·max(|z| − τ, 0)`; inside the dead zone the output is exactly 0.
pub fn soft_threshold(z: &DenseMatrix, tau: f64) -> DenseMatrix {
    debug_assert!(tau >= 0.0);
    z.map(|x| soft_threshold_scalar(x, tau))
}

pub fn soft_threshold_mut(z: &mut DenseMatrix, tau: f64) {
    z.apply(|x| *x = soft_threshold_scalar(*x, tau));
}

/// Thin singular value decomposition `m = U·diag(d)·Vᵀ`, `d` nonincreasing.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: DenseMatrix,
    pub d: Vector,
    pub v: DenseMatrix,
}

impl ThinSvd {
    pub fn rank(&self) -> usize {
        self.d.len()
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        let mut ud = self.u.clone();
        for (j, mut col) in ud.column_iter_mut().enumerate() {
            col *= self.d[j];
        }
        ud * self.v.transpose()
    }

    /// Leading `k` left and right singular vectors.
    pub fn leading(&self, k: usize) -> (DenseMatrix, DenseMatrix) {
        (self.u.columns(0, k).into_owned(), self.v.columns(0, k).into_owned())
    }
}

pub fn thin_svd(m: &DenseMatrix) -> Result<ThinSvd> {
    ensure_finite(m, "SVD input")?;
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Err(SfpcaError::Dimension("SVD of an empty matrix".into()));
    }
    let svd = SVD::try_new(m.clone(), true, true, f64::EPSILON, SVD_MAX_ITER).ok_or_else(|| {
        SfpcaError::Numeric(format!(
            "SVD of {rows}×{cols} matrix did not converge within {SVD_MAX_ITER} iterations"
        ))
    })?;
    let u = svd.u.expect("U requested");
    let vt = svd.v_t.expect("Vᵀ requested");
    let sv = svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    let r = order.len();
    let mut su = DenseMatrix::zeros(rows, r);
    let mut sv_out = Vector::zeros(r);
    let mut vv = DenseMatrix::zeros(cols, r);
    for (dst, &src) in order.iter().enumerate() {
        su.set_column(dst, &u.column(src));
        vv.set_column(dst, &vt.row(src).transpose());
        sv_out[dst] = sv[src].max(0.0);
    }
    Ok(ThinSvd {
        u: su,
        d: sv_out,
        v: vv,
    })
}

/// Largest singular value.
pub fn spectral_norm(m: &DenseMatrix) -> Result<f64> {
    Ok(thin_svd(m)?.d[0])
}

/// `√(xᵀSx)`.
pub fn s_norm(x: &Vector, s: &SmoothingOperator) -> Result<f64> {
    if x.len() != s.dim() {
        return Err(SfpcaError::Dimension(format!(
            "vector of length {} against smoother of dim {}",
            x.len(),
            s.dim()
        )));
    }
    let q = if s.is_identity() {
        x.norm_squared()
    } else {
        x.dot(&(s.s() * x))
    };
    Ok(q.max(0.0).sqrt())
}

pub(crate) fn symmetrize(m: &mut DenseMatrix) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// 2-norm condition number of a (small) matrix; infinite when singular.
pub fn condition_number(m: &DenseMatrix) -> Result<f64> {
    let svd = thin_svd(m)?;
    let smax = svd.d[0];
    let smin = svd.d[svd.d.len() - 1];
    Ok(if smin > 0.0 { smax / smin } else { f64::INFINITY })
}

/// Orthonormal basis of the column span of `m` (thin SVD based, drops
/// numerically null directions).
pub fn orthonormal_basis(m: &DenseMatrix) -> Result<DenseMatrix> {
    let svd = thin_svd(m)?;
    let tol = svd.d[0] * 1e-12 * m.nrows().max(m.ncols()) as f64;
    let r = svd.d.iter().filter(|&&s| s > tol).count();
    Ok(svd.u.columns(0, r).into_owned())
}

/// Largest principal angle (radians) between the column spans of `a` and `b`.
///
/// Computed from `‖(I − QaQaᵀ)Qb‖₂` so small angles keep full precision.
pub fn max_principal_angle(a: &DenseMatrix, b: &DenseMatrix) -> Result<f64> {
    if a.nrows() != b.nrows() {
        return Err(SfpcaError::Dimension(format!(
            "subspaces live in different spaces: {} vs {} rows",
            a.nrows(),
            b.nrows()
        )));
    }
    let qa = orthonormal_basis(a)?;
    let qb = orthonormal_basis(b)?;
    if qa.ncols() != qb.ncols() {
        return Ok(std::f64::consts::FRAC_PI_2);
    }
    let resid = &qb - &qa * (qa.transpose() * &qb);
    let sin = spectral_norm(&resid)?.min(1.0);
    Ok(sin.asin())
}
