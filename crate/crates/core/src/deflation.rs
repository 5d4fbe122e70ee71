//! Deflation of a data matrix by estimated principal components.
//!
//! | scheme | update |
//! |---|---|
//! | Hotelling (HD) | `X − P_U X P_V` |
//! | projection (PD) | `(I − P_U) X (I − P_V)` |
//! | Schur complement (SD) | `X − XV(UᵀXV)^{-1}UᵀX` |
//!
//! with `P_U = U(UᵀU)^{-1}Uᵀ`. Without normalization HD/PD use `UUᵀ` in place
//! of `P_U`. SD is invariant to column scaling and always ignores the flag.
//!
//! Only SD keeps every earlier component orthogonal to every later deflate;
//! [`DeflationState::orthogonality_report`] measures all three properties.

use std::fmt;

use nalgebra::{Cholesky, LU};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SfpcaError};
use crate::linalg::{condition_number, ensure_finite, DenseMatrix, Vector};

/// Largest condition number accepted for Gram and pivot matrices.
pub const CONDITION_BOUND: f64 = 1e10;
/// Vector SD pivot must satisfy `|uᵀXv| ≥ 1e-12·‖X‖_F`.
pub const PIVOT_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeflationKind {
    Hotelling,
    Projection,
    Schur,
}

impl DeflationKind {
    pub fn short_name(self) -> &'static str {
        match self {
            DeflationKind::Hotelling => "HD",
            DeflationKind::Projection => "PD",
            DeflationKind::Schur => "SD",
        }
    }
}

impl fmt::Display for DeflationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DeflationKind::Hotelling => "hotelling",
            DeflationKind::Projection => "projection",
            DeflationKind::Schur => "schur",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeflationScheme {
    pub kind: DeflationKind,
    /// Euclidean-normalize the PCs first (HD/PD only).
    pub normalize: bool,
}

impl DeflationScheme {
    /// Normalization defaults to on.
    pub fn new(kind: DeflationKind) -> Self {
        Self {
            kind,
            normalize: true,
        }
    }

    pub fn unnormalized(kind: DeflationKind) -> Self {
        Self {
            kind,
            normalize: false,
        }
    }

    pub fn hotelling() -> Self {
        Self::new(DeflationKind::Hotelling)
    }

    pub fn projection() -> Self {
        Self::new(DeflationKind::Projection)
    }

    pub fn schur() -> Self {
        Self::new(DeflationKind::Schur)
    }
}

#[derive(Debug, Clone)]
pub struct DeflationStep {
    pub u: DenseMatrix,
    pub v: DenseMatrix,
    pub scheme: DeflationScheme,
    /// The deflated matrix produced by this step.
    pub x_after: DenseMatrix,
}

#[derive(Debug, Clone)]
pub struct DeflationState {
    x_original: DenseMatrix,
    x_current: DenseMatrix,
    history: Vec<DeflationStep>,
}

impl DeflationState {
    pub fn new(x: DenseMatrix) -> Result<Self> {
        ensure_finite(&x, "deflation input")?;
        Ok(Self {
            x_current: x.clone(),
            x_original: x,
            history: Vec::new(),
        })
    }

    pub fn x_current(&self) -> &DenseMatrix {
        &self.x_current
    }

    pub fn x_original(&self) -> &DenseMatrix {
        &self.x_original
    }

    pub fn history(&self) -> &[DeflationStep] {
        &self.history
    }

    fn push(&self, u: DenseMatrix, v: DenseMatrix, scheme: DeflationScheme, x_after: DenseMatrix) -> Result<Self> {
        ensure_finite(&x_after, "deflated matrix")?;
        let mut next = self.clone();
        next.history.push(DeflationStep {
            u,
            v,
            scheme,
            x_after: x_after.clone(),
        });
        next.x_current = x_after;
        Ok(next)
    }

    /// Single-component deflation.
    pub fn deflate_vector(&self, u: &Vector, v: &Vector, scheme: DeflationScheme) -> Result<Self> {
        let x = &self.x_current;
        if u.len() != x.nrows() || v.len() != x.ncols() {
            return Err(SfpcaError::Dimension(format!(
                "PC lengths ({}, {}) do not match matrix {}×{}",
                u.len(),
                v.len(),
                x.nrows(),
                x.ncols()
            )));
        }
        let (nu, nv) = (u.norm(), v.norm());
        if nu == 0.0 || nv == 0.0 {
            return Err(SfpcaError::Degenerate("cannot deflate by a zero PC".into()));
        }
        let x_after = match scheme.kind {
            DeflationKind::Hotelling | DeflationKind::Projection => {
                let (uu, vv) = if scheme.normalize {
                    (u / nu, v / nv)
                } else {
                    (u.clone(), v.clone())
                };
                let xv = x * &vv;
                let utx = uu.transpose() * x;
                let d = uu.dot(&xv);
                if scheme.kind == DeflationKind::Hotelling {
                    x - (&uu * vv.transpose()) * d
                } else {
                    x - &uu * &utx - &xv * vv.transpose() + (&uu * vv.transpose()) * d
                }
            }
            DeflationKind::Schur => {
                let xv = x * v;
                let utx = u.transpose() * x;
                let pivot = u.dot(&xv);
                let threshold = PIVOT_REL_TOL * x.norm();
                if !(pivot.abs() >= threshold) || pivot == 0.0 {
                    return Err(SfpcaError::SingularPivot {
                        pivot: pivot.abs(),
                        threshold,
                    });
                }
                x - (&xv * &utx) / pivot
            }
        };
        let u_col = DenseMatrix::from_column_slice(u.len(), 1, u.as_slice());
        let v_col = DenseMatrix::from_column_slice(v.len(), 1, v.as_slice());
        self.push(u_col, v_col, scheme, x_after)
    }

    /// Simultaneous deflation by `k` components (`u_block` n×k, `v_block` p×k).
    pub fn deflate_block(&self, u_block: &DenseMatrix, v_block: &DenseMatrix, scheme: DeflationScheme) -> Result<Self> {
        let x = &self.x_current;
        if u_block.nrows() != x.nrows() || v_block.nrows() != x.ncols() || u_block.ncols() != v_block.ncols() {
            return Err(SfpcaError::Dimension(format!(
                "blocks {:?} and {:?} do not fit matrix {}×{}",
                u_block.shape(),
                v_block.shape(),
                x.nrows(),
                x.ncols()
            )));
        }
        if u_block.ncols() == 0 {
            return Err(SfpcaError::Dimension("empty PC block".into()));
        }
        let x_after = match scheme.kind {
            DeflationKind::Hotelling | DeflationKind::Projection => {
                // Q_U = U (UᵀU)^{-1} so that P_U = Q_U Uᵀ
                let (qu, qv) = if scheme.normalize {
                    (gram_solve(u_block, "U")?, gram_solve(v_block, "V")?)
                } else {
                    (u_block.clone(), v_block.clone())
                };
                let core = u_block.transpose() * x * v_block;
                if scheme.kind == DeflationKind::Hotelling {
                    x - &qu * core * qv.transpose()
                } else {
                    let left = &qu * (u_block.transpose() * x);
                    let right = (x * v_block) * qv.transpose();
                    x - left - right + &qu * core * qv.transpose()
                }
            }
            DeflationKind::Schur => {
                let xv = x * v_block;
                let utx = u_block.transpose() * x;
                let pivot = u_block.transpose() * &xv;
                let cond = condition_number(&pivot)?;
                if !(cond < CONDITION_BOUND) {
                    return Err(SfpcaError::Conditioning {
                        factor: "pivot UᵀXV".into(),
                        condition: cond,
                        bound: CONDITION_BOUND,
                    });
                }
                let solved = LU::new(pivot)
                    .solve(&utx)
                    .ok_or_else(|| SfpcaError::Numeric("LU solve of UᵀXV failed".into()))?;
                x - xv * solved
            }
        };
        self.push(u_block.clone(), v_block.clone(), scheme, x_after)
    }

    /// Orthogonality residuals of every historical step against its own and
    /// all later deflates.
    pub fn orthogonality_report(&self) -> Result<OrthogonalityReport> {
        if self.history.is_empty() {
            return Err(SfpcaError::Config("orthogonality report needs a nonempty history".into()));
        }
        let mut steps = Vec::with_capacity(self.history.len());
        for (t, step) in self.history.iter().enumerate() {
            let measure = |x: &DenseMatrix| {
                let utx = step.u.transpose() * x;
                let xv = x * &step.v;
                let two = (&utx * &step.v).norm();
                (two, utx.norm(), xv.norm())
            };
            let (two_way, left, right) = measure(&step.x_after);
            let mut sub_left: Option<f64> = None;
            let mut sub_right: Option<f64> = None;
            for later in &self.history[t + 1..] {
                let (_, l, r) = measure(&later.x_after);
                sub_left = Some(sub_left.map_or(l, |m| m.max(l)));
                sub_right = Some(sub_right.map_or(r, |m| m.max(r)));
            }
            steps.push(StepOrthogonality {
                step: t + 1,
                scheme: step.scheme.kind,
                normalized: step.scheme.normalize,
                rank: step.u.ncols(),
                two_way,
                one_way_left: left,
                one_way_right: right,
                subsequent_left: sub_left,
                subsequent_right: sub_right,
            });
        }
        Ok(OrthogonalityReport {
            x0_frobenius: self.x_original.norm(),
            steps,
        })
    }
}

/// `B(BᵀB)^{-1}`, via Cholesky with a condition check.
fn gram_solve(b: &DenseMatrix, name: &str) -> Result<DenseMatrix> {
    let gram = b.transpose() * b;
    let cond = condition_number(&gram)?;
    if !(cond < CONDITION_BOUND) {
        return Err(SfpcaError::Conditioning {
            factor: format!("Gram matrix {name}ᵀ{name}"),
            condition: cond,
            bound: CONDITION_BOUND,
        });
    }
    let chol = Cholesky::new(gram).ok_or_else(|| SfpcaError::Conditioning {
        factor: format!("Gram matrix {name}ᵀ{name}"),
        condition: f64::INFINITY,
        bound: CONDITION_BOUND,
    })?;
    Ok(chol.solve(&b.transpose()).transpose())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepOrthogonality {
    pub step: usize,
    pub scheme: DeflationKind,
    pub normalized: bool,
    pub rank: usize,
    /// `‖U_tᵀX_tV_t‖_F`
    pub two_way: f64,
    /// `‖U_tᵀX_t‖_F`
    pub one_way_left: f64,
    /// `‖X_tV_t‖_F`
    pub one_way_right: f64,
    /// `max_{s≥1} ‖U_tᵀX_{t+s}‖_F`; absent for the last step.
    pub subsequent_left: Option<f64>,
    pub subsequent_right: Option<f64>,
}

impl StepOrthogonality {
    pub fn one_way(&self) -> f64 {
        self.one_way_left.max(self.one_way_right)
    }

    pub fn subsequent(&self) -> Option<f64> {
        match (self.subsequent_left, self.subsequent_right) {
            (Some(l), Some(r)) => Some(l.max(r)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrthogonalityReport {
    pub x0_frobenius: f64,
    pub steps: Vec<StepOrthogonality>,
}

impl OrthogonalityReport {
    pub fn max_two_way(&self) -> f64 {
        self.steps.iter().map(|s| s.two_way).fold(0.0, f64::max)
    }

    pub fn max_one_way(&self) -> f64 {
        self.steps.iter().map(|s| s.one_way()).fold(0.0, f64::max)
    }

    pub fn max_subsequent(&self) -> f64 {
        self.steps
            .iter()
            .filter_map(|s| s.subsequent())
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Plain-text table with one row per deflation step.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<5} {:<7} {:>4} {:>13} {:>13} {:>13}\n",
            "step", "scheme", "rank", "two-way", "one-way", "subsequent"
        ));
        for s in &self.steps {
            let sub = s
                .subsequent()
                .map_or_else(|| "-".to_string(), |v| format!("{v:.3e}"));
            out.push_str(&format!(
                "{:<5} {:<7} {:>4} {:>13.3e} {:>13.3e} {:>13}\n",
                s.step,
                s.scheme.short_name(),
                s.rank,
                s.two_way,
                s.one_way(),
                sub
            ));
        }
        out.push_str(&format!("‖X₀‖_F = {:.6e}\n", self.x0_frobenius));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hd_fixture() -> (DenseMatrix, Vector, Vector) {
        let x = DenseMatrix::from_row_slice(3, 2, &[2.0, -4.0 / 3.0, 2.0, 2.0 / 3.0, 1.0, 4.0 / 3.0]);
        let h = 1.0 / 2f64.sqrt();
        (x, Vector::from_vec(vec![h, h, 0.0]), Vector::from_vec(vec![1.0, 0.0]))
    }

    #[test]
    fn hotelling_counterexample() {
        let (x, u, v) = hd_fixture();
        let st = DeflationState::new(x.clone()).unwrap();
        assert!((u.dot(&(&x * &v)) - 8f64.sqrt()).abs() < 1e-12);
        let x1 = st.deflate_vector(&u, &v, DeflationScheme::hotelling()).unwrap();
        let expected = DenseMatrix::from_row_slice(3, 2, &[0.0, -4.0 / 3.0, 0.0, 2.0 / 3.0, 1.0, 4.0 / 3.0]);
        assert!((x1.x_current() - &expected).amax() < 1e-12);
        let utx = u.transpose() * x1.x_current();
        assert!(utx[0].abs() < 1e-12);
        assert!((utx[1] + 2f64.sqrt() / 3.0).abs() < 1e-12);
    }

    #[test]
    fn projection_and_schur_fixtures() {
        let (x, u, v) = hd_fixture();
        let st = DeflationState::new(x).unwrap();
        let pd = st.deflate_vector(&u, &v, DeflationScheme::projection()).unwrap();
        let expected = DenseMatrix::from_row_slice(3, 2, &[0.0, -1.0, 0.0, 1.0, 0.0, 4.0 / 3.0]);
        assert!((pd.x_current() - &expected).amax() < 1e-12);
        assert!((u.transpose() * pd.x_current()).amax() < 1e-12);

        let sd = st.deflate_vector(&u, &v, DeflationScheme::schur()).unwrap();
        let expected = DenseMatrix::from_row_slice(3, 2, &[0.0, -1.0, 0.0, 1.0, 0.0, 1.5]);
        assert!((sd.x_current() - &expected).amax() < 1e-12);
        assert!((u.transpose() * sd.x_current()).amax() < 1e-12);
        assert!((sd.x_current() * &v).amax() < 1e-12);
    }

    #[test]
    fn projection_loses_subsequent_orthogonality() {
        let x = DenseMatrix::from_row_slice(
            4,
            3,
            &[-2.0, -1.5, 1.0, 8.0 / 3.0, 1.0 / 6.0, 1.0 / 3.0, 0.0, 2.5, 1.0, 2.0 / 3.0, 7.0 / 6.0, 7.0 / 3.0],
        );
        let h = 1.0 / 2f64.sqrt();
        let u1 = Vector::from_vec(vec![0.5; 4]);
        let v1 = Vector::from_vec(vec![h, h, 0.0]);
        let u2 = Vector::from_vec(vec![0.0, 0.0, 0.8, 0.6]);
        let v2 = Vector::from_vec(vec![h, 0.0, h]);
        let st = DeflationState::new(x).unwrap();
        let x1 = st.deflate_vector(&u1, &v1, DeflationScheme::projection()).unwrap();
        let expected = DenseMatrix::from_row_slice(
            4,
            3,
            &[
                -1.0 / 8.0, 1.0 / 8.0, -1.0 / 6.0,
                11.0 / 8.0, -11.0 / 8.0, -5.0 / 6.0,
                -9.0 / 8.0, 9.0 / 8.0, -1.0 / 6.0,
                -1.0 / 8.0, 1.0 / 8.0, 7.0 / 6.0,
            ],
        );
        assert!((x1.x_current() - expected).amax() < 1e-12);
        let x2 = x1.deflate_vector(&u2, &v2, DeflationScheme::projection()).unwrap();
        // hand computation: u₁ᵀX₂ = (259/480, −0.6825, −259/480)
        let left = u1.transpose() * x2.x_current();
        assert!((left[0] - 259.0 / 480.0).abs() < 1e-12);
        assert!((left[1] + 0.6825).abs() < 1e-12);
        assert!((left[2] + 259.0 / 480.0).abs() < 1e-12);
        let rep = x2.orthogonality_report().unwrap();
        assert!(rep.steps[0].subsequent().unwrap() > 1.0);

        let sd = st
            .deflate_vector(&u1, &v1, DeflationScheme::schur())
            .unwrap()
            .deflate_vector(&u2, &v2, DeflationScheme::schur())
            .unwrap();
        assert!(sd.orthogonality_report().unwrap().max_subsequent() < 1e-12);
    }

    #[test]
    fn schemes_agree_on_true_singular_pair() {
        let x = DenseMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 1.0]);
        let st = DeflationState::new(x).unwrap();
        let e1 = Vector::from_vec(vec![1.0, 0.0]);
        let expected = DenseMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        for kind in [DeflationKind::Hotelling, DeflationKind::Projection, DeflationKind::Schur] {
            let out = st.deflate_vector(&e1, &e1, DeflationScheme::new(kind)).unwrap();
            assert!((out.x_current() - &expected).amax() < 1e-15, "{kind}");
        }
    }

    #[test]
    fn singular_pivot_is_loud() {
        let x = DenseMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let st = DeflationState::new(x).unwrap();
        let e2 = Vector::from_vec(vec![0.0, 1.0]);
        assert!(matches!(
            st.deflate_vector(&e2, &e2, DeflationScheme::schur()),
            Err(SfpcaError::SingularPivot { .. })
        ));
    }

    #[test]
    fn collinear_block_names_factor() {
        let x = DenseMatrix::identity(3, 3);
        let st = DeflationState::new(x).unwrap();
        let u = DenseMatrix::from_row_slice(3, 2, &[1.0, 2.0, 0.0, 0.0, 0.0, 0.0]);
        let v = DenseMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        match st.deflate_block(&u, &v, DeflationScheme::projection()) {
            Err(SfpcaError::Conditioning { factor, .. }) => assert!(factor.contains('U')),
            other => panic!("expected conditioning error, got {other:?}"),
        }
    }

    #[test]
    fn rank_one_block_matches_vector() {
        let (x, u, v) = hd_fixture();
        let st = DeflationState::new(x).unwrap();
        let (u2, v2) = (&u * 2.5, &v * -0.4);
        let ub = DenseMatrix::from_column_slice(3, 1, u2.as_slice());
        let vb = DenseMatrix::from_column_slice(2, 1, v2.as_slice());
        for kind in [DeflationKind::Hotelling, DeflationKind::Projection, DeflationKind::Schur] {
            let a = st.deflate_vector(&u2, &v2, DeflationScheme::new(kind)).unwrap();
            let b = st.deflate_block(&ub, &vb, DeflationScheme::new(kind)).unwrap();
            assert!((a.x_current() - b.x_current()).amax() < 1e-13, "{kind}");
        }
    }

    #[test]
    fn report_flags_hotelling_scale_sensitivity() {
        let (x, u, v) = hd_fixture();
        let st = DeflationState::new(x).unwrap();
        let u2 = &u * 2.0;
        let raw = st
            .deflate_vector(&u2, &v, DeflationScheme::unnormalized(DeflationKind::Hotelling))
            .unwrap();
        let rep = raw.orthogonality_report().unwrap();
        // uᵀX₁v = d·(1 − ‖u‖²‖v‖²) with d = uᵀXv
        let d = u2.dot(&(st.x_current() * &v));
        let expected = d.abs() * (1.0 - u2.norm_squared() * v.norm_squared()).abs();
        assert!((rep.steps[0].two_way - expected).abs() < 1e-10);
        assert!(rep.steps[0].two_way > 1.0);
        let normed = st.deflate_vector(&u2, &v, DeflationScheme::hotelling()).unwrap();
        assert!(normed.orthogonality_report().unwrap().steps[0].two_way < 1e-12);
        assert!(rep.to_table().contains("HD"));
        assert!(rep.to_json().unwrap().contains("two_way"));
    }
}
