//! Seeded simulation scenarios: three localized sinusoids on the left and
//! three sawtooth ramps on the right, plus isotropic Gaussian noise.
//!
//! Scenario 1 (250×100) uses disjoint supports. Scenario 2 (100×100) widens
//! every window by `overlap_shift` so neighbouring supports overlap and the
//! true factors are no longer orthogonal.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SfpcaError};
use crate::linalg::{DenseMatrix, Vector};

/// Base singular values before the SNR rescaling.
pub const BASE_SCALES: [f64; 3] = [20.0, 15.0, 10.0];
/// Accepted Gram deviation band for scenario 2.
pub const GRAM_BAND: (f64, f64) = (0.3, 0.45);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub id: u8,
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub target_snr: f64,
    pub seed: u64,
    /// Window widening for scenario 2; ignored for scenario 1.
    pub overlap_shift: usize,
}

impl ScenarioSpec {
    /// Nominal SNR of each scenario: 1.2 for scenario 1, 1.7 for scenario 2.
    pub fn default_snr(id: u8) -> f64 {
        if id == 2 {
            1.7
        } else {
            1.2
        }
    }

    /// Default geometry for scenario `id` (1 or 2).
    pub fn new(id: u8, target_snr: f64, seed: u64) -> Result<Self> {
        let (n, p) = match id {
            1 => (250, 100),
            2 => (100, 100),
            other => {
                return Err(SfpcaError::Config(format!(
                    "scenario must be 1 or 2, got {other}"
                )))
            }
        };
        Ok(Self {
            id,
            n,
            p,
            k: 3,
            target_snr,
            seed,
            overlap_shift: if id == 2 { p / 12 } else { 0 },
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.id != 1 && self.id != 2 {
            return Err(SfpcaError::Config(format!("scenario must be 1 or 2, got {}", self.id)));
        }
        if self.k != 3 {
            return Err(SfpcaError::Config("scenarios have exactly three components".into()));
        }
        if !(self.target_snr > 0.0) || !self.target_snr.is_finite() {
            return Err(SfpcaError::Config(format!("target SNR must be positive, got {}", self.target_snr)));
        }
        let min_len = self.n.min(self.p);
        if min_len < 12 || self.overlap_shift >= min_len / 3 {
            return Err(SfpcaError::Config(format!(
                "dimensions {}×{} with shift {} are too small for three windows",
                self.n, self.p, self.overlap_shift
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub spec: ScenarioSpec,
    pub u_star: DenseMatrix,
    pub v_star: DenseMatrix,
    pub d_star: Vector,
    pub x_clean: DenseMatrix,
    pub x_noisy: DenseMatrix,
    pub snr_realized: f64,
    /// `‖U*ᵀU* − I‖_F`
    pub gram_deviation_u: f64,
    /// `‖V*ᵀV* − I‖_F`
    pub gram_deviation_v: f64,
    /// Shift actually used (may differ from the requested one after an adjustment).
    pub overlap_shift: usize,
}

/// `[start, end)` of the three windows; width `len/3 + shift`, spread evenly.
pub fn windows(len: usize, shift: usize) -> [(usize, usize); 3] {
    let width = len / 3 + shift;
    let slack = len - width;
    let mut out = [(0, 0); 3];
    for (j, w) in out.iter_mut().enumerate() {
        let start = (j * slack + 1) / 2;
        *w = (start, start + width);
    }
    out
}

fn sinusoids(n: usize, shift: usize) -> DenseMatrix {
    let mut u = DenseMatrix::zeros(n, 3);
    for (j, (a, b)) in windows(n, shift).into_iter().enumerate() {
        let len = (b - a) as f64;
        for i in a..b {
            let t = ((i - a) as f64 + 0.5) / len;
            u[(i, j)] = (2.0 * std::f64::consts::PI * (j + 1) as f64 * t).sin();
        }
    }
    normalize_columns(u)
}

fn sawtooth(p: usize, shift: usize) -> DenseMatrix {
    let mut v = DenseMatrix::zeros(p, 3);
    for (j, (a, b)) in windows(p, shift).into_iter().enumerate() {
        let len = (b - a) as f64;
        for i in a..b {
            v[(i, j)] = ((i - a) + 1) as f64 / len;
        }
    }
    normalize_columns(v)
}

fn normalize_columns(mut m: DenseMatrix) -> DenseMatrix {
    for mut c in m.column_iter_mut() {
        let n = c.norm();
        c /= n;
    }
    m
}

fn gram_deviation(m: &DenseMatrix) -> f64 {
    (m.tr_mul(m) - DenseMatrix::identity(m.ncols(), m.ncols())).norm()
}

/// Standard normal draws via Box–Muller on a ChaCha8 stream, filled row by row.
pub fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(rows, cols);
    let mut spare: Option<f64> = None;
    for i in 0..rows {
        for j in 0..cols {
            out[(i, j)] = match spare.take() {
                Some(z) => z,
                None => {
                    // u1 in (0, 1] keeps the log finite
                    let u1 = 1.0 - rng.random::<f64>();
                    let u2 = rng.random::<f64>();
                    let r = (-2.0 * u1.ln()).sqrt();
                    let theta = 2.0 * std::f64::consts::PI * u2;
                    spare = Some(r * theta.sin());
                    r * theta.cos()
                }
            };
        }
    }
    out
}

pub fn generate_scenario(spec: &ScenarioSpec) -> Result<GroundTruth> {
    spec.validate()?;
    let mut shift = if spec.id == 1 { 0 } else { spec.overlap_shift };
    let mut u_star = sinusoids(spec.n, shift);
    if spec.id == 2 {
        let dev = gram_deviation(&u_star);
        if dev < GRAM_BAND.0 || dev > GRAM_BAND.1 {
            let step = shift.div_ceil(4).max(1);
            shift = if dev < GRAM_BAND.0 { shift + step } else { shift.saturating_sub(step) };
            log::info!("Gram deviation {dev:.3} outside band; retrying with shift {shift}");
            u_star = sinusoids(spec.n, shift);
            let dev = gram_deviation(&u_star);
            if dev < GRAM_BAND.0 || dev > GRAM_BAND.1 {
                return Err(SfpcaError::Generation(format!(
                    "Gram deviation {dev:.4} outside [{}, {}] after adjusting the shift to {shift}",
                    GRAM_BAND.0, GRAM_BAND.1
                )));
            }
        }
    }
    let v_star = sawtooth(spec.p, shift);
    let base = Vector::from_row_slice(&BASE_SCALES);
    let signal = &u_star * DenseMatrix::from_diagonal(&base) * v_star.transpose();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = gaussian_matrix(&mut rng, spec.n, spec.p);
    let scale = spec.target_snr * noise.norm() / signal.norm();
    let x_clean = signal * scale;
    let d_star = base * scale;
    let x_noisy = &x_clean + &noise;
    let snr_realized = x_clean.norm() / noise.norm();
    Ok(GroundTruth {
        spec: *spec,
        gram_deviation_u: gram_deviation(&u_star),
        gram_deviation_v: gram_deviation(&v_star),
        u_star,
        v_star,
        d_star,
        x_clean,
        x_noisy,
        snr_realized,
        overlap_shift: shift,
    })
}
