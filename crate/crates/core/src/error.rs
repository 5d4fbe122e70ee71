use thiserror::Error;

/// Errors raised by the numerical kernels, solvers and I/O helpers.
#[derive(Debug, Error)]
pub enum SfpcaError {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    /// Retraction Gram matrix `YᵀSY` was not positive definite.
    #[error("rank-deficient step: {0}")]
    RankDeficient(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Gram or pivot matrix too ill-conditioned to invert safely.
    #[error("ill-conditioned {factor}: condition number {condition:.3e} exceeds {bound:.1e}")]
    Conditioning {
        factor: String,
        condition: f64,
        bound: f64,
    },

    #[error("singular Schur pivot: |uᵀXv| = {pivot:.3e} below {threshold:.3e}")]
    SingularPivot { pivot: f64, threshold: f64 },

    #[error("infeasible point: ‖UᵀSU − I‖_F = {residual:.3e} exceeds {tolerance:.1e}")]
    Infeasible { residual: f64, tolerance: f64 },

    #[error("tuning degenerate: every grid point produced an all-zero fit")]
    TuningDegenerate,

    #[error("scenario generation failed: {0}")]
    Generation(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SfpcaError>;
