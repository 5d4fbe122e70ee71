//! Sparse and functional principal component analysis.
//!
//! The crate bundles
//!
//! * rank-one SFPCA ([`rank1`]) used as the engine of greedy deflation
//!   pipelines,
//! * multi-rank manifold SFPCA ([`mansfpca`]) with MADMM, ManPG and A-ManPG
//!   engines on the generalized Stiefel manifold ([`manifold`],
//!   [`subsolvers`]),
//! * Hotelling, projection and Schur complement deflation ([`deflation`]),
//! * a seeded simulation and benchmark harness ([`simbench`]),
//! * CSV/JSON plumbing and the `sfpca` command-line front-end ([`io`], [`cli`]).
//!
//! See the `examples/` directory of this crate for one runnable program per
//! capability.

pub mod cli;
pub mod deflation;
pub mod error;
pub mod io;
pub mod linalg;
pub mod manifold;
pub mod pipeline;
pub mod mansfpca;
pub mod rank1;
pub mod simbench;
pub mod subsolvers;

pub use error::{Result, SfpcaError};
pub use linalg::{
    build_difference_penalty, build_smoother, soft_threshold, thin_svd, DenseMatrix,
    DifferencePenalty, PenaltySpec, SmoothingOperator, Vector,
};
