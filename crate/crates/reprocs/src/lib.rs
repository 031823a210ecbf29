//! Online robust PCA by recursive projected compressed sensing.
//!
//! A measurement stream `M_t = L_t + S_t` mixes a dense component `L_t`
//! living in a slowly changing low-dimensional subspace (AR(1)-correlated
//! coefficients) with a sparse outlier component `S_t`. This crate recovers
//! both per frame: project each measurement orthogonally to the current
//! subspace estimate, solve a small l1 program for the outliers, refit on
//! the detected support, and refresh the subspace estimate every `alpha`
//! frames with projection-PCA on the recovered dense frames.
//!
//! The pieces are usable on their own:
//!
//! - [`linalg`]: basis matrices, subspace error, denseness coefficients and
//!   restricted-isometry constants of subspace projectors, a deterministic
//!   dense symmetric eigensolver.
//! - [`signal_model`]: synthetic generator for the low-rank-plus-sparse
//!   stream with a scheduled subspace change and AR(1) coefficients.
//! - [`sparse_recovery`]: basis pursuit denoising against a projection
//!   operator, support thresholding, least-squares refit.
//! - [`subspace_tracking`]: the per-frame recovery loop and the scheduled
//!   projection-PCA subspace updates.
//! - [`theory_bounds`]: the guarantee quantities (the `zeta_k` recursion,
//!   restricted-isometry bounds, interval-length and threshold formulas).
//! - [`baseline_pcp`]: batch principal components pursuit for comparison.
//! - [`metrics_io`]: Monte-Carlo experiment driver and CSV/JSON output.
//!
//! The `examples/` directory has one runnable example per capability; the
//! thin `reprocs` binary exposes the experiment driver (`run`), the bound
//! calculator (`bounds`) and the stream generator (`gen`).

pub mod baseline_pcp;
pub mod error;
pub mod linalg;
pub mod mat;
pub mod metrics_io;
pub mod signal_model;
pub mod sparse_recovery;
pub mod subspace_tracking;
pub mod theory_bounds;

pub use error::{Error, Result};
pub use linalg::BasisMatrix;
pub use mat::Mat;
