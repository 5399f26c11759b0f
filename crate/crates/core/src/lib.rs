//! Multiband delay estimation toolkit.
//!
//! Estimates multipath delays (and ranges) from channel state information
//! collected in several frequency bands spread over a wide aperture. The
//! pipeline stacks per-band CSI into block-Hankel matrices, estimates the
//! signal subspace by truncated SVD, and fits the delay-parametrized steering
//! matrix to that subspace by weighted separable nonlinear least squares.
//! Companion modules provide the Fisher-information/CRB analysis, MUSIC and
//! shift-invariance baselines, and a seeded Monte Carlo benchmark harness.

// LAPACK/BLAS provider for lax/cblas-sys; Debian's libopenblas carries both symbol sets.
#[link(name = "openblas")]
extern "C" {}

pub mod baselines;
pub mod bench;
pub mod crb;
pub mod error;
pub mod estimator;
pub mod io;
pub mod linalg;
pub mod model;
pub mod presets;
pub mod rng;
pub mod stacking;
pub mod subspace;
