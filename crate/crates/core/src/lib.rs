//! Identification of PDEs from a single noisy space-time trajectory with a
//! dynamics-guided weighted weak form and occurrence/coefficient voting.
//!
//! The pipeline, bottom-up:
//!
//! - [`grid`]: uniform grids, datasets and the NSR noise model;
//! - [`library`]: candidate terms `∂^α(u^β)` and ground-truth equations;
//! - [`test_fn`]: polynomial bump test functions and their placement;
//! - [`weak`]: quadrature of the weak system `W a = b`;
//! - [`weighting`]: dynamics indicators and row weights;
//! - [`solver`]: subspace pursuit with holdout model selection;
//! - [`ident`]: voting and the final rescaled least-squares fit;
//! - [`metrics`]: TPR, PPV and E2.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod grid;
pub mod ident;
pub mod library;
pub mod linalg;
pub mod metrics;
pub mod solver;
pub mod test_fn;
pub mod weak;
pub mod weighting;

pub use error::{Error, Result};
pub use grid::{add_noise, nsr_sigma, Axis, Dataset, Grid, NoiseSpec};
pub use ident::{identify, IdentResult, VotingConfig};
pub use library::{Coefficients, EquationId, FeatureLibrary, FeatureSpec};
pub use metrics::{score, Score};
pub use solver::SparseSolveParams;
pub use test_fn::{TestFunctionConfig, TestFunctionGrid, TestFunctionParams};
pub use weak::{assemble, WeakSystem};
pub use weighting::{default_reference_set, uniform_reference_set, ReferenceFeature};
