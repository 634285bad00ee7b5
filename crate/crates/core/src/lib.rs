//! Sequential adaptive sampling for globally accurate surrogate models.
//!
//! The crate bundles a Gaussian-process engine, space-filling designs, ten
//! sampling strategies, acquisition maximizers, analytic benchmark functions
//! and an experiment harness that scores strategies by test-set R² and by the
//! area under the R² learning curve.

pub mod acquisition;
pub mod benchmarks;
pub mod doe;
pub mod domain;
pub mod error;
pub mod gp;
pub mod harness;
pub mod kernels;
pub mod metrics;
pub mod optimize;

pub use domain::{DesignDomain, Dataset, NormalizationStats, RngSeed};
pub use error::{Error, Result};
pub use gp::{FitOptions, GpModel};
pub use kernels::{KernelFamily, KernelSpec};
