//! Non-interactive locally differentially private estimation of generalized
//! linear models and smooth single-index regressions.
//!
//! Every private user releases one Gaussian-perturbed copy of its sufficient
//! statistics (`x xᵀ`, `x y`). The server solves the noisy least-squares
//! system and then rescales the OLS direction by a scalar `ĉ` found from
//! public unlabeled features, giving `ŵ = ĉ · ŵ_ols`.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the experiment
//! harness and the command line live in the companion `nldp` crate.
#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod baselines;
pub mod calibration;
mod error;
pub mod linalg;
pub mod linkfn;
mod math;
pub mod mechanism;
pub mod pipeline;
pub mod regression;
pub mod seed;
pub mod synth;

pub use error::{Error, Result};
pub use linkfn::{Bound, LinkFunction, LinkKind, Registry};
pub use mechanism::{DataBounds, Mode, NoiseScales, PrivacyParams, UserReport};
pub use pipeline::{Dataset, EstimateOptions, EstimatorOutput, Features, Provenance};
pub use regression::{OlsResult, SufficientStats};
