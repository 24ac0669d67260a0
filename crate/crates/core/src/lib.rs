//! Conditional Beta-Stacy survival analysis with exact posterior path
//! simulation and non-parametric spliced estimators.
//!
//! The crate is organised bottom-up:
//!
//! - [`stepfun`]: piecewise-constant functions and hazard measures with
//!   closed-form integrals.
//! - [`data`]: censored samples, counting processes and synthetic generators.
//! - [`classical`]: Nelson–Aalen and Kaplan–Meier.
//! - [`tails`]: censored Hill estimators and Weibull QQ regression.
//! - [`betastacy`]: prior/posterior algebra and spliced estimators.
//! - [`sampler`]: exact samplers for posterior hazard and log-survival paths.
//! - [`montecarlo`]: path ensembles, credible bands and asymptotic diagnostics.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod betastacy;
pub mod classical;
pub mod data;
pub mod error;
pub mod montecarlo;
pub mod quad;
pub mod rng;
pub mod sampler;
pub mod special;
pub mod stepfun;
pub mod tails;

pub use data::SurvivalSample;
pub use error::{Error, Result};
pub use rng::RngStream;
pub use stepfun::{DensityForm, DensityPiece, HazardMeasure, PointMass, StepFunction};
