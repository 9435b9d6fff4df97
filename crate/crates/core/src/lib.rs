//! Simulation and rate certification for reflected jump-diffusions on the
//! half-line `[0, inf)`.
//!
//! - [`model`]: coefficients, jump families, model files and assumption checks
//! - [`rate`]: `K(x, λ)`, its supremum over the state and the optimal rate certificate
//! - [`sim`]: reflected Euler paths with thinned jumps and coupled pairs
//! - [`verify`]: Monte Carlo checks of certified rates
//! - [`levy`]: two competing Lévy particles and their gap process

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod expr;
pub mod levy;
pub mod model;
pub mod quad;
pub mod rate;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod verify;

pub use error::{Result, RjdError};
pub use levy::{EffectiveDrifts, GapEquivalenceReport, LevyPairModel, RankedPaths};
pub use model::{
    DriftDiffusionSpec, JumpFamily, LineMeasure, PlanarJumpMeasure, RJDModel, ScalarFn, Side, SizeLaw, ValidationReport,
};
pub use rate::{Method, RateCertificate, VLyapunov};
pub use sim::{CoupledPair, JumpEvent, PathRecord, Reflection, SimConfig};
pub use verify::{BoundReport, DecayFit, EmpiricalDistribution, GapEstimate};
