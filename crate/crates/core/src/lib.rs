//! Finite-N phase-locking threshold of the Kuramoto model with evenly
//! spaced natural frequencies.
//!
//! Three independent routes to the threshold live here:
//!
//! - [`locking`]: the exact implicit saddle-node equation for the maximal
//!   phase, solved to near machine precision, and the resulting threshold.
//! - [`asymptotics`]: the Hurwitz-zeta expansion of the singular Riemann sum,
//!   split into bulk and fringe parts, with closed-form predictions.
//! - [`dynamics`]: fixed-step RK4 integration of the oscillator ODEs with a
//!   bisection on the frequency half-width.
//!
//! [`specfun`] supplies the Hurwitz zeta function and the constants derived
//! from it, and [`harness`] ties everything into sweeps, power-law fits and
//! CSV/JSON output.
//!
//! All numerical kernels are generic over [`Real`] (`f32` or `f64`). The
//! aliases at the crate root fix the scalar to `f64`, which is what the
//! harness and the command line use.

// `!(x > y)` is used deliberately so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod dynamics;
mod error;
pub mod harness;
pub mod locking;
mod real;
pub mod specfun;
pub mod sum;

pub use error::{Error, Result};
pub use real::Real;

pub use asymptotics::{AsymptoticPrediction, MeshContext, MeshMode};
pub use dynamics::{OscillatorState, SeedPhases, SimConfig, SimOutcome, Verdict};
pub use harness::{ScalingFit, SweepRow};
pub use locking::{FrequencyRule, FrequencySpec, LockingSolution, NormalizedFrequencies, SolverConfig};
pub use specfun::{QrsConstants, ZetaArgs, ZetaValue};

pub type FrequencySpec64 = FrequencySpec<f64>;
pub type FrequencyRule64 = FrequencyRule<f64>;
pub type NormalizedFrequencies64 = NormalizedFrequencies<f64>;
pub type LockingSolution64 = LockingSolution<f64>;
pub type MeshContext64 = MeshContext<f64>;
pub type AsymptoticPrediction64 = AsymptoticPrediction<f64>;
pub type SimConfig64 = SimConfig<f64>;
pub type SimOutcome64 = SimOutcome<f64>;
pub type OscillatorState64 = OscillatorState<f64>;
pub type ZetaArgs64 = ZetaArgs<f64>;
