//! Simulation and verification toolkit for the perturbed Tanaka equation
//! `dX = sign(X) dB¹ + λ dB²` and the path functionals behind its
//! pathwise-uniqueness argument.
//!
//! The crate is organised bottom-up:
//!
//! * [`pathkit`]: sampled paths, signs, medians, quadratic variation, local
//!   time at zero, excursion intervals and their statistics.
//! * [`reflection`]: the two-sided reflection map between a lower and an
//!   upper barrier, total variation, and the clock synchronizer used to
//!   interlace two nondecreasing clocks.
//! * [`stochgen`]: seeded Brownian motion, bridges, excursions and the two
//!   time changes (power-law clock, Dambis–Dubins–Schwarz).
//! * [`sde`]: Euler schemes for the (perturbed) Tanaka equation and the
//!   mirror-coupling experiment.
//! * [`counterexample`]: the non-dominated pair `(U, W)`, the chord process
//!   `K`, the envelope process `L`, identity residuals and the interlaced
//!   `(U, V)` assembly.
//! * [`harness`]: configuration, Monte Carlo drivers, tail-bound checks and
//!   report writing.

// negated comparisons also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod counterexample;
pub mod error;
pub mod harness;
pub mod pathkit;
pub mod reflection;
pub mod sde;
pub mod stats;
pub mod stochgen;

pub use error::{Error, Result};
