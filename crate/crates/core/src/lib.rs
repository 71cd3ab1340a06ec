//! Planted-solution benchmarking of annealing heuristics on Chimera graphs.
//!
//! The crate generates frustrated-loop instances with embedded tunneling
//! gadgets, runs simulated annealing (with and without unit-cell moves),
//! spin-vector Monte Carlo and simulated quantum annealing on them, analyses
//! small annealing Hamiltonians exactly, and fits time-to-solution scaling.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod exact;
pub mod instance;
pub mod scalar;
pub mod schedule;
pub mod solvers;
pub mod topology;

pub use error::{Error, Result};
pub use instance::{IsingInstance, SpinState};
pub use scalar::{Real, Thirds};
pub use topology::ChimeraTopology;
pub use schedule::Schedule;

pub type Schedule64 = schedule::Schedule<f64>;
pub type Schedule32 = schedule::Schedule<f32>;
