//! Simulation of temporally trapped χ(2) pulses in normalized units.
//!
//! Time is measured in `t_c`, fast time in `τ_c`, and the bare nonlinear
//! coupling is 1. The workflow runs through these modules in order:
//! [`normalization`] fixes the units, [`trap_modes`] finds the bound modes,
//! [`state`] holds the two-photon ket, [`propagator`] integrates it, [`gates`]
//! runs the gate experiments, and [`fom`] evaluates resonator figures of merit.

pub mod constants;
pub mod error;
pub mod fom;
pub mod gates;
pub mod grid;
pub mod linear_optics;
pub mod normalization;
pub mod oracle;
pub mod propagator;
pub mod state;
pub mod trap_modes;

pub use error::{Error, Result};
pub use grid::Grid;
pub use normalization::NormalizedParams;
pub use num_complex::Complex64;
pub use propagator::{PulseSystem, StepPlan, Trajectory};
pub use state::{Observables, TwoPhotonState};
pub use trap_modes::{EigenmodeSet, Harmonic, TrapPotential};

/// Round-trippable float formatting used by every CSV writer.
pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:.15e}")
}
