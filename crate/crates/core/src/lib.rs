//! Counting statistics of coherent transport in small closed driven lattices.
//!
//! The crate propagates tight-binding Hamiltonians, accumulates the counting
//! operator `Q = ∫ U†(t) I U(t) dt` through a chosen bond and compares its first
//! two moments with the closed-form results for Landau–Zener crossings, split
//! paths, stirring cycles and the clean ring.

pub mod analytic;
pub mod cycle;
pub mod error;
pub mod floquet;
pub mod linalg;
pub mod model;
pub mod propagate;
pub mod ring;
pub mod tolerances;

pub use error::{Error, Result};
pub use linalg::{
    eigh, expm_unitary, operator_moments, CMatrix, CVector, HermitianOperator, Moments, Spectrum, StateVector,
    UnitaryMatrix, C64,
};
pub use model::{
    double_path_protocol, ring_protocol, stir_cycle_protocol, two_site_lz_protocol, two_site_sweep_protocol, Bond,
    DoublePathSpec, DrivingProtocol, ModelKind, Schedule, ScheduleBuilder, StirCycleSpec, Valves,
};
