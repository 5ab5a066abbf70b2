//! Numerical tolerances shared by every module.
//!
//! The constants are the defaults; [`Tolerances`] carries a per-run copy that
//! scenario configs can override.

/// Max |A_ij - conj(A_ji)| accepted for a Hermitian operator.
pub const HERMITICITY: f64 = 1e-12;
/// Max entry of |U†U - 1| accepted for a unitary matrix.
pub const UNITARITY: f64 = 1e-10;
/// Max |sum |a|^2 - 1| accepted for a state vector.
pub const NORMALIZATION: f64 = 1e-12;
/// Max-norm residual of V diag(E) V† against the decomposed operator.
pub const RECONSTRUCTION: f64 = 1e-10;
/// Relative energy tolerance used to group degenerate levels.
pub const DEGENERACY: f64 = 1e-9;
/// Target Richardson difference of the counted mean under dt halving.
pub const CONVERGENCE: f64 = 1e-6;
/// Step differences below this are treated as already converged.
pub const CONVERGED_FLOOR: f64 = 1e-14;
/// Initial number of steps of the automatic step-size policy.
pub const DEFAULT_STEPS: usize = 1 << 14;
/// Hard cap on the number of steps of the automatic step-size policy.
pub const STEP_CAP: usize = 1 << 20;
/// Squared coupling above which a valve is no longer a small perturbation.
pub const WEAK_COUPLING_WARN: f64 = 0.01;
/// Squared coupling above which a valve is rejected.
pub const WEAK_COUPLING_MAX: f64 = 0.25;
/// Landau–Zener probability above which leading-order cycle formulas are flagged.
pub const LEADING_ORDER_WARN: f64 = 0.1;
/// Sweep half-range (in units of the coupling) above which a crossing is asymptotic.
pub const ASYMPTOTIC_RANGE_RATIO: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub hermiticity: f64,
    pub unitarity: f64,
    pub normalization: f64,
    pub degeneracy: f64,
    pub convergence: f64,
    pub initial_steps: usize,
    pub step_cap: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermiticity: HERMITICITY,
            unitarity: UNITARITY,
            normalization: NORMALIZATION,
            degeneracy: DEGENERACY,
            convergence: CONVERGENCE,
            initial_steps: DEFAULT_STEPS,
            step_cap: STEP_CAP,
        }
    }
}
