//! Simulation of one stirring cycle of the three-site device next to its
//! two-crossing description.
//!
//! The reduced two-level basis is `(|0⟩, |E₊⟩)` with `|E₊⟩ = (|1⟩ + |2⟩)/√2`,
//! both exact eigenstates at the start and end of a cycle (valves closed).
//! The predicted one-cycle unitary is the composition of the two crossing
//! matrices with the adiabatic phases accumulated before, between and after
//! the crossings.

use crate::analytic::{self, CycleMoments, CycleParams};
use crate::error::{Error, Result};
use crate::linalg::{eigh, CMatrix, StateVector, C64, ONE, ZERO};
use crate::model::{stir_cycle_protocol, CycleTimeline, DrivingProtocol, StirCycleSpec, Valves};
use crate::propagate::{accumulate_counting, converged_counting, CountingResult};
use crate::tolerances::Tolerances;

/// How the counting run of a cycle is discretized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stepping {
    Fixed(f64),
    Converged(Tolerances),
}

#[derive(Debug, Clone)]
pub struct CycleAnalysis {
    pub spec: StirCycleSpec,
    pub timeline: CycleTimeline,
    pub params: CycleParams,
    pub analytic: CycleMoments,
    pub escape_analytic: f64,
    pub counting: CountingResult,
    /// Probability not to be back on site 0 after the cycle.
    pub escape_simulated: f64,
    /// Probability that `|0⟩` ends outside the reduced two-level subspace.
    pub leakage: f64,
    /// `(|0⟩, |E₊⟩)` block of the simulated one-cycle unitary.
    pub reduced_unitary: CMatrix,
    pub predicted_unitary: CMatrix,
    /// `|tr(A†B)|²/4` between the two blocks above.
    pub fidelity: f64,
    /// Fidelity after adding the Stokes phase to each crossing matrix.
    pub fidelity_with_stokes: f64,
}

/// Dynamical phases `∫E dt` of the middle and top levels of the three-site
/// Hamiltonian over `[t0, t1]`, by the midpoint rule on `samples` points.
pub fn level_phases(p: &DrivingProtocol, t0: f64, t1: f64, samples: usize) -> Result<(f64, f64)> {
    if t1 < t0 || samples == 0 {
        return Err(Error::invalid(
            "phase interval",
            format!("[{t0}, {t1}] with {samples} samples"),
        ));
    }
    let h = (t1 - t0) / samples as f64;
    let (mut mid, mut top) = (0.0, 0.0);
    for k in 0..samples {
        let t = t0 + (k as f64 + 0.5) * h;
        let e = eigh(&p.hamiltonian_at(t)?).eigenvalues;
        let n = e.len();
        mid += e[n - 2];
        top += e[n - 1];
    }
    Ok((mid * h, top * h))
}

fn diag_phase(a: f64, b: f64) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[C64::from_polar(1.0, -a), ZERO, ZERO, C64::from_polar(1.0, -b)])
}

fn z_conjugate(m: &CMatrix) -> CMatrix {
    let mut out = m.clone();
    out[(0, 1)] = -out[(0, 1)];
    out[(1, 0)] = -out[(1, 0)];
    out
}

/// Crossing matrix for `|0⟩` meeting `|E₊⟩` through the coupling `g`, with an
/// optional Stokes phase on the off-diagonal amplitudes (zero reproduces the
/// adiabatic matrix). For `g > 0` adiabatic following maps `|0⟩ → −|E₊⟩`,
/// which is the printed matrix conjugated by `diag(1, −1)`. On the way down the
/// roles of the levels are exchanged.
fn crossing_matrix(p_lz: f64, g: f64, descending: bool, stokes: f64) -> Result<CMatrix> {
    let mut u = analytic::u_lz_matrix(p_lz)?.into_matrix();
    u[(0, 1)] *= C64::from_polar(1.0, -stokes);
    u[(1, 0)] *= C64::from_polar(1.0, stokes);
    let u = if descending {
        CMatrix::from_row_slice(2, 2, &[u[(1, 1)], u[(1, 0)], u[(0, 1)], u[(0, 0)]])
    } else {
        u
    };
    Ok(if g > 0.0 { z_conjugate(&u) } else { u })
}

/// Imaginary part of `ln Γ(z)` for `Re z > 0`, continuous along the path from
/// the real axis (Stirling series after shifting `Re z` above 10).
fn ln_gamma_im(z: C64) -> f64 {
    let mut z = z;
    let mut shift = 0.0;
    while z.re < 10.0 {
        shift += z.ln().im;
        z += 1.0;
    }
    let z2 = z * z;
    let series = (z - 0.5) * z.ln() - z + 1.0 / (12.0 * z) - 1.0 / (360.0 * z * z2) + 1.0 / (1260.0 * z * z2 * z2)
        - 1.0 / (1680.0 * z * z2 * z2 * z2);
    series.im - shift
}

/// Stokes phase of a linear crossing with adiabaticity `δ = g²/u̇`:
/// `π/4 + δ(ln δ − 1) + arg Γ(1 − iδ)`. It vanishes in the adiabatic limit and
/// is dropped by the adiabatic crossing matrix.
pub fn stokes_phase(delta: f64) -> f64 {
    if delta <= 0.0 {
        return std::f64::consts::FRAC_PI_4;
    }
    std::f64::consts::FRAC_PI_4 + delta * (delta.ln() - 1.0) + ln_gamma_im(C64::new(1.0, -delta))
}

/// `|tr(A†B)|²/d²` for `d×d` blocks.
pub fn gate_fidelity(a: &CMatrix, b: &CMatrix) -> f64 {
    let d = a.nrows() as f64;
    (a.adjoint() * b).trace().norm_sqr() / (d * d)
}

fn splitting(v: &Valves) -> Result<f64> {
    Ok(analytic::splitting_ratios(v.c1, v.c2)?.0)
}

/// Runs one cycle from `|0⟩` and evaluates the two-crossing predictions.
pub fn analyze_cycle(spec: &StirCycleSpec, stepping: Stepping) -> Result<CycleAnalysis> {
    if spec.u_min <= -1.0 {
        return Err(Error::Unsupported(format!(
            "u_min = {} crosses the E- level; the two-level reduction does not apply",
            spec.u_min
        )));
    }
    let protocol = stir_cycle_protocol(spec)?;
    let tl = spec.timeline();
    let psi0 = StateVector::basis(3, 0)?;
    let counting = match stepping {
        Stepping::Fixed(dt) => crate::propagate::counting_moments(&accumulate_counting(&protocol, dt)?, &psi0)?,
        Stepping::Converged(tol) => converged_counting(&protocol, &psi0, &tol)?,
    };

    let (g1, g2) = (spec.first.crossing_coupling(), spec.second.crossing_coupling());
    let p_left = analytic::lz_probability(g1, spec.udot)?;
    let p_right = analytic::lz_probability(g2, spec.udot)?;

    // about 20 samples per unit time resolves the level energies (|E| ≤ u_max)
    let samples = |a: f64, b: f64| (((b - a) * 20.0 * spec.u_max.abs().max(1.0)).ceil() as usize).max(64);
    let (t1, t2) = tl.crossings;
    let (mid_pre, top_pre) = level_phases(&protocol, 0.0, t1, samples(0.0, t1))?;
    let (mid_between, top_between) = level_phases(&protocol, t1, t2, samples(t1, t2))?;
    let (mid_post, top_post) = level_phases(&protocol, t2, tl.period, samples(t2, tl.period))?;
    let phi_tilde = top_between - mid_between;

    let params = CycleParams::new(
        splitting(&spec.first)?,
        splitting(&spec.second)?,
        p_left,
        p_right,
        phi_tilde,
    )?;
    let analytic_moments = analytic::cycle_counting_moments(&params);
    let escape_analytic = analytic::cycle_escape_probability(&params);

    // |0⟩ is the middle level before and after the crossings, the top one between
    let compose = |stokes1: f64, stokes2: f64| -> Result<CMatrix> {
        Ok(diag_phase(mid_post, top_post)
            * crossing_matrix(p_right, g2, true, stokes2)?
            * diag_phase(top_between, mid_between)
            * crossing_matrix(p_left, g1, false, stokes1)?
            * diag_phase(mid_pre, top_pre))
    };
    let predicted = compose(0.0, 0.0)?;
    let predicted_stokes = compose(stokes_phase(g1 * g1 / spec.udot), stokes_phase(g2 * g2 / spec.udot))?;

    let u = counting.final_unitary.matrix();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let basis = CMatrix::from_row_slice(3, 2, &[ONE, ZERO, ZERO, C64::new(s, 0.0), ZERO, C64::new(s, 0.0)]);
    let reduced = basis.adjoint() * u * &basis;
    let leakage = 1.0 - (reduced[(0, 0)].norm_sqr() + reduced[(1, 0)].norm_sqr());
    let escape_simulated = 1.0 - u[(0, 0)].norm_sqr();
    let fidelity = gate_fidelity(&reduced, &predicted);
    let fidelity_with_stokes = gate_fidelity(&reduced, &predicted_stokes);

    Ok(CycleAnalysis {
        spec: *spec,
        timeline: tl,
        params,
        analytic: analytic_moments,
        escape_analytic,
        counting,
        escape_simulated,
        leakage,
        reduced_unitary: reduced,
        predicted_unitary: predicted,
        fidelity,
        fidelity_with_stokes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::cycle_unitary;
    use crate::analytic::fix_global_phase;
    use crate::linalg::max_abs_diff;

    #[test]
    fn same_sign_composition_is_gauge_of_cycle_unitary() {
        let (pl, pr, a, b) = (0.03, 0.05, 0.4, -1.3);
        let composed = crossing_matrix(pr, 0.1, true, 0.0).unwrap()
            * diag_phase(a, b)
            * crossing_matrix(pl, 0.07, false, 0.0).unwrap();
        let cp = CycleParams::new(1.0, 0.5, pl, pr, a - b).unwrap();
        let analytic = z_conjugate(cycle_unitary(&cp).unwrap().matrix());
        assert!(max_abs_diff(&fix_global_phase(composed), &fix_global_phase(analytic)) < 1e-14);
    }

    #[test]
    fn log_gamma_imaginary_part() {
        // reference values of Im ln Γ(1 − iδ)
        for (d, v) in [
            (0.1, 0.05732294041671972),
            (0.5, 0.24405829890542763),
            (1.0, 0.30164032046753286),
            (2.5, -0.5426044058524369),
        ] {
            assert!((ln_gamma_im(C64::new(1.0, -d)) - v).abs() < 1e-12, "delta {d}");
        }
        assert!(stokes_phase(50.0).abs() < 2e-3);
    }

    #[test]
    fn fidelity_is_phase_blind() {
        let m = crossing_matrix(0.2, 0.1, false, 0.0).unwrap();
        let rotated = &m * C64::from_polar(1.0, 0.7);
        assert!((gate_fidelity(&m, &rotated) - 1.0).abs() < 1e-14);
        let other = crossing_matrix(0.2, -0.1, false, 0.0).unwrap();
        assert!(gate_fidelity(&m, &other) < 1.0 - 1e-3);
    }
}
