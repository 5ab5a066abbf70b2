use std::f64::consts::{PI, TAU};

use qstir_core::analytic::cycle_delta_terms;
use qstir_core::cycle::{analyze_cycle, gate_fidelity, stokes_phase, Stepping};
use qstir_core::linalg::{CMatrix, C64};
use qstir_core::model::{stir_cycle_protocol, StirCycleSpec, Valves};
use qstir_core::propagate::accumulate_counting;

const C: f64 = 0.1;
const P: f64 = 0.04;

/// Peristaltic first half, both valves half open in the second half, so that
/// `λ◁ = 1` and `λ▷ = 1/2`. Both crossings have coupling `c/√2`.
fn spec(dwell: f64) -> StirCycleSpec {
    let g2 = C * C / 2.0;
    let udot = TAU * g2 / -P.ln();
    StirCycleSpec {
        second: Valves::new(C / 2.0, C / 2.0),
        valve_ramp: 50.0,
        ..StirCycleSpec::peristaltic(0.0, 3.0, udot, C, 0.0, dwell)
    }
}

fn dt(s: &StirCycleSpec) -> f64 {
    s.timeline().period / 32768.0
}

#[test]
fn one_cycle_against_two_crossing_model() {
    let s = spec(3.0);
    let a = analyze_cycle(&s, Stepping::Fixed(dt(&s))).unwrap();
    assert!((a.params.p_left - P).abs() < 1e-12 && (a.params.p_right - P).abs() < 1e-12);
    assert_eq!((a.params.lambda_left, a.params.lambda_right), (1.0, 0.5));
    assert!(
        (a.counting.mean - a.analytic.mean).abs() <= 3.0 * P,
        "mean {}",
        a.counting.mean
    );
    assert!(a.leakage < 1e-5, "leakage {}", a.leakage);
    assert!(a.counting.final_unitary.defect() < 1e-10);
    // Var follows |λ̃◁√P + e^{iφ̃}λ▷√P|² = P/4 here, since λ̃◁ = 0
    assert!((a.analytic.variance - P / 4.0).abs() < 1e-15);
    assert!(
        (a.counting.variance - a.analytic.variance).abs() < 0.35 * a.analytic.variance,
        "var {}",
        a.counting.variance
    );
    // the adiabatic crossing matrices miss the Stokes phase; with it the
    // composition reproduces the simulated block
    assert!(a.fidelity_with_stokes > 0.999, "{}", a.fidelity_with_stokes);
    assert!(a.fidelity_with_stokes > a.fidelity);
    let stokes = stokes_phase(-P.ln() / TAU);
    assert!(
        (a.fidelity - (2.0 * stokes).cos().powi(2)).abs() < 0.02,
        "{} vs {}",
        a.fidelity,
        (2.0 * stokes).cos().powi(2)
    );
}

#[test]
fn escape_probability_interferes() {
    // scanning the dwell over one period of φ̃ moves the escape probability
    // between near 0 and near 4P
    let s0 = spec(0.0);
    let a0 = analyze_cycle(&s0, Stepping::Fixed(dt(&s0))).unwrap();
    let gap = 2.0; // E+ − E- at u = u_max = 3 with valves closed is 2
    let mut lo = f64::MAX;
    let mut hi: f64 = 0.0;
    for k in 0..8 {
        let s = spec(k as f64 * TAU / (8.0 * gap));
        let a = analyze_cycle(&s, Stepping::Fixed(dt(&s))).unwrap();
        let expected = (a0.params.phi_tilde + k as f64 * TAU / 8.0 - a.params.phi_tilde).rem_euclid(TAU);
        assert!(
            expected.min(TAU - expected) < 1e-6,
            "φ̃ should advance linearly with dwell"
        );
        lo = lo.min(a.escape_simulated);
        hi = hi.max(a.escape_simulated);
    }
    assert!(lo < 0.4 * P, "min escape {lo}");
    assert!(hi > 3.0 * P, "max escape {hi}");
}

/// `(|0⟩, |E₊⟩)` block of the counting operator of the second half, taken as
/// the full cycle minus a cycle whose second-half valves stay closed.
fn second_half_block(s: &StirCycleSpec, full: &CMatrix) -> CMatrix {
    let closed = StirCycleSpec {
        second: Valves::new(0.0, 0.0),
        ..*s
    };
    let first = accumulate_counting(&stir_cycle_protocol(&closed).unwrap(), dt(s)).unwrap();
    let q2 = full - first.q_op.matrix();
    let (o, z, r) = (
        C64::new(1.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
    );
    let basis = CMatrix::from_row_slice(3, 2, &[o, z, z, r, z, r]);
    basis.adjoint() * q2 * &basis
}

#[test]
fn second_half_counting_matches_delta_terms() {
    // pointwise, δq is shifted by the Stokes phases the adiabatic crossing
    // matrices drop; averaged over φ̃ the cos φ̃ terms cancel and only
    // ⟨δp⟩ = 2P◁ + P▷ and ⟨|δq|²⟩ = 4P◁ + P▷ remain
    let scan = 16;
    let (mut diag, mut off2) = (0.0, 0.0);
    for k in 0..scan {
        let s = spec(k as f64 * TAU / (2.0 * scan as f64));
        let a = analyze_cycle(&s, Stepping::Fixed(dt(&s))).unwrap();
        let block = second_half_block(&s, a.counting.q_op.matrix());
        let (dp, _) = cycle_delta_terms(&a.params);
        let lr = a.params.lambda_right;
        assert!(
            (block[(0, 0)].re + lr * (1.0 - dp)).abs() < 3.0 * P.powf(1.5),
            "k {k}: {} vs {}",
            block[(0, 0)].re,
            -lr * (1.0 - dp)
        );
        diag += block[(0, 0)].re / scan as f64;
        off2 += block[(0, 1)].norm_sqr() / scan as f64;
    }
    let expected_diag = -0.5 * (1.0 - 3.0 * P);
    assert!(
        (diag - expected_diag).abs() < 3.0 * P.powf(1.5),
        "{diag} vs {expected_diag}"
    );
    // entries agree to O(P^{3/2}); the rms of λ▷δq is 0.5·√(5P)
    let expected_rms = 0.5 * (5.0 * P).sqrt();
    assert!(
        (off2.sqrt() - expected_rms).abs() < 3.0 * P.powf(1.5),
        "{} vs {expected_rms}",
        off2.sqrt()
    );
}

#[test]
fn converged_stepping_agrees_with_fixed() {
    let s = spec(1.0);
    let fixed = analyze_cycle(&s, Stepping::Fixed(dt(&s))).unwrap();
    let conv = analyze_cycle(&s, Stepping::Converged(Default::default())).unwrap();
    assert!((fixed.counting.mean - conv.counting.mean).abs() < 1e-5);
    assert!((fixed.counting.variance - conv.counting.variance).abs() < 1e-5);
    assert!(conv.counting.convergence_estimate.unwrap() < 1e-6);
}

#[test]
fn lower_level_crossing_is_unsupported() {
    let s = StirCycleSpec {
        u_min: -1.5,
        ..spec(0.0)
    };
    assert!(matches!(
        analyze_cycle(&s, Stepping::Fixed(1.0)),
        Err(qstir_core::Error::Unsupported(_))
    ));
}

#[test]
fn fidelity_bounds() {
    let id = CMatrix::identity(2, 2);
    assert_eq!(gate_fidelity(&id, &id), 1.0);
    let x = CMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0].map(|v| C64::new(v, 0.0)));
    assert_eq!(gate_fidelity(&id, &x), 0.0);
    assert!((stokes_phase(0.0) - PI / 4.0).abs() < 1e-15);
}
