use proptest::prelude::*;
use qstir_core::linalg::{max_abs_diff, CMatrix, HermitianOperator, C64, I};
use qstir_core::model::*;

fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

#[test]
fn ring_is_translation_invariant() {
    for n in [3, 4, 7, 16] {
        let h = ring_protocol(n, 0.9, 1.0).unwrap().hamiltonian_at(0.3).unwrap();
        // D|x⟩ = |x+1⟩
        let d = CMatrix::from_fn(n, n, |r, c| {
            if r == (c + 1) % n {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let comm = commutator(h.matrix(), &d);
        assert!(comm.iter().all(|z| z.norm() < 1e-12), "N = {n}");
    }
}

#[test]
fn current_is_rate_of_filling_the_far_site() {
    // c2 = 0: only the (0,1) bond feeds site 1 from site 0
    let spec = StirCycleSpec::peristaltic(-0.4, 2.5, 0.05, 0.07, 0.0, 1.0);
    let p = stir_cycle_protocol(&spec).unwrap();
    let n0 = HermitianOperator::projector(3, &[0]).unwrap();
    for t in [1.0, 20.0, 45.0] {
        let h = p.hamiltonian_at(t).unwrap();
        let cur = p.current_operator_at(t).unwrap();
        // dN0/dt = i[H, N0] = −I
        let rate = commutator(h.matrix(), n0.matrix()) * I;
        assert!(max_abs_diff(&rate, &(-cur.matrix())) < 1e-12, "t = {t}");
    }
}

#[test]
fn two_site_heisenberg_consistency() {
    let p = two_site_lz_protocol(0.13, 0.05, 3.0).unwrap();
    let n1 = HermitianOperator::projector(2, &[1]).unwrap();
    for t in [p.t_start(), 0.0, 17.0] {
        let h = p.hamiltonian_at(t).unwrap();
        let rate = commutator(h.matrix(), n1.matrix()) * I;
        assert!(max_abs_diff(&rate, p.current_operator_at(t).unwrap().matrix()) < 1e-12);
    }
}

#[test]
fn three_site_closed_valves() {
    let p = DrivingProtocol::three_site(
        Schedule::constant(0.6, 0.0, 1.0),
        Schedule::constant(0.0, 0.0, 1.0),
        Schedule::constant(0.0, 0.0, 1.0),
        Bond::new(0, 1),
    )
    .unwrap();
    let h = p.hamiltonian_at(0.5).unwrap();
    let expected = HermitianOperator::from_real(3, &[0.6, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0]).unwrap();
    assert_eq!(h, expected);
    assert_eq!(p.current_operator_at(0.5).unwrap(), HermitianOperator::zeros(3));
}

#[test]
fn invalid_bonds_rejected() {
    let p = two_site_lz_protocol(0.1, 0.1, 1.0).unwrap();
    assert!(p.clone().with_bond(Bond::new(0, 2)).is_err());
    assert!(p.with_bond(Bond::new(1, 1)).is_err());
}

proptest! {
    #[test]
    fn current_traceless_hermitian(c1 in -0.5f64..0.5, c2 in -0.5f64..0.5, t_frac in 0.0f64..1.0, bond in 0usize..3) {
        let spec = StirCycleSpec {
            first: Valves::new(c1, c2),
            second: Valves::new(c2, c1),
            valve_ramp: 3.0,
            ..StirCycleSpec::peristaltic(0.0, 2.0, 0.1, c1, c2, 0.5)
        };
        let bonds = [Bond::new(0, 1), Bond::new(0, 2), Bond::new(2, 1)];
        let p = stir_cycle_protocol(&spec).unwrap().with_bond(bonds[bond]).unwrap();
        let t = p.t_start() + t_frac * p.duration();
        let cur = p.current_operator_at(t).unwrap();
        prop_assert!(cur.trace().abs() < 1e-15);
        let m = cur.matrix();
        prop_assert!(max_abs_diff(m, &m.adjoint()) == 0.0);
        let h = p.hamiltonian_at(t).unwrap();
        prop_assert!(max_abs_diff(h.matrix(), &h.matrix().adjoint()) == 0.0);
    }

    #[test]
    fn stir_schedules_continuous(u_min in -0.9f64..0.9, span in 0.2f64..4.0, udot in 0.01f64..1.0, dwell in 0.0f64..20.0, ramp in 0.0f64..10.0) {
        let spec = StirCycleSpec { valve_ramp: ramp, ..StirCycleSpec::peristaltic(u_min, 1.0 + span, udot, 0.1, 0.1, dwell) };
        let p = stir_cycle_protocol(&spec).unwrap();
        for (t, left, right) in p.potential().joins() {
            prop_assert!((left - right).abs() < 1e-12, "jump in u at {}", t);
        }
        let expected = 2.0 * (1.0 + span - u_min) / udot + dwell + 4.0 * ramp;
        prop_assert!((p.duration() - expected).abs() < 1e-9 * expected);
        let (t1, t2) = spec.timeline().crossings;
        prop_assert!((p.potential().value(t1) - 1.0).abs() < 1e-9);
        prop_assert!((p.potential().value(t2) - 1.0).abs() < 1e-9);
    }
}
