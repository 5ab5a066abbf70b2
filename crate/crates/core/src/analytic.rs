//! Closed-form counting statistics: Landau–Zener crossings, single and split
//! paths, and the two-crossing stirring cycle.

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, HermitianOperator, UnitaryMatrix, C64, I, ONE, ZERO};
use crate::tolerances;

fn check_probability(name: &'static str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(name, format!("{p} is not in [0, 1]")));
    }
    Ok(())
}

/// `exp(−2π c²/u̇)`.
pub fn lz_probability(c: f64, udot: f64) -> Result<f64> {
    if !(udot > 0.0) || !udot.is_finite() {
        return Err(Error::invalid("udot", format!("must be positive, got {udot}")));
    }
    Ok((-2.0 * std::f64::consts::PI * c * c / udot).exp())
}

/// Counting operator of a single-path transfer with probability `p`, in the
/// site basis `(|0⟩, |1⟩)`.
pub fn single_path_counting_matrix(p: f64, phi: f64) -> Result<HermitianOperator> {
    check_probability("p", p)?;
    let off = I * ((1.0 - p) * p).sqrt() * C64::from_polar(1.0, phi);
    let m = CMatrix::from_row_slice(2, 2, &[C64::new(p, 0.0), off, off.conj(), C64::new(-p, 0.0)]);
    HermitianOperator::new(m)
}

/// Eigenvalue distribution of the single-path counting operator for `ψ = |0⟩`.
///
/// Outcomes `±√p` with `P(+√p) = (1 + √p)/2`, so that the mean is `+p`.
/// Outcomes of zero probability are dropped and coincident outcomes merged.
pub fn naive_eigendistribution(p: f64) -> Result<Vec<(f64, f64)>> {
    check_probability("p", p)?;
    let s = p.sqrt();
    if s == 0.0 {
        return Ok(vec![(0.0, 1.0)]);
    }
    Ok([(s, 0.5 * (1.0 + s)), (-s, 0.5 * (1.0 - s))]
        .into_iter()
        .filter(|&(_, w)| w > 0.0)
        .collect())
}

/// `k`-th moment of the classical two-outcome distribution (`Q = 1` with
/// probability `p`, else `0`): always `p`.
pub fn classical_moments(p: f64, k: u32) -> Result<f64> {
    check_probability("p", p)?;
    if k == 0 {
        return Err(Error::invalid("k", "moments start at k = 1"));
    }
    Ok(p)
}

pub fn classical_variance(p: f64) -> Result<f64> {
    check_probability("p", p)?;
    Ok((1.0 - p) * p)
}

/// Coherent `c1/(c1 + c2)` and stochastic `c1²/(c1² + c2²)` splitting ratios.
pub fn splitting_ratios(c1: f64, c2: f64) -> Result<(f64, f64)> {
    if c1 == 0.0 && c2 == 0.0 {
        return Err(Error::invalid("c1, c2", "both couplings are zero"));
    }
    if !(c1.is_finite() && c2.is_finite()) {
        return Err(Error::invalid("c1, c2", "non-finite coupling"));
    }
    let sum = c1 + c2;
    if sum.abs() <= 4.0 * f64::EPSILON * (c1.abs() + c2.abs()) {
        return Err(Error::DivergentSplitting);
    }
    Ok((c1 / sum, c1 * c1 / (c1 * c1 + c2 * c2)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoublePathMoments {
    pub mean: f64,
    pub var_coherent: f64,
    pub var_stochastic: f64,
}

/// Moments of `Q` on one branch of a double-path crossing: coherent splitting
/// with ratio `lambda` against random partitioning with ratio `lambda_stochastic`.
pub fn double_path_moments(lambda: f64, p: f64, lambda_stochastic: f64) -> Result<DoublePathMoments> {
    check_probability("p", p)?;
    check_probability("lambda_stochastic", lambda_stochastic)?;
    if !lambda.is_finite() {
        return Err(Error::invalid("lambda", "must be finite"));
    }
    let ls = lambda_stochastic * p;
    Ok(DoublePathMoments {
        mean: lambda * p,
        var_coherent: lambda * lambda * (1.0 - p) * p,
        var_stochastic: (1.0 - ls) * ls,
    })
}

/// Adiabatic-basis transfer matrix of one crossing with transition probability `P`.
pub fn u_lz_matrix(p_lz: f64) -> Result<UnitaryMatrix> {
    check_probability("P", p_lz)?;
    let a = C64::new(p_lz.sqrt(), 0.0);
    let b = C64::new((1.0 - p_lz).sqrt(), 0.0);
    UnitaryMatrix::new(CMatrix::from_row_slice(2, 2, &[a, -b, b, a]))
}

/// Inputs of the two-crossing cycle formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleParams {
    pub lambda_left: f64,
    pub lambda_right: f64,
    pub p_left: f64,
    pub p_right: f64,
    /// `φ₊ − φ₋` accumulated between the crossings.
    pub phi_tilde: f64,
}

impl CycleParams {
    pub fn new(lambda_left: f64, lambda_right: f64, p_left: f64, p_right: f64, phi_tilde: f64) -> Result<Self> {
        check_probability("P_left", p_left)?;
        check_probability("P_right", p_right)?;
        if !(lambda_left.is_finite() && lambda_right.is_finite() && phi_tilde.is_finite()) {
            return Err(Error::invalid("cycle", "non-finite parameter"));
        }
        Ok(Self {
            lambda_left,
            lambda_right,
            p_left,
            p_right,
            phi_tilde,
        })
    }
}

fn exchange(m: &CMatrix) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[m[(1, 1)], m[(1, 0)], m[(0, 1)], m[(0, 0)]])
}

/// One-period evolution `[T U(P▷) T] diag(e^{−iφ₊}, e^{−iφ₋}) U(P◁)` in the
/// adiabatic two-level basis, `T` the level exchange. The global phase is
/// chosen so that entry (0,0) is real and non-negative.
pub fn cycle_unitary(cp: &CycleParams) -> Result<UnitaryMatrix> {
    let left = u_lz_matrix(cp.p_left)?;
    let right = u_lz_matrix(cp.p_right)?;
    let half = 0.5 * cp.phi_tilde;
    let phases = CMatrix::from_row_slice(
        2,
        2,
        &[C64::from_polar(1.0, -half), ZERO, ZERO, C64::from_polar(1.0, half)],
    );
    let m = exchange(right.matrix()) * phases * left.matrix();
    UnitaryMatrix::new(fix_global_phase(m))
}

/// Multiplies by the phase that makes the first non-negligible entry of the
/// first column real and positive.
pub(crate) fn fix_global_phase(mut m: CMatrix) -> CMatrix {
    let pivot = (0..m.nrows()).map(|r| m[(r, 0)]).find(|z| z.norm() > 1e-14);
    if let Some(z) = pivot {
        let g = z.conj() / z.norm();
        m *= g;
    }
    m
}

/// Probability not to return to the initial site after a cycle.
pub fn cycle_escape_probability(cp: &CycleParams) -> f64 {
    (cp.p_left.sqrt() * ONE - C64::from_polar(cp.p_right.sqrt(), cp.phi_tilde)).norm_sqr()
}

/// Leading-order corrections `(δp, δq)` of the second-half counting operator.
pub fn cycle_delta_terms(cp: &CycleParams) -> (f64, C64) {
    let (a, b) = (cp.p_left.sqrt(), cp.p_right.sqrt());
    let dp = 2.0 * cp.p_left + cp.p_right - 2.0 * a * b * cp.phi_tilde.cos();
    let dq = C64::new(-2.0 * a, 0.0) + C64::from_polar(b, cp.phi_tilde);
    (dp, dq)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleMoments {
    /// `λ◁ − λ▷`, up to corrections of order `P`.
    pub mean: f64,
    /// `|λ̃◁√P◁ + e^{iφ̃} λ▷√P▷|²` with `λ̃◁ = λ◁ − 2λ▷`.
    pub variance: f64,
    /// The same with `λ̃◁` replaced by `λ◁`.
    pub variance_adiabatic: f64,
    /// Set when a transition probability exceeds the leading-order range.
    pub beyond_leading_order: bool,
}

pub fn cycle_counting_moments(cp: &CycleParams) -> CycleMoments {
    let (a, b) = (cp.p_left.sqrt(), cp.p_right.sqrt());
    let second = C64::from_polar(cp.lambda_right * b, cp.phi_tilde);
    let lambda_tilde = cp.lambda_left - 2.0 * cp.lambda_right;
    let beyond = cp.p_left.max(cp.p_right) > tolerances::LEADING_ORDER_WARN;
    if beyond {
        log::warn!(
            "transition probabilities ({}, {}) exceed {}; leading-order cycle formulas are unreliable",
            cp.p_left,
            cp.p_right,
            tolerances::LEADING_ORDER_WARN
        );
    }
    CycleMoments {
        mean: cp.lambda_left - cp.lambda_right,
        variance: (lambda_tilde * a * ONE + second).norm_sqr(),
        variance_adiabatic: (cp.lambda_left * a * ONE + second).norm_sqr(),
        beyond_leading_order: beyond,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eigh, max_abs_diff, operator_moments, StateVector};

    #[test]
    fn lz_values() {
        assert_eq!(lz_probability(0.0, 0.3).unwrap(), 1.0);
        let c = (1.0 / (2.0 * std::f64::consts::PI)).sqrt();
        assert!((lz_probability(c, 1.0).unwrap() - 0.367_879_441_171_442_3).abs() < 1e-15);
        assert!((lz_probability(0.1, 0.02).unwrap() - (-std::f64::consts::PI).exp()).abs() < 1e-15);
        assert!(lz_probability(0.1, 0.0).is_err());
    }

    #[test]
    fn counting_matrix_limits() {
        let q = single_path_counting_matrix(1.0, 0.4).unwrap();
        assert!(max_abs_diff(q.matrix(), HermitianOperator::diagonal(&[1.0, -1.0]).matrix()) < 1e-15);
        let q = single_path_counting_matrix(0.0, 0.4).unwrap();
        assert!(max_abs_diff(q.matrix(), HermitianOperator::zeros(2).matrix()) < 1e-15);
        let s = eigh(&single_path_counting_matrix(0.36, 1.1).unwrap());
        assert!((s.eigenvalues[0] + 0.6).abs() < 1e-14 && (s.eigenvalues[1] - 0.6).abs() < 1e-14);
        assert!(single_path_counting_matrix(1.2, 0.0).is_err());
    }

    #[test]
    fn eigendistribution_quarter() {
        let d = naive_eigendistribution(0.25).unwrap();
        assert_eq!(d, vec![(0.5, 0.75), (-0.5, 0.25)]);
        let mean: f64 = d.iter().map(|(q, w)| q * w).sum();
        let second: f64 = d.iter().map(|(q, w)| q * q * w).sum();
        // ⟨0|Q|0⟩ and ⟨0|Q²|0⟩ of the counting matrix
        let q = single_path_counting_matrix(0.25, 0.0).unwrap();
        let m = operator_moments(&q, &StateVector::basis(2, 0).unwrap()).unwrap();
        assert!((mean - m.mean).abs() < 1e-15 && (second - m.second).abs() < 1e-15);
        assert!((second - mean * mean - 3.0 / 16.0).abs() < 1e-15);
        assert_eq!(naive_eigendistribution(0.0).unwrap(), vec![(0.0, 1.0)]);
        assert_eq!(naive_eigendistribution(1.0).unwrap(), vec![(1.0, 1.0)]);
    }

    #[test]
    fn classical() {
        assert_eq!(classical_moments(0.3, 5).unwrap(), 0.3);
        assert!((classical_variance(0.3).unwrap() - 0.21).abs() < 1e-15);
        assert!(classical_moments(0.3, 0).is_err());
        assert!(classical_moments(-0.1, 1).is_err());
    }

    #[test]
    fn splitting() {
        assert_eq!(splitting_ratios(0.2, 0.0).unwrap(), (1.0, 1.0));
        assert_eq!(splitting_ratios(0.05, 0.05).unwrap(), (0.5, 0.5));
        let (l, s) = splitting_ratios(0.07, -0.06).unwrap();
        assert!((l - 7.0).abs() < 1e-12);
        assert!((s - 49.0 / 85.0).abs() < 1e-15);
        assert_eq!(splitting_ratios(0.07, -0.07), Err(Error::DivergentSplitting));
        assert!(splitting_ratios(0.0, 0.0).is_err());
    }

    #[test]
    fn double_path_cases() {
        let m = double_path_moments(0.5, 1.0, 0.5).unwrap();
        assert_eq!((m.mean, m.var_coherent, m.var_stochastic), (0.5, 0.0, 0.25));
        let m = double_path_moments(7.0, 0.9, 49.0 / 85.0).unwrap();
        assert!((m.mean - 6.3).abs() < 1e-12);
        assert!((m.var_coherent - 4.41).abs() < 1e-12);
    }

    #[test]
    fn u_lz_limits() {
        assert!(max_abs_diff(u_lz_matrix(1.0).unwrap().matrix(), &CMatrix::identity(2, 2)) < 1e-15);
        let u0 = u_lz_matrix(0.0).unwrap();
        let expected = CMatrix::from_row_slice(2, 2, &[ZERO, -ONE, ONE, ZERO]);
        assert!(max_abs_diff(u0.matrix(), &expected) < 1e-15);
        assert!(u_lz_matrix(0.37).unwrap().defect() < 1e-15);
    }

    #[test]
    fn cycle_unitary_limits() {
        let cp = CycleParams::new(1.0, 0.0, 0.0, 0.0, 0.0).unwrap();
        assert!(max_abs_diff(cycle_unitary(&cp).unwrap().matrix(), &CMatrix::identity(2, 2)) < 1e-15);
        let cp = CycleParams::new(1.0, 0.0, 1.0, 1.0, 0.8).unwrap();
        let u = cycle_unitary(&cp).unwrap();
        assert!(u.get(0, 1).norm() < 1e-15 && u.get(1, 0).norm() < 1e-15);
        // relative phase of the diagonal is φ̃ in the rotated frame
        let rel = (u.get(1, 1) / u.get(0, 0)).arg();
        assert!((rel - 0.8).abs() < 1e-14);
    }

    #[test]
    fn escape_examples() {
        let p = 0.03;
        let cp = CycleParams::new(1.0, 0.5, p, p, 0.0).unwrap();
        assert!(cycle_escape_probability(&cp) < 1e-17);
        let cp = CycleParams {
            phi_tilde: std::f64::consts::PI,
            ..cp
        };
        assert!((cycle_escape_probability(&cp) - 4.0 * p).abs() < 1e-15);
        let cp = CycleParams { p_right: 0.0, ..cp };
        assert!((cycle_escape_probability(&cp) - p).abs() < 1e-15);
    }

    #[test]
    fn delta_terms() {
        let cp = CycleParams::new(1.0, 1.0, 0.0, 0.0, 0.3).unwrap();
        assert_eq!(cycle_delta_terms(&cp), (0.0, C64::new(0.0, 0.0)));
        let cp = CycleParams::new(1.0, 1.0, 0.0, 0.04, 0.3).unwrap();
        let (dp, dq) = cycle_delta_terms(&cp);
        assert!((dp - 0.04).abs() < 1e-15);
        assert!((dq - C64::from_polar(0.2, 0.3)).norm() < 1e-15);
    }

    #[test]
    fn cycle_moments_examples() {
        let m = cycle_counting_moments(&CycleParams::new(1.0, 0.0, 0.02, 0.03, 1.0).unwrap());
        assert_eq!(m.mean, 1.0);
        assert!((m.variance - 0.02).abs() < 1e-15);
        let m = cycle_counting_moments(&CycleParams::new(0.4, 0.4, 0.02, 0.03, 1.0).unwrap());
        assert_eq!(m.mean, 0.0);
        let p = 0.04;
        let cp = CycleParams::new(1.0, 0.5, p, p, 0.0).unwrap();
        assert!(cycle_escape_probability(&cp) < 1e-17);
        let m = cycle_counting_moments(&cp);
        assert!((m.variance - p / 4.0).abs() < 1e-15);
        assert!(!m.beyond_leading_order);
        assert!(cycle_counting_moments(&CycleParams { p_left: 0.2, ..cp }).beyond_leading_order);
    }
}
