//! Long-time counting statistics: DC/oscillatory split of the current, the
//! clean ring, and the counting/spreading/autocorrelation identities.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{operator_moments, CMatrix, HermitianOperator, Spectrum, StateVector, UnitaryMatrix, C64, I};
use crate::model::{ring_protocol, Bond, DrivingProtocol};
use crate::propagate::accumulate_counting;

/// Clean ring `H = −c(D + D⁻¹)` with `N` sites.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingModel {
    sites: usize,
    c: f64,
}

impl RingModel {
    pub fn new(sites: usize, c: f64) -> Result<Self> {
        if sites < 3 {
            return Err(Error::invalid("N", format!("ring needs at least 3 sites, got {sites}")));
        }
        if !c.is_finite() || c == 0.0 {
            return Err(Error::invalid("c", format!("must be finite and nonzero, got {c}")));
        }
        Ok(Self { sites, c })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn wavenumber(&self, n: usize) -> f64 {
        2.0 * PI * n as f64 / self.sites as f64
    }

    pub fn energy(&self, n: usize) -> f64 {
        -2.0 * self.c * self.wavenumber(n).cos()
    }

    pub fn velocity(&self, n: usize) -> f64 {
        2.0 * self.c * self.wavenumber(n).sin()
    }

    /// Index of `−n` (mod `N`).
    pub fn partner(&self, n: usize) -> usize {
        (self.sites - n % self.sites) % self.sites
    }

    /// Static protocol over `[0, duration]` counted on bond (0,1).
    pub fn protocol(&self, duration: f64) -> Result<DrivingProtocol> {
        ring_protocol(self.sites, self.c, duration)
    }

    pub fn hamiltonian(&self) -> HermitianOperator {
        self.protocol(1.0)
            .and_then(|p| p.hamiltonian_at(0.0))
            .expect("ring model parameters were validated")
    }

    /// Bond current through (0,1) in the site basis.
    pub fn bond_current(&self) -> HermitianOperator {
        self.protocol(1.0)
            .and_then(|p| p.current_operator_at(0.0))
            .expect("ring model parameters were validated")
    }

    /// `v = Σ_x I_{x→x+1}`, the sum of all bond currents, in the site basis.
    pub fn velocity_operator(&self) -> HermitianOperator {
        let p = self.protocol(1.0).expect("ring model parameters were validated");
        let n = self.sites;
        let mut v = CMatrix::zeros(n, n);
        for x in 0..n {
            v += p.bond_current(Bond::new(x, (x + 1) % n), 0.0).matrix();
        }
        HermitianOperator::new(v).expect("sum of Hermitian operators")
    }

    /// Plane wave `⟨x|n⟩ = e^{−i k_n x}/√N`.
    pub fn momentum_state(&self, n: usize) -> Result<StateVector> {
        if n >= self.sites {
            return Err(Error::invalid("n", format!("{n} outside 0..{}", self.sites)));
        }
        StateVector::new(self.momentum_column(n))
    }

    fn momentum_column(&self, n: usize) -> crate::linalg::CVector {
        let norm = (self.sites as f64).sqrt().recip();
        let k = self.wavenumber(n);
        crate::linalg::CVector::from_fn(self.sites, |x, _| C64::from_polar(norm, -k * x as f64))
    }
}

/// Eigenbasis of the ring labelled by momentum: column `n` is the plane wave
/// with `k_n = 2πn/N` and `eigenvalues[n] = E_n`.
pub fn ring_spectrum(m: &RingModel) -> Spectrum {
    let n = m.sites();
    let mut v = CMatrix::zeros(n, n);
    for j in 0..n {
        v.set_column(j, &m.momentum_column(j));
    }
    Spectrum {
        eigenvalues: (0..n).map(|j| m.energy(j)).collect(),
        eigenvectors: UnitaryMatrix::from_trusted(v),
    }
}

/// `I_nm = −i(c/N)(e^{ik_n} − e^{−ik_m})` for the (0,1) bond current.
pub fn bond_current_elements(m: &RingModel) -> CMatrix {
    let n = m.sites();
    let scale = m.c() / n as f64;
    CMatrix::from_fn(n, n, |a, b| {
        -I * scale * (C64::from_polar(1.0, m.wavenumber(a)) - C64::from_polar(1.0, -m.wavenumber(b)))
    })
}

/// One matrix element of the oscillating part of an operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatingElement {
    pub n: usize,
    pub m: usize,
    pub value: C64,
    /// `E_n − E_m` (wrapped into the Floquet zone for quasi-energies).
    pub omega: f64,
}

/// An operator written in an eigenbasis as `Ī + Σ |n⟩ I_nm e^{iω t} ⟨m|`.
#[derive(Debug, Clone, PartialEq)]
pub struct DcDecomposition {
    /// Elements between degenerate levels, in the eigenbasis.
    pub i_bar: HermitianOperator,
    pub oscillating: Vec<OscillatingElement>,
}

impl DcDecomposition {
    /// Builds the split from eigenbasis elements and pairwise level differences.
    pub(crate) fn from_elements(elements: &CMatrix, omega: impl Fn(usize, usize) -> f64, tol: f64) -> Result<Self> {
        let n = elements.nrows();
        let mut bar = CMatrix::zeros(n, n);
        let mut oscillating = Vec::new();
        for a in 0..n {
            for b in 0..n {
                let w = omega(a, b);
                if w.abs() <= tol {
                    bar[(a, b)] = elements[(a, b)];
                } else {
                    oscillating.push(OscillatingElement {
                        n: a,
                        m: b,
                        value: elements[(a, b)],
                        omega: w,
                    });
                }
            }
        }
        Ok(Self {
            i_bar: HermitianOperator::hermitian_part(&bar)?,
            oscillating,
        })
    }

    /// `Ī` plus the oscillating elements at `t = 0`.
    pub fn reassemble(&self) -> CMatrix {
        let mut m = self.i_bar.matrix().clone();
        for e in &self.oscillating {
            m[(e.n, e.m)] += e.value;
        }
        m
    }

    pub fn oscillating_from(&self, n: usize) -> impl Iterator<Item = &OscillatingElement> {
        self.oscillating.iter().filter(move |e| e.n == n)
    }
}

/// Splits `op` (site basis) into its DC part and oscillating elements in the
/// eigenbasis of `spectrum`. Levels count as degenerate when
/// `|E_n − E_m| ≤ tol·max(1, |E_n|)`.
pub fn dc_decomposition(op: &HermitianOperator, spectrum: &Spectrum, degeneracy_tol: f64) -> Result<DcDecomposition> {
    if !(degeneracy_tol > 0.0) {
        return Err(Error::invalid(
            "degeneracy_tol",
            format!("must be positive, got {degeneracy_tol}"),
        ));
    }
    if op.dim() != spectrum.dim() {
        return Err(Error::DimensionMismatch {
            expected: spectrum.dim(),
            found: op.dim(),
        });
    }
    let elements = spectrum.to_eigenbasis(op.matrix());
    let e = &spectrum.eigenvalues;
    let omega = |a: usize, b: usize| {
        let d = e[a] - e[b];
        if d.abs() <= degeneracy_tol * e[a].abs().max(1.0) {
            0.0
        } else {
            d
        }
    };
    DcDecomposition::from_elements(&elements, omega, 0.0)
}

/// `⟨Q⟩(t)` and `Var(Q)(t)` for a prepared momentum state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariancePoint {
    pub t: f64,
    pub mean: f64,
    pub variance: f64,
}

fn ring_decomposition(m: &RingModel) -> Result<DcDecomposition> {
    dc_decomposition(&m.bond_current(), &ring_spectrum(m), crate::tolerances::DEGENERACY)
}

/// `Var(Q)(t) = Σ_m 2|I_nm|²/ω² (1 − cos ωt)` over non-degenerate `m`, with
/// `⟨Q⟩(t) = t v_n/N`.
pub fn variance_time_series(m: &RingModel, n: usize, times: &[f64]) -> Result<Vec<VariancePoint>> {
    if n >= m.sites() {
        return Err(Error::invalid("n", format!("{n} outside 0..{}", m.sites())));
    }
    let dc = ring_decomposition(m)?;
    Ok(variance_series_from(&dc, n, times))
}

/// Evaluates the variance series of level `n` from any decomposition, e.g. a
/// truncated one.
pub fn variance_series_from(dc: &DcDecomposition, n: usize, times: &[f64]) -> Vec<VariancePoint> {
    let slope = dc.i_bar.get(n, n).re;
    times
        .iter()
        .map(|&t| {
            let variance = dc
                .oscillating_from(n)
                .map(|e| 2.0 * e.value.norm_sqr() / (e.omega * e.omega) * (1.0 - (e.omega * t).cos()))
                .sum();
            VariancePoint {
                t,
                mean: slope * t,
                variance,
            }
        })
        .collect()
}

/// Time average of [`variance_time_series`]: `Σ_m 2|I_nm|²/(E_n − E_m)²`.
pub fn time_averaged_variance(m: &RingModel, n: usize) -> Result<f64> {
    if n >= m.sites() {
        return Err(Error::invalid("n", format!("{n} outside 0..{}", m.sites())));
    }
    let dc = ring_decomposition(m)?;
    Ok(dc
        .oscillating_from(n)
        .map(|e| 2.0 * e.value.norm_sqr() / (e.omega * e.omega))
        .sum())
}

/// Counting through one bond against the displacement of the spatially
/// averaged current `v/N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpreadingCheck {
    pub spread_mean: f64,
    pub spread_variance: f64,
    pub direct_mean: f64,
    pub direct_variance: f64,
}

/// Compares `Q_spread = t·v/N` with the bond counting operator at time `t`.
/// The means agree for any state because `v` commutes with `H`; the variances
/// generally do not.
pub fn spreading_counting_check(m: &RingModel, psi0: &StateVector, t: f64) -> Result<SpreadingCheck> {
    if psi0.dim() != m.sites() {
        return Err(Error::DimensionMismatch {
            expected: m.sites(),
            found: psi0.dim(),
        });
    }
    let spread = m.velocity_operator().scaled(t / m.sites() as f64);
    let s = operator_moments(&spread, psi0)?;
    let p = m.protocol(t)?;
    // the ring is static, so a single exact step suffices
    let q = accumulate_counting(&p, t)?;
    let d = operator_moments(&q.q_op, psi0)?;
    Ok(SpreadingCheck {
        spread_mean: s.mean,
        spread_variance: s.variance,
        direct_mean: d.mean,
        direct_variance: d.variance,
    })
}
