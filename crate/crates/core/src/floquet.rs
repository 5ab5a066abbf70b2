//! Periodically driven systems: quasi-energies of the one-period evolution
//! operator and the DC part of the one-period counting operator.

use std::f64::consts::PI;

use nalgebra::Schur;

use crate::error::{Error, Result};
use crate::linalg::{max_abs_diff, CMatrix, HermitianOperator, UnitaryMatrix, C64};
use crate::ring::DcDecomposition;
use crate::tolerances;

/// Eigendecomposition of a one-period evolution operator.
#[derive(Debug, Clone)]
pub struct FloquetSpectrum {
    pub period: f64,
    /// `−arg(λ)/T` on the principal branch, in `(−π/T, π/T]`.
    pub quasi_energies: Vec<f64>,
    pub vectors: UnitaryMatrix,
}

impl FloquetSpectrum {
    pub fn dim(&self) -> usize {
        self.quasi_energies.len()
    }

    /// `ε_n − ε_m` wrapped into `(−π/T, π/T]`.
    pub fn wrapped_difference(&self, n: usize, m: usize) -> f64 {
        let zone = 2.0 * PI / self.period;
        let d = self.quasi_energies[n] - self.quasi_energies[m];
        let w = d - zone * (d / zone).round();
        if w <= -0.5 * zone {
            w + zone
        } else {
            w
        }
    }

    pub fn to_eigenbasis(&self, a: &CMatrix) -> CMatrix {
        let v = self.vectors.matrix();
        v.adjoint() * a * v
    }
}

/// Diagonalizes a unitary through its complex Schur form, which is diagonal for
/// normal matrices; the Schur vectors stay orthonormal inside degenerate blocks.
pub fn floquet_spectrum(u: &UnitaryMatrix, period: f64) -> Result<FloquetSpectrum> {
    if !(period > 0.0) {
        return Err(Error::invalid("period", format!("must be positive, got {period}")));
    }
    let schur = Schur::try_new(u.matrix().clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Unsupported("Schur iteration did not converge".into()))?;
    let (q, t) = schur.unpack();
    let n = t.nrows();
    let off = (0..n)
        .flat_map(|r| (0..n).filter(move |&c| c != r).map(move |c| (r, c)))
        .map(|(r, c)| t[(r, c)].norm())
        .fold(0.0, f64::max);
    if off > tolerances::RECONSTRUCTION {
        return Err(Error::NotUnitary { defect: off });
    }
    let quasi_energies = (0..n).map(|k| -t[(k, k)].arg() / period).collect();
    let vectors = UnitaryMatrix::new(q)?;
    Ok(FloquetSpectrum {
        period,
        quasi_energies,
        vectors,
    })
}

/// DC/oscillatory split of the one-period counting operator in the Floquet basis,
/// with quasi-energy differences taken modulo `2π/T`.
pub fn floquet_dc_decomposition(
    q_cycle: &HermitianOperator,
    spectrum: &FloquetSpectrum,
    degeneracy_tol: f64,
) -> Result<DcDecomposition> {
    if !(degeneracy_tol > 0.0) {
        return Err(Error::invalid(
            "degeneracy_tol",
            format!("must be positive, got {degeneracy_tol}"),
        ));
    }
    if q_cycle.dim() != spectrum.dim() {
        return Err(Error::DimensionMismatch {
            expected: spectrum.dim(),
            found: q_cycle.dim(),
        });
    }
    let elements = spectrum.to_eigenbasis(q_cycle.matrix());
    let omega = |a: usize, b: usize| {
        let w = spectrum.wrapped_difference(a, b);
        if w.abs() <= degeneracy_tol * spectrum.quasi_energies[a].abs().max(1.0) {
            0.0
        } else {
            w
        }
    };
    DcDecomposition::from_elements(&elements, omega, 0.0)
}

/// `Q` after `s = 1..=periods` cycles: `Q(sT) = Σ_{j<s} U^{−j} Q U^{j}`.
pub fn multi_period_counting(
    q_cycle: &HermitianOperator,
    u: &UnitaryMatrix,
    periods: usize,
) -> Result<Vec<HermitianOperator>> {
    if q_cycle.dim() != u.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            found: q_cycle.dim(),
        });
    }
    let n = u.dim();
    let mut power = CMatrix::identity(n, n);
    let mut total = CMatrix::zeros(n, n);
    let mut out = Vec::with_capacity(periods);
    for _ in 0..periods {
        total += q_cycle.conjugated_by(&power).matrix();
        out.push(HermitianOperator::hermitian_part(&total)?);
        power = u.matrix() * power;
    }
    Ok(out)
}

/// Maximal reconstruction error of `U` from its Floquet decomposition.
pub fn reconstruction_error(u: &UnitaryMatrix, spectrum: &FloquetSpectrum) -> f64 {
    let v = spectrum.vectors.matrix();
    let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        spectrum.dim(),
        spectrum
            .quasi_energies
            .iter()
            .map(|e| C64::from_polar(1.0, -e * spectrum.period)),
    ));
    max_abs_diff(&(v * d * v.adjoint()), u.matrix())
}
