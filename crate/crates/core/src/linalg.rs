//! Dense complex linear algebra for small Hermitian and unitary matrices.
//!
//! Everything here is sized for a handful up to a few hundred basis states.
//! Eigendecompositions go through nalgebra's Hermitian solver; the unitary
//! exponential is built from the spectrum so it is unitary to solver accuracy.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tolerances;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Largest entry magnitude of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn check_square(m: &CMatrix) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(())
}

/// A Hermitian matrix: Hamiltonians, current and counting operators, projectors.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: CMatrix,
}

impl HermitianOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, tolerances::HERMITICITY)
    }

    /// Checks Hermiticity entry by entry and reports the worst offender.
    pub fn with_tolerance(matrix: CMatrix, tol: f64) -> Result<Self> {
        check_square(&matrix)?;
        let n = matrix.nrows();
        let mut worst: Option<(usize, usize, f64)> = None;
        for i in 0..n {
            for j in i..n {
                let a = matrix[(i, j)];
                let b = matrix[(j, i)].conj();
                let dev = (a - b).norm();
                if !dev.is_finite() || dev > tol {
                    match worst {
                        Some((_, _, w)) if w >= dev => {}
                        _ => worst = Some((i, j, if dev.is_finite() { dev } else { f64::INFINITY })),
                    }
                }
            }
        }
        if let Some((row, col, deviation)) = worst {
            return Err(Error::NotHermitian {
                row,
                col,
                value: format!("{}", matrix[(row, col)]),
                mirror: format!("{}", matrix[(col, row)].conj()),
                deviation,
            });
        }
        Ok(Self { matrix })
    }

    /// Takes the Hermitian part `(M + M†)/2`, for accumulators that drift by rounding.
    pub fn hermitian_part(matrix: &CMatrix) -> Result<Self> {
        check_square(matrix)?;
        Ok(Self {
            matrix: (matrix + matrix.adjoint()) * C64::new(0.5, 0.0),
        })
    }

    pub fn from_real(dim: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Self::new(CMatrix::from_row_iterator(
            dim,
            dim,
            entries.iter().map(|&x| C64::new(x, 0.0)),
        ))
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            matrix: CMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim, dim),
        }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let v = DVector::from_iterator(values.len(), values.iter().map(|&x| C64::new(x, 0.0)));
        Self {
            matrix: CMatrix::from_diagonal(&v),
        }
    }

    /// Projector onto a set of basis states.
    pub fn projector(dim: usize, sites: &[usize]) -> Result<Self> {
        let mut m = CMatrix::zeros(dim, dim);
        for &s in sites {
            if s >= dim {
                return Err(Error::invalid("site_set", format!("site {s} outside 0..{dim}")));
            }
            m[(s, s)] = ONE;
        }
        Ok(Self { matrix: m })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.matrix[(row, col)]
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            matrix: &self.matrix * C64::new(factor, 0.0),
        }
    }

    /// `U† A U` (Heisenberg picture for a cumulative evolution `U`).
    pub fn conjugated_by(&self, u: &CMatrix) -> Self {
        let m = u.adjoint() * &self.matrix * u;
        Self {
            matrix: (&m + m.adjoint()) * C64::new(0.5, 0.0),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.matrix.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Max-norm of `AB - BA`.
    pub fn commutator_norm(&self, other: &HermitianOperator) -> f64 {
        let ab = &self.matrix * &other.matrix;
        let ba = &other.matrix * &self.matrix;
        max_abs_diff(&ab, &ba)
    }
}

/// A unitary matrix: evolution operators, Landau–Zener blocks, basis changes.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix {
    matrix: CMatrix,
}

impl UnitaryMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, tolerances::UNITARITY)
    }

    pub fn with_tolerance(matrix: CMatrix, tol: f64) -> Result<Self> {
        check_square(&matrix)?;
        let defect = unitarity_defect(&matrix);
        if !(defect < tol) {
            return Err(Error::NotUnitary { defect });
        }
        Ok(Self { matrix })
    }

    /// Wraps a product of unitaries without re-checking; callers own the invariant.
    pub(crate) fn from_trusted(matrix: CMatrix) -> Self {
        debug_assert!(matrix.nrows() == matrix.ncols());
        Self { matrix }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.matrix[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
        }
    }

    /// `self · other`.
    pub fn then_after(&self, other: &UnitaryMatrix) -> Self {
        Self {
            matrix: &self.matrix * &other.matrix,
        }
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if state.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: state.dim(),
            });
        }
        Ok(StateVector {
            amplitudes: &self.matrix * &state.amplitudes,
        })
    }

    pub fn defect(&self) -> f64 {
        unitarity_defect(&self.matrix)
    }
}

/// `max |U†U - 1|`.
pub fn unitarity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let g = m.adjoint() * m;
    max_abs_diff(&g, &CMatrix::identity(n, n))
}

/// A normalized pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: CVector,
}

impl StateVector {
    pub fn new(amplitudes: CVector) -> Result<Self> {
        let norm_sq = amplitudes.norm_squared();
        if amplitudes.is_empty() || !((norm_sq - 1.0).abs() <= tolerances::NORMALIZATION) {
            return Err(Error::NotNormalized { norm_sq });
        }
        Ok(Self { amplitudes })
    }

    /// Wraps amplitudes that are normalized by construction (unitary images).
    pub(crate) fn from_trusted(amplitudes: CVector) -> Self {
        Self { amplitudes }
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::NotNormalized { norm_sq: norm * norm });
        }
        Ok(Self {
            amplitudes: amplitudes / C64::new(norm, 0.0),
        })
    }

    /// The site (or level) state `|index⟩`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::invalid("index", format!("{index} outside 0..{dim}")));
        }
        let mut v = CVector::zeros(dim);
        v[index] = ONE;
        Ok(Self { amplitudes: v })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    /// Probability of finding the particle on any of `sites`.
    pub fn probability_on(&self, sites: &[usize]) -> f64 {
        sites
            .iter()
            .filter_map(|&s| self.amplitudes.get(s))
            .map(|a| a.norm_sqr())
            .sum()
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }
}

/// Eigenvalues in ascending order with eigenvectors as the columns of a unitary.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: UnitaryMatrix,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `V diag(E) V†`.
    pub fn reconstruct(&self) -> CMatrix {
        let v = self.eigenvectors.matrix();
        let d = CMatrix::from_diagonal(&DVector::from_iterator(
            self.dim(),
            self.eigenvalues.iter().map(|&e| C64::new(e, 0.0)),
        ));
        v * d * v.adjoint()
    }

    /// Matrix elements `⟨n|A|m⟩` of an operator in this eigenbasis.
    pub fn to_eigenbasis(&self, a: &CMatrix) -> CMatrix {
        let v = self.eigenvectors.matrix();
        v.adjoint() * a * v
    }

    /// `exp(-i diag(E) dt)` expressed back in the original basis.
    pub fn evolution(&self, dt: f64) -> CMatrix {
        let v = self.eigenvectors.matrix();
        let mut scaled = v.clone();
        for (j, &e) in self.eigenvalues.iter().enumerate() {
            let phase = C64::from_polar(1.0, -e * dt);
            for z in scaled.column_mut(j).iter_mut() {
                *z *= phase;
            }
        }
        scaled * v.adjoint()
    }
}

/// Multiplies each column so its largest-magnitude entry is real and positive.
/// Ties go to the lowest index.
pub(crate) fn fix_column_phases(v: &mut CMatrix) {
    for mut col in v.column_iter_mut() {
        let max = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if max == 0.0 {
            continue;
        }
        let pivot = col.iter().position(|z| z.norm() >= max * (1.0 - 1e-10)).unwrap_or(0);
        let z = col[pivot];
        let phase = z.conj() / z.norm();
        for x in col.iter_mut() {
            *x *= phase;
        }
    }
}

/// Hermitian eigendecomposition with ascending eigenvalues and a fixed
/// eigenvector phase convention.
pub fn eigh(a: &HermitianOperator) -> Spectrum {
    let n = a.dim();
    if n == 1 {
        return Spectrum {
            eigenvalues: vec![a.get(0, 0).re],
            eigenvectors: UnitaryMatrix::identity(1),
        };
    }
    let eig = a.matrix().clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]).then(i.cmp(&j)));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    fix_column_phases(&mut vectors);
    Spectrum {
        eigenvalues,
        eigenvectors: UnitaryMatrix::from_trusted(vectors),
    }
}

/// `exp(-i A dt)`.
pub fn expm_unitary(a: &HermitianOperator, dt: f64) -> UnitaryMatrix {
    if dt == 0.0 {
        return UnitaryMatrix::identity(a.dim());
    }
    UnitaryMatrix::from_trusted(eigh(a).evolution(dt))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub second: f64,
    pub variance: f64,
}

/// First two moments of `A` in the state `ψ`.
pub fn operator_moments(a: &HermitianOperator, psi: &StateVector) -> Result<Moments> {
    if a.dim() != psi.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: psi.dim(),
        });
    }
    let a_psi = a.matrix() * psi.amplitudes();
    let mean = psi.amplitudes().dotc(&a_psi).re;
    let second = a_psi.norm_squared();
    Ok(Moments {
        mean,
        second,
        variance: second - mean * mean,
    })
}

/// `⟨ψ|A^k|ψ⟩` for `k ≥ 0`.
pub fn power_moment(a: &HermitianOperator, psi: &StateVector, k: u32) -> Result<f64> {
    if a.dim() != psi.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: psi.dim(),
        });
    }
    let half = k / 2;
    let mut left = psi.amplitudes().clone();
    for _ in 0..half {
        left = a.matrix() * left;
    }
    let right = if k % 2 == 1 { a.matrix() * &left } else { left.clone() };
    Ok(left.dotc(&right).re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sigma_x() -> HermitianOperator {
        HermitianOperator::from_real(2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    #[test]
    fn rejects_non_hermitian_naming_entry() {
        let mut m = CMatrix::zeros(3, 3);
        m[(0, 2)] = C64::new(1.0, 0.0);
        m[(2, 0)] = C64::new(0.5, 0.0);
        match HermitianOperator::new(m) {
            Err(Error::NotHermitian { row, col, .. }) => assert_eq!((row, col), (0, 2)),
            other => panic!("expected NotHermitian, got {other:?}"),
        }
    }

    #[test]
    fn diagonal_eigh_is_permutation() {
        let s = eigh(&HermitianOperator::diagonal(&[3.0, 1.0, 2.0]));
        assert_eq!(s.eigenvalues, vec![1.0, 2.0, 3.0]);
        let v = s.eigenvectors.matrix();
        assert_eq!(v[(1, 0)], ONE);
        assert_eq!(v[(2, 1)], ONE);
        assert_eq!(v[(0, 2)], ONE);
    }

    #[test]
    fn sigma_x_levels() {
        let s = eigh(&sigma_x());
        assert!((s.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((s.eigenvalues[1] - 1.0).abs() < 1e-14);
        // largest component of each column is real-positive
        for col in s.eigenvectors.matrix().column_iter() {
            let z = col[0];
            assert!(z.im.abs() < 1e-14 && z.re > 0.0);
        }
    }

    #[test]
    fn expm_zero_time_is_identity() {
        let u = expm_unitary(&sigma_x(), 0.0);
        assert_eq!(u, UnitaryMatrix::identity(2));
    }

    #[test]
    fn expm_diagonal_phases() {
        let u = expm_unitary(&HermitianOperator::diagonal(&[0.3, -1.7]), 2.5);
        assert!((u.get(0, 0) - C64::from_polar(1.0, -0.75)).norm() < 1e-14);
        assert!((u.get(1, 1) - C64::from_polar(1.0, 4.25)).norm() < 1e-14);
        assert!(u.get(0, 1).norm() < 1e-15);
    }

    #[test]
    fn expm_sigma_x_pi_matches_power_series() {
        // oracle: truncated Taylor series of exp(-i π σx)
        let a = sigma_x().matrix() * C64::new(0.0, -PI);
        let mut term = CMatrix::identity(2, 2);
        let mut sum = term.clone();
        for k in 1..60 {
            term = &term * &a / C64::new(k as f64, 0.0);
            sum += &term;
        }
        let u = expm_unitary(&sigma_x(), PI);
        assert!(max_abs_diff(u.matrix(), &sum) < 1e-13);
        assert!(max_abs_diff(u.matrix(), &(-CMatrix::identity(2, 2))) < 1e-13);
    }

    #[test]
    fn moments_of_identity_and_sigma_z() {
        let psi = StateVector::normalized(CVector::from_vec(vec![ONE, I])).unwrap();
        let m = operator_moments(&HermitianOperator::identity(2), &psi).unwrap();
        assert!((m.mean - 1.0).abs() < 1e-15 && (m.second - 1.0).abs() < 1e-15);
        assert!(m.variance.abs() < 1e-15);

        let plus = StateVector::normalized(CVector::from_vec(vec![ONE, ONE])).unwrap();
        let z = HermitianOperator::diagonal(&[1.0, -1.0]);
        let m = operator_moments(&z, &plus).unwrap();
        assert!(m.mean.abs() < 1e-15);
        assert!((m.second - 1.0).abs() < 1e-15);
        assert!((m.variance - 1.0).abs() < 1e-15);
    }

    #[test]
    fn moments_dimension_mismatch() {
        let psi = StateVector::basis(3, 0).unwrap();
        assert!(matches!(
            operator_moments(&sigma_x(), &psi),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn power_moment_matches_repeated_product() {
        let psi = StateVector::normalized(CVector::from_vec(vec![ONE, C64::new(0.3, -0.2)])).unwrap();
        let a = HermitianOperator::from_real(2, &[0.4, 1.1, 1.1, -0.7]).unwrap();
        let a3 = a.matrix() * a.matrix() * a.matrix();
        let direct = psi.amplitudes().dotc(&(a3 * psi.amplitudes())).re;
        assert!((power_moment(&a, &psi, 3).unwrap() - direct).abs() < 1e-14);
        assert!((power_moment(&a, &psi, 0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn state_and_unitary_checks() {
        assert!(StateVector::new(CVector::from_vec(vec![ONE, ONE])).is_err());
        let mut m = CMatrix::identity(2, 2);
        m[(0, 1)] = C64::new(1e-6, 0.0);
        assert!(matches!(UnitaryMatrix::new(m), Err(Error::NotUnitary { .. })));
    }
}
