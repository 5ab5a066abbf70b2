//! Time stepping and accumulation of the counting operator.
//!
//! Each step freezes the Hamiltonian at the step midpoint and propagates with
//! its exact exponential. The counting increment of a step is the exact
//! integral of `U†(s) I U(s)` under that frozen Hamiltonian, evaluated in its
//! eigenbasis; to leading order it is the midpoint rule `U_mid† I U_mid · dt`.
//! For a static Hamiltonian both the propagator and `Q` are then exact for any
//! step, and for a two-site model `Q = U† N U − N` holds to rounding.

use crate::error::{Error, Result};
use crate::linalg::{
    eigh, max_abs_diff, operator_moments, power_moment, CMatrix, HermitianOperator, StateVector, UnitaryMatrix, C64,
};
use crate::model::DrivingProtocol;
use crate::tolerances::{self, Tolerances};

/// Time grid of `[t_start, t_end]` with uniform steps except a shortened last one.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    t_start: f64,
    t_end: f64,
    dt: f64,
    steps: usize,
}

impl Grid {
    pub fn new(t_start: f64, t_end: f64, dt: f64) -> Result<Self> {
        let span = t_end - t_start;
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
        }
        if dt > span * (1.0 + 1e-12) {
            return Err(Error::invalid(
                "dt",
                format!("{dt} exceeds the protocol duration {span}"),
            ));
        }
        let ratio = span / dt;
        // absorb rounding so that T/dt = 2^k gives exactly 2^k steps
        let steps = ((ratio - 1e-9 * ratio.max(1.0)).ceil() as usize).max(1);
        Ok(Self {
            t_start,
            t_end,
            dt,
            steps,
        })
    }

    pub fn for_protocol(p: &DrivingProtocol, dt: f64) -> Result<Self> {
        Self::new(p.t_start(), p.t_end(), dt)
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Grid point `k` in `0..=steps`.
    pub fn time(&self, k: usize) -> f64 {
        if k >= self.steps {
            self.t_end
        } else {
            self.t_start + k as f64 * self.dt
        }
    }

    pub fn width(&self, k: usize) -> f64 {
        self.time(k + 1) - self.time(k)
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.time(k)).collect()
    }
}

/// Everything needed to advance one step under a frozen Hamiltonian.
#[derive(Debug, Clone)]
pub(crate) struct StepKernel {
    vectors: CMatrix,
    propagator: CMatrix,
    /// Current operator in the eigenbasis, elementwise multiplied by the
    /// integral of `exp(i(E_n − E_m)s)` over the step.
    weighted_current: CMatrix,
}

impl StepKernel {
    fn new(h: &HermitianOperator, current: &HermitianOperator, width: f64) -> Self {
        let spec = eigh(h);
        let v = spec.eigenvectors.matrix().clone();
        let propagator = spec.evolution(width);
        let mut weighted = v.adjoint() * current.matrix() * &v;
        let e = &spec.eigenvalues;
        for n in 0..e.len() {
            for m in 0..e.len() {
                weighted[(n, m)] *= phase_integral(e[n] - e[m], width);
            }
        }
        Self {
            vectors: v,
            propagator,
            weighted_current: weighted,
        }
    }

    /// `∫_0^w U(s)† I U(s) ds` for a step starting from `u`.
    fn counting_increment(&self, u: &CMatrix) -> CMatrix {
        let w = self.vectors.adjoint() * u;
        w.adjoint() * &self.weighted_current * w
    }

    /// Same integral applied to a state vector: `∫ U(s)† I U(s) ds · ψ`.
    fn increment_on(&self, u: &CMatrix, psi: &crate::linalg::CVector) -> crate::linalg::CVector {
        let w = self.vectors.adjoint() * u;
        w.adjoint() * (&self.weighted_current * (w * psi))
    }
}

/// `∫_0^w exp(iωs) ds`, stable for small `ωw`.
pub(crate) fn phase_integral(omega: f64, width: f64) -> C64 {
    let x = 0.5 * omega * width;
    let sinc = if x.abs() < 1e-4 { 1.0 - x * x / 6.0 } else { x.sin() / x };
    C64::from_polar(width * sinc, x)
}

/// Walks the grid, reusing the step kernel while the midpoint Hamiltonian,
/// current and width are unchanged.
fn walk<F>(p: &DrivingProtocol, grid: &Grid, mut visit: F) -> Result<CMatrix>
where
    F: FnMut(usize, &CMatrix, &StepKernel) -> Result<()>,
{
    let n = p.dim();
    let mut u = CMatrix::identity(n, n);
    let mut cache: Option<(HermitianOperator, HermitianOperator, f64, StepKernel)> = None;
    for k in 0..grid.steps() {
        let width = grid.width(k);
        let t_mid = grid.time(k) + 0.5 * width;
        let h = p.hamiltonian_at(t_mid)?;
        let current = p.current_operator_at(t_mid)?;
        let reuse = matches!(&cache, Some((ch, ci, cw, _)) if *cw == width && *ch == h && *ci == current);
        if !reuse {
            let kernel = StepKernel::new(&h, &current, width);
            cache = Some((h, current, width, kernel));
        }
        let kernel = &cache.as_ref().expect("kernel cached above").3;
        visit(k, &u, kernel)?;
        u = &kernel.propagator * u;
    }
    Ok(u)
}

/// Evolution operators on a grid, plus states when an initial state was given.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: Grid,
    pub times: Vec<f64>,
    /// `U(t_k)` from `t_start`.
    pub unitaries: Vec<UnitaryMatrix>,
    /// `U(t_k)·ψ0`.
    pub states: Option<Vec<StateVector>>,
}

impl Trajectory {
    pub fn final_unitary(&self) -> &UnitaryMatrix {
        self.unitaries
            .last()
            .expect("a trajectory has at least two grid points")
    }

    pub fn final_state(&self) -> Option<&StateVector> {
        self.states.as_ref().and_then(|s| s.last())
    }

    /// Largest unitarity defect along the trajectory.
    pub fn max_unitarity_defect(&self) -> f64 {
        self.unitaries.iter().map(UnitaryMatrix::defect).fold(0.0, f64::max)
    }
}

pub fn evolve(p: &DrivingProtocol, dt: f64, psi0: Option<&StateVector>) -> Result<Trajectory> {
    if let Some(psi) = psi0 {
        check_dim(p.dim(), psi.dim())?;
    }
    let grid = Grid::for_protocol(p, dt)?;
    let mut unitaries = Vec::with_capacity(grid.steps() + 1);
    let last = walk(p, &grid, |_, u, _| {
        unitaries.push(UnitaryMatrix::from_trusted(u.clone()));
        Ok(())
    })?;
    unitaries.push(UnitaryMatrix::from_trusted(last));
    let states = psi0.map(|psi| {
        unitaries
            .iter()
            .map(|u| StateVector::from_trusted(u.matrix() * psi.amplitudes()))
            .collect()
    });
    Ok(Trajectory {
        times: grid.times(),
        grid,
        unitaries,
        states,
    })
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// The accumulated counting operator of one run, before choosing a state.
#[derive(Debug, Clone)]
pub struct CountingOperator {
    pub q_op: HermitianOperator,
    pub final_unitary: UnitaryMatrix,
    pub dt: f64,
    pub step_count: usize,
}

impl CountingOperator {
    pub fn trace(&self) -> f64 {
        self.q_op.trace()
    }
}

pub fn accumulate_counting(p: &DrivingProtocol, dt: f64) -> Result<CountingOperator> {
    let grid = Grid::for_protocol(p, dt)?;
    let n = p.dim();
    let mut q = CMatrix::zeros(n, n);
    let last = walk(p, &grid, |_, u, kernel| {
        q += kernel.counting_increment(u);
        Ok(())
    })?;
    let q_op = HermitianOperator::hermitian_part(&q)?;
    Ok(CountingOperator {
        q_op,
        final_unitary: UnitaryMatrix::from_trusted(last),
        dt,
        step_count: grid.steps(),
    })
}

/// Moments of `Q` for one preparation.
#[derive(Debug, Clone)]
pub struct CountingResult {
    pub q_op: HermitianOperator,
    pub final_unitary: UnitaryMatrix,
    pub mean: f64,
    pub second_moment: f64,
    pub variance: f64,
    pub dt: f64,
    pub step_count: usize,
    /// `|mean(dt) − mean(dt/2)|` when the run came from step halving.
    pub convergence_estimate: Option<f64>,
}

impl CountingResult {
    pub fn trace(&self) -> f64 {
        self.q_op.trace()
    }
}

pub fn counting_moments(op: &CountingOperator, psi0: &StateVector) -> Result<CountingResult> {
    let m = operator_moments(&op.q_op, psi0)?;
    Ok(CountingResult {
        q_op: op.q_op.clone(),
        final_unitary: op.final_unitary.clone(),
        mean: m.mean,
        second_moment: m.second,
        variance: m.variance,
        dt: op.dt,
        step_count: op.step_count,
        convergence_estimate: None,
    })
}

/// Counting run with the step halved from `T/2^14` until the mean changes by
/// less than `tol.convergence` between successive halvings.
pub fn converged_counting(p: &DrivingProtocol, psi0: &StateVector, tol: &Tolerances) -> Result<CountingResult> {
    check_dim(p.dim(), psi0.dim())?;
    let span = p.duration();
    let mut steps = tol.initial_steps.max(1);
    let mut coarse = counting_moments(&accumulate_counting(p, span / steps as f64)?, psi0)?;
    loop {
        let next_steps = steps * 2;
        if next_steps > tol.step_cap {
            return Err(Error::NotConverged {
                steps,
                estimate: coarse.convergence_estimate.unwrap_or(f64::NAN),
                tolerance: tol.convergence,
            });
        }
        let mut fine = counting_moments(&accumulate_counting(p, span / next_steps as f64)?, psi0)?;
        let diff = (fine.mean - coarse.mean).abs();
        fine.convergence_estimate = Some(diff);
        log::debug!(
            "counting with {next_steps} steps: mean {:.12}, change {diff:.3e}",
            fine.mean
        );
        if diff < tol.convergence {
            return Ok(fine);
        }
        steps = next_steps;
        coarse = fine;
    }
}

/// `⟨N^k⟩` at the end of the trajectory for `k = 1..=k_max`, with `N` the
/// projector onto `sites`.
pub fn occupation_moments(traj: &Trajectory, sites: &[usize], k_max: u32) -> Result<Vec<f64>> {
    if sites.is_empty() {
        return Err(Error::invalid("site_set", "empty"));
    }
    let psi = traj
        .final_state()
        .ok_or_else(|| Error::invalid("trajectory", "no initial state was supplied to evolve"))?;
    let n = HermitianOperator::projector(psi.dim(), sites)?;
    (1..=k_max).map(|k| power_moment(&n, psi, k)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    Mean,
    Variance,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConvergenceRatio {
    Ratio(f64),
    /// Successive differences already below the rounding floor.
    Converged,
}

/// `|x(dt) − x(dt/2)| / |x(dt/2) − x(dt/4)|`, about 4 for a second-order scheme.
pub fn step_convergence(
    p: &DrivingProtocol,
    psi0: &StateVector,
    observable: Observable,
    dt: f64,
) -> Result<ConvergenceRatio> {
    let mut values = [0.0; 3];
    for (i, v) in values.iter_mut().enumerate() {
        let r = counting_moments(&accumulate_counting(p, dt / f64::from(1u32 << i))?, psi0)?;
        *v = match observable {
            Observable::Mean => r.mean,
            Observable::Variance => r.variance,
        };
    }
    let d1 = (values[0] - values[1]).abs();
    let d2 = (values[1] - values[2]).abs();
    if d2 < tolerances::CONVERGED_FLOOR || d1 < tolerances::CONVERGED_FLOOR {
        return Ok(ConvergenceRatio::Converged);
    }
    Ok(ConvergenceRatio::Ratio(d1 / d2))
}

/// `Var(Q)` as the double time integral of the connected, symmetrized current
/// correlator, summed over pairs of steps of the trajectory grid:
/// `Σ_jk Re⟨a_j|a_k⟩ − ⟨a_j⟩⟨a_k⟩` with `a_j = (∫_step U† I U) ψ0`.
///
/// Each term is built from the stored `U(t_k)` and a fresh diagonalization, so
/// this does not share the accumulation path of [`accumulate_counting`].
pub fn autocorrelation_variance(traj: &Trajectory, p: &DrivingProtocol, psi0: &StateVector) -> Result<f64> {
    check_dim(p.dim(), psi0.dim())?;
    let expected = Grid::for_protocol(p, traj.grid.dt())?;
    if expected != traj.grid || traj.unitaries.len() != expected.steps() + 1 {
        return Err(Error::GridMismatch(format!(
            "trajectory has {} grid points, protocol grid has {}",
            traj.unitaries.len(),
            expected.steps() + 1
        )));
    }
    if max_abs_diff(traj.unitaries[0].matrix(), &CMatrix::identity(p.dim(), p.dim())) > tolerances::UNITARITY {
        return Err(Error::GridMismatch("trajectory does not start at the identity".into()));
    }
    let psi = psi0.amplitudes();
    let mut blocks = Vec::with_capacity(expected.steps());
    for k in 0..expected.steps() {
        let width = expected.width(k);
        let t_mid = expected.time(k) + 0.5 * width;
        let kernel = StepKernel::new(&p.hamiltonian_at(t_mid)?, &p.current_operator_at(t_mid)?, width);
        let a = kernel.increment_on(traj.unitaries[k].matrix(), psi);
        let m = psi.dotc(&a).re;
        blocks.push((a, m));
    }
    let mut var = 0.0;
    for (j, (aj, mj)) in blocks.iter().enumerate() {
        var += aj.norm_squared() - mj * mj;
        for (ak, mk) in &blocks[j + 1..] {
            var += 2.0 * (aj.dotc(ak).re - mj * mk);
        }
    }
    Ok(var)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{HermitianOperator, I};
    use crate::model::{ring_protocol, two_site_lz_protocol};

    #[test]
    fn grid_covers_range_exactly() {
        let g = Grid::new(-1.0, 2.0, 0.7).unwrap();
        assert_eq!(g.steps(), 5);
        assert_eq!(g.time(5), 2.0);
        assert!((g.width(4) - 0.2).abs() < 1e-12);
        let g = Grid::new(0.0, 1.0, 1.0 / 1024.0).unwrap();
        assert_eq!(g.steps(), 1024);
        assert!(Grid::new(0.0, 1.0, 2.0).is_err());
        assert!(Grid::new(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn phase_integral_matches_closed_form() {
        for &(w, h) in &[(0.0_f64, 0.3_f64), (1e-7, 0.3), (2.5, 0.3), (-40.0, 0.1)] {
            let exact = if (w * h).abs() < 1e-3 {
                // series, the difference quotient cancels here
                C64::new(h - w * w * h * h * h / 6.0, w * h * h / 2.0)
            } else {
                ((I * w * h).exp() - 1.0) / (I * w)
            };
            assert!((phase_integral(w, h) - exact).norm() < 1e-14, "omega {w}");
        }
    }

    #[test]
    fn two_site_counting_equals_occupation_change() {
        let p = two_site_lz_protocol(0.2, 0.3, 6.0).unwrap();
        let r = accumulate_counting(&p, p.duration() / 300.0).unwrap();
        let n1 = HermitianOperator::projector(2, &[1]).unwrap();
        let heis = n1.conjugated_by(r.final_unitary.matrix());
        let diff = heis.matrix() - n1.matrix();
        assert!(max_abs_diff(r.q_op.matrix(), &diff) < 1e-12);
    }

    #[test]
    fn static_ring_single_step_equals_many() {
        let p = ring_protocol(5, 1.0, 3.7).unwrap();
        let one = accumulate_counting(&p, 3.7).unwrap();
        let many = accumulate_counting(&p, 3.7 / 64.0).unwrap();
        assert!(max_abs_diff(one.q_op.matrix(), many.q_op.matrix()) < 1e-12);
    }
}
