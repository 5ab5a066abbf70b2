//! Concrete driven systems: the two-site Landau–Zener crossing, the three-site
//! stirring device and the clean N-site ring.
//!
//! A [`DrivingProtocol`] holds the model topology, the control schedules and the
//! bond through which transport is counted. Energies are in units of the fixed
//! 1↔2 hopping of the three-site device.

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, HermitianOperator, C64, I};
use crate::tolerances;

/// How a schedule segment interpolates between its end values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ramp {
    Linear,
    /// `x³(10 − 15x + 6x²)`: zero first and second derivative at both ends.
    Smooth,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Segment {
    t0: f64,
    t1: f64,
    v0: f64,
    v1: f64,
    ramp: Ramp,
}

impl Segment {
    fn value(&self, t: f64) -> f64 {
        let span = self.t1 - self.t0;
        if span <= 0.0 || self.v0 == self.v1 {
            return self.v1;
        }
        let x = ((t - self.t0) / span).clamp(0.0, 1.0);
        let s = match self.ramp {
            Ramp::Linear => x,
            Ramp::Smooth => x * x * x * (10.0 + x * (-15.0 + 6.0 * x)),
        };
        self.v0 + (self.v1 - self.v0) * s
    }
}

/// A real control function of time built from contiguous segments.
///
/// Evaluation is right-continuous at joins, so an instantaneous switch takes
/// effect exactly at its time stamp.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    segments: Vec<Segment>,
    start: f64,
    start_value: f64,
}

impl Schedule {
    pub fn constant(value: f64, t_start: f64, t_end: f64) -> Self {
        ScheduleBuilder::new(t_start, value).hold(t_end - t_start).build()
    }

    pub fn value(&self, t: f64) -> f64 {
        if self.segments.is_empty() {
            return self.start_value;
        }
        let idx = self.segments.partition_point(|s| s.t1 <= t);
        let seg = &self.segments[idx.min(self.segments.len() - 1)];
        seg.value(t)
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.segments.last().map_or(self.start, |s| s.t1)
    }

    pub fn is_constant(&self) -> bool {
        let v = self.segments.first().map_or(self.start_value, |s| s.v0);
        self.segments.iter().all(|s| s.v0 == v && s.v1 == v)
    }

    pub fn is_finite(&self) -> bool {
        self.segments
            .iter()
            .all(|s| s.v0.is_finite() && s.v1.is_finite() && s.t0.is_finite() && s.t1.is_finite())
    }

    /// Values approached from the left and from the right at every join.
    pub fn joins(&self) -> Vec<(f64, f64, f64)> {
        self.segments.windows(2).map(|w| (w[0].t1, w[0].v1, w[1].v0)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct ScheduleBuilder {
    segments: Vec<Segment>,
    start: f64,
    start_value: f64,
    time: f64,
    value: f64,
}

impl ScheduleBuilder {
    pub fn new(t_start: f64, value: f64) -> Self {
        Self {
            segments: Vec::new(),
            start: t_start,
            start_value: value,
            time: t_start,
            value,
        }
    }

    fn push(mut self, duration: f64, target: f64, ramp: Ramp) -> Self {
        if duration > 0.0 {
            self.segments.push(Segment {
                t0: self.time,
                t1: self.time + duration,
                v0: self.value,
                v1: target,
                ramp,
            });
            self.time += duration;
        }
        self.value = target;
        self
    }

    pub fn hold(self, duration: f64) -> Self {
        let v = self.value;
        self.push(duration, v, Ramp::Linear)
    }

    pub fn linear_to(self, duration: f64, target: f64) -> Self {
        self.push(duration, target, Ramp::Linear)
    }

    /// Smooth crossfade; with zero duration this is an instantaneous switch.
    pub fn smooth_to(self, duration: f64, target: f64) -> Self {
        self.push(duration, target, Ramp::Smooth)
    }

    /// Instantaneous switch applied at the current time.
    pub fn jump_to(mut self, target: f64) -> Self {
        self.value = target;
        self
    }

    pub fn build(self) -> Schedule {
        Schedule {
            segments: self.segments,
            start: self.start,
            start_value: self.start_value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    TwoSite,
    ThreeSite,
    Ring { sites: usize },
}

impl ModelKind {
    pub fn dim(&self) -> usize {
        match *self {
            ModelKind::TwoSite => 2,
            ModelKind::ThreeSite => 3,
            ModelKind::Ring { sites } => sites,
        }
    }
}

/// Ordered site pair; positive counts mean transport `from → to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bond {
    pub from: usize,
    pub to: usize,
}

impl Bond {
    pub const fn new(from: usize, to: usize) -> Self {
        Self { from, to }
    }
}

/// A model together with its control schedules and measurement bond.
#[derive(Debug, Clone, PartialEq)]
pub struct DrivingProtocol {
    kind: ModelKind,
    potential: Schedule,
    coupling1: Schedule,
    coupling2: Schedule,
    t_start: f64,
    t_end: f64,
    bond: Bond,
    asymptotic: bool,
}

impl DrivingProtocol {
    fn assemble(
        kind: ModelKind,
        potential: Schedule,
        coupling1: Schedule,
        coupling2: Schedule,
        bond: Bond,
    ) -> Result<Self> {
        let t_start = potential.start();
        let t_end = [potential.end(), coupling1.end(), coupling2.end()]
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        if !(t_end > t_start) || !t_start.is_finite() || !t_end.is_finite() {
            return Err(Error::invalid(
                "schedule",
                format!("empty time range [{t_start}, {t_end}]"),
            ));
        }
        if !(potential.is_finite() && coupling1.is_finite() && coupling2.is_finite()) {
            return Err(Error::invalid("schedule", "non-finite schedule value"));
        }
        let p = Self {
            kind,
            potential,
            coupling1,
            coupling2,
            t_start,
            t_end,
            bond,
            asymptotic: true,
        };
        p.check_bond(bond)?;
        Ok(p)
    }

    /// Builds a three-site protocol from explicit schedules for `u`, `c1`, `c2`.
    pub fn three_site(u: Schedule, c1: Schedule, c2: Schedule, bond: Bond) -> Result<Self> {
        Self::assemble(ModelKind::ThreeSite, u, c1, c2, bond)
    }

    fn check_bond(&self, bond: Bond) -> Result<()> {
        let n = self.dim();
        if bond.from >= n || bond.to >= n || bond.from == bond.to {
            return Err(Error::invalid(
                "bond",
                format!(
                    "({}, {}) is not a pair of distinct sites of a {n}-site model",
                    bond.from, bond.to
                ),
            ));
        }
        if let ModelKind::Ring { sites } = self.kind {
            let d = (bond.to + sites - bond.from) % sites;
            if d != 1 && d != sites - 1 {
                return Err(Error::invalid(
                    "bond",
                    format!(
                        "({}, {}) is not a nearest-neighbour bond of the ring",
                        bond.from, bond.to
                    ),
                ));
            }
        }
        Ok(())
    }

    pub fn with_bond(mut self, bond: Bond) -> Result<Self> {
        self.check_bond(bond)?;
        self.bond = bond;
        Ok(self)
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn bond(&self) -> Bond {
        self.bond
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }

    /// Whether a finite Landau–Zener sweep is long enough for the asymptotic formula.
    pub fn is_asymptotic(&self) -> bool {
        self.asymptotic
    }

    /// True when no schedule changes in time.
    pub fn is_static(&self) -> bool {
        self.potential.is_constant() && self.coupling1.is_constant() && self.coupling2.is_constant()
    }

    pub fn potential(&self) -> &Schedule {
        &self.potential
    }

    pub fn coupling1(&self) -> &Schedule {
        &self.coupling1
    }

    pub fn coupling2(&self) -> &Schedule {
        &self.coupling2
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let slack = 1e-12 * self.duration().max(1.0);
        if !(t >= self.t_start - slack && t <= self.t_end + slack) {
            return Err(Error::TimeOutOfRange {
                t,
                start: self.t_start,
                end: self.t_end,
            });
        }
        Ok(())
    }

    /// Coupling parameter of a bond at time `t` (zero for non-bonds). For the
    /// ring this is `c`, whose matrix element in `H` is `-c`.
    pub fn hopping(&self, a: usize, b: usize, t: f64) -> f64 {
        let (lo, hi) = (a.min(b), a.max(b));
        match self.kind {
            ModelKind::TwoSite => {
                if (lo, hi) == (0, 1) {
                    self.coupling1.value(t)
                } else {
                    0.0
                }
            }
            ModelKind::ThreeSite => match (lo, hi) {
                (0, 1) => self.coupling1.value(t),
                (0, 2) => self.coupling2.value(t),
                (1, 2) => 1.0,
                _ => 0.0,
            },
            ModelKind::Ring { sites } => {
                let d = hi - lo;
                if lo != hi && (d == 1 || d == sites - 1) {
                    self.coupling1.value(t)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn hamiltonian_at(&self, t: f64) -> Result<HermitianOperator> {
        self.check_time(t)?;
        let n = self.dim();
        let mut h = CMatrix::zeros(n, n);
        let re = |x: f64| C64::new(x, 0.0);
        match self.kind {
            ModelKind::TwoSite => {
                let c = self.coupling1.value(t);
                h[(0, 0)] = re(self.potential.value(t));
                h[(0, 1)] = re(c);
                h[(1, 0)] = re(c);
            }
            ModelKind::ThreeSite => {
                let (c1, c2) = (self.coupling1.value(t), self.coupling2.value(t));
                h[(0, 0)] = re(self.potential.value(t));
                h[(0, 1)] = re(c1);
                h[(1, 0)] = re(c1);
                h[(0, 2)] = re(c2);
                h[(2, 0)] = re(c2);
                h[(1, 2)] = re(1.0);
                h[(2, 1)] = re(1.0);
            }
            ModelKind::Ring { sites } => {
                // H = -c (D + D⁻¹)
                let c = self.coupling1.value(t);
                for x in 0..sites {
                    let y = (x + 1) % sites;
                    h[(x, y)] += re(-c);
                    h[(y, x)] += re(-c);
                }
            }
        }
        if !h.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFiniteHamiltonian { t });
        }
        HermitianOperator::new(h)
    }

    /// Current through the measurement bond `(a, b)`: `i c_ab |a⟩⟨b| + h.c.`,
    /// with `c_ab` the coupling parameter of that bond. For the two- and
    /// three-site models this is `i[H, |b⟩⟨b|]`, the rate of filling of `b`.
    pub fn current_operator_at(&self, t: f64) -> Result<HermitianOperator> {
        self.check_time(t)?;
        Ok(self.bond_current(self.bond, t))
    }

    pub(crate) fn bond_current(&self, bond: Bond, t: f64) -> HermitianOperator {
        let n = self.dim();
        let c = self.hopping(bond.from, bond.to, t);
        let mut m = CMatrix::zeros(n, n);
        m[(bond.from, bond.to)] = I * c;
        m[(bond.to, bond.from)] = -I * c;
        HermitianOperator::new(m).expect("bond current is Hermitian by construction")
    }
}

/// Default sweep half-range for a two-site crossing with coupling `c`.
pub fn default_half_range(c: f64) -> f64 {
    (tolerances::ASYMPTOTIC_RANGE_RATIO * c.abs()).max(10.0)
}

/// Linear sweep `u(t) = udot·t` across the fixed level `E1 = 0`.
pub fn two_site_lz_protocol(c: f64, udot: f64, half_range: f64) -> Result<DrivingProtocol> {
    two_site_sweep_protocol(c, udot, half_range, Ramp::Linear)
}

/// Sweep of `u` from `−half_range` to `+half_range` crossing `E1 = 0` at `t = 0`
/// with rate `udot`. A smooth sweep uses the smootherstep profile, which lasts
/// 15/8 times longer than the linear one for the same rate at the crossing.
pub fn two_site_sweep_protocol(c: f64, udot: f64, half_range: f64, ramp: Ramp) -> Result<DrivingProtocol> {
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::invalid("c", format!("must be finite and non-negative, got {c}")));
    }
    if !(udot > 0.0) || !udot.is_finite() {
        return Err(Error::invalid("udot", format!("must be positive, got {udot}")));
    }
    if !(half_range > 0.0) || !half_range.is_finite() {
        return Err(Error::invalid(
            "half_range",
            format!("must be positive, got {half_range}"),
        ));
    }
    let duration = match ramp {
        Ramp::Linear => 2.0 * half_range / udot,
        Ramp::Smooth => 15.0 * half_range / (4.0 * udot),
    };
    let t0 = -0.5 * duration;
    let t1 = 0.5 * duration;
    let u = ScheduleBuilder::new(t0, -half_range)
        .push(duration, half_range, ramp)
        .build();
    let mut p = DrivingProtocol::assemble(
        ModelKind::TwoSite,
        u,
        Schedule::constant(c, t0, t1),
        Schedule::constant(0.0, t0, t1),
        Bond::new(0, 1),
    )?;
    p.asymptotic = half_range >= tolerances::ASYMPTOTIC_RANGE_RATIO * c;
    Ok(p)
}

/// Static clean ring `H = -c(D + D⁻¹)` observed on `[0, duration]`, counted on bond (0,1).
pub fn ring_protocol(sites: usize, c: f64, duration: f64) -> Result<DrivingProtocol> {
    if sites < 3 {
        return Err(Error::invalid("N", format!("ring needs at least 3 sites, got {sites}")));
    }
    if !(duration > 0.0) || !duration.is_finite() {
        return Err(Error::invalid("duration", format!("must be positive, got {duration}")));
    }
    if !c.is_finite() {
        return Err(Error::invalid("c", "must be finite"));
    }
    DrivingProtocol::assemble(
        ModelKind::Ring { sites },
        Schedule::constant(0.0, 0.0, duration),
        Schedule::constant(c, 0.0, duration),
        Schedule::constant(0.0, 0.0, duration),
        Bond::new(0, 1),
    )
}

/// Values of `(c1, c2)` while a half-cycle's valves are open.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Valves {
    pub c1: f64,
    pub c2: f64,
}

impl Valves {
    pub const fn new(c1: f64, c2: f64) -> Self {
        Self { c1, c2 }
    }

    /// Coupling of `|0⟩` to the symmetric level `E₊`: `(c1 + c2)/√2`.
    pub fn crossing_coupling(&self) -> f64 {
        (self.c1 + self.c2) / std::f64::consts::SQRT_2
    }

    fn check(&self, warnings: &mut Vec<String>, label: &str) -> Result<()> {
        for (name, c) in [("c1", self.c1), ("c2", self.c2)] {
            if !c.is_finite() || c * c > tolerances::WEAK_COUPLING_MAX {
                return Err(Error::invalid(
                    "valve",
                    format!(
                        "{label} {name} = {c}: |c|^2 must not exceed {}",
                        tolerances::WEAK_COUPLING_MAX
                    ),
                ));
            }
            // compared on |c| so that c = 0.1 sits exactly on the 0.01 threshold
            if c.abs() > tolerances::WEAK_COUPLING_WARN.sqrt() {
                warnings.push(format!(
                    "{label} {name} = {c}: |c|^2 > {} is not a weak coupling",
                    tolerances::WEAK_COUPLING_WARN
                ));
            }
        }
        Ok(())
    }
}

/// One stirring cycle of the three-site device.
///
/// `u` is raised from `u_min` to `u_max` with the first valve pair open, held at
/// `u_max` for `dwell` with all valves closed, then lowered back with the second
/// pair open. `valve_ramp` is the crossfade time of each valve switch; zero
/// means instantaneous switching.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StirCycleSpec {
    pub u_min: f64,
    pub u_max: f64,
    pub udot: f64,
    pub first: Valves,
    pub second: Valves,
    pub dwell: f64,
    pub valve_ramp: f64,
    pub bond: Bond,
}

/// Time stamps of a stirring cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleTimeline {
    pub ramp_up: (f64, f64),
    pub dwell: (f64, f64),
    pub ramp_down: (f64, f64),
    /// `u(t) = 1` on the way up and on the way down.
    pub crossings: (f64, f64),
    pub period: f64,
}

impl StirCycleSpec {
    /// The peristaltic valve pattern: `c2 = 0` going up, `c1 = 0` coming down.
    pub fn peristaltic(u_min: f64, u_max: f64, udot: f64, c1_open: f64, c2_open: f64, dwell: f64) -> Self {
        Self {
            u_min,
            u_max,
            udot,
            first: Valves::new(c1_open, 0.0),
            second: Valves::new(0.0, c2_open),
            dwell,
            valve_ramp: 0.0,
            bond: Bond::new(0, 1),
        }
    }

    /// Checks the invariants and returns non-fatal warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        if !(self.udot > 0.0) || !self.udot.is_finite() {
            return Err(Error::invalid("udot", format!("must be positive, got {}", self.udot)));
        }
        if !(self.u_max > 1.0) {
            return Err(Error::invalid(
                "u_max",
                format!("{} <= 1: no crossing with E+ = 1", self.u_max),
            ));
        }
        if !(self.u_min < 1.0) {
            return Err(Error::invalid(
                "u_min",
                format!("{} >= 1: no crossing with E+ = 1", self.u_min),
            ));
        }
        if !(self.dwell >= 0.0) || !(self.valve_ramp >= 0.0) {
            return Err(Error::invalid("dwell", "dwell and valve_ramp must be non-negative"));
        }
        if self.u_min <= -1.0 {
            warnings.push(format!("u_min = {} also crosses the E- = -1 level", self.u_min));
        }
        self.first.check(&mut warnings, "first half")?;
        self.second.check(&mut warnings, "second half")?;
        Ok(warnings)
    }

    pub fn timeline(&self) -> CycleTimeline {
        let sweep = (self.u_max - self.u_min) / self.udot;
        let r = self.valve_ramp;
        let up0 = r;
        let up1 = up0 + sweep;
        let dwell0 = up1 + r;
        let dwell1 = dwell0 + self.dwell;
        let down0 = dwell1 + r;
        let down1 = down0 + sweep;
        CycleTimeline {
            ramp_up: (up0, up1),
            dwell: (dwell0, dwell1),
            ramp_down: (down0, down1),
            crossings: (
                up0 + (1.0 - self.u_min) / self.udot,
                down0 + (self.u_max - 1.0) / self.udot,
            ),
            period: down1 + r,
        }
    }
}

pub fn stir_cycle_protocol(spec: &StirCycleSpec) -> Result<DrivingProtocol> {
    spec.validate()?;
    let sweep = (spec.u_max - spec.u_min) / spec.udot;
    let r = spec.valve_ramp;
    let u = ScheduleBuilder::new(0.0, spec.u_min)
        .hold(r)
        .linear_to(sweep, spec.u_max)
        .hold(2.0 * r + spec.dwell)
        .linear_to(sweep, spec.u_min)
        .hold(r)
        .build();
    let valve = |open_up: f64, open_down: f64| {
        ScheduleBuilder::new(0.0, 0.0)
            .smooth_to(r, open_up)
            .hold(sweep)
            .smooth_to(r, 0.0)
            .hold(spec.dwell)
            .smooth_to(r, open_down)
            .hold(sweep)
            .smooth_to(r, 0.0)
            .build()
    };
    let c1 = valve(spec.first.c1, spec.second.c1);
    let c2 = valve(spec.first.c2, spec.second.c2);
    DrivingProtocol::three_site(u, c1, c2, spec.bond)
}

/// First half of a stirring cycle with both paths open: a double-path crossing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoublePathSpec {
    pub valves: Valves,
    pub udot: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub valve_ramp: f64,
}

pub fn double_path_protocol(spec: &DoublePathSpec) -> Result<DrivingProtocol> {
    let mut warnings = Vec::new();
    spec.valves.check(&mut warnings, "double path")?;
    for w in &warnings {
        log::warn!("{w}");
    }
    if !(spec.udot > 0.0) || !spec.udot.is_finite() {
        return Err(Error::invalid("udot", format!("must be positive, got {}", spec.udot)));
    }
    if !(spec.u_min < 1.0 && spec.u_max > 1.0) {
        return Err(Error::invalid("u_min/u_max", "the sweep must cross E+ = 1"));
    }
    if !(spec.valve_ramp >= 0.0) {
        return Err(Error::invalid("valve_ramp", "must be non-negative"));
    }
    let sweep = (spec.u_max - spec.u_min) / spec.udot;
    let r = spec.valve_ramp;
    let u = ScheduleBuilder::new(0.0, spec.u_min)
        .hold(r)
        .linear_to(sweep, spec.u_max)
        .hold(r)
        .build();
    let valve = |open: f64| {
        ScheduleBuilder::new(0.0, if r > 0.0 { 0.0 } else { open })
            .smooth_to(r, open)
            .hold(sweep)
            .smooth_to(r, 0.0)
            .build()
    };
    DrivingProtocol::three_site(u, valve(spec.valves.c1), valve(spec.valves.c2), Bond::new(0, 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigh;

    #[test]
    fn lz_schedule_endpoints() {
        let p = two_site_lz_protocol(0.1, 0.02, 4.0).unwrap();
        assert!((p.potential().value(0.0)).abs() < 1e-12);
        assert!((p.potential().value(p.t_start()) + 4.0).abs() < 1e-12);
        assert!((p.potential().value(p.t_end()) - 4.0).abs() < 1e-12);
        assert!(p.is_asymptotic());
        assert!(!two_site_lz_protocol(0.1, 0.02, 1.0).unwrap().is_asymptotic());
    }

    #[test]
    fn lz_rejects_bad_rates() {
        assert!(two_site_lz_protocol(0.1, 0.0, 4.0).is_err());
        assert!(two_site_lz_protocol(0.1, 0.1, -1.0).is_err());
        assert!(two_site_lz_protocol(-0.1, 0.1, 1.0).is_err());
        // decoupled sites are a valid protocol
        let p = two_site_lz_protocol(0.0, 0.3, 2.0).unwrap();
        assert_eq!(p.current_operator_at(0.0).unwrap(), HermitianOperator::zeros(2));
    }

    #[test]
    fn three_site_closed_valves_block() {
        let spec = StirCycleSpec::peristaltic(0.0, 3.0, 0.1, 0.0, 0.0, 0.0);
        let p = stir_cycle_protocol(&spec).unwrap();
        let h = p.hamiltonian_at(5.0).unwrap();
        let u = p.potential().value(5.0);
        let expected = HermitianOperator::from_real(3, &[u, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(h, expected);
    }

    #[test]
    fn ring_levels() {
        let p = ring_protocol(4, 1.0, 1.0).unwrap();
        let s = eigh(&p.hamiltonian_at(0.5).unwrap());
        for (e, x) in s.eigenvalues.iter().zip([-2.0, 0.0, 0.0, 2.0]) {
            assert!((e - x).abs() < 1e-12);
        }
        assert!(ring_protocol(2, 1.0, 1.0).is_err());
    }

    #[test]
    fn stir_cycle_duration_and_continuity() {
        let spec = StirCycleSpec::peristaltic(-0.5, 3.0, 0.05, 0.1, 0.08, 0.0);
        let p = stir_cycle_protocol(&spec).unwrap();
        assert!((p.duration() - 2.0 * 3.5 / 0.05).abs() < 1e-9);
        for (_, left, right) in p.potential().joins() {
            assert!((left - right).abs() < 1e-12);
        }
        let mut s = spec;
        s.valve_ramp = 10.0;
        s.dwell = 3.0;
        let p = stir_cycle_protocol(&s).unwrap();
        assert!((p.duration() - (2.0 * 70.0 + 40.0 + 3.0)).abs() < 1e-9);
        for sched in [p.potential(), p.coupling1(), p.coupling2()] {
            for (_, left, right) in sched.joins() {
                assert!((left - right).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn stir_cycle_requires_crossing() {
        assert!(stir_cycle_protocol(&StirCycleSpec::peristaltic(0.0, 0.9, 0.1, 0.1, 0.1, 0.0)).is_err());
        assert!(stir_cycle_protocol(&StirCycleSpec::peristaltic(1.2, 3.0, 0.1, 0.1, 0.1, 0.0)).is_err());
        assert!(stir_cycle_protocol(&StirCycleSpec::peristaltic(0.0, 3.0, 0.1, 0.6, 0.1, 0.0)).is_err());
        let w = StirCycleSpec::peristaltic(0.0, 3.0, 0.1, 0.2, 0.0, 0.0)
            .validate()
            .unwrap();
        assert_eq!(w.len(), 1);
        let edge = StirCycleSpec::peristaltic(0.0, 3.0, 0.1, 0.1, 0.0, 0.0)
            .validate()
            .unwrap();
        assert!(edge.is_empty(), "{edge:?}");
    }

    #[test]
    fn second_half_blocked_when_c2_closed() {
        let spec = StirCycleSpec::peristaltic(0.0, 3.0, 0.1, 0.1, 0.0, 0.0);
        let p = stir_cycle_protocol(&spec).unwrap();
        let tl = spec.timeline();
        let mid_down = 0.5 * (tl.ramp_down.0 + tl.ramp_down.1);
        let h = p.hamiltonian_at(mid_down).unwrap();
        assert_eq!(h.get(0, 1).norm(), 0.0);
        assert_eq!(h.get(0, 2).norm(), 0.0);
        let mid_up = 0.5 * (tl.ramp_up.0 + tl.ramp_up.1);
        assert_eq!(p.hamiltonian_at(mid_up).unwrap().get(0, 1).re, 0.1);
    }

    #[test]
    fn current_operator_structure() {
        let spec = StirCycleSpec {
            first: Valves::new(0.07, 0.03),
            ..StirCycleSpec::peristaltic(0.0, 3.0, 0.1, 0.07, 0.03, 0.0)
        };
        let p = stir_cycle_protocol(&spec).unwrap();
        let t = 1.0;
        let cur = p.current_operator_at(t).unwrap();
        assert_eq!(cur.get(0, 1), I * 0.07);
        assert_eq!(cur.get(1, 0), -I * 0.07);
        assert!(cur.trace().abs() < 1e-15);
        let p02 = p.clone().with_bond(Bond::new(0, 2)).unwrap();
        let cur = p02.current_operator_at(t).unwrap();
        assert_eq!(cur.get(0, 2), I * 0.03);
        assert_eq!(cur.get(0, 1), C64::new(0.0, 0.0));

        let ring = ring_protocol(5, 1.0, 1.0).unwrap();
        let cur = ring.current_operator_at(0.0).unwrap();
        // -i(|1⟩⟨0| - |0⟩⟨1|)
        assert_eq!(cur.get(1, 0), -I);
        assert_eq!(cur.get(0, 1), I);
        assert!(ring.clone().with_bond(Bond::new(0, 2)).is_err());
        assert!(ring.with_bond(Bond::new(4, 0)).is_ok());
    }

    #[test]
    fn time_out_of_range() {
        let p = ring_protocol(3, 1.0, 2.0).unwrap();
        assert!(matches!(p.hamiltonian_at(2.5), Err(Error::TimeOutOfRange { .. })));
    }
}
