//! Scenario points: parameter sets, their evaluation and the built-in analytic
//! comparisons.

use std::f64::consts::TAU;

use qstir_core::analytic::{self, lz_probability, splitting_ratios};
use qstir_core::cycle::{analyze_cycle, Stepping};
use qstir_core::linalg::{max_abs_diff, power_moment, CMatrix, StateVector, C64};
use qstir_core::model::{
    default_half_range, double_path_protocol, stir_cycle_protocol, two_site_sweep_protocol, Bond, DoublePathSpec,
    DrivingProtocol, Ramp, StirCycleSpec, Valves,
};
use qstir_core::propagate::{accumulate_counting, converged_counting, counting_moments, CountingResult};
use qstir_core::ring::{dc_decomposition, ring_spectrum, time_averaged_variance, variance_time_series, RingModel};
use qstir_core::{operator_moments, Error, Result};

use crate::config::{
    Config, CorrespondenceParams, DoublePathParams, Lz2Params, Numerics, RingLongtimeParams, ScenarioKind,
    StirCycleParams, SweepShape,
};

/// Outcome of one built-in comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    /// Grid point the check belongs to; `None` for scan-level checks.
    pub point: Option<usize>,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, point: Option<usize>, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_owned(),
            point,
            passed,
            detail,
        }
    }
}

/// One sample of a time series or scan emitted with `--plot-data`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPoint {
    pub quantity: &'static str,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointOutcome {
    pub values: Vec<Option<f64>>,
    pub dt: Option<f64>,
    pub steps: Option<u64>,
    pub series: Vec<SeriesPoint>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
}

/// A fully specified parameter set of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioPoint {
    Lz2(Lz2Params),
    DoublePath(DoublePathParams),
    StirCycle(StirCycleParams),
    RingLongtime(RingLongtimeParams),
    Correspondence(CorrespondenceParams),
}

const LZ2_PARAMS: &[&str] = &["c", "udot", "half_range", "tolerance"];
const CORRESPONDENCE_PARAMS: &[&str] = &["c", "udot", "half_range", "tolerance"];
const DOUBLE_PATH_PARAMS: &[&str] = &[
    "c1",
    "c2",
    "udot",
    "u_min",
    "u_max",
    "valve_ramp",
    "relative_tolerance",
    "noiseless_floor",
];
const STIR_PARAMS: &[&str] = &[
    "u_min",
    "u_max",
    "udot",
    "p_lz",
    "first_c1",
    "first_c2",
    "second_c1",
    "second_c2",
    "dwell",
    "valve_ramp",
];
const RING_PARAMS: &[&str] = &["sites", "c", "n", "t_max", "samples"];

const LZ2_VALUES: &[&str] = &[
    "p_simulated",
    "p_analytic",
    "p_lz",
    "mean",
    "variance",
    "variance_analytic",
    "asymptotic",
    "unitarity_defect",
    "convergence_estimate",
];
const CORRESPONDENCE_VALUES: &[&str] = &[
    "p_simulated",
    "mean",
    "second_moment",
    "variance",
    "variance_analytic",
    "mean_error",
    "variance_error",
    "q_squared_error",
    "moment_error",
    "unitarity_defect",
    "convergence_estimate",
];
const DOUBLE_PATH_VALUES: &[&str] = &[
    "lambda",
    "lambda_stochastic",
    "p_lz",
    "p_simulated",
    "mean",
    "variance",
    "mean_analytic",
    "variance_coherent",
    "variance_stochastic",
    "mean_relative_error",
    "variance_relative_error",
    "unitarity_defect",
    "convergence_estimate",
];
const STIR_VALUES: &[&str] = &[
    "udot",
    "phi_tilde",
    "p_left",
    "p_right",
    "lambda_left",
    "lambda_right",
    "mean",
    "variance",
    "mean_analytic",
    "variance_analytic",
    "variance_adiabatic",
    "escape_simulated",
    "escape_analytic",
    "leakage",
    "fidelity",
    "fidelity_stokes",
    "unitarity_defect",
    "convergence_estimate",
];
const RING_VALUES: &[&str] = &[
    "velocity",
    "i_bar_error",
    "time_average",
    "one_sixth_relative_error",
    "series_max",
    "direct_max_error",
];

/// Names accepted in `[sweep]` for a scenario.
pub fn sweepable(kind: ScenarioKind) -> &'static [&'static str] {
    match kind {
        ScenarioKind::Lz2 => LZ2_PARAMS,
        ScenarioKind::Correspondence => CORRESPONDENCE_PARAMS,
        ScenarioKind::DoublePath => DOUBLE_PATH_PARAMS,
        ScenarioKind::StirCycle => STIR_PARAMS,
        ScenarioKind::RingLongtime => RING_PARAMS,
    }
}

/// Result columns of a scenario, after the swept parameters.
pub fn value_columns(kind: ScenarioKind) -> &'static [&'static str] {
    match kind {
        ScenarioKind::Lz2 => LZ2_VALUES,
        ScenarioKind::Correspondence => CORRESPONDENCE_VALUES,
        ScenarioKind::DoublePath => DOUBLE_PATH_VALUES,
        ScenarioKind::StirCycle => STIR_VALUES,
        ScenarioKind::RingLongtime => RING_VALUES,
    }
}

fn as_count(name: &str, v: f64) -> std::result::Result<usize, String> {
    if v >= 0.0 && v.fract() == 0.0 && v < 1e9 {
        Ok(v as usize)
    } else {
        Err(format!("{name} must be a non-negative integer, got {v}"))
    }
}

impl ScenarioPoint {
    /// The base point of `kind` as written in the config.
    pub fn base(cfg: &Config, kind: ScenarioKind) -> std::result::Result<Self, String> {
        let missing = || format!("the config has no [{kind}] section");
        Ok(match kind {
            ScenarioKind::Lz2 => ScenarioPoint::Lz2(cfg.lz2.clone().ok_or_else(missing)?),
            ScenarioKind::Correspondence => {
                ScenarioPoint::Correspondence(cfg.correspondence.clone().ok_or_else(missing)?)
            }
            ScenarioKind::DoublePath => ScenarioPoint::DoublePath(cfg.double_path.clone().ok_or_else(missing)?),
            ScenarioKind::StirCycle => ScenarioPoint::StirCycle(cfg.stir_cycle.clone().ok_or_else(missing)?),
            ScenarioKind::RingLongtime => ScenarioPoint::RingLongtime(cfg.ring_longtime.clone().ok_or_else(missing)?),
        })
    }

    pub fn kind(&self) -> ScenarioKind {
        match self {
            ScenarioPoint::Lz2(_) => ScenarioKind::Lz2,
            ScenarioPoint::DoublePath(_) => ScenarioKind::DoublePath,
            ScenarioPoint::StirCycle(_) => ScenarioKind::StirCycle,
            ScenarioPoint::RingLongtime(_) => ScenarioKind::RingLongtime,
            ScenarioPoint::Correspondence(_) => ScenarioKind::Correspondence,
        }
    }

    /// Overrides one parameter by its config name.
    pub fn set(&mut self, name: &str, v: f64) -> std::result::Result<(), String> {
        match self {
            ScenarioPoint::Lz2(p) => match name {
                "c" => p.c = v,
                "udot" => p.udot = v,
                "half_range" => p.half_range = Some(v),
                "tolerance" => p.tolerance = v,
                _ => return Err(format!("lz2 has no sweepable parameter {name}")),
            },
            ScenarioPoint::Correspondence(p) => match name {
                "c" => p.c = v,
                "udot" => p.udot = v,
                "half_range" => p.half_range = Some(v),
                "tolerance" => p.tolerance = v,
                _ => return Err(format!("correspondence has no sweepable parameter {name}")),
            },
            ScenarioPoint::DoublePath(p) => match name {
                "c1" => p.c1 = v,
                "c2" => p.c2 = v,
                "udot" => p.udot = v,
                "u_min" => p.u_min = v,
                "u_max" => p.u_max = v,
                "valve_ramp" => p.valve_ramp = v,
                "relative_tolerance" => p.relative_tolerance = v,
                "noiseless_floor" => p.noiseless_floor = v,
                _ => return Err(format!("double_path has no sweepable parameter {name}")),
            },
            ScenarioPoint::StirCycle(p) => match name {
                "u_min" => p.u_min = v,
                "u_max" => p.u_max = v,
                "udot" => {
                    p.udot = Some(v);
                    p.p_lz = None;
                }
                "p_lz" => {
                    p.p_lz = Some(v);
                    p.udot = None;
                }
                "first_c1" => p.first_c1 = v,
                "first_c2" => p.first_c2 = v,
                "second_c1" => p.second_c1 = v,
                "second_c2" => p.second_c2 = v,
                "dwell" => p.dwell = v,
                "valve_ramp" => p.valve_ramp = v,
                _ => return Err(format!("stir_cycle has no sweepable parameter {name}")),
            },
            ScenarioPoint::RingLongtime(p) => match name {
                "sites" => p.sites = as_count(name, v)?,
                "c" => p.c = v,
                "n" => p.n = Some(as_count(name, v)?),
                "t_max" => p.t_max = v,
                "samples" => p.samples = as_count(name, v)?,
                _ => return Err(format!("ring_longtime has no sweepable parameter {name}")),
            },
        }
        Ok(())
    }

    /// Builds the models of this point without running them and returns
    /// non-fatal warnings.
    pub fn check(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        match self {
            ScenarioPoint::Lz2(p) => {
                let proto = lz2_protocol(p)?;
                if !proto.is_asymptotic() {
                    warnings.push(format!(
                        "lz2 c = {}: sweep range is not asymptotic; P_LZ comparison skipped",
                        p.c
                    ));
                }
            }
            ScenarioPoint::Correspondence(p) => {
                correspondence_protocol(p)?;
            }
            ScenarioPoint::DoublePath(p) => {
                double_path_protocol(&double_path_spec(p))?;
                splitting_ratios(p.c1, p.c2)?;
            }
            ScenarioPoint::StirCycle(p) => {
                warnings.extend(stir_spec(p)?.validate()?);
            }
            ScenarioPoint::RingLongtime(p) => {
                let m = RingModel::new(p.sites, p.c)?;
                let n = ring_level(p);
                if n >= m.sites() {
                    return Err(Error::InvalidParameter {
                        name: "n",
                        reason: format!("{n} outside 0..{}", m.sites()),
                    });
                }
                if p.samples < 2 || !(p.t_max > 0.0) {
                    return Err(Error::InvalidParameter {
                        name: "samples",
                        reason: "need at least 2 samples over a positive t_max".into(),
                    });
                }
            }
        }
        Ok(warnings)
    }

    /// The driving protocol of the point with the initial state it counts on.
    pub fn protocol(&self) -> Result<(DrivingProtocol, StateVector)> {
        Ok(match self {
            ScenarioPoint::Lz2(p) => (lz2_protocol(p)?, StateVector::basis(2, 0)?),
            ScenarioPoint::Correspondence(p) => (correspondence_protocol(p)?, StateVector::basis(2, 0)?),
            ScenarioPoint::DoublePath(p) => (double_path_protocol(&double_path_spec(p))?, StateVector::basis(3, 0)?),
            ScenarioPoint::StirCycle(p) => (stir_cycle_protocol(&stir_spec(p)?)?, StateVector::basis(3, 0)?),
            ScenarioPoint::RingLongtime(p) => {
                let m = RingModel::new(p.sites, p.c)?;
                (m.protocol(p.t_max)?, m.momentum_state(ring_level(p))?)
            }
        })
    }

    /// Runs the point. `index` labels its checks.
    pub fn evaluate(&self, numerics: &Numerics, index: usize) -> Result<PointOutcome> {
        let warnings = self.check()?;
        let mut out = match self {
            ScenarioPoint::Lz2(p) => eval_lz2(p, numerics, index)?,
            ScenarioPoint::Correspondence(p) => eval_correspondence(p, numerics, index)?,
            ScenarioPoint::DoublePath(p) => eval_double_path(p, numerics, index)?,
            ScenarioPoint::StirCycle(p) => eval_stir(p, numerics, index)?,
            ScenarioPoint::RingLongtime(p) => eval_ring(p, numerics, index)?,
        };
        out.warnings.extend(warnings);
        Ok(out)
    }
}

fn lz2_protocol(p: &Lz2Params) -> Result<DrivingProtocol> {
    let ramp = match p.shape {
        SweepShape::Linear => Ramp::Linear,
        SweepShape::Smooth => Ramp::Smooth,
    };
    two_site_sweep_protocol(
        p.c,
        p.udot,
        p.half_range.unwrap_or_else(|| default_half_range(p.c)),
        ramp,
    )
}

fn correspondence_protocol(p: &CorrespondenceParams) -> Result<DrivingProtocol> {
    two_site_sweep_protocol(
        p.c,
        p.udot,
        p.half_range.unwrap_or_else(|| default_half_range(p.c)),
        Ramp::Linear,
    )
}

pub(crate) fn double_path_spec(p: &DoublePathParams) -> DoublePathSpec {
    DoublePathSpec {
        valves: Valves::new(p.c1, p.c2),
        udot: p.udot,
        u_min: p.u_min,
        u_max: p.u_max,
        valve_ramp: p.valve_ramp,
    }
}

/// Resolves `udot` from `p_lz` through the first-half crossing coupling.
pub(crate) fn stir_spec(p: &StirCycleParams) -> Result<StirCycleSpec> {
    let first = Valves::new(p.first_c1, p.first_c2);
    let udot = match (p.udot, p.p_lz) {
        (Some(u), None) => u,
        (None, Some(target)) => {
            if !(target > 0.0 && target < 1.0) {
                return Err(Error::InvalidParameter {
                    name: "p_lz",
                    reason: format!("must lie in (0, 1), got {target}"),
                });
            }
            let g = first.crossing_coupling();
            if g == 0.0 {
                return Err(Error::InvalidParameter {
                    name: "p_lz",
                    reason: "the first-half crossing coupling is zero".into(),
                });
            }
            TAU * g * g / -target.ln()
        }
        _ => {
            return Err(Error::InvalidParameter {
                name: "udot",
                reason: "give exactly one of udot and p_lz".into(),
            })
        }
    };
    let spec = StirCycleSpec {
        u_min: p.u_min,
        u_max: p.u_max,
        udot,
        first,
        second: Valves::new(p.second_c1, p.second_c2),
        dwell: p.dwell,
        valve_ramp: p.valve_ramp,
        bond: Bond::new(p.bond[0], p.bond[1]),
    };
    Ok(spec)
}

fn ring_level(p: &RingLongtimeParams) -> usize {
    p.n.unwrap_or_else(|| (p.sites as f64 / 4.0).round() as usize)
}

pub(crate) fn count(p: &DrivingProtocol, psi: &StateVector, numerics: &Numerics) -> Result<CountingResult> {
    match numerics.fixed_dt() {
        Some(dt) => counting_moments(&accumulate_counting(p, dt)?, psi),
        None => converged_counting(p, psi, &numerics.tolerances()),
    }
}

fn outcome(values: Vec<Option<f64>>, r: Option<&CountingResult>) -> PointOutcome {
    PointOutcome {
        values,
        dt: r.map(|r| r.dt),
        steps: r.map(|r| r.step_count as u64),
        series: Vec::new(),
        checks: Vec::new(),
        warnings: Vec::new(),
    }
}

fn within(name: &str, index: usize, value: f64, tolerance: f64) -> Check {
    Check::new(
        name,
        Some(index),
        value.abs() <= tolerance,
        format!("|error| = {:.3e}, tolerance {tolerance:.3e}", value.abs()),
    )
}

fn eval_lz2(p: &Lz2Params, numerics: &Numerics, index: usize) -> Result<PointOutcome> {
    let proto = lz2_protocol(p)?;
    let psi = StateVector::basis(2, 0)?;
    let r = count(&proto, &psi, numerics)?;
    let p_sim = r.final_unitary.get(1, 0).norm_sqr();
    let p_lz = lz_probability(p.c, p.udot)?;
    let asymptotic = proto.is_asymptotic();
    let mut out = outcome(
        vec![
            Some(p_sim),
            Some(1.0 - p_lz),
            Some(p_lz),
            Some(r.mean),
            Some(r.variance),
            Some((1.0 - p_sim) * p_sim),
            Some(if asymptotic { 1.0 } else { 0.0 }),
            Some(r.final_unitary.defect()),
            r.convergence_estimate,
        ],
        Some(&r),
    );
    if asymptotic {
        out.checks
            .push(within("lz_probability", index, p_sim - (1.0 - p_lz), p.tolerance));
    }
    Ok(out)
}

fn eval_correspondence(p: &CorrespondenceParams, numerics: &Numerics, index: usize) -> Result<PointOutcome> {
    let proto = correspondence_protocol(p)?;
    let psi = StateVector::basis(2, 0)?;
    let r = count(&proto, &psi, numerics)?;
    let occ = r.final_unitary.get(1, 0).norm_sqr();
    let q2 = r.q_op.matrix() * r.q_op.matrix();
    let q2_err = max_abs_diff(&q2, &(CMatrix::identity(2, 2) * C64::new(occ, 0.0)));
    let mut moment_err: f64 = 0.0;
    for k in 3..=6u32 {
        let expected = occ.powi(k.div_ceil(2) as i32);
        moment_err = moment_err.max((power_moment(&r.q_op, &psi, k)? - expected).abs());
    }
    let mean_err = r.mean - occ;
    let var_err = r.variance - (1.0 - occ) * occ;
    let mut out = outcome(
        vec![
            Some(occ),
            Some(r.mean),
            Some(r.second_moment),
            Some(r.variance),
            Some((1.0 - occ) * occ),
            Some(mean_err),
            Some(var_err),
            Some(q2_err),
            Some(moment_err),
            Some(r.final_unitary.defect()),
            r.convergence_estimate,
        ],
        Some(&r),
    );
    out.checks.push(within("mean_equals_p", index, mean_err, p.tolerance));
    out.checks
        .push(within("variance_equals_binomial", index, var_err, p.tolerance));
    out.checks.push(within("q_squared_is_p", index, q2_err, p.tolerance));
    out.checks
        .push(within("higher_moments", index, moment_err, p.tolerance));
    Ok(out)
}

fn eval_double_path(p: &DoublePathParams, numerics: &Numerics, index: usize) -> Result<PointOutcome> {
    let proto = double_path_protocol(&double_path_spec(p))?;
    let psi = StateVector::basis(3, 0)?;
    let r = count(&proto, &psi, numerics)?;
    let (lambda, lambda_s) = splitting_ratios(p.c1, p.c2)?;
    let p_lz = lz_probability(Valves::new(p.c1, p.c2).crossing_coupling(), p.udot)?;
    let p_sim = (1.0 - r.final_unitary.get(0, 0).norm_sqr()).clamp(0.0, 1.0);
    let m = analytic::double_path_moments(lambda, p_sim, lambda_s)?;
    let mean_rel = (r.mean - m.mean) / m.mean.abs().max(f64::MIN_POSITIVE);
    let var_rel = if m.var_coherent > 0.0 {
        (r.variance - m.var_coherent) / m.var_coherent
    } else {
        f64::INFINITY
    };
    let mut out = outcome(
        vec![
            Some(lambda),
            Some(lambda_s),
            Some(p_lz),
            Some(p_sim),
            Some(r.mean),
            Some(r.variance),
            Some(m.mean),
            Some(m.var_coherent),
            Some(m.var_stochastic),
            Some(mean_rel),
            var_rel.is_finite().then_some(var_rel),
            Some(r.final_unitary.defect()),
            r.convergence_estimate,
        ],
        Some(&r),
    );
    out.checks
        .push(within("mean_splitting", index, mean_rel, p.relative_tolerance));
    if m.var_coherent < p.noiseless_floor {
        out.checks.push(Check::new(
            "noiseless_splitting",
            Some(index),
            r.variance < p.noiseless_floor,
            format!("Var = {:.3e}, floor {:.3e}", r.variance, p.noiseless_floor),
        ));
    } else {
        out.checks
            .push(within("variance_coherent", index, var_rel, p.relative_tolerance));
    }
    Ok(out)
}

fn eval_stir(p: &StirCycleParams, numerics: &Numerics, index: usize) -> Result<PointOutcome> {
    let spec = stir_spec(p)?;
    let stepping = match numerics.fixed_dt() {
        Some(dt) => Stepping::Fixed(dt),
        None => Stepping::Converged(numerics.tolerances()),
    };
    let a = analyze_cycle(&spec, stepping)?;
    let cp = &a.params;
    let mut out = outcome(
        vec![
            Some(spec.udot),
            Some(cp.phi_tilde),
            Some(cp.p_left),
            Some(cp.p_right),
            Some(cp.lambda_left),
            Some(cp.lambda_right),
            Some(a.counting.mean),
            Some(a.counting.variance),
            Some(a.analytic.mean),
            Some(a.analytic.variance),
            Some(a.analytic.variance_adiabatic),
            Some(a.escape_simulated),
            Some(a.escape_analytic),
            Some(a.leakage),
            Some(a.fidelity),
            Some(a.fidelity_with_stokes),
            Some(a.counting.final_unitary.defect()),
            a.counting.convergence_estimate,
        ],
        Some(&a.counting),
    );
    let p_max = cp.p_left.max(cp.p_right);
    out.checks.push(within(
        "mean_is_lambda_difference",
        index,
        a.counting.mean - a.analytic.mean,
        p.mean_factor * p_max,
    ));
    if let Some(f) = p.fidelity_min {
        out.checks.push(Check::new(
            "cycle_unitary_fidelity",
            Some(index),
            a.fidelity > f,
            format!(
                "fidelity {:.6}, with Stokes phase {:.6}, required > {f}",
                a.fidelity, a.fidelity_with_stokes
            ),
        ));
    }
    if a.analytic.beyond_leading_order {
        out.warnings.push(format!(
            "point {index}: P_LZ = {p_max:.3} is beyond the leading-order range"
        ));
    }
    Ok(out)
}

fn eval_ring(p: &RingLongtimeParams, numerics: &Numerics, index: usize) -> Result<PointOutcome> {
    let m = RingModel::new(p.sites, p.c)?;
    let n = ring_level(p);
    let spectrum = ring_spectrum(&m);
    let dc = dc_decomposition(&m.bond_current(), &spectrum, numerics.degeneracy)?;
    let v_over_n = spectrum.to_eigenbasis(m.velocity_operator().matrix()) / C64::new(p.sites as f64, 0.0);
    let i_bar_err = max_abs_diff(dc.i_bar.matrix(), &v_over_n);
    let avg = time_averaged_variance(&m, n)?;
    let times: Vec<f64> = (0..p.samples)
        .map(|k| p.t_max * k as f64 / (p.samples - 1) as f64)
        .collect();
    let series = variance_time_series(&m, n, &times)?;
    let psi = m.momentum_state(n)?;
    let mut direct_err: f64 = 0.0;
    let mut plot = Vec::with_capacity(3 * times.len());
    for pt in &series {
        let direct = if pt.t > 0.0 {
            // the ring is static: one exact step per sample time
            let q = accumulate_counting(&m.protocol(pt.t)?, pt.t)?;
            operator_moments(&q.q_op, &psi)?.variance
        } else {
            0.0
        };
        direct_err = direct_err.max((direct - pt.variance).abs());
        plot.push(SeriesPoint {
            quantity: "variance",
            x: pt.t,
            y: pt.variance,
        });
        plot.push(SeriesPoint {
            quantity: "variance_direct",
            x: pt.t,
            y: direct,
        });
        plot.push(SeriesPoint {
            quantity: "mean",
            x: pt.t,
            y: pt.mean,
        });
    }
    // the 1/6 estimate linearizes the spectrum around the fastest level
    let sixth_applies = p.sites >= 50 && n == (p.sites as f64 / 4.0).round() as usize;
    let sixth_err = sixth_applies.then(|| (avg - 1.0 / 6.0) / (1.0 / 6.0));
    let series_max = series.iter().map(|s| s.variance).fold(0.0, f64::max);
    let mut out = outcome(
        vec![
            Some(m.velocity(n)),
            Some(i_bar_err),
            Some(avg),
            sixth_err,
            Some(series_max),
            Some(direct_err),
        ],
        None,
    );
    out.series = plot;
    out.checks
        .push(within("dc_part_is_velocity", index, i_bar_err, p.dc_tolerance));
    out.checks.push(within(
        "series_matches_propagation",
        index,
        direct_err,
        p.series_tolerance,
    ));
    if let Some(e) = sixth_err {
        out.checks.push(within("one_sixth", index, e, p.one_sixth_relative));
    }
    Ok(out)
}

/// Scan-level comparisons over completed rows: for the stirring cycle, the
/// variance maxima and the decoupling point of each dwell scan.
pub fn summarize(
    kind: ScenarioKind,
    base: &ScenarioPoint,
    param_names: &[String],
    rows: &[crate::sweep::ResultRow],
) -> Vec<Check> {
    let ScenarioPoint::StirCycle(params) = base else {
        return Vec::new();
    };
    debug_assert_eq!(kind, ScenarioKind::StirCycle);
    let Some(dwell_col) = param_names.iter().position(|n| n == "dwell") else {
        return Vec::new();
    };
    let col = |name: &str| STIR_VALUES.iter().position(|v| *v == name).expect("known column");
    let (var, var_an, escape, pl, pr, ll, lr) = (
        col("variance"),
        col("variance_analytic"),
        col("escape_simulated"),
        col("p_left"),
        col("p_right"),
        col("lambda_left"),
        col("lambda_right"),
    );

    // group completed rows by every swept parameter except the dwell
    let mut groups: Vec<(Vec<f64>, Vec<&crate::sweep::ResultRow>)> = Vec::new();
    for row in rows.iter().filter(|r| r.error.is_none() && !r.nonconverged) {
        let key: Vec<f64> = row
            .params
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != dwell_col)
            .map(|(_, v)| *v)
            .collect();
        match groups.iter_mut().find(|(k, _)| k == &key) {
            Some((_, g)) => g.push(row),
            None => groups.push((key, vec![row])),
        }
    }

    let mut checks = Vec::new();
    for (key, group) in groups {
        if group.len() < 4 {
            continue;
        }
        let label = if key.is_empty() {
            String::new()
        } else {
            format!(" at {key:?}")
        };
        let v = |r: &crate::sweep::ResultRow, c: usize| r.values[c].unwrap_or(f64::NAN);
        let max_sim = group.iter().map(|r| v(r, var)).fold(f64::NEG_INFINITY, f64::max);
        let max_an = group.iter().map(|r| v(r, var_an)).fold(f64::NEG_INFINITY, f64::max);
        checks.push(Check::new(
            "variance_tracks_at_maxima",
            None,
            (max_sim - max_an).abs() <= params.variance_relative * max_an,
            format!("max simulated Var {max_sim:.6e} vs analytic {max_an:.6e}{label}"),
        ));
        let equal_p = group
            .iter()
            .all(|r| (v(r, pl) - v(r, pr)).abs() <= 1e-9 * v(r, pl).max(1e-300));
        if equal_p {
            let best = group
                .iter()
                .min_by(|a, b| v(a, escape).total_cmp(&v(b, escape)))
                .expect("group is not empty");
            let target = (v(best, ll) - v(best, lr)).powi(2) * v(best, pl);
            let sim = v(best, var);
            checks.push(Check::new(
                "counting_decouples_from_occupation",
                None,
                (sim - target).abs() <= params.decoupling_relative * target && target > 0.0,
                format!(
                    "at minimal escape {:.3e} (point {}): Var {sim:.6e} vs (λ◁−λ▷)²P {target:.6e}{label}",
                    v(best, escape),
                    best.point
                ),
            ));
        }
    }
    checks
}
