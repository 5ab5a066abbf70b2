//! Cartesian parameter sweeps over one scenario.

use log::{info, warn};
use rayon::prelude::*;

use crate::config::{DtSetting, LoadedConfig, ScenarioKind};
use crate::error::LabError;
use crate::scenario::{self, Check, ScenarioPoint, SeriesPoint};

/// One grid point of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub point: usize,
    pub params: Vec<f64>,
    pub values: Vec<Option<f64>>,
    pub dt: Option<f64>,
    pub steps: Option<u64>,
    pub nonconverged: bool,
    pub error: Option<String>,
}

/// The expanded grid. Keys are in alphabetical order with the last varying
/// fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub kind: ScenarioKind,
    pub base: ScenarioPoint,
    pub names: Vec<String>,
    pub points: Vec<ScenarioPoint>,
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub kind: ScenarioKind,
    pub param_names: Vec<String>,
    pub value_names: Vec<&'static str>,
    pub rows: Vec<ResultRow>,
    pub series: Vec<(usize, SeriesPoint)>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
}

impl RunResult {
    pub fn failed_checks(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }

    pub fn numerical_failures(&self) -> usize {
        self.rows.iter().filter(|r| r.nonconverged || r.error.is_some()).count()
    }
}

/// Expands `[sweep]` for `kind` and validates every point without running it.
/// Returns the plan and the warnings raised by the points.
pub fn plan(cfg: &LoadedConfig, kind: ScenarioKind) -> Result<(SweepPlan, Vec<String>), LabError> {
    let base = ScenarioPoint::base(&cfg.config, kind).map_err(|m| LabError::Config(format!("{}: {m}", cfg.origin)))?;
    if let DtSetting::Named(name) = &cfg.config.numerics.dt {
        if name != "auto" {
            return Err(cfg.error_at("numerics", "dt", format!("expected a number or \"auto\", got {name:?}")));
        }
    }
    if let Some(dt) = cfg.config.numerics.fixed_dt() {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(cfg.error_at("numerics", "dt", format!("must be positive, got {dt}")));
        }
    }

    let allowed = scenario::sweepable(kind);
    let mut total: usize = 1;
    for (name, values) in &cfg.config.sweep {
        if !allowed.contains(&name.as_str()) {
            return Err(cfg.error_at(
                "sweep",
                name,
                format!("{kind} has no parameter {name}; sweepable: {}", allowed.join(", ")),
            ));
        }
        if values.is_empty() {
            return Err(cfg.error_at("sweep", name, "empty value list"));
        }
        total = total
            .checked_mul(values.len())
            .filter(|t| *t <= cfg.config.numerics.max_points)
            .ok_or_else(|| {
                cfg.error_at(
                    "sweep",
                    name,
                    format!("grid exceeds max_points = {}", cfg.config.numerics.max_points),
                )
            })?;
    }

    let names: Vec<String> = cfg.config.sweep.keys().cloned().collect();
    let lists: Vec<&Vec<f64>> = cfg.config.sweep.values().collect();
    let mut points = Vec::with_capacity(total);
    let mut values = Vec::with_capacity(total);
    let mut warnings = Vec::new();
    for index in 0..total {
        let mut rest = index;
        let mut combo = vec![0.0; lists.len()];
        for (k, list) in lists.iter().enumerate().rev() {
            combo[k] = list[rest % list.len()];
            rest /= list.len();
        }
        let mut point = base.clone();
        for (name, v) in names.iter().zip(&combo) {
            point.set(name, *v).map_err(|m| cfg.error_at("sweep", name, m))?;
        }
        match point.check() {
            Ok(w) => warnings.extend(w.into_iter().map(|w| format!("point {index}: {w}"))),
            // a bad base point is a config error; a bad grid point only fails that point
            Err(e) if total == 1 || names.is_empty() => return Err(cfg.error_at(kind.name(), "", e)),
            Err(e) => warnings.push(format!("point {index}: {e}")),
        }
        points.push(point);
        values.push(combo);
    }
    Ok((
        SweepPlan {
            kind,
            base,
            names,
            points,
            values,
        },
        warnings,
    ))
}

/// Runs every point of the plan on `workers` threads. Failing points are
/// recorded in their rows and the sweep continues.
pub fn run(cfg: &LoadedConfig, kind: ScenarioKind, workers: usize) -> Result<RunResult, LabError> {
    let (plan, mut warnings) = plan(cfg, kind)?;
    let numerics = cfg.config.numerics.clone();
    info!("{kind}: {} point(s) on {workers} worker(s)", plan.points.len());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| LabError::Io(e.to_string()))?;
    let outcomes: Vec<_> = pool.install(|| {
        plan.points
            .par_iter()
            .enumerate()
            .map(|(i, p)| (i, p.evaluate(&numerics, i)))
            .collect()
    });

    let width = scenario::value_columns(kind).len();
    let mut rows = Vec::with_capacity(outcomes.len());
    let mut series = Vec::new();
    let mut checks = Vec::new();
    for ((i, outcome), params) in outcomes.into_iter().zip(plan.values) {
        match outcome {
            Ok(o) => {
                warnings.extend(o.warnings);
                checks.extend(o.checks);
                series.extend(o.series.into_iter().map(|s| (i, s)));
                rows.push(ResultRow {
                    point: i,
                    params,
                    values: o.values,
                    dt: o.dt,
                    steps: o.steps,
                    nonconverged: false,
                    error: None,
                });
            }
            Err(e) => {
                warn!("point {i}: {e}");
                rows.push(ResultRow {
                    point: i,
                    params,
                    values: vec![None; width],
                    dt: None,
                    steps: None,
                    nonconverged: matches!(e, qstir_core::Error::NotConverged { .. }),
                    error: Some(e.to_string()),
                });
            }
        }
    }
    checks.extend(scenario::summarize(kind, &plan.base, &plan.names, &rows));
    Ok(RunResult {
        kind,
        param_names: plan.names,
        value_names: scenario::value_columns(kind).to_vec(),
        rows,
        series,
        checks,
        warnings,
    })
}
