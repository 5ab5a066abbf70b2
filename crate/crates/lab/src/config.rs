//! TOML scenario configuration.
//!
//! Every table rejects unknown keys. Semantic errors found after parsing are
//! reported with the line of the offending key when it can be located.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::Deserialize;

use crate::error::LabError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Lz2,
    DoublePath,
    StirCycle,
    RingLongtime,
    Correspondence,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 5] = [
        ScenarioKind::Lz2,
        ScenarioKind::DoublePath,
        ScenarioKind::StirCycle,
        ScenarioKind::RingLongtime,
        ScenarioKind::Correspondence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Lz2 => "lz2",
            ScenarioKind::DoublePath => "double_path",
            ScenarioKind::StirCycle => "stir_cycle",
            ScenarioKind::RingLongtime => "ring_longtime",
            ScenarioKind::Correspondence => "correspondence",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepShape {
    #[default]
    Linear,
    Smooth,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lz2Params {
    pub c: f64,
    pub udot: f64,
    /// Defaults to `max(20c, 10)`.
    pub half_range: Option<f64>,
    #[serde(default)]
    pub shape: SweepShape,
    /// Absolute tolerance on `p` against `1 − P_LZ`.
    #[serde(default = "defaults::lz_tolerance")]
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrespondenceParams {
    pub c: f64,
    pub udot: f64,
    pub half_range: Option<f64>,
    #[serde(default = "defaults::correspondence_tolerance")]
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoublePathParams {
    pub c1: f64,
    pub c2: f64,
    pub udot: f64,
    #[serde(default = "defaults::u_min")]
    pub u_min: f64,
    #[serde(default = "defaults::u_max")]
    pub u_max: f64,
    #[serde(default = "defaults::double_path_ramp")]
    pub valve_ramp: f64,
    #[serde(default = "defaults::relative_tolerance")]
    pub relative_tolerance: f64,
    /// Coherent variances below this count as noiseless; the simulated one
    /// must then stay below it too.
    #[serde(default = "defaults::noiseless_floor")]
    pub noiseless_floor: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StirCycleParams {
    #[serde(default = "defaults::u_min")]
    pub u_min: f64,
    #[serde(default = "defaults::u_max")]
    pub u_max: f64,
    /// Ramp rate; give either this or `p_lz`.
    pub udot: Option<f64>,
    /// Target Landau–Zener probability of the first crossing, fixing `udot`.
    pub p_lz: Option<f64>,
    #[serde(alias = "c1_open")]
    pub first_c1: f64,
    #[serde(default)]
    pub first_c2: f64,
    #[serde(default)]
    pub second_c1: f64,
    #[serde(alias = "c2_open")]
    pub second_c2: f64,
    #[serde(default)]
    pub dwell: f64,
    #[serde(default)]
    pub valve_ramp: f64,
    #[serde(default = "defaults::bond")]
    pub bond: [usize; 2],
    /// `|⟨Q⟩ − (λ◁ − λ▷)| ≤ mean_factor · max(P◁, P▷)`.
    #[serde(default = "defaults::mean_factor")]
    pub mean_factor: f64,
    #[serde(default = "defaults::relative_tolerance_cycle")]
    pub variance_relative: f64,
    #[serde(default = "defaults::decoupling_relative")]
    pub decoupling_relative: f64,
    /// When set, every point must reach this fidelity against the analytic cycle unitary.
    pub fidelity_min: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingLongtimeParams {
    pub sites: usize,
    #[serde(default = "defaults::ring_c")]
    pub c: f64,
    /// Defaults to `round(N/4)`.
    pub n: Option<usize>,
    #[serde(default = "defaults::t_max")]
    pub t_max: f64,
    #[serde(default = "defaults::samples")]
    pub samples: usize,
    #[serde(default = "defaults::series_tolerance")]
    pub series_tolerance: f64,
    #[serde(default = "defaults::dc_tolerance")]
    pub dc_tolerance: f64,
    #[serde(default = "defaults::one_sixth_relative")]
    pub one_sixth_relative: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum DtSetting {
    Fixed(f64),
    Named(String),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    /// A step size, or `"auto"` for halving until converged.
    #[serde(default = "defaults::dt")]
    pub dt: DtSetting,
    #[serde(default = "defaults::convergence")]
    pub convergence: f64,
    #[serde(default = "defaults::initial_steps")]
    pub initial_steps: usize,
    #[serde(default = "defaults::step_cap")]
    pub step_cap: usize,
    #[serde(default = "defaults::degeneracy")]
    pub degeneracy: f64,
    #[serde(default = "defaults::max_points")]
    pub max_points: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            dt: defaults::dt(),
            convergence: defaults::convergence(),
            initial_steps: defaults::initial_steps(),
            step_cap: defaults::step_cap(),
            degeneracy: defaults::degeneracy(),
            max_points: defaults::max_points(),
        }
    }
}

impl Numerics {
    pub fn fixed_dt(&self) -> Option<f64> {
        match self.dt {
            DtSetting::Fixed(dt) => Some(dt),
            DtSetting::Named(_) => None,
        }
    }

    pub fn tolerances(&self) -> qstir_core::tolerances::Tolerances {
        qstir_core::tolerances::Tolerances {
            convergence: self.convergence,
            initial_steps: self.initial_steps,
            step_cap: self.step_cap,
            degeneracy: self.degeneracy,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "defaults::out_dir")]
    pub dir: String,
    #[serde(default = "defaults::formats")]
    pub formats: Vec<Format>,
    #[serde(default)]
    pub plot_data: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: defaults::out_dir(),
            formats: defaults::formats(),
            plot_data: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub scenario: Option<ScenarioKind>,
    pub lz2: Option<Lz2Params>,
    pub double_path: Option<DoublePathParams>,
    pub stir_cycle: Option<StirCycleParams>,
    pub ring_longtime: Option<RingLongtimeParams>,
    pub correspondence: Option<CorrespondenceParams>,
    #[serde(default)]
    pub numerics: Numerics,
    /// Parameter name to list of values; the run covers the Cartesian product.
    #[serde(default)]
    pub sweep: BTreeMap<String, Vec<f64>>,
    #[serde(default)]
    pub output: OutputConfig,
}

/// A parsed configuration with its source text, for locating errors.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: Config,
    pub source: String,
    pub origin: String,
}

impl LoadedConfig {
    pub fn from_str(source: &str, origin: &str) -> Result<Self, LabError> {
        let config: Config = toml::from_str(source).map_err(|e| LabError::Config(format!("{origin}: {e}")))?;
        Ok(Self {
            config,
            source: source.to_owned(),
            origin: origin.to_owned(),
        })
    }

    pub fn from_path(path: &Path) -> Result<Self, LabError> {
        let source = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_str(&source, &path.display().to_string())
    }

    /// Config error pointing at `key` inside `[section]`, with its line when found.
    pub fn error_at(&self, section: &str, key: &str, message: impl fmt::Display) -> LabError {
        match find_line(&self.source, section, key) {
            Some(line) => LabError::Config(format!("{}: line {line}: [{section}] {key}: {message}", self.origin)),
            None => LabError::Config(format!("{}: [{section}] {key}: {message}", self.origin)),
        }
    }

    /// The scenario to run: the subcommand's if given, which must agree with
    /// the file's `scenario` key when both are present.
    pub fn resolve_scenario(&self, requested: Option<ScenarioKind>) -> Result<ScenarioKind, LabError> {
        match (requested, self.config.scenario) {
            (Some(r), Some(f)) if r != f => {
                Err(self.error_at("", "scenario", format!("file names {f}, command asked for {r}")))
            }
            (Some(r), _) => Ok(r),
            (None, Some(f)) => Ok(f),
            (None, None) => Err(LabError::Config(format!("{}: no scenario given", self.origin))),
        }
    }
}

/// 1-based line of `key = ...` inside `[section]` (empty section: top level).
pub fn find_line(source: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, raw) in source.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            current = line.trim_matches(|c| c == '[' || c == ']').trim().to_owned();
            continue;
        }
        if current != section {
            continue;
        }
        if let Some((k, _)) = line.split_once('=') {
            if k.trim().trim_matches('"') == key {
                return Some(i + 1);
            }
        }
    }
    if section.is_empty() {
        None
    } else {
        source
            .lines()
            .position(|l| l.trim() == format!("[{section}]"))
            .map(|i| i + 1)
    }
}

mod defaults {
    use super::{DtSetting, Format};

    pub fn lz_tolerance() -> f64 {
        0.02
    }
    pub fn correspondence_tolerance() -> f64 {
        1e-3
    }
    pub fn u_min() -> f64 {
        0.0
    }
    pub fn u_max() -> f64 {
        3.0
    }
    pub fn double_path_ramp() -> f64 {
        30.0
    }
    pub fn relative_tolerance() -> f64 {
        0.05
    }
    pub fn noiseless_floor() -> f64 {
        1e-4
    }
    pub fn bond() -> [usize; 2] {
        [0, 1]
    }
    pub fn mean_factor() -> f64 {
        3.0
    }
    pub fn relative_tolerance_cycle() -> f64 {
        0.1
    }
    pub fn decoupling_relative() -> f64 {
        0.2
    }
    pub fn ring_c() -> f64 {
        1.0
    }
    pub fn t_max() -> f64 {
        200.0
    }
    pub fn samples() -> usize {
        64
    }
    pub fn series_tolerance() -> f64 {
        1e-6
    }
    pub fn dc_tolerance() -> f64 {
        1e-12
    }
    pub fn one_sixth_relative() -> f64 {
        0.1
    }
    pub fn dt() -> DtSetting {
        DtSetting::Named("auto".into())
    }
    pub fn convergence() -> f64 {
        1e-6
    }
    pub fn initial_steps() -> usize {
        1 << 14
    }
    pub fn step_cap() -> usize {
        1 << 20
    }
    pub fn degeneracy() -> f64 {
        1e-9
    }
    pub fn max_points() -> usize {
        1_000_000
    }
    pub fn out_dir() -> String {
        "results".into()
    }
    pub fn formats() -> Vec<Format> {
        vec![Format::Csv, Format::Json]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_lz2() {
        let cfg = LoadedConfig::from_str("scenario = \"lz2\"\n[lz2]\nc = 0.1\nudot = 0.02\n", "t").unwrap();
        let lz = cfg.config.lz2.unwrap();
        assert_eq!(lz.shape, SweepShape::Linear);
        assert_eq!(lz.half_range, None);
        assert_eq!(cfg.config.numerics.fixed_dt(), None);
        assert_eq!(cfg.config.output.formats, vec![Format::Csv, Format::Json]);
    }

    #[test]
    fn unknown_key_has_line() {
        let err = LoadedConfig::from_str("[lz2]\nc = 0.1\nudott = 0.02\n", "t").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3"), "{msg}");
        assert!(msg.contains("udott"), "{msg}");
    }

    #[test]
    fn aliases_for_valves() {
        let cfg = LoadedConfig::from_str("[stir_cycle]\nc1_open = 0.1\nc2_open = 0.05\nudot = 0.01\n", "t").unwrap();
        let s = cfg.config.stir_cycle.unwrap();
        assert_eq!(
            (s.first_c1, s.first_c2, s.second_c1, s.second_c2),
            (0.1, 0.0, 0.0, 0.05)
        );
    }

    #[test]
    fn locating_keys() {
        let src = "scenario = \"lz2\"\n[lz2]\nc = 1\n\n[sweep]\nudot = [1, 2]\n";
        assert_eq!(find_line(src, "sweep", "udot"), Some(6));
        assert_eq!(find_line(src, "", "scenario"), Some(1));
        assert_eq!(find_line(src, "lz2", "udot"), Some(2));
    }

    #[test]
    fn scenario_resolution() {
        let cfg = LoadedConfig::from_str("scenario = \"lz2\"\n", "t").unwrap();
        assert_eq!(cfg.resolve_scenario(None).unwrap(), ScenarioKind::Lz2);
        assert!(cfg.resolve_scenario(Some(ScenarioKind::StirCycle)).is_err());
        let empty = LoadedConfig::from_str("", "t").unwrap();
        assert!(empty.resolve_scenario(None).is_err());
    }
}
