use std::path::Path;
use std::process::{Command, Output};

use qstir_lab::config::ScenarioKind;
use qstir_lab::{output, sweep, LoadedConfig};

const LZ2_GRID: &str = r#"
scenario = "lz2"

[lz2]
c = 0.1
udot = 0.02

[sweep]
udot = [0.01, 0.02, 0.05]
"#;

fn qstir(dir: &Path, config: &str, args: &[&str]) -> Output {
    let path = dir.join("config.toml");
    std::fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_qstir"))
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .args(args)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn udot_grid_gives_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let o = qstir(dir.path(), LZ2_GRID, &["lz2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("out/lz2.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    for col in [
        "point",
        "udot",
        "p_simulated",
        "p_analytic",
        "mean",
        "variance",
        "dt",
        "steps",
        "nonconverged",
    ] {
        assert!(header.contains(&col), "missing {col}");
    }
    assert_eq!(lines.count(), 3);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/lz2.json")).unwrap()).unwrap();
    assert_eq!(json["scenario"], "lz2");
    assert_eq!(json["rows"].as_array().unwrap().len(), 3);
    assert_eq!(json["passed"], true);
    assert!(json["rows"][0]["steps"].as_u64().unwrap() > 0);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(qstir(a.path(), LZ2_GRID, &["lz2", "--workers", "1"]).status.success());
    assert!(qstir(b.path(), LZ2_GRID, &["lz2", "--workers", "3"]).status.success());
    for f in ["lz2.csv", "lz2.json"] {
        let x = std::fs::read(a.path().join("out").join(f)).unwrap();
        let y = std::fs::read(b.path().join("out").join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
}

#[test]
fn csv_round_trip_is_exact() {
    let cfg = LoadedConfig::from_str(LZ2_GRID, "grid.toml").unwrap();
    let run = sweep::run(&cfg, ScenarioKind::Lz2, 2).unwrap();
    let text = output::render_csv(&run).unwrap();
    let back = output::read_csv(&text, run.param_names.len()).unwrap();
    assert_eq!(back, run.rows);
}

#[test]
fn grid_is_cartesian_product() {
    let cfg = LoadedConfig::from_str(
        "[lz2]\nc = 0.1\nudot = 0.1\n[sweep]\nc = [0.05, 0.1, 0.2]\nudot = [0.01, 0.02, 0.05, 0.1]\n",
        "grid.toml",
    )
    .unwrap();
    let (plan, _) = sweep::plan(&cfg, ScenarioKind::Lz2).unwrap();
    assert_eq!(plan.points.len(), 12);
}

#[test]
fn single_point_sweep_matches_plain_run() {
    let plain = LoadedConfig::from_str("[lz2]\nc = 0.1\nudot = 0.02\n", "a").unwrap();
    let swept = LoadedConfig::from_str("[lz2]\nc = 0.3\nudot = 0.02\n[sweep]\nc = [0.1]\n", "b").unwrap();
    let a = sweep::run(&plain, ScenarioKind::Lz2, 1).unwrap();
    let b = sweep::run(&swept, ScenarioKind::Lz2, 1).unwrap();
    assert_eq!(a.rows[0].values, b.rows[0].values);
    assert_eq!(a.rows[0].steps, b.rows[0].steps);
}

#[test]
fn failing_point_is_flagged_and_sweep_continues() {
    let dir = tempfile::tempdir().unwrap();
    // |c|² = 0.81 is rejected as a valve coupling
    let config = "scenario = \"stir_cycle\"\n[stir_cycle]\nfirst_c1 = 0.1\nsecond_c2 = 0.1\nudot = 0.02\n\
                  [numerics]\ndt = 0.5\n[sweep]\nfirst_c1 = [0.1, 0.9, 0.12]\n";
    let o = qstir(dir.path(), config, &["stir_cycle"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let rows = output::read_csv(
        &std::fs::read_to_string(dir.path().join("out/stir_cycle.csv")).unwrap(),
        1,
    )
    .unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].error.is_none() && rows[2].error.is_none());
    assert!(rows[1].error.as_deref().unwrap().contains("valve"));
    assert!(rows[1].values.iter().all(Option::is_none));
}

#[test]
fn nonconvergence_flushes_partial_results() {
    let dir = tempfile::tempdir().unwrap();
    let config = "scenario = \"lz2\"\n[lz2]\nc = 0.1\nudot = 0.02\n\
                  [numerics]\nconvergence = 1e-300\ninitial_steps = 256\nstep_cap = 1024\n";
    let o = qstir(dir.path(), config, &["lz2"]);
    assert_eq!(o.status.code(), Some(3));
    let csv = std::fs::read_to_string(dir.path().join("out/lz2.csv")).unwrap();
    let rows = output::read_csv(&csv, 0).unwrap();
    assert!(rows[0].nonconverged);
}

#[test]
fn comparison_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = qstir(
        dir.path(),
        "scenario = \"lz2\"\n[lz2]\nc = 0.1\nudot = 0.02\ntolerance = 1e-12\n",
        &["lz2"],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL lz_probability"));
}

#[test]
fn config_errors_exit_two_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = qstir(
        dir.path(),
        "scenario = \"lz2\"\n[lz2]\nc = 0.1\nudot = 0.02\nspeed = 3\n",
        &["lz2"],
    );
    assert_eq!(unknown.status.code(), Some(2));
    assert!(stderr(&unknown).contains("speed"), "{}", stderr(&unknown));

    let bad_sweep = qstir(
        dir.path(),
        "[lz2]\nc = 0.1\nudot = 0.02\n\n[sweep]\ndwell = [1.0]\n",
        &["lz2"],
    );
    assert_eq!(bad_sweep.status.code(), Some(2));
    assert!(stderr(&bad_sweep).contains("line 6"), "{}", stderr(&bad_sweep));

    let mismatch = qstir(
        dir.path(),
        "scenario = \"lz2\"\n[lz2]\nc = 0.1\nudot = 0.02\n",
        &["ring_longtime"],
    );
    assert_eq!(mismatch.status.code(), Some(2));
}

#[test]
fn strict_turns_warnings_into_errors() {
    let dir = tempfile::tempdir().unwrap();
    // half_range below 20c: not asymptotic
    let config = "scenario = \"lz2\"\n[lz2]\nc = 0.1\nudot = 0.02\nhalf_range = 1.0\n";
    assert_eq!(qstir(dir.path(), config, &["validate"]).status.code(), Some(0));
    assert_eq!(
        qstir(dir.path(), config, &["validate", "--strict"]).status.code(),
        Some(2)
    );
    assert_eq!(qstir(dir.path(), config, &["lz2"]).status.code(), Some(0));
}

#[test]
fn dwell_scan_emits_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let dwells: Vec<String> = (0..16)
        .map(|k| format!("{:.6}", k as f64 * std::f64::consts::PI / 16.0))
        .collect();
    let config = format!(
        "scenario = \"stir_cycle\"\n[stir_cycle]\nfirst_c1 = 0.1\nsecond_c1 = 0.05\nsecond_c2 = 0.05\np_lz = 0.04\n\
         [numerics]\ndt = 0.2\n[sweep]\ndwell = [{}]\n",
        dwells.join(", ")
    );
    let o = qstir(dir.path(), &config, &["stir_cycle", "--plot-data"]);
    assert!(o.status.code().is_some_and(|c| c <= 1), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("out/stir_cycle.csv")).unwrap();
    assert_eq!(csv.lines().count(), 17);
    let header = csv.lines().next().unwrap();
    for col in [
        "dwell",
        "phi_tilde",
        "variance",
        "variance_analytic",
        "escape_simulated",
    ] {
        assert!(header.split(',').any(|h| h == col), "missing {col}");
    }
    let plot = std::fs::read_to_string(dir.path().join("out/stir_cycle_plot.csv")).unwrap();
    assert!(plot.starts_with("point,dwell,quantity,x,value"));
    assert_eq!(plot.lines().filter(|l| l.contains(",variance_vs_dwell,")).count(), 16);
}

#[test]
fn shipped_configs_validate() {
    for (name, src) in qstir_lab::acceptance::SHIPPED_CONFIGS {
        let cfg = LoadedConfig::from_str(src, name).unwrap();
        let kind = cfg.resolve_scenario(None).unwrap();
        let (plan, warnings) = sweep::plan(&cfg, kind).unwrap();
        assert!(!plan.points.is_empty());
        assert!(warnings.is_empty(), "{name}: {warnings:?}");
    }
}
