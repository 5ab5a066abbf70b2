use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{error, warn};

use qstir_lab::acceptance::{self, Resolution};
use qstir_lab::config::ScenarioKind;
use qstir_lab::{exit, output, sweep, LabError, LoadedConfig};

#[derive(Debug, Parser)]
#[command(name = "qstir", version, about = "Counting statistics of driven closed lattices")]
struct Cli {
    /// Scenario config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `[output] dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Sweep worker threads (default: available cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Also write long-format plot data.
    #[arg(long, global = true)]
    plot_data: bool,
    /// Treat warnings as config errors.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Two-site Landau-Zener sweep.
    #[command(name = "lz2")]
    Lz2,
    /// Crossing split over two paths.
    #[command(name = "double_path")]
    DoublePath,
    /// Stirring cycle of the three-site device.
    #[command(name = "stir_cycle")]
    StirCycle,
    /// Long-time counting statistics of the clean ring.
    #[command(name = "ring_longtime")]
    RingLongtime,
    /// Counting operator against occupation statistics on two sites.
    #[command(name = "correspondence")]
    Correspondence,
    /// Check a config and its sweep grid without running it.
    #[command(name = "validate")]
    Validate,
    /// Run the acceptance suite.
    #[command(name = "selftest")]
    Selftest {
        /// Full resolution instead of the reduced grids.
        #[arg(long)]
        full: bool,
    },
}

fn load(cli: &Cli) -> Result<LoadedConfig, LabError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| LabError::Config("--config <path> is required".into()))?;
    LoadedConfig::from_path(path)
}

fn report_warnings(warnings: &[String], strict: bool) -> Result<(), LabError> {
    for w in warnings {
        warn!("{w}");
    }
    if strict && !warnings.is_empty() {
        return Err(LabError::Config(format!(
            "{} warning(s) under --strict",
            warnings.len()
        )));
    }
    Ok(())
}

fn run_scenario(cli: &Cli, kind: ScenarioKind, workers: usize) -> Result<i32, LabError> {
    let cfg = load(cli)?;
    let kind = cfg.resolve_scenario(Some(kind))?;
    let (_, warnings) = sweep::plan(&cfg, kind)?;
    report_warnings(&warnings, cli.strict)?;

    let run = sweep::run(&cfg, kind, workers)?;
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.config.output.dir));
    let plot = cli.plot_data || cfg.config.output.plot_data;
    for path in output::write_all(&run, &dir, &cfg.config.output.formats, plot)? {
        println!("wrote {}", path.display());
    }
    let late: Vec<String> = run.warnings.iter().filter(|w| !warnings.contains(w)).cloned().collect();
    report_warnings(&late, cli.strict)?;

    for c in run.checks.iter().filter(|c| !c.passed) {
        let at = c.point.map(|p| format!(" (point {p})")).unwrap_or_default();
        println!("FAIL {}{at}: {}", c.name, c.detail);
    }
    for r in run.rows.iter().filter(|r| r.error.is_some()) {
        error!("point {}: {}", r.point, r.error.as_deref().unwrap_or_default());
    }
    let failed = run.failed_checks();
    println!(
        "{kind}: {} point(s), {} check(s), {failed} failed",
        run.rows.len(),
        run.checks.len()
    );
    Ok(if run.numerical_failures() > 0 {
        exit::NUMERICAL
    } else if failed > 0 {
        exit::COMPARISON
    } else {
        exit::OK
    })
}

fn validate(cli: &Cli) -> Result<i32, LabError> {
    let cfg = load(cli)?;
    let kind = cfg.resolve_scenario(None)?;
    let (plan, warnings) = sweep::plan(&cfg, kind)?;
    report_warnings(&warnings, cli.strict)?;
    println!(
        "{}: {kind}, {} point(s), {} warning(s)",
        cfg.origin,
        plan.points.len(),
        warnings.len()
    );
    Ok(exit::OK)
}

fn selftest(full: bool, workers: usize) -> i32 {
    let resolution = if full { Resolution::Full } else { Resolution::Reduced };
    let criteria = acceptance::run(resolution, workers);
    for c in &criteria {
        println!("{c}");
    }
    if criteria.iter().all(|c| c.passed) {
        exit::OK
    } else {
        exit::COMPARISON
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let workers = cli
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    let result = match cli.command {
        Command::Lz2 => run_scenario(&cli, ScenarioKind::Lz2, workers),
        Command::DoublePath => run_scenario(&cli, ScenarioKind::DoublePath, workers),
        Command::StirCycle => run_scenario(&cli, ScenarioKind::StirCycle, workers),
        Command::RingLongtime => run_scenario(&cli, ScenarioKind::RingLongtime, workers),
        Command::Correspondence => run_scenario(&cli, ScenarioKind::Correspondence, workers),
        Command::Validate => validate(&cli),
        Command::Selftest { full } => Ok(selftest(full, workers)),
    };
    let code = result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    });
    ExitCode::from(code as u8)
}
