//! `twinwind`: run, compare and sweep twin-turbine scenarios.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use twinwind::record::{write_csv_file, write_json, RecordError};
use twinwind::scenario::{ConfigError, ScenarioConfig};
use twinwind::study::{self, OutcomeSummary, RunReport};
use twinwind::{ModelError, SimError};

const EXIT_IO: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_CONFIG: u8 = 3;
const EXIT_DIVERGED: u8 = 4;
const EXIT_SINGULAR: u8 = 5;

/// Environment variable naming the directory searched for scenario files.
const CONFIG_DIR_VAR: &str = "TWINWIND_CONFIG_DIR";

#[derive(Parser)]
#[command(
    name = "twinwind",
    version,
    about = "Twin wind turbine fault-tolerant control simulator",
    after_help = "Scenario paths that do not exist are also looked up in $TWINWIND_CONFIG_DIR, with or without the .toml extension.\n\nExit codes: 0 ok, 1 i/o, 2 usage, 3 configuration, 4 divergence, 5 singular decoupling."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and write its time series and metrics.
    Run {
        #[command(flatten)]
        common: Overrides,
        /// Scenario file.
        #[arg(short, long, value_name = "FILE")]
        config: PathBuf,
        /// Receives timeseries.csv, metrics.json and the charts.
        #[arg(short, long, value_name = "DIR", default_value = "out")]
        out_dir: PathBuf,
        /// Also write SVG charts.
        #[arg(long)]
        plot: bool,
    },
    /// Run several scenarios and tabulate their metrics and verdicts.
    Compare {
        #[command(flatten)]
        common: Overrides,
        /// Scenario file; repeatable.
        #[arg(short, long = "config", value_name = "FILE")]
        configs: Vec<PathBuf>,
        /// Scenario files, in addition to any `--config`.
        #[arg(value_name = "FILE")]
        files: Vec<PathBuf>,
        /// Write `comparison.json` here.
        #[arg(short, long, value_name = "DIR")]
        out_dir: Option<PathBuf>,
    },
    /// Re-run a faulted scenario across fault severities.
    Sweep {
        #[command(flatten)]
        common: Overrides,
        /// Base scenario; must contain a [fault] section.
        #[arg(short, long, value_name = "FILE")]
        config: PathBuf,
        /// Severities in [0, 1).
        #[arg(value_name = "MU", required = true, num_args = 1.., value_delimiter = ',')]
        mu: Vec<f64>,
        /// Write `sweep.json` here.
        #[arg(short, long, value_name = "DIR")]
        out_dir: Option<PathBuf>,
    },
    /// Parse and check a scenario without running it.
    Validate {
        #[command(flatten)]
        common: Overrides,
        /// Scenario file.
        #[arg(short, long, value_name = "FILE")]
        config: PathBuf,
    },
}

#[derive(Args, Clone, Copy)]
struct Overrides {
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the integration step (s).
    #[arg(long)]
    dt: Option<f64>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Config(ConfigError),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Io(_) => EXIT_IO,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Io(m) => f.write_str(m),
            Failure::Config(e) => write!(f, "{e}"),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<RecordError> for Failure {
    fn from(e: RecordError) -> Self {
        Failure::Io(e.to_string())
    }
}

/// Errors raised before any step is taken come from the configuration.
impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Model(source) => Failure::Config(ConfigError::Model {
                field: "scenario".into(),
                source,
            }),
            SimError::DivergedState { .. } => Failure::Io(e.to_string()),
        }
    }
}

/// A path as given, or looked up in the config directory (with or without
/// the `.toml` extension) when it does not exist as given.
fn resolve(path: &Path) -> PathBuf {
    if path.exists() {
        return path.to_path_buf();
    }
    if let Some(dir) = std::env::var_os(CONFIG_DIR_VAR) {
        let dir = PathBuf::from(dir);
        let plain = dir.join(path);
        if plain.exists() {
            return plain;
        }
        let with_ext = plain.with_extension("toml");
        if path.extension().is_none() && with_ext.exists() {
            return with_ext;
        }
    }
    path.to_path_buf()
}

fn load(path: &Path, overrides: Overrides) -> Result<ScenarioConfig, Failure> {
    let mut scenario = ScenarioConfig::load(&resolve(path))?;
    if let Some(seed) = overrides.seed {
        scenario.seed = seed;
    }
    if let Some(dt) = overrides.dt {
        scenario.integrator.dt = dt;
    }
    for warning in scenario.validate()? {
        eprintln!("warning: {warning}");
    }
    Ok(scenario)
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("cannot create {}: {e}", dir.display())))
}

fn exit_code_for(outcome: &OutcomeSummary, error: Option<&ModelError>) -> u8 {
    match (outcome, error) {
        (OutcomeSummary::Completed, _) => 0,
        (OutcomeSummary::Diverged { .. }, _) => EXIT_DIVERGED,
        (
            OutcomeSummary::Failed { .. },
            Some(ModelError::SingularDecoupling { .. } | ModelError::SingularOrientation { .. }),
        ) => EXIT_SINGULAR,
        (OutcomeSummary::Failed { .. }, _) => EXIT_DIVERGED,
    }
}

fn run(config: &Path, overrides: Overrides, out_dir: &Path, plot: bool) -> Result<u8, Failure> {
    let scenario = load(config, overrides)?;
    let (series, report): (_, RunReport) = study::run_scenario(&scenario)?;
    create_dir(out_dir)?;
    write_csv_file(&series.samples, &out_dir.join("timeseries.csv"))?;
    write_json(&report, &out_dir.join("metrics.json"))?;
    if plot || scenario.output.plot {
        twinwind::plot::write_charts(&series.samples, out_dir)
            .map_err(|e| Failure::Io(format!("cannot write charts: {e}")))?;
    }

    let m = &report.metrics;
    println!("{} ({}, mu = {})", report.name, report.controller, report.mu_bar);
    println!("  samples       {}", series.samples.len());
    if m.window_samples == 0 {
        println!("  window        not reached");
    } else {
        println!("  window        [{}, {}] s, {} samples", m.window[0], m.window[1], m.window_samples);
        println!("  yaw error     {:.3e} rad", m.yaw_error_max);
        println!("  speed error   {:.3e} {:.3e}", m.speed_error_max[0], m.speed_error_max[1]);
        println!("  max |i_d|     {:.3e} {:.3e} A", m.direct_current_max[0], m.direct_current_max[1]);
        println!("  max |i_h|     {:.3e} {:.3e} A", m.homopolar_current_max[0], m.homopolar_current_max[1]);
        println!("  max |sum i|   {:.3e} {:.3e} A", m.phase_sum_max[0], m.phase_sum_max[1]);
    }
    match &report.outcome {
        OutcomeSummary::Completed => println!("  outcome       completed"),
        OutcomeSummary::Diverged { t } => println!("  outcome       diverged at {t:.4} s"),
        OutcomeSummary::Failed { t, reason } => println!("  outcome       stopped at {t:.4} s: {reason}"),
    }
    println!("  verdict       {}", if report.verdict.pass { "pass" } else { "fail" });
    for f in &report.verdict.failures {
        println!("    {f}");
    }
    println!("  artifacts     {}", out_dir.display());

    let error = match &series.outcome {
        twinwind::simkit::Outcome::Failed { error, .. } => Some(error),
        _ => None,
    };
    Ok(exit_code_for(&report.outcome, error))
}

fn compare(paths: Vec<PathBuf>, overrides: Overrides, out_dir: Option<&Path>) -> Result<u8, Failure> {
    if paths.len() < 2 {
        return Err(Failure::Usage("compare needs at least two scenario files".into()));
    }
    let scenarios = paths
        .iter()
        .map(|p| load(p, overrides))
        .collect::<Result<Vec<_>, _>>()?;
    let report = study::compare(&scenarios)?;
    print!("{}", report.table());
    if let Some(dir) = out_dir {
        create_dir(dir)?;
        write_json(&report, &dir.join("comparison.json"))?;
    }
    Ok(0)
}

fn sweep(config: &Path, overrides: Overrides, mu: &[f64], out_dir: Option<&Path>) -> Result<u8, Failure> {
    if let Some(bad) = mu.iter().find(|m| !(0.0..1.0).contains(*m)) {
        return Err(Failure::Usage(format!("severity {bad} is outside [0, 1)")));
    }
    let scenario = load(config, overrides)?;
    if scenario.fault.is_none() {
        return Err(Failure::Config(ConfigError::Invalid {
            field: "fault".into(),
            reason: "a severity sweep needs a [fault] section".into(),
        }));
    }
    let report = study::sweep(&scenario, mu)?;
    print!("{}", report.table());
    if let Some(dir) = out_dir {
        create_dir(dir)?;
        write_json(&report, &dir.join("sweep.json"))?;
    }
    Ok(0)
}

fn validate(config: &Path, overrides: Overrides) -> Result<u8, Failure> {
    let path = resolve(config);
    let scenario = load(&path, overrides)?;
    println!("{}: ok ({})", path.display(), scenario.name);
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            common,
            config,
            out_dir,
            plot,
        } => run(&config, common, &out_dir, plot),
        Command::Compare {
            common,
            mut configs,
            files,
            out_dir,
        } => {
            configs.extend(files);
            compare(configs, common, out_dir.as_deref())
        }
        Command::Sweep {
            common,
            config,
            mu,
            out_dir,
        } => sweep(&config, common, &mu, out_dir.as_deref()),
        Command::Validate { common, config } => validate(&config, common),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
