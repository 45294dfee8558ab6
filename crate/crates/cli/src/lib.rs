//! Command-line front end for the interface diffusion experiments.
//!
//! Exit codes: 0 when every asserted diagnostic passes, 1 when one fails,
//! 2 for usage or configuration errors, 3 for I/O errors.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use interface_lab_core::error::require_open_unit;
use interface_lab_core::experiments::{
    Experiment, FptConfig, KernelCheckConfig, MartingaleConfig, OccupationConfig, PdeVsMcConfig,
};
use interface_lab_core::parallel::threads_from_env;
use interface_lab_core::report::ExperimentReport;
use interface_lab_core::rng::DEFAULT_MASTER_SEED;
use interface_lab_core::{flux_continuity_lambda, TwoSidedMedium};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_ASSERTION: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_IO: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "interface-lab",
    version,
    about = "Diffusion across a sharp interface: Monte Carlo and PDE experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Check the one-step sampler and the closed-form transition density.
    KernelCheck(RunArgs),
    /// First-passage survival across the interface in both directions.
    Fpt(RunArgs),
    /// Expected occupation times over a sweep of interface parameters.
    Occupation(RunArgs),
    /// Martingale test of the transmission parameter.
    Martingale(RunArgs),
    /// Backward PDE solution against Monte Carlo expectations.
    PdeVsMc(RunArgs),
}

impl Command {
    fn parts(&self) -> (&'static str, &RunArgs) {
        match self {
            Command::KernelCheck(a) => ("kernel-check", a),
            Command::Fpt(a) => ("fpt", a),
            Command::Occupation(a) => ("occupation", a),
            Command::Martingale(a) => ("martingale", a),
            Command::PdeVsMc(a) => ("pde-vs-mc", a),
        }
    }
}

/// Interface condition selector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InterfaceSpec {
    /// `lambda = D+ / (D+ + D-)`.
    Flux,
    /// `lambda = 1/2`.
    Half,
    Custom(f64),
}

impl InterfaceSpec {
    pub fn lambda(self, d_plus: f64, d_minus: f64) -> interface_lab_core::Result<f64> {
        match self {
            InterfaceSpec::Flux => flux_continuity_lambda(d_plus, d_minus),
            InterfaceSpec::Half => Ok(0.5),
            InterfaceSpec::Custom(v) => require_open_unit("lambda", v),
        }
    }
}

impl FromStr for InterfaceSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "flux" => Ok(InterfaceSpec::Flux),
            "half" => Ok(InterfaceSpec::Half),
            _ => match s.strip_prefix("custom:") {
                Some(v) => v
                    .parse()
                    .map(InterfaceSpec::Custom)
                    .map_err(|_| format!("invalid interface parameter {v:?}")),
                None => Err(format!("expected flux, half or custom:<value>, got {s:?}")),
            },
        }
    }
}

impl<'de> Deserialize<'de> for InterfaceSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    #[default]
    Json,
}

/// Flags shared by every subcommand. Each is optional; values come from the
/// flag, then the `--config` file, then the experiment default.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub d_plus: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub d_minus: Option<f64>,
    /// flux, half or custom:<lambda>
    #[arg(long)]
    pub interface: Option<InterfaceSpec>,
    /// Transmission parameter override (defaults to the canonical value).
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub dt: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub t_max: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub y0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub detector: Option<f64>,
    /// Comma-separated interface parameters for the occupation sweep.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub lambdas: Option<Vec<f64>>,
    #[arg(long)]
    pub grid_nodes: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub half_width: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// JSON file supplying defaults for any of the flags above.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl RunArgs {
    /// Fills unset fields from `base`.
    pub fn or(self, base: RunArgs) -> RunArgs {
        RunArgs {
            d_plus: self.d_plus.or(base.d_plus),
            d_minus: self.d_minus.or(base.d_minus),
            interface: self.interface.or(base.interface),
            alpha: self.alpha.or(base.alpha),
            paths: self.paths.or(base.paths),
            dt: self.dt.or(base.dt),
            t_max: self.t_max.or(base.t_max),
            y0: self.y0.or(base.y0),
            detector: self.detector.or(base.detector),
            lambdas: self.lambdas.or(base.lambdas),
            grid_nodes: self.grid_nodes.or(base.grid_nodes),
            half_width: self.half_width.or(base.half_width),
            seed: self.seed.or(base.seed),
            out: self.out.or(base.out),
            format: self.format.or(base.format),
            config: self.config,
        }
    }

    fn set_fields(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        let mut mark = |set: bool, name| {
            if set {
                v.push(name)
            }
        };
        mark(self.interface.is_some(), "interface");
        mark(self.alpha.is_some(), "alpha");
        mark(self.dt.is_some(), "dt");
        mark(self.t_max.is_some(), "t-max");
        mark(self.y0.is_some(), "y0");
        mark(self.detector.is_some(), "detector");
        mark(self.lambdas.is_some(), "lambdas");
        mark(self.grid_nodes.is_some(), "grid-nodes");
        mark(self.half_width.is_some(), "half-width");
        v
    }
}

/// Fully resolved invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub out: Option<PathBuf>,
    pub format: Format,
    /// Flags that this subcommand does not use.
    pub ignored: Vec<&'static str>,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl From<interface_lab_core::Error> for CliError {
    fn from(e: interface_lab_core::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

fn read_config_file(path: &Path) -> Result<RunArgs, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Merges flags, config file and defaults into a runnable configuration.
pub fn resolve(command: &Command) -> Result<RunConfig, CliError> {
    let (name, flags) = command.parts();
    let args = match &flags.config {
        Some(path) => flags.clone().or(read_config_file(path)?),
        None => flags.clone(),
    };
    let d_plus = args.d_plus.unwrap_or(4.0);
    let d_minus = args.d_minus.unwrap_or(1.0);
    let seed = args.seed.unwrap_or(DEFAULT_MASTER_SEED);
    let interface = args.interface.unwrap_or(InterfaceSpec::Flux);
    // validates the dispersion pair before anything else
    let lambda = interface.lambda(d_plus, d_minus)?;
    let medium = TwoSidedMedium::new(d_plus, d_minus, lambda)?;
    if let Some(a) = args.alpha {
        require_open_unit("alpha", a)?;
    }

    let used: &[&str] = match name {
        "kernel-check" => &["interface", "alpha", "dt"],
        "fpt" => &["interface", "alpha", "dt", "t-max", "y0", "detector"],
        "occupation" => &["interface", "alpha", "dt", "t-max", "y0", "lambdas"],
        "martingale" => &["interface", "alpha", "dt", "t-max", "y0"],
        _ => &["interface", "alpha", "dt", "t-max", "y0", "grid-nodes", "half-width"],
    };
    let ignored: Vec<&'static str> = args.set_fields().into_iter().filter(|f| !used.contains(f)).collect();

    let experiment = match name {
        "kernel-check" => {
            let d = KernelCheckConfig::default();
            Experiment::KernelCheck(KernelCheckConfig {
                d_plus,
                d_minus,
                lambda: medium.lambda(),
                alpha: args.alpha,
                draws: args.paths.unwrap_or(d.draws),
                dt: args.dt.unwrap_or(d.dt),
                seed,
            })
        }
        "fpt" => {
            let d = FptConfig::default();
            let y = match (args.detector, args.y0) {
                (Some(det), _) => det.abs(),
                (None, Some(y0)) => y0.abs(),
                (None, None) => d.y,
            };
            if y == 0.0 || !y.is_finite() {
                return Err(CliError::Config("detector must be a nonzero finite level".into()));
            }
            Experiment::Fpt(FptConfig {
                d_plus,
                d_minus,
                lambda: medium.lambda(),
                alpha: args.alpha,
                y,
                paths: args.paths.unwrap_or(d.paths),
                dt: args.dt.unwrap_or(d.dt),
                t_max: args.t_max.unwrap_or(d.t_max),
                seed,
                ..d
            })
        }
        "occupation" => {
            let d = OccupationConfig::default();
            let lambdas = if flags.interface.is_some() && flags.lambdas.is_some() {
                return Err(CliError::Config(
                    "--interface and --lambdas both set the interface parameter".into(),
                ));
            } else if let Some(l) = &flags.lambdas {
                l.clone()
            } else if flags.interface.is_some() {
                vec![lambda]
            } else if let Some(l) = &args.lambdas {
                l.clone()
            } else if args.interface.is_some() {
                vec![lambda]
            } else {
                d.lambdas.clone()
            };
            for &l in &lambdas {
                TwoSidedMedium::new(d_plus, d_minus, l)?;
            }
            Experiment::Occupation(OccupationConfig {
                d_plus,
                d_minus,
                lambdas,
                alpha: args.alpha,
                y0: args.y0.unwrap_or(d.y0),
                t_max: args.t_max.unwrap_or(d.t_max),
                dt: args.dt.unwrap_or(d.dt),
                paths: args.paths.unwrap_or(d.paths),
                seed,
            })
        }
        "martingale" => {
            let d = MartingaleConfig::default();
            Experiment::Martingale(MartingaleConfig {
                d_plus,
                d_minus,
                lambda: medium.lambda(),
                alpha: args.alpha,
                y0: args.y0.unwrap_or(d.y0),
                t_max: args.t_max.unwrap_or(d.t_max),
                dt: args.dt.unwrap_or(d.dt),
                paths: args.paths.unwrap_or(d.paths),
                seed,
                ..d
            })
        }
        _ => {
            let d = PdeVsMcConfig::default();
            Experiment::PdeVsMc(PdeVsMcConfig {
                d_plus,
                d_minus,
                lambda: medium.lambda(),
                alpha: args.alpha,
                probes: args.y0.map(|y| vec![y]).unwrap_or(d.probes.clone()),
                t_max: args.t_max.unwrap_or(d.t_max),
                dt: args.dt.unwrap_or(d.dt),
                paths: args.paths.unwrap_or(d.paths),
                grid_nodes: args.grid_nodes.unwrap_or(d.grid_nodes),
                half_width: args.half_width.unwrap_or(d.half_width),
                seed,
                ..d
            })
        }
    };
    Ok(RunConfig {
        experiment,
        out: args.out,
        format: args.format.unwrap_or_default(),
        ignored,
    })
}

fn io_err(path: &Path, e: io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Path of the CSV file holding `table` for an output path `out`.
pub fn table_path(out: &Path, table: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.{table}.csv"))
}

/// Writes the report in the requested format.
///
/// JSON goes to `out` or stdout. CSV with `out` writes one file per table
/// next to it plus the full JSON report at `out` with a `.json` extension;
/// without `out` the tables go to stdout, each headed by `# <name>`.
pub fn emit(
    report: &ExperimentReport,
    out: Option<&Path>,
    format: Format,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let stdout_err = |e: io::Error| CliError::Io(format!("stdout: {e}"));
    match (format, out) {
        (Format::Json, Some(path)) => fs::write(path, report.to_json() + "\n").map_err(|e| io_err(path, e)),
        (Format::Json, None) => writeln!(stdout, "{}", report.to_json()).map_err(stdout_err),
        (Format::Csv, Some(path)) => {
            for table in &report.tables {
                let p = table_path(path, &table.name);
                let file = fs::File::create(&p).map_err(|e| io_err(&p, e))?;
                let mut w = io::BufWriter::new(file);
                table
                    .write_csv(&mut w)
                    .and_then(|_| w.flush())
                    .map_err(|e| io_err(&p, e))?;
            }
            let json = path.with_extension("json");
            fs::write(&json, report.to_json() + "\n").map_err(|e| io_err(&json, e))
        }
        (Format::Csv, None) => {
            for (i, table) in report.tables.iter().enumerate() {
                if i > 0 {
                    writeln!(stdout).map_err(stdout_err)?;
                }
                writeln!(stdout, "# {}", table.name).map_err(stdout_err)?;
                table.write_csv(&mut *stdout).map_err(stdout_err)?;
            }
            Ok(())
        }
    }
}

fn summarize_to(report: &ExperimentReport, err: &mut dyn Write) {
    for d in report.diagnostics.iter() {
        let status = match (d.asserted, d.passed) {
            (false, _) => "info",
            (true, true) => "pass",
            (true, false) => "FAIL",
        };
        let _ = writeln!(
            err,
            "{status:>4}  {}: {} {} {}",
            d.name,
            interface_lab_core::report::format_float(d.measured),
            d.comparison.symbol(),
            interface_lab_core::report::format_float(d.threshold)
        );
    }
    let verdict = if report.passed { "PASS" } else { "FAIL" };
    let _ = writeln!(err, "{}: {verdict} ({:.1} s)", report.experiment, report.wall_time_s);
}

/// Runs a resolved configuration and returns the exit code.
pub fn run_and_emit(config: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8 {
    for flag in &config.ignored {
        let _ = writeln!(stderr, "warning: --{flag} is not used by {}", config.experiment.name());
    }
    let outcome = threads_from_env()
        .map_err(CliError::from)
        .and_then(|threads| config.experiment.run(threads).map_err(CliError::from));
    let report = match outcome {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            return e.exit_code();
        }
    };
    if let Err(e) = emit(&report, config.out.as_deref(), config.format, stdout) {
        let _ = writeln!(stderr, "{e}");
        return e.exit_code();
    }
    summarize_to(&report, stderr);
    if report.passed {
        EXIT_PASS
    } else {
        EXIT_ASSERTION
    }
}

/// Entry point shared by the binary and the tests.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_PASS,
                _ => EXIT_CONFIG,
            };
            let _ = write!(stderr, "{}", e.render().ansi());
            return code;
        }
    };
    match resolve(&cli.command) {
        Ok(config) => run_and_emit(&config, stdout, stderr),
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            e.exit_code()
        }
    }
}
