mod commands;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use run::Run;

/// SSM Taylor models, Padé globalization and rational regression of reduced
/// dynamics.
#[derive(Parser, Debug)]
#[command(name = "gssm", version)]
pub struct Cli {
    /// Directory for output files and the run manifest.
    #[arg(long, global = true, env = "GSSM_OUT_DIR", default_value = ".")]
    pub out: PathBuf,
    /// Worker threads for commands that fit several models.
    #[arg(long, global = true, env = "GSSM_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// List built-in systems and their default parameters.
    Systems,
    /// Compute a Taylor SSM model.
    Ssm(SsmArgs),
    /// Padé approximants with denominator zero scan and order fallback.
    Pade(PadeArgs),
    /// Reduced-dynamics analysis.
    #[command(subcommand)]
    Analyze(Analyze),
    /// Convergence-radius and singularity diagnostics.
    #[command(subcommand)]
    Singularity(Singularity),
    /// Fit a rational reduced vector field to trajectory data.
    Regress(RegressArgs),
    /// Forecast an observable with a fitted model.
    Predict(PredictArgs),
}

#[derive(Args, Debug, Clone)]
pub struct SystemSource {
    /// Built-in system id (see `gssm systems`).
    #[arg(long, conflicts_with = "system_file")]
    pub system: Option<String>,
    /// Parameter override `name=value`, repeatable.
    #[arg(long = "param", value_parser = parse_param)]
    pub params: Vec<(String, f64)>,
    /// Polynomial system file.
    #[arg(long)]
    pub system_file: Option<PathBuf>,
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected name=value, got '{s}'"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("'{v}' is not a number"))?;
    Ok((k.trim().to_string(), v))
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum StyleArg {
    Graph,
    NormalForm,
}

#[derive(Args, Debug)]
pub struct SsmArgs {
    #[command(flatten)]
    pub source: SystemSource,
    /// Re-read and validate an existing model file instead of computing one.
    #[arg(long, conflicts_with_all = ["system", "system_file"])]
    pub model: Option<PathBuf>,
    /// Manifold dimension.
    #[arg(short, long, default_value_t = 1)]
    pub dim: usize,
    /// Master eigenvalue indices (default: slowest).
    #[arg(long, value_delimiter = ',')]
    pub masters: Option<Vec<usize>>,
    /// Expansion order.
    #[arg(long, default_value_t = 5)]
    pub order: u32,
    #[arg(long, value_enum, default_value_t = StyleArg::Graph)]
    pub style: StyleArg,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    /// Manifold parametrization.
    W,
    /// Reduced dynamics.
    R,
    /// Polar damping `κ(ρ)`.
    Kappa,
    /// Polar frequency `ω(ρ)`.
    Omega,
}

#[derive(Args, Debug)]
pub struct PadeArgs {
    /// Series file.
    #[arg(long, conflicts_with = "model", required_unless_present = "model")]
    pub series: Option<PathBuf>,
    /// Model file; choose the expansion with `--target`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Target::W)]
    pub target: Target,
    /// Numerator order.
    #[arg(short, long)]
    pub n: u32,
    /// Denominator order (default: N).
    #[arg(short, long)]
    pub m: Option<u32>,
    /// One denominator for all components.
    #[arg(long)]
    pub shared: bool,
    /// Scan radius: real box `[−R, R]^d`, or a disk for conjugate inputs.
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    /// Points per scan axis.
    #[arg(long, default_value_t = 101)]
    pub grid: usize,
    /// Pole floor of the scan.
    #[arg(long, default_value_t = gssm::singularity::DEFAULT_SCAN_FLOOR)]
    pub floor: f64,
    /// Inputs are conjugate coordinates `(z, z̄)`; forced on for models
    /// with complex masters.
    #[arg(long)]
    pub conjugate: bool,
    /// Keep the requested orders even if the scan flags them.
    #[arg(long)]
    pub no_fallback: bool,
}

#[derive(Args, Debug, Clone)]
pub struct FieldSource {
    /// Polynomial reduced field (series file).
    #[arg(long, conflicts_with = "rational")]
    pub series: Option<PathBuf>,
    /// Rational reduced field (Padé file).
    #[arg(long)]
    pub rational: Option<PathBuf>,
    /// State is `(Re z, Im z)` of conjugate coordinates.
    #[arg(long)]
    pub conjugate: bool,
    /// Forcing amplitude (applied to `--forcing-projection`).
    #[arg(long, requires = "forcing_frequency")]
    pub forcing_amplitude: Option<f64>,
    #[arg(long)]
    pub forcing_frequency: Option<f64>,
    /// Coefficient of `cos Ωt` in each reduced equation.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub forcing_projection: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1e-9)]
    pub rtol: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub atol: f64,
}

#[derive(Subcommand, Debug)]
pub enum Analyze {
    /// Integrate a reduced field.
    Integrate {
        #[command(flatten)]
        field: FieldSource,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x0: Vec<f64>,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        t0: f64,
        #[arg(long, allow_hyphen_values = true)]
        t1: f64,
        /// Output spacing (default: every accepted step).
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Backbone curve `ω(ρ)` from a two-dimensional normal-form model.
    Backbone {
        #[command(flatten)]
        polar: PolarArgs,
    },
    /// Forced response curve.
    Frc {
        #[command(flatten)]
        polar: PolarArgs,
        /// Forcing amplitude ε.
        #[arg(long)]
        eps: f64,
        /// Ambient forcing direction.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        force: Vec<f64>,
    },
    /// Stroboscopic section of a forced reduced field.
    Poincare {
        #[command(flatten)]
        field: FieldSource,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        ic: Vec<f64>,
        #[arg(long, default_value_t = 200)]
        periods: usize,
        #[arg(long, default_value_t = gssm::reduced::DEFAULT_SKIP_PERIODS)]
        skip: usize,
    },
    /// Largest Lyapunov exponent.
    Lyapunov {
        #[command(flatten)]
        field: FieldSource,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        ic: Vec<f64>,
        #[arg(long, default_value_t = 1e-8)]
        d0: f64,
        #[arg(long)]
        horizon: f64,
        /// Renormalization interval.
        #[arg(long)]
        window: f64,
    },
    /// Power spectral density of one trajectory component.
    Psd {
        /// Trajectory CSV (time first).
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long, default_value_t = 0)]
        component: usize,
    },
}

#[derive(Args, Debug, Clone)]
pub struct PolarArgs {
    /// Two-dimensional normal-form model.
    #[arg(long)]
    pub model: PathBuf,
    /// Use `[N/M]` approximants of κ, ω and W instead of the Taylor series.
    #[arg(short, long, requires = "m")]
    pub n: Option<u32>,
    #[arg(short, long)]
    pub m: Option<u32>,
    #[arg(long, default_value_t = 1.0)]
    pub rho_max: f64,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Ambient component whose amplitude is reported.
    #[arg(long, default_value_t = 0)]
    pub component: usize,
}

#[derive(Subcommand, Debug)]
pub enum Singularity {
    /// Radius of convergence from coefficient ratios.
    Radius {
        #[arg(long)]
        series: PathBuf,
        #[arg(long, default_value_t = 0)]
        component: usize,
    },
    /// Location of the nearest singularity from the coefficient sign pattern.
    Pattern {
        #[arg(long)]
        series: PathBuf,
        #[arg(long, default_value_t = 0)]
        component: usize,
        /// Use every other coefficient starting here (series in `ρ²`).
        #[arg(long)]
        even_from: Option<usize>,
        /// First coefficient index considered.
        #[arg(long, default_value_t = 0)]
        first: usize,
    },
    /// Denominator zeros of a rational map on a grid.
    Scan {
        #[arg(long)]
        rational: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 101)]
        grid: usize,
        #[arg(long, default_value_t = gssm::singularity::DEFAULT_SCAN_FLOOR)]
        floor: f64,
        #[arg(long)]
        conjugate: bool,
    },
}

#[derive(Args, Debug)]
pub struct RegressArgs {
    /// Trajectory CSV files (time first), repeatable.
    #[arg(long, required = true)]
    pub data: Vec<PathBuf>,
    /// Value column used as the observable.
    #[arg(long, default_value_t = 0)]
    pub observable: usize,
    /// Number of delayed copies.
    #[arg(long)]
    pub delays: usize,
    /// Lag in samples.
    #[arg(long, default_value_t = 1)]
    pub lag: usize,
    /// Manifold dimension.
    #[arg(short, long, default_value_t = 2)]
    pub dim: usize,
    #[arg(short, long)]
    pub n: u32,
    #[arg(short, long)]
    pub m: u32,
    /// Order of the polynomial baseline (default: N + M).
    #[arg(long)]
    pub poly_order: Option<u32>,
    /// Moving-average half-width before differentiation.
    #[arg(long)]
    pub smoothing: Option<usize>,
    /// Fraction of samples held out for validation.
    #[arg(long, default_value_t = 0.2)]
    pub holdout: f64,
    /// Seed of the train/validation split.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Lower bound on the denominator at the samples.
    #[arg(long, default_value_t = gssm::datadriven::DEFAULT_DELTA)]
    pub delta: f64,
    /// Drop the denominator constraint.
    #[arg(long)]
    pub unconstrained: bool,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    /// Chart file written by `regress`.
    #[arg(long)]
    pub chart: PathBuf,
    /// Fitted model (Padé or series file).
    #[arg(long)]
    pub model: PathBuf,
    /// Observable history CSV (time first).
    #[arg(long)]
    pub history: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub observable: usize,
    #[arg(long)]
    pub horizon: f64,
    #[arg(long)]
    pub dt: f64,
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Systems => "systems",
        Command::Ssm(_) => "ssm",
        Command::Pade(_) => "pade",
        Command::Analyze(a) => match a {
            Analyze::Integrate { .. } => "analyze integrate",
            Analyze::Backbone { .. } => "analyze backbone",
            Analyze::Frc { .. } => "analyze frc",
            Analyze::Poincare { .. } => "analyze poincare",
            Analyze::Lyapunov { .. } => "analyze lyapunov",
            Analyze::Psd { .. } => "analyze psd",
        },
        Command::Singularity(s) => match s {
            Singularity::Radius { .. } => "singularity radius",
            Singularity::Pattern { .. } => "singularity pattern",
            Singularity::Scan { .. } => "singularity scan",
        },
        Command::Regress(_) => "regress",
        Command::Predict(_) => "predict",
    }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            let msg = e.kind().to_string();
            println!("status=error code=2 kind=validation command=\"\" message={}", quote(&msg));
            return ExitCode::from(2);
        }
    };
    let name = command_name(&cli.command);
    let threads = cli
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1);
    let result = Run::new(cli.out.clone(), threads).and_then(|mut run| {
        let outcome = commands::dispatch(&cli.command, &mut run);
        // the manifest is written even when the command fails part-way
        run.finish(name, &format!("{:#?}", cli.command))?;
        outcome.map(|_| run)
    });
    match result {
        Ok(run) => {
            println!("status=ok command={} outputs={}", quote(name), run.output_names().join(","));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("gssm {name}: {e}");
            println!(
                "status=error code={} kind={} command={} message={}",
                e.code(),
                e.kind(),
                quote(name),
                quote(e.message())
            );
            ExitCode::from(e.code() as u8)
        }
    }
}

