//! Command-line front end: argument parsing and report rendering.
//!
//! Reports go to the `out` stream, diagnostics to `err`. Exit codes: 0 on
//! success, 1 when a check reports violations, 2 on bad input.

use std::ffi::OsString;
use std::io::{self, Write};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use stopwise::bounds::{bounds_report, BoundsError};
use stopwise::curve::{optimal_threshold_with, CurveError, QUADRATURE_SIGN_TOLERANCE};
use stopwise::models::{ModelError, SpecError};
use stopwise::numeric::format_significant;
use stopwise::sim::{
    empirical_argmax, simulate, simulate_sweep, EpisodeMethod, SimConfig, SimError, SimReport, DEFAULT_WORKERS,
};
use stopwise::verify::{verify, VerifyError, VerifyOptions};
use stopwise::{full_curve, parse_model_spec, QualityModel};

pub const DEFAULT_PRECISION: u8 = 12;

pub const EXIT_OK: u8 = 0;
pub const EXIT_VIOLATIONS: u8 = 1;
pub const EXIT_INPUT: u8 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error("write failed: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Parser)]
#[command(name = "stopwise", version, about = "Optimal threshold strategies for hiring with a quality-based payoff")]
pub struct Cli {
    /// Significant digits in numeric output.
    #[arg(long, global = true, env = "STOPWISE_PRECISION", default_value_t = DEFAULT_PRECISION,
          value_parser = clap::value_parser!(u8).range(1..=17))]
    pub precision: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal threshold index c* as JSON.
    Threshold {
        #[command(flatten)]
        target: Target,
        /// Tolerance on the sign of the payoff increment [default: 0, or
        /// 1e-12 for quadrature-backed models].
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Payoff V_n(c) for every c (CSV `c,V` by default).
    Curve {
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        format: Format,
    },
    /// Monte Carlo estimate of V_n(c) at one c, or at every c with --sweep.
    Simulate {
        #[command(flatten)]
        target: Target,
        #[arg(long, required_unless_present = "sweep", conflicts_with = "sweep")]
        c: Option<usize>,
        #[arg(long)]
        sweep: bool,
        #[command(flatten)]
        sim: SimArgs,
        /// Draw every candidate instead of sampling the deciding statistics.
        #[arg(long)]
        literal: bool,
        #[command(flatten)]
        format: Format,
    },
    /// Simulated argmax over c compared against the analytic c*.
    Sweep {
        #[command(flatten)]
        target: Target,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Closed-form and asymptotic bounds checked against c*.
    Bounds {
        #[command(flatten)]
        target: Target,
    },
    /// Property checks over the built-in model matrix; prints the violations.
    Verify {
        /// Restrict to these models (repeatable).
        #[arg(long = "model")]
        models: Vec<String>,
        /// Horizons for the curve checks (repeatable) [default: 10 100 1000 10000].
        #[arg(long = "n")]
        ns: Vec<usize>,
        /// Highest difference order in the sign checks.
        #[arg(long, default_value_t = 6)]
        j_max: usize,
    },
}

#[derive(Debug, Args)]
pub struct Target {
    /// Model spec, e.g. `exponential`, `pareto:alpha=2`, `classical:n=100`.
    #[arg(long)]
    pub model: String,
    /// Number of candidates [default: the model's own size].
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_WORKERS)]
    pub workers: usize,
}

#[derive(Debug, Args)]
#[group(multiple = false)]
pub struct Format {
    #[arg(long)]
    pub json: bool,
    #[arg(long)]
    pub csv: bool,
}

impl Target {
    fn resolve(&self) -> Result<(QualityModel, usize), CliError> {
        let model = parse_model_spec(&self.model)?;
        let n = match (self.n, model.intrinsic_n()) {
            (Some(0), _) => return Err(CliError::Input("--n must be at least 1".into())),
            (Some(n), _) => n,
            (None, Some(n)) => n,
            (None, None) => return Err(CliError::Input(format!("--n is required for model `{}`", self.model))),
        };
        Ok((model, n))
    }
}

/// Rounds every float in `value` to `digits` significant digits.
fn round_floats(value: &mut Value, digits: usize) {
    match value {
        Value::Number(num) if num.is_f64() => {
            let x = num.as_f64().expect("f64 number");
            let rounded: f64 = format_significant(x, digits).parse().expect("formatted float parses");
            if let Some(r) = serde_json::Number::from_f64(rounded) {
                *num = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(|v| round_floats(v, digits)),
        Value::Object(map) => map.values_mut().for_each(|v| round_floats(v, digits)),
        _ => {}
    }
}

fn write_json<W: Write, T: Serialize>(out: &mut W, report: &T, digits: usize) -> Result<(), CliError> {
    let mut value = serde_json::to_value(report).map_err(io::Error::from)?;
    round_floats(&mut value, digits);
    serde_json::to_writer(&mut *out, &value).map_err(io::Error::from)?;
    writeln!(out)?;
    Ok(())
}

fn write_sim_csv<W: Write>(out: &mut W, reports: &[SimReport], digits: usize) -> Result<(), CliError> {
    writeln!(out, "n,c,estimate,std_error,trials,best_pick_rate,seed,workers")?;
    for r in reports {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.n,
            r.c,
            format_significant(r.estimate, digits),
            format_significant(r.std_error, digits),
            r.trials,
            format_significant(r.best_pick_rate, digits),
            r.seed,
            r.workers
        )?;
    }
    Ok(())
}

fn sign_tolerance(model: &QualityModel) -> f64 {
    if model.is_quadrature_backed() {
        QUADRATURE_SIGN_TOLERANCE
    } else {
        0.0
    }
}

/// Executes a parsed command line and returns the exit code.
pub fn execute<W: Write>(cli: &Cli, out: &mut W) -> Result<u8, CliError> {
    let digits = usize::from(cli.precision);
    match &cli.command {
        Command::Threshold { target, tolerance } => {
            let (model, n) = target.resolve()?;
            let mu = model.mu_sequence(n)?;
            let result = optimal_threshold_with(&mu, n, tolerance.unwrap_or_else(|| sign_tolerance(&model)))?;
            write_json(out, &result, digits)?;
        }
        Command::Curve { target, format } => {
            let (model, n) = target.resolve()?;
            let curve = full_curve(&model.mu_sequence(n)?, n, model.label())?;
            if format.json {
                write_json(out, &curve, digits)?;
            } else {
                curve.write_csv(&mut *out, digits)?;
            }
        }
        Command::Simulate { target, c, sweep, sim, literal, format } => {
            let (model, n) = target.resolve()?;
            let method = if *literal { EpisodeMethod::Literal } else { EpisodeMethod::Direct };
            let reports = if *sweep {
                if *literal {
                    return Err(CliError::Input("--literal is not available with --sweep".into()));
                }
                simulate_sweep(&model, n, sim.trials, sim.seed, sim.workers)?
            } else {
                let c = c.expect("clap requires --c without --sweep");
                let cfg = SimConfig::new(n, c, sim.trials, sim.seed).with_workers(sim.workers).with_method(method);
                vec![simulate(&model, &cfg)?]
            };
            match (format.csv, *sweep) {
                (true, _) => write_sim_csv(out, &reports, digits)?,
                (false, true) => write_json(out, &reports, digits)?,
                (false, false) => write_json(out, &reports[0], digits)?,
            }
        }
        Command::Sweep { target, trials, seed } => {
            let (model, n) = target.resolve()?;
            write_json(out, &empirical_argmax(&model, n, *trials, *seed)?, digits)?;
        }
        Command::Bounds { target } => {
            let (model, n) = target.resolve()?;
            let report = bounds_report(&model, n)?;
            write_json(out, &report, digits)?;
            if report.violations().next().is_some() {
                return Ok(EXIT_VIOLATIONS);
            }
        }
        Command::Verify { models, ns, j_max } => {
            let mut opts = VerifyOptions { j_max: *j_max, ..VerifyOptions::default() };
            if !ns.is_empty() {
                opts.ns = ns.clone();
            }
            let parsed = models.iter().map(|m| parse_model_spec(m)).collect::<Result<Vec<_>, _>>()?;
            let report = verify((!parsed.is_empty()).then_some(parsed.as_slice()), &opts)?;
            write_json(out, &report.violations, digits)?;
            if !report.passed() {
                return Ok(EXIT_VIOLATIONS);
            }
        }
    }
    Ok(EXIT_OK)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T, W, E>(args: I, out: &mut W, err: &mut E) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
    W: Write,
    E: Write,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "stopwise: {e}");
            EXIT_INPUT
        }
    }
}
