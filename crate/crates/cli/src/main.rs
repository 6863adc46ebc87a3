//! Command-line front end for the q-Krawtchouk / q-rotation library.
//!
//! Exit codes: 0 success, 1 identity verification failure, 2 usage error,
//! 3 domain or numerical error. Timing goes to stderr so stdout stays
//! byte-identical across runs.

mod commands;
mod config;
mod record;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use qkraw_core::QError;

use config::{BackendChoice, ConfigBuilder, OutputFormat, RunConfig};

#[derive(Debug)]
pub enum AppError {
    /// Bad flags, malformed values, unknown tags (exit 2).
    Usage(String),
    /// A library-level domain or numerical error (exit 3).
    Inner(QError),
}

impl AppError {
    fn exit_code(&self) -> i32 {
        match self {
            AppError::Usage(_) => 2,
            AppError::Inner(_) => 3,
        }
    }
}

/// Accepts "pi", "pi/6", "3*pi/8", or a plain decimal.
pub fn parse_tau(s: &str) -> Result<f64, AppError> {
    let bad = || AppError::Usage(format!("cannot parse tau: {s:?}"));
    let t = s.trim();
    if let Some(idx) = t.find("pi") {
        let (left, right) = (t[..idx].trim(), t[idx + 2..].trim());
        let coeff: f64 = if left.is_empty() {
            1.0
        } else {
            left.trim_end_matches('*').trim().parse().map_err(|_| bad())?
        };
        let den: f64 = if right.is_empty() {
            1.0
        } else {
            let d = right.strip_prefix('/').ok_or_else(bad)?.trim();
            d.parse().map_err(|_| bad())?
        };
        if den == 0.0 {
            return Err(bad());
        }
        Ok(coeff * std::f64::consts::PI / den)
    } else {
        t.parse().map_err(|_| bad())
    }
}

#[derive(Args, Debug)]
struct Common {
    /// Base q, in (0,1); fraction "a/b" or decimal
    #[arg(long)]
    q: Option<String>,
    /// Rotation parameter theta^2, in (0,1)
    #[arg(long = "theta2")]
    theta2: Option<String>,
    /// Polynomial parameter p (defaults derived from theta2 when omitted)
    #[arg(long)]
    p: Option<String>,
    /// Block size N
    #[arg(short = 'N', long = "big-n")]
    big_n: Option<u32>,
    /// Degree index n
    #[arg(short = 'n', long)]
    n: Option<u32>,
    /// Variable index x
    #[arg(short = 'x', long)]
    x: Option<u32>,
    /// Scalar backend
    #[arg(long, value_enum)]
    backend: Option<BackendChoice>,
    /// Working precision in decimal digits (float backend)
    #[arg(long)]
    precision: Option<u32>,
    /// Output format
    #[arg(long, value_enum)]
    output: Option<OutputFormat>,
    /// Write output to a file instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a single polynomial value, matrix element, or weight
    Eval {
        #[command(flatten)]
        common: Common,
        /// One of: qtm, aff, weight, chi
        #[arg(long)]
        quantity: Option<String>,
    },
    /// Emit the full matrix element table for one (q, theta2, N)
    Table {
        #[command(flatten)]
        common: Common,
    },
    /// Check identity families and report residuals
    Verify {
        #[command(flatten)]
        common: Common,
        /// Identity tag(s) to check; repeatable. Default: every family.
        #[arg(long)]
        suite: Vec<String>,
        /// Limit angle tau for the q->1 family (e.g. "pi/4")
        #[arg(long)]
        tau: Option<String>,
        /// Force every report to fail (for exit-code testing)
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Extrapolate a matrix element to the q->1 classical value
    Limit {
        #[command(flatten)]
        common: Common,
        /// Rotation angle tau (e.g. "pi/6" or "0.5")
        #[arg(long)]
        tau: Option<String>,
    },
}

#[derive(Parser, Debug)]
#[command(name = "qkraw", version, about = "q-Krawtchouk polynomials and q-rotation matrix elements")]
struct Cli {
    /// Flat key=value config file; flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Accepted for interface compatibility; all computations are deterministic
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

fn resolve(cli: &Cli) -> Result<RunConfig, AppError> {
    let builder = ConfigBuilder::new(cli.config.as_ref())?;
    let (name, common, quantity, suite, tau, inject_fault) = match &cli.command {
        Command::Eval { common, quantity } => {
            ("eval", common, quantity.clone(), Vec::new(), None, false)
        }
        Command::Table { common } => ("table", common, None, Vec::new(), None, false),
        Command::Verify {
            common,
            suite,
            tau,
            inject_fault,
        } => ("verify", common, None, suite.clone(), tau.clone(), *inject_fault),
        Command::Limit { common, tau } => ("limit", common, None, Vec::new(), tau.clone(), false),
    };
    let (backend, backend_explicit) = builder.backend(common.backend)?;
    Ok(RunConfig {
        command: name.to_string(),
        q: builder.string(common.q.clone(), "q"),
        theta2: builder.string(common.theta2.clone(), "theta2"),
        p: builder.string(common.p.clone(), "p"),
        big_n: builder.u32_opt(common.big_n, "N")?,
        n: builder.u32_opt(common.n, "n")?,
        x: builder.u32_opt(common.x, "x")?,
        backend,
        backend_explicit,
        precision: builder.precision(common.precision)?,
        output: builder.output(common.output)?,
        out_path: common.out.clone(),
        suite: builder.suite(suite),
        quantity: builder.string(quantity, "quantity"),
        tau: builder.string(tau, "tau"),
        inject_fault,
    })
}

fn run() -> Result<i32, AppError> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let help = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            if help {
                return Ok(0);
            }
            return Err(AppError::Usage(String::new()));
        }
    };
    let cfg = resolve(&cli)?;
    let (record, status) = match cfg.command.as_str() {
        "eval" => commands::cmd_eval(&cfg)?,
        "table" => commands::cmd_table(&cfg)?,
        "verify" => commands::cmd_verify(&cfg)?,
        "limit" => commands::cmd_limit(&cfg)?,
        _ => unreachable!(),
    };
    record.emit(&cfg)?;
    Ok(status)
}

fn main() {
    let started = Instant::now();
    let code = match run() {
        Ok(code) => code,
        Err(err) => {
            match &err {
                AppError::Usage(msg) if msg.is_empty() => {}
                AppError::Usage(msg) => eprintln!("usage error: {msg}"),
                AppError::Inner(e) => eprintln!("error: {e}"),
            }
            err.exit_code()
        }
    };
    eprintln!("elapsed: {:.3}s", started.elapsed().as_secs_f64());
    std::process::exit(code);
}
