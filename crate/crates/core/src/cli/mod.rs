//! Batch front end: one command per process, report to a file or stdout.
//!
//! Exit codes: 0 all checks pass, 1 some check fails, 2 usage or input
//! error, 3 solver or I/O failure.

pub mod config;
pub mod fixtures;
pub mod report;
mod run;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::error::Error;
pub use config::{parse_config_text, RunConfig};
pub use report::{Report, Row};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_FAILURE: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("failure: {0}")]
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => EXIT_USAGE,
            Self::Failure(_) => EXIT_FAILURE,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NonConvergence { .. }
            | Error::SolverFailure(_)
            | Error::PadInsufficient(_)
            | Error::Io(_) => Self::Failure(e.to_string()),
            _ => Self::Usage(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "wass-hj", version, about = "Optimal transport, Hopf-Lax and vanishing-viscosity checks")]
pub struct Cli {
    /// Flat `key = value` config file with `[section]` prefixes.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Report destination; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overrides the tolerance of the command's checks.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Extra `key=value` setting; repeatable, overrides the config file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Quadratic Wasserstein distance between two measures.
    W2 {
        #[arg(long)]
        mu: Option<String>,
        #[arg(long)]
        nu: Option<String>,
    },
    /// Hopf-Lax value V(t, μ) at the configured times.
    Hopflax {
        #[arg(long)]
        mu: Option<String>,
    },
    /// Dynamic programming residuals of the Hopf-Lax value.
    DppCheck {
        #[arg(long)]
        mu: Option<String>,
    },
    /// Convexity residuals and divergence bounds.
    ConvexityCheck {
        #[arg(value_enum)]
        kind: ConvexityKind,
    },
    /// Vanishing-viscosity rate on a one-dimensional problem.
    VvRate {
        #[arg(long)]
        hamiltonian: Option<String>,
        #[arg(long)]
        terminal: Option<String>,
        #[arg(long)]
        grid: Option<usize>,
        /// Comma-separated, strictly decreasing.
        #[arg(long)]
        eps: Option<String>,
        #[arg(long = "t-probe")]
        t_probe: Option<f64>,
        #[arg(long = "one-sided")]
        one_sided: bool,
    },
    /// Fenchel gaps on random and optimal velocity-plan pairs.
    FenchelCheck,
    /// Value of a functional on a measure or grid density.
    Functional {
        #[arg(long)]
        mu: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConvexityKind {
    Geodesic,
    Mixture,
    Flat,
    Divbound,
    Weakaction,
}

impl Command {
    pub fn name(&self) -> String {
        match self {
            Self::W2 { .. } => "w2".into(),
            Self::Hopflax { .. } => "hopflax".into(),
            Self::DppCheck { .. } => "dpp-check".into(),
            Self::ConvexityCheck { kind } => {
                format!("convexity-check {}", kind.to_possible_value().expect("named variant").get_name())
            }
            Self::VvRate { .. } => "vv-rate".into(),
            Self::FenchelCheck => "fenchel-check".into(),
            Self::Functional { .. } => "functional".into(),
        }
    }

    /// Command-line flags as config keys.
    fn flag_params(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut put = |k: &'static str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k, v));
            }
        };
        match self {
            Self::W2 { mu, nu } => {
                put("input.mu", mu.clone());
                put("input.nu", nu.clone());
            }
            Self::Hopflax { mu } | Self::DppCheck { mu } | Self::Functional { mu } => put("input.mu", mu.clone()),
            Self::VvRate { hamiltonian, terminal, grid, eps, t_probe, one_sided } => {
                put("vv.hamiltonian", hamiltonian.clone());
                put("vv.terminal", terminal.clone());
                put("vv.grid", grid.map(|g| g.to_string()));
                put("vv.eps", eps.clone());
                put("vv.t_probe", t_probe.map(|t| format!("{t:e}")));
                put("vv.one_sided", one_sided.then(|| "true".to_string()));
            }
            Self::ConvexityCheck { .. } | Self::FenchelCheck => {}
        }
        out
    }
}

fn build_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut params = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
            parse_config_text(&text)?
        }
        None => BTreeMap::new(),
    };
    for s in &cli.set {
        let (k, v) = s.split_once('=').ok_or_else(|| CliError::Usage(format!("--set `{s}` is not key=value")))?;
        params.insert(k.trim().to_string(), v.trim().to_string());
    }
    for (k, v) in cli.command.flag_params() {
        params.insert(k.to_string(), v);
    }
    if let Some(seed) = cli.seed {
        params.insert("seed".into(), seed.to_string());
    }
    if let Some(tol) = cli.tol {
        params.insert("tol".into(), format!("{tol:e}"));
    }
    let name = cli.command.name();
    let allowed = run::allowed_keys(&cli.command);
    let allowed: Vec<&str> = allowed.iter().map(String::as_str).collect();
    RunConfig::new(&name, params, &allowed)
}

/// Parses, runs and writes the report; returns the exit code.
pub fn run_cli(cli: &Cli) -> Result<i32, CliError> {
    let cfg = build_config(cli)?;
    let report = run::dispatch(&cli.command, &cfg)?;
    let text = report.render();
    match &cli.out {
        Some(path) => crate::io::write_text(path, &text)?,
        None => print!("{text}"),
    }
    Ok(report.exit_code())
}

pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match run_cli(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("wass-hj: {e}");
            e.exit_code()
        }
    }
}
