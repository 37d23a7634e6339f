//! Command-line surface for the `chaoscum` engines.
//!
//! Four subcommands are provided:
//!
//! * `cumulants` — κ_1..κ_smax of a kernel or expansion file by any subset of
//!   the recursive, Γ, diagram and Monte Carlo routes;
//! * `crossvalidate` — seeded random kernels over a grid, checking that the
//!   exact routes agree;
//! * `fmt-demo` — contraction norms and cumulants of the sequence
//!   `f_n = (2n)^{-1/2} Σ e_i ⊗ e_i`;
//! * `diagrams` — the connected `q`-regular multigraphs on `s` vertices with
//!   their weights.
//!
//! Exit codes: 0 on success, 1 when a validation check fails, 2 on bad
//! input.

pub mod commands;
pub mod config;
pub mod report;

use std::io::Write;
use std::path::{Path, PathBuf};

use chaoscum::chaos::parse_expansion;
use chaoscum::symtensor::parse_kernel;
use chaoscum::{ChaosExpansion, SymTensor};
use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub use config::Limits;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("output error: {0}")]
    Io(#[from] std::io::Error),
}

/// Result of a command that ran to completion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Success,
    ValidationFailure,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::ValidationFailure => 1,
        }
    }
}

/// Exit code for a command result.
pub fn exit_code(result: &Result<Outcome, CliError>) -> i32 {
    match result {
        Ok(o) => o.exit_code(),
        Err(_) => 2,
    }
}

/// Cumulant computation route.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, ValueEnum)]
pub enum Method {
    Recursive,
    Gamma,
    Diagram,
    Montecarlo,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Recursive,
        Method::Gamma,
        Method::Diagram,
        Method::Montecarlo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Recursive => "recursive",
            Method::Gamma => "gamma",
            Method::Diagram => "diagram",
            Method::Montecarlo => "montecarlo",
        }
    }

    pub fn is_exact(self) -> bool {
        self != Method::Montecarlo
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Table,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "chaoscum",
    version,
    about = "Cumulants of multiple Wiener-Ito integrals"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// `key=value` file overriding the feasibility caps
    /// (diagram_max_edges, chaos_max_order, mc_max_samples).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl Common {
    pub fn limits(&self) -> Result<Limits, CliError> {
        match &self.config {
            Some(p) => Limits::load(p),
            None => Ok(Limits::default()),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cumulants κ_1..κ_smax of a kernel or expansion file.
    Cumulants {
        /// Kernel (`{"q","dim","entries"}`) or expansion
        /// (`{"dim","constant","kernels"}`) JSON file.
        #[arg(long)]
        input: PathBuf,
        /// Comma-separated routes to run.
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = Method::ALL)]
        methods: Vec<Method>,
        #[arg(long, default_value_t = 4)]
        smax: usize,
        /// Monte Carlo sample size.
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Check that the exact routes agree on seeded random kernels.
    Crossvalidate {
        #[arg(long, default_value_t = 6)]
        smax: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Largest admissible pairwise relative discrepancy.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Random kernels drawn per (q, d) cell.
        #[arg(long, default_value_t = 3)]
        kernels: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Contraction norms and cumulants of f_n = (2n)^{-1/2} Σ e_i⊗e_i.
    FmtDemo {
        /// Comma-separated values of n.
        #[arg(long = "n", value_delimiter = ',', default_values_t = vec![4, 16, 64, 256])]
        n: Vec<usize>,
        #[arg(long, default_value_t = 6)]
        smax: usize,
        #[command(flatten)]
        common: Common,
    },
    /// List the connected q-regular multigraphs on s vertices with weights.
    Diagrams {
        /// Optional action; `list` is the only one.
        #[arg(value_parser = ["list"])]
        action: Option<String>,
        #[arg(long)]
        s: usize,
        #[arg(long)]
        q: usize,
        #[command(flatten)]
        common: Common,
    },
}

/// Parsed input file.
#[derive(Clone, Debug)]
pub enum Input {
    Kernel(SymTensor),
    Expansion(ChaosExpansion),
}

impl Input {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| CliError::Input(format!("invalid JSON: {e}")))?;
        let obj = value
            .as_object()
            .ok_or_else(|| CliError::Input("input must be a JSON object".into()))?;
        if obj.contains_key("q") {
            parse_kernel(text)
                .map(Input::Kernel)
                .map_err(|e| CliError::Input(e.to_string()))
        } else if obj.contains_key("kernels") {
            parse_expansion(text)
                .map(Input::Expansion)
                .map_err(|e| CliError::Input(e.to_string()))
        } else {
            Err(CliError::Input(
                "input has neither a \"q\" field (kernel) nor a \"kernels\" field (expansion)"
                    .into(),
            ))
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn expansion(&self) -> ChaosExpansion {
        match self {
            Input::Kernel(f) => ChaosExpansion::integral(f.clone()),
            Input::Expansion(e) => e.clone(),
        }
    }

    /// `(constant, f)` when the input is `c + I_q(f)` for a single `q ≥ 1`.
    pub fn single_chaos(&self) -> Option<(f64, &SymTensor)> {
        match self {
            Input::Kernel(f) => Some((0.0, f)),
            Input::Expansion(e) => {
                let mut it = e.kernels();
                match (it.next(), it.next()) {
                    (Some((_, f)), None) => Some((e.constant_term(), f)),
                    _ => None,
                }
            }
        }
    }
}

/// Runs a parsed command line, writing the report to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Cumulants {
            input,
            methods,
            smax,
            samples,
            seed,
            common,
        } => {
            let limits = common.limits()?;
            let input = Input::load(&input)?;
            let cfg = commands::CumulantConfig {
                methods,
                s_max: smax,
                samples,
                seed,
                limits,
            };
            let rep = commands::cumulants(&input, &cfg)?;
            report::write_cumulants(&rep, common.format, out)?;
            Ok(Outcome::Success)
        }
        Command::Crossvalidate {
            smax,
            seed,
            tol,
            kernels,
            common,
        } => {
            let limits = common.limits()?;
            let cfg = commands::CrossConfig {
                s_max: smax,
                seed,
                tol,
                kernels_per_cell: kernels,
                limits,
            };
            let rep = commands::crossvalidate(&cfg, &chaoscum::recursive::cq)?;
            report::write_crossvalidate(&rep, common.format, out)?;
            Ok(rep.outcome())
        }
        Command::FmtDemo { n, smax, common } => {
            common.limits()?;
            let rows = commands::fmt_demo(&n, smax)?;
            report::write_fmt_demo(&rows, smax, common.format, out)?;
            Ok(Outcome::Success)
        }
        Command::Diagrams { s, q, common, .. } => {
            let limits = common.limits()?;
            let listing = commands::diagrams(s, q, &limits)?;
            report::write_diagrams(&listing, common.format, out)?;
            Ok(Outcome::Success)
        }
    }
}
