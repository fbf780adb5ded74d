//! The `slidecross` command line: argument definitions and dispatch.
//!
//! Exit codes: 0 on success, 2 when the analysis ran but could not decide,
//! 1 on any error (including bad arguments).

pub mod args;
pub mod commands;
pub mod report;

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use slidecross::regularization::BlowupMode;
use slidecross::{Regime, Transition};
use thiserror::Error;

use crate::args::{parse_grid, parse_list_arg, parse_pair, parse_param, parse_point, Grid, List};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Model(#[from] slidecross::model::ModelError),
    #[error(transparent)]
    Analysis(#[from] slidecross::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn io(path: impl Into<String>, source: io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

/// How a command ended when it did not fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Done,
    Undetermined,
}

pub fn parse_regime(s: &str) -> Result<Regime, String> {
    s.parse().map_err(|e: slidecross::Error| e.to_string())
}

fn parse_mode(s: &str) -> Result<BlowupMode, String> {
    s.parse().map_err(|e: slidecross::Error| e.to_string())
}

fn parse_transition(s: &str) -> Result<Transition, String> {
    s.parse().map_err(|e: slidecross::Error| e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "slidecross", version, about = "Sliding analysis for 2-cross piecewise-smooth fields")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Model file.
    pub model: PathBuf,
    /// Override or add a parameter, `name=value`. Repeatable.
    #[arg(long = "param", value_name = "NAME=VALUE", value_parser = parse_param)]
    pub params: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Args)]
pub struct VerdictArgs {
    /// `k=V` for ε/η = V, or `to-zero` / `to-inf`.
    #[arg(long, default_value = "k=1", value_parser = parse_regime)]
    pub regime: Regime,
    /// Height on Σ00.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub x3: f64,
    /// Blow-up evaluation: `strict` (fields at (0, 0, x3)) or `local` (fields at the blown-up point).
    #[arg(long, default_value = "strict", value_parser = parse_mode)]
    pub mode: BlowupMode,
    /// η/ε for the indicator; defaults to the inverse of a fixed regime ratio.
    #[arg(long = "K")]
    pub k: Option<f64>,
    /// `clamped-identity` or `clamped-cubic`.
    #[arg(long, default_value = "clamped-identity", value_parser = parse_transition)]
    pub transition: Transition,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify a point: quadrant, codimension-one class, or Σ00 verdict.
    Classify {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        point: [f64; 3],
        /// Distance below which a coordinate counts as zero.
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[command(flatten)]
        verdict: VerdictArgs,
    },
    /// Reduced bilinear system at Σ00 and its factored and centered forms.
    Reduce {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value = "k=1", value_parser = parse_regime)]
        regime: Regime,
        /// Height at which non-constant fields are frozen.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        x3: f64,
    },
    /// Sliding verdict on Σ00.
    Verdict {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        verdict: VerdictArgs,
    },
    /// Affine normal form of the reduced system, with Bogdanov–Takens
    /// coefficients in case I.
    NormalForm {
        /// Model file; its reduced system is normalized.
        #[arg(required_unless_present = "system", conflicts_with = "system")]
        model: Option<PathBuf>,
        #[arg(long = "param", value_name = "NAME=VALUE", value_parser = parse_param)]
        params: Vec<(String, f64)>,
        /// `A,B,C,D,a,b,c,d` for `x' = A(x−a)(y−b) − B`, `y' = C(x−c)(y−d) − D`.
        #[arg(long, value_parser = parse_list_arg, allow_hyphen_values = true)]
        system: Option<List>,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        x3: f64,
    },
    /// Bifurcation regions of the unfolding family as CSV.
    Regions {
        /// `a0:a1:n,b0:b1:m` over (α, β).
        #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
        grid: Grid,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate the Filippov (or regularized) flow.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        x0: [f64; 3],
        #[arg(long)]
        tmax: f64,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        /// Width of the final bisection bracket in time.
        #[arg(long, default_value_t = 1e-10)]
        event_tol: f64,
        #[arg(long, default_value = "k=1", value_parser = parse_regime)]
        regime: Regime,
        /// Integrate the regularized field with `eps,eta` instead.
        #[arg(long, value_parser = parse_pair)]
        regularize: Option<(f64, f64)>,
        #[arg(long, default_value = "clamped-identity", value_parser = parse_transition)]
        transition: Transition,
        /// Trajectory CSV.
        #[arg(long)]
        out: PathBuf,
        /// Events CSV; standard output when absent.
        #[arg(long)]
        events: Option<PathBuf>,
    },
    /// Distance to Σ00 at the end of regularized runs, per (ε, η).
    Probe {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_parser = parse_list_arg)]
        eps_list: List,
        /// Defaults to the ε list.
        #[arg(long, value_parser = parse_list_arg)]
        eta_list: Option<List>,
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        x0: [f64; 3],
        #[arg(long, default_value_t = 5.0)]
        tmax: f64,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        #[arg(long, default_value = "clamped-identity", value_parser = parse_transition)]
        transition: Transition,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `argv` (program name first), runs the command, and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let result = commands::execute(&cli.command, &mut out);
    let _ = out.flush();
    match result {
        Ok(status) => exit_code(status),
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Exit code for a finished command.
pub fn exit_code(status: Status) -> u8 {
    match status {
        Status::Done => 0,
        Status::Undetermined => 2,
    }
}
