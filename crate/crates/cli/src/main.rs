//! Command-line front end: point evaluations and verification runs.

#![allow(clippy::type_complexity)]

mod commands;
mod run_config;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use run_config::Format;

#[derive(Parser, Debug)]
#[command(
    name = "riesz-jacobi",
    version,
    about = "Jacobi expansions, Poisson and Riesz kernels, and cross-checked Riesz transforms"
)]
pub struct Cli {
    /// Output format of the printed results.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Strict JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for verification runs.
    #[arg(long, global = true, env = "RIESZ_JACOBI_JOBS")]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate one quantity on a grid of arguments.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Run verification checks and write JSON and CSV reports.
    Verify(VerifyArgs),
    /// Print the default run configuration.
    Defaults,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct ParamArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub beta: f64,
}

#[derive(Subcommand, Debug)]
pub enum EvalCommand {
    /// Normalized Jacobi trigonometric polynomial or its derivative.
    Poly {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        j: usize,
        #[arg(long, required = true, value_delimiter = ',')]
        theta: Vec<f64>,
    },
    /// Poisson kernel H_t or its theta-derivatives.
    Poisson {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, required = true, value_delimiter = ',')]
        t: Vec<f64>,
        #[arg(long, required = true, value_delimiter = ',')]
        theta: Vec<f64>,
        #[arg(long, required = true, value_delimiter = ',')]
        phi: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        j: usize,
        #[arg(long, default_value = "auto")]
        mode: String,
        /// Remove the n = 0 term.
        #[arg(long)]
        compensated: bool,
    },
    /// Riesz kernel of order N, or a potential kernel with --sigma.
    Kernel {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long = "N")]
        order: Option<usize>,
        #[arg(long, default_value = "standard")]
        variant: String,
        #[arg(long, conflicts_with = "order")]
        sigma: Option<f64>,
        /// Theta-derivatives of the potential kernel.
        #[arg(long, default_value_t = 0, requires = "sigma")]
        j: usize,
        #[arg(long, requires = "sigma")]
        compensated: bool,
        #[arg(long, required = true, value_delimiter = ',')]
        theta: Vec<f64>,
        #[arg(long, required = true, value_delimiter = ',')]
        phi: Vec<f64>,
    },
    /// Riesz transform of a registry function by both routes, or a negative power with --sigma.
    Transform {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long = "N")]
        order: Option<usize>,
        #[arg(long, conflicts_with = "order")]
        sigma: Option<f64>,
        #[arg(long, default_value = "standard")]
        variant: String,
        /// Registry function such as bump(1,2), cosk(3) or poly(2).
        #[arg(long)]
        f: String,
        #[arg(long, required = true, value_delimiter = ',')]
        theta: Vec<f64>,
    },
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Check to run, or `all`.
    #[arg(value_parser = check_name)]
    pub check: String,
    #[arg(long, allow_negative_numbers = true, requires = "beta")]
    pub alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true, requires = "alpha")]
    pub beta: Option<f64>,
    /// Angles for pvzero, or the grid of the representation check.
    #[arg(long, value_delimiter = ',')]
    pub theta: Vec<f64>,
    /// Orders for the representation check.
    #[arg(long = "N", value_delimiter = ',')]
    pub orders: Vec<usize>,
    /// Functions for the representation check.
    #[arg(long = "f", value_delimiter = ';')]
    pub functions: Vec<String>,
    /// Variants for the representation check.
    #[arg(long, value_delimiter = ',')]
    pub variant: Vec<String>,
    /// Directory receiving the reports.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Write zero run times so that reports are byte-stable.
    #[arg(long)]
    pub omit_timing: bool,
}

fn check_name(s: &str) -> Result<String, String> {
    let names = riesz_jacobi::verify::check_names();
    if s == "all" || names.contains(&s) {
        Ok(s.to_string())
    } else {
        Err(format!("expected one of all, {}", names.join(", ")))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
