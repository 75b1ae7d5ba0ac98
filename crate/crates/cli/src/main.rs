use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand};
use nonclassical::phase_space::GridSpec;
use nonclassical::{Amplitude, OptimizerConfig};
use nonclassical_cli::{
    cmd_degree, cmd_oracle, cmd_qgrid, cmd_sweep, parse_complex, CliError, FamilySel, GlobalOptions, OracleOptions,
    SignSel, SurfaceKind, SweepSpec, EXIT_USAGE,
};

#[derive(Debug, Parser)]
#[command(name = "ncdegree", version, about = "Nonclassical degree of one- and two-mode pure states")]
struct Cli {
    /// Fock truncation for coherent-state specs
    #[arg(long, global = true, value_name = "N")]
    trunc: Option<usize>,
    /// Lattice points per real axis for optimizer starts (odd, ≥ 3)
    #[arg(long, global = true, value_name = "K", default_value_t = OptimizerConfig::default().grid_per_axis)]
    grid_per_axis: usize,
    /// Search disk radius beyond √N
    #[arg(long, global = true, value_name = "R", default_value_t = OptimizerConfig::default().radius_margin)]
    radius_margin: f64,
    /// Nelder-Mead simplex-size tolerance
    #[arg(long, global = true, value_name = "T", default_value_t = OptimizerConfig::default().simplex_tol)]
    simplex_tol: f64,
    #[arg(long, global = true, value_name = "S", default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores)
    #[arg(long, global = true, value_name = "J")]
    jobs: Option<usize>,
    /// Write output to FILE instead of stdout
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,
    /// JSON output where a command supports it
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Measure report for one state (fock:n, coh:re,im, psi:±:xi, phi:±:xi, file:PATH)
    Degree {
        spec: String,
        /// Use the brute-force lattice maximizer instead of the optimizer
        #[arg(long)]
        oracle: bool,
    },
    /// CSV sweep of both families over ξ
    Sweep {
        #[arg(long, default_value = "both")]
        family: FamilySel,
        #[arg(long, default_value = "both", allow_hyphen_values = true)]
        sign: SignSel,
        #[arg(long, default_value_t = 0.0)]
        xi_start: f64,
        #[arg(long, default_value_t = 1.0)]
        xi_end: f64,
        #[arg(long, default_value_t = 0.01)]
        xi_step: f64,
    },
    /// Closed-form and brute-force validation battery
    Oracle {
        /// Restrict to one group (fock, coherent, psi, phi, product, entropy, mandel, convolution, brute, distance)
        #[arg(long)]
        only: Option<String>,
        #[arg(long, hide = true, default_value_t = 0.0)]
        perturb: f64,
    },
    /// re,im,value CSV of Q, W or Q obtained from W
    #[command(disable_help_flag = true)]
    Qgrid {
        spec: String,
        #[arg(long, default_value = "q")]
        func: SurfaceKind,
        /// Grid half-width
        #[arg(short = 'L', default_value_t = 3.0)]
        half_width: f64,
        /// Grid step
        #[arg(short = 'h', default_value_t = 0.1)]
        step: f64,
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        center: Option<Amplitude>,
        #[arg(long, action = ArgAction::Help)]
        help: Option<bool>,
    },
}

fn run(cli: Cli) -> Result<String, CliError> {
    let opts = GlobalOptions {
        trunc: cli.trunc,
        optimizer: OptimizerConfig {
            radius_margin: cli.radius_margin,
            grid_per_axis: cli.grid_per_axis,
            simplex_tol: cli.simplex_tol,
            seed: cli.seed,
            ..OptimizerConfig::default()
        },
        jobs: cli.jobs,
        json: cli.json,
    };
    match cli.command {
        Command::Degree { spec, oracle } => cmd_degree(&spec, &opts, oracle),
        Command::Sweep { family, sign, xi_start, xi_end, xi_step } => {
            cmd_sweep(&SweepSpec { family, sign, xi_start, xi_end, xi_step }, &opts)
        }
        Command::Oracle { only, perturb } => cmd_oracle(&opts, &OracleOptions { only, perturb }),
        Command::Qgrid { spec, func, half_width, step, center, .. } => {
            let grid = GridSpec { half_width, step, center: center.unwrap_or_default() };
            cmd_qgrid(&spec, func, &grid, &opts)
        }
    }
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), String> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    let out = cli.out.clone();
    let (text, code) = match run(cli) {
        Ok(text) => (Some(text), 0),
        Err(e) => {
            eprintln!("error: {e}");
            (e.output().map(str::to_owned), e.exit_code())
        }
    };
    if let Some(text) = text {
        if let Err(msg) = emit(&text, out.as_ref()) {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_USAGE as u8);
        }
    }
    ExitCode::from(code as u8)
}
