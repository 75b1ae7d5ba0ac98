//! Commands behind the `ncdegree` binary: `degree`, `sweep`, `oracle`, `qgrid`.
//!
//! Each command renders its full output into a `String` so the binary only has to
//! route it to stdout or `--out` and pick the exit code.

pub mod oracle;
pub mod sweep;

use std::fmt::Write as _;

use nonclassical::measures::{closed_form_for, degree_from_q, entanglement_entropy, mandel_q};
use nonclassical::optimize::{brute_force_max, maximize};
use nonclassical::phase_space::{q_from_w, q_from_w_grid, q_single, wigner, write_grid_csv, GridSpec};
use nonclassical::states::{parse_state_with, ParseOptions, State};
use nonclassical::{measure, Amplitude, Error, MeasureReport, OptimizerConfig};
use rayon::prelude::*;
use thiserror::Error;

pub use oracle::{cmd_oracle, OracleCase, OracleOptions};
pub use sweep::{cmd_sweep, FamilySel, SignSel, SweepSpec};

pub const EXIT_ORACLE_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONVERGENCE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] Error),
    /// The command ran to completion but some optimization did not converge;
    /// `output` is still printed.
    #[error("optimizer did not converge; results are flagged")]
    Convergence { output: String },
    #[error("{failed} oracle case(s) failed")]
    OracleFailed { output: String, failed: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Core(_) => EXIT_USAGE,
            CliError::Convergence { .. } => EXIT_CONVERGENCE,
            CliError::OracleFailed { .. } => EXIT_ORACLE_FAIL,
        }
    }

    /// Output that must still reach the user despite the failure.
    pub fn output(&self) -> Option<&str> {
        match self {
            CliError::Convergence { output } | CliError::OracleFailed { output, .. } => Some(output),
            _ => None,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Flags shared by every command.
#[derive(Debug, Clone, Default)]
pub struct GlobalOptions {
    pub trunc: Option<usize>,
    pub optimizer: OptimizerConfig,
    pub jobs: Option<usize>,
    pub json: bool,
}

impl GlobalOptions {
    pub fn parse_options(&self) -> ParseOptions {
        ParseOptions { coherent_truncation: self.trunc }
    }

    /// Runs `f` on a pool limited to `--jobs` threads (rayon's default otherwise).
    pub fn run_pooled<T: Send>(&self, f: impl FnOnce() -> T + Send) -> CliResult<T> {
        match self.jobs {
            None => Ok(f()),
            Some(0) => Err(CliError::Usage("--jobs must be at least 1".into())),
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| CliError::Usage(format!("cannot start {n} worker threads: {e}")))?;
                Ok(pool.install(f))
            }
        }
    }
}

/// Brute-force lattice used by `degree --oracle`: step 0.02 in two real
/// dimensions, 0.1 in four.
pub fn oracle_lattice(s: &State) -> (f64, f64) {
    match s {
        State::Single(st) => ((st.truncation() as f64).sqrt() + 1.5, 0.02),
        State::Bipartite(st) => ((st.trunc_a().max(st.trunc_b()) as f64).sqrt() + 1.0, 0.1),
    }
}

/// `degree SPEC`: full measure report as one JSON line.
pub fn cmd_degree(spec: &str, opts: &GlobalOptions, use_oracle: bool) -> CliResult<String> {
    let parsed = parse_state_with(spec, &opts.parse_options())?;
    let state = parsed.state;
    let result = if use_oracle {
        let (half_width, step) = oracle_lattice(&state);
        let max = brute_force_max(&state, half_width, step)?;
        Ok(MeasureReport {
            degree: degree_from_q(max.q_max, state.arity()),
            q_max: max.q_max,
            argmax: max.argmax,
            entropy: match &state {
                State::Bipartite(b) => Some(entanglement_entropy(b)),
                State::Single(_) => None,
            },
            mandel_q: mandel_q(&state).ok(),
            converged: max.converged,
            closed_form_ref: None,
        })
    } else {
        opts.run_pooled(|| measure(&state, &opts.optimizer))?
    };
    let reference = closed_form_for(&parsed.label);
    let render = |mut r: MeasureReport| {
        r.closed_form_ref = reference;
        serde_json::to_string(&r).map(|s| s + "\n").map_err(Error::from)
    };
    match result {
        Ok(r) => Ok(render(r)?),
        Err(Error::DegreeNotConverged { report }) => Err(CliError::Convergence { output: render(*report)? }),
        Err(e) => Err(e.into()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceKind {
    Q,
    W,
    QFromW,
}

impl std::str::FromStr for SurfaceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "q" => Ok(SurfaceKind::Q),
            "w" => Ok(SurfaceKind::W),
            "qfromw" => Ok(SurfaceKind::QFromW),
            _ => Err(format!("unknown surface {s:?} (expected q, w or qfromw)")),
        }
    }
}

/// `qgrid SPEC`: a `re,im,value` CSV of Q, W, or Q obtained by smoothing W.
pub fn cmd_qgrid(spec: &str, func: SurfaceKind, grid: &GridSpec, opts: &GlobalOptions) -> CliResult<String> {
    grid.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let state = match parse_state_with(spec, &opts.parse_options())?.state {
        State::Single(s) => s,
        State::Bipartite(_) => return Err(CliError::Usage("qgrid needs a single-mode state".into())),
    };
    let points = grid.points();
    let values = opts.run_pooled(|| -> nonclassical::Result<Vec<f64>> {
        match func {
            SurfaceKind::Q => Ok(points.par_iter().map(|&p| q_single(p, &state)).collect()),
            SurfaceKind::W => Ok(points.par_iter().map(|&p| wigner(p, &state)).collect()),
            SurfaceKind::QFromW => match q_from_w_grid(&state, grid, &GridSpec::default()) {
                Ok(v) => Ok(v),
                // Output step not commensurate with the quadrature lattice.
                Err(Error::Quadrature(_)) => points
                    .par_iter()
                    .map(|&p: &Amplitude| q_from_w(p, &state, &GridSpec::centered(p)))
                    .collect(),
                Err(e) => Err(e),
            },
        }
    })??;
    let mut buf = Vec::new();
    write_grid_csv(&mut buf, &points, &values).map_err(Error::from)?;
    Ok(String::from_utf8(buf).expect("CSV output is ASCII"))
}

/// Parses `re,im` (used by `--center`).
pub fn parse_complex(s: &str) -> Result<Amplitude, String> {
    let (re, im) = s.split_once(',').ok_or_else(|| format!("expected 're,im', found {s:?}"))?;
    let parse = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    Ok(Amplitude::new(parse(re)?, parse(im)?))
}

/// Left-aligned text table with a header row.
pub(crate) fn render_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let mut line = |cells: Vec<&str>| {
        let text: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        let _ = writeln!(out, "{}", text.join("  ").trim_end());
    };
    line(header.to_vec());
    for row in rows {
        line(row.iter().map(String::as_str).collect());
    }
    out
}

/// Runs `maximize` for a state and converts to a degree; used by sweeps and the oracle.
pub(crate) fn degree_of(state: &State, cfg: &OptimizerConfig) -> (f64, bool) {
    match maximize(state, cfg) {
        Ok(m) => (degree_from_q(m.q_max, state.arity()), m.converged),
        Err(Error::NotConverged { best }) => (degree_from_q(best.q_max, state.arity()), false),
        Err(e) => panic!("optimizer rejected a validated configuration: {e}"),
    }
}
