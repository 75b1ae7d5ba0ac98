//! `sweep`: degree, entropy and Mandel factor of both families along a ξ grid.

use std::fmt::Write as _;
use std::str::FromStr;

use nonclassical::measures::{closed_form_degree, entanglement_entropy, mandel_q_bipartite, ClosedForm};
use nonclassical::numfmt;
use nonclassical::states::{make_phi_family, make_psi_family, Sign};
use rayon::prelude::*;

use crate::{degree_of, CliError, CliResult, GlobalOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilySel {
    Psi,
    Phi,
    Both,
}

impl FamilySel {
    fn psi(self) -> bool {
        self != FamilySel::Phi
    }

    fn phi(self) -> bool {
        self != FamilySel::Psi
    }
}

impl FromStr for FamilySel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "psi" => Ok(FamilySel::Psi),
            "phi" => Ok(FamilySel::Phi),
            "both" => Ok(FamilySel::Both),
            _ => Err(format!("unknown family {s:?} (expected psi, phi or both)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignSel {
    Plus,
    Minus,
    Both,
}

impl SignSel {
    fn signs(self) -> Vec<Sign> {
        match self {
            SignSel::Plus => vec![Sign::Plus],
            SignSel::Minus => vec![Sign::Minus],
            SignSel::Both => vec![Sign::Plus, Sign::Minus],
        }
    }
}

impl FromStr for SignSel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "+" | "plus" => Ok(SignSel::Plus),
            "-" | "minus" => Ok(SignSel::Minus),
            "both" => Ok(SignSel::Both),
            _ => Err(format!("unknown sign {s:?} (expected +, - or both)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub family: FamilySel,
    pub sign: SignSel,
    pub xi_start: f64,
    pub xi_end: f64,
    pub xi_step: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec { family: FamilySel::Both, sign: SignSel::Both, xi_start: 0.0, xi_end: 1.0, xi_step: 0.01 }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> CliResult<()> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !unit(self.xi_start) || !unit(self.xi_end) {
            return Err(CliError::Usage(format!("xi range [{}, {}] must lie in [0, 1]", self.xi_start, self.xi_end)));
        }
        if !(self.xi_step > 0.0 && self.xi_step <= 1.0) {
            return Err(CliError::Usage(format!("xi step {} must lie in (0, 1]", self.xi_step)));
        }
        if self.xi_start > self.xi_end {
            return Err(CliError::Usage(format!("xi start {} exceeds xi end {}", self.xi_start, self.xi_end)));
        }
        Ok(())
    }

    /// Grid points `start + i·step` up to `end`, rounded to 12 decimals so that
    /// 0.01-steps land exactly on the printed values.
    pub fn grid(&self) -> Vec<f64> {
        let n = ((self.xi_end - self.xi_start) / self.xi_step + 1e-9).floor() as usize;
        (0..=n)
            .map(|i| {
                let x = self.xi_start + i as f64 * self.xi_step;
                ((x * 1e12).round() / 1e12).min(1.0)
            })
            .collect()
    }

    pub fn header(&self) -> Vec<String> {
        let mut cols = vec!["xi".to_string()];
        for (fam, on) in [("psi", self.family.psi()), ("phi", self.family.phi())] {
            if on {
                for s in self.sign.signs() {
                    cols.push(format!("D_{fam}_{}", if s == Sign::Plus { "plus" } else { "minus" }));
                }
            }
        }
        cols.push("E".into());
        if self.family.psi() {
            cols.push("q_psi".into());
        }
        if self.family.phi() {
            cols.push("q_phi".into());
        }
        if self.family.psi() {
            cols.push("D_psi_closed".into());
        }
        if self.family.phi() {
            cols.push("D_phi_closed".into());
        }
        cols
    }
}

struct Row {
    values: Vec<f64>,
    converged: bool,
}

fn row(spec: &SweepSpec, xi: f64, opts: &GlobalOptions) -> Row {
    let mut values = vec![xi];
    let mut converged = true;
    let families: [(bool, fn(Sign, f64) -> nonclassical::Result<_>); 2] =
        [(spec.family.psi(), make_psi_family), (spec.family.phi(), make_phi_family)];
    for (on, make) in families {
        if on {
            for s in spec.sign.signs() {
                let state = make(s, xi).expect("validated xi");
                let (d, ok) = degree_of(&nonclassical::State::Bipartite(state), &opts.optimizer);
                values.push(d);
                converged &= ok;
            }
        }
    }
    // Entropy and Mandel factor do not depend on the sign.
    let sign = spec.sign.signs()[0];
    let witness = if spec.family.psi() { make_psi_family(sign, xi) } else { make_phi_family(sign, xi) };
    values.push(entanglement_entropy(&witness.expect("validated xi")));
    for (on, make) in families {
        if on {
            values.push(mandel_q_bipartite(&make(sign, xi).expect("validated xi")).unwrap_or(f64::NAN));
        }
    }
    if spec.family.psi() {
        values.push(closed_form_degree(ClosedForm::Psi(xi)).expect("validated xi"));
    }
    if spec.family.phi() {
        values.push(closed_form_degree(ClosedForm::Phi(xi)).expect("validated xi"));
    }
    Row { values, converged }
}

/// Renders the sweep as CSV. Rows are computed in parallel and emitted in ξ order.
/// Returns `CliError::Convergence` (carrying the full CSV) if any optimization
/// failed to converge.
pub fn cmd_sweep(spec: &SweepSpec, opts: &GlobalOptions) -> CliResult<String> {
    spec.validate()?;
    opts.optimizer.validate()?;
    let grid = spec.grid();
    let rows: Vec<Row> = opts.run_pooled(|| grid.par_iter().map(|&xi| row(spec, xi, opts)).collect())?;
    let mut out = spec.header().join(",");
    out.push('\n');
    for r in &rows {
        let cells: Vec<String> = r.values.iter().map(|&v| numfmt::csv(v)).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    if rows.iter().all(|r| r.converged) {
        Ok(out)
    } else {
        Err(CliError::Convergence { output: out })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_has_101_rows() {
        let g = SweepSpec::default().grid();
        assert_eq!(g.len(), 101);
        assert_eq!(g[37], 0.37);
        assert_eq!(*g.last().unwrap(), 1.0);
    }

    #[test]
    fn header_subsets() {
        let s = SweepSpec { family: FamilySel::Phi, sign: SignSel::Minus, ..Default::default() };
        assert_eq!(s.header(), ["xi", "D_phi_minus", "E", "q_phi", "D_phi_closed"]);
        assert_eq!(SweepSpec::default().header().len(), 10);
    }

    #[test]
    fn rejects_bad_ranges() {
        for s in [
            SweepSpec { xi_step: 0.0, ..Default::default() },
            SweepSpec { xi_start: 0.8, xi_end: 0.2, ..Default::default() },
            SweepSpec { xi_end: 1.5, ..Default::default() },
        ] {
            assert!(matches!(s.validate(), Err(CliError::Usage(_))));
        }
    }

    #[test]
    fn small_sweep_rows() {
        let s = SweepSpec { xi_start: 0.0, xi_end: 1.0, xi_step: 0.5, ..Default::default() };
        let csv = cmd_sweep(&s, &GlobalOptions::default()).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        let mid: Vec<f64> = lines[2].split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(mid[0], 0.5);
        assert!((mid[3] - 0.5).abs() < 1e-6);
        assert!((mid[5] - std::f64::consts::LN_2).abs() < 1e-12);
        assert!(mid[7].abs() < 1e-12);
        assert!(lines[3].split(',').nth(7).unwrap() == "NaN");
    }
}
