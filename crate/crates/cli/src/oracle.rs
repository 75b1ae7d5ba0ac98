//! `oracle`: closed-form and brute-force validation battery.

use std::f64::consts::PI;

use nonclassical::measures::{
    closed_form_degree, compose_product_degree, family_entropy, mandel_q, phi_high_branch, phi_low_branch, ClosedForm,
};
use nonclassical::numfmt;
use nonclassical::optimize::{brute_force_max, maximize};
use nonclassical::phase_space::{distance_bu, distance_hs, fidelity, q_from_w, q_single, GridSpec};
use nonclassical::states::{
    make_coherent, make_fock, make_phi_family, make_product, make_psi_family, random_bipartite, random_single, Sign,
    SingleModeState, State,
};
use nonclassical::{entanglement_entropy, Amplitude, OptimizerConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::{degree_of, oracle_lattice, render_table, CliError, CliResult, GlobalOptions};

pub const GROUPS: [&str; 10] =
    ["fock", "coherent", "psi", "phi", "product", "entropy", "mandel", "convolution", "brute", "distance"];

const DEGREE_TOL: f64 = 1e-6;
const EXACT_TOL: f64 = 1e-12;
const CONVOLUTION_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCase {
    pub group: &'static str,
    pub case: String,
    pub computed: f64,
    pub reference: f64,
    pub delta: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl OracleCase {
    fn new(group: &'static str, case: String, computed: f64, reference: f64, tolerance: f64) -> Self {
        let delta = (computed - reference).abs();
        OracleCase { group, case, computed, reference, delta, tolerance, pass: delta <= tolerance }
    }

    fn perturbed(self, eps: f64) -> Self {
        OracleCase::new(self.group, self.case, self.computed + eps, self.reference, self.tolerance)
    }
}

#[derive(Debug, Clone, Default)]
pub struct OracleOptions {
    pub only: Option<String>,
    /// Added to every computed value; exists to check that the harness can fail.
    pub perturb: f64,
}

fn xi_grid(step: f64) -> Vec<f64> {
    let n = (1.0 / step).round() as usize;
    (0..=n).map(|i| i as f64 / n as f64).collect()
}

fn two_term(n: usize, m: usize, phase: f64) -> SingleModeState {
    let mut v = vec![Amplitude::new(0.0, 0.0); n.max(m) + 1];
    v[n] += Amplitude::new(1.0, 0.0);
    v[m] += Amplitude::from_polar(1.0, phase);
    SingleModeState::normalized(v).expect("nonzero superposition")
}

fn single(s: SingleModeState) -> State {
    State::Single(s)
}

fn pair(s: nonclassical::BipartiteState) -> State {
    State::Bipartite(s)
}

fn degree_case(group: &'static str, case: String, s: &State, reference: f64, cfg: &OptimizerConfig) -> OracleCase {
    let (d, converged) = degree_of(s, cfg);
    let d = if converged { d } else { f64::NAN };
    OracleCase::new(group, case, d, reference, DEGREE_TOL)
}

fn fock_cases(cfg: &OptimizerConfig) -> Vec<OracleCase> {
    (0..=8usize)
        .into_par_iter()
        .map(|n| {
            let reference = closed_form_degree(ClosedForm::Fock(n)).unwrap();
            degree_case("fock", format!("D(|{n}>)"), &single(make_fock(n).unwrap()), reference, cfg)
        })
        .collect()
}

fn coherent_cases(cfg: &OptimizerConfig) -> Vec<OracleCase> {
    [(0.3, 0.0), (0.7, 1.0), (1.5, -2.0)]
        .into_par_iter()
        .map(|(r, phase)| {
            let s = make_coherent(Amplitude::from_polar(r, phase), 40).unwrap();
            degree_case("coherent", format!("D(|alpha|={r})"), &single(s), 0.0, cfg)
        })
        .collect()
}

fn family_cases(group: &'static str, cfg: &OptimizerConfig) -> Vec<OracleCase> {
    let jobs: Vec<(f64, Sign)> =
        xi_grid(0.05).into_iter().flat_map(|xi| [(xi, Sign::Plus), (xi, Sign::Minus)]).collect();
    let mut cases: Vec<OracleCase> = jobs
        .into_par_iter()
        .map(|(xi, sign)| {
            let (state, form) = if group == "psi" {
                (make_psi_family(sign, xi).unwrap(), ClosedForm::Psi(xi))
            } else {
                (make_phi_family(sign, xi).unwrap(), ClosedForm::Phi(xi))
            };
            let reference = closed_form_degree(form).unwrap();
            degree_case(group, format!("D({group}{sign}, xi={xi})"), &pair(state), reference, cfg)
        })
        .collect();
    if group == "phi" {
        cases.push(OracleCase::new(
            "phi",
            "branch continuity at xi=0.5".into(),
            phi_low_branch(0.5),
            phi_high_branch(0.5),
            EXACT_TOL,
        ));
    }
    cases
}

fn product_cases(cfg: &OptimizerConfig) -> Vec<OracleCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut jobs = Vec::new();
    for i in 0..50 {
        let a = random_single(&mut rng, i % 7).unwrap();
        let b = random_single(&mut rng, (3 * i + 1) % 7).unwrap();
        jobs.push((format!("random pair {i}"), a, b, None));
    }
    for n in 0..=4 {
        let (vac, f) = (make_fock(0).unwrap(), make_fock(n).unwrap());
        let d = closed_form_degree(ClosedForm::Fock(n)).unwrap();
        jobs.push((format!("D(|0,{n}>)"), vac.clone(), f.clone(), Some(d)));
        jobs.push((format!("D(|{n},0>)"), f.clone(), vac, Some(d)));
        jobs.push((format!("D(|{n},{n}>)"), f.clone(), f, Some(closed_form_degree(ClosedForm::FockPair(n)).unwrap())));
    }
    jobs.into_par_iter()
        .map(|(name, a, b, known)| {
            let reference = known.unwrap_or_else(|| {
                let (d1, _) = degree_of(&single(a.clone()), cfg);
                let (d2, _) = degree_of(&single(b.clone()), cfg);
                compose_product_degree(d1, d2).unwrap()
            });
            degree_case("product", name, &pair(make_product(&a, &b).unwrap()), reference, cfg)
        })
        .collect()
}

fn entropy_cases() -> Vec<OracleCase> {
    let mut cases = Vec::new();
    for xi in xi_grid(0.05) {
        let reference = family_entropy(xi).unwrap();
        for (name, s) in [("psi+", make_psi_family(Sign::Plus, xi)), ("phi-", make_phi_family(Sign::Minus, xi))] {
            let e = entanglement_entropy(&s.unwrap());
            cases.push(OracleCase::new("entropy", format!("E({name}, xi={xi})"), e, reference, EXACT_TOL));
        }
    }
    cases.push(OracleCase::new(
        "entropy",
        "E(phi+, xi=0.5) = ln 2".into(),
        entanglement_entropy(&make_phi_family(Sign::Plus, 0.5).unwrap()),
        std::f64::consts::LN_2,
        EXACT_TOL,
    ));
    cases
}

fn mandel_cases() -> Vec<OracleCase> {
    let mut cases = Vec::new();
    let q = |s: State| mandel_q(&s).unwrap_or(f64::NAN);
    for xi in xi_grid(0.1) {
        let s = make_psi_family(Sign::Minus, xi).unwrap();
        cases.push(OracleCase::new("mandel", format!("q(psi-, xi={xi})"), q(pair(s)), -1.0, EXACT_TOL));
    }
    for xi in xi_grid(0.1).into_iter().skip(1).take(9).chain([1.0 - 1e-9]) {
        let s = make_phi_family(Sign::Plus, xi).unwrap();
        cases.push(OracleCase::new("mandel", format!("q(phi+, xi={xi})"), q(pair(s)), 2.0 * xi - 1.0, EXACT_TOL));
    }
    for (n, m) in [(1, 0), (0, 2), (1, 1), (3, 2), (4, 4)] {
        let s = make_product(&make_fock(n).unwrap(), &make_fock(m).unwrap()).unwrap();
        cases.push(OracleCase::new("mandel", format!("q(|{n},{m}>)"), q(pair(s)), -1.0, EXACT_TOL));
    }
    cases
}

fn convolution_cases() -> Vec<OracleCase> {
    let states = [
        ("|0>", make_fock(0).unwrap()),
        ("|1>", make_fock(1).unwrap()),
        ("|2>", make_fock(2).unwrap()),
        ("(|0>+|2>)/sqrt2", two_term(0, 2, 0.0)),
        ("|alpha=1>", make_coherent(Amplitude::new(1.0, 0.0), 40).unwrap()),
    ];
    let points = [
        Amplitude::new(0.0, 0.0),
        Amplitude::new(0.5, 0.0),
        Amplitude::new(1.0, 1.0),
        Amplitude::new(-0.7, 0.3),
        Amplitude::new(0.2, -1.4),
    ];
    let jobs: Vec<_> = states.iter().flat_map(|s| points.iter().map(move |p| (s, *p))).collect();
    jobs.into_par_iter()
        .map(|((name, s), p)| {
            let via_w = q_from_w(p, s, &GridSpec::centered(p)).unwrap_or(f64::NAN);
            OracleCase::new(
                "convolution",
                format!("Q{name} at {}{:+}i", p.re, p.im),
                via_w,
                q_single(p, s),
                CONVOLUTION_TOL,
            )
        })
        .collect()
}

fn brute_cases(cfg: &OptimizerConfig) -> Vec<OracleCase> {
    let mut states: Vec<(String, State)> = Vec::new();
    for n in 0..=6 {
        states.push((format!("|{n}>"), single(make_fock(n).unwrap())));
    }
    for (n, m, ph) in [(0, 1, 0.0), (0, 2, 0.0), (1, 3, 0.7), (0, 4, PI), (2, 5, -1.2)] {
        states.push((format!("|{n}>+e^({ph}i)|{m}>"), single(two_term(n, m, ph))));
    }
    for xi in xi_grid(0.1) {
        for sign in [Sign::Plus, Sign::Minus] {
            states.push((format!("psi{sign}, xi={xi}"), pair(make_psi_family(sign, xi).unwrap())));
            states.push((format!("phi{sign}, xi={xi}"), pair(make_phi_family(sign, xi).unwrap())));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for i in 0..10 {
        let s = random_bipartite(&mut rng, 1 + i % 4, 1 + (i / 2) % 4).unwrap();
        states.push((format!("random bipartite {i}"), pair(s)));
    }
    states
        .into_par_iter()
        .map(|(name, s)| {
            let fast = maximize(&s, cfg).map(|m| m.q_max).unwrap_or(f64::NAN);
            let (half_width, step) = oracle_lattice(&s);
            let slow = brute_force_max(&s, half_width, step).map(|m| m.q_max).unwrap_or(f64::NAN);
            OracleCase::new("brute", format!("q_max {name}"), fast, slow, DEGREE_TOL)
        })
        .collect()
}

fn distance_cases() -> Vec<OracleCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut cases = Vec::new();
    let mut worst_order = 0.0f64;
    for i in 0..20 {
        let a = single(random_single(&mut rng, 1 + i % 6).unwrap());
        let b = single(random_single(&mut rng, 1 + (i + 2) % 6).unwrap());
        let f = fidelity(&a, &b).unwrap();
        let (bu, hs) = (distance_bu(&a, &b).unwrap(), distance_hs(&a, &b).unwrap());
        worst_order = worst_order.max(bu - hs);
        cases.push(OracleCase::new("distance", format!("d_HS^2/2 + F, pair {i}"), 0.5 * hs * hs + f, 1.0, EXACT_TOL));
    }
    cases.push(OracleCase::new("distance", "max(d_BU - d_HS, 0)".into(), worst_order.max(0.0), 0.0, EXACT_TOL));
    let (v0, v1) = (single(make_fock(0).unwrap()), single(make_fock(1).unwrap()));
    cases.push(OracleCase::new("distance", "d_BU at F=1".into(), distance_bu(&v0, &v0).unwrap(), 0.0, EXACT_TOL));
    cases.push(OracleCase::new("distance", "d_HS at F=0".into(), distance_hs(&v0, &v1).unwrap(), 2f64.sqrt(), EXACT_TOL));
    cases.push(OracleCase::new("distance", "d_BU at F=0".into(), distance_bu(&v0, &v1).unwrap(), 2f64.sqrt(), EXACT_TOL));
    cases
}

/// Evaluates the battery (or one group of it).
pub fn run_battery(opts: &GlobalOptions, oracle: &OracleOptions) -> CliResult<Vec<OracleCase>> {
    if let Some(g) = &oracle.only {
        if !GROUPS.contains(&g.as_str()) {
            return Err(CliError::Usage(format!("unknown group {g:?}; expected one of {}", GROUPS.join(", "))));
        }
    }
    opts.optimizer.validate()?;
    let cfg = &opts.optimizer;
    let wanted = |g: &str| oracle.only.as_deref().map_or(true, |o| o == g);
    opts.run_pooled(|| {
        let mut cases = Vec::new();
        for g in GROUPS.iter().copied().filter(|g| wanted(g)) {
            cases.extend(match g {
                "fock" => fock_cases(cfg),
                "coherent" => coherent_cases(cfg),
                "psi" | "phi" => family_cases(g, cfg),
                "product" => product_cases(cfg),
                "entropy" => entropy_cases(),
                "mandel" => mandel_cases(),
                "convolution" => convolution_cases(),
                "brute" => brute_cases(cfg),
                _ => distance_cases(),
            });
        }
        cases.into_iter().map(|c| c.perturbed(oracle.perturb)).collect()
    })
}

/// Renders the battery as a table (or JSON array). Any failing case turns the
/// result into `CliError::OracleFailed`, which still carries the rendered output.
pub fn cmd_oracle(opts: &GlobalOptions, oracle: &OracleOptions) -> CliResult<String> {
    let cases = run_battery(opts, oracle)?;
    let failed = cases.iter().filter(|c| !c.pass).count();
    let output = if opts.json {
        serde_json::to_string_pretty(&cases).map_err(nonclassical::Error::from)? + "\n"
    } else {
        let rows: Vec<Vec<String>> = cases
            .iter()
            .map(|c| {
                vec![
                    c.group.to_string(),
                    c.case.clone(),
                    numfmt::table(c.computed),
                    numfmt::table(c.reference),
                    numfmt::table(c.delta),
                    numfmt::table(c.tolerance),
                    if c.pass { "PASS" } else { "FAIL" }.to_string(),
                ]
            })
            .collect();
        let mut table =
            render_table(&["group", "case", "computed", "reference", "|delta|", "tolerance", "status"], &rows);
        table.push_str(&format!("{} cases, {} passed, {failed} failed\n", cases.len(), cases.len() - failed));
        table
    };
    if failed == 0 {
        Ok(output)
    } else {
        Err(CliError::OracleFailed { output, failed })
    }
}
