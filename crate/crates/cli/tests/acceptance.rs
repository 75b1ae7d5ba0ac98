//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::f64::consts::LN_2;
use std::process::Command;
use std::time::{Duration, Instant};

use nonclassical::measures::{
    closed_form_degree, compose_product_degree, phi_high_branch, phi_low_branch, ClosedForm,
};
use nonclassical::optimize::{brute_force_max, maximize};
use nonclassical::phase_space::{distance_bu, distance_hs, fidelity, husimi_q, q_from_w, GridSpec, PhasePoint};
use nonclassical::states::{
    make_coherent, make_fock, make_phi_family, make_product, make_psi_family, random_bipartite, random_single, Sign,
    SingleModeState, State,
};
use nonclassical::{entanglement_entropy, mandel_q, nonclassical_degree, nonclassical_degree2, Amplitude, Error};
use nonclassical::OptimizerConfig;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

const D_TOL: f64 = 1e-6;
const EXACT: f64 = 1e-12;

fn xi_grid() -> Vec<f64> {
    (0..=20).map(|i| i as f64 / 20.0).collect()
}

fn signs() -> [Sign; 2] {
    [Sign::Plus, Sign::Minus]
}

fn check(ok: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

fn d1(s: &SingleModeState) -> f64 {
    nonclassical_degree(s, &OptimizerConfig::default()).unwrap().degree
}

fn d2(s: &nonclassical::BipartiteState) -> f64 {
    nonclassical_degree2(s, &OptimizerConfig::default()).unwrap().degree
}

fn two_term(n: usize, m: usize) -> SingleModeState {
    let mut v = vec![Amplitude::new(0.0, 0.0); n.max(m) + 1];
    v[n] += 1.0;
    v[m] += 1.0;
    SingleModeState::normalized(v).unwrap()
}

fn fock_degrees() -> Outcome {
    let mut worst = 0.0f64;
    for n in 0..=8usize {
        let nf = n as f64;
        let fact: f64 = (1..=n).map(|k| k as f64).product();
        let expect = if n == 0 { 0.0 } else { 1.0 - nf.powi(n as i32) * (-nf).exp() / fact };
        let d = d1(&make_fock(n).unwrap());
        worst = worst.max((d - expect).abs());
        check((d - expect).abs() <= D_TOL, || format!("n={n}: D={d}, expected {expect}"))?;
    }
    check((d1(&make_fock(1).unwrap()) - 0.6321206).abs() <= 1e-7, || "D(|1>) != 0.6321206".into())?;
    Ok(format!("n=0..8, max |dD| = {worst:.1e}"))
}

fn coherent_baseline() -> Outcome {
    let mut worst = 0.0f64;
    for (r, ph) in [(0.3, 0.4), (0.7, -1.1), (1.5, 2.5)] {
        let d = d1(&make_coherent(Amplitude::from_polar(r, ph), 40).unwrap());
        worst = worst.max(d);
        check(d <= D_TOL, || format!("|alpha|={r}: D={d}"))?;
    }
    Ok(format!("max D = {worst:.1e}"))
}

fn psi_family() -> Outcome {
    let mut worst = 0.0f64;
    for xi in xi_grid() {
        for s in signs() {
            let d = d2(&make_psi_family(s, xi).unwrap());
            worst = worst.max((d - 0.63212056).abs());
            check((d - 0.63212056).abs() <= D_TOL, || format!("psi{s} xi={xi}: D={d}"))?;
        }
    }
    Ok(format!("42 states, max |D - 0.63212056| = {worst:.1e}"))
}

fn phi_family() -> Outcome {
    let mut worst = 0.0f64;
    for xi in xi_grid() {
        let expect = closed_form_degree(ClosedForm::Phi(xi)).unwrap();
        for s in signs() {
            let d = d2(&make_phi_family(s, xi).unwrap());
            worst = worst.max((d - expect).abs());
            check((d - expect).abs() <= D_TOL, || format!("phi{s} xi={xi}: D={d}, closed form {expect}"))?;
        }
    }
    let at0 = d2(&make_phi_family(Sign::Plus, 0.0).unwrap());
    let at1 = d2(&make_phi_family(Sign::Minus, 1.0).unwrap());
    check((at0 - 0.86466472).abs() <= D_TOL, || format!("D(xi=0) = {at0}"))?;
    check(at1.abs() <= D_TOL, || format!("D(xi=1) = {at1}"))?;
    let (lo, hi) = (phi_low_branch(0.5), phi_high_branch(0.5));
    check((lo - 0.5).abs() <= EXACT && (hi - 0.5).abs() <= EXACT, || format!("branches at 1/2: {lo}, {hi}"))?;
    Ok(format!("42 states, max |dD| = {worst:.1e}, branches meet at 0.5"))
}

fn composition_law() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for i in 0..50 {
        let a = random_single(&mut rng, i % 7).unwrap();
        let b = random_single(&mut rng, (i * 5 + 3) % 7).unwrap();
        let expect = compose_product_degree(d1(&a), d1(&b)).unwrap();
        let d = d2(&make_product(&a, &b).unwrap());
        worst = worst.max((d - expect).abs());
        check((d - expect).abs() <= D_TOL, || format!("pair {i}: D={d}, law {expect}"))?;
    }
    for n in 0..=4usize {
        let (vac, f) = (make_fock(0).unwrap(), make_fock(n).unwrap());
        let single = d1(&f);
        let d = d2(&make_product(&vac, &f).unwrap());
        check((d - single).abs() <= D_TOL, || format!("|0,{n}>: {d} vs {single}"))?;
        let nf = n as f64;
        let fact: f64 = (1..=n).map(|k| k as f64).product();
        let expect = if n == 0 { 0.0 } else { 1.0 - nf.powi(2 * n as i32) * (-2.0 * nf).exp() / (fact * fact) };
        let d = d2(&make_product(&f, &f).unwrap());
        check((d - expect).abs() <= D_TOL, || format!("|{n},{n}>: {d} vs {expect}"))?;
    }
    Ok(format!("50 random pairs, max |dD| = {worst:.1e}; Fock spot values ok"))
}

fn entropy() -> Outcome {
    let mut worst = 0.0f64;
    for xi in xi_grid() {
        let h = |p: f64| if p > 0.0 { -p * p.ln() } else { 0.0 };
        let expect = h(xi) + h(1.0 - xi);
        for s in signs() {
            for st in [make_psi_family(s, xi).unwrap(), make_phi_family(s, xi).unwrap()] {
                let e = entanglement_entropy(&st);
                worst = worst.max((e - expect).abs());
                check((e - expect).abs() <= EXACT, || format!("xi={xi}: E={e}, expected {expect}"))?;
            }
        }
    }
    let e = |xi| entanglement_entropy(&make_phi_family(Sign::Plus, xi).unwrap());
    check((e(0.5) - LN_2).abs() <= EXACT && e(0.0).abs() <= EXACT && e(1.0).abs() <= EXACT, || "endpoints".into())?;
    Ok(format!("84 states, max |dE| = {worst:.1e}"))
}

fn mandel() -> Outcome {
    let q = |s: nonclassical::BipartiteState| mandel_q(&State::Bipartite(s));
    for xi in xi_grid() {
        for s in signs() {
            let v = q(make_psi_family(s, xi).unwrap()).map_err(|e| e.to_string())?;
            check((v + 1.0).abs() <= EXACT, || format!("psi{s} xi={xi}: q={v}"))?;
        }
    }
    // ξ = 1 is the vacuum, where q is undefined; approach it from below instead.
    for xi in xi_grid().into_iter().skip(1).take(19).chain([1.0 - 1e-9]) {
        for s in signs() {
            let v = q(make_phi_family(s, xi).unwrap()).map_err(|e| e.to_string())?;
            check((v - (2.0 * xi - 1.0)).abs() <= EXACT, || format!("phi{s} xi={xi}: q={v}"))?;
        }
    }
    for (n, m) in [(1, 0), (0, 3), (1, 1), (2, 5), (4, 4)] {
        let v = q(make_product(&make_fock(n).unwrap(), &make_fock(m).unwrap()).unwrap()).map_err(|e| e.to_string())?;
        check((v + 1.0).abs() <= EXACT, || format!("|{n},{m}>: q={v}"))?;
    }
    for vacuum in [make_phi_family(Sign::Plus, 1.0).unwrap(), make_product(&make_fock(0).unwrap(), &make_fock(0).unwrap()).unwrap()] {
        check(matches!(q(vacuum), Err(Error::Undefined(_))), || "vacuum did not raise Undefined".into())?;
    }
    check(
        matches!(mandel_q(&State::Single(make_fock(0).unwrap())), Err(Error::Undefined(_))),
        || "single-mode vacuum did not raise Undefined".into(),
    )?;
    Ok("psi: -1, phi: 2xi-1 on (0,1), Fock products: -1, vacuum undefined".into())
}

fn convolution() -> Outcome {
    let start = Instant::now();
    let states = [
        make_fock(0).unwrap(),
        make_fock(1).unwrap(),
        make_fock(2).unwrap(),
        two_term(0, 2),
        make_coherent(Amplitude::new(1.0, 0.0), 40).unwrap(),
    ];
    let points =
        [Amplitude::new(0.0, 0.0), Amplitude::new(1.0, 1.0), Amplitude::new(-0.6, 0.2), Amplitude::new(0.3, -1.2), Amplitude::new(1.7, 0.0)];
    let mut worst = 0.0f64;
    for (i, s) in states.iter().enumerate() {
        for &p in &points {
            let via_w = q_from_w(p, s, &GridSpec::centered(p)).map_err(|e| e.to_string())?;
            let direct = husimi_q(&PhasePoint::Single(p), s).unwrap();
            worst = worst.max((via_w - direct).abs());
            check((via_w - direct).abs() <= 1e-4, || format!("state {i} at {p}: {via_w} vs {direct}"))?;
        }
    }
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!("25 points, max |dQ| = {worst:.1e}, {:.2} s", elapsed.as_secs_f64()))
}

fn column(header: &[&str], rows: &[Vec<f64>], name: &str) -> Vec<f64> {
    let i = header.iter().position(|h| *h == name).expect("column present");
    rows.iter().map(|r| r[i]).collect()
}

fn decoupling() -> Outcome {
    let out = Command::new(env!("CARGO_BIN_EXE_ncdegree")).arg("sweep").output().map_err(|e| e.to_string())?;
    check(out.status.success(), || format!("sweep exited with {}", out.status))?;
    let text = String::from_utf8(out.stdout).map_err(|e| e.to_string())?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    check(rows.len() == 101, || format!("{} rows", rows.len()))?;
    let range = |v: &[f64]| v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min);
    let mut d_psi = column(&header, &rows, "D_psi_plus");
    d_psi.extend(column(&header, &rows, "D_psi_minus"));
    let e = column(&header, &rows, "E");
    check(range(&d_psi) < 1e-6, || format!("range(D_psi) = {}", range(&d_psi)))?;
    check((range(&e) - LN_2).abs() <= 1e-9, || format!("range(E) = {}", range(&e)))?;
    for name in ["D_phi_plus", "D_phi_minus"] {
        let d = column(&header, &rows, name);
        check(d.windows(2).all(|w| w[1] <= w[0] + 1e-12), || format!("{name} not non-increasing"))?;
    }
    let peak = e.iter().enumerate().fold(0, |best, (i, v)| if *v > e[best] { i } else { best });
    let rises = e[..=peak].windows(2).all(|w| w[1] >= w[0]);
    let falls = e[peak..].windows(2).all(|w| w[1] <= w[0]);
    check(rises && falls && peak > 0 && peak < e.len() - 1, || "E is not rise-then-fall".into())?;
    Ok(format!("range(D_psi) = {:.1e}, range(E) - ln2 = {:.1e}, E peaks at xi = {}", range(&d_psi), range(&e) - LN_2, rows[peak][0]))
}

fn brute(s: &State) -> f64 {
    match s {
        State::Single(st) => brute_force_max(s, (st.truncation() as f64).sqrt() + 1.5, 0.02).unwrap().q_max,
        State::Bipartite(st) => {
            brute_force_max(s, (st.trunc_a().max(st.trunc_b()) as f64).sqrt() + 1.0, 0.1).unwrap().q_max
        }
    }
}

fn optimizer_vs_brute_force() -> Outcome {
    let mut states: Vec<(String, State)> = Vec::new();
    for n in 0..=8 {
        states.push((format!("|{n}>"), State::Single(make_fock(n).unwrap())));
    }
    for xi in xi_grid() {
        for s in signs() {
            states.push((format!("psi{s} {xi}"), State::Bipartite(make_psi_family(s, xi).unwrap())));
            states.push((format!("phi{s} {xi}"), State::Bipartite(make_phi_family(s, xi).unwrap())));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for i in 0..10 {
        let s = random_bipartite(&mut rng, 1 + (i % 4), 4 - (i % 4)).unwrap();
        states.push((format!("random {i}"), State::Bipartite(s)));
    }
    let cfg = OptimizerConfig::default();
    let mut worst = 0.0f64;
    for (name, s) in &states {
        let fast = maximize(s, &cfg).map_err(|e| e.to_string())?.q_max;
        let slow = brute(s);
        worst = worst.max((fast - slow).abs());
        check((fast - slow).abs() <= 1e-6, || format!("{name}: optimizer {fast}, brute force {slow}"))?;
    }
    Ok(format!("{} states, max |dq| = {worst:.1e}", states.len()))
}

fn distances() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let (a, b) = if i % 2 == 0 {
            (State::Single(random_single(&mut rng, i % 8).unwrap()), State::Single(random_single(&mut rng, (i / 2) % 8).unwrap()))
        } else {
            (
                State::Bipartite(random_bipartite(&mut rng, 1 + i % 3, 2).unwrap()),
                State::Bipartite(random_bipartite(&mut rng, 2, 1 + i % 4).unwrap()),
            )
        };
        let f = fidelity(&a, &b).unwrap();
        let (bu, hs) = (distance_bu(&a, &b).unwrap(), distance_hs(&a, &b).unwrap());
        check(bu <= hs + EXACT, || format!("pair {i}: d_BU {bu} > d_HS {hs}"))?;
        let identity = 0.5 * hs * hs + f - 1.0;
        worst = worst.max(identity.abs());
        check(identity.abs() <= EXACT, || format!("pair {i}: d_HS^2/2 + F - 1 = {identity}"))?;
        let same = distance_bu(&a, &a).unwrap().max(distance_hs(&a, &a).unwrap());
        check(same <= EXACT, || format!("pair {i}: self-distance {same}"))?;
    }
    let (v0, v1) = (State::Single(make_fock(0).unwrap()), State::Single(make_fock(3).unwrap()));
    for d in [distance_bu(&v0, &v1).unwrap(), distance_hs(&v0, &v1).unwrap()] {
        check((d - 2f64.sqrt()).abs() <= EXACT, || format!("orthogonal distance {d}"))?;
    }
    Ok(format!("100 pairs, max |d_HS^2/2 + F - 1| = {worst:.1e}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("Fock degrees", fock_degrees),
        ("coherent baseline", coherent_baseline),
        ("Psi family degree", psi_family),
        ("Phi family degree", phi_family),
        ("product composition law", composition_law),
        ("family entropy", entropy),
        ("Mandel factor", mandel),
        ("W to Q convolution", convolution),
        ("decoupling on sweep CSV", decoupling),
        ("optimizer vs brute force", optimizer_vs_brute_force),
        ("distance identities", distances),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {:>2}. {name}: {detail} [{secs:.1} s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL  {:>2}. {name}: {why} [{secs:.1} s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
