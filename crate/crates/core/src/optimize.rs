//! Global maximization of Husimi functions over one or two coherent amplitudes.
//!
//! [`maximize_q`] and [`maximize_q2`] run a deterministic multistart Nelder-Mead
//! search on `ln(Q + 1e-300)`; [`brute_force_max`] is an independent lattice scan
//! with compass-search refinement, kept as an oracle for the former.

use std::cmp::Ordering;
use std::f64::consts::{FRAC_PI_4, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand::rngs::StdRng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::phase_space::{fock_bra_amplitudes, q_cap, q_pair, q_single, PhasePoint};
use crate::states::{BipartiteState, SingleModeState, State};

/// Occupations below this are ignored when seeding starts on Fock radii.
const OCCUPIED: f64 = 1e-12;
/// Local maxima within this of the best are treated as ties.
const TIE_TOL: f64 = 1e-12;
/// Lattice scans larger than this are refused.
pub const BRUTE_FORCE_BUDGET: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimizerConfig {
    /// Search radius per mode is `√N + radius_margin`.
    pub radius_margin: f64,
    /// Lattice starts per real axis; odd so the origin is always included.
    pub grid_per_axis: usize,
    /// Stop once the simplex diameter drops below this.
    pub simplex_tol: f64,
    pub max_iters: usize,
    /// Chooses the edge orientation of each initial simplex.
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { radius_margin: 3.0, grid_per_axis: 9, simplex_tol: 1e-10, max_iters: 2000, seed: 0 }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_per_axis < 3 || self.grid_per_axis % 2 == 0 {
            return Err(Error::Config(format!("grid_per_axis = {} must be odd and at least 3", self.grid_per_axis)));
        }
        if !(self.radius_margin >= 0.0 && self.radius_margin.is_finite()) {
            return Err(Error::Config(format!("radius_margin = {} must be non-negative", self.radius_margin)));
        }
        if !(self.simplex_tol > 0.0) {
            return Err(Error::Config(format!("simplex_tol = {} must be positive", self.simplex_tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxResult {
    pub q_max: f64,
    pub argmax: PhasePoint,
    pub starts_used: usize,
    pub converged: bool,
    /// Max minus min over the three best local maxima.
    pub spread: f64,
}

/// Nelder-Mead outcome for one start.
#[derive(Debug, Clone)]
struct Local {
    x: Vec<f64>,
    value: f64,
    converged: bool,
}

/// Minimal Nelder-Mead maximizer with standard coefficients.
///
/// Stops when the largest distance from the best vertex falls below `tol`
/// or after `max_iters` iterations.
fn nelder_mead<F: Fn(&[f64]) -> f64>(f: &F, x0: &[f64], steps: &[f64], tol: f64, max_iters: usize) -> Local {
    let dim = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..dim {
        let mut x = x0.to_vec();
        x[i] += steps[i];
        let v = f(&x);
        simplex.push((x, v));
    }
    let by_value_desc = |a: &(Vec<f64>, f64), b: &(Vec<f64>, f64)| b.1.total_cmp(&a.1);
    let diameter = |s: &[(Vec<f64>, f64)]| {
        s[1..]
            .iter()
            .map(|(x, _)| x.iter().zip(&s[0].0).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    };
    let lerp = |a: &[f64], b: &[f64], t: f64| a.iter().zip(b).map(|(p, q)| p + t * (q - p)).collect::<Vec<_>>();

    let mut converged = false;
    for _ in 0..max_iters {
        simplex.sort_by(by_value_desc);
        if diameter(&simplex) < tol {
            converged = true;
            break;
        }
        let mut centroid = vec![0.0; dim];
        for (x, _) in &simplex[..dim] {
            centroid.iter_mut().zip(x).for_each(|(c, v)| *c += v / dim as f64);
        }
        let worst = simplex[dim].clone();
        let (best_v, second_worst_v) = (simplex[0].1, simplex[dim - 1].1);

        let reflected = lerp(&centroid, &worst.0, -1.0);
        let fr = f(&reflected);
        if fr > best_v {
            let expanded = lerp(&centroid, &worst.0, -2.0);
            let fe = f(&expanded);
            simplex[dim] = if fe > fr { (expanded, fe) } else { (reflected, fr) };
            continue;
        }
        if fr > second_worst_v {
            simplex[dim] = (reflected, fr);
            continue;
        }
        let (contracted, fc) = if fr > worst.1 {
            let x = lerp(&centroid, &reflected, 0.5);
            let v = f(&x);
            (x, v)
        } else {
            let x = lerp(&centroid, &worst.0, 0.5);
            let v = f(&x);
            (x, v)
        };
        if fc > fr.max(worst.1) {
            simplex[dim] = (contracted, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x = lerp(&best, &vertex.0, 0.5);
            let v = f(&x);
            *vertex = (x, v);
        }
    }
    simplex.sort_by(by_value_desc);
    let (x, value) = simplex.swap_remove(0);
    Local { x, value, converged }
}

/// Objective on real coordinates: `Q` plus the per-mode search radii.
struct Landscape<'a> {
    q: Box<dyn Fn(&[f64]) -> f64 + Sync + 'a>,
    radii: Vec<f64>,
    /// Occupied Fock levels of a single mode.
    occupied: Vec<usize>,
    /// Occupied `(n, m)` pairs for two modes.
    occupied_pairs: Vec<(usize, usize)>,
}

impl Landscape<'_> {
    fn dim(&self) -> usize {
        2 * self.radii.len()
    }

    fn inside(&self, x: &[f64]) -> bool {
        self.radii.iter().enumerate().all(|(k, r)| x[2 * k].hypot(x[2 * k + 1]) <= *r)
    }

    fn log_q(&self, x: &[f64]) -> f64 {
        if self.inside(x) {
            ((self.q)(x) + 1e-300).ln()
        } else {
            f64::NEG_INFINITY
        }
    }
}

fn single_landscape(s: &SingleModeState, margin: f64) -> Landscape<'_> {
    let occupied = s.populations().enumerate().filter(|(_, p)| *p > OCCUPIED).map(|(n, _)| n).collect();
    Landscape {
        q: Box::new(move |x: &[f64]| q_single(Complex64::new(x[0], x[1]), s)),
        radii: vec![(s.truncation() as f64).sqrt() + margin],
        occupied,
        occupied_pairs: Vec::new(),
    }
}

fn pair_landscape(s: &BipartiteState, margin: f64) -> Landscape<'_> {
    let c = s.coeffs();
    let mut pairs = Vec::new();
    for n in 0..c.nrows() {
        for m in 0..c.ncols() {
            if c[(n, m)].norm_sqr() > OCCUPIED {
                pairs.push((n, m));
            }
        }
    }
    Landscape {
        q: Box::new(move |x: &[f64]| q_pair(Complex64::new(x[0], x[1]), Complex64::new(x[2], x[3]), s)),
        radii: vec![(s.trunc_a() as f64).sqrt() + margin, (s.trunc_b() as f64).sqrt() + margin],
        occupied: Vec::new(),
        occupied_pairs: pairs,
    }
}

/// Tie-break key: smaller total modulus, then smaller phase angle of the first
/// nonzero amplitude.
fn tie_key(x: &[f64]) -> (f64, f64) {
    let modulus: f64 = x.chunks(2).map(|p| p[0].hypot(p[1])).sum();
    let angle = x
        .chunks(2)
        .find(|p| p[0].hypot(p[1]) > 1e-9)
        .map_or(0.0, |p| p[1].atan2(p[0]).rem_euclid(TAU));
    (modulus, angle)
}

/// `Greater` when `a` is the preferred maximum.
fn better(a: (f64, &[f64]), b: (f64, &[f64])) -> Ordering {
    if (a.0 - b.0).abs() > TIE_TOL {
        return a.0.total_cmp(&b.0);
    }
    let (ka, kb) = (tie_key(a.1), tie_key(b.1));
    kb.0.total_cmp(&ka.0).then(kb.1.total_cmp(&ka.1))
}

/// Lattice of `k^d` points spanning `[-r_mode, r_mode]` on each axis, restricted
/// to the search disks.
fn lattice(land: &Landscape, k: usize) -> Vec<Vec<f64>> {
    let dim = land.dim();
    let axes: Vec<Vec<f64>> = (0..dim)
        .map(|a| {
            let r = land.radii[a / 2];
            (0..k).map(|i| -r + 2.0 * r * i as f64 / (k - 1) as f64).collect()
        })
        .collect();
    let total = k.pow(dim as u32);
    (0..total)
        .map(|mut idx| {
            let mut x = vec![0.0; dim];
            for a in (0..dim).rev() {
                x[a] = axes[a][idx % k];
                idx /= k;
            }
            x
        })
        .filter(|x| land.inside(x))
        .collect()
}

/// Starts on the rings `|β| = √n` of occupied Fock levels, phases 0 and π/4.
fn fock_radius_starts(land: &Landscape) -> Vec<Vec<f64>> {
    let ring = |n: usize, phase: f64| {
        let r = (n as f64).sqrt();
        [r * phase.cos(), r * phase.sin()]
    };
    let phases = [0.0, FRAC_PI_4];
    let mut out = Vec::new();
    if land.radii.len() == 1 {
        for &n in &land.occupied {
            for &ph in &phases {
                out.push(ring(n, ph).to_vec());
            }
        }
    } else {
        for &(n, m) in &land.occupied_pairs {
            for &pa in &phases {
                for &pb in &phases {
                    let mut x = ring(n, pa).to_vec();
                    x.extend(ring(m, pb));
                    out.push(x);
                }
            }
        }
    }
    out.retain(|x| land.inside(x));
    out
}

fn run_multistart(land: &Landscape, cfg: &OptimizerConfig) -> Result<MaxResult> {
    cfg.validate()?;
    let dim = land.dim();
    let k = cfg.grid_per_axis;
    let spacing = 2.0 * land.radii.iter().cloned().fold(0.0, f64::max) / (k - 1) as f64;

    let grid = lattice(land, k);
    let grid_values: Vec<f64> = grid.par_iter().map(|x| land.log_q(x)).collect();
    let mut grid_order: Vec<usize> = (0..grid.len()).collect();
    grid_order.sort_by(|&a, &b| grid_values[b].total_cmp(&grid_values[a]).then(a.cmp(&b)));
    // In four dimensions only the best k² lattice points seed local searches.
    let keep = if dim == 2 { grid.len() } else { (k * k).min(grid.len()) };
    let mut starts: Vec<Vec<f64>> = grid_order[..keep].iter().map(|&i| grid[i].clone()).collect();
    starts.extend(fock_radius_starts(land));

    let mut rng = StdRng::seed_from_u64(cfg.seed);
    let step = (0.5 * spacing).max(0.05);
    let step_sets: Vec<Vec<f64>> = starts
        .iter()
        .map(|_| {
            (0..dim)
                .map(|_| if cfg.seed == 0 || rng.gen::<bool>() { step } else { -step })
                .collect()
        })
        .collect();

    let objective = |x: &[f64]| land.log_q(x);
    let locals: Vec<Local> = starts
        .par_iter()
        .zip(&step_sets)
        .map(|(x0, steps)| {
            let first = nelder_mead(&objective, x0, steps, cfg.simplex_tol, cfg.max_iters);
            // A restart from the converged vertex guards against premature collapse.
            let small: Vec<f64> = steps.iter().map(|s| s.signum() * 1e-3).collect();
            let second = nelder_mead(&objective, &first.x, &small, cfg.simplex_tol, cfg.max_iters);
            if second.value >= first.value {
                Local { converged: first.converged && second.converged, ..second }
            } else {
                first
            }
        })
        .collect();

    let mut candidates: Vec<(f64, Vec<f64>, bool)> =
        locals.into_iter().map(|l| ((land.q)(&l.x), l.x, l.converged)).collect();
    // The best lattice point is a candidate too, so q_max never falls below it.
    if let Some(&i) = grid_order.first() {
        candidates.push(((land.q)(&grid[i]), grid[i].clone(), false));
    }
    candidates.sort_by(|a, b| better((b.0, &b.1), (a.0, &a.1)));
    let (q_max, x_best, _) = candidates[0].clone();
    // A lattice point can win a tie against a converged local search on a flat
    // maximum; that search still certifies the value.
    let converged = candidates.iter().any(|c| c.2 && q_max - c.0 <= TIE_TOL);
    let top: Vec<f64> = candidates.iter().take(3).map(|c| c.0).collect();
    let spread = top.iter().cloned().fold(f64::MIN, f64::max) - top.iter().cloned().fold(f64::MAX, f64::min);

    let result = MaxResult {
        q_max: q_max.min(q_cap(dim / 2)),
        argmax: PhasePoint::from_coords(&x_best),
        starts_used: starts.len(),
        converged,
        spread,
    };
    if candidates.iter().any(|c| c.2) {
        Ok(result)
    } else {
        Err(Error::NotConverged { best: Box::new(result) })
    }
}

/// `max_β Q(β)` over the disk `|β| ≤ √N + radius_margin`.
pub fn maximize_q(s: &SingleModeState, cfg: &OptimizerConfig) -> Result<MaxResult> {
    run_multistart(&single_landscape(s, cfg.radius_margin), cfg)
}

/// `max_{α,β} Q(α, β)` over `|α| ≤ √N_a + margin`, `|β| ≤ √N_b + margin`.
pub fn maximize_q2(s: &BipartiteState, cfg: &OptimizerConfig) -> Result<MaxResult> {
    run_multistart(&pair_landscape(s, cfg.radius_margin), cfg)
}

pub fn maximize(s: &State, cfg: &OptimizerConfig) -> Result<MaxResult> {
    match s {
        State::Single(s) => maximize_q(s, cfg),
        State::Bipartite(s) => maximize_q2(s, cfg),
    }
}

/// Compass search on `Q` itself: try ± each axis, halve the step when nothing improves.
fn compass_refine<F: Fn(&[f64]) -> f64>(f: &F, x0: &[f64], step0: f64) -> (Vec<f64>, f64) {
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    let mut step = step0;
    while step > 1e-11 {
        let mut improved = false;
        for i in 0..x.len() {
            for dir in [1.0, -1.0] {
                let mut y = x.clone();
                y[i] += dir * step;
                let fy = f(&y);
                if fy > fx {
                    x = y;
                    fx = fy;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (x, fx)
}

/// Exhaustive scan of the lattice `{-L, -L+h, ...}^(2·arity)` followed by one
/// compass-search refinement from the best lattice point.
pub fn brute_force_max(s: &State, half_width: f64, step: f64) -> Result<MaxResult> {
    if !(half_width > 0.0 && step > 0.0 && half_width.is_finite() && step.is_finite()) {
        return Err(Error::Config(format!("half_width = {half_width}, step = {step} must be positive")));
    }
    let per_axis = (2.0 * half_width / step + 1e-9).floor() as usize + 1;
    let evals = (per_axis as f64).powi(2 * s.arity() as i32);
    if evals > BRUTE_FORCE_BUDGET {
        return Err(Error::Budget { evals, limit: BRUTE_FORCE_BUDGET });
    }
    let axis: Vec<f64> = (0..per_axis).map(|i| -half_width + i as f64 * step).collect();
    let plane: Vec<Complex64> =
        axis.iter().flat_map(|&y| axis.iter().map(move |&x| Complex64::new(x, y))).collect();

    let (best_q, best_x) = match s {
        State::Single(st) => {
            let values: Vec<f64> = plane.par_iter().map(|&b| q_single(b, st)).collect();
            let i = argmax_first(&values);
            (values[i], vec![plane[i].re, plane[i].im])
        }
        State::Bipartite(st) => {
            // Separable scan: Q ∝ |u(α)ᵀ C v(β)|², with u, v the Fock bras.
            let c = st.coeffs();
            let bras = |len: usize| -> Vec<Vec<Complex64>> {
                plane
                    .iter()
                    .map(|&z| {
                        let mut v = vec![Complex64::new(0.0, 0.0); len];
                        fock_bra_amplitudes(z, &mut v);
                        v
                    })
                    .collect()
            };
            let ua = bras(c.nrows());
            let vb = bras(c.ncols());
            let cv: Vec<Vec<Complex64>> = vb
                .iter()
                .map(|v| (0..c.nrows()).map(|n| (0..c.ncols()).map(|m| c[(n, m)] * v[m]).sum()).collect())
                .collect();
            let per_alpha: Vec<(f64, usize)> = ua
                .par_iter()
                .map(|u| {
                    let mut best = (f64::NEG_INFINITY, 0);
                    for (j, w) in cv.iter().enumerate() {
                        let amp: Complex64 = u.iter().zip(w).map(|(a, b)| a * b).sum();
                        let v = amp.norm_sqr();
                        if v > best.0 {
                            best = (v, j);
                        }
                    }
                    best
                })
                .collect();
            let i = argmax_first(&per_alpha.iter().map(|p| p.0).collect::<Vec<_>>());
            let j = per_alpha[i].1;
            let q = per_alpha[i].0 * q_cap(2);
            (q, vec![plane[i].re, plane[i].im, plane[j].re, plane[j].im])
        }
    };

    let q = |x: &[f64]| match s {
        State::Single(st) => q_single(Complex64::new(x[0], x[1]), st),
        State::Bipartite(st) => q_pair(Complex64::new(x[0], x[1]), Complex64::new(x[2], x[3]), st),
    };
    let (x, refined) = compass_refine(&q, &best_x, step);
    Ok(MaxResult {
        q_max: refined.max(best_q).min(q_cap(s.arity())),
        argmax: PhasePoint::from_coords(&x),
        starts_used: 1,
        converged: true,
        spread: 0.0,
    })
}

fn argmax_first(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}
