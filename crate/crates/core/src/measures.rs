//! Scalar measures: nonclassical degree, entanglement entropy, Mandel factor, and
//! the closed-form reference values the optimizer is checked against.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::optimize::{maximize_q, maximize_q2, MaxResult, OptimizerConfig};
use crate::phase_space::PhasePoint;
use crate::special::ln_factorial;
use crate::states::{BipartiteState, SingleModeState, State, StateLabel, MAX_MODE_TRUNCATION, MAX_SINGLE_TRUNCATION};

/// Schmidt coefficients below this are dropped (`0 ln 0 := 0`).
pub const SCHMIDT_CUTOFF: f64 = 1e-12;
/// Mean photon numbers below this leave the Mandel factor undefined.
pub const MIN_MEAN_PHOTONS: f64 = 1e-12;

/// Field order is the JSON key order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureReport {
    pub degree: f64,
    pub q_max: f64,
    pub argmax: PhasePoint,
    /// Entanglement entropy in nats; `None` for a single mode.
    pub entropy: Option<f64>,
    /// `None` when `⟨n⟩` vanishes.
    pub mandel_q: Option<f64>,
    pub converged: bool,
    pub closed_form_ref: Option<f64>,
}

impl MeasureReport {
    fn from_max(max: &MaxResult, arity: usize, entropy: Option<f64>, mandel_q: Option<f64>) -> Self {
        Self {
            degree: degree_from_q(max.q_max, arity),
            q_max: max.q_max,
            argmax: max.argmax,
            entropy,
            mandel_q,
            converged: max.converged,
            closed_form_ref: None,
        }
    }
}

/// `D = 1 − π^arity · q_max`.
pub fn degree_from_q(q_max: f64, arity: usize) -> f64 {
    (1.0 - PI.powi(arity as i32) * q_max).max(0.0)
}

fn report_or_unconverged(
    max: Result<MaxResult>,
    arity: usize,
    entropy: Option<f64>,
    mandel: Option<f64>,
) -> Result<MeasureReport> {
    match max {
        Ok(m) => Ok(MeasureReport::from_max(&m, arity, entropy, mandel)),
        Err(Error::NotConverged { best }) => Err(Error::DegreeNotConverged {
            report: Box::new(MeasureReport::from_max(&best, arity, entropy, mandel)),
        }),
        Err(e) => Err(e),
    }
}

/// Single-mode degree `1 − π max_β Q(β)`.
pub fn nonclassical_degree(s: &SingleModeState, cfg: &OptimizerConfig) -> Result<MeasureReport> {
    let mandel = mandel_q_single(s).ok();
    report_or_unconverged(maximize_q(s, cfg), 1, None, mandel)
}

/// Two-mode degree `1 − π² max_{α,β} Q(α, β)`.
pub fn nonclassical_degree2(s: &BipartiteState, cfg: &OptimizerConfig) -> Result<MeasureReport> {
    let mandel = mandel_q_bipartite(s).ok();
    report_or_unconverged(maximize_q2(s, cfg), 2, Some(entanglement_entropy(s)), mandel)
}

pub fn measure(s: &State, cfg: &OptimizerConfig) -> Result<MeasureReport> {
    match s {
        State::Single(s) => nonclassical_degree(s, cfg),
        State::Bipartite(s) => nonclassical_degree2(s, cfg),
    }
}

fn check_unit(what: &str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} = {x} must lie in [0, 1]")))
    }
}

/// Degree of a product state from the degrees of its factors: `D₁ + D₂ − D₁D₂`.
pub fn compose_product_degree(d1: f64, d2: f64) -> Result<f64> {
    check_unit("d1", d1)?;
    check_unit("d2", d2)?;
    Ok(d1 + d2 - d1 * d2)
}

/// Von Neumann entropy (nats) of either reduced state, from the Schmidt coefficients.
pub fn entanglement_entropy(s: &BipartiteState) -> f64 {
    let svd = s.coeffs().clone().svd(false, false);
    svd.singular_values
        .iter()
        .filter(|&&l| l > SCHMIDT_CUTOFF)
        .map(|&l| {
            let p = l * l;
            -p * p.ln()
        })
        .sum::<f64>()
        .max(0.0)
}

fn mandel_from_moments(mean: f64, second: f64) -> Result<f64> {
    if mean <= MIN_MEAN_PHOTONS {
        return Err(Error::Undefined(format!("Mandel factor needs <n> > {MIN_MEAN_PHOTONS}, got {mean}")));
    }
    Ok(second / mean - mean - 1.0)
}

pub fn mandel_q_single(s: &SingleModeState) -> Result<f64> {
    let (mut mean, mut second) = (0.0, 0.0);
    for (n, p) in s.populations().enumerate() {
        let n = n as f64;
        mean += n * p;
        second += n * n * p;
    }
    mandel_from_moments(mean, second)
}

/// Mandel factor for the total photon number `n̂_a + n̂_b`.
pub fn mandel_q_bipartite(s: &BipartiteState) -> Result<f64> {
    let c = s.coeffs();
    let (mut mean, mut second) = (0.0, 0.0);
    for n in 0..c.nrows() {
        for m in 0..c.ncols() {
            let p = c[(n, m)].norm_sqr();
            let total = (n + m) as f64;
            mean += total * p;
            second += total * total * p;
        }
    }
    mandel_from_moments(mean, second)
}

pub fn mandel_q(s: &State) -> Result<f64> {
    match s {
        State::Single(s) => mandel_q_single(s),
        State::Bipartite(s) => mandel_q_bipartite(s),
    }
}

/// States with a known closed-form nonclassical degree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedForm {
    /// `|n⟩`: `1 − nⁿe⁻ⁿ/n!`.
    Fock(usize),
    /// `|n⟩ ⊗ |n⟩`: `1 − n²ⁿe⁻²ⁿ/(n!)²`.
    FockPair(usize),
    /// `|Ψ⟩±(ξ)`: `1 − e⁻¹` for every ξ.
    Psi(f64),
    /// `|Φ⟩±(ξ)`, piecewise in ξ.
    Phi(f64),
}

/// `ln(nⁿ e⁻ⁿ / n!)`, with `0⁰ = 1`.
fn ln_fock_peak(n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        let nf = n as f64;
        nf * nf.ln() - nf - ln_factorial(n)
    }
}

/// First branch of the `|Φ⟩` formula, `1 − (1−ξ) exp[−2(1 − √(ξ/(1−ξ)))]`, valid for ξ ≤ ½.
pub fn phi_low_branch(xi: f64) -> f64 {
    1.0 - (1.0 - xi) * (-2.0 * (1.0 - (xi / (1.0 - xi)).sqrt())).exp()
}

/// Second branch of the `|Φ⟩` formula, `1 − ξ`, valid for ξ ≥ ½.
pub fn phi_high_branch(xi: f64) -> f64 {
    1.0 - xi
}

pub fn closed_form_degree(family: ClosedForm) -> Result<f64> {
    match family {
        ClosedForm::Fock(n) => {
            if n > MAX_SINGLE_TRUNCATION {
                return Err(Error::Domain(format!("n = {n} exceeds {MAX_SINGLE_TRUNCATION}")));
            }
            Ok(1.0 - ln_fock_peak(n).exp())
        }
        ClosedForm::FockPair(n) => {
            if n > MAX_MODE_TRUNCATION {
                return Err(Error::Domain(format!("n = {n} exceeds {MAX_MODE_TRUNCATION}")));
            }
            Ok(1.0 - (2.0 * ln_fock_peak(n)).exp())
        }
        ClosedForm::Psi(xi) => {
            check_unit("xi", xi)?;
            Ok(1.0 - (-1f64).exp())
        }
        ClosedForm::Phi(xi) => {
            check_unit("xi", xi)?;
            Ok(if xi <= 0.5 { phi_low_branch(xi) } else { phi_high_branch(xi) })
        }
    }
}

/// Closed-form degree for a parsed state spec, when one is known.
pub fn closed_form_for(label: &StateLabel) -> Option<f64> {
    match *label {
        StateLabel::Fock(n) => closed_form_degree(ClosedForm::Fock(n)).ok(),
        StateLabel::Coherent(_) => Some(0.0),
        StateLabel::Psi(_, xi) => closed_form_degree(ClosedForm::Psi(xi)).ok(),
        StateLabel::Phi(_, xi) => closed_form_degree(ClosedForm::Phi(xi)).ok(),
        StateLabel::File(_) => None,
    }
}

/// Binary entropy `−[ξ ln ξ + (1−ξ) ln(1−ξ)]`, the entanglement of both families.
pub fn family_entropy(xi: f64) -> Result<f64> {
    check_unit("xi", xi)?;
    let h = |p: f64| if p > 0.0 { -p * p.ln() } else { 0.0 };
    Ok(h(xi) + h(1.0 - xi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{make_coherent, make_fock, make_phi_family, make_product, make_psi_family, random_bipartite, Sign};
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const E_INV: f64 = 0.36787944117144233;

    #[test]
    fn closed_forms() {
        assert_eq!(closed_form_degree(ClosedForm::Fock(0)).unwrap(), 0.0);
        assert_abs_diff_eq!(closed_form_degree(ClosedForm::Fock(1)).unwrap(), 0.6321206, epsilon = 1e-7);
        // 1 − 256 e⁻⁴ / 24
        let d4 = 1.0 - 256.0 * (-4f64).exp() / 24.0;
        assert_abs_diff_eq!(closed_form_degree(ClosedForm::Fock(4)).unwrap(), d4, epsilon = 1e-14);
        assert_abs_diff_eq!(d4, 0.8046, epsilon = 1e-4);
        assert_abs_diff_eq!(closed_form_degree(ClosedForm::FockPair(2)).unwrap(), 1.0 - 16.0 * (-4f64).exp() / 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(closed_form_degree(ClosedForm::FockPair(2)).unwrap(), 0.9267, epsilon = 1e-4);
        assert_abs_diff_eq!(closed_form_degree(ClosedForm::Phi(0.0)).unwrap(), 0.8646647, epsilon = 1e-7);
        assert_abs_diff_eq!(phi_low_branch(0.5), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(phi_high_branch(0.5), 0.5, epsilon = 1e-15);
        assert_eq!(closed_form_degree(ClosedForm::Phi(1.0)).unwrap(), 0.0);
        assert_abs_diff_eq!(closed_form_degree(ClosedForm::Psi(0.37)).unwrap(), 0.6321206, epsilon = 1e-7);
        assert!(closed_form_degree(ClosedForm::Phi(1.5)).is_err());
        assert!(closed_form_degree(ClosedForm::Fock(300)).is_err());

        // Fock degrees grow toward 1.
        let ds: Vec<f64> = (0..40).map(|n| closed_form_degree(ClosedForm::Fock(n)).unwrap()).collect();
        assert!(ds.windows(2).all(|w| w[1] > w[0]));
        assert!(ds[39] < 1.0);
    }

    #[test]
    fn composition_law() {
        assert_eq!(compose_product_degree(0.0, 0.3).unwrap(), 0.3);
        assert_eq!(compose_product_degree(1.0, 0.3).unwrap(), 1.0);
        assert_eq!(compose_product_degree(0.2, 0.7).unwrap(), compose_product_degree(0.7, 0.2).unwrap());
        assert!(compose_product_degree(1.2, 0.1).is_err());
        assert!(compose_product_degree(0.1, f64::NAN).is_err());

        let d1 = 1.0 - E_INV;
        let expect = 2.0 * d1 - d1 * d1;
        let p = make_product(&make_fock(1).unwrap(), &make_fock(1).unwrap()).unwrap();
        let measured = nonclassical_degree2(&p, &OptimizerConfig::default()).unwrap().degree;
        assert_abs_diff_eq!(compose_product_degree(d1, d1).unwrap(), expect, epsilon = 1e-15);
        assert_abs_diff_eq!(measured, expect, epsilon = 1e-9);
    }

    #[test]
    fn degrees_from_optimizer() {
        let cfg = OptimizerConfig::default();
        let coh = make_coherent(Complex64::new(0.7, 0.2), 40).unwrap();
        assert!(nonclassical_degree(&coh, &cfg).unwrap().degree <= 1e-6);
        let r1 = nonclassical_degree(&make_fock(1).unwrap(), &cfg).unwrap();
        assert_abs_diff_eq!(r1.degree, 1.0 - E_INV, epsilon = 1e-9);
        assert_eq!(r1.entropy, None);
        assert_abs_diff_eq!(r1.mandel_q.unwrap(), -1.0, epsilon = 1e-15);
        let d3 = nonclassical_degree(&make_fock(3).unwrap(), &cfg).unwrap().degree;
        let d4 = nonclassical_degree(&make_fock(4).unwrap(), &cfg).unwrap().degree;
        assert!(d4 > d3);
        assert_abs_diff_eq!(d4, closed_form_degree(ClosedForm::Fock(4)).unwrap(), epsilon = 1e-9);

        let vac = make_product(&make_fock(0).unwrap(), &make_fock(0).unwrap()).unwrap();
        let r = nonclassical_degree2(&vac, &cfg).unwrap();
        assert_eq!(r.degree, 0.0);
        assert_eq!(r.mandel_q, None);
        for xi in [0.0, 0.3, 1.0] {
            let r = nonclassical_degree2(&make_psi_family(Sign::Minus, xi).unwrap(), &cfg).unwrap();
            assert_abs_diff_eq!(r.degree, 1.0 - E_INV, epsilon = 1e-9);
        }
        let nn = make_product(&make_fock(2).unwrap(), &make_fock(2).unwrap()).unwrap();
        let r = nonclassical_degree2(&nn, &cfg).unwrap();
        assert_abs_diff_eq!(r.degree, closed_form_degree(ClosedForm::FockPair(2)).unwrap(), epsilon = 1e-9);
        assert_abs_diff_eq!(r.degree, 1.0 - PI * PI * r.q_max, epsilon = 1e-12);
    }

    #[test]
    fn unconverged_degree_keeps_best_so_far() {
        let cfg = OptimizerConfig { max_iters: 1, simplex_tol: 1e-300, ..Default::default() };
        match nonclassical_degree(&make_fock(1).unwrap(), &cfg) {
            Err(Error::DegreeNotConverged { report }) => {
                assert!(!report.converged);
                assert!((0.0..=1.0).contains(&report.degree));
            }
            other => panic!("expected DegreeNotConverged, got {other:?}"),
        }
    }

    #[test]
    fn entropy_values() {
        let p = make_product(&make_coherent(Complex64::new(0.5, 0.1), 30).unwrap(), &make_fock(2).unwrap()).unwrap();
        assert_abs_diff_eq!(entanglement_entropy(&p), 0.0, epsilon = 1e-12);
        for xi in [0.0, 0.1, 0.3, 0.5, 0.8, 1.0] {
            let e = family_entropy(xi).unwrap();
            for s in [Sign::Plus, Sign::Minus] {
                assert_abs_diff_eq!(entanglement_entropy(&make_psi_family(s, xi).unwrap()), e, epsilon = 1e-12);
                assert_abs_diff_eq!(entanglement_entropy(&make_phi_family(s, xi).unwrap()), e, epsilon = 1e-12);
            }
        }
        assert_abs_diff_eq!(family_entropy(0.5).unwrap(), std::f64::consts::LN_2, epsilon = 1e-15);
        assert_abs_diff_eq!(family_entropy(0.3).unwrap(), 0.610864, epsilon = 1e-6);
    }

    #[test]
    fn mandel_values() {
        for (n, m) in [(1, 0), (0, 3), (2, 2), (5, 1), (4, 0)] {
            let p = make_product(&make_fock(n).unwrap(), &make_fock(m).unwrap()).unwrap();
            assert_abs_diff_eq!(mandel_q_bipartite(&p).unwrap(), -1.0, epsilon = 1e-12);
        }
        for xi in [0.0, 0.25, 0.5, 1.0] {
            assert_abs_diff_eq!(mandel_q_bipartite(&make_psi_family(Sign::Plus, xi).unwrap()).unwrap(), -1.0, epsilon = 1e-12);
        }
        for xi in [0.1, 0.5, 0.9] {
            let q = mandel_q_bipartite(&make_phi_family(Sign::Minus, xi).unwrap()).unwrap();
            assert_abs_diff_eq!(q, 2.0 * xi - 1.0, epsilon = 1e-12);
        }
        assert!(matches!(mandel_q_single(&make_fock(0).unwrap()), Err(Error::Undefined(_))));
        assert!(matches!(mandel_q_bipartite(&make_phi_family(Sign::Plus, 1.0).unwrap()), Err(Error::Undefined(_))));
        // A coherent state is Poissonian up to truncation.
        let coh = make_coherent(Complex64::new(1.2, -0.4), 60).unwrap();
        assert_abs_diff_eq!(mandel_q_single(&coh).unwrap(), 0.0, epsilon = 1e-9);
    }

    proptest! {
        #[test]
        fn entropy_bounded_and_swap_symmetric(ta in 0usize..5, tb in 0usize..5, seed in any::<u64>()) {
            let s = random_bipartite(&mut ChaCha8Rng::seed_from_u64(seed), ta, tb).unwrap();
            let e = entanglement_entropy(&s);
            prop_assert!(e >= 0.0);
            prop_assert!(e <= ((ta.min(tb) + 1) as f64).ln() + 1e-12);
            prop_assert!((e - entanglement_entropy(&s.swap_modes())).abs() <= 1e-12);
            if let Ok(q) = mandel_q_bipartite(&s) {
                prop_assert!(q >= -1.0 - 1e-12);
            }
        }
    }
}
