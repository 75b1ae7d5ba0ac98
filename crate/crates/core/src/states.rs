//! Pure states of one and two field modes in a truncated Fock basis.
//!
//! A [`SingleModeState`] stores amplitudes `c_n` of `|n⟩` for `n = 0..=N`; a
//! [`BipartiteState`] stores `c_{nm}` of `|n⟩_a ⊗ |m⟩_b` as a matrix whose rows are
//! indexed by the mode-a photon number. Both are immutable once built and always
//! normalized to within [`NORM_TOL`].

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::special::ln_factorial;

/// Complex amplitude: coherent-state labels α, β and Fock coefficients.
pub type Amplitude = Complex64;

pub const MAX_SINGLE_TRUNCATION: usize = 256;
pub const MAX_MODE_TRUNCATION: usize = 64;
pub const MAX_COHERENT_MODULUS: f64 = 8.0;
pub const NORM_TOL: f64 = 1e-9;
/// Largest discarded weight accepted when truncating a coherent expansion.
pub const COHERENT_TAIL_TOL: f64 = 1e-12;
/// Files whose squared norm is off by more than this are rejected instead of rescaled.
pub const FILE_RENORM_TOL: f64 = 1e-6;

fn check_finite(coeffs: &[Complex64]) -> Result<()> {
    match coeffs.iter().position(|c| !c.re.is_finite() || !c.im.is_finite()) {
        Some(i) => Err(Error::NonFinite(i)),
        None => Ok(()),
    }
}

fn norm_sqr(coeffs: &[Complex64]) -> f64 {
    coeffs.iter().map(|c| c.norm_sqr()).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingleModeState {
    coeffs: Vec<Complex64>,
    tail_weight: f64,
}

impl SingleModeState {
    /// Wraps an already-normalized coefficient vector.
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        Self::validate_len(coeffs.len())?;
        check_finite(&coeffs)?;
        let ns = norm_sqr(&coeffs);
        if (ns - 1.0).abs() > NORM_TOL {
            return Err(Error::Normalization(ns));
        }
        Ok(Self { coeffs, tail_weight: 0.0 })
    }

    /// Rescales an arbitrary nonzero coefficient vector to unit norm.
    pub fn normalized(mut coeffs: Vec<Complex64>) -> Result<Self> {
        Self::validate_len(coeffs.len())?;
        check_finite(&coeffs)?;
        let ns = norm_sqr(&coeffs);
        if ns <= f64::MIN_POSITIVE {
            return Err(Error::Normalization(ns));
        }
        let inv = ns.sqrt().recip();
        coeffs.iter_mut().for_each(|c| *c *= inv);
        Ok(Self { coeffs, tail_weight: 0.0 })
    }

    fn validate_len(len: usize) -> Result<()> {
        if len == 0 {
            return Err(Error::Domain("a state needs at least one Fock amplitude".into()));
        }
        if len > MAX_SINGLE_TRUNCATION + 1 {
            return Err(Error::Bounds {
                what: "truncation",
                value: (len - 1) as f64,
                max: MAX_SINGLE_TRUNCATION as f64,
            });
        }
        Ok(())
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Highest stored photon number `N`.
    pub fn truncation(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Weight discarded by truncation (nonzero only for coherent expansions).
    pub fn tail_weight(&self) -> f64 {
        self.tail_weight
    }

    /// Photon-number distribution `|c_n|^2`.
    pub fn populations(&self) -> impl Iterator<Item = f64> + '_ {
        self.coeffs.iter().map(|c| c.norm_sqr())
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.coeffs)
    }

    pub fn with_global_phase(&self, theta: f64) -> Self {
        let ph = Complex64::from_polar(1.0, theta);
        Self {
            coeffs: self.coeffs.iter().map(|c| c * ph).collect(),
            tail_weight: self.tail_weight,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteState {
    coeffs: DMatrix<Complex64>,
}

impl BipartiteState {
    pub fn new(coeffs: DMatrix<Complex64>) -> Result<Self> {
        Self::validate_shape(&coeffs)?;
        check_finite(coeffs.as_slice())?;
        let ns = norm_sqr(coeffs.as_slice());
        if (ns - 1.0).abs() > NORM_TOL {
            return Err(Error::Normalization(ns));
        }
        Ok(Self { coeffs })
    }

    pub fn normalized(mut coeffs: DMatrix<Complex64>) -> Result<Self> {
        Self::validate_shape(&coeffs)?;
        check_finite(coeffs.as_slice())?;
        let ns = norm_sqr(coeffs.as_slice());
        if ns <= f64::MIN_POSITIVE {
            return Err(Error::Normalization(ns));
        }
        coeffs /= Complex64::from(ns.sqrt());
        Ok(Self { coeffs })
    }

    fn validate_shape(m: &DMatrix<Complex64>) -> Result<()> {
        if m.nrows() == 0 || m.ncols() == 0 {
            return Err(Error::Domain("a bipartite state needs a non-empty coefficient matrix".into()));
        }
        for (what, len) in [("mode-a truncation", m.nrows()), ("mode-b truncation", m.ncols())] {
            if len > MAX_MODE_TRUNCATION + 1 {
                return Err(Error::Bounds {
                    what,
                    value: (len - 1) as f64,
                    max: MAX_MODE_TRUNCATION as f64,
                });
            }
        }
        Ok(())
    }

    /// Coefficient matrix; entry `(n, m)` multiplies `|n⟩_a ⊗ |m⟩_b`.
    pub fn coeffs(&self) -> &DMatrix<Complex64> {
        &self.coeffs
    }

    pub fn trunc_a(&self) -> usize {
        self.coeffs.nrows() - 1
    }

    pub fn trunc_b(&self) -> usize {
        self.coeffs.ncols() - 1
    }

    pub fn get(&self, n: usize, m: usize) -> Complex64 {
        if n < self.coeffs.nrows() && m < self.coeffs.ncols() {
            self.coeffs[(n, m)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(self.coeffs.as_slice())
    }

    pub fn with_global_phase(&self, theta: f64) -> Self {
        let ph = Complex64::from_polar(1.0, theta);
        Self { coeffs: self.coeffs.map(|c| c * ph) }
    }

    /// Exchanges the roles of modes a and b.
    pub fn swap_modes(&self) -> Self {
        Self { coeffs: self.coeffs.transpose() }
    }
}

/// A pure state of either arity.
#[derive(Debug, Clone, PartialEq)]
pub enum State {
    Single(SingleModeState),
    Bipartite(BipartiteState),
}

impl State {
    /// Number of field modes (1 or 2).
    pub fn arity(&self) -> usize {
        match self {
            State::Single(_) => 1,
            State::Bipartite(_) => 2,
        }
    }

    pub fn with_global_phase(&self, theta: f64) -> Self {
        match self {
            State::Single(s) => State::Single(s.with_global_phase(theta)),
            State::Bipartite(s) => State::Bipartite(s.with_global_phase(theta)),
        }
    }

    /// Serializes to the JSON state-file form.
    pub fn to_json(&self) -> String {
        let pair = |c: &Complex64| Value::from(vec![c.re, c.im]);
        let (kind, coeffs) = match self {
            State::Single(s) => (StateKind::Single, Value::from(s.coeffs().iter().map(pair).collect::<Vec<_>>())),
            State::Bipartite(s) => {
                let m = s.coeffs();
                let rows = (0..m.nrows())
                    .map(|n| Value::from((0..m.ncols()).map(|k| pair(&m[(n, k)])).collect::<Vec<_>>()))
                    .collect::<Vec<_>>();
                (StateKind::Bipartite, Value::from(rows))
            }
        };
        serde_json::to_string(&StateFile { kind, coeffs }).expect("state file serialization is infallible")
    }

    /// Parses the JSON state-file form, renormalizing small norm drift.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: StateFile = serde_json::from_str(text)?;
        match file.kind {
            StateKind::Single => {
                let coeffs: Vec<[f64; 2]> = serde_json::from_value(file.coeffs)?;
                let coeffs: Vec<Complex64> = coeffs.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
                check_norm_drift(norm_sqr(&coeffs))?;
                Ok(State::Single(SingleModeState::normalized(coeffs)?))
            }
            StateKind::Bipartite => {
                let rows: Vec<Vec<[f64; 2]>> = serde_json::from_value(file.coeffs)?;
                let ncols = rows.first().map_or(0, Vec::len);
                if let Some(bad) = rows.iter().position(|r| r.len() != ncols) {
                    return Err(Error::Domain(format!(
                        "row {bad} has {} entries, expected {ncols}",
                        rows[bad].len()
                    )));
                }
                let m = DMatrix::from_fn(rows.len(), ncols, |n, k| Complex64::new(rows[n][k][0], rows[n][k][1]));
                check_norm_drift(norm_sqr(m.as_slice()))?;
                Ok(State::Bipartite(BipartiteState::normalized(m)?))
            }
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

fn check_norm_drift(ns: f64) -> Result<()> {
    if ns.is_finite() && (ns - 1.0).abs() <= FILE_RENORM_TOL {
        Ok(())
    } else {
        Err(Error::Normalization(ns))
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum StateKind {
    Single,
    Bipartite,
}

#[derive(Serialize, Deserialize)]
struct StateFile {
    kind: StateKind,
    coeffs: Value,
}

/// Relative sign of a two-term superposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

impl FromStr for Sign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "+" | "plus" => Ok(Sign::Plus),
            "-" | "minus" => Ok(Sign::Minus),
            _ => Err(Error::Parse { pos: 0, msg: format!("expected '+' or '-', found {s:?}") }),
        }
    }
}

pub fn make_fock(n: usize) -> Result<SingleModeState> {
    if n > MAX_SINGLE_TRUNCATION {
        return Err(Error::Bounds { what: "photon number", value: n as f64, max: MAX_SINGLE_TRUNCATION as f64 });
    }
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n + 1];
    coeffs[n] = Complex64::new(1.0, 0.0);
    SingleModeState::new(coeffs)
}

/// `ln` of the Poisson weight `|⟨n|α⟩|^2 = e^{-r^2} r^{2n} / n!`.
fn ln_poisson(r: f64, n: usize) -> f64 {
    if n == 0 {
        -r * r
    } else if r == 0.0 {
        f64::NEG_INFINITY
    } else {
        -r * r + 2.0 * n as f64 * r.ln() - ln_factorial(n)
    }
}

/// Weight of the coherent expansion beyond `N`, for every `N` up to `max_n`.
///
/// `tails[N] = Σ_{n>N} |⟨n|α⟩|^2`, summed from the far end so small tails keep full
/// relative precision.
fn coherent_tails(r: f64, max_n: usize) -> Vec<f64> {
    // The Poisson mass beyond r^2 + 40r + 200 is far below double precision.
    let far = ((r * r + 40.0 * r + 200.0).ceil() as usize).max(max_n + 1);
    let mut tails = vec![0.0; far + 1];
    let mut acc = 0.0;
    for n in (1..=far).rev() {
        acc += ln_poisson(r, n).exp();
        tails[n - 1] = acc;
    }
    tails.truncate(max_n + 1);
    tails
}

/// Smallest truncation whose discarded coherent weight is below [`COHERENT_TAIL_TOL`].
pub fn required_coherent_truncation(alpha: Amplitude) -> usize {
    let tails = coherent_tails(alpha.norm(), 4 * MAX_SINGLE_TRUNCATION);
    tails.iter().position(|&t| t < COHERENT_TAIL_TOL).unwrap_or(tails.len())
}

/// Default truncation: `ceil(|α|² + 6|α| + 10)`, raised to the required truncation
/// where that rule of thumb leaves too much tail (`|α| ≳ 3.5`), capped at
/// [`MAX_SINGLE_TRUNCATION`].
pub fn default_coherent_truncation(alpha: Amplitude) -> usize {
    let r = alpha.norm();
    let rule = (r * r + 6.0 * r + 10.0).ceil() as usize;
    rule.max(required_coherent_truncation(alpha)).min(MAX_SINGLE_TRUNCATION)
}

/// Truncated coherent state `|α⟩`, renormalized after truncation.
pub fn make_coherent(alpha: Amplitude, truncation: usize) -> Result<SingleModeState> {
    check_finite(&[alpha])?;
    let r = alpha.norm();
    if r > MAX_COHERENT_MODULUS {
        return Err(Error::Bounds { what: "|alpha|", value: r, max: MAX_COHERENT_MODULUS });
    }
    if truncation > MAX_SINGLE_TRUNCATION {
        return Err(Error::Bounds { what: "truncation", value: truncation as f64, max: MAX_SINGLE_TRUNCATION as f64 });
    }
    let tails = coherent_tails(r, truncation);
    let tail = tails[truncation];
    if tail >= COHERENT_TAIL_TOL {
        return Err(Error::Truncation { required: required_coherent_truncation(alpha), given: truncation });
    }
    let unit = if r > 0.0 { alpha / r } else { Complex64::new(1.0, 0.0) };
    let mut phase = Complex64::new(1.0, 0.0);
    let mut coeffs = Vec::with_capacity(truncation + 1);
    for n in 0..=truncation {
        coeffs.push(phase * (0.5 * ln_poisson(r, n)).exp());
        phase *= unit;
    }
    let mut state = SingleModeState::normalized(coeffs)?;
    state.tail_weight = tail;
    Ok(state)
}

fn check_xi(xi: f64) -> Result<()> {
    if (0.0..=1.0).contains(&xi) {
        Ok(())
    } else {
        Err(Error::Domain(format!("xi = {xi} must lie in [0, 1]")))
    }
}

fn two_by_two(entries: [(usize, usize, f64); 2]) -> Result<BipartiteState> {
    let mut m = DMatrix::from_element(2, 2, Complex64::new(0.0, 0.0));
    for (n, k, v) in entries {
        m[(n, k)] = Complex64::new(v, 0.0);
    }
    BipartiteState::new(m)
}

/// `√ξ |0,1⟩ ± √(1−ξ) |1,0⟩`.
pub fn make_psi_family(sign: Sign, xi: f64) -> Result<BipartiteState> {
    check_xi(xi)?;
    two_by_two([(0, 1, xi.sqrt()), (1, 0, sign.factor() * (1.0 - xi).sqrt())])
}

/// `√ξ |0,0⟩ ± √(1−ξ) |1,1⟩`.
pub fn make_phi_family(sign: Sign, xi: f64) -> Result<BipartiteState> {
    check_xi(xi)?;
    two_by_two([(0, 0, xi.sqrt()), (1, 1, sign.factor() * (1.0 - xi).sqrt())])
}

/// `|a⟩ ⊗ |b⟩`.
pub fn make_product(a: &SingleModeState, b: &SingleModeState) -> Result<BipartiteState> {
    let (ca, cb) = (a.coeffs(), b.coeffs());
    let m = DMatrix::from_fn(ca.len(), cb.len(), |n, k| ca[n] * cb[k]);
    BipartiteState::new(m)
}

/// Random state with i.i.d. complex Gaussian amplitudes, normalized.
pub fn random_single<R: Rng + ?Sized>(rng: &mut R, truncation: usize) -> Result<SingleModeState> {
    let coeffs = (0..=truncation)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    SingleModeState::normalized(coeffs)
}

pub fn random_bipartite<R: Rng + ?Sized>(rng: &mut R, trunc_a: usize, trunc_b: usize) -> Result<BipartiteState> {
    let m = DMatrix::from_fn(trunc_a + 1, trunc_b + 1, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    BipartiteState::normalized(m)
}

/// What a state-spec string named, kept alongside the constructed state so that
/// callers can look up closed-form references.
#[derive(Debug, Clone, PartialEq)]
pub enum StateLabel {
    Fock(usize),
    Coherent(Amplitude),
    Psi(Sign, f64),
    Phi(Sign, f64),
    File(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedState {
    pub state: State,
    pub label: StateLabel,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Truncation for `coh:` specs; defaults to [`default_coherent_truncation`].
    pub coherent_truncation: Option<usize>,
}

/// Parses a state spec (`fock:n`, `coh:re,im`, `psi:±:xi`, `phi:±:xi`, `file:PATH`).
pub fn parse_state(spec: &str) -> Result<State> {
    Ok(parse_state_with(spec, &ParseOptions::default())?.state)
}

pub fn parse_state_with(spec: &str, opts: &ParseOptions) -> Result<ParsedState> {
    let colon = spec.find(':').ok_or_else(|| Error::Parse {
        pos: spec.len(),
        msg: "expected ':' after the state kind".into(),
    })?;
    let (kind, body) = (&spec[..colon], &spec[colon + 1..]);
    let body_pos = colon + 1;
    match kind {
        "fock" => {
            let n = parse_uint(body, body_pos)?;
            Ok(ParsedState { state: State::Single(make_fock(n)?), label: StateLabel::Fock(n) })
        }
        "coh" => {
            let comma = body.find(',').ok_or_else(|| Error::Parse {
                pos: body_pos + body.len(),
                msg: "expected 're,im'".into(),
            })?;
            let re = parse_real(&body[..comma], body_pos)?;
            let im = parse_real(&body[comma + 1..], body_pos + comma + 1)?;
            let alpha = Complex64::new(re, im);
            let trunc = opts.coherent_truncation.unwrap_or_else(|| default_coherent_truncation(alpha));
            Ok(ParsedState { state: State::Single(make_coherent(alpha, trunc)?), label: StateLabel::Coherent(alpha) })
        }
        "psi" | "phi" => {
            let sign = match body.get(..1) {
                Some("+") => Sign::Plus,
                Some("-") => Sign::Minus,
                _ => return Err(Error::Parse { pos: body_pos, msg: "expected '+' or '-'".into() }),
            };
            if body.get(1..2) != Some(":") {
                return Err(Error::Parse { pos: body_pos + 1, msg: "expected ':' after the sign".into() });
            }
            let xi = parse_real(&body[2..], body_pos + 2)?;
            let (state, label) = if kind == "psi" {
                (make_psi_family(sign, xi)?, StateLabel::Psi(sign, xi))
            } else {
                (make_phi_family(sign, xi)?, StateLabel::Phi(sign, xi))
            };
            Ok(ParsedState { state: State::Bipartite(state), label })
        }
        "file" => {
            if body.is_empty() {
                return Err(Error::Parse { pos: body_pos, msg: "expected a file path".into() });
            }
            Ok(ParsedState { state: State::load(body)?, label: StateLabel::File(body.to_string()) })
        }
        _ => Err(Error::Parse {
            pos: 0,
            msg: format!("unknown state kind {kind:?} (expected fock, coh, psi, phi or file)"),
        }),
    }
}

fn parse_uint(s: &str, pos: usize) -> Result<usize> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::Parse { pos, msg: format!("expected a non-negative integer, found {s:?}") });
    }
    s.parse().map_err(|_| Error::Parse { pos, msg: format!("integer {s:?} is too large") })
}

fn parse_real(s: &str, pos: usize) -> Result<f64> {
    match s.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse { pos, msg: format!("expected a finite real number, found {s:?}") }),
    }
}
