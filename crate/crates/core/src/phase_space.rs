//! Coherent-state overlaps, Husimi and Wigner functions, the Gaussian W→Q
//! convolution and fidelity-based distances between pure states.

use std::f64::consts::{FRAC_1_PI, PI};
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numfmt;
use crate::special::{laguerre_series, ln_factorial, SignedLog};
use crate::states::{Amplitude, BipartiteState, SingleModeState, State};

/// One coherent amplitude (single mode) or a pair `(α, β)` (two modes).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhasePoint {
    Single(Amplitude),
    Pair(Amplitude, Amplitude),
}

impl PhasePoint {
    pub fn arity(&self) -> usize {
        match self {
            PhasePoint::Single(_) => 1,
            PhasePoint::Pair(..) => 2,
        }
    }

    pub fn amps(&self) -> Vec<Amplitude> {
        match *self {
            PhasePoint::Single(b) => vec![b],
            PhasePoint::Pair(a, b) => vec![a, b],
        }
    }

    /// Real coordinates `(Re, Im, ...)` in mode order.
    pub fn to_coords(&self) -> Vec<f64> {
        self.amps().iter().flat_map(|z| [z.re, z.im]).collect()
    }

    pub fn from_coords(x: &[f64]) -> Self {
        match x.len() {
            2 => PhasePoint::Single(Complex64::new(x[0], x[1])),
            4 => PhasePoint::Pair(Complex64::new(x[0], x[1]), Complex64::new(x[2], x[3])),
            n => panic!("phase point needs 2 or 4 coordinates, got {n}"),
        }
    }
}

impl Serialize for PhasePoint {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let amps = self.amps();
        let mut seq = serializer.serialize_seq(Some(amps.len()))?;
        for z in amps {
            seq.serialize_element(&[z.re, z.im])?;
        }
        seq.end()
    }
}

/// Fills `out[n] = ⟨β|n⟩ = e^{-|β|²/2} (β*)^n / √(n!)` for `n = 0..out.len()`.
///
/// Magnitudes are assembled in log space so large `n` or `|β|` cannot overflow.
pub fn fock_bra_amplitudes(beta: Amplitude, out: &mut [Complex64]) {
    let r = beta.norm();
    let half_r2 = 0.5 * r * r;
    if r == 0.0 {
        out.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        if let Some(first) = out.first_mut() {
            *first = Complex64::new(1.0, 0.0);
        }
        return;
    }
    let ln_r = r.ln();
    let unit = beta.conj() / r;
    let mut phase = Complex64::new(1.0, 0.0);
    for (n, z) in out.iter_mut().enumerate() {
        let ln_mag = n as f64 * ln_r - 0.5 * ln_factorial(n) - half_r2;
        *z = phase * ln_mag.exp();
        phase *= unit;
    }
}

/// `⟨β|ψ⟩` for a single-mode state.
///
/// Defined for any finite `β`; beyond `|β| ≈ 38` the Gaussian prefactor underflows
/// and the result is exactly zero only when every term does.
pub fn coherent_overlap(beta: Amplitude, s: &SingleModeState) -> Amplitude {
    let mut bra = vec![Complex64::new(0.0, 0.0); s.coeffs().len()];
    fock_bra_amplitudes(beta, &mut bra);
    bra.iter().zip(s.coeffs()).map(|(b, c)| b * c).sum()
}

/// `⟨α, β|ψ⟩_ab = Σ_{nm} ⟨α|n⟩ ⟨β|m⟩ c_{nm}`.
pub fn coherent_overlap2(alpha: Amplitude, beta: Amplitude, s: &BipartiteState) -> Amplitude {
    let c = s.coeffs();
    let mut ua = vec![Complex64::new(0.0, 0.0); c.nrows()];
    let mut vb = vec![Complex64::new(0.0, 0.0); c.ncols()];
    fock_bra_amplitudes(alpha, &mut ua);
    fock_bra_amplitudes(beta, &mut vb);
    let mut total = Complex64::new(0.0, 0.0);
    for (n, u) in ua.iter().enumerate() {
        let row: Complex64 = vb.iter().enumerate().map(|(m, v)| v * c[(n, m)]).sum();
        total += u * row;
    }
    total
}

/// `Q(β) = π⁻¹ |⟨β|ψ⟩|²` without the arity check.
pub fn q_single(beta: Amplitude, s: &SingleModeState) -> f64 {
    FRAC_1_PI * coherent_overlap(beta, s).norm_sqr()
}

/// `Q(α, β) = π⁻² |⟨α, β|ψ⟩|²` without the arity check.
pub fn q_pair(alpha: Amplitude, beta: Amplitude, s: &BipartiteState) -> f64 {
    FRAC_1_PI * FRAC_1_PI * coherent_overlap2(alpha, beta, s).norm_sqr()
}

/// Single-mode Husimi function; bounded by `π⁻¹`.
pub fn husimi_q(p: &PhasePoint, s: &SingleModeState) -> Result<f64> {
    match *p {
        PhasePoint::Single(beta) => Ok(q_single(beta, s)),
        _ => Err(Error::ArityMismatch { expected: 1, got: p.arity() }),
    }
}

/// Two-mode Husimi function; bounded by `π⁻²`.
pub fn husimi_q2(p: &PhasePoint, s: &BipartiteState) -> Result<f64> {
    match *p {
        PhasePoint::Pair(alpha, beta) => Ok(q_pair(alpha, beta, s)),
        _ => Err(Error::ArityMismatch { expected: 2, got: p.arity() }),
    }
}

/// Husimi function of either arity.
pub fn husimi(p: &PhasePoint, s: &State) -> Result<f64> {
    match s {
        State::Single(s) => husimi_q(p, s),
        State::Bipartite(s) => husimi_q2(p, s),
    }
}

/// Wigner function normalized so that `∫ W d²α = 1` and `W_vac(α) = (2/π) e^{-2|α|²}`.
///
/// Expands `ρ = Σ c_m c_n* |m⟩⟨n|` and uses, for `m = n + k`,
/// `W_{|m⟩⟨n|}(α) = (2/π) (-1)^n √(n!/m!) (2α*)^k e^{-2|α|²} L_n^{(k)}(4|α|²)`.
pub fn wigner(alpha: Amplitude, s: &SingleModeState) -> f64 {
    let c = s.coeffs();
    let n_max = c.len() - 1;
    let r = alpha.norm();
    let r2 = r * r;
    let x = 4.0 * r2;
    let ln_2r = (2.0 * r).ln();
    let unit = if r > 0.0 { alpha.conj() / r } else { Complex64::new(1.0, 0.0) };

    let mut lag = vec![SignedLog::from_f64(0.0); n_max + 1];
    let mut phase = Complex64::new(1.0, 0.0);
    let mut total = 0.0;
    for k in 0..=n_max {
        if k > 0 && r == 0.0 {
            break;
        }
        let len = n_max - k + 1;
        laguerre_series(k, x, &mut lag[..len]);
        let shift = if k == 0 { 0.0 } else { k as f64 * ln_2r };
        let mut acc = Complex64::new(0.0, 0.0);
        for n in 0..len {
            let m = n + k;
            let weight = c[m] * c[n].conj();
            let l = lag[n];
            if l.sign == 0 || weight == Complex64::new(0.0, 0.0) {
                continue;
            }
            let ln_mag = 0.5 * (ln_factorial(n) - ln_factorial(m)) + shift - 2.0 * r2 + l.ln_abs;
            let sign = if n % 2 == 0 { l.sign } else { -l.sign };
            acc += weight * (f64::from(sign) * ln_mag.exp());
        }
        let contrib = (acc * phase).re;
        total += if k == 0 { contrib } else { 2.0 * contrib };
        phase *= unit;
    }
    2.0 * FRAC_1_PI * total
}

/// Minimum kernel half-width around the evaluation point: `e^{-2·3.5²} < 1e-10`.
pub const MIN_KERNEL_HALF_WIDTH: f64 = 3.5;
/// Coarsest lattice step accepted for the W→Q quadrature.
pub const MAX_QUADRATURE_STEP: f64 = 0.1;
pub const MAX_POINTS_PER_AXIS: f64 = 2048.0;

/// Square lattice `center + (i h, j h)` with `|i h|, |j h| ≤ L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub half_width: f64,
    pub step: f64,
    pub center: Amplitude,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { half_width: 4.0, step: 0.05, center: Complex64::new(0.0, 0.0) }
    }
}

impl GridSpec {
    /// Default quadrature lattice centred on `beta`.
    pub fn centered(beta: Amplitude) -> Self {
        Self { center: beta, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return Err(Error::Quadrature(format!("half-width {} must be positive", self.half_width)));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::Quadrature(format!("step {} must be positive", self.step)));
        }
        if 2.0 * self.half_width / self.step > MAX_POINTS_PER_AXIS {
            return Err(Error::Quadrature(format!(
                "2L/h = {} exceeds {MAX_POINTS_PER_AXIS} points per axis",
                2.0 * self.half_width / self.step
            )));
        }
        Ok(())
    }

    /// Lattice points on each side of the centre.
    pub fn half_count(&self) -> usize {
        (self.half_width / self.step + 1e-9).floor() as usize
    }

    pub fn points_per_axis(&self) -> usize {
        2 * self.half_count() + 1
    }

    /// Offsets `-n h, ..., n h` along one axis.
    pub fn axis(&self) -> Vec<f64> {
        let n = self.half_count() as i64;
        (-n..=n).map(|i| i as f64 * self.step).collect()
    }

    /// Lattice points in row-major order (imaginary part outer, real part inner).
    pub fn points(&self) -> Vec<Amplitude> {
        let axis = self.axis();
        axis.iter()
            .flat_map(|&y| axis.iter().map(move |&x| (x, y)))
            .map(|(x, y)| self.center + Complex64::new(x, y))
            .collect()
    }
}

fn trapezoid_weights(len: usize) -> Vec<f64> {
    let mut w = vec![1.0; len];
    if len > 1 {
        w[0] = 0.5;
        w[len - 1] = 0.5;
    }
    w
}

fn check_quadrature(g: &GridSpec) -> Result<()> {
    g.validate()?;
    if g.step > MAX_QUADRATURE_STEP {
        return Err(Error::Quadrature(format!("step {} is coarser than {MAX_QUADRATURE_STEP}", g.step)));
    }
    Ok(())
}

/// Evaluates `W` on a `rows × cols` lattice; row `j`, column `i` sits at
/// `origin + (i h, j h)`.
fn wigner_lattice(s: &SingleModeState, origin: Amplitude, h: f64, cols: usize, rows: usize) -> Vec<Vec<f64>> {
    (0..rows)
        .into_par_iter()
        .map(|j| {
            (0..cols)
                .map(|i| wigner(origin + Complex64::new(i as f64 * h, j as f64 * h), s))
                .collect()
        })
        .collect()
}

/// `Q(β) = (2/π) ∫ d²α W(α) e^{-2|α-β|²}` by the trapezoidal rule on `g`.
pub fn q_from_w(beta: Amplitude, s: &SingleModeState, g: &GridSpec) -> Result<f64> {
    check_quadrature(g)?;
    let d = beta - g.center;
    let reach = g.half_width - d.re.abs().max(d.im.abs());
    if reach < MIN_KERNEL_HALF_WIDTH {
        return Err(Error::Quadrature(format!(
            "grid reaches only {reach:.3} beyond beta; at least {MIN_KERNEL_HALF_WIDTH} is required"
        )));
    }
    let axis = g.axis();
    let len = axis.len();
    let origin = g.center + Complex64::new(axis[0], axis[0]);
    let w = wigner_lattice(s, origin, g.step, len, len);
    let tw = trapezoid_weights(len);
    let kx: Vec<f64> = axis.iter().zip(&tw).map(|(&a, t)| t * (-2.0 * (a - d.re).powi(2)).exp()).collect();
    let ky: Vec<f64> = axis.iter().zip(&tw).map(|(&a, t)| t * (-2.0 * (a - d.im).powi(2)).exp()).collect();
    let sum: f64 = w
        .iter()
        .zip(&ky)
        .map(|(row, ky)| ky * row.iter().zip(&kx).map(|(v, k)| v * k).sum::<f64>())
        .sum();
    Ok(2.0 * FRAC_1_PI * g.step * g.step * sum)
}

/// `q_from_w` at every point of `out`, sharing one Wigner lattice of step
/// `quad.step` that extends `quad.half_width` beyond the output grid.
///
/// `out.step` must be an integer multiple of `quad.step`; `quad.center` is ignored.
pub fn q_from_w_grid(s: &SingleModeState, out: &GridSpec, quad: &GridSpec) -> Result<Vec<f64>> {
    out.validate()?;
    check_quadrature(quad)?;
    if quad.half_width < MIN_KERNEL_HALF_WIDTH {
        return Err(Error::Quadrature(format!(
            "quadrature half-width {} is below {MIN_KERNEL_HALF_WIDTH}",
            quad.half_width
        )));
    }
    let ratio = out.step / quad.step;
    let stride = ratio.round() as usize;
    if stride == 0 || (ratio - stride as f64).abs() > 1e-9 * ratio {
        return Err(Error::Quadrature(format!(
            "output step {} is not a multiple of the quadrature step {}",
            out.step, quad.step
        )));
    }
    let h = quad.step;
    let kn = quad.half_count();
    let on = out.half_count();
    let lat_half = on * stride + kn;
    let lat_len = 2 * lat_half + 1;
    let origin = out.center - Complex64::new(lat_half as f64 * h, lat_half as f64 * h);
    let w = wigner_lattice(s, origin, h, lat_len, lat_len);

    let kernel: Vec<f64> = {
        let tw = trapezoid_weights(2 * kn + 1);
        (0..=2 * kn).map(|i| tw[i] * (-2.0 * ((i as f64 - kn as f64) * h).powi(2)).exp()).collect()
    };
    let out_len = 2 * on + 1;
    // Columns first: partial[row][i0] = Σ_d K_d W[row][i0 * stride + d].
    let partial: Vec<Vec<f64>> = w
        .par_iter()
        .map(|row| {
            (0..out_len)
                .map(|i0| {
                    let start = i0 * stride;
                    kernel.iter().zip(&row[start..start + kernel.len()]).map(|(k, v)| k * v).sum()
                })
                .collect()
        })
        .collect();
    let scale = 2.0 * FRAC_1_PI * h * h;
    let mut values = Vec::with_capacity(out_len * out_len);
    for j0 in 0..out_len {
        let start = j0 * stride;
        for i0 in 0..out_len {
            let sum: f64 = kernel.iter().enumerate().map(|(d, k)| k * partial[start + d][i0]).sum();
            values.push(scale * sum);
        }
    }
    Ok(values)
}

/// Inner product `⟨a|b⟩`, zero-padding the smaller truncation.
pub fn inner_product(a: &State, b: &State) -> Result<Complex64> {
    match (a, b) {
        (State::Single(a), State::Single(b)) => {
            Ok(a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| x.conj() * y).sum())
        }
        (State::Bipartite(a), State::Bipartite(b)) => {
            let (ca, cb) = (a.coeffs(), b.coeffs());
            let rows = ca.nrows().min(cb.nrows());
            let cols = ca.ncols().min(cb.ncols());
            let mut acc = Complex64::new(0.0, 0.0);
            for n in 0..rows {
                for m in 0..cols {
                    acc += ca[(n, m)].conj() * cb[(n, m)];
                }
            }
            Ok(acc)
        }
        _ => Err(Error::ArityMismatch { expected: a.arity(), got: b.arity() }),
    }
}

/// `F = |⟨a|b⟩|²`, clamped into `[0, 1]` against rounding.
pub fn fidelity(a: &State, b: &State) -> Result<f64> {
    Ok(inner_product(a, b)?.norm_sqr().clamp(0.0, 1.0))
}

/// Coefficients of both states on a common zero-padded basis.
fn padded(a: &State, b: &State) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let zero = Complex64::new(0.0, 0.0);
    match (a, b) {
        (State::Single(a), State::Single(b)) => {
            let len = a.coeffs().len().max(b.coeffs().len());
            let pad = |c: &[Complex64]| c.iter().copied().chain(std::iter::repeat(zero)).take(len).collect();
            Ok((pad(a.coeffs()), pad(b.coeffs())))
        }
        (State::Bipartite(a), State::Bipartite(b)) => {
            let rows = a.coeffs().nrows().max(b.coeffs().nrows());
            let cols = a.coeffs().ncols().max(b.coeffs().ncols());
            let pad = |c: &nalgebra::DMatrix<Complex64>| {
                let mut v = Vec::with_capacity(rows * cols);
                for n in 0..rows {
                    for m in 0..cols {
                        v.push(if n < c.nrows() && m < c.ncols() { c[(n, m)] } else { zero });
                    }
                }
                v
            };
            Ok((pad(a.coeffs()), pad(b.coeffs())))
        }
        _ => Err(Error::ArityMismatch { expected: a.arity(), got: b.arity() }),
    }
}

/// `1 − F`, computed as the squared norm of the part of `b` orthogonal to `a` so
/// that it vanishes exactly (rather than at `√ε`) for equal states.
fn infidelity(a: &State, b: &State) -> Result<f64> {
    let (va, vb) = padded(a, b)?;
    let overlap: Complex64 = va.iter().zip(&vb).map(|(x, y)| x.conj() * y).sum();
    let perp: f64 = va.iter().zip(&vb).map(|(x, y)| (y - overlap * x).norm_sqr()).sum();
    Ok(perp.clamp(0.0, 1.0))
}

/// Bures-Uhlmann distance `√(2 − 2√F)`.
pub fn distance_bu(a: &State, b: &State) -> Result<f64> {
    let (f, g) = (fidelity(a, b)?, infidelity(a, b)?);
    // 1 − √F = (1 − F)/(1 + √F)
    Ok((2.0 * g / (1.0 + f.sqrt())).sqrt())
}

/// Hilbert-Schmidt distance `√(2 − 2F)`.
pub fn distance_hs(a: &State, b: &State) -> Result<f64> {
    Ok((2.0 * infidelity(a, b)?).sqrt())
}

/// Upper bound of the Husimi function for a state of the given arity.
pub fn q_cap(arity: usize) -> f64 {
    PI.powi(-(arity as i32))
}

/// Writes a `re,im,value` CSV with 17 significant digits per number.
pub fn write_grid_csv<W: Write>(mut w: W, points: &[Amplitude], values: &[f64]) -> std::io::Result<()> {
    writeln!(w, "re,im,value")?;
    for (p, v) in points.iter().zip(values) {
        writeln!(w, "{},{},{}", numfmt::csv(p.re), numfmt::csv(p.im), numfmt::csv(*v))?;
    }
    Ok(())
}
