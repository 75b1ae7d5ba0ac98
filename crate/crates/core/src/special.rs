//! Log-factorials and generalized Laguerre polynomials in overflow-safe form.

use std::sync::OnceLock;

/// Largest `n` for which `ln n!` is tabulated.
pub const LN_FACTORIAL_MAX: usize = 1200;

fn table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(LN_FACTORIAL_MAX + 1);
        let mut acc = 0.0_f64;
        t.push(0.0);
        for k in 1..=LN_FACTORIAL_MAX {
            acc += (k as f64).ln();
            t.push(acc);
        }
        t
    })
}

/// `ln n!` from a precomputed table.
///
/// Panics if `n > LN_FACTORIAL_MAX`; every caller is bounded well below that.
#[inline]
pub fn ln_factorial(n: usize) -> f64 {
    table()[n]
}

/// A real number stored as `sign * exp(ln_abs)`. `sign == 0` encodes zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLog {
    pub sign: i8,
    pub ln_abs: f64,
}

impl SignedLog {
    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self { sign: 0, ln_abs: f64::NEG_INFINITY }
        } else {
            Self { sign: if x > 0.0 { 1 } else { -1 }, ln_abs: x.abs().ln() }
        }
    }

    pub fn to_f64(self) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            f64::from(self.sign) * self.ln_abs.exp()
        }
    }
}

const RESCALE_AT: f64 = 1e200;

/// Fills `out[n] = L_n^{(k)}(x)` for `n = 0..out.len()` in sign/log-magnitude form.
///
/// Uses the three-term upward recurrence
/// `(n+1) L_{n+1} = (2n+1+k-x) L_n - (n+k) L_{n-1}`, rescaling the running pair
/// whenever it grows past `1e200` so large arguments never overflow.
pub fn laguerre_series(k: usize, x: f64, out: &mut [SignedLog]) {
    if out.is_empty() {
        return;
    }
    let kf = k as f64;
    let mut scale = 0.0_f64;
    let mut prev = 0.0_f64;
    let mut cur = 1.0_f64;
    out[0] = SignedLog::from_f64(1.0);
    for n in 1..out.len() {
        let nf = (n - 1) as f64;
        let next = ((2.0 * nf + 1.0 + kf - x) * cur - (nf + kf) * prev) / (nf + 1.0);
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE_AT {
            cur /= RESCALE_AT;
            prev /= RESCALE_AT;
            scale += RESCALE_AT.ln();
        }
        let mut v = SignedLog::from_f64(cur);
        v.ln_abs += scale;
        out[n] = v;
    }
}

/// Single value of `L_n^{(k)}(x)`.
pub fn laguerre(n: usize, k: usize, x: f64) -> f64 {
    let mut buf = vec![SignedLog::from_f64(0.0); n + 1];
    laguerre_series(k, x, &mut buf);
    buf[n].to_f64()
}

#[cfg(test)]
mod tests {
    use super::*;

    // Explicit sum L_n^{(k)}(x) = sum_j (-1)^j C(n+k, n-j) x^j / j!.
    fn laguerre_explicit(n: usize, k: usize, x: f64) -> f64 {
        (0..=n)
            .map(|j| {
                let binom = (ln_factorial(n + k) - ln_factorial(n - j) - ln_factorial(k + j)).exp();
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * binom * x.powi(j as i32) / ln_factorial(j).exp()
            })
            .sum()
    }

    #[test]
    fn ln_factorial_small_values() {
        assert_eq!(ln_factorial(0), 0.0);
        assert_eq!(ln_factorial(1), 0.0);
        assert!((ln_factorial(5) - 120f64.ln()).abs() < 1e-13);
        assert!((ln_factorial(10) - 3_628_800f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn laguerre_matches_explicit_sum() {
        for n in 0..8 {
            for k in 0..5 {
                for &x in &[0.0, 0.3, 1.0, 2.5, 7.0] {
                    let a = laguerre(n, k, x);
                    let b = laguerre_explicit(n, k, x);
                    assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()), "n={n} k={k} x={x}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn laguerre_large_argument_does_not_overflow() {
        let mut buf = vec![SignedLog::from_f64(0.0); 257];
        laguerre_series(3, 1600.0, &mut buf);
        assert!(buf.iter().all(|v| v.ln_abs.is_finite() || v.sign == 0));
        // x >> n: the explicit sum is dominated by its last term, so cancellation is mild.
        let exact = laguerre_explicit(30, 3, 1600.0);
        assert!((buf[30].to_f64() - exact).abs() <= 1e-10 * exact.abs());
    }
}
