//! Locale-independent decimal formatting with a fixed number of significant digits.

/// Formats `x` with `digits` significant digits.
///
/// Plain positional notation is used for decimal exponents in `-5..digits`,
/// scientific notation otherwise. Non-finite values print as `NaN`, `inf`, `-inf`.
pub fn sig(x: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return format!("{:.*}", digits - 1, 0.0);
    }
    let exp = x.abs().log10().floor() as i64;
    if (-5..digits as i64).contains(&exp) {
        let decimals = (digits as i64 - 1 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{:.*e}", digits - 1, x)
    }
}

/// 17 significant digits: enough to round-trip any `f64`.
pub fn csv(x: f64) -> String {
    sig(x, 17)
}

/// 9 significant digits for human-readable tables.
pub fn table(x: f64) -> String {
    sig(x, 9)
}
