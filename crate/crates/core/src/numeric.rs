//! Log-domain arithmetic shared by every moment computation.
//!
//! All sums of the form `Σ P(x)·ψ(x)^ρ` are evaluated as
//! `log₂ Σ 2^{log₂P(x) + ρ·log₂ψ(x)}` so that `ψ = 2^L` with large `L`
//! never overflows.

/// Tolerance used when snapping a real to the integer it is meant to equal
/// before taking a ceiling (e.g. `log₂ 4`).
pub const SNAP_TOLERANCE: f64 = 1e-12;

/// `log₂ Σ 2^{t}` for finite terms. Returns `-inf` on empty input.
pub fn log2_sum_exp2(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = terms.iter().map(|&t| (t - max).exp2()).sum();
    max + sum.log2()
}

/// `log₂ Σ P(x)·2^{ρ·v(x)}` where `v = log₂ψ`.
pub fn log2_weighted_moment(probs: &[f64], log2_values: &[f64], rho: f64) -> f64 {
    debug_assert_eq!(probs.len(), log2_values.len());
    let terms: Vec<f64> = probs
        .iter()
        .zip(log2_values)
        .map(|(&p, &v)| p.log2() + rho * v)
        .collect();
    log2_sum_exp2(&terms)
}

/// `(1/ρ) log₂ E_P[2^{ρ·v}]`, or `E_P[v]` when `ρ = 0`.
pub fn normalized_log2_moment(probs: &[f64], log2_values: &[f64], rho: f64) -> f64 {
    if rho == 0.0 {
        probs.iter().zip(log2_values).map(|(&p, &v)| p * v).sum()
    } else {
        log2_weighted_moment(probs, log2_values, rho) / rho
    }
}

/// Normalizes base-2 log weights into probabilities.
pub fn normalize_log2(log2_weights: &[f64]) -> Vec<f64> {
    let total = log2_sum_exp2(log2_weights);
    log2_weights.iter().map(|&w| (w - total).exp2()).collect()
}

/// Ceiling that treats values within [`SNAP_TOLERANCE`] of an integer as
/// that integer.
pub fn snapped_ceil(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= SNAP_TOLERANCE * r.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

/// Harmonic number `Σ_{i=1..m} 1/i`.
pub fn harmonic(m: usize) -> f64 {
    (1..=m).rev().map(|i| 1.0 / i as f64).sum()
}

/// Formats `x` with 10 significant digits, trimming trailing zeros.
pub fn format_sig10(x: f64) -> String {
    format_significant(x, 10)
}

pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..15).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        return format!("{mantissa}e{exp}");
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{:.*}", decimals, x)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
