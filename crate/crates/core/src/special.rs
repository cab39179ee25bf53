//! Normal distribution helpers shared by the Brownian formulas.

use std::f64::consts::{PI, SQRT_2};

/// 1/sqrt(2 pi)
pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal distribution function, accurate in both tails.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Natural log of the standard normal distribution function.
///
/// Falls back to the asymptotic expansion of the Mills ratio once
/// `erfc` would underflow.
pub fn ln_norm_cdf(x: f64) -> f64 {
    if x > -30.0 {
        return norm_cdf(x).ln();
    }
    let x2 = x * x;
    let inv = 1.0 / x2;
    // 1 - 1/x^2 + 3/x^4 - 15/x^6 + 105/x^8
    let series = 1.0 - inv * (1.0 - 3.0 * inv * (1.0 - 5.0 * inv * (1.0 - 7.0 * inv)));
    -0.5 * x2 - (-x * (2.0 * PI).sqrt()).ln() + series.ln()
}

/// `exp(log_factor) * Phi(x)` without intermediate overflow or underflow.
pub fn exp_times_norm_cdf(log_factor: f64, x: f64) -> f64 {
    (log_factor + ln_norm_cdf(x)).exp()
}
