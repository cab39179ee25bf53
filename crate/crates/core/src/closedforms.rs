//! Brownian closed forms, the two integral identities behind them, and an
//! independent transcription of the stable exceedance formulas.

use crate::error::{require_nonnegative, require_positive, Error, Result};
use crate::models::LevyModel;
use crate::quadrature::{integrate_fallible, integrate_nested, truncation_point, Estimate, QuadConfig};
use crate::special::{exp_times_norm_cdf, norm_cdf};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// P(sup_{t<T} (W(t) - c t) > u) for standard Brownian motion.
pub fn brownian_a(c: f64, t: f64, u: f64) -> Result<f64> {
    require_positive("T", t)?;
    require_positive("u", u)?;
    if !c.is_finite() {
        return Err(Error::domain("c must be finite"));
    }
    let sd = t.sqrt();
    let v = norm_cdf(-u / sd - c * sd) + exp_times_norm_cdf(-2.0 * u * c, -u / sd + c * sd);
    Ok(v.min(1.0))
}

/// P(sup_{t<inf} (W(t) - c(t)) > u) for the broken drift (c1 until T, then c2).
pub fn brownian_sup_broken_inf(c1: f64, c2: f64, t: f64, u: f64) -> Result<f64> {
    require_nonnegative("c1", c1)?;
    require_nonnegative("c2", c2)?;
    require_positive("T", t)?;
    require_positive("u", u)?;
    if c2 == 0.0 {
        return Ok(1.0);
    }
    let sd = t.sqrt();
    let a = brownian_a(c1, t, u)?;
    let b1 = exp_times_norm_cdf(-2.0 * c2 * (u + c1 * t - c2 * t), u / sd + (c1 - 2.0 * c2) * sd);
    let v = a + b1 - broken_b2(c1, c2, t, u);
    Ok(v.clamp(0.0, 1.0))
}

/// The double-integral part of B, evaluated through whichever identity
/// applies: the first with `c = 2 c2 - c1 >= 0`, the second with
/// `c = c1 - 2 c2 > 0`. Both reduce to the same exponential-times-Phi term.
fn broken_b2(c1: f64, c2: f64, t: f64, u: f64) -> f64 {
    let sd = t.sqrt();
    let c = 2.0 * c2 - c1;
    if c >= 0.0 {
        exp_times_norm_cdf((c - c1) * u + 0.5 * (c * c - c1 * c1) * t, -u / sd - c * sd)
    } else {
        let c = -c;
        exp_times_norm_cdf(-(c1 + c) * u + 0.5 * (c * c - c1 * c1) * t, -u / sd + c * sd)
    }
}

/// `int_0^T (T-s)^{-3/2} s^{-1/2} exp(-z^2/(2(T-s)) - u^2/(2s)) ds`
fn identity_kernel(z: f64, s: f64, t: f64, u: f64) -> f64 {
    let r = t - s;
    if r <= 0.0 || s <= 0.0 {
        return 0.0;
    }
    (-z * z / (2.0 * r) - u * u / (2.0 * s)).exp() / (r * r.sqrt() * s.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum IdentityVariant {
    /// Weight `e^{-cz}`, equal to Phi(-u/sqrt T - c sqrt T).
    Minus,
    /// Weight `e^{+cz}`, equal to Phi(-u/sqrt T + c sqrt T).
    Plus,
}

/// Both sides of the integral identity:
/// `(e^{-+cu - c^2 T/2} / 2pi) int_0^inf z e^{-+cz} dz int_0^T kernel ds`
/// against `Phi(-u/sqrt T -+ c sqrt T)`.
pub fn brownian_identity_check(c: f64, t: f64, u: f64, variant: IdentityVariant, cfg: &QuadConfig) -> Result<(f64, f64)> {
    require_nonnegative("c", c)?;
    require_positive("T", t)?;
    require_positive("u", u)?;
    let sd = t.sqrt();
    let sign = match variant {
        IdentityVariant::Minus => -1.0,
        IdentityVariant::Plus => 1.0,
    };
    let rhs = norm_cdf(-u / sd + sign * c * sd);
    let log_pref = sign * c * u - 0.5 * c * c * t - (2.0 * PI).ln();
    // Envelope of the outer integrand: z I(z) <= 2 pi sqrt(2 pi)^{-1} T^{-1/2} e^{-(u+z)^2/2T},
    // so the tail past b is bounded by a Gaussian tail.
    let tail = |b: f64| {
        let shift = sign * c * t;
        let lg = sign * c * (-u) + 0.5 * c * c * t;
        2.0 * PI * exp_times_norm_cdf(log_pref + lg, -(u + b - shift) / sd)
    };
    let width = truncation_point(0.0, u + sd, cfg.tail_cutoff_mass, &tail)?;
    let est = integrate_nested(
        |z, inner| (log_pref + sign * c * z).exp() * z * inner,
        |z, s| identity_kernel(z, s, t, u),
        (0.0, width),
        |_| (0.0, t),
        cfg,
    )?;
    Ok((est.value, rhs))
}

/// Finite-horizon broken-drift probability for Brownian motion, `0 < T < S`.
pub fn brownian_sup_broken_finite(c1: f64, c2: f64, t: f64, s: f64, u: f64, cfg: &QuadConfig) -> Result<Estimate> {
    require_nonnegative("c1", c1)?;
    require_nonnegative("c2", c2)?;
    require_positive("T", t)?;
    require_positive("u", u)?;
    if !(s > t) || !s.is_finite() {
        return Err(Error::domain(format!("need 0 < T < S < inf, got T = {t}, S = {s}")));
    }
    let rest = s - t;
    let a = brownian_a(c1, t, u)?;
    let tail_a = |z: f64| brownian_a(c2, rest, z);
    // The Gaussian weight centred at u + c1 T bounds both z-integrals.
    let mean = u + c1 * t;
    let sd = t.sqrt();
    let width = mean.max(0.0) + sd * (2.0 * (1.0 / cfg.tail_cutoff_mass).ln()).sqrt() + 1.0;
    let half = cfg.scaled(0.5);
    let b1 = integrate_fallible(
        |z| Ok(tail_a(z)? * (-(mean - z).powi(2) / (2.0 * t)).exp() / (2.0 * PI * t).sqrt()),
        0.0,
        width,
        &half,
    )?;
    let log_pref = -u * c1 - 0.5 * c1 * c1 * t - (2.0 * PI).ln();
    let b2 = integrate_nested(
        |z, inner| {
            let a = tail_a(z).unwrap_or(f64::NAN);
            (log_pref + c1 * z).exp() * z * a * inner
        },
        |z, s| identity_kernel(z, s, t, u),
        (0.0, width),
        |_| (0.0, t),
        &half,
    )?;
    if !b2.value.is_finite() {
        return Err(Error::NonConvergence { value: b2.value, err_est: b2.err_est });
    }
    let v = a + b1.value - b2.value;
    Ok(Estimate::new(v.clamp(0.0, 1.0), b1.err_est + b2.err_est))
}

/// Stable exceedance probability `A(c, T, u)` (finite `t`) or `A(c, inf, u)`
/// (`t = None`), transcribed directly from the cosine-kernel expressions:
/// the first term integrates the density over `(u, inf)` and the
/// negative-part weight integrates `x^-` against the density, so neither
/// shares code with the supremum module beyond the density itself.
pub fn stable_a(model: &LevyModel, c: f64, t: Option<f64>, u: f64, cfg: &QuadConfig) -> Result<Estimate> {
    let LevyModel::AlphaStable { alpha } = *model else {
        return Err(Error::domain("stable_a needs an alpha-stable model"));
    };
    model.validate()?;
    require_positive("u", u)?;
    let f = |x: f64, s: f64| model.density(x, s);
    match t {
        None => {
            require_positive("c", c)?;
            // c int_0^inf f(u + cs, s) ds with s = tau / (1 - tau); the
            // s^{-alpha} tail becomes (1 - tau)^{alpha - 2} at tau = 1.
            let g = |w: f64| -> Result<f64> {
                let tau = 1.0 - w;
                let s = tau / w;
                Ok(c * f(u + c * s, s)? / (w * w))
            };
            let est = integrate_fallible(g, 0.0, 1.0, &cfg.with_hint(Some(alpha - 2.0)))?;
            Ok(Estimate::new(est.value.clamp(0.0, 1.0), est.err_est))
        }
        Some(t) => {
            require_positive("T", t)?;
            let scale = |s: f64| s.powf(1.0 / alpha);
            // The left tail decays like exp(-(a-1) cos^{1/(a-1)} (|x|/a)^{a/(a-1)});
            // cut where that exponent reaches 40.
            let cosabs = (0.5 * PI * alpha).cos().abs();
            let reach = alpha * (40.0 / ((alpha - 1.0) * cosabs.powf(1.0 / (alpha - 1.0)))).powf((alpha - 1.0) / alpha);
            // First term: int_u^inf f(x + cT, T) dx, with x = u + y/(1-y).
            let first = integrate_fallible(
                |y: f64| {
                    let w = 1.0 - y;
                    Ok(f(u + y / w + c * t, t)? / (w * w))
                },
                0.0,
                1.0,
                &cfg.scaled(0.25).with_hint(Some(alpha - 1.0)),
            )?;
            // E(Z(r) - c r)^- = -int_{-inf}^0 x f(x + c r, r) dx.
            let neg = |r: f64| -> Result<f64> {
                let lo = -c * r - scale(r) * reach;
                let e = integrate_fallible(|x| Ok(-x * f(x + c * r, r)?), lo, 0.0, &cfg.scaled(0.1))?;
                Ok(e.value)
            };
            let second = integrate_fallible(
                |r: f64| {
                    let s = t - r;
                    if s <= 0.0 {
                        return Ok(0.0);
                    }
                    Ok(neg(r)? / r * f(u + c * s, s)?)
                },
                0.0,
                t,
                &cfg.scaled(0.5).with_hint(Some(1.0 / alpha - 1.0)),
            )?;
            let v = first.value + second.value;
            Ok(Estimate::new(v.clamp(0.0, 1.0), first.err_est + second.err_est))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a_reference_value() {
        let v = brownian_a(1.0, 1.0, 1.0).unwrap();
        assert!((v - (0.022_750_131_948_179_2 + (-2.0f64).exp() * 0.5)).abs() < 1e-15);
        assert!((v - 0.090_418).abs() < 1e-6);
    }

    #[test]
    fn a_zero_drift_is_reflection() {
        let v = brownian_a(0.0, 2.0, 1.0).unwrap();
        assert!((v - 2.0 * norm_cdf(-1.0 / 2f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn a_long_horizon_limit() {
        let v = brownian_a(1.0, 1e4, 1.0).unwrap();
        assert!((v - (-2.0f64).exp()).abs() < 1e-4);
    }

    #[test]
    fn broken_inf_special_cases() {
        let v = brownian_sup_broken_inf(1.0, 1.0, 0.7, 1.0).unwrap();
        assert!((v - (-2.0f64).exp()).abs() < 1e-14);
        assert_eq!(brownian_sup_broken_inf(1.0, 0.0, 1.0, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn b2_branches_agree_at_the_switch() {
        let (c1, t, u) = (1.2, 0.8, 0.6);
        let lo = broken_b2(c1, 0.5 * c1 - 1e-12, t, u);
        let hi = broken_b2(c1, 0.5 * c1 + 1e-12, t, u);
        assert!((lo - hi).abs() < 1e-10);
    }

    #[test]
    fn identity_reference_points() {
        let cfg = QuadConfig::default();
        let (l, r) = brownian_identity_check(1.0, 1.0, 1.0, IdentityVariant::Minus, &cfg).unwrap();
        assert!((r - 0.022_750_131_948_179_2).abs() < 1e-15);
        assert!((l - r).abs() < 1e-7, "{l} {r}");
        let (l, r) = brownian_identity_check(1.0, 2.0, 0.5, IdentityVariant::Plus, &cfg).unwrap();
        assert!((r - norm_cdf(-0.5 / 2f64.sqrt() + 2f64.sqrt())).abs() < 1e-15);
        assert!((l - r).abs() < 1e-7, "{l} {r}");
    }
}
