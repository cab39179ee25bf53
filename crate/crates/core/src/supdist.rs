//! Supremum distributions for linear and broken drifts.
//!
//! `sp` functions take a spectrally positive process `X` and the drift is
//! subtracted, i.e. they describe `sup (X(t) - c(t))`. `sn` functions do the
//! same for a spectrally negative `Y`; among the supported families only
//! Brownian motion qualifies.

use crate::error::{require_nonnegative, require_positive, Error, Result};
use crate::models::{BrokenDrift, LevyModel};
use crate::quadrature::{
    integrate, integrate_fallible, integrate_partitioned_fallible, truncation_point, Estimate, QuadConfig,
};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use std::cell::Cell;

/// Time horizon of the supremum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Horizon {
    Finite { s: f64 },
    Infinite,
}

impl Horizon {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Horizon::Infinite)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Horizon::Finite { s } => require_positive("S", s),
            Horizon::Infinite => Ok(()),
        }
    }

    /// Checks `S > T` for a finite horizon paired with a drift break at `T`.
    pub fn validate_against(&self, drift: &BrokenDrift) -> Result<()> {
        self.validate()?;
        if let Horizon::Finite { s } = *self {
            if !(s > drift.t_break) {
                return Err(Error::domain(format!("horizon S = {s} must exceed the break time T = {}", drift.t_break)));
            }
        }
        Ok(())
    }
}

/// Broken-drift exceedance probability split into exceedance before the
/// break (`a_term`) and first exceedance after it (`b_term`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupResult {
    pub probability: f64,
    pub a_term: f64,
    pub b_term: f64,
    pub err_est: f64,
}

impl SupResult {
    fn assemble(a: Estimate, b: Estimate) -> Self {
        SupResult {
            probability: (a.value + b.value).clamp(0.0, 1.0),
            a_term: a.value,
            b_term: b.value,
            err_est: a.err_est + b.err_est,
        }
    }
}

fn require_sp(model: &LevyModel) -> Result<()> {
    model.validate()?;
    if model.spectral_sign().allows_positive() {
        Ok(())
    } else {
        Err(Error::domain("model is not spectrally positive"))
    }
}

fn require_sn(model: &LevyModel) -> Result<()> {
    model.validate()?;
    if model.spectral_sign().allows_negative() {
        Ok(())
    } else {
        Err(Error::domain(format!("{} model is spectrally positive; the spectrally negative formulas need a process without upward jumps", model.name())))
    }
}

fn clamp_unit(e: Estimate) -> Estimate {
    Estimate::new(e.value.clamp(0.0, 1.0), e.err_est)
}

/// Sorted breakpoints `lo < p_1 < ... < hi` built from candidate interior points.
fn breakpoints(lo: f64, hi: f64, candidates: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut pts: Vec<f64> = candidates
        .into_iter()
        .filter(|p| p.is_finite() && *p > lo + 1e-12 * (hi - lo) && *p < hi - 1e-12 * (hi - lo))
        .collect();
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (hi - lo));
    pts
}

/// Geometric ladder `scale * 10^k` for k in -3..=2, the places where a
/// first-passage type kernel switches on.
fn ladder(scale: f64) -> impl Iterator<Item = f64> {
    [1e-3, 1e-2, 0.1, 0.3, 1.0, 3.0, 10.0, 100.0].into_iter().map(move |m| m * scale)
}

/// Time scale on which the marginal at time r reaches distance `x`.
fn passage_scale(model: &LevyModel, x: f64) -> f64 {
    match *model {
        LevyModel::AlphaStable { alpha } => x.abs().powf(alpha),
        _ => x * x,
    }
}

/// P(sup_{t<T} (X(t) - c t) > u) for spectrally positive X.
pub fn sup_linear_sp(model: &LevyModel, c: f64, u: f64, t: f64, cfg: &QuadConfig) -> Result<Estimate> {
    require_sp(model)?;
    require_nonnegative("c", c)?;
    require_positive("u", u)?;
    require_positive("T", t)?;
    cfg.validate()?;
    let first = model.survival(u + c * t, t)?;
    // Integrate in r = T - s; the weight E(X(r) - cr)^- / r blows up like
    // r^{-1/2} (Brownian) or r^{1/alpha - 1} (stable) and stays bounded for gamma.
    let hint = match *model {
        LevyModel::BrownianStandard => Some(-0.5),
        LevyModel::AlphaStable { alpha } => Some(1.0 / alpha - 1.0),
        LevyModel::GammaProcess { .. } => None,
    };
    let integrand = |r: f64| -> Result<f64> {
        let s = t - r;
        if s <= 0.0 {
            return Ok(0.0);
        }
        Ok(model.neg_part_mean(c, r)? / r * model.density(u + c * s, s)?)
    };
    let est = integrate_fallible(integrand, 0.0, t, &cfg.with_hint(hint))?;
    Ok(clamp_unit(Estimate::new(first + est.value, est.err_est)))
}

/// P(sup_{t<T} (Y(t) - c t) > u) for spectrally negative Y, via Kendall's identity.
pub fn sup_linear_sn(model: &LevyModel, c: f64, u: f64, t: f64, cfg: &QuadConfig) -> Result<Estimate> {
    require_sn(model)?;
    require_nonnegative("c", c)?;
    require_positive("u", u)?;
    require_positive("T", t)?;
    cfg.validate()?;
    let pts = breakpoints(0.0, t, ladder(passage_scale(model, u)));
    let est = integrate_partitioned_fallible(|s| Ok(u * model.density(u + c * s, s)? / s), &pts, cfg)?;
    Ok(clamp_unit(est))
}

/// P(sup_{t<inf} (X(t) - c t) > u) for spectrally positive X with negative net drift.
pub fn sup_linear_sp_inf(model: &LevyModel, c: f64, u: f64, cfg: &QuadConfig) -> Result<Estimate> {
    require_sp(model)?;
    require_positive("c", c)?;
    require_positive("u", u)?;
    cfg.validate()?;
    let slope = model.laplace_exponent_slope0(c);
    if slope <= 0.0 {
        return Err(Error::UnsupportedRegime(format!(
            "infinite-horizon supremum is 1: net drift c - E X(1) = {slope} is not positive"
        )));
    }
    match *model {
        LevyModel::BrownianStandard => Ok(Estimate::new((-2.0 * c * u).exp(), 0.0)),
        _ => Ok(clamp_unit(drifted_density_integral(model, c, u, cfg)?.scale(slope))),
    }
}

trait Scale {
    fn scale(self, k: f64) -> Self;
}

impl Scale for Estimate {
    fn scale(self, k: f64) -> Self {
        Estimate::new(self.value * k, self.err_est * k.abs())
    }
}

/// `int_0^inf f(u + c s, s) ds`; times `phi'(0)` this is the
/// infinite-horizon exceedance probability.
pub(crate) fn drifted_density_integral(model: &LevyModel, c: f64, u: f64, cfg: &QuadConfig) -> Result<Estimate> {
    let g = |s: f64| model.density(u + c * s, s);
    match *model {
        LevyModel::AlphaStable { alpha } => {
            // Beyond L the standardized abscissa exceeds 20 and the density
            // decays like s^{-alpha}; s = L w^{-1/(alpha-1)} flattens that tail.
            let l = (20.0 / c).powf(alpha / (alpha - 1.0)).max(10.0 * (u / c).max(1.0));
            let mut cands: Vec<f64> = ladder(passage_scale(model, u)).collect();
            let mut p = 1.0;
            while p < l {
                cands.push(p);
                p *= 10.0;
            }
            let head = integrate_partitioned_fallible(g, &breakpoints(0.0, l, cands), &cfg.scaled(0.5))?;
            let e = 1.0 / (alpha - 1.0);
            let tail = integrate_fallible(
                |w: f64| {
                    let s = l * w.powf(-e);
                    Ok(g(s)? * l * e * w.powf(-e - 1.0))
                },
                0.0,
                1.0,
                &cfg.scaled(0.5),
            )?;
            Ok(Estimate::new(head.value + tail.value, head.err_est + tail.err_est))
        }
        _ => {
            let ln_g = |s: f64| -> Result<f64> { Ok(g(s)?.ln()) };
            let tail_bound = |b: f64| -> f64 {
                let h = 1e-4 * b;
                let (Ok(v), Ok(l0), Ok(l1)) = (g(b), ln_g(b - h), ln_g(b + h)) else {
                    return f64::INFINITY;
                };
                let d = (l1 - l0) / (2.0 * h);
                // Twice the value of a tail decaying at the current log-slope.
                if d < 0.0 && v.is_finite() {
                    2.0 * v / -d
                } else if v == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            };
            let start = (u / c).max(1.0);
            let b = truncation_point(0.0, start, cfg.tail_cutoff_mass, &tail_bound)?;
            let pts = breakpoints(0.0, b, ladder(passage_scale(model, u)).chain([u / c]));
            let est = integrate_partitioned_fallible(g, &pts, cfg)?;
            Ok(Estimate::new(est.value, est.err_est + tail_bound(b)))
        }
    }
}

/// P(sup_{t<inf} (Y(t) - c t) > u) for spectrally negative Y, via Kendall's identity.
pub(crate) fn sup_linear_sn_inf(model: &LevyModel, c: f64, u: f64, cfg: &QuadConfig) -> Result<Estimate> {
    require_sn(model)?;
    require_positive("c", c)?;
    require_positive("u", u)?;
    // Brownian only: p(u + cs, s)/s <= exp(-c^2 s/2) / sqrt(2 pi s^3).
    let bound = |b: f64| u * (-0.5 * c * c * b).exp() * 2.0 / (c * c * (2.0 * std::f64::consts::PI * b * b * b).sqrt());
    let b = truncation_point(0.0, (u / c).max(1.0), cfg.tail_cutoff_mass, &bound)?;
    let pts = breakpoints(0.0, b, ladder(passage_scale(model, u)).chain([u / c]));
    let est = integrate_partitioned_fallible(|s| Ok(u * model.density(u + c * s, s)? / s), &pts, cfg)?;
    Ok(clamp_unit(Estimate::new(est.value, est.err_est + bound(b))))
}

/// P(sup_{t<T} X(t) - cT <= u, X(T) - cT in dz)/dz for spectrally positive X, z <= u.
pub fn joint_sup_density_sp(model: &LevyModel, c: f64, u: f64, t: f64, z: f64, cfg: &QuadConfig) -> Result<f64> {
    require_sp(model)?;
    require_nonnegative("c", c)?;
    require_positive("u", u)?;
    require_positive("T", t)?;
    if !(z <= u) {
        return Err(Error::domain(format!("endpoint z = {z} must not exceed the level u = {u}")));
    }
    let v = sp_joint(model, c, u, t, u - z, cfg)?;
    if v < 0.0 {
        log::warn!("joint density {v:e} clamped to 0 at z = {z}");
    }
    Ok(v.max(0.0))
}

/// Mirror of [`joint_sup_density_sp`] for spectrally negative Y.
pub fn joint_sup_density_sn(model: &LevyModel, c: f64, u: f64, t: f64, z: f64, cfg: &QuadConfig) -> Result<f64> {
    require_sn(model)?;
    require_nonnegative("c", c)?;
    require_positive("u", u)?;
    require_positive("T", t)?;
    if !(z <= u) {
        return Err(Error::domain(format!("endpoint z = {z} must not exceed the level u = {u}")));
    }
    let v = sn_joint(model, c, u, t, u - z, cfg)?;
    if v < 0.0 {
        log::warn!("joint density {v:e} clamped to 0 at z = {z}");
    }
    Ok(v.max(0.0))
}

/// Joint density at endpoint `u - d` (distance `d >= 0` below the level),
/// unclamped. Spectrally positive case.
fn sp_joint(model: &LevyModel, c: f64, u: f64, t: f64, d: f64, cfg: &QuadConfig) -> Result<f64> {
    let first = model.density(u - d + c * t, t)?;
    if d <= 0.0 {
        return Ok(first);
    }
    Ok(first - d * sp_kernel(model, c, u, t, d, cfg)?)
}

/// `K(d) = int_0^T f(u + c(T - r), T - r) f(c r - d, r) / r dr`.
fn sp_kernel(model: &LevyModel, c: f64, u: f64, t: f64, d: f64, cfg: &QuadConfig) -> Result<f64> {
    match *model {
        LevyModel::GammaProcess { delta } => gamma_kernel(delta, c, u, t, d, cfg),
        _ => {
            let g = |r: f64| -> Result<f64> {
                let s = t - r;
                if s <= 0.0 {
                    return Ok(0.0);
                }
                Ok(model.density(u + c * s, s)? * model.density(c * r - d, r)? / r)
            };
            let near_zero = ladder(passage_scale(model, d));
            let near_t = ladder(passage_scale(model, u)).map(|p| t - p);
            let crossing = if c > 0.0 { d / c } else { f64::NAN };
            let pts = breakpoints(0.0, t, near_zero.chain(near_t).chain([crossing]));
            Ok(integrate_partitioned_fallible(g, &pts, cfg)?.value)
        }
    }
}

/// Gamma version of [`sp_kernel`]. With `v = c r - d` the factor
/// `v^{r-1}` has exponent `r0 - 1` at `v = 0` (`r0 = d / c`); the map
/// `v = V y^{1/r0}` absorbs `v^{r0 - 1} dv` exactly and is carried out in
/// log space so that tiny shapes do not underflow.
fn gamma_kernel(delta: f64, c: f64, u: f64, t: f64, d: f64, cfg: &QuadConfig) -> Result<f64> {
    if c <= 0.0 {
        return Ok(0.0);
    }
    let big_v = c * t - d;
    if big_v <= 0.0 {
        return Ok(0.0);
    }
    let r0 = d / c;
    let ln_v_top = big_v.ln();
    let ln_pref = r0 * ln_v_top - r0.ln() - c.ln();
    let g = |y: f64| -> f64 {
        let ln_v = ln_v_top + y.ln() / r0;
        let v = ln_v.exp();
        let r = r0 + v / c;
        let s = (big_v - v) / c;
        if s <= 0.0 {
            return 0.0;
        }
        // delta^r v^{v/c} e^{-delta v} / Gamma(r + 1) times the other density
        let ln_rest = r * delta.ln() + (v / c) * ln_v - delta * v - ln_gamma(r + 1.0);
        let other = gamma_density(delta, u + c * s, s);
        (ln_pref + ln_rest).exp() * other
    };
    Ok(integrate(g, 0.0, 1.0, cfg)?.value)
}

fn gamma_density(delta: f64, x: f64, t: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    (t * delta.ln() - ln_gamma(t) + (t - 1.0) * x.ln() - delta * x).exp()
}

/// Spectrally negative joint density at endpoint `u - d`, unclamped.
fn sn_joint(model: &LevyModel, c: f64, u: f64, t: f64, d: f64, cfg: &QuadConfig) -> Result<f64> {
    let first = model.density(u - d + c * t, t)?;
    if d <= 0.0 {
        return Ok(first);
    }
    // K(d) = int_0^T p(-d + c s, s) p(u + c(T - s), T - s) / (T - s) ds
    let g = |s: f64| -> Result<f64> {
        let r = t - s;
        if r <= 0.0 {
            return Ok(0.0);
        }
        Ok(model.density(c * s - d, s)? * model.density(u + c * r, r)? / r)
    };
    let near_zero = ladder(passage_scale(model, d));
    let near_t = ladder(passage_scale(model, u)).map(|p| t - p);
    let pts = breakpoints(0.0, t, near_zero.chain(near_t));
    let k = integrate_partitioned_fallible(g, &pts, cfg)?.value;
    Ok(first - u * k)
}

/// Which theorem drives a broken-drift evaluation.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    Positive,
    Negative,
}

/// Tail probability after the break: `P(sup_{t < S - T} (X(t) - c2 t) > z)`.
fn after_break(model: &LevyModel, side: Side, c2: f64, z: f64, rest: Option<f64>, cfg: &QuadConfig) -> Result<f64> {
    match rest {
        Some(len) => Ok(match side {
            Side::Positive => sup_linear_sp(model, c2, z, len, cfg)?.value,
            Side::Negative => sup_linear_sn(model, c2, z, len, cfg)?.value,
        }),
        None => {
            // A zero-mean process without drift reaches every level.
            if c2 == 0.0 && model.mean_rate() == 0.0 {
                return Ok(1.0);
            }
            Ok(match side {
                Side::Positive => sup_linear_sp_inf(model, c2, z, cfg)?.value,
                Side::Negative => sup_linear_sn_inf(model, c2, z, cfg)?.value,
            })
        }
    }
}

fn broken(model: &LevyModel, side: Side, drift: &BrokenDrift, u: f64, horizon: &Horizon, cfg: &QuadConfig) -> Result<SupResult> {
    drift.validate()?;
    require_positive("u", u)?;
    horizon.validate_against(drift)?;
    cfg.validate()?;
    let (c1, c2, t) = (drift.c1, drift.c2, drift.t_break);
    let rest = match *horizon {
        Horizon::Finite { s } => Some(s - t),
        Horizon::Infinite => None,
    };
    if rest.is_none() {
        // Surface regime errors before any quadrature.
        after_break(model, side, c2, 1.0, None, &QuadConfig::default())?;
    }
    let half = cfg.scaled(0.5);
    let a = match side {
        Side::Positive => sup_linear_sp(model, c1, u, t, &half)?,
        Side::Negative => sup_linear_sn(model, c1, u, t, &half)?,
    };

    // B = int_0^inf Psi(z) j(z) dz, with j the density of the endpoint
    // X(T) - c1 T at u - z on the event of no exceedance before T.
    let top = match *model {
        LevyModel::GammaProcess { .. } => Some(u + c1 * t),
        _ => None,
    };
    let width = match top {
        Some(w) => w,
        None => truncation_point(0.0, u + c1 * t + t.sqrt(), cfg.tail_cutoff_mass, &|b: f64| {
            model.cdf(u + c1 * t - b, t).unwrap_or(f64::INFINITY)
        })?,
    };
    let tail_mass = if top.is_some() { 0.0 } else { model.cdf(u + c1 * t - width, t)? };
    let inner = half.scaled(1.0 / width.max(1.0));
    let clamped = Cell::new(0.0f64);
    let integrand = |z: f64| -> Result<f64> {
        let j = match side {
            Side::Positive => sp_joint(model, c1, u, t, z, &inner.scaled(1.0 / z.max(1.0)))?,
            Side::Negative => sn_joint(model, c1, u, t, z, &inner.scaled(1.0 / z.max(1.0)))?,
        };
        if j <= 0.0 {
            clamped.set(clamped.get().max(-j));
            return Ok(0.0);
        }
        Ok(after_break(model, side, c2, z, rest, &inner)? * j)
    };
    let b = match (model, top) {
        (LevyModel::GammaProcess { delta }, Some(z_max)) => {
            // The kernel switches off at z = c1 T; past it j(z) is the plain
            // density of X(T) at w = z_max - z, singular like w^{T-1}.
            let knee = (c1 * t).min(z_max);
            let mut total = Estimate::new(0.0, 0.0);
            if knee > 0.0 {
                let e = integrate_fallible(integrand, 0.0, knee, &half.scaled(0.5))?;
                total = Estimate::new(e.value, e.err_est);
            }
            // w = W y^{1/T} turns f(w, T) dw into (delta W)^T e^{-delta w} / Gamma(T + 1) dy.
            // For small T most of the mass sits at w below the smallest double,
            // so the endpoint is never rebuilt from z.
            let big_w = z_max - knee;
            let ln_mass = t * (delta * big_w).ln() - ln_gamma(t + 1.0);
            let upper = |y: f64| -> Result<f64> {
                let w = big_w * (y.ln() / t).exp();
                let weight = (ln_mass - delta * w).exp();
                Ok(after_break(model, side, c2, z_max - w, rest, &inner)? * weight)
            };
            let e = integrate_fallible(upper, 0.0, 1.0, &half.scaled(0.5))?;
            Estimate::new(total.value + e.value, total.err_est + e.err_est)
        }
        _ => {
            let pts = breakpoints(0.0, width, [u + c1 * t]);
            integrate_partitioned_fallible(integrand, &pts, &half)?
        }
    };
    let b = Estimate::new(b.value, b.err_est + tail_mass + clamped.get() * width);
    Ok(SupResult::assemble(a, b))
}

/// P(sup_{t<S} (X(t) - c(t)) > u) for spectrally positive X and the broken drift c(t).
pub fn sup_broken_sp(model: &LevyModel, drift: &BrokenDrift, u: f64, horizon: &Horizon, cfg: &QuadConfig) -> Result<SupResult> {
    require_sp(model)?;
    broken(model, Side::Positive, drift, u, horizon, cfg)
}

/// P(sup_{t<S} (Y(t) - c(t)) > u) for spectrally negative Y and the broken drift c(t).
pub fn sup_broken_sn(model: &LevyModel, drift: &BrokenDrift, u: f64, horizon: &Horizon, cfg: &QuadConfig) -> Result<SupResult> {
    require_sn(model)?;
    broken(model, Side::Negative, drift, u, horizon, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::norm_cdf;

    #[test]
    fn brownian_baseline() {
        let v = sup_linear_sp(&LevyModel::brownian(), 1.0, 1.0, 1.0, &QuadConfig::default()).unwrap();
        let exact = norm_cdf(-2.0) + (-2.0f64).exp() * 0.5;
        assert!((v.value - exact).abs() < 1e-8, "{}", v.value);
    }

    #[test]
    fn kendall_reflection() {
        let v = sup_linear_sn(&LevyModel::brownian(), 0.0, 2.0, 1.0, &QuadConfig::default()).unwrap();
        assert!((v.value - 2.0 * norm_cdf(-2.0)).abs() < 1e-8);
    }

    #[test]
    fn sign_gating() {
        let g = LevyModel::gamma(2.0).unwrap();
        assert!(matches!(sup_linear_sn(&g, 1.0, 1.0, 1.0, &QuadConfig::default()), Err(Error::Domain(_))));
    }

    #[test]
    fn gamma_regime_error() {
        let g = LevyModel::gamma(2.0).unwrap();
        let r = sup_linear_sp_inf(&g, 0.5, 1.0, &QuadConfig::default());
        assert!(matches!(r, Err(Error::UnsupportedRegime(_))));
        let d = BrokenDrift::new(2.0, 0.4, 1.0).unwrap();
        let r = sup_broken_sp(&g, &d, 1.0, &Horizon::Infinite, &QuadConfig::default());
        assert!(matches!(r, Err(Error::UnsupportedRegime(_))));
    }

    #[test]
    fn horizon_must_exceed_break() {
        let d = BrokenDrift::new(1.0, 1.0, 2.0).unwrap();
        let r = sup_broken_sp(&LevyModel::brownian(), &d, 1.0, &Horizon::Finite { s: 2.0 }, &QuadConfig::default());
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn breakpoints_are_sorted_and_bounded() {
        let p = breakpoints(0.0, 1.0, [0.5, 2.0, -1.0, 0.5, 0.25, f64::NAN]);
        assert_eq!(p, vec![0.0, 0.25, 0.5, 1.0]);
    }
}
