//! Totally skewed (beta = 1) zero-mean alpha-stable law with unit scale,
//! characteristic function `exp(-|t|^a (1 - i sign(t) tan(pi a / 2)))`,
//! for `1 < a < 2`.
//!
//! The density is the cosine integral
//! `f(x) = (1/pi) int_0^inf exp(-t^a) cos(t x + K t^a) dt`, `K = -tan(pi a/2)`.
//! For `x < 0` the contour is moved to `Im t = eta` (the saddle point of
//! the Laplace transform) so the tiny left-tail values come out without
//! cancellation.

use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_fallible, integrate_partitioned, integrate_partitioned_fallible, QuadConfig};
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

// Internal accuracy for standardized integrals; independent of caller configs.
const STD_CFG: QuadConfig = QuadConfig {
    abs_tol: 1e-14,
    rel_tol: 1e-12,
    max_subdivisions: 4000,
    tail_cutoff_mass: 1e-16,
    singularity_exponent_hint: None,
};

/// Integrands are dropped once `exp(-t^a)` falls below `e^{-DAMP}`.
const DAMP: f64 = 40.0;
/// Below `exp(-UNDERFLOW)` the density is reported as zero.
const UNDERFLOW: f64 = 740.0;
/// The large-x expansions are tried beyond this standardized abscissa.
const SERIES_FROM: f64 = 8.0;
/// Left of this point the distribution function is integrated from the density.
const CDF_SPLIT: f64 = -3.0;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Stable {
    pub alpha: f64,
    /// |cos(pi alpha / 2)|
    pub cosabs: f64,
    /// -tan(pi alpha / 2) > 0
    pub k: f64,
}

enum Series {
    Density,
    Survival,
    UpperPartial,
}

impl Stable {
    pub fn new(alpha: f64) -> Self {
        let h = 0.5 * PI * alpha;
        Stable { alpha, cosabs: h.cos().abs(), k: -h.tan() }
    }

    /// ln E exp(-eta Z) = eta^alpha / |cos(pi alpha/2)|. Used for contour
    /// placement and truncation only.
    fn kappa(&self, eta: f64) -> f64 {
        eta.powf(self.alpha) / self.cosabs
    }

    /// Coefficient `A` of the left-tail decay `exp(-A |x|^{a/(a-1)})`.
    fn left_coeff(&self) -> f64 {
        let a = self.alpha;
        (a - 1.0) * self.cosabs.powf(1.0 / (a - 1.0)) * a.powf(-a / (a - 1.0))
    }

    /// Point below which the standardized density is under `exp(-level)`.
    pub fn left_cutoff(&self, level: f64) -> f64 {
        let q = self.alpha / (self.alpha - 1.0);
        -(level / self.left_coeff()).powf(1.0 / q)
    }

    fn saddle(&self, x: f64) -> f64 {
        (self.cosabs * (-x) / self.alpha).powf(1.0 / (self.alpha - 1.0))
    }

    fn series(&self, x: f64, kind: Series) -> Option<f64> {
        let a = self.alpha;
        let lnx = x.ln();
        let mut sum = 0.0;
        let mut prev = f64::INFINITY;
        for k in 1..=160 {
            let kf = k as f64;
            let (lg, power, extra) = match kind {
                Series::Density => (ln_gamma(kf * a + 1.0), kf * a + 1.0, 1.0),
                Series::Survival => (ln_gamma(kf * a), kf * a, 1.0),
                Series::UpperPartial => (ln_gamma(kf * a), kf * a - 1.0, 1.0 / (kf * a - 1.0)),
            };
            let mag = (lg - ln_gamma(kf + 1.0) - kf * self.cosabs.ln() - power * lnx).exp() * extra;
            if mag > prev {
                return None;
            }
            prev = mag;
            sum += -(kf * PI * a).sin() / PI * mag;
            if mag < 1e-16 * sum.abs() {
                return Some(sum);
            }
        }
        None
    }

    fn t_max(&self, eta: f64) -> f64 {
        let mut t = 1.0f64;
        while self.tilted_parts(t, eta).0 > -DAMP && t < 1e6 {
            t *= 1.5;
        }
        t
    }

    /// Real part of the exponent (minus kappa(eta)) and the phase, at `t`.
    fn tilted_parts(&self, t: f64, eta: f64) -> (f64, f64) {
        let mag = (t * t + eta * eta).sqrt().powf(self.alpha) / self.cosabs;
        let th = -self.alpha * t.atan2(eta);
        (mag * th.cos() - self.kappa(eta), mag * th.sin())
    }

    fn panels(&self, x: f64, t_max: f64, extra_phase: f64) -> Vec<f64> {
        let variation = x.abs() * t_max + extra_phase;
        let n = ((variation / PI).ceil() as usize + 8).min(4000);
        (0..=n).map(|i| t_max * i as f64 / n as f64).collect()
    }

    /// Standardized density f(x, 1).
    pub fn density(&self, x: f64) -> Result<f64> {
        if x > SERIES_FROM {
            if let Some(v) = self.series(x, Series::Density) {
                return Ok(v.max(0.0));
            }
        }
        let eta = if x < 0.0 { self.saddle(x) } else { 0.0 };
        let log_pref = eta * x + self.kappa(eta);
        if log_pref < -UNDERFLOW {
            return Ok(0.0);
        }
        let t_max = self.t_max(eta);
        let g = |t: f64| {
            let (re, ph) = self.tilted_parts(t, eta);
            re.exp() * (ph - t * x).cos()
        };
        let phase = self.tilted_parts(t_max, eta).1.abs();
        let pts = self.panels(x, t_max, phase);
        let est = integrate_partitioned(g, &pts, &STD_CFG)?;
        Ok((log_pref.exp() * est.value / PI).max(0.0))
    }

    /// Standardized survival function P(Z > x).
    pub fn survival(&self, x: f64) -> Result<f64> {
        if x > SERIES_FROM {
            if let Some(v) = self.series(x, Series::Survival) {
                return Ok(v.clamp(0.0, 1.0));
            }
        }
        if x < CDF_SPLIT {
            return Ok((1.0 - self.cdf_left(x)?).clamp(0.0, 1.0));
        }
        // Gil-Pelaez: P(Z > x) = 1/2 - (1/pi) int exp(-t^a) sin(t x + K t^a) / t dt
        let t_max = DAMP.powf(1.0 / self.alpha);
        let g = |t: f64| (-t.powf(self.alpha)).exp() * (t * x + self.k * t.powf(self.alpha)).sin() / t;
        let pts = self.panels(x, t_max, self.k * DAMP);
        let est = integrate_partitioned(g, &pts, &STD_CFG)?;
        Ok((0.5 - est.value / PI).clamp(0.0, 1.0))
    }

    fn cdf_left(&self, x: f64) -> Result<f64> {
        let lo = self.left_cutoff(60.0);
        if x <= lo {
            return Ok(0.0);
        }
        Ok(integrate_fallible(|y| self.density(y), lo, x, &STD_CFG)?.value)
    }

    /// E(k - Z)^+ for the standardized variable.
    pub fn put_value(&self, k: f64) -> Result<f64> {
        if k > SERIES_FROM {
            if let Some(v) = self.series(k, Series::UpperPartial) {
                return Ok(k + v);
            }
        }
        // E(k - Z)^+ = k/2 + (1/pi) int_0^inf (1 - exp(-t^a) cos(t k + K t^a)) / t^2 dt
        let a = self.alpha;
        let g = |t: f64| {
            // 1 - e^{-u} cos v without cancellation at small t
            let u = t.powf(a);
            let half = 0.5 * (t * k + self.k * u);
            (-(-u).exp_m1() + 2.0 * (-u).exp() * half.sin().powi(2)) / (t * t)
        };
        let near = integrate(g, 0.0, 1.0, &STD_CFG.with_hint(Some(a - 2.0)))?;
        let t_max = DAMP.powf(1.0 / a);
        let pts: Vec<f64> = self.panels(k, t_max - 1.0, self.k * DAMP).iter().map(|p| p + 1.0).collect();
        let far = integrate_partitioned(g, &pts, &STD_CFG)?;
        let v = 0.5 * k + (near.value + far.value + 1.0 / t_max) / PI;
        Ok(v.max(0.0))
    }

    /// ln E exp(-gamma Z) evaluated by integrating the density.
    pub fn log_laplace(&self, gamma: f64) -> Result<f64> {
        if gamma == 0.0 {
            return Ok(0.0);
        }
        let q = self.alpha / (self.alpha - 1.0);
        let a_coef = self.left_coeff();
        // Envelope gamma*y - A y^q of the tilted left tail, peak at y_star.
        let y_star = (gamma / (a_coef * q)).powf(1.0 / (q - 1.0));
        let env = |y: f64| gamma * y - a_coef * y.powf(q);
        let peak = env(y_star);
        let mut y_lo = 2.0 * y_star.max(1.0);
        while env(y_lo) > peak - DAMP - 5.0 {
            y_lo *= 1.5;
        }
        let integrand = |x: f64| Ok((-gamma * x).exp() * self.density(x)?);
        let cfg = STD_CFG.with_tolerance(1e-300, 1e-12);
        let mut pts = vec![-y_lo];
        if y_star > 0.5 && y_star < y_lo {
            pts.push(-y_star);
        }
        pts.push(0.0);
        pts.push(SERIES_FROM * 2.0);
        let body = integrate_partitioned_fallible(integrand, &pts, &cfg)?;
        // Right tail x = b / y on (0, 1).
        let b = SERIES_FROM * 2.0;
        let tail = integrate_fallible(|y: f64| Ok(integrand(b / y)? * b / (y * y)), 0.0, 1.0, &cfg)?;
        let total = body.value + tail.value;
        if !total.is_finite() || total <= 0.0 {
            return Err(Error::NonConvergence { value: total, err_est: body.err_est + tail.err_est });
        }
        Ok(total.ln())
    }
}
