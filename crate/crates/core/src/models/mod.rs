//! Levy model families, their marginal densities, negative-part means and
//! Laplace exponents.

mod stable;

pub(crate) use stable::Stable;

use crate::error::{require_finite, require_nonnegative, require_positive, Error, Result};
use crate::quadrature::{integrate_fallible, integrate_partitioned_fallible, Estimate, QuadConfig};
use crate::special::{norm_cdf, norm_pdf};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

/// Jump direction of a model. Brownian motion has no jumps and counts as both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralSign {
    Positive,
    Negative,
    Both,
}

impl SpectralSign {
    pub fn allows_positive(self) -> bool {
        matches!(self, SpectralSign::Positive | SpectralSign::Both)
    }

    pub fn allows_negative(self) -> bool {
        matches!(self, SpectralSign::Negative | SpectralSign::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum LevyModel {
    /// Standard Brownian motion, unit variance per unit time.
    #[serde(rename = "brownian")]
    BrownianStandard,
    /// Gamma subordinator: X(t) ~ Gamma(shape t, rate delta).
    #[serde(rename = "gamma")]
    GammaProcess { delta: f64 },
    /// Totally right-skewed zero-mean stable process, 1 < alpha < 2.
    #[serde(rename = "stable")]
    AlphaStable { alpha: f64 },
}

impl LevyModel {
    pub fn brownian() -> Self {
        LevyModel::BrownianStandard
    }

    pub fn gamma(delta: f64) -> Result<Self> {
        let m = LevyModel::GammaProcess { delta };
        m.validate()?;
        Ok(m)
    }

    pub fn stable(alpha: f64) -> Result<Self> {
        let m = LevyModel::AlphaStable { alpha };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            LevyModel::BrownianStandard => Ok(()),
            LevyModel::GammaProcess { delta } => require_positive("delta", delta),
            LevyModel::AlphaStable { alpha } => {
                if alpha > 1.0 && alpha < 2.0 {
                    Ok(())
                } else {
                    Err(Error::domain(format!("alpha must lie in (1, 2), got {alpha}")))
                }
            }
        }
    }

    pub fn spectral_sign(&self) -> SpectralSign {
        match self {
            LevyModel::BrownianStandard => SpectralSign::Both,
            _ => SpectralSign::Positive,
        }
    }

    /// E X(1).
    pub fn mean_rate(&self) -> f64 {
        match *self {
            LevyModel::GammaProcess { delta } => 1.0 / delta,
            _ => 0.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LevyModel::BrownianStandard => "brownian",
            LevyModel::GammaProcess { .. } => "gamma",
            LevyModel::AlphaStable { .. } => "stable",
        }
    }

    /// Density of X(t) at x.
    pub fn density(&self, x: f64, t: f64) -> Result<f64> {
        self.validate()?;
        require_positive("t", t)?;
        if x.is_nan() {
            return Err(Error::domain("x is NaN"));
        }
        match *self {
            LevyModel::BrownianStandard => {
                let sd = t.sqrt();
                Ok(norm_pdf(x / sd) / sd)
            }
            LevyModel::GammaProcess { delta } => Ok(gamma_density(delta, x, t)),
            LevyModel::AlphaStable { alpha } => {
                if x.is_infinite() {
                    return Ok(0.0);
                }
                let scale = t.powf(1.0 / alpha);
                Ok(Stable::new(alpha).density(x / scale)? / scale)
            }
        }
    }

    /// P(X(t) > x).
    pub fn survival(&self, x: f64, t: f64) -> Result<f64> {
        self.validate()?;
        require_positive("t", t)?;
        match *self {
            LevyModel::BrownianStandard => Ok(norm_cdf(-x / t.sqrt())),
            LevyModel::GammaProcess { delta } => {
                if x <= 0.0 {
                    Ok(1.0)
                } else {
                    Ok(gamma_ur(t, delta * x))
                }
            }
            LevyModel::AlphaStable { alpha } => Stable::new(alpha).survival(x / t.powf(1.0 / alpha)),
        }
    }

    /// P(X(t) <= x).
    pub fn cdf(&self, x: f64, t: f64) -> Result<f64> {
        match *self {
            LevyModel::BrownianStandard => {
                require_positive("t", t)?;
                Ok(norm_cdf(x / t.sqrt()))
            }
            LevyModel::GammaProcess { delta } => {
                self.validate()?;
                require_positive("t", t)?;
                if x <= 0.0 {
                    Ok(0.0)
                } else {
                    Ok(gamma_lr(t, delta * x))
                }
            }
            LevyModel::AlphaStable { .. } => Ok(1.0 - self.survival(x, t)?),
        }
    }

    /// E(X(s) - c s)^-, the mean negative part of the drifted process.
    pub fn neg_part_mean(&self, c: f64, s: f64) -> Result<f64> {
        self.validate()?;
        require_positive("s", s)?;
        require_finite("c", c)?;
        let a = c * s;
        match *self {
            LevyModel::BrownianStandard => {
                // E(a - W(s))^+ = a Phi(a/sqrt s) + sqrt(s) phi(a/sqrt s)
                let sd = s.sqrt();
                let z = a / sd;
                Ok(a * norm_cdf(z) + sd * norm_pdf(z))
            }
            LevyModel::GammaProcess { delta } => {
                if a <= 0.0 {
                    return Ok(0.0);
                }
                // E(a - X)^+ = a P(s, delta a) - (s / delta) P(s + 1, delta a)
                let v = a * gamma_lr(s, delta * a) - s / delta * gamma_lr(s + 1.0, delta * a);
                Ok(v.max(0.0))
            }
            LevyModel::AlphaStable { alpha } => {
                let scale = s.powf(1.0 / alpha);
                Ok(scale * Stable::new(alpha).put_value(a / scale)?)
            }
        }
    }

    /// phi(gamma) = ln E exp(-gamma (X(1) - c)).
    pub fn laplace_exponent(&self, c: f64, gamma: f64) -> Result<f64> {
        self.validate()?;
        require_finite("c", c)?;
        require_nonnegative("gamma", gamma)?;
        if !self.spectral_sign().allows_positive() {
            return Err(Error::domain("laplace exponent needs a spectrally positive model"));
        }
        match *self {
            LevyModel::BrownianStandard => Ok(0.5 * gamma * gamma + c * gamma),
            LevyModel::GammaProcess { delta } => Ok(c * gamma - (gamma / delta).ln_1p()),
            LevyModel::AlphaStable { alpha } => Ok(Stable::new(alpha).log_laplace(gamma)? + c * gamma),
        }
    }

    /// Integral of the density of X(t) over the real line.
    pub fn total_mass(&self, t: f64, cfg: &QuadConfig) -> Result<Estimate> {
        self.validate()?;
        require_positive("t", t)?;
        let f = |x: f64| self.density(x, t);
        match *self {
            LevyModel::BrownianStandard => {
                let sd = t.sqrt();
                let pts: Vec<f64> = [-40.0, -5.0, -1.0, 0.0, 1.0, 5.0, 40.0].iter().map(|k| k * sd).collect();
                integrate_partitioned_fallible(f, &pts, cfg)
            }
            LevyModel::GammaProcess { delta } => {
                let knee = t.min(1.0) / delta;
                let head = integrate_fallible(f, 0.0, knee, &cfg.with_hint(Some(t - 1.0)))?;
                let far = (t + 60.0 + 10.0 * t.sqrt()) / delta;
                let body = integrate_partitioned_fallible(f, &[knee, t / delta + knee, far], cfg)?;
                Ok(Estimate::new(head.value + body.value, head.err_est + body.err_est))
            }
            LevyModel::AlphaStable { alpha } => {
                let scale = t.powf(1.0 / alpha);
                let lo = Stable::new(alpha).left_cutoff(45.0);
                let pts: Vec<f64> = [lo, -3.0, -1.0, 0.0, 1.0, 3.0, 10.0].iter().map(|k| k * scale).collect();
                let body = integrate_partitioned_fallible(f, &pts, cfg)?;
                // x = b / y past b; the integrand behaves like y^{alpha - 1} at 0.
                let b = 10.0 * scale;
                let tail = integrate_fallible(|y: f64| Ok(f(b / y)? * b / (y * y)), 0.0, 1.0, &cfg.with_hint(Some(alpha - 1.0)))?;
                Ok(Estimate::new(body.value + tail.value, body.err_est + tail.err_est))
            }
        }
    }

    /// phi'(0) = c - E X(1).
    pub fn laplace_exponent_slope0(&self, c: f64) -> f64 {
        c - self.mean_rate()
    }

    /// The root gamma* > 0 of phi(gamma) = lambda on the increasing branch.
    pub fn laplace_exponent_inverse(&self, c: f64, lambda: f64) -> Result<f64> {
        self.validate()?;
        require_positive("lambda", lambda)?;
        require_nonnegative("c", c)?;
        if let LevyModel::BrownianStandard = self {
            return Ok((c * c + 2.0 * lambda).sqrt() - c);
        }
        // phi is convex with phi(0) = 0 < lambda, so [0, hi] brackets the root
        // once phi(hi) > lambda.
        let mut lo = 0.0;
        let mut hi = 1.0;
        let mut doublings = 0;
        while self.laplace_exponent(c, hi)? <= lambda {
            lo = hi;
            hi *= 2.0;
            doublings += 1;
            if doublings > 200 {
                return Err(Error::Inversion { lambda });
            }
        }
        // Illinois regula falsi on the bracket; each step keeps a sign change.
        let (mut flo, mut fhi) = (self.laplace_exponent(c, lo)? - lambda, self.laplace_exponent(c, hi)? - lambda);
        let mut side = 0i8;
        for _ in 0..200 {
            if hi - lo <= 1e-13 * hi {
                break;
            }
            let mut x = (lo * fhi - hi * flo) / (fhi - flo);
            if !(x > lo && x < hi) {
                x = 0.5 * (lo + hi);
            }
            let fx = self.laplace_exponent(c, x)? - lambda;
            if fx == 0.0 {
                return Ok(x);
            }
            if fx > 0.0 {
                hi = x;
                fhi = fx;
                if side == 1 {
                    flo *= 0.5;
                }
                side = 1;
            } else {
                lo = x;
                flo = fx;
                if side == -1 {
                    fhi *= 0.5;
                }
                side = -1;
            }
            if (fx / lambda).abs() < 1e-15 {
                return Ok(x);
            }
        }
        Ok(if flo.abs() < fhi.abs() { lo } else { hi })
    }
}

fn gamma_density(delta: f64, x: f64, t: f64) -> f64 {
    if x <= 0.0 || x.is_infinite() {
        return 0.0;
    }
    (t * delta.ln() - ln_gamma(t) + (t - 1.0) * x.ln() - delta * x).exp()
}

pub fn density(model: &LevyModel, x: f64, t: f64) -> Result<f64> {
    model.density(x, t)
}

pub fn neg_part_mean(model: &LevyModel, c: f64, s: f64) -> Result<f64> {
    model.neg_part_mean(c, s)
}

pub fn laplace_exponent(model: &LevyModel, c: f64, gamma: f64) -> Result<f64> {
    model.laplace_exponent(c, gamma)
}

pub fn laplace_exponent_inverse(model: &LevyModel, c: f64, lambda: f64) -> Result<f64> {
    model.laplace_exponent_inverse(c, lambda)
}

/// Piecewise linear drift: slope `c1` up to `t_break`, `c2` afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BrokenDrift {
    pub c1: f64,
    pub c2: f64,
    #[serde(rename = "t")]
    pub t_break: f64,
}

impl BrokenDrift {
    pub fn new(c1: f64, c2: f64, t_break: f64) -> Result<Self> {
        let d = BrokenDrift { c1, c2, t_break };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        require_nonnegative("c1", self.c1)?;
        require_nonnegative("c2", self.c2)?;
        require_positive("T", self.t_break)
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        if t <= self.t_break {
            self.c1 * t
        } else {
            self.c2 * (t - self.t_break) + self.c1 * self.t_break
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_density_values() {
        let b = LevyModel::brownian();
        assert!((b.density(0.0, 1.0).unwrap() - 0.398_942_280_401_432_7).abs() < 1e-15);
        let g = LevyModel::gamma(1.0).unwrap();
        assert!((g.density(2.0, 1.0).unwrap() - (-2.0f64).exp()).abs() < 1e-15);
        assert_eq!(g.density(-1.0, 0.5).unwrap(), 0.0);
        assert_eq!(g.density(0.0, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn domain_checks() {
        assert!(LevyModel::gamma(0.0).is_err());
        assert!(LevyModel::stable(2.0).is_err());
        assert!(LevyModel::stable(1.0).is_err());
        assert!(LevyModel::brownian().density(0.0, 0.0).is_err());
        assert!(LevyModel::brownian().neg_part_mean(1.0, -1.0).is_err());
        assert!(LevyModel::brownian().laplace_exponent(1.0, -0.1).is_err());
    }

    #[test]
    fn brownian_exponent_and_inverse() {
        let b = LevyModel::brownian();
        assert_eq!(b.laplace_exponent(1.0, 2.0).unwrap(), 4.0);
        assert_eq!(b.laplace_exponent_inverse(1.0, 4.0).unwrap(), 2.0);
    }

    #[test]
    fn zero_drift_negative_part() {
        let v = LevyModel::brownian().neg_part_mean(0.0, 1.0).unwrap();
        assert!((v - 0.398_942_280_401_432_7).abs() < 1e-15);
        assert_eq!(LevyModel::gamma(1.0).unwrap().neg_part_mean(0.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn drift_is_continuous_at_break() {
        let d = BrokenDrift::new(2.0, 0.5, 1.5).unwrap();
        assert_eq!(d.evaluate(1.5), 3.0);
        assert!((d.evaluate(1.5 + 1e-12) - 3.0).abs() < 1e-11);
        assert_eq!(d.evaluate(3.5), 4.0);
    }

    #[test]
    fn serde_shape() {
        let m: LevyModel = serde_json::from_str(r#"{"family":"gamma","delta":2.0}"#).unwrap();
        assert_eq!(m, LevyModel::GammaProcess { delta: 2.0 });
        assert!(serde_json::from_str::<LevyModel>(r#"{"family":"gamma","delta":2.0,"x":1}"#).is_err());
    }
}
