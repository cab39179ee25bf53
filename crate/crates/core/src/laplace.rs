//! Laplace transforms in the level of the supremum over an exponential
//! horizon `T`, optionally extended by an independent random time `V` with
//! slope `c2` after the break.

use crate::error::{require_finite, require_nonnegative, require_positive, Error, Result};
use crate::models::LevyModel;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Relative gap `|phi(gamma) - lambda| / lambda` below which the removable
/// singularity is evaluated as a limit.
const SINGULAR_GAP: f64 = 1e-8;

/// Law of the extra time `V` after the break.
pub enum RandomHorizonSpec {
    Infinite,
    Exponential { theta: f64 },
    /// `gamma -> E exp(-gamma sup_{t<V} (X(t) - c2 t))`.
    Custom(Box<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for RandomHorizonSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RandomHorizonSpec::Infinite => write!(f, "Infinite"),
            RandomHorizonSpec::Exponential { theta } => write!(f, "Exponential {{ theta: {theta} }}"),
            RandomHorizonSpec::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl RandomHorizonSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            RandomHorizonSpec::Infinite => Ok(()),
            RandomHorizonSpec::Exponential { theta } => require_positive("theta", *theta),
            RandomHorizonSpec::Custom(l) => {
                let at0 = l(0.0);
                if !((at0 - 1.0).abs() < 1e-9) {
                    return Err(Error::domain(format!("custom transform must map 0 to 1, got {at0}")));
                }
                let pts = [0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0];
                let vals: Vec<f64> = pts.iter().map(|&g| l(g)).collect();
                if vals.windows(2).any(|w| !(w[1] <= w[0] + 1e-12)) || vals.iter().any(|v| !(0.0..=1.0 + 1e-12).contains(v)) {
                    return Err(Error::domain("custom transform must be nonincreasing with values in [0, 1]"));
                }
                Ok(())
            }
        }
    }
}

/// Parameters shared by the broken-drift transforms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaplaceQuery {
    pub model: LevyModel,
    pub c1: f64,
    pub c2: f64,
    /// Rate of the exponential break time `T`.
    pub lambda: f64,
    pub gamma: f64,
}

impl LaplaceQuery {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        require_sp(&self.model)?;
        require_finite("c1", self.c1)?;
        require_finite("c2", self.c2)?;
        require_positive("lambda", self.lambda)?;
        require_finite("gamma", self.gamma)?;
        Ok(())
    }
}

fn require_sp(model: &LevyModel) -> Result<()> {
    if model.spectral_sign().allows_positive() {
        Ok(())
    } else {
        Err(Error::domain(format!("{} is not spectrally positive", model.name())))
    }
}

/// Evaluates `f` at `x` unless `x` sits on a removable singularity, in which
/// case the symmetric mean of `f(x +- h)` is returned.
fn across_removable<F: Fn(f64) -> Result<f64>>(f: F, x: f64, singular: bool, scale: f64) -> Result<f64> {
    if !singular {
        return f(x);
    }
    let h = (1e-5 * scale.max(1.0)).min(0.5 * x.abs().max(f64::MIN_POSITIVE));
    Ok(0.5 * (f(x + h)? + f(x - h)?))
}

/// `E exp(-gamma sup_{t<T} (X(t) - c t))` for `T ~ Exp(lambda)`.
pub fn laplace_sup_exp_t(model: &LevyModel, c: f64, gamma: f64, lambda: f64) -> Result<f64> {
    model.validate()?;
    require_sp(model)?;
    require_finite("c", c)?;
    require_nonnegative("gamma", gamma)?;
    require_positive("lambda", lambda)?;
    if gamma == 0.0 {
        return Ok(1.0);
    }
    let q = model.laplace_exponent_inverse(c, lambda)?;
    exp_t_with_root(model, c, gamma, lambda, q)
}

/// As [`laplace_sup_exp_t`] with the root `q = phi^{-1}(lambda)` supplied.
fn exp_t_with_root(model: &LevyModel, c: f64, gamma: f64, lambda: f64, q: f64) -> Result<f64> {
    if gamma == 0.0 {
        return Ok(1.0);
    }
    let raw = |g: f64| -> Result<f64> { Ok(lambda / (lambda - model.laplace_exponent(c, g)?) * (1.0 - g / q)) };
    let gap = (model.laplace_exponent(c, gamma)? - lambda).abs();
    across_removable(raw, gamma, gap < SINGULAR_GAP * lambda, q)
}

/// `E exp(-gamma sup_{t<inf} (X(t) - c t)) = gamma phi'(0) / phi(gamma)`.
fn laplace_sup_inf(model: &LevyModel, c: f64, gamma: f64) -> Result<f64> {
    let slope = model.laplace_exponent_slope0(c);
    if !(slope > 0.0) {
        return Err(Error::UnsupportedRegime(format!(
            "infinite horizon needs a positive net drift c2 - E X(1), got {slope}"
        )));
    }
    if gamma == 0.0 {
        return Ok(1.0);
    }
    Ok(gamma * slope / model.laplace_exponent(c, gamma)?)
}

/// `E exp(-gamma sup_{t<T+V} (X(t) - c(t)))` with `T ~ Exp(lambda)`, slope
/// `c1` before `T` and `c2` after, for `gamma > phi_1^{-1}(lambda)`.
pub fn laplace_sup_broken(query: &LaplaceQuery, v: &RandomHorizonSpec) -> Result<f64> {
    query.validate()?;
    v.validate()?;
    let LaplaceQuery { model, c1, c2, lambda, gamma } = *query;
    let q = model.laplace_exponent_inverse(c1, lambda)?;
    if !(gamma > q) {
        return Err(Error::domain(format!("gamma = {gamma} must exceed the inverse exponent {q} at lambda = {lambda}")));
    }
    let q2 = match v {
        RandomHorizonSpec::Exponential { theta } => model.laplace_exponent_inverse(c2, *theta)?,
        _ => f64::NAN,
    };
    let after = |g: f64| -> Result<f64> {
        match v {
            RandomHorizonSpec::Infinite => laplace_sup_inf(&model, c2, g),
            RandomHorizonSpec::Exponential { theta } => exp_t_with_root(&model, c2, g, *theta, q2),
            RandomHorizonSpec::Custom(l) => Ok(l(g)),
        }
    };
    let lq = after(q)?;
    let full = |g: f64| -> Result<f64> {
        let before = exp_t_with_root(&model, c1, g, lambda, q)?;
        let bracket = (1.0 - after(g)?) / g - (1.0 - lq) / q;
        Ok(before + g * lambda / (model.laplace_exponent(c1, g)? - lambda) * bracket)
    };
    let gap = (model.laplace_exponent(c1, gamma)? - lambda).abs();
    let v = across_removable(full, gamma, gap < SINGULAR_GAP * lambda, q)?;
    if !v.is_finite() {
        return Err(Error::Inversion { lambda });
    }
    Ok(v)
}

fn brownian_inverse(c: f64, lambda: f64) -> f64 {
    // sqrt(c^2 + 2 lambda) - c without cancellation for large c.
    2.0 * lambda / ((c * c + 2.0 * lambda).sqrt() + c)
}

fn check_brownian_args(c1: f64, c2: f64, lambda: f64, gamma: f64) -> Result<f64> {
    require_finite("c1", c1)?;
    require_positive("c2", c2)?;
    require_positive("lambda", lambda)?;
    let q = brownian_inverse(c1, lambda);
    if !(gamma > q) {
        return Err(Error::domain(format!("gamma = {gamma} must exceed sqrt(c1^2 + 2 lambda) - c1 = {q}")));
    }
    Ok(q)
}

/// Brownian motion, `V = inf`.
pub fn brownian_laplace_inf(c1: f64, c2: f64, lambda: f64, gamma: f64) -> Result<f64> {
    let q = check_brownian_args(c1, c2, lambda, gamma)?;
    let r = (c1 * c1 + 2.0 * lambda).sqrt();
    let phi1 = 0.5 * gamma * gamma + c1 * gamma - lambda;
    let phi2 = 0.5 * gamma * gamma + c2 * gamma;
    let phi2q = c1 * c1 + lambda + (c2 - c1) * r - c1 * c2;
    if phi1.abs() < SINGULAR_GAP * lambda {
        // Both phi_1(gamma) - lambda and phi_2(gamma) - phi_2(q) carry the factor gamma - q.
        let m = 0.5 * (gamma + q);
        return Ok(gamma * lambda * c2 * (m + c2) / ((m + c1) * phi2 * phi2q));
    }
    let num = gamma * lambda * c2 * (0.5 * gamma * gamma + c2 * gamma - c1 * c1 - lambda - (c2 - c1) * r + c1 * c2);
    Ok(num / (phi1 * phi2 * phi2q))
}

/// Brownian motion, `V ~ Exp(theta)`.
pub fn brownian_laplace_exp_exp(c1: f64, c2: f64, lambda: f64, theta: f64, gamma: f64) -> Result<f64> {
    let q = check_brownian_args(c1, c2, lambda, gamma)?;
    require_positive("theta", theta)?;
    let r1 = (c1 * c1 + 2.0 * lambda).sqrt();
    let r2 = (c2 * c2 + 2.0 * theta).sqrt();
    let q2 = brownian_inverse(c2, theta);
    let phi1 = 0.5 * gamma * gamma + c1 * gamma - lambda;
    let d_q = theta - c1 * c1 - lambda - (c2 - c1) * r1 + c1 * c2;
    let d_g = theta - 0.5 * gamma * gamma - c2 * gamma;
    let tiny = |x: f64, s: f64| x.abs() < SINGULAR_GAP * s;
    if tiny(phi1, lambda) || tiny(d_q, theta) || tiny(d_g, theta) {
        // theta - phi_2(x) = (q2 - x)(q2/2 + x/2 + c2), so each ratio
        // (q2 - x)/(theta - phi_2(x)) is 2/(q2 + x + 2 c2), and the bracket
        // carries the factor gamma - q shared with phi_1(gamma) - lambda.
        let s = q2 + 2.0 * c2;
        let bracket_over = 2.0 * (s + gamma + q) / ((s + q) * (s + gamma) * gamma);
        return Ok(lambda * theta * gamma * bracket_over / (q * q2 * (0.5 * (gamma + q) + c1)));
    }
    let first = (r2 - r1 + c1 - c2) / d_q;
    let second = (r1 - c1) * (r2 - c2 - gamma) / (gamma * d_g);
    Ok(gamma * lambda * theta * (first - second) / ((r1 - c1) * (r2 - c2) * phi1))
}
