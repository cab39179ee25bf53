//! Two companies sharing the claims `X` in proportions `delta_1 + delta_2 = 1`.
//! Company `i` is ruined once `X(t) > u_i + c_i t` with `u_i = x_i / delta_i`,
//! `c_i = p_i / delta_i`.

use crate::closedforms::brownian_sup_broken_inf;
use crate::error::{require_positive, Error, Result};
use crate::models::{BrokenDrift, LevyModel};
use crate::quadrature::QuadConfig;
use crate::supdist::{sup_broken_sp, sup_linear_sp, sup_linear_sp_inf, Horizon};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoCompanyParams {
    pub x1: f64,
    pub x2: f64,
    pub p1: f64,
    pub p2: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub model: LevyModel,
}

impl TwoCompanyParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("x1", self.x1), ("x2", self.x2), ("p1", self.p1), ("p2", self.p2)] {
            require_positive(name, v)?;
        }
        require_positive("delta1", self.delta1)?;
        require_positive("delta2", self.delta2)?;
        if (self.delta1 + self.delta2 - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!("delta1 + delta2 must be 1, got {}", self.delta1 + self.delta2)));
        }
        self.model.validate()?;
        if !self.model.spectral_sign().allows_positive() {
            return Err(Error::domain(format!("claim process {} must be spectrally positive", self.model.name())));
        }
        Ok(())
    }
}

/// Ruin lines `u_i + c_i t` and the time they cross, if they do at `t > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedParams {
    pub u1: f64,
    pub u2: f64,
    pub c1: f64,
    pub c2: f64,
    pub crossing: Option<f64>,
}

pub fn reduce(params: &TwoCompanyParams) -> Result<ReducedParams> {
    params.validate()?;
    let u1 = params.x1 / params.delta1;
    let u2 = params.x2 / params.delta2;
    let c1 = params.p1 / params.delta1;
    let c2 = params.p2 / params.delta2;
    let (du, dc) = (u2 - u1, c1 - c2);
    let crossing = if du != 0.0 && dc != 0.0 && (du > 0.0) == (dc > 0.0) { Some(du / dc) } else { None };
    Ok(ReducedParams { u1, u2, c1, c2, crossing })
}

/// Level and slopes of the min (`lower = true`) or max envelope of the two
/// lines, shifted so the envelope starts at zero.
struct Envelope {
    level: f64,
    first: f64,
    second: f64,
    crossing: Option<f64>,
}

fn envelope(r: &ReducedParams, lower: bool) -> Envelope {
    // The envelope starts on the line with the smaller (or larger) intercept;
    // ties go to the smaller (or larger) slope, which then binds throughout.
    let one_first = match r.u1.partial_cmp(&r.u2) {
        Some(std::cmp::Ordering::Less) => lower,
        Some(std::cmp::Ordering::Greater) => !lower,
        _ => (r.c1 <= r.c2) == lower,
    };
    let (level, first, second) = if one_first { (r.u1, r.c1, r.c2) } else { (r.u2, r.c2, r.c1) };
    Envelope { level, first, second, crossing: r.crossing }
}

fn sup_over_envelope(model: &LevyModel, env: &Envelope, horizon: &Horizon, cfg: &QuadConfig) -> Result<f64> {
    let linear = |c: f64| -> Result<f64> {
        match *horizon {
            Horizon::Infinite => Ok(sup_linear_sp_inf(model, c, env.level, cfg)?.value),
            Horizon::Finite { s } => Ok(sup_linear_sp(model, c, env.level, s, cfg)?.value),
        }
    };
    let t = match (env.crossing, horizon) {
        (None, _) => return linear(env.first),
        (Some(t), Horizon::Finite { s }) if t >= *s => return linear(env.first),
        (Some(t), _) => t,
    };
    if let (LevyModel::BrownianStandard, Horizon::Infinite) = (model, horizon) {
        return brownian_sup_broken_inf(env.first, env.second, t, env.level);
    }
    let drift = BrokenDrift::new(env.first, env.second, t)?;
    Ok(sup_broken_sp(model, &drift, env.level, horizon, cfg)?.probability)
}

/// Probability that at least one company is ruined.
pub fn psi_or(params: &TwoCompanyParams, horizon: &Horizon, cfg: &QuadConfig) -> Result<f64> {
    let r = reduce(params)?;
    sup_over_envelope(&params.model, &envelope(&r, true), horizon, cfg)
}

/// Probability that both companies are ruined at the same instant.
pub fn psi_sim(params: &TwoCompanyParams, horizon: &Horizon, cfg: &QuadConfig) -> Result<f64> {
    let r = reduce(params)?;
    sup_over_envelope(&params.model, &envelope(&r, false), horizon, cfg)
}

/// Ruin probability of a single line `u + c t`.
pub fn psi_single(model: &LevyModel, u: f64, c: f64, horizon: &Horizon, cfg: &QuadConfig) -> Result<f64> {
    match *horizon {
        Horizon::Infinite => Ok(sup_linear_sp_inf(model, c, u, cfg)?.value),
        Horizon::Finite { s } => Ok(sup_linear_sp(model, c, u, s, cfg)?.value),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AndResult {
    /// `psi_1 + psi_2 - psi_or` clamped to `[0, 1]`.
    pub value: f64,
    pub raw: f64,
}

/// Probability that both companies are eventually ruined.
pub fn psi_and(params: &TwoCompanyParams, horizon: &Horizon, cfg: &QuadConfig) -> Result<AndResult> {
    let r = reduce(params)?;
    let p1 = psi_single(&params.model, r.u1, r.c1, horizon, cfg)?;
    let p2 = psi_single(&params.model, r.u2, r.c2, horizon, cfg)?;
    let raw = p1 + p2 - psi_or(params, horizon, cfg)?;
    Ok(AndResult { value: raw.clamp(0.0, 1.0), raw })
}

/// All ruin quantities for one parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuinReport {
    pub reduced: ReducedParams,
    pub psi1: f64,
    pub psi2: f64,
    pub psi_or: f64,
    pub psi_sim: f64,
    pub psi_and: f64,
    pub psi_and_raw: f64,
}

pub fn ruin_report(params: &TwoCompanyParams, horizon: &Horizon, cfg: &QuadConfig) -> Result<RuinReport> {
    let reduced = reduce(params)?;
    let psi1 = psi_single(&params.model, reduced.u1, reduced.c1, horizon, cfg)?;
    let psi2 = psi_single(&params.model, reduced.u2, reduced.c2, horizon, cfg)?;
    let or = psi_or(params, horizon, cfg)?;
    let sim = psi_sim(params, horizon, cfg)?;
    let raw = psi1 + psi2 - or;
    Ok(RuinReport { reduced, psi1, psi2, psi_or: or, psi_sim: sim, psi_and: raw.clamp(0.0, 1.0), psi_and_raw: raw })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(x: (f64, f64), p: (f64, f64)) -> TwoCompanyParams {
        TwoCompanyParams { x1: x.0, x2: x.1, p1: p.0, p2: p.1, delta1: 0.5, delta2: 0.5, model: LevyModel::brownian() }
    }

    #[test]
    fn reduction_examples() {
        let r = reduce(&params((1.0, 2.0), (1.0, 1.0))).unwrap();
        assert_eq!((r.u1, r.u2, r.c1, r.c2, r.crossing), (2.0, 4.0, 2.0, 2.0, None));
        let r = reduce(&params((1.0, 3.0), (2.0, 1.0))).unwrap();
        assert_eq!((r.u1, r.u2, r.c1, r.c2, r.crossing), (2.0, 6.0, 4.0, 2.0, Some(2.0)));
        let r = reduce(&params((2.0, 1.0), (1.0, 2.0))).unwrap();
        assert_eq!((r.u1, r.u2, r.c1, r.c2, r.crossing), (4.0, 2.0, 2.0, 4.0, Some(1.0)));
    }

    #[test]
    fn shares_must_sum_to_one() {
        let mut p = params((1.0, 1.0), (1.0, 1.0));
        p.delta2 = 0.6;
        assert!(reduce(&p).is_err());
    }

    #[test]
    fn envelopes_pick_the_right_line() {
        let r = ReducedParams { u1: 2.0, u2: 6.0, c1: 4.0, c2: 2.0, crossing: Some(2.0) };
        let lo = envelope(&r, true);
        assert_eq!((lo.level, lo.first, lo.second), (2.0, 4.0, 2.0));
        let hi = envelope(&r, false);
        assert_eq!((hi.level, hi.first, hi.second), (6.0, 2.0, 4.0));
    }
}
