//! Increment samplers for the three model families.

use crate::models::LevyModel;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, Open01, StandardNormal};
use std::f64::consts::PI;

/// Chambers-Mallows-Stuck sampler for the totally skewed unit-scale stable
/// law with characteristic function `exp(-|t|^a (1 - i sign(t) tan(pi a/2)))`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Cms {
    alpha: f64,
    b: f64,
    s: f64,
}

impl Cms {
    pub fn new(alpha: f64) -> Self {
        let tan = (0.5 * PI * alpha).tan();
        Cms { alpha, b: tan.atan() / alpha, s: (1.0 + tan * tan).powf(0.5 / alpha) }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let a = self.alpha;
        let u: f64 = rng.sample(Open01);
        let v = PI * (u - 0.5);
        let w: f64 = rng.sample(Exp1);
        let ab = a * (v + self.b);
        self.s * ab.sin() / v.cos().powf(1.0 / a) * ((v - ab).cos() / w).powf((1.0 - a) / a)
    }
}

/// Gamma(shape, 1). Shapes below one use `G(1 + a) U^{1/a}`, which stays
/// finite (possibly zero) for arbitrarily small shapes.
pub(crate) fn gamma_unit<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape >= 1.0 {
        return Gamma::new(shape, 1.0).expect("shape >= 1").sample(rng);
    }
    let g = Gamma::new(1.0 + shape, 1.0).expect("shape > 0").sample(rng);
    let u: f64 = rng.sample(Open01);
    g * (u.ln() / shape).exp()
}

/// One draw of `X(dt)` without drift. `flip` negates the Gaussian draw
/// (antithetic partner); it is ignored for the jump models.
pub(crate) fn increment<R: Rng + ?Sized>(model: &LevyModel, cms: Option<&Cms>, dt: f64, flip: bool, rng: &mut R) -> f64 {
    match *model {
        LevyModel::BrownianStandard => {
            let z: f64 = rng.sample(StandardNormal);
            let z = if flip { -z } else { z };
            dt.sqrt() * z
        }
        LevyModel::GammaProcess { delta } => gamma_unit(dt, rng) / delta,
        LevyModel::AlphaStable { alpha } => dt.powf(1.0 / alpha) * cms.expect("stable sampler").sample(rng),
    }
}

/// Steps whose Gamma(h) increment falls below `G e^{-GAMMA_CUT}` are set to zero.
pub(crate) const GAMMA_CUT: f64 = 40.0;

/// Gamma-process increments on `n` equal steps of length `h`, reported as
/// `(step index, increment)` for the steps that are not negligible. The gaps
/// between reported steps are geometric, so the cost is about
/// `GAMMA_CUT * n * h` draws instead of `n`.
pub(crate) fn gamma_grid_events<R: Rng + ?Sized>(h: f64, n: usize, delta: f64, rng: &mut R, mut on_event: impl FnMut(usize, f64)) {
    let rate = GAMMA_CUT * h;
    let p = -(-rate).exp_m1();
    let big = Gamma::new(1.0 + h, 1.0).expect("shape > 0");
    let mut j = 0usize;
    loop {
        let e: f64 = rng.sample(Exp1);
        let skip = (e / rate).floor();
        if skip >= (n - j) as f64 {
            return;
        }
        j += skip as usize;
        let w: f64 = rng.random();
        // U uniform on (e^{-rate}, 1].
        let ln_u = (-p * w).ln_1p();
        let g = big.sample(rng);
        on_event(j, g * (ln_u / h).exp() / delta);
        j += 1;
        if j >= n {
            return;
        }
    }
}
