//! Path skeletons: finite sets of `(t, X(t))` points from which the supremum
//! of `X - b` over a piecewise linear barrier `b` is read off.

use super::sampling::{gamma_grid_events, increment, Cms};
use crate::models::LevyModel;
use rand::Rng;
use rand_distr::Open01;
use serde::{Deserialize, Serialize};

/// How a path is discretized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SupScheme {
    /// Equally spaced grid; the supremum is taken over grid points. Brownian
    /// paths add the exact bridge correction between grid points.
    #[default]
    Grid,
    /// Faces of the concave majorant from uniform stick-breaking, which gives
    /// the exact supremum over every segment where the barrier is linear.
    StickBreaking,
}

/// Sticks are broken until the unbroken rest is below this fraction of the segment.
const STICK_REST: f64 = 1e-16;

#[derive(Default)]
pub(crate) struct Skeleton {
    pub pts: Vec<(f64, f64)>,
    /// Consecutive points are Brownian grid neighbours.
    pub bridge: bool,
    sticks: Vec<(f64, f64)>,
}

/// Time layout of one path: `[0, s]`, split at `tau` when the barrier has a kink there.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Layout {
    pub tau: Option<f64>,
    pub s: f64,
}

impl Layout {
    fn segments(&self) -> impl Iterator<Item = (f64, f64)> {
        let (first, second) = match self.tau {
            Some(t) if t > 0.0 && t < self.s => ((0.0, t), Some((t, self.s))),
            _ => ((0.0, self.s), None),
        };
        std::iter::once(first).chain(second)
    }

    /// Grid steps (or sticks, about 40 per segment) a path costs.
    pub fn work(&self, scheme: SupScheme, h: f64) -> f64 {
        self.segments()
            .map(|(a, b)| match scheme {
                SupScheme::Grid => ((b - a) / h).ceil(),
                SupScheme::StickBreaking => 40.0,
            })
            .sum()
    }
}

pub(crate) struct PathGen<'a> {
    pub model: &'a LevyModel,
    pub cms: Option<Cms>,
    pub scheme: SupScheme,
    pub h: f64,
}

impl<'a> PathGen<'a> {
    pub fn new(model: &'a LevyModel, scheme: SupScheme, h: f64) -> Self {
        let cms = match *model {
            LevyModel::AlphaStable { alpha } => Some(Cms::new(alpha)),
            _ => None,
        };
        PathGen { model, cms, scheme, h }
    }

    pub fn fill<R: Rng + ?Sized>(&self, layout: &Layout, flip: bool, rng: &mut R, sk: &mut Skeleton) {
        sk.pts.clear();
        sk.pts.push((0.0, 0.0));
        sk.bridge = self.scheme == SupScheme::Grid && matches!(self.model, LevyModel::BrownianStandard);
        for (a, b) in layout.segments() {
            match self.scheme {
                SupScheme::Grid => self.grid_segment(a, b, flip, rng, sk),
                SupScheme::StickBreaking => self.stick_segment(a, b, flip, rng, sk),
            }
        }
    }

    fn grid_segment<R: Rng + ?Sized>(&self, a: f64, b: f64, flip: bool, rng: &mut R, sk: &mut Skeleton) {
        let n = ((b - a) / self.h).ceil().max(1.0) as usize;
        let step = (b - a) / n as f64;
        let x0 = sk.pts.last().expect("start point").1;
        let node = |k: usize| if k == n { b } else { a + k as f64 * step };
        if let LevyModel::GammaProcess { delta } = *self.model {
            // Between events the path is flat, so only the ends of each flat
            // stretch matter.
            let mut x = x0;
            let pts = &mut sk.pts;
            gamma_grid_events(step, n, delta, rng, |j, inc| {
                if j > 0 {
                    pts.push((node(j), x));
                }
                x += inc;
                pts.push((node(j + 1), x));
            });
            if pts.last().map(|p| p.0) != Some(b) {
                pts.push((b, x));
            }
            return;
        }
        let mut x = x0;
        for k in 1..=n {
            x += increment(self.model, self.cms.as_ref(), step, flip, rng);
            sk.pts.push((node(k), x));
        }
    }

    fn stick_segment<R: Rng + ?Sized>(&self, a: f64, b: f64, flip: bool, rng: &mut R, sk: &mut Skeleton) {
        let len = b - a;
        sk.sticks.clear();
        let mut rest = len;
        while rest > STICK_REST * len {
            let u: f64 = rng.sample(Open01);
            let l = rest * u;
            rest -= l;
            sk.sticks.push((l, increment(self.model, self.cms.as_ref(), l, flip, rng)));
        }
        if rest > 0.0 {
            sk.sticks.push((rest, increment(self.model, self.cms.as_ref(), rest, flip, rng)));
        }
        sk.sticks.sort_by(|p, q| (q.1 / q.0).total_cmp(&(p.1 / p.0)));
        let (mut t, mut x) = (a, sk.pts.last().expect("start point").1);
        let last = sk.sticks.len() - 1;
        for (i, &(l, dx)) in sk.sticks.iter().enumerate() {
            t = if i == last { b } else { t + l };
            x += dx;
            sk.pts.push((t, x));
        }
    }
}

/// `max (X(t) - b(t))` over the skeleton points.
pub(crate) fn sup_excess(sk: &Skeleton, barrier: impl Fn(f64) -> f64) -> f64 {
    sk.pts.iter().map(|&(t, x)| x - barrier(t)).fold(f64::NEG_INFINITY, f64::max)
}

/// Probability that the path crosses `b`, given the skeleton. This is an
/// indicator except on Brownian grids, where the bridge between neighbours
/// crosses a linear barrier with probability `exp(-2 d0 d1 / h)`.
pub(crate) fn crossing_probability(sk: &Skeleton, barrier: impl Fn(f64) -> f64) -> f64 {
    let mut ln_stay = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for &(t, x) in &sk.pts {
        let d = barrier(t) - x;
        if d < 0.0 {
            return 1.0;
        }
        if let (true, Some((t0, d0))) = (sk.bridge, prev) {
            ln_stay += (-(-2.0 * d0 * d / (t - t0)).exp()).ln_1p();
        }
        prev = Some((t, d));
    }
    -ln_stay.exp_m1()
}

/// Supremum of `X - b`, with the Brownian bridge maximum between grid
/// neighbours drawn exactly when the skeleton is a Brownian grid.
pub(crate) fn sampled_sup<R: Rng + ?Sized>(sk: &Skeleton, barrier: impl Fn(f64) -> f64, rng: &mut R) -> f64 {
    if !sk.bridge {
        return sup_excess(sk, barrier);
    }
    let mut best = f64::NEG_INFINITY;
    let mut prev: Option<(f64, f64)> = None;
    for &(t, x) in &sk.pts {
        let y = x - barrier(t);
        if let Some((t0, y0)) = prev {
            let u: f64 = rng.sample(Open01);
            let m = 0.5 * (y0 + y + ((y - y0).powi(2) - 2.0 * (t - t0) * u.ln()).sqrt());
            best = best.max(m);
        }
        best = best.max(y);
        prev = Some((t, y));
    }
    best
}
