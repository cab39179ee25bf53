//! Path simulation of the same probabilities and transforms the analytic
//! modules compute, with standard errors.
//!
//! Every path owns a ChaCha8 stream keyed by `(seed, path index)`. Paths are
//! grouped in fixed chunks of `CHUNK` and the chunk statistics are merged in
//! a pairwise tree, so results do not depend on the number of threads.

mod path;
mod sampling;

pub use path::SupScheme;

use crate::error::{require_finite, require_nonnegative, require_positive, Error, Result};
use crate::laplace::RandomHorizonSpec;
use crate::models::{BrokenDrift, LevyModel};
use crate::quadrature::QuadConfig;
use crate::ruin::{reduce, TwoCompanyParams};
use crate::supdist::{sup_linear_sp_inf, Horizon};
use path::{crossing_probability, sampled_sup, Layout, PathGen, Skeleton};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const CHUNK: u64 = 4096;
/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "LEVY_BREAKDRIFT_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    pub n_paths: u64,
    /// Grid spacing; `None` means 1e-3 up to horizon 10 and `horizon / 1e4` beyond.
    pub grid_step: Option<f64>,
    pub seed: u64,
    /// Pair every Brownian path with its mirror image.
    pub antithetic: bool,
    pub scheme: SupScheme,
    /// Cap on grid steps (or sticks) summed over all paths.
    pub max_work: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig { n_paths: 100_000, grid_step: None, seed: 0, antithetic: false, scheme: SupScheme::Grid, max_work: 5e10 }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths < 10_000 {
            return Err(Error::domain(format!("n_paths must be at least 10000, got {}", self.n_paths)));
        }
        if let Some(h) = self.grid_step {
            require_positive("grid_step", h)?;
        }
        require_positive("max_work", self.max_work)
    }

    fn step_for(&self, horizon: f64) -> f64 {
        self.grid_step.unwrap_or(if horizon <= 10.0 { 1e-3 } else { horizon * 1e-4 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BiasNote {
    /// The supremum is read on a grid and is biased downwards.
    #[serde(rename = "grid-sup-downward")]
    GridSupDownward,
    #[serde(rename = "none")]
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub n_paths: u64,
    pub bias_note: BiasNote,
}

/// Count, mean and centred sum of squares of a block of samples.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(a: Moments, b: Moments) -> Moments {
        if a.n == 0.0 {
            return b;
        }
        if b.n == 0.0 {
            return a;
        }
        let n = a.n + b.n;
        let d = b.mean - a.mean;
        Moments { n, mean: a.mean + d * b.n / n, m2: a.m2 + b.m2 + d * d * a.n * b.n / n }
    }
}

fn pairwise(items: &[Moments]) -> Moments {
    match items.len() {
        0 => Moments::default(),
        1 => items[0],
        n => Moments::merge(pairwise(&items[..n / 2]), pairwise(&items[n / 2..])),
    }
}

/// Runs `f` under the thread cap from `LEVY_BREAKDRIFT_THREADS`, if set.
pub fn with_thread_cap<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    let cap = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|&n| n > 0);
    match cap.and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}

/// Averages `f` over `units` independent draws. Each unit gets its own
/// stream; `f` may keep scratch space in the per-chunk `Skeleton`.
fn run_units<F>(seed: u64, units: u64, f: F) -> Moments
where
    F: Fn(&mut ChaCha8Rng, &mut Skeleton) -> f64 + Sync,
{
    let chunks = units.div_ceil(CHUNK);
    let parts: Vec<Moments> = with_thread_cap(|| {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut sk = Skeleton::default();
                let mut m = Moments::default();
                for i in c * CHUNK..((c + 1) * CHUNK).min(units) {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(i);
                    m.push(f(&mut rng, &mut sk));
                }
                m
            })
            .collect()
    });
    pairwise(&parts)
}

/// Shared driver: budget check, antithetic pairing, and the error on a
/// partial run. `per_path(rng, sk, flip)` returns one sample.
fn simulate<F>(model: &LevyModel, cfg: &McConfig, work_per_path: f64, bias: BiasNote, per_path: F) -> Result<McEstimate>
where
    F: Fn(&mut ChaCha8Rng, &mut Skeleton, bool) -> f64 + Sync,
{
    cfg.validate()?;
    if cfg.antithetic && !matches!(model, LevyModel::BrownianStandard) {
        return Err(Error::domain("antithetic pairing is only available for Brownian motion"));
    }
    let per_unit = if cfg.antithetic { 2 } else { 1 };
    let requested_units = cfg.n_paths.div_ceil(per_unit);
    let affordable = (cfg.max_work / (work_per_path.max(1.0) * per_unit as f64)).floor();
    let units = if affordable < requested_units as f64 { affordable as u64 } else { requested_units };
    if units == 0 {
        return Err(Error::McBudget { achieved: 0, requested: cfg.n_paths, partial: None });
    }
    let m = if cfg.antithetic {
        run_units(cfg.seed, units, |rng, sk| {
            let mut twin = rng.clone();
            let a = per_path(rng, sk, false);
            let b = per_path(&mut twin, sk, true);
            0.5 * (a + b)
        })
    } else {
        run_units(cfg.seed, units, |rng, sk| per_path(rng, sk, false))
    };
    let stderr = if m.n > 1.0 { (m.m2 / (m.n - 1.0) / m.n).sqrt() } else { 0.0 };
    let est = McEstimate { estimate: m.mean, stderr, n_paths: units * per_unit, bias_note: bias };
    if units < requested_units {
        return Err(Error::McBudget { achieved: est.n_paths, requested: cfg.n_paths, partial: Some((est.estimate, est.stderr)) });
    }
    Ok(est)
}

fn bias_for(model: &LevyModel, scheme: SupScheme) -> BiasNote {
    match (scheme, model) {
        (SupScheme::StickBreaking, _) | (SupScheme::Grid, LevyModel::BrownianStandard) => BiasNote::None,
        _ => BiasNote::GridSupDownward,
    }
}

/// Line `u + c1 t` up to `tau`, slope `c2` afterwards.
#[derive(Debug, Clone, Copy)]
struct Line {
    u: f64,
    c1: f64,
    c2: f64,
    tau: f64,
}

impl Line {
    fn straight(u: f64, c: f64) -> Self {
        Line { u, c1: c, c2: c, tau: f64::INFINITY }
    }

    fn at(&self, t: f64) -> f64 {
        if t <= self.tau {
            self.u + self.c1 * t
        } else {
            self.u + self.c1 * self.tau + self.c2 * (t - self.tau)
        }
    }
}

/// Bound on the probability that `X(t) - c t` started below zero first
/// goes above zero after time `h`: `P(Y(h) > -a h) + psi_inf(c, a h)` with
/// `Y(s) = X(s) - c s` and `a` half the net drift.
fn tail_envelope(model: &LevyModel, c: f64, h: f64) -> Result<f64> {
    let a = 0.5 * (c - model.mean_rate());
    if !(a > 0.0) {
        return Err(Error::UnsupportedRegime(format!(
            "slope {c} does not exceed the mean rate {} of the {} model; the infinite horizon has no finite window",
            model.mean_rate(),
            model.name()
        )));
    }
    let first = model.survival((c - a) * h, h)?;
    let second = sup_linear_sp_inf(model, c, a * h, &QuadConfig::default())?.value;
    Ok(first + second)
}

/// Smallest `h = 2^k` with `tail_envelope(sum over slopes) <= target`.
fn window_for(model: &LevyModel, slopes: &[f64], target: f64) -> Result<f64> {
    let mut h = 1.0;
    for _ in 0..60 {
        let mut bound = 0.0;
        for &c in slopes {
            bound += tail_envelope(model, c, h)?;
        }
        if bound <= target {
            return Ok(h);
        }
        h *= 2.0;
    }
    Err(Error::Truncation { point: h, bound: target })
}

/// Infinite horizons: simulate on `[0, tau + h]`, doubling `h` until the
/// tail envelope is below a third of the standard error.
fn with_window(
    model: &LevyModel,
    slopes: &[f64],
    cfg: &McConfig,
    mut run: impl FnMut(f64) -> Result<McEstimate>,
) -> Result<McEstimate> {
    let mut target = 0.5 / (3.0 * (cfg.n_paths as f64).sqrt());
    loop {
        let h = window_for(model, slopes, target)?;
        let est = run(h)?;
        if est.stderr == 0.0 || est.stderr / 3.0 >= target {
            return Ok(est);
        }
        target = est.stderr / 3.0;
        let h2 = window_for(model, slopes, target)?;
        if h2 <= h {
            return Ok(est);
        }
    }
}

fn require_sp(model: &LevyModel) -> Result<()> {
    model.validate()?;
    if !model.spectral_sign().allows_positive() {
        return Err(Error::domain("model is not spectrally positive"));
    }
    Ok(())
}

/// `P(sup_{t <= S} (X(t) - u - b(t)) > 0)` for the broken drift `b`.
pub fn simulate_sup_broken(model: &LevyModel, drift: &BrokenDrift, u: f64, horizon: &Horizon, cfg: &McConfig) -> Result<McEstimate> {
    require_sp(model)?;
    drift.validate()?;
    require_nonnegative("u", u)?;
    horizon.validate_against(drift)?;
    let line = Line { u, c1: drift.c1, c2: drift.c2, tau: drift.t_break };
    let tau = drift.t_break;
    let fixed = |s: f64| -> Result<McEstimate> {
        let layout = Layout { tau: Some(tau), s };
        let h = cfg.step_for(s);
        let gen = PathGen::new(model, cfg.scheme, h);
        simulate(model, cfg, layout.work(cfg.scheme, h), bias_for(model, cfg.scheme), |rng, sk, flip| {
            gen.fill(&layout, flip, rng, sk);
            crossing_probability(sk, |t| line.at(t))
        })
    };
    match *horizon {
        Horizon::Finite { s } => fixed(s),
        Horizon::Infinite => with_window(model, &[drift.c2], cfg, |h| fixed(tau + h)),
    }
}

/// `P(sup_{t <= S} (X(t) - c t) > u)`.
pub fn simulate_sup_linear(model: &LevyModel, c: f64, u: f64, horizon: &Horizon, cfg: &McConfig) -> Result<McEstimate> {
    require_sp(model)?;
    require_finite("c", c)?;
    require_nonnegative("u", u)?;
    horizon.validate()?;
    let line = Line::straight(u, c);
    let fixed = |s: f64| -> Result<McEstimate> {
        let layout = Layout { tau: None, s };
        let h = cfg.step_for(s);
        let gen = PathGen::new(model, cfg.scheme, h);
        simulate(model, cfg, layout.work(cfg.scheme, h), bias_for(model, cfg.scheme), |rng, sk, flip| {
            gen.fill(&layout, flip, rng, sk);
            crossing_probability(sk, |t| line.at(t))
        })
    };
    match *horizon {
        Horizon::Finite { s } => fixed(s),
        Horizon::Infinite => with_window(model, &[c], cfg, fixed),
    }
}

/// Ruin event of the two-company model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwoCompanyEvent {
    /// At least one company is ruined.
    Or,
    /// Both companies are ruined at the same instant.
    Sim,
    /// Both companies are ruined, not necessarily together.
    And,
}

/// Simulates one claim path per sample and checks both ruin lines.
pub fn simulate_two_company(params: &TwoCompanyParams, horizon: &Horizon, cfg: &McConfig, event: TwoCompanyEvent) -> Result<McEstimate> {
    let r = reduce(params)?;
    horizon.validate()?;
    let model = &params.model;
    let l1 = Line::straight(r.u1, r.c1);
    let l2 = Line::straight(r.u2, r.c2);
    let fixed = |s: f64| -> Result<McEstimate> {
        let layout = Layout { tau: r.crossing, s };
        let h = cfg.step_for(s);
        let gen = PathGen::new(model, cfg.scheme, h);
        simulate(model, cfg, layout.work(cfg.scheme, h), bias_for(model, cfg.scheme), |rng, sk, flip| {
            gen.fill(&layout, flip, rng, sk);
            match event {
                TwoCompanyEvent::Sim => crossing_probability(sk, |t| l1.at(t).max(l2.at(t))),
                TwoCompanyEvent::Or => crossing_probability(sk, |t| l1.at(t).min(l2.at(t))),
                TwoCompanyEvent::And => {
                    let p1 = crossing_probability(sk, |t| l1.at(t));
                    let p2 = crossing_probability(sk, |t| l2.at(t));
                    let or = crossing_probability(sk, |t| l1.at(t).min(l2.at(t)));
                    (p1 + p2 - or).max(0.0)
                }
            }
        })
    };
    match *horizon {
        Horizon::Finite { s } => fixed(s),
        Horizon::Infinite => {
            let t0 = r.crossing.unwrap_or(0.0);
            with_window(model, &[r.c1, r.c2], cfg, |h| fixed(t0 + h))
        }
    }
}

/// `E exp(-gamma sup_{t <= T + V} (X(t) - b(t)))` with `T ~ Exp(lambda)`,
/// slope `c1` before `T` and `c2` after, and `V` independent of `X` and `T`.
pub fn simulate_laplace_transform(
    model: &LevyModel,
    c1: f64,
    c2: f64,
    lambda: f64,
    v: &RandomHorizonSpec,
    gamma: f64,
    cfg: &McConfig,
) -> Result<McEstimate> {
    require_sp(model)?;
    require_finite("c1", c1)?;
    require_finite("c2", c2)?;
    require_positive("lambda", lambda)?;
    require_nonnegative("gamma", gamma)?;
    v.validate()?;
    let one = |extra: &(dyn Fn(&mut ChaCha8Rng) -> f64 + Sync), mean_extra: f64| -> Result<McEstimate> {
        let mean_s = 1.0 / lambda + mean_extra;
        let h = cfg.step_for(mean_s);
        let gen = PathGen::new(model, cfg.scheme, h);
        let work = Layout { tau: Some(1.0 / lambda), s: mean_s }.work(cfg.scheme, h);
        simulate(model, cfg, work, bias_for(model, cfg.scheme), |rng, sk, flip| {
            let t: f64 = rng.sample::<f64, _>(Exp1) / lambda;
            let s = t + extra(rng);
            let line = Line { u: 0.0, c1, c2, tau: t };
            gen.fill(&Layout { tau: Some(t), s }, flip, rng, sk);
            let m = sampled_sup(sk, |x| line.at(x), rng).max(0.0);
            (-gamma * m).exp()
        })
    };
    match *v {
        RandomHorizonSpec::Exponential { theta } => one(&|rng| rng.sample::<f64, _>(Exp1) / theta, 1.0 / theta),
        RandomHorizonSpec::Infinite => with_window(model, &[c2], cfg, |h| one(&|_| h, h)),
        RandomHorizonSpec::Custom(_) => Err(Error::domain("a custom horizon transform cannot be sampled")),
    }
}

/// `E exp(-gamma sup_{t <= T} (X(t) - c t))` with `T ~ Exp(lambda)`.
pub fn simulate_laplace_exp_t(model: &LevyModel, c: f64, gamma: f64, lambda: f64, cfg: &McConfig) -> Result<McEstimate> {
    require_sp(model)?;
    require_finite("c", c)?;
    require_positive("lambda", lambda)?;
    require_nonnegative("gamma", gamma)?;
    let h = cfg.step_for(1.0 / lambda);
    let gen = PathGen::new(model, cfg.scheme, h);
    let work = Layout { tau: None, s: 1.0 / lambda }.work(cfg.scheme, h);
    let line = Line::straight(0.0, c);
    simulate(model, cfg, work, bias_for(model, cfg.scheme), |rng, sk, flip| {
        let t: f64 = rng.sample::<f64, _>(Exp1) / lambda;
        gen.fill(&Layout { tau: None, s: t }, flip, rng, sk);
        (-gamma * sampled_sup(sk, |x| line.at(x), rng).max(0.0)).exp()
    })
}

/// Histogram estimate of `P(sup_{t<T} (X(t) - c t) <= u, X(T) - c T in dz) / dz`
/// over the bin `[z - width/2, z + width/2]`.
pub fn simulate_joint_sup_endpoint(model: &LevyModel, c: f64, u: f64, t: f64, z: f64, width: f64, cfg: &McConfig) -> Result<McEstimate> {
    model.validate()?;
    require_finite("c", c)?;
    require_nonnegative("u", u)?;
    require_positive("T", t)?;
    require_finite("z", z)?;
    require_positive("width", width)?;
    let layout = Layout { tau: None, s: t };
    let h = cfg.step_for(t);
    let gen = PathGen::new(model, cfg.scheme, h);
    let line = Line::straight(u, c);
    simulate(model, cfg, layout.work(cfg.scheme, h), bias_for(model, cfg.scheme), |rng, sk, flip| {
        gen.fill(&layout, flip, rng, sk);
        let end = sk.pts.last().expect("endpoint").1 - c * t;
        if (end - z).abs() > 0.5 * width {
            return 0.0;
        }
        (1.0 - crossing_probability(sk, |x| line.at(x))) / width
    })
}

/// Same target at two grid spacings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridStability {
    pub coarse: McEstimate,
    pub fine: McEstimate,
    /// `|fine - coarse| <= 3 sqrt(se_coarse^2 + se_fine^2)`.
    pub stable: bool,
}

pub fn grid_stability(
    cfg: &McConfig,
    coarse_step: f64,
    fine_step: f64,
    run: impl Fn(&McConfig) -> Result<McEstimate>,
) -> Result<GridStability> {
    let coarse = run(&McConfig { grid_step: Some(coarse_step), ..*cfg })?;
    let fine = run(&McConfig { grid_step: Some(fine_step), ..*cfg })?;
    let stable = (fine.estimate - coarse.estimate).abs() <= 3.0 * coarse.stderr.hypot(fine.stderr);
    Ok(GridStability { coarse, fine, stable })
}

/// Kolmogorov-Smirnov comparison of CMS draws with the model distribution
/// function at `t = 1`. The distribution function is evaluated at `knots`
/// sample quantiles; monotonicity brackets the statistic between
/// `d_lower` and `d_upper`, and `p_value` is computed from `d_upper`, so it
/// never overstates the fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsReport {
    pub n: u64,
    pub d_lower: f64,
    pub d_upper: f64,
    pub p_value: f64,
}

pub fn cms_calibration(alpha: f64, n: u64, knots: usize, seed: u64) -> Result<KsReport> {
    let model = LevyModel::stable(alpha)?;
    if n < 2 || knots < 2 {
        return Err(Error::domain("need at least two samples and two knots"));
    }
    let cms = sampling::Cms::new(alpha);
    let chunks = n.div_ceil(CHUNK);
    let mut xs: Vec<f64> = with_thread_cap(|| {
        (0..chunks)
            .into_par_iter()
            .flat_map_iter(|c| {
                (c * CHUNK..((c + 1) * CHUNK).min(n)).map(move |i| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(i);
                    cms.sample(&mut rng)
                })
            })
            .collect()
    });
    xs.sort_by(f64::total_cmp);
    let nf = n as f64;
    let idx: Vec<usize> = (1..knots).map(|j| ((j as f64 / knots as f64) * nf) as usize).collect();
    let cdf: Vec<f64> = with_thread_cap(|| idx.par_iter().map(|&k| model.cdf(xs[k], 1.0)).collect::<Result<Vec<_>>>())?;
    // Knots with F and F_n (just after and just before each knot), padded by the ends.
    let mut rows = vec![(0.0, 0.0, 0.0)];
    rows.extend(idx.iter().zip(&cdf).map(|(&k, &f)| (f, (k + 1) as f64 / nf, k as f64 / nf)));
    rows.push((1.0, 1.0, 1.0));
    let mut lo: f64 = 0.0;
    let mut hi: f64 = 0.0;
    for w in rows.windows(2) {
        let ((f0, after0, _), (f1, _, before1)) = (w[0], w[1]);
        hi = hi.max(before1 - f0).max(f1 - after0);
    }
    for &(f, after, before) in &rows[1..rows.len() - 1] {
        lo = lo.max((after - f).abs()).max((before - f).abs());
    }
    let sq = nf.sqrt();
    let p_value = kolmogorov_survival((sq + 0.12 + 0.11 / sq) * hi);
    Ok(KsReport { n, d_lower: lo, d_upper: hi, p_value })
}

/// `P(K > x)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 1.0 {
        let c = std::f64::consts::PI * std::f64::consts::PI / (8.0 * x * x);
        let s: f64 = (1..=20).map(|k| (-((2 * k - 1) as f64).powi(2) * c).exp()).sum();
        return (1.0 - (2.0 * std::f64::consts::PI).sqrt() / x * s).clamp(0.0, 1.0);
    }
    let s: f64 = (1..=100).map(|k| {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        sign * (-2.0 * (k * k) as f64 * x * x).exp()
    }).sum();
    (2.0 * s).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_merge_matches_direct_moments() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 1013) as f64 / 1013.0).collect();
        let parts: Vec<Moments> = xs
            .chunks(64)
            .map(|c| {
                let mut m = Moments::default();
                c.iter().for_each(|&x| m.push(x));
                m
            })
            .collect();
        let m = pairwise(&parts);
        let mean = xs.iter().sum::<f64>() / 1000.0;
        let m2: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
        assert!((m.mean - mean).abs() < 1e-14);
        assert!((m.m2 - m2).abs() < 1e-10 * m2);
    }

    #[test]
    fn kolmogorov_reference_points() {
        // Classical critical values: P(K > 1.358) = 0.05, P(K > 1.628) = 0.01.
        assert!((kolmogorov_survival(1.358_099) - 0.05).abs() < 1e-4);
        assert!((kolmogorov_survival(1.627_624) - 0.01).abs() < 1e-4);
        assert!((kolmogorov_survival(0.5) - 0.963_945_243_664_794_6).abs() < 1e-9);
    }
}
