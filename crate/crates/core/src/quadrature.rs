//! Adaptive Gauss-Kronrod quadrature on open subintervals.
//!
//! Every formula in the crate goes through this engine. Integrands are
//! never evaluated at an interval endpoint, so kernels such as
//! `(T - s)^{-3/2}` can be passed as they are.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Semi-infinite ranges are cut where the tail bound drops below this.
    pub tail_cutoff_mass: f64,
    /// Exponent `p` of an `(x - a)^p` factor at the left endpoint.
    pub singularity_exponent_hint: Option<f64>,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            abs_tol: 1e-8,
            rel_tol: 1e-8,
            max_subdivisions: 2000,
            tail_cutoff_mass: 1e-12,
            singularity_exponent_hint: None,
        }
    }
}

impl QuadConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.abs_tol) || !positive(self.rel_tol) || !positive(self.tail_cutoff_mass) {
            return Err(Error::domain("quadrature tolerances must be finite and > 0"));
        }
        if self.max_subdivisions < 10 {
            return Err(Error::domain("max_subdivisions must be at least 10"));
        }
        if let Some(p) = self.singularity_exponent_hint {
            if !(p > -1.0 && p.is_finite()) {
                return Err(Error::domain(format!("singularity exponent {p} is not integrable")));
            }
        }
        Ok(())
    }

    pub fn with_tolerance(mut self, abs_tol: f64, rel_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_hint(mut self, p: Option<f64>) -> Self {
        self.singularity_exponent_hint = p;
        self
    }

    /// Same configuration with both tolerances multiplied by `factor`.
    pub fn scaled(self, factor: f64) -> Self {
        let (a, r) = (self.abs_tol * factor, self.rel_tol * factor);
        self.with_tolerance(a, r)
    }

    pub fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

/// A quadrature value together with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub err_est: f64,
}

impl Estimate {
    pub fn new(value: f64, err_est: f64) -> Self {
        Estimate { value, err_est }
    }
}

// 21-point Kronrod abscissae and weights with the embedded 10-point Gauss weights.
const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077958109831074,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

fn open_node(x: f64, a: f64, b: f64) -> f64 {
    if x <= a {
        a.next_up()
    } else if x >= b {
        b.next_down()
    } else {
        x
    }
}

/// One 21-point Kronrod panel. Returns (value, error estimate).
fn qk21<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(open_node(center, a, b));
    let mut res_k = fc * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = (fc * WGK[10]).abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(open_node(center - dx, a, b));
        let f2 = f(open_node(center + dx, a, b));
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * res_abs;
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) && floor > err {
        err = floor;
    }
    (value, err)
}

#[derive(Debug)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
    order: usize,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err
            .total_cmp(&other.err)
            .then_with(|| other.order.cmp(&self.order))
    }
}

/// Global adaptive refinement starting from the partition `points`.
fn adaptive<F: Fn(f64) -> f64 + ?Sized>(f: &F, points: &[f64], cfg: &QuadConfig) -> Result<Estimate> {
    let mut heap = BinaryHeap::new();
    let mut order = 0usize;
    let mut frozen = Estimate::new(0.0, 0.0);
    for w in points.windows(2) {
        let (value, err) = qk21(f, w[0], w[1]);
        heap.push(Panel { a: w[0], b: w[1], value, err, order });
        order += 1;
    }
    let mut splits = 0usize;
    loop {
        let (mut value, mut err) = (frozen.value, frozen.err_est);
        for p in heap.iter() {
            value += p.value;
            err += p.err;
        }
        if !value.is_finite() || !err.is_finite() {
            return Err(Error::NonConvergence { value, err_est: f64::INFINITY });
        }
        if err <= cfg.target(value) {
            return Ok(Estimate::new(value, err));
        }
        let Some(worst) = heap.pop() else {
            return Err(Error::NonConvergence { value, err_est: err });
        };
        let mid = 0.5 * (worst.a + worst.b);
        if splits >= cfg.max_subdivisions {
            heap.push(worst);
            return Err(Error::NonConvergence { value, err_est: err });
        }
        if !(mid > worst.a && mid < worst.b) || (worst.b - worst.a) < 1e3 * f64::MIN_POSITIVE {
            // Cannot be bisected further in floating point.
            frozen.value += worst.value;
            frozen.err_est += worst.err;
            continue;
        }
        splits += 1;
        let (v1, e1) = qk21(f, worst.a, mid);
        let (v2, e2) = qk21(f, mid, worst.b);
        heap.push(Panel { a: worst.a, b: mid, value: v1, err: e1, order });
        heap.push(Panel { a: mid, b: worst.b, value: v2, err: e2, order: order + 1 });
        order += 2;
    }
}

fn check_interval(a: f64, b: f64) -> Result<()> {
    if !(a.is_finite() && b.is_finite()) || !(a < b) {
        return Err(Error::domain(format!("invalid integration interval ({a}, {b})")));
    }
    Ok(())
}

/// Integrates `f` over `(a, b)`.
///
/// With `singularity_exponent_hint = Some(p)` the map
/// `x = a + (b - a) y^{1/(1+p)}` removes an `(x - a)^p` factor first.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<Estimate> {
    cfg.validate()?;
    check_interval(a, b)?;
    match cfg.singularity_exponent_hint {
        Some(p) if p < 0.0 => {
            let q = 1.0 / (1.0 + p);
            let len = b - a;
            let g = |y: f64| {
                let x = a + len * y.powf(q);
                if x <= a || x >= b {
                    return 0.0;
                }
                f(x) * len * q * y.powf(q - 1.0)
            };
            adaptive(&g, &[0.0, 1.0], cfg)
        }
        _ => adaptive(&f, &[a, b], cfg),
    }
}

/// Integrates over `(points[0], points[last])`, seeding the refinement with
/// the given breakpoints. Useful when the integrand has a sharp peak at a
/// known location.
pub fn integrate_partitioned<F: Fn(f64) -> f64>(f: F, points: &[f64], cfg: &QuadConfig) -> Result<Estimate> {
    cfg.validate()?;
    if points.len() < 2 {
        return Err(Error::domain("need at least two breakpoints"));
    }
    for w in points.windows(2) {
        check_interval(w[0], w[1])?;
    }
    adaptive(&f, points, cfg)
}

/// Integrates over `(a, inf)`, truncating at the first `b = a + 2^k`
/// where `tail_bound(b) < cfg.tail_cutoff_mass`. The bound at the cut is
/// added to the error estimate.
pub fn integrate_semi_infinite<F, B>(f: F, a: f64, cfg: &QuadConfig, tail_bound: B) -> Result<Estimate>
where
    F: Fn(f64) -> f64,
    B: Fn(f64) -> f64,
{
    integrate_semi_infinite_scaled(f, a, 1.0, cfg, tail_bound)
}

/// As [`integrate_semi_infinite`] with the first trial width `width0`.
pub fn integrate_semi_infinite_scaled<F, B>(
    f: F,
    a: f64,
    width0: f64,
    cfg: &QuadConfig,
    tail_bound: B,
) -> Result<Estimate>
where
    F: Fn(f64) -> f64,
    B: Fn(f64) -> f64,
{
    let b = truncation_point(a, width0, cfg.tail_cutoff_mass, &tail_bound)?;
    let tail = tail_bound(b).abs();
    let est = integrate(f, a, b, cfg)?;
    Ok(Estimate::new(est.value, est.err_est + tail))
}

pub(crate) fn truncation_point<B: Fn(f64) -> f64>(a: f64, width0: f64, cutoff: f64, tail_bound: &B) -> Result<f64> {
    let mut width = width0;
    for _ in 0..80 {
        let b = a + width;
        let bound = tail_bound(b);
        if bound.abs() < cutoff {
            return Ok(b);
        }
        width *= 2.0;
    }
    let b = a + width;
    Err(Error::Truncation { point: b, bound: tail_bound(b) })
}

/// Integrates a fallible integrand. The first error raised by `f` aborts
/// the result (the engine still finishes the current panel).
pub fn integrate_fallible<F>(f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<Estimate>
where
    F: Fn(f64) -> Result<f64>,
{
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let g = |x: f64| {
        if failure.borrow().is_some() {
            return 0.0;
        }
        match f(x) {
            Ok(v) => v,
            Err(e) => {
                *failure.borrow_mut() = Some(e);
                0.0
            }
        }
    };
    let out = integrate(g, a, b, cfg);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    out
}

/// Fallible counterpart of [`integrate_partitioned`].
pub fn integrate_partitioned_fallible<F>(f: F, points: &[f64], cfg: &QuadConfig) -> Result<Estimate>
where
    F: Fn(f64) -> Result<f64>,
{
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let g = |x: f64| {
        if failure.borrow().is_some() {
            return 0.0;
        }
        match f(x) {
            Ok(v) => v,
            Err(e) => {
                *failure.borrow_mut() = Some(e);
                0.0
            }
        }
    };
    let out = integrate_partitioned(g, points, cfg);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    out
}

/// Evaluates `int outer(z, int inner(z, s) ds) dz` over `z_range`, with the
/// inner range `s_range(z)`.
///
/// Tolerances are split evenly: the outer level gets half of `cfg`, the
/// inner level half divided by the outer width. Inner errors accumulate
/// into the reported estimate; an inner failure is returned tagged with
/// its `z`.
pub fn integrate_nested<O, I, R>(
    outer: O,
    inner: I,
    z_range: (f64, f64),
    s_range: R,
    cfg: &QuadConfig,
) -> Result<Estimate>
where
    O: Fn(f64, f64) -> f64,
    I: Fn(f64, f64) -> f64,
    R: Fn(f64) -> (f64, f64),
{
    cfg.validate()?;
    let (z0, z1) = z_range;
    check_interval(z0, z1)?;
    let outer_cfg = cfg.scaled(0.5);
    let width = z1 - z0;
    let inner_cfg = QuadConfig { singularity_exponent_hint: cfg.singularity_exponent_hint, ..cfg.scaled(0.5 / width.max(1.0)) };
    let inner_err = RefCell::new(0.0);
    let est = integrate_fallible(
        |z| {
            let (s0, s1) = s_range(z);
            if !(s0 < s1) {
                return Ok(outer(z, 0.0));
            }
            let v = integrate(|s| inner(z, s), s0, s1, &inner_cfg)
                .map_err(|e| Error::InnerQuadrature { z, source: Box::new(e) })?;
            *inner_err.borrow_mut() += v.err_est;
            Ok(outer(z, v.value))
        },
        z0,
        z1,
        &QuadConfig { singularity_exponent_hint: None, ..outer_cfg },
    )?;
    // Inner errors were summed over every outer node; scale by the mean weight.
    let nodes = inner_err.into_inner();
    Ok(Estimate::new(est.value, est.err_est + nodes * width / 21.0))
}
