use levy_breakdrift::quadrature::{integrate, integrate_nested, integrate_semi_infinite, QuadConfig};
use levy_breakdrift::special::norm_cdf;
use proptest::prelude::*;
use std::cell::Cell;
use std::f64::consts::PI;

fn kernel(t: f64, z: f64, u: f64, s: f64) -> f64 {
    let r = t - s;
    if r <= 0.0 || s <= 0.0 {
        return 0.0;
    }
    (-z * z / (2.0 * r) - u * u / (2.0 * s)).exp() / (r.powf(1.5) * s.sqrt())
}

/// Composite trapezoid; the kernel and all its derivatives vanish at both
/// ends, so the rule converges faster than any power of the step.
fn trapezoid<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = 0.5 * (f(a) + f(b));
    for i in 1..n {
        s += f(a + i as f64 * h);
    }
    s * h
}

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

// Dense trapezoid at (T, z, u) = (1, 1, 1), confirmed at 30 digits; also
// equal to sqrt(2 pi) e^{-2} by convolving the first-passage density with
// the Gaussian.
const INNER_1_1_1: f64 = 0.339_235_247_516_088_2;

#[test]
fn simple_examples() {
    let cfg = QuadConfig::default();
    assert!((integrate(|x| x, 0.0, 1.0, &cfg).unwrap().value - 0.5).abs() < 1e-15);
    assert!((integrate(|x| x.powf(-0.5), 0.0, 1.0, &cfg).unwrap().value - 2.0).abs() < 1e-8);
    let e = integrate_semi_infinite(|x| (-x).exp(), 0.0, &cfg, |b| (-b).exp()).unwrap();
    assert!((e.value - 1.0).abs() < 1e-8);
    let e = integrate_semi_infinite(|x| x * (-x * x / 2.0).exp(), 0.0, &cfg, |b| (-b * b / 2.0).exp()).unwrap();
    assert!((e.value - 1.0).abs() < 1e-8);
}

#[test]
fn identity_inner_integral_against_dense_rule() {
    let oracle = trapezoid(|s| kernel(1.0, 1.0, 1.0, s), 0.0, 1.0, 200_000);
    assert!((oracle - INNER_1_1_1).abs() < 1e-12, "{oracle}");
    assert!((INNER_1_1_1 - (2.0 * PI).sqrt() * (-2.0f64).exp()).abs() < 1e-14);
    let cfg = QuadConfig::default().with_tolerance(1e-13, 1e-13);
    let v = integrate(|s| kernel(1.0, 1.0, 1.0, s), 0.0, 1.0, &cfg).unwrap();
    assert!((v.value - INNER_1_1_1).abs() < 1e-12, "{}", v.value);
}

#[test]
fn identity_outer_integral_semi_infinite() {
    // int_0^inf z e^{-z} I(z) dz = 2 pi e^{3/2} Phi(-2) at (c, T, u) = (1, 1, 1).
    let cfg = QuadConfig::default().with_tolerance(1e-11, 1e-11);
    let inner = |z: f64| integrate(|s| kernel(1.0, z, 1.0, s), 0.0, 1.0, &cfg).unwrap().value;
    let tail = |b: f64| 2.0 * PI * (-(1.0 + b) * (1.0 + b) / 2.0).exp();
    let v = integrate_semi_infinite(|z| z * (-z).exp() * inner(z), 0.0, &QuadConfig::default(), tail).unwrap();
    let want = 2.0 * PI * 1.5f64.exp() * norm_cdf(-2.0);
    assert!((v.value - want).abs() < 1e-7, "{} vs {want}", v.value);
}

#[test]
fn nested_examples() {
    let cfg = QuadConfig::default();
    let v = integrate_nested(|_, v| v, |_, _| 1.0, (0.0, 1.0), |_| (0.0, 1.0), &cfg).unwrap();
    assert!((v.value - 1.0).abs() < 1e-14);
    let v = integrate_nested(|z, v| z * v, |_, s| s, (0.0, 1.0), |_| (0.0, 1.0), &cfg).unwrap();
    assert!((v.value - 0.25).abs() < 1e-14);
}

#[test]
fn nested_broken_b2_double_integral() {
    // (c1, c2, T, u) = (1, 0.5, 1, 1): the B2 weight is z e^{(c1 - 2 c2) z} = z,
    // so the double integral is int_0^inf z I(z) dz = 2 pi Phi(-1).
    let (t, u) = (1.0, 1.0);
    let cfg = QuadConfig::default().with_tolerance(1e-11, 1e-11);
    let v = integrate_nested(|z, v| z * v, |z, s| kernel(t, z, u, s), (0.0, 14.0), |_| (0.0, t), &cfg).unwrap();
    // Tensor grid. With T - s = z^2 / v^2 the inner factor becomes
    // z I(z) = 2 int_{z/sqrt T}^inf e^{-v^2/2} g(T - z^2/v^2) dv, g(s) = s^{-1/2} e^{-u^2/2s},
    // which is smooth in log v; Simpson in z, trapezoid in log v.
    let g = |s: f64| if s > 0.0 { (-u * u / (2.0 * s)).exp() / s.sqrt() } else { 0.0 };
    let zi = |z: f64| {
        if z == 0.0 {
            return (2.0 * PI).sqrt() * g(t);
        }
        let h = |y: f64| {
            let v = y.exp();
            v * (-v * v / 2.0).exp() * g(t - z * z / (v * v))
        };
        2.0 * trapezoid(h, (z / t.sqrt()).ln(), 12f64.ln(), 3000)
    };
    let grid = simpson(zi, 0.0, 14.0, 3000);
    let want = 2.0 * PI * norm_cdf(-1.0);
    assert!((v.value - want).abs() < 1e-9, "{} vs {want}", v.value);
    assert!((grid - want).abs() < 1e-10, "{grid}");
}

#[test]
fn open_rule_never_touches_endpoints() {
    let hit = Cell::new(false);
    let cfg = QuadConfig::default().with_hint(Some(-0.5));
    integrate(
        |x| {
            if x == 0.0 || x == 2.0 {
                hit.set(true);
            }
            x.powf(-0.5) * (2.0 - x).powf(-0.5)
        },
        0.0,
        2.0,
        &QuadConfig { max_subdivisions: 200, ..cfg },
    )
    .ok();
    assert!(!hit.get());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn linearity(a in -3.0f64..3.0, b in -3.0f64..3.0, k in 0.5f64..6.0, p in 0.1f64..2.0) {
        let cfg = QuadConfig::default();
        let f = |x: f64| (k * x).sin();
        let g = |x: f64| (-p * x).exp() * x.sqrt();
        let lhs = integrate(|x| a * f(x) + b * g(x), 0.0, 2.0, &cfg).unwrap();
        let (ef, eg) = (integrate(f, 0.0, 2.0, &cfg).unwrap(), integrate(g, 0.0, 2.0, &cfg).unwrap());
        let rhs = a * ef.value + b * eg.value;
        let tol = 4.0 * (cfg.abs_tol + cfg.rel_tol * (a.abs() * ef.value.abs() + b.abs() * eg.value.abs()));
        prop_assert!((lhs.value - rhs).abs() <= tol.max(1e-12), "{} {}", lhs.value, rhs);
    }

    #[test]
    fn tighter_tolerance_does_not_increase_error(k in 0.5f64..20.0, tol in 1e-10f64..1e-5) {
        let f = |x: f64| (k * x).cos() / (1.0 + x * x);
        let loose = integrate(f, 0.0, 3.0, &QuadConfig::default().with_tolerance(tol, tol)).unwrap();
        let tight = integrate(f, 0.0, 3.0, &QuadConfig::default().with_tolerance(tol / 2.0, tol / 2.0)).unwrap();
        prop_assert!(tight.err_est <= loose.err_est);
    }
}
