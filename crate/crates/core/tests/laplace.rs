use levy_breakdrift::laplace::*;
use levy_breakdrift::{Error, LevyModel};

fn q(c: f64, lambda: f64) -> f64 {
    (c * c + 2.0 * lambda).sqrt() - c
}

fn query(model: LevyModel, c1: f64, c2: f64, lambda: f64, gamma: f64) -> LaplaceQuery {
    LaplaceQuery { model, c1, c2, lambda, gamma }
}

#[test]
fn generic_matches_brownian_closed_forms() {
    let b = LevyModel::brownian();
    for &c1 in &[0.3, 1.0, 2.5] {
        for &c2 in &[0.5, 1.0, 2.0] {
            for &lambda in &[0.2, 1.0, 4.0] {
                for &dg in &[0.3, 1.0, 3.0] {
                    let g = q(c1, lambda) + dg;
                    let generic = laplace_sup_broken(&query(b, c1, c2, lambda, g), &RandomHorizonSpec::Infinite).unwrap();
                    let closed = brownian_laplace_inf(c1, c2, lambda, g).unwrap();
                    assert!((generic - closed).abs() < 1e-10, "inf ({c1},{c2},{lambda},{g}): {generic} {closed}");
                    for &theta in &[0.5, 1.0, 3.0] {
                        let v = RandomHorizonSpec::Exponential { theta };
                        let generic = laplace_sup_broken(&query(b, c1, c2, lambda, g), &v).unwrap();
                        let closed = brownian_laplace_exp_exp(c1, c2, lambda, theta, g).unwrap();
                        assert!((generic - closed).abs() < 1e-10, "exp ({c1},{c2},{lambda},{theta},{g}): {generic} {closed}");
                    }
                }
            }
        }
    }
}

// Pinned from the generic formula evaluated in 30-digit arithmetic.
#[test]
fn reference_points() {
    let g = 2.0;
    let inf = brownian_laplace_inf(1.0, 2.0, 1.0, g).unwrap();
    let generic = laplace_sup_broken(&query(LevyModel::brownian(), 1.0, 2.0, 1.0, g), &RandomHorizonSpec::Infinite).unwrap();
    assert!((inf - generic).abs() < 1e-10);
    assert!((inf - 0.547_578_136_697_278_8).abs() < 1e-14, "{inf}");
    let ee = brownian_laplace_exp_exp(1.0, 2.0, 1.0, 3.0, 2.5).unwrap();
    assert!((ee - 0.501_016_372_926_091_8).abs() < 1e-14, "{ee}");
}

#[test]
fn equal_slopes_reduce_to_unbroken_transform() {
    for m in [LevyModel::brownian(), LevyModel::gamma(2.0).unwrap(), LevyModel::stable(1.5).unwrap()] {
        let c = 1.2;
        for &lambda in &[0.5, 2.0] {
            let g = m.laplace_exponent_inverse(c, lambda).unwrap() + 0.7;
            let v = laplace_sup_broken(&query(m, c, c, lambda, g), &RandomHorizonSpec::Infinite).unwrap();
            let want = g * m.laplace_exponent_slope0(c) / m.laplace_exponent(c, g).unwrap();
            assert!((v - want).abs() < 1e-10, "{}: {v} vs {want}", m.name());
        }
    }
    assert!((brownian_laplace_inf(0.8, 0.8, 1.0, 2.0).unwrap() - 1.6 / 3.6).abs() < 1e-14);
}

#[test]
fn short_extra_time_limit() {
    let b = LevyModel::brownian();
    let g = q(1.0, 1.0) + 0.5;
    let v = brownian_laplace_exp_exp(1.0, 2.0, 1.0, 1e6, g).unwrap();
    let t_only = laplace_sup_exp_t(&b, 1.0, g, 1.0).unwrap();
    assert!((v - t_only).abs() < 1e-4, "{v} {t_only}");
}

#[test]
fn removable_singularity_is_finite() {
    let (c1, c2, lambda) = (1.0, 2.0, 1.0);
    let q1 = q(c1, lambda);
    let at = brownian_laplace_inf(c1, c2, lambda, q1 + 1e-8).unwrap();
    // Limit from the factored expression.
    let phi2 = |x: f64| 0.5 * x * x + c2 * x;
    let limit = q1 * lambda * c2 * (q1 + c2) / ((q1 + c1) * phi2(q1) * phi2(q1));
    assert!(at.is_finite() && (at - limit).abs() < 1e-7, "{at} {limit}");
    let generic = laplace_sup_broken(&query(LevyModel::brownian(), c1, c2, lambda, q1 * (1.0 + 1e-12)), &RandomHorizonSpec::Infinite)
        .unwrap();
    assert!((generic - limit).abs() < 1e-8, "{generic} {limit}");
    let generic = laplace_sup_broken(
        &query(LevyModel::brownian(), c1, c2, lambda, q1 * (1.0 + 1e-12)),
        &RandomHorizonSpec::Exponential { theta: 3.0 },
    )
    .unwrap();
    let closed = brownian_laplace_exp_exp(c1, c2, lambda, 3.0, q1 * (1.0 + 1e-12)).unwrap();
    let nearby = brownian_laplace_exp_exp(c1, c2, lambda, 3.0, q1 + 1e-6).unwrap();
    assert!((generic - closed).abs() < 1e-8 && (closed - nearby).abs() < 1e-5, "{generic} {closed} {nearby}");
}

#[test]
fn custom_spec_composes() {
    let b = LevyModel::brownian();
    let theta = 1.5;
    let custom = RandomHorizonSpec::Custom(Box::new(move |g| laplace_sup_exp_t(&b, 2.0, g, theta).unwrap()));
    let qy = query(b, 1.0, 2.0, 1.0, 2.0);
    let a = laplace_sup_broken(&qy, &custom).unwrap();
    let e = laplace_sup_broken(&qy, &RandomHorizonSpec::Exponential { theta }).unwrap();
    assert!((a - e).abs() < 1e-15);
}

#[test]
fn domain_and_regime_errors() {
    let b = LevyModel::brownian();
    let q1 = q(1.0, 1.0);
    assert!(matches!(laplace_sup_broken(&query(b, 1.0, 2.0, 1.0, q1), &RandomHorizonSpec::Infinite), Err(Error::Domain(_))));
    assert!(matches!(brownian_laplace_inf(1.0, 2.0, 1.0, 0.5 * q1), Err(Error::Domain(_))));
    let g = LevyModel::gamma(2.0).unwrap();
    let big = g.laplace_exponent_inverse(1.0, 1.0).unwrap() + 1.0;
    assert!(matches!(
        laplace_sup_broken(&query(g, 1.0, 0.4, 1.0, big), &RandomHorizonSpec::Infinite),
        Err(Error::UnsupportedRegime(_))
    ));
    assert!(laplace_sup_broken(&query(g, 1.0, 0.4, 1.0, big), &RandomHorizonSpec::Exponential { theta: 1.0 }).is_ok());
}

#[test]
fn transforms_in_unit_interval_and_completely_monotone() {
    for m in [LevyModel::brownian(), LevyModel::gamma(2.0).unwrap(), LevyModel::stable(1.5).unwrap()] {
        let (c1, c2, lambda) = (1.0, 1.5, 0.8);
        let q1 = m.laplace_exponent_inverse(c1, lambda).unwrap();
        let grid: Vec<f64> = (1..=6).map(|i| q1 + 0.5 * i as f64).collect();
        for v in [RandomHorizonSpec::Infinite, RandomHorizonSpec::Exponential { theta: 2.0 }] {
            let vals: Vec<f64> = grid.iter().map(|&g| laplace_sup_broken(&query(m, c1, c2, lambda, g), &v).unwrap()).collect();
            for w in vals.windows(3) {
                assert!(w.iter().all(|x| *x > 0.0 && *x <= 1.0));
                let (d1, d2) = (w[1] - w[0], w[2] - 2.0 * w[1] + w[0]);
                assert!(d1 <= 0.0 && d2 >= -1e-12, "{}: {w:?}", m.name());
            }
        }
        let vals: Vec<f64> = (0..6).map(|i| laplace_sup_exp_t(&m, c1, 0.5 * i as f64, lambda).unwrap()).collect();
        assert_eq!(vals[0], 1.0);
        assert!(vals.windows(2).all(|w| w[1] <= w[0] && w[1] > 0.0));
    }
}
