use ivbounds::bounds::sigma_ustar_interval;
use ivbounds::effects::*;
use ivbounds::model::*;
use ivbounds::simulate::{population_fit, sample, true_effect, DgpConfig};
use ivbounds::stats_core::normal::{norm_cdf, norm_pdf};
use ivbounds::stats_core::rng;
use rand::Rng as _;
use rand_distr::StandardNormal;

fn fit_with(theta: [f64; 2], su2: f64, sv2: f64, suv: f64) -> ReducedFormFit {
    ReducedFormFit {
        theta: theta.to_vec(),
        pi1: vec![1.0],
        pi2: vec![0.0],
        sigma_u2: su2,
        sigma_v2: sv2,
        sigma_uv: suv,
        vcov: None,
        model_kind: ModelKind::Tobit,
        estimator: Estimator::TwoStep,
        loglik: f64::NAN,
        iterations: 0,
    }
}

fn grid_extremes(f: impl Fn(f64) -> f64, iv: Interval, n: usize) -> (f64, f64) {
    (0..=n)
        .map(|i| f(iv.lo + (iv.hi - iv.lo) * i as f64 / n as f64))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

#[test]
fn probability_pe_candidates_match_grid() {
    let mut r = rng::seeded(17);
    for _ in 0..50 {
        let theta = [r.random_range(-3.0..3.0), r.random_range(-3.0..3.0)];
        let h = vec![r.random_range(-2.0..2.0), 1.0];
        let su2: f64 = r.random_range(0.2..6.0);
        let sv2: f64 = r.random_range(0.2..3.0);
        let suv = r.random_range(-0.9f64..0.9) * (su2 * sv2).sqrt();
        let fit = fit_with(theta, su2, sv2, suv);
        let iv = sigma_ustar_interval(theta[0], su2, sv2, suv).unwrap().interval;
        let q = EffectQuery::pe(EffectKind::PeProbability, 0, h.clone());
        let b = pe_bounds(&q, &fit, iv).unwrap();
        let (lo, hi) = grid_extremes(|s| pe_probability(&h, 0, &theta, s), iv, 100_000);
        assert!(b.lower <= lo + 1e-12 && b.upper >= hi - 1e-12);
        assert!((b.lower - lo).abs() < 1e-6 && (b.upper - hi).abs() < 1e-6, "{b:?} vs ({lo}, {hi})");
    }
}

#[test]
fn mean_pe_extrema_are_at_endpoints() {
    let fit = fit_with([2.0, 1.0], 5.0, 2.0, -2.0);
    let iv = Interval { lo: 0.2, hi: 5.0 };
    let h = vec![0.0, 1.0];
    let b = pe_bounds(&EffectQuery::pe(EffectKind::PeTobitMean, 0, h.clone()), &fit, iv).unwrap();
    assert!((b.upper - 2.0 * norm_cdf(1.0 / 0.2f64.sqrt())).abs() < 1e-14);
    assert!((b.lower - 2.0 * norm_cdf(1.0 / 5.0f64.sqrt())).abs() < 1e-14);
    assert_eq!(b.naive, b.lower);
    // with a negative index the effect increases in sigma^2
    let h = vec![-1.0, 1.0];
    let b = pe_bounds(&EffectQuery::pe(EffectKind::PeTobitMean, 0, h), &fit, iv).unwrap();
    assert_eq!(b.argmax_sigma2, 5.0);
    assert_eq!(b.argmin_sigma2, 0.2);
}

/// The APE closed form integrates `x*` out analytically; compare against a
/// direct simulation of `x* | z, w` under the implied structure.
#[test]
fn ape_closed_form_matches_simulated_integration() {
    let cfg = DgpConfig {
        n: 300,
        rho_star: -0.4,
        ..Default::default()
    };
    let d = sample(&cfg, 6);
    let fit = population_fit(&cfg);
    let iv = sigma_ustar_interval(fit.theta1(), fit.sigma_u2, fit.sigma_v2, fit.sigma_uv).unwrap().interval;
    let mut r = rng::seeded(99);
    for s2 in [iv.lo + 0.3, 1.0, iv.hi] {
        let eps2 = (fit.sigma_u2 - s2) / fit.theta1().powi(2);
        let svs = (fit.sigma_v2 - eps2).sqrt();
        let draws = 4000;
        let mut mean_terms = Vec::with_capacity(d.n() * draws);
        let mut prob_terms = Vec::with_capacity(d.n() * draws);
        for i in 0..d.n() {
            let q = fit.pi1[0] * d.z[(i, 0)] + fit.pi2[0] * d.w[(i, 0)];
            for _ in 0..draws {
                let xs = q + svs * r.sample::<f64, _>(StandardNormal);
                let idx = (fit.theta[0] * xs + fit.theta[1] * d.w[(i, 0)]) / s2.sqrt();
                mean_terms.push(norm_cdf(idx) * fit.theta[0]);
                prob_terms.push(norm_pdf(idx) * fit.theta[0] / s2.sqrt());
            }
        }
        for (kind, terms) in [(EffectKind::ApeTobitMean, &mean_terms), (EffectKind::ApeProbability, &prob_terms)] {
            let m = terms.iter().sum::<f64>() / terms.len() as f64;
            let sd = (terms.iter().map(|t| (t - m).powi(2)).sum::<f64>() / terms.len() as f64).sqrt();
            // draws for one i are correlated through q_i; 4 naive SEs are ample here
            let tol = 4.0 * sd / (terms.len() as f64).sqrt() * 4.0;
            let closed = effect_at(&EffectQuery::ape(kind, 0), &fit, &d, s2).unwrap();
            assert!((closed - m).abs() < tol, "{kind:?} s2={s2}: {closed} vs {m} (tol {tol})");
        }
    }
}

#[test]
fn ape_bounds_match_grid_scan() {
    let cfg = DgpConfig {
        n: 500,
        rho_star: 0.5,
        ..Default::default()
    };
    let d = sample(&cfg, 12);
    for fit in [population_fit(&cfg), fit_with([-1.5, 0.5], 3.0, 1.5, 1.1), fit_with([0.7, -2.0], 1.0, 2.5, 0.2)] {
        let iv = sigma_ustar_interval(fit.theta1(), fit.sigma_u2, fit.sigma_v2, fit.sigma_uv).unwrap().interval;
        for kind in [EffectKind::ApeTobitMean, EffectKind::ApeProbability] {
            for j in 0..2 {
                let b = ape_bounds(kind, &fit, &d, j, iv).unwrap();
                let grid = grid_extremes(|s| effect_at(&EffectQuery::ape(kind, j), &fit, &d, s).unwrap(), iv, 2_000);
                assert!(b.lower <= grid.0 + 1e-9 && b.upper >= grid.1 - 1e-9, "{kind:?} j={j}: {b:?} {grid:?}");
                assert!((b.lower - grid.0).abs() < 1e-5 && (b.upper - grid.1).abs() < 1e-5);
            }
        }
    }
}

#[test]
fn effects_at_truth_match_population_values() {
    // sample APE at the true reduced form converges to the population APE
    let cfg = DgpConfig {
        n: 200_000,
        rho_star: 0.3,
        ..Default::default()
    };
    let d = sample(&cfg, 31);
    let fit = population_fit(&cfg);
    for kind in [EffectKind::ApeTobitMean, EffectKind::ApeProbability] {
        let q = EffectQuery::ape(kind, 0);
        let plug = effect_at(&q, &fit, &d, 1.0).unwrap();
        let truth = true_effect(&cfg, &q).unwrap();
        assert!((plug - truth).abs() < 5e-3, "{kind:?}: {plug} vs {truth}");
    }
}

#[test]
fn average_effect_requires_positive_denominator() {
    let cfg = DgpConfig { n: 50, ..Default::default() };
    let d = sample(&cfg, 1);
    // sigma_u2 - theta1^2 sigma_v2 = 5 - 8 < 0, so a tiny s2 is still fine here
    let fit = fit_with([2.0, 1.0], 5.0, 2.0, -2.0);
    assert!(ape_denominator2(&fit, 0.01) > 0.0);
    // but not when sigma_u2 dominates
    let fit = fit_with([0.5, 1.0], 5.0, 1.0, 0.3);
    assert!(ape_denominator2(&fit, 0.1) < 0.0);
    assert!(effect_at(&EffectQuery::ape(EffectKind::ApeTobitMean, 0), &fit, &d, 0.1).is_err());
}
