//! Acceptance report. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any fails.

mod common;

use std::fs;
use std::process::Command;
use std::time::Instant;

use common::{censored_by_quadrature, one_row, random_params, two_component_dgp};
use ivbounds::bounds::{implied_structural, implied_structural_unchecked, intersect_component_intervals, sigma_ustar_interval, ComponentCov};
use ivbounds::cli::RunReport;
use ivbounds::effects::{ape_indices, ape_terms, pe_bounds, pe_probability};
use ivbounds::estimate_gaussian::{first_stage, fit_joint_mle, JointObjective, SecondStageObjective};
use ivbounds::mixture::{fit_mixture, mixed_tobit_loglik, mixture_sigma_ustar_interval, MixtureObjective, MixtureOptions};
use ivbounds::model::*;
use ivbounds::simulate::*;
use ivbounds::stats_core::optimize::{central_gradient, Objective};
use ivbounds::stats_core::rng;
use rand::Rng as _;
use rand_distr::StandardNormal;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn c1_bound_formula() -> Outcome {
    let b = sigma_ustar_interval(2.0, 5.0, 2.0, -2.0).unwrap().interval;
    let err = (b.lo - 0.2).abs().max((b.hi - 5.0).abs());
    let s = sigma_ustar_interval(0.0, 5.0, 2.0, -2.0).unwrap().interval;
    let single = s.is_degenerate() && s.lo == 5.0;
    outcome(
        err <= 1e-12 && single,
        format!("[{:.15}, {:.15}], max error {err:.1e}; theta1 = 0 gives [{}, {}]", b.lo, b.hi, s.lo, s.hi),
    )
}

fn c2_sharpness() -> Outcome {
    let t = Instant::now();
    let mut r = rng::seeded(2);
    let (mut worst_rt, mut invalid_inside, mut valid_outside, mut checked_outside) = (0.0f64, 0, 0, 0);
    for _ in 0..1000 {
        let theta1 = r.random_range(0.1..3.0) * if r.random_bool(0.5) { 1.0 } else { -1.0 };
        let su2: f64 = r.random_range(0.1..5.0);
        let sv2: f64 = r.random_range(0.1..5.0);
        let suv = r.random_range(-0.95..0.95) * (su2 * sv2).sqrt();
        let iv = sigma_ustar_interval(theta1, su2, sv2, suv).unwrap().interval;
        for i in 0..10 {
            let s = iv.lo + (i as f64 + 0.5) / 10.0 * (iv.hi - iv.lo);
            let st = implied_structural(s, theta1, su2, sv2, suv).unwrap();
            if !st.is_valid(1e-10) {
                invalid_inside += 1;
            }
            let (a, b, c) = st.reduced_form(theta1);
            worst_rt = worst_rt.max((a - su2).abs()).max((b - sv2).abs()).max((c - suv).abs());
        }
        let mut outside = vec![iv.hi + 1e-6];
        if iv.lo >= 1e-6 {
            outside.push(iv.lo - 1e-6);
        }
        for s in outside {
            checked_outside += 1;
            if implied_structural_unchecked(s, theta1, su2, sv2, suv).is_valid(0.0) {
                valid_outside += 1;
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(
        worst_rt <= 1e-10 && invalid_inside == 0 && valid_outside == 0 && secs < 1.0,
        format!(
            "10^4 interior points: {invalid_inside} invalid, round-trip error {worst_rt:.1e}; {valid_outside}/{checked_outside} outside points valid; {secs:.3}s"
        ),
    )
}

fn c3_figure() -> Outcome {
    let t = Instant::now();
    let grid = vec![-0.9, -0.6, -0.3, 0.0, 0.3, 0.6, 0.9];
    let res = run_mc(&McConfig::new(DgpConfig::default(), grid, 500, 2024)).unwrap();
    let below = res.summaries.iter().all(|s| s.median_naive < s.true_pe);
    let inside = res.summaries.iter().all(|s| s.median_lb <= s.true_pe && s.true_pe <= s.median_ub);
    let width = |rho: f64| res.summaries.iter().find(|s| (s.rho - rho).abs() < 1e-12).unwrap().median_pe_width;
    let (wn, wp) = (width(-0.6), width(0.6));
    let failures: usize = res.summaries.iter().map(|s| s.failures).sum();
    let rows: Vec<String> = res
        .summaries
        .iter()
        .map(|s| format!("{:+.1}:{:.3}<{:.3}<={:.3}", s.rho, s.median_naive, s.true_pe, s.median_ub))
        .collect();
    let secs = t.elapsed().as_secs_f64();
    outcome(
        below && inside && wn > wp && secs < 600.0,
        format!(
            "(a) naive below truth {below}, (b) truth in median [LB, UB] {inside}, (c) width -0.6 {wn:.3} > +0.6 {wp:.3}; naive<true<=UB {}; {failures} failed fits; {secs:.1}s",
            rows.join(" ")
        ),
    )
}

fn c4_coverage() -> Outcome {
    let res = run_mc(&McConfig::new(DgpConfig::default(), vec![-0.5, 0.0, 0.5], 500, 4048)).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for s in &res.summaries {
        ok &= s.coverage_sigma >= 0.93 && s.coverage_pe >= 0.93;
        parts.push(format!(
            "rho {:+.1}: sigma {:.3}, PE {:.3}, naive {:.3}",
            s.rho, s.coverage_sigma, s.coverage_pe, s.coverage_naive
        ));
    }
    let naive0 = res.summaries[1].coverage_naive;
    outcome(ok && naive0 < 0.5, parts.join("; "))
}

fn c5_candidate_rule() -> Outcome {
    let mut r = rng::seeded(5);
    let mut worst = 0.0f64;
    let mut interior = 0;
    let n = 1_000_000;
    for _ in 0..200 {
        let theta: Vec<f64> = vec![r.random_range(-3.0..3.0), r.random_range(-3.0..3.0)];
        let h: Vec<f64> = vec![r.random_range(-2.0..2.0), 1.0];
        let lo = r.random_range(0.05..3.0);
        let iv = Interval {
            lo,
            hi: lo + r.random_range(0.1..5.0),
        };
        let a2 = (theta[0] * h[0] + theta[1]).powi(2);
        if iv.contains(a2) {
            interior += 1;
        }
        let fit = ReducedFormFit {
            theta: theta.clone(),
            pi1: vec![1.0],
            pi2: vec![0.0],
            sigma_u2: iv.hi,
            sigma_v2: 1.0,
            sigma_uv: 0.0,
            vcov: None,
            model_kind: ModelKind::Probit,
            estimator: Estimator::TwoStep,
            loglik: f64::NAN,
            iterations: 0,
        };
        let b = pe_bounds(&EffectQuery::pe(EffectKind::PeProbability, 0, h.clone()), &fit, iv).unwrap();
        let (mut gmin, mut gmax) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..=n {
            let v = pe_probability(&h, 0, &theta, iv.lo + (iv.hi - iv.lo) * i as f64 / n as f64);
            gmin = gmin.min(v);
            gmax = gmax.max(v);
        }
        worst = worst.max((b.lower - gmin).abs()).max((b.upper - gmax).abs());
    }
    outcome(
        worst <= 1e-8,
        format!("200 configurations ({interior} with an interior peak), max deviation from 10^6-point grid {worst:.1e}"),
    )
}

fn c6_ape_closed_forms() -> Outcome {
    let cfg = DgpConfig {
        n: 1_000_000,
        ..Default::default()
    };
    let d = sample(&cfg, 6);
    let fit = population_fit(&cfg);
    let idx = ape_indices(&fit, &d);
    let mut pass = true;
    let mut parts = Vec::new();
    for (kind, reference) in [(EffectKind::ApeTobitMean, 1.26112), (EffectKind::ApeProbability, 0.25194)] {
        let terms = ape_terms(kind, &fit, &idx, 0, cfg.sigma_ustar2()).unwrap();
        let n = terms.len() as f64;
        let m = terms.iter().sum::<f64>() / n;
        let se = (terms.iter().map(|t| (t - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() / n.sqrt();
        let closed = true_effect(&cfg, &EffectQuery::ape(kind, 0)).unwrap();
        let z = (m - closed) / se;
        pass &= z.abs() <= 3.0;
        let zr = (m - reference) / se;
        parts.push(format!(
            "{}: plug-in {m:.6} (se {se:.1e}), closed form {closed:.6} ({z:+.2} se), reference {reference} ({zr:+.2} se)",
            kind.label()
        ));
    }
    // the probability reference is not (2/3) phi(1/3) = 0.251589; see README
    pass &= (true_effect(&cfg, &EffectQuery::ape(EffectKind::ApeTobitMean, 0)).unwrap() - 1.26112).abs() < 1e-5;
    outcome(pass, parts.join("; "))
}

fn c7_mixture() -> Outcome {
    // (a) K = 1 collapses to the Gaussian joint MLE
    let d = sample(&DgpConfig { n: 2000, rho_star: 0.5, ..Default::default() }, 71);
    let g = fit_joint_mle(&d, ModelKind::Tobit).unwrap();
    let m1 = fit_mixture(&d, 1, &MixtureOptions { starts: 2, ..Default::default() }).unwrap();
    let c = m1.params.components[0];
    let mut gauss = g.theta.clone();
    gauss.extend(&g.pi1);
    gauss.extend(&g.pi2);
    gauss.extend([g.sigma_u2, g.sigma_v2, g.sigma_uv]);
    let mut mix = m1.params.theta.clone();
    mix.extend(&m1.params.pi1);
    mix.extend(&m1.params.pi2);
    mix.extend([c.sigma_u2, c.sigma_v2, c.sigma_uv]);
    let collapse = gauss.iter().zip(&mix).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    // (b) two-component recovery at n = 10^5
    let t = Instant::now();
    let cfg = two_component_dgp(100_000);
    let d = sample(&cfg, 72);
    let fit = fit_mixture(&d, 2, &MixtureOptions::default()).unwrap();
    let mut truth = mixture_components(&cfg).unwrap();
    truth.sort_by(|a, b| a.mu_v.total_cmp(&b.mu_v));
    let se = fit.standard_errors().unwrap();
    let est = fit.params.to_vector();
    let mut tru = vec![cfg.theta1, cfg.theta2, cfg.pi1, cfg.pi2];
    for t in &truth {
        tru.extend([t.weight, t.mu_u, t.mu_v, t.sigma_u2, t.sigma_v2, t.sigma_uv]);
    }
    let max_z = est
        .iter()
        .zip(&tru)
        .zip(&se)
        .filter(|(_, s)| **s > 0.0)
        .map(|((e, t), s)| ((e - t) / s).abs())
        .fold(0.0, f64::max);
    let iv2 = mixture_sigma_ustar_interval(&fit.params).unwrap();
    let fit_secs = t.elapsed().as_secs_f64();

    // (c) hand example
    let hand = intersect_component_intervals(&[ComponentCov::new(5.0, 2.0, -2.0), ComponentCov::new(4.0, 2.0, -1.5)], 2.0).unwrap();
    let hand_err = (hand.lo - 0.2).abs().max((hand.hi - 4.0).abs());

    outcome(
        collapse <= 1e-6 && max_z <= 3.0 && hand_err <= 1e-12,
        format!(
            "K=1 vs Gaussian MLE max diff {collapse:.1e}; K=2 n=10^5 max |z| {max_z:.2} over {} params, sigma_ustar2 set [{:.3}, {:.3}] ({fit_secs:.1}s); hand example error {hand_err:.1e}",
            est.len(),
            iv2.lo,
            iv2.hi
        ),
    )
}

fn c8_quadrature() -> Outcome {
    let mut r = rng::seeded(8);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let k = r.random_range(1..4);
        let p = random_params(&mut r, k);
        let (x, z) = (r.random_range(-1.5..1.5), r.random_range(-1.5..1.5));
        let exact = mixed_tobit_loglik(&p, &one_row(0.0, x, 1.0, z)).unwrap();
        worst = worst.max((exact - censored_by_quadrature(&p, x, 1.0, z)).abs());
    }
    outcome(worst <= 1e-8, format!("20 censored evaluations, max |difference| {worst:.1e}"))
}

fn gradient_error(obj: &dyn Objective, p: &[f64]) -> f64 {
    let g = obj.gradient(p);
    let gn = central_gradient(|q| obj.value(q), p);
    g.iter()
        .zip(&gn)
        .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
        .fold(0.0, f64::max)
}

fn c9_gradients() -> Outcome {
    let mut r = rng::seeded(9);
    let mut jitter = |c: &[f64]| -> Vec<f64> { c.iter().map(|c| c + 0.3 * r.sample::<f64, _>(StandardNormal)).collect() };
    let mut parts = Vec::new();
    let mut worst_all = 0.0f64;
    for kind in [ModelKind::Tobit, ModelKind::Probit] {
        let d = sample(&DgpConfig { n: 500, rho_star: 0.4, kind, ..Default::default() }, 90);
        let fs = first_stage(&d).unwrap();
        let second = SecondStageObjective { data: &d, vhat: &fs.residuals, kind };
        let joint = JointObjective { data: &d, kind };
        let (c2, cj) = match kind {
            ModelKind::Tobit => (vec![2.0, 1.0, -0.5, 0.3], vec![2.0, 1.0, 1.0, 0.0, 0.3, 0.8, -0.4]),
            ModelKind::Probit => (vec![1.0, 0.5, -0.3], vec![1.0, 0.5, 1.0, 0.0, 0.3, -0.4]),
        };
        let (mut w2, mut wj) = (0.0f64, 0.0f64);
        for _ in 0..20 {
            w2 = w2.max(gradient_error(&second, &jitter(&c2)));
            wj = wj.max(gradient_error(&joint, &jitter(&cj)));
        }
        parts.push(format!("{kind:?} second stage {w2:.1e}, joint {wj:.1e}"));
        worst_all = worst_all.max(w2).max(wj);
    }
    let d = sample(&DgpConfig { n: 500, rho_star: -0.3, ..Default::default() }, 91);
    let mut r = rng::seeded(92);
    for k in [1, 2, 3] {
        let obj = MixtureObjective::new(&d, k).unwrap();
        let mut w = 0.0f64;
        for _ in 0..20 {
            let p = obj.encode(&random_params(&mut r, k));
            w = w.max(gradient_error(&obj, &p));
        }
        parts.push(format!("mixture K={k} {w:.1e}"));
        worst_all = worst_all.max(w);
    }
    outcome(worst_all <= 1e-5, format!("max relative error: {}", parts.join(", ")))
}

fn run_bin(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_ivbounds")).args(args).output().unwrap()
}

fn c10_cli() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let p = |f: &str| dir.path().join(f).to_str().unwrap().to_string();
    let sim = |out: &str| {
        let o = run_bin(&["simulate", "--rho-grid", "0", "--reps", "20", "--seed", "7", "--export-data", "--outdir", out]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    };
    sim(&p("a"));
    sim(&p("b"));
    let sim_same = ["replications.csv", "summary.csv", "figure.csv", "data_rho0.csv"]
        .iter()
        .all(|f| fs::read(dir.path().join("a").join(f)).unwrap() == fs::read(dir.path().join("b").join(f)).unwrap());

    let data = p("a/data_rho0.csv");
    let fit = |out: &str, extra: &[&str]| {
        let mut args = vec!["fit", &data, "--kind", "tobit", "--y", "y", "--x", "x", "--w", "w0", "--z", "z0", "--out", out];
        args.extend_from_slice(extra);
        let o = run_bin(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        o.stdout
    };
    let t1 = fit(&p("r1.json"), &[]);
    let t2 = fit(&p("r2.json"), &[]);
    let fit_same = fs::read(p("r1.json")).unwrap() == fs::read(p("r2.json")).unwrap() && t1 == t2;
    let report: RunReport = serde_json::from_slice(&fs::read(p("r1.json")).unwrap()).unwrap();
    let nested = report.nesting_holds();

    fit(&p("two.json"), &["--estimator", "two-step", "--at", "values:0,1", "--effects", "pe-mean"]);
    let two: RunReport = serde_json::from_slice(&fs::read(p("two.json")).unwrap()).unwrap();
    let rec: ReplicationRecord = csv::Reader::from_path(p("a/replications.csv")).unwrap().deserialize().next().unwrap().unwrap();
    let e = &two.effects[0];
    let matches_mc = e.lb == rec.pe_lb && e.ub == rec.pe_ub && e.ci_lower == rec.pe_ci_lo && e.ci_upper == rec.pe_ci_hi;

    let row = |k: EffectKind| report.effects.iter().find(|e| e.kind == k).unwrap();
    let (pe, ape) = (row(EffectKind::PeTobitMean), row(EffectKind::ApeTobitMean));
    outcome(
        sim_same && fit_same && nested && matches_mc,
        format!(
            "simulate byte-identical {sim_same}, fit byte-identical {fit_same}, CI contains [LB, UB] on all {} rows {nested}, fit matches MC record {matches_mc}; [LB, UB] width PE {:.3} vs APE {:.3}; CI width / naive CI width: PE {:.2}, APE {:.2}",
            report.effects.len(),
            pe.ub - pe.lb,
            ape.ub - ape.lb,
            (pe.ci_upper - pe.ci_lower) / (pe.naive_ci_upper - pe.naive_ci_lower),
            (ape.ci_upper - ape.ci_lower) / (ape.naive_ci_upper - ape.naive_ci_lower)
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("bound formula exactness", c1_bound_formula),
        ("sharpness round trip", c2_sharpness),
        ("Monte Carlo figure pattern", c3_figure),
        ("coverage", c4_coverage),
        ("probability PE candidate rule", c5_candidate_rule),
        ("APE closed forms", c6_ape_closed_forms),
        ("mixture collapse and recovery", c7_mixture),
        ("censored mixture likelihood vs quadrature", c8_quadrature),
        ("gradient checks", c9_gradients),
        ("CLI end-to-end reproducibility", c10_cli),
    ];
    // ACCEPTANCE_ONLY=3,10 runs a subset
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if only.as_ref().is_some_and(|o| !o.contains(&(i + 1))) {
            continue;
        }
        let t = Instant::now();
        let o = f();
        if !o.pass {
            failed += 1;
        }
        println!(
            "acceptance {:>2} {} {name}: {} [{:.1}s]",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
