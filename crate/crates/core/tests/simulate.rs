use ivbounds::model::{EffectKind, EffectQuery, ModelKind};
use ivbounds::simulate::*;
use ivbounds::stats_core::normal::norm_cdf;

fn small_mc() -> McConfig {
    McConfig::new(DgpConfig { n: 400, ..Default::default() }, vec![-0.5, 0.5], 12, 42)
}

#[test]
fn runs_are_reproducible_across_thread_counts() {
    let cfg = small_mc();
    let pool = |t| rayon::ThreadPoolBuilder::new().num_threads(t).build().unwrap();
    let a = pool(1).install(|| run_mc(&cfg)).unwrap();
    let b = pool(3).install(|| run_mc(&cfg)).unwrap();
    assert_eq!(a.records, b.records);
    assert_eq!(a.summaries, b.summaries);
    // and a different base seed changes the draws
    let mut other = cfg.clone();
    other.base_seed = 43;
    let c = run_mc(&other).unwrap();
    assert_ne!(a.records[0].theta1, c.records[0].theta1);
}

#[test]
fn replications_are_addressable_individually() {
    let cfg = small_mc();
    let res = run_mc(&cfg).unwrap();
    let rec = &res.records[cfg.reps + 5];
    assert_eq!((rec.rho, rec.rep), (0.5, 5));
    let d = sample_with(&cfg.dgp.with_rho(0.5), &mut replication_rng(42, 1, 5));
    let fit = ivbounds::estimate_gaussian::fit_two_step(&d, ModelKind::Tobit).unwrap();
    assert_eq!(fit.theta1(), rec.theta1);
}

#[test]
fn censoring_rate_matches_population() {
    for rho in [-0.6, 0.0, 0.6] {
        let cfg = DgpConfig {
            n: 200_000,
            rho_star: rho,
            ..Default::default()
        };
        let d = sample(&cfg, 7);
        let share = d.y.iter().filter(|&&y| y == 0.0).count() as f64 / d.n() as f64;
        // y* = 2 x* + 1 + u*, var(x*) = 2, cov(x*, u*) = rho
        let p = norm_cdf(-1.0 / (8.0 + 1.0 + 4.0 * rho as f64).sqrt());
        let se = (p * (1.0 - p) / d.n() as f64).sqrt();
        assert!((share - p).abs() < 4.0 * se, "rho={rho}: {share} vs {p}");
        let vx = d.x.iter().map(|x| x * x).sum::<f64>() / d.n() as f64;
        assert!((vx - 3.0).abs() < 0.05);
    }
}

#[test]
fn closed_form_truths() {
    let cfg = DgpConfig::default();
    let pe = true_effect(&cfg, &EffectQuery::pe(EffectKind::PeTobitMean, 0, cfg.mean_point())).unwrap();
    assert!((pe - 2.0 * norm_cdf(1.0)).abs() < 1e-15);
    assert!((pe - 1.68269).abs() < 1e-5);
    let ape = true_effect(&cfg, &EffectQuery::ape(EffectKind::ApeTobitMean, 0)).unwrap();
    assert!((ape - 1.26112).abs() < 1e-5);
    // (2/3) phi(1/3)
    let apep = true_effect(&cfg, &EffectQuery::ape(EffectKind::ApeProbability, 0)).unwrap();
    assert!((apep - 0.251_589).abs() < 1e-6);

    let b = true_pe_bounds(&cfg, EffectKind::PeTobitMean, &cfg.mean_point()).unwrap();
    assert!(b.lower <= pe && pe <= b.upper);
    let iv = true_sigma_interval(&cfg).unwrap();
    assert!((iv.lo - 0.2).abs() < 1e-12 && (iv.hi - 5.0).abs() < 1e-12);
}

#[test]
fn single_component_mixture_truth_matches_closed_form() {
    let cfg = DgpConfig {
        sigma_eps: 0.0,
        mixture: Some(MixtureSpec {
            structural: vec![StructuralComponent {
                weight: 1.0,
                mu_vstar: 0.0,
                sigma_vstar2: 1.0,
                sigma_ustar_vstar: 0.0,
            }],
            error: vec![ErrorComponent {
                weight: 1.0,
                mu: 0.0,
                sigma2: 1.0,
            }],
        }),
        ..Default::default()
    };
    let q = EffectQuery::ape(EffectKind::ApeTobitMean, 0);
    let mc = true_effect(&cfg, &q).unwrap();
    let closed = true_effect(&DgpConfig::default(), &q).unwrap();
    assert!((mc - closed).abs() < 3e-3, "{mc} vs {closed}");
}

#[test]
fn invalid_designs_are_rejected() {
    assert!(DgpConfig { rho_star: 1.0, ..Default::default() }.check().is_err());
    assert!(DgpConfig { sigma_ustar: 0.0, ..Default::default() }.check().is_err());
    let shifted = DgpConfig {
        mixture: Some(MixtureSpec {
            structural: vec![StructuralComponent {
                weight: 1.0,
                mu_vstar: 0.3,
                sigma_vstar2: 1.0,
                sigma_ustar_vstar: 0.0,
            }],
            error: vec![ErrorComponent {
                weight: 1.0,
                mu: 0.0,
                sigma2: 1.0,
            }],
        }),
        ..Default::default()
    };
    assert!(shifted.check().is_err());
    assert!(run_mc(&McConfig::new(DgpConfig::default(), vec![0.0], 0, 1)).is_err());
}

#[test]
fn csv_outputs_have_expected_shape() {
    let res = run_mc(&small_mc()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    res.write_replications(&dir.path().join("r.csv")).unwrap();
    res.write_summary(&dir.path().join("s.csv")).unwrap();
    res.write_long(&dir.path().join("l.csv")).unwrap();
    let lines = |f: &str| std::fs::read_to_string(dir.path().join(f)).unwrap().lines().count();
    assert_eq!(lines("r.csv"), 1 + 24);
    assert_eq!(lines("s.csv"), 1 + 2);
    assert_eq!(lines("l.csv"), 1 + 2 * 10);
    let head = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert!(head.starts_with("rho,reps,failures,true_pe"));
}

#[test]
fn probit_design_runs() {
    let cfg = McConfig::new(
        DgpConfig {
            n: 600,
            kind: ModelKind::Probit,
            ..Default::default()
        },
        vec![0.0],
        10,
        3,
    );
    let res = run_mc(&cfg).unwrap();
    assert_eq!(res.summaries[0].failures, 0);
    let s = &res.summaries[0];
    assert!(s.true_lb <= s.true_pe && s.true_pe <= s.true_ub);
}
