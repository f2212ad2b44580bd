//! Data-generating process and Monte Carlo harness.
//!
//! ```text
//! X* = pi1 Z + pi2 W + V*,   X = X* + eps,   Y* = theta1 X* + theta2 W + U*
//! Y  = max(Y*, 0) (Tobit) or 1{Y* > 0} (Probit)
//! ```
//!
//! with `W = 1`, `Z ~ N(0, 1)` and `(U*, V*)` bivariate normal (or a
//! mixture when `mixture` is set).

use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::sigma_ustar_interval;
use crate::effects::{self, ape_denominator2};
use crate::error::{Error, Result};
use crate::estimate_gaussian::fit_two_step;
use crate::inference::{ci_effect_given, ci_sigma_ustar2, BonferroniConfig};
use crate::mixture::Component;
use crate::model::{Dataset, EffectKind, EffectQuery, Estimator, Interval, ModelKind, ReducedFormFit};
use crate::stats_core::normal::{norm_cdf, norm_pdf};
use crate::stats_core::rng::{self, Rng};

/// Structural mixture component of `(U*, V*)`; `U*` has mean zero and the
/// common variance `sigma_ustar^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructuralComponent {
    pub weight: f64,
    pub mu_vstar: f64,
    pub sigma_vstar2: f64,
    pub sigma_ustar_vstar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorComponent {
    pub weight: f64,
    pub mu: f64,
    pub sigma2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub structural: Vec<StructuralComponent>,
    pub error: Vec<ErrorComponent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpConfig {
    pub theta1: f64,
    pub theta2: f64,
    pub sigma_vstar: f64,
    pub sigma_ustar: f64,
    pub sigma_eps: f64,
    pub pi1: f64,
    pub pi2: f64,
    pub rho_star: f64,
    pub n: usize,
    pub kind: ModelKind,
    #[serde(default)]
    pub mixture: Option<MixtureSpec>,
}

impl Default for DgpConfig {
    /// `(theta1, theta2, sigma_v*, sigma_u*, sigma_eps, pi1, pi2) = (2, 1, 1, 1, 1, 1, 0)`, n = 1000.
    fn default() -> Self {
        DgpConfig {
            theta1: 2.0,
            theta2: 1.0,
            sigma_vstar: 1.0,
            sigma_ustar: 1.0,
            sigma_eps: 1.0,
            pi1: 1.0,
            pi2: 0.0,
            rho_star: 0.0,
            n: 1000,
            kind: ModelKind::Tobit,
            mixture: None,
        }
    }
}

impl DgpConfig {
    pub fn check(&self) -> Result<()> {
        if !(self.sigma_vstar > 0.0 && self.sigma_ustar > 0.0 && self.sigma_eps >= 0.0) {
            return Err(Error::Domain("DGP scales must be positive".into()));
        }
        if !(self.rho_star.abs() < 1.0) {
            return Err(Error::Domain(format!("rho_star must lie in (-1, 1), got {}", self.rho_star)));
        }
        if let Some(m) = &self.mixture {
            let sp: f64 = m.structural.iter().map(|c| c.weight).sum();
            let se: f64 = m.error.iter().map(|c| c.weight).sum();
            if m.structural.is_empty() || m.error.is_empty() || (sp - 1.0).abs() > 1e-10 || (se - 1.0).abs() > 1e-10 {
                return Err(Error::Domain("mixture weights must sum to one".into()));
            }
            let su2 = self.sigma_ustar.powi(2);
            for c in &m.structural {
                if !(c.weight > 0.0 && c.sigma_vstar2 > 0.0 && c.sigma_ustar_vstar.powi(2) < su2 * c.sigma_vstar2) {
                    return Err(Error::Domain("invalid structural mixture component".into()));
                }
            }
            if m.error.iter().any(|c| !(c.weight > 0.0 && c.sigma2 >= 0.0)) {
                return Err(Error::Domain("invalid measurement-error component".into()));
            }
            let mv: f64 = m.structural.iter().map(|c| c.weight * c.mu_vstar).sum();
            let me: f64 = m.error.iter().map(|c| c.weight * c.mu).sum();
            if mv.abs() > 1e-10 || me.abs() > 1e-10 {
                return Err(Error::Domain("mixture components must have mean zero".into()));
            }
        }
        Ok(())
    }

    pub fn with_rho(&self, rho: f64) -> DgpConfig {
        DgpConfig {
            rho_star: rho,
            ..self.clone()
        }
    }

    /// Population covariate point `h = (E X*, 1)`.
    pub fn mean_point(&self) -> Vec<f64> {
        vec![self.pi2, 1.0]
    }

    /// `sigma_u*^2`.
    pub fn sigma_ustar2(&self) -> f64 {
        self.sigma_ustar.powi(2)
    }
}

/// Draw a dataset. Deterministic given `seed`.
pub fn sample(cfg: &DgpConfig, seed: u64) -> Dataset {
    sample_with(cfg, &mut rng::seeded(seed))
}

fn pick(weights: impl Iterator<Item = f64>, u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (k, w) in weights.enumerate() {
        acc += w;
        last = k;
        if u < acc {
            return k;
        }
    }
    last
}

pub fn sample_with(cfg: &DgpConfig, rng: &mut Rng) -> Dataset {
    let n = cfg.n;
    let mut y = Vec::with_capacity(n);
    let mut x = Vec::with_capacity(n);
    let mut z = DMatrix::zeros(n, 1);
    let su = cfg.sigma_ustar;
    for i in 0..n {
        let zi: f64 = rng.sample(StandardNormal);
        let e1: f64 = rng.sample(StandardNormal);
        let e2: f64 = rng.sample(StandardNormal);
        let e3: f64 = rng.sample(StandardNormal);
        let (u, v, eps) = match &cfg.mixture {
            None => {
                let r = cfg.rho_star;
                let v = cfg.sigma_vstar * e1;
                let u = su * (r * e1 + (1.0 - r * r).sqrt() * e2);
                (u, v, cfg.sigma_eps * e3)
            }
            Some(m) => {
                let c = &m.structural[pick(m.structural.iter().map(|c| c.weight), rng.random())];
                let e = &m.error[pick(m.error.iter().map(|c| c.weight), rng.random())];
                let sv = c.sigma_vstar2.sqrt();
                let r = c.sigma_ustar_vstar / (su * sv);
                let v = c.mu_vstar + sv * e1;
                let u = su * (r * e1 + (1.0 - r * r).sqrt() * e2);
                (u, v, e.mu + e.sigma2.sqrt() * e3)
            }
        };
        let xstar = cfg.pi1 * zi + cfg.pi2 + v;
        let latent = cfg.theta1 * xstar + cfg.theta2 + u;
        y.push(match cfg.kind {
            ModelKind::Tobit => latent.max(0.0),
            ModelKind::Probit => f64::from(u8::from(latent > 0.0)),
        });
        x.push(xstar + eps);
        z[(i, 0)] = zi;
    }
    Dataset::new(y, x, DMatrix::from_element(n, 1, 1.0), z)
}

/// Analytic reduced-form `(sigma_u2, sigma_v2, sigma_uv)` of the Gaussian design.
pub fn population_moments(cfg: &DgpConfig) -> (f64, f64, f64) {
    let se2 = cfg.sigma_eps.powi(2);
    (
        cfg.sigma_ustar2() + cfg.theta1.powi(2) * se2,
        cfg.sigma_vstar.powi(2) + se2,
        cfg.rho_star * cfg.sigma_ustar * cfg.sigma_vstar - cfg.theta1 * se2,
    )
}

/// Reduced-form mixture components of `(U, V)`.
pub fn mixture_components(cfg: &DgpConfig) -> Option<Vec<Component>> {
    let m = cfg.mixture.as_ref()?;
    let t1 = cfg.theta1;
    let mut out = Vec::new();
    for c in &m.structural {
        for e in &m.error {
            out.push(Component {
                weight: c.weight * e.weight,
                mu_u: -t1 * e.mu,
                mu_v: c.mu_vstar + e.mu,
                sigma_u2: cfg.sigma_ustar2() + t1 * t1 * e.sigma2,
                sigma_v2: c.sigma_vstar2 + e.sigma2,
                sigma_uv: c.sigma_ustar_vstar - t1 * e.sigma2,
            });
        }
    }
    Some(out)
}

/// True reduced form (Gaussian design). For Probit, rescaled so `sigma_u2 = 1`.
pub fn population_fit(cfg: &DgpConfig) -> ReducedFormFit {
    let (su2, sv2, suv) = population_moments(cfg);
    let scale = match cfg.kind {
        ModelKind::Tobit => 1.0,
        ModelKind::Probit => su2.sqrt(),
    };
    ReducedFormFit {
        theta: vec![cfg.theta1 / scale, cfg.theta2 / scale],
        pi1: vec![cfg.pi1],
        pi2: vec![cfg.pi2],
        sigma_u2: su2 / scale.powi(2),
        sigma_v2: sv2,
        sigma_uv: suv / scale,
        vcov: None,
        model_kind: cfg.kind,
        estimator: Estimator::TwoStep,
        loglik: f64::NAN,
        iterations: 0,
    }
}

/// True effect at the structural parameters.
///
/// PEs use `query.h` (or the population mean point). APEs integrate
/// `theta'H* ~ N(m, tau^2)` in closed form for the Gaussian design, and by a
/// seeded 10^6-draw average for mixtures.
pub fn true_effect(cfg: &DgpConfig, query: &EffectQuery) -> Result<f64> {
    let theta = [cfg.theta1, cfg.theta2];
    let j = query.covariate_index;
    if j > 1 {
        return Err(Error::Precondition(format!("covariate index {j} out of range")));
    }
    let s2 = cfg.sigma_ustar2();
    match query.kind {
        EffectKind::PeTobitMean | EffectKind::PeProbability => {
            let h = query.h.clone().unwrap_or_else(|| cfg.mean_point());
            Ok(if query.kind.is_probability() {
                effects::pe_probability(&h, j, &theta, s2)
            } else {
                effects::pe_tobit_mean(&h, j, &theta, s2)
            })
        }
        EffectKind::ApeTobitMean | EffectKind::ApeProbability => {
            let m = cfg.theta1 * cfg.pi2 + cfg.theta2;
            match &cfg.mixture {
                None => {
                    let tau2 = cfg.theta1.powi(2) * (cfg.pi1.powi(2) + cfg.sigma_vstar.powi(2));
                    let dd = (s2 + tau2).sqrt();
                    Ok(if query.kind.is_probability() {
                        norm_pdf(m / dd) / dd * theta[j]
                    } else {
                        norm_cdf(m / dd) * theta[j]
                    })
                }
                Some(_) => {
                    let sd = s2.sqrt();
                    let clean = DgpConfig {
                        n: 1_000_000,
                        sigma_eps: 0.0,
                        mixture: cfg.mixture.as_ref().map(|m| MixtureSpec {
                            structural: m.structural.clone(),
                            error: vec![ErrorComponent {
                                weight: 1.0,
                                mu: 0.0,
                                sigma2: 0.0,
                            }],
                        }),
                        ..cfg.clone()
                    };
                    let d = sample(&clean, 0x5EED);
                    let total: f64 = d
                        .x
                        .iter()
                        .map(|&xs| {
                            let a = (cfg.theta1 * xs + cfg.theta2) / sd;
                            if query.kind.is_probability() {
                                norm_pdf(a) / sd
                            } else {
                                norm_cdf(a)
                            }
                        })
                        .sum();
                    Ok(total / d.n() as f64 * theta[j])
                }
            }
        }
    }
}

/// Population ("true") bounds of the mean PE at `h`, from the analytic reduced form.
pub fn true_pe_bounds(cfg: &DgpConfig, kind: EffectKind, h: &[f64]) -> Result<effects::EffectBounds> {
    let fit = population_fit(cfg);
    let b = sigma_ustar_interval(fit.theta1(), fit.sigma_u2, fit.sigma_v2, fit.sigma_uv)?;
    effects::pe_bounds(&EffectQuery::pe(kind, 0, h.to_vec()), &fit, b.interval)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub dgp: DgpConfig,
    pub rho_grid: Vec<f64>,
    pub reps: usize,
    pub base_seed: u64,
    pub bonferroni: BonferroniConfig,
    /// PE kind reported for `x*` at the population mean point.
    pub effect: EffectKind,
}

impl McConfig {
    pub fn new(dgp: DgpConfig, rho_grid: Vec<f64>, reps: usize, base_seed: u64) -> Self {
        let effect = match dgp.kind {
            ModelKind::Tobit => EffectKind::PeTobitMean,
            ModelKind::Probit => EffectKind::PeProbability,
        };
        McConfig {
            dgp,
            rho_grid,
            reps,
            base_seed,
            bonferroni: BonferroniConfig::default(),
            effect,
        }
    }
}

/// One replication. Estimate fields are NaN when `error` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub rho: f64,
    pub rep: usize,
    pub error: String,
    pub theta1: f64,
    pub sigma_u2: f64,
    pub sigma_v2: f64,
    pub sigma_uv: f64,
    pub sigma_lo: f64,
    pub sigma_hi: f64,
    pub sigma_ci_lo: f64,
    pub sigma_ci_hi: f64,
    pub pe_lb: f64,
    pub pe_ub: f64,
    pub pe_naive: f64,
    pub pe_ci_lo: f64,
    pub pe_ci_hi: f64,
    pub naive_ci_lo: f64,
    pub naive_ci_hi: f64,
    pub covers_sigma: bool,
    pub covers_pe: bool,
    pub naive_covers_pe: bool,
}

impl ReplicationRecord {
    pub fn ok(&self) -> bool {
        self.error.is_empty()
    }

    fn failed(rho: f64, rep: usize, e: &Error) -> Self {
        let nan = f64::NAN;
        ReplicationRecord {
            rho,
            rep,
            error: e.to_string(),
            theta1: nan,
            sigma_u2: nan,
            sigma_v2: nan,
            sigma_uv: nan,
            sigma_lo: nan,
            sigma_hi: nan,
            sigma_ci_lo: nan,
            sigma_ci_hi: nan,
            pe_lb: nan,
            pe_ub: nan,
            pe_naive: nan,
            pe_ci_lo: nan,
            pe_ci_hi: nan,
            naive_ci_lo: nan,
            naive_ci_hi: nan,
            covers_sigma: false,
            covers_pe: false,
            naive_covers_pe: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoSummary {
    pub rho: f64,
    pub reps: usize,
    pub failures: usize,
    pub true_pe: f64,
    pub true_lb: f64,
    pub true_ub: f64,
    pub median_lb: f64,
    pub median_ub: f64,
    pub median_naive: f64,
    pub median_ci_lo: f64,
    pub median_ci_hi: f64,
    pub median_naive_ci_lo: f64,
    pub median_naive_ci_hi: f64,
    pub median_pe_width: f64,
    pub median_sigma_width: f64,
    pub coverage_sigma: f64,
    pub coverage_pe: f64,
    pub coverage_naive: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub config: McConfig,
    pub records: Vec<ReplicationRecord>,
    pub summaries: Vec<RhoSummary>,
}

/// Seeded generator for replication `rep` at grid point `rho_index`.
pub fn replication_rng(base_seed: u64, rho_index: usize, rep: usize) -> Rng {
    rng::stream(base_seed, rng::replication_stream(rho_index, rep))
}

fn replicate(cfg: &McConfig, dgp: &DgpConfig, rho_index: usize, rep: usize, truth_pe: f64) -> Result<ReplicationRecord> {
    let d = sample_with(dgp, &mut replication_rng(cfg.base_seed, rho_index, rep));
    let fit = fit_two_step(&d, dgp.kind)?;
    let identified = sigma_ustar_interval(fit.theta1(), fit.sigma_u2, fit.sigma_v2, fit.sigma_uv)?.interval;
    let ci1 = ci_sigma_ustar2(&fit, &cfg.bonferroni)?;
    let query = EffectQuery::pe(cfg.effect, 0, dgp.mean_point());
    let e = ci_effect_given(&query, &fit, &d, &cfg.bonferroni, ci1.interval, identified)?;
    // Probit truths live on the sigma_u2 = 1 scale; the PE itself is scale free.
    let s_true = true_sigma_ustar2(dgp);
    Ok(ReplicationRecord {
        rho: dgp.rho_star,
        rep,
        error: String::new(),
        theta1: fit.theta1(),
        sigma_u2: fit.sigma_u2,
        sigma_v2: fit.sigma_v2,
        sigma_uv: fit.sigma_uv,
        sigma_lo: identified.lo,
        sigma_hi: identified.hi,
        sigma_ci_lo: ci1.interval.lo,
        sigma_ci_hi: ci1.interval.hi,
        pe_lb: e.bounds.lower,
        pe_ub: e.bounds.upper,
        pe_naive: e.naive,
        pe_ci_lo: e.interval.lo,
        pe_ci_hi: e.interval.hi,
        naive_ci_lo: e.naive_ci.lo,
        naive_ci_hi: e.naive_ci.hi,
        covers_sigma: ci1.interval.contains(s_true),
        covers_pe: e.interval.contains(truth_pe),
        naive_covers_pe: e.naive_ci.contains(truth_pe),
    })
}

fn median(mut v: Vec<f64>) -> f64 {
    v.retain(|x| x.is_finite());
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn summarize(cfg: &McConfig, rho: f64, recs: &[ReplicationRecord]) -> Result<RhoSummary> {
    let dgp = cfg.dgp.with_rho(rho);
    let h = dgp.mean_point();
    let truth = true_effect(&dgp, &EffectQuery::pe(cfg.effect, 0, h.clone()))?;
    let tb = true_pe_bounds(&dgp, cfg.effect, &h)?;
    let ok: Vec<&ReplicationRecord> = recs.iter().filter(|r| r.ok()).collect();
    let col = |f: fn(&ReplicationRecord) -> f64| median(ok.iter().map(|r| f(r)).collect());
    let rate = |f: fn(&ReplicationRecord) -> bool| {
        if ok.is_empty() {
            f64::NAN
        } else {
            ok.iter().filter(|r| f(r)).count() as f64 / ok.len() as f64
        }
    };
    Ok(RhoSummary {
        rho,
        reps: recs.len(),
        failures: recs.len() - ok.len(),
        true_pe: truth,
        true_lb: tb.lower,
        true_ub: tb.upper,
        median_lb: col(|r| r.pe_lb),
        median_ub: col(|r| r.pe_ub),
        median_naive: col(|r| r.pe_naive),
        median_ci_lo: col(|r| r.pe_ci_lo),
        median_ci_hi: col(|r| r.pe_ci_hi),
        median_naive_ci_lo: col(|r| r.naive_ci_lo),
        median_naive_ci_hi: col(|r| r.naive_ci_hi),
        median_pe_width: col(|r| r.pe_ub - r.pe_lb),
        median_sigma_width: col(|r| r.sigma_hi - r.sigma_lo),
        coverage_sigma: rate(|r| r.covers_sigma),
        coverage_pe: rate(|r| r.covers_pe),
        coverage_naive: rate(|r| r.naive_covers_pe),
    })
}

/// Run the Monte Carlo experiment over `cfg.rho_grid`.
pub fn run_mc(cfg: &McConfig) -> Result<McResult> {
    if cfg.reps == 0 {
        return Err(Error::Precondition("reps must be at least 1".into()));
    }
    cfg.dgp.check()?;
    for &r in &cfg.rho_grid {
        cfg.dgp.with_rho(r).check()?;
    }
    let truths: Vec<f64> = cfg
        .rho_grid
        .iter()
        .map(|&r| {
            let dgp = cfg.dgp.with_rho(r);
            true_effect(&dgp, &EffectQuery::pe(cfg.effect, 0, dgp.mean_point()))
        })
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, usize)> = (0..cfg.rho_grid.len())
        .flat_map(|g| (0..cfg.reps).map(move |r| (g, r)))
        .collect();
    let records: Vec<ReplicationRecord> = jobs
        .par_iter()
        .map(|&(g, rep)| {
            let rho = cfg.rho_grid[g];
            let dgp = cfg.dgp.with_rho(rho);
            replicate(cfg, &dgp, g, rep, truths[g]).unwrap_or_else(|e| ReplicationRecord::failed(rho, rep, &e))
        })
        .collect();
    let summaries = cfg
        .rho_grid
        .iter()
        .enumerate()
        .map(|(g, &rho)| summarize(cfg, rho, &records[g * cfg.reps..(g + 1) * cfg.reps]))
        .collect::<Result<_>>()?;
    Ok(McResult {
        config: cfg.clone(),
        records,
        summaries,
    })
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct LongRow<'a> {
    rho: f64,
    series: &'a str,
    value: f64,
}

impl McResult {
    pub fn write_replications(&self, path: &Path) -> Result<()> {
        write_rows(path, &self.records)
    }

    pub fn write_summary(&self, path: &Path) -> Result<()> {
        write_rows(path, &self.summaries)
    }

    /// Plot-ready long table `(rho, series, value)`.
    pub fn write_long(&self, path: &Path) -> Result<()> {
        let mut rows = Vec::new();
        for s in &self.summaries {
            for (series, value) in [
                ("true", s.true_pe),
                ("true_lb", s.true_lb),
                ("true_ub", s.true_ub),
                ("median_lb", s.median_lb),
                ("median_ub", s.median_ub),
                ("naive", s.median_naive),
                ("ci_lo", s.median_ci_lo),
                ("ci_hi", s.median_ci_hi),
                ("naive_ci_lo", s.median_naive_ci_lo),
                ("naive_ci_hi", s.median_naive_ci_hi),
            ] {
                rows.push(LongRow { rho: s.rho, series, value });
            }
        }
        write_rows(path, &rows)
    }
}

/// True `sigma_ustar2` on the scale of the fitted reduced form.
pub fn true_sigma_ustar2(cfg: &DgpConfig) -> f64 {
    match cfg.kind {
        ModelKind::Tobit => cfg.sigma_ustar2(),
        ModelKind::Probit => cfg.sigma_ustar2() / population_moments(cfg).0,
    }
}

/// Whether the APE denominator is positive at the truth (sanity helper).
pub fn ape_denominator_at_truth(cfg: &DgpConfig) -> f64 {
    ape_denominator2(&population_fit(cfg), true_sigma_ustar2(cfg))
}

/// Identified interval implied by the true reduced form.
pub fn true_sigma_interval(cfg: &DgpConfig) -> Result<Interval> {
    let f = population_fit(cfg);
    Ok(sigma_ustar_interval(f.theta1(), f.sigma_u2, f.sigma_v2, f.sigma_uv)?.interval)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn design_truths() {
        let cfg = DgpConfig::default();
        let pe = true_effect(&cfg, &EffectQuery::pe(EffectKind::PeTobitMean, 0, cfg.mean_point())).unwrap();
        assert!((pe - 1.682_689).abs() < 1e-6);
        let ape = true_effect(&cfg, &EffectQuery::ape(EffectKind::ApeTobitMean, 0)).unwrap();
        assert!((ape - 1.261_12).abs() < 1e-5);
        let apr = true_effect(&cfg, &EffectQuery::ape(EffectKind::ApeProbability, 0)).unwrap();
        assert!((apr - 0.251_589).abs() < 1e-6);
        let zero = DgpConfig { theta2: 0.0, ..cfg.clone() };
        assert_eq!(true_effect(&zero, &EffectQuery::pe(EffectKind::PeTobitMean, 1, vec![0.0, 1.0])).unwrap(), 0.0);
        assert_eq!(population_moments(&cfg), (5.0, 2.0, -2.0));
    }

    #[test]
    fn sampling_is_deterministic() {
        let cfg = DgpConfig { n: 50, ..Default::default() };
        assert_eq!(sample(&cfg, 7), sample(&cfg, 7));
        assert_ne!(sample(&cfg, 7).x, sample(&cfg, 8).x);
        assert_eq!(sample(&DgpConfig { n: 0, ..cfg }, 1).n(), 0);
    }

    #[test]
    fn probit_truth_is_normalized() {
        let cfg = DgpConfig {
            kind: ModelKind::Probit,
            ..Default::default()
        };
        let f = population_fit(&cfg);
        assert!((f.sigma_u2 - 1.0).abs() < 1e-15);
        assert!((true_sigma_ustar2(&cfg) - 0.2).abs() < 1e-15);
    }
}
