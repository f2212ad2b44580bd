//! Delta-method standard errors and Bonferroni confidence intervals for
//! `sigma_ustar2` and for partial / average partial effects.
//!
//! Step 1 builds a level `1 - alpha1` interval for `sigma_ustar2` from the
//! two lower-bound branches `xi1`, `xi2` and the upper bound `sigma_u2`.
//! Step 2 unions level `1 - (alpha - alpha1)` effect intervals over every
//! `sigma^2` in that set.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bounds::{xi1, xi2};
use crate::effects::{self, ape_denominator2, ape_indices, ape_terms, EffectBounds};
use crate::error::{Error, Result};
use crate::model::{Dataset, EffectQuery, Interval, ReducedFormFit};
use crate::stats_core::normal::{max2_normal_quantile, norm_quantile};
use crate::stats_core::optimize::golden_minimize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BonferroniConfig {
    pub alpha: f64,
    pub alpha1: f64,
}

impl Default for BonferroniConfig {
    fn default() -> Self {
        BonferroniConfig {
            alpha: 0.05,
            alpha1: 0.005,
        }
    }
}

impl BonferroniConfig {
    /// `alpha1` defaults to `alpha / 10`.
    pub fn new(alpha: f64, alpha1: Option<f64>) -> Result<Self> {
        let alpha1 = alpha1.unwrap_or(alpha / 10.0);
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        if !(alpha1 > 0.0 && alpha1 < alpha) {
            return Err(Error::Domain(format!("alpha1 must lie in (0, alpha), got {alpha1}")));
        }
        Ok(BonferroniConfig { alpha, alpha1 })
    }
}

/// Central-difference gradient with step `1e-5 (1 + |x|)`.
pub fn delta_gradient(g: impl Fn(&[f64]) -> f64, at: &[f64]) -> Vec<f64> {
    let mut x = at.to_vec();
    (0..at.len())
        .map(|k| {
            let h = 1e-5 * (1.0 + at[k].abs());
            x[k] = at[k] + h;
            let up = g(&x);
            x[k] = at[k] - h;
            let down = g(&x);
            x[k] = at[k];
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn quad_form(a: &[f64], vcov: &DMatrix<f64>, b: &[f64]) -> f64 {
    let a = DVector::from_column_slice(a);
    let b = DVector::from_column_slice(b);
    (a.transpose() * vcov * b)[(0, 0)]
}

fn sqrt_checked(q: f64) -> Result<f64> {
    if q < -1e-12 || !q.is_finite() {
        return Err(Error::Numerical {
            at: q,
            context: "negative or non-finite delta-method variance".into(),
        });
    }
    Ok(q.max(0.0).sqrt())
}

/// `sqrt(grad g' V grad g)`.
pub fn delta_se(g: impl Fn(&[f64]) -> f64, at: &[f64], vcov: &DMatrix<f64>) -> Result<f64> {
    let grad = delta_gradient(g, at);
    sqrt_checked(quad_form(&grad, vcov, &grad))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaCi {
    pub interval: Interval,
    pub xi1: f64,
    pub xi2: f64,
    pub se_xi1: f64,
    pub se_xi2: f64,
    pub se_sigma_u2: f64,
    /// Estimated correlation of `xi1_hat` and `xi2_hat`.
    pub rho_xi: f64,
    /// Critical value of the max of the two branch statistics.
    pub c_max: f64,
    /// Whether the lower endpoint was raised to zero.
    pub clamped: bool,
}

fn vcov_of(fit: &ReducedFormFit) -> Result<&DMatrix<f64>> {
    fit.vcov.as_ref().ok_or(Error::MissingVcov)
}

/// Level `1 - alpha1` confidence set for `sigma_ustar2`.
pub fn ci_sigma_ustar2(fit: &ReducedFormFit, cfg: &BonferroniConfig) -> Result<SigmaCi> {
    let vcov = vcov_of(fit)?;
    let at = fit.to_vector();
    let (it, iu, iv, iuv) = (0, fit.idx_sigma_u2(), fit.idx_sigma_v2(), fit.idx_sigma_uv());
    let g1 = |p: &[f64]| xi1(p[it], p[iu], p[iv], p[iuv]);
    let g2 = |p: &[f64]| xi2(p[it], p[iu], p[iv]);
    let x1 = g1(&at);
    let x2 = g2(&at);
    let d1 = delta_gradient(g1, &at);
    let d2 = delta_gradient(g2, &at);
    let s1 = sqrt_checked(quad_form(&d1, vcov, &d1))?;
    let s2 = sqrt_checked(quad_form(&d2, vcov, &d2))?;
    let su = sqrt_checked(vcov[(iu, iu)])?;
    let rho = if s1 > 0.0 && s2 > 0.0 {
        (quad_form(&d1, vcov, &d2) / (s1 * s2)).clamp(-1.0, 1.0)
    } else {
        1.0
    };
    let p = 1.0 - cfg.alpha1 / 2.0;
    let c = max2_normal_quantile(p, rho)?;
    let z = norm_quantile(p)?;
    let upper = fit.sigma_u2 + z * su;
    let raw_lower = (x1 - c * s1).max(x2 - c * s2);
    let clamped = raw_lower < 0.0;
    let lower = raw_lower.max(0.0).min(upper);
    Ok(SigmaCi {
        interval: Interval { lo: lower, hi: upper },
        xi1: x1,
        xi2: x2,
        se_xi1: s1,
        se_xi2: s2,
        se_sigma_u2: su,
        rho_xi: rho,
        c_max: c,
        clamped,
    })
}

/// Effect value and standard error at a fixed `sigma^2`.
///
/// For partial effects only parameter uncertainty enters. For average
/// effects the variance of the sample average is added:
/// `grad' V grad + var_i(g_i) / n`.
pub fn effect_with_se(query: &EffectQuery, fit: &ReducedFormFit, d: &Dataset, sigma2: f64) -> Result<(f64, f64)> {
    effect_with_se_at(query, fit, d, Some(sigma2))
}

/// As [`effect_with_se`], with `None` meaning the naive `sigma^2 = sigma_u2`
/// (which then varies with the parameters).
pub fn effect_with_se_at(query: &EffectQuery, fit: &ReducedFormFit, d: &Dataset, sigma2: Option<f64>) -> Result<(f64, f64)> {
    let vcov = vcov_of(fit)?;
    let at = fit.to_vector();
    let iu = fit.idx_sigma_u2();
    let s2_of = |p: &[f64]| sigma2.unwrap_or(p[iu]);
    let value = effects::effect_at(query, fit, d, s2_of(&at))?;
    let g = |p: &[f64]| {
        let f = fit.with_vector(p);
        effects::effect_at(query, &f, d, s2_of(p)).unwrap_or(f64::NAN)
    };
    let grad = delta_gradient(g, &at);
    let mut var = quad_form(&grad, vcov, &grad);
    if query.kind.is_average() {
        let idx = ape_indices(fit, d);
        let terms = ape_terms(query.kind, fit, &idx, query.covariate_index, s2_of(&at))?;
        let n = terms.len() as f64;
        let m = terms.iter().sum::<f64>() / n;
        var += terms.iter().map(|t| (t - m).powi(2)).sum::<f64>() / (n * n);
    }
    Ok((value, sqrt_checked(var)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectCi {
    pub interval: Interval,
    /// Point-estimate bounds over the estimated identified set.
    pub bounds: EffectBounds,
    /// Naive point estimate and its `1 - alpha` interval.
    pub naive: f64,
    pub naive_se: f64,
    pub naive_ci: Interval,
}

/// Smallest `sigma^2` at which the effect is evaluated inside CI1.
fn admissible_floor(query: &EffectQuery, fit: &ReducedFormFit) -> f64 {
    let scale = fit.sigma_u2.max(1.0);
    let mut floor = 1e-8 * scale;
    if query.kind.is_average() {
        // need 2 s2 - sigma_u2 + theta1^2 sigma_v2 > 0
        let zero = 0.5 * (fit.sigma_u2 - fit.theta1().powi(2) * fit.sigma_v2);
        floor = floor.max(zero + 1e-8 * scale);
        debug_assert!(ape_denominator2(fit, floor) > 0.0);
    }
    floor
}

/// Bonferroni confidence interval for an effect.
///
/// `ci1` is the step-one set for `sigma_ustar2` and `identified` the
/// point-estimate identified set used for `[LB, UB]`.
pub fn ci_effect_given(
    query: &EffectQuery,
    fit: &ReducedFormFit,
    d: &Dataset,
    cfg: &BonferroniConfig,
    ci1: Interval,
    identified: Interval,
) -> Result<EffectCi> {
    let bounds = effects::effect_bounds(query, fit, d, identified)?;
    let z = norm_quantile(1.0 - (cfg.alpha - cfg.alpha1) / 2.0)?;
    let lo = ci1.lo.max(admissible_floor(query, fit));
    let search = Interval {
        lo: lo.min(ci1.hi),
        hi: ci1.hi,
    };
    let lower_at = |s2: f64| effect_with_se(query, fit, d, s2).map(|(e, s)| e - z * s);
    let upper_at = |s2: f64| effect_with_se(query, fit, d, s2).map(|(e, s)| e + z * s);
    let (_, lmin) = golden_minimize(|s| lower_at(s).unwrap_or(f64::NAN), search, effects::EXTREMUM_TOL)?;
    let (_, umin) = golden_minimize(|s| -upper_at(s).unwrap_or(f64::NAN), search, effects::EXTREMUM_TOL)?;
    // The identified-set extremizers always belong to CI1, which keeps
    // [LB, UB] inside the reported interval.
    let lower = lmin.min(lower_at(bounds.argmin_sigma2)?).min(bounds.lower);
    let upper = (-umin).max(upper_at(bounds.argmax_sigma2)?).max(bounds.upper);

    let (naive, naive_se) = effect_with_se_at(query, fit, d, None)?;
    let zn = norm_quantile(1.0 - cfg.alpha / 2.0)?;
    Ok(EffectCi {
        interval: Interval { lo: lower, hi: upper },
        bounds,
        naive,
        naive_se,
        naive_ci: Interval {
            lo: naive - zn * naive_se,
            hi: naive + zn * naive_se,
        },
    })
}

/// Bonferroni confidence interval for an effect, computing both step-one
/// and identified sets from `fit`.
pub fn ci_effect(query: &EffectQuery, fit: &ReducedFormFit, d: &Dataset, cfg: &BonferroniConfig) -> Result<EffectCi> {
    let ci1 = ci_sigma_ustar2(fit, cfg)?;
    let identified =
        crate::bounds::sigma_ustar_interval(fit.theta1(), fit.sigma_u2, fit.sigma_v2, fit.sigma_uv)?.interval;
    ci_effect_given(query, fit, d, cfg, ci1.interval, identified)
}
