//! Partial effects and average partial effects as functions of the
//! structural variance `sigma_ustar2`, and their extrema over an interval.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dataset, EffectKind, EffectQuery, Interval, ReducedFormFit};
use crate::stats_core::normal::{norm_cdf, norm_pdf};
use crate::stats_core::optimize::{golden_maximize, golden_minimize};

/// Tolerance on `sigma^2` for the scalar extremizations.
pub const EXTREMUM_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectBounds {
    pub lower: f64,
    pub upper: f64,
    /// Effect at `sigma_ustar2 = sigma_u2`.
    pub naive: f64,
    pub argmin_sigma2: f64,
    pub argmax_sigma2: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Partial effect on the censored mean: `Phi(theta'h / sigma) theta_j`.
pub fn pe_tobit_mean(h: &[f64], j: usize, theta: &[f64], sigma_ustar2: f64) -> f64 {
    norm_cdf(dot(theta, h) / sigma_ustar2.sqrt()) * theta[j]
}

/// Partial effect on the probability: `phi(theta'h / sigma) theta_j / sigma`.
pub fn pe_probability(h: &[f64], j: usize, theta: &[f64], sigma_ustar2: f64) -> f64 {
    let s = sigma_ustar2.sqrt();
    norm_pdf(dot(theta, h) / s) * theta[j] / s
}

fn pe_value(kind: EffectKind, h: &[f64], j: usize, theta: &[f64], s2: f64) -> f64 {
    if kind.is_probability() {
        pe_probability(h, j, theta, s2)
    } else {
        pe_tobit_mean(h, j, theta, s2)
    }
}

fn pe_point(q: &EffectQuery) -> Result<&[f64]> {
    q.h.as_deref()
        .ok_or_else(|| Error::Precondition("partial effect needs an evaluation point h".into()))
}

/// Extrema of a partial effect over `interval`.
///
/// The mean effect is monotone in `sigma^2`, so only endpoints matter. The
/// probability effect `phi(a/s)/s` is unimodal in `s^2` with its peak at
/// `s^2 = a^2`, so the extrema lie in `{lo, hi, a^2}`.
pub fn pe_bounds(query: &EffectQuery, fit: &ReducedFormFit, interval: Interval) -> Result<EffectBounds> {
    query.check(fit.theta.len())?;
    if query.kind.is_average() {
        return Err(Error::Precondition("pe_bounds called with an average-effect kind".into()));
    }
    let h = pe_point(query)?;
    let j = query.covariate_index;
    let eval = |s2: f64| pe_value(query.kind, h, j, &fit.theta, s2);
    let mut candidates = vec![interval.lo, interval.hi];
    if query.kind.is_probability() {
        let a2 = dot(&fit.theta, h).powi(2);
        if interval.contains(a2) {
            candidates.push(a2);
        }
    }
    Ok(extremes(&candidates, eval, fit.sigma_u2))
}

fn extremes(candidates: &[f64], eval: impl Fn(f64) -> f64, naive_at: f64) -> EffectBounds {
    let mut b = EffectBounds {
        lower: f64::INFINITY,
        upper: f64::NEG_INFINITY,
        naive: eval(naive_at),
        argmin_sigma2: f64::NAN,
        argmax_sigma2: f64::NAN,
    };
    for &s2 in candidates {
        let v = eval(s2);
        if v < b.lower {
            b.lower = v;
            b.argmin_sigma2 = s2;
        }
        if v > b.upper {
            b.upper = v;
            b.argmax_sigma2 = s2;
        }
    }
    b
}

/// Sample indices `theta1 pi1'z_i + (theta1 pi2 + theta2)'w_i`, i.e. the
/// outcome index with `x*` replaced by its first-stage projection.
pub fn ape_indices(fit: &ReducedFormFit, d: &Dataset) -> Vec<f64> {
    let t1 = fit.theta1();
    let wcoef: Vec<f64> = (0..fit.d_w()).map(|k| t1 * fit.pi2[k] + fit.theta[k + 1]).collect();
    (0..d.n())
        .map(|i| {
            let mut c = 0.0;
            for (k, p) in fit.pi1.iter().enumerate() {
                c += t1 * p * d.z[(i, k)];
            }
            for (k, b) in wcoef.iter().enumerate() {
                c += b * d.w[(i, k)];
            }
            c
        })
        .collect()
}

/// `2 sigma_ustar2 - sigma_u2 + theta1^2 sigma_v2`, the variance of the
/// outcome disturbance once `v*` is integrated out.
pub fn ape_denominator2(fit: &ReducedFormFit, sigma_ustar2: f64) -> f64 {
    2.0 * sigma_ustar2 - fit.sigma_u2 + fit.theta1().powi(2) * fit.sigma_v2
}

fn ape_scale(fit: &ReducedFormFit, sigma_ustar2: f64) -> Result<f64> {
    let d2 = ape_denominator2(fit, sigma_ustar2);
    if !(d2 > 0.0) {
        return Err(Error::Precondition(format!(
            "APE variance 2 sigma^2 - sigma_u2 + theta1^2 sigma_v2 = {d2} is not positive"
        )));
    }
    Ok(d2.sqrt())
}

/// Per-observation APE terms `theta_j F(c_i / D)` (with `F = Phi` or `phi/D`).
pub fn ape_terms(kind: EffectKind, fit: &ReducedFormFit, idx: &[f64], j: usize, sigma_ustar2: f64) -> Result<Vec<f64>> {
    let dd = ape_scale(fit, sigma_ustar2)?;
    let tj = fit.theta[j];
    Ok(idx
        .iter()
        .map(|c| {
            if kind.is_probability() {
                norm_pdf(c / dd) * tj / dd
            } else {
                norm_cdf(c / dd) * tj
            }
        })
        .collect())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn check_ape_inputs(fit: &ReducedFormFit, d: &Dataset, j: usize) -> Result<()> {
    if d.n() == 0 {
        return Err(Error::Precondition("APE needs at least one row".into()));
    }
    if j >= fit.theta.len() {
        return Err(Error::Precondition(format!("covariate index {j} out of range")));
    }
    Ok(())
}

pub fn ape_tobit_mean(fit: &ReducedFormFit, d: &Dataset, j: usize, sigma_ustar2: f64) -> Result<f64> {
    check_ape_inputs(fit, d, j)?;
    let idx = ape_indices(fit, d);
    Ok(mean(&ape_terms(EffectKind::ApeTobitMean, fit, &idx, j, sigma_ustar2)?))
}

pub fn ape_probability(fit: &ReducedFormFit, d: &Dataset, j: usize, sigma_ustar2: f64) -> Result<f64> {
    check_ape_inputs(fit, d, j)?;
    let idx = ape_indices(fit, d);
    Ok(mean(&ape_terms(EffectKind::ApeProbability, fit, &idx, j, sigma_ustar2)?))
}

/// Extrema of an average partial effect over `interval` by grid-seeded
/// golden-section search; the endpoints are always considered as well.
pub fn ape_bounds(kind: EffectKind, fit: &ReducedFormFit, d: &Dataset, j: usize, interval: Interval) -> Result<EffectBounds> {
    if !kind.is_average() {
        return Err(Error::Precondition("ape_bounds called with a partial-effect kind".into()));
    }
    check_ape_inputs(fit, d, j)?;
    let idx = ape_indices(fit, d);
    let eval = |s2: f64| ape_terms(kind, fit, &idx, j, s2).map(|t| mean(&t));
    // Surface domain errors before the optimizer sees NaN.
    eval(interval.lo)?;
    let naive = eval(fit.sigma_u2)?;
    let f = |s2: f64| eval(s2).unwrap_or(f64::NAN);
    let (xmin, _) = golden_minimize(f, interval, EXTREMUM_TOL)?;
    let (xmax, _) = golden_maximize(f, interval, EXTREMUM_TOL)?;
    let mut b = extremes(&[interval.lo, interval.hi, xmin, xmax], f, fit.sigma_u2);
    b.naive = naive;
    Ok(b)
}

/// Bounds for any effect kind.
pub fn effect_bounds(query: &EffectQuery, fit: &ReducedFormFit, d: &Dataset, interval: Interval) -> Result<EffectBounds> {
    if query.kind.is_average() {
        ape_bounds(query.kind, fit, d, query.covariate_index, interval)
    } else {
        pe_bounds(query, fit, interval)
    }
}

/// Effect value at a given `sigma_ustar2`.
pub fn effect_at(query: &EffectQuery, fit: &ReducedFormFit, d: &Dataset, sigma_ustar2: f64) -> Result<f64> {
    let j = query.covariate_index;
    match query.kind {
        EffectKind::PeTobitMean | EffectKind::PeProbability => {
            Ok(pe_value(query.kind, pe_point(query)?, j, &fit.theta, sigma_ustar2))
        }
        EffectKind::ApeTobitMean => ape_tobit_mean(fit, d, j, sigma_ustar2),
        EffectKind::ApeProbability => ape_probability(fit, d, j, sigma_ustar2),
    }
}
