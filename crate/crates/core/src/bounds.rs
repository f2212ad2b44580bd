//! Sharp identified sets for the structural disturbance variance.
//!
//! Observed data identify `(theta1, sigma_u2, sigma_v2, sigma_uv)`. The
//! structural variance `sigma_ustar2` is only partially identified because
//! the measurement-error variance cannot be separated from the first-stage
//! disturbance. The identified set is
//! `[max(xi1, xi2), sigma_u2]` with
//!
//! ```text
//! xi1 = (theta1 sigma_uv + sigma_u2)^2 / (sigma_v2 theta1^2 + 2 sigma_uv theta1 + sigma_u2)
//! xi2 = sigma_u2 - theta1^2 sigma_v2
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Interval, StructuralParams};

/// Identified interval for `sigma_ustar2` plus the two lower-bound branches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaBounds {
    pub interval: Interval,
    pub xi1: f64,
    pub xi2: f64,
}

/// Reduced-form disturbance covariance of one (mixture) component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentCov {
    pub sigma_u2: f64,
    pub sigma_v2: f64,
    pub sigma_uv: f64,
}

impl ComponentCov {
    pub fn new(sigma_u2: f64, sigma_v2: f64, sigma_uv: f64) -> Self {
        ComponentCov {
            sigma_u2,
            sigma_v2,
            sigma_uv,
        }
    }
}

fn check_reduced_form(sigma_u2: f64, sigma_v2: f64, sigma_uv: f64) -> Result<()> {
    if !(sigma_u2 > 0.0 && sigma_v2 > 0.0) || !sigma_uv.is_finite() {
        return Err(Error::Precondition(format!(
            "need sigma_u2 > 0 and sigma_v2 > 0, got ({sigma_u2}, {sigma_v2}, {sigma_uv})"
        )));
    }
    let rho = sigma_uv / (sigma_u2 * sigma_v2).sqrt();
    if !(rho.abs() < 1.0) {
        return Err(Error::Precondition(format!("|rho_UV| must be < 1, got {rho}")));
    }
    Ok(())
}

/// `sigma_v2 theta1^2 + 2 sigma_uv theta1 + sigma_u2`, positive when `|rho_UV| < 1`.
pub fn xi1_denominator(theta1: f64, sigma_u2: f64, sigma_v2: f64, sigma_uv: f64) -> f64 {
    sigma_v2 * theta1 * theta1 + 2.0 * sigma_uv * theta1 + sigma_u2
}

/// Lower-bound branch `xi1` (no precondition checks).
pub fn xi1(theta1: f64, sigma_u2: f64, sigma_v2: f64, sigma_uv: f64) -> f64 {
    let num = theta1 * sigma_uv + sigma_u2;
    num * num / xi1_denominator(theta1, sigma_u2, sigma_v2, sigma_uv)
}

/// Lower-bound branch `xi2` (no precondition checks).
pub fn xi2(theta1: f64, sigma_u2: f64, sigma_v2: f64) -> f64 {
    sigma_u2 - theta1 * theta1 * sigma_v2
}

/// Sharp identified set for `sigma_ustar2` in the Gaussian model.
pub fn sigma_ustar_interval(theta1: f64, sigma_u2: f64, sigma_v2: f64, sigma_uv: f64) -> Result<SigmaBounds> {
    check_reduced_form(sigma_u2, sigma_v2, sigma_uv)?;
    if theta1 == 0.0 {
        return Ok(SigmaBounds {
            interval: Interval::point(sigma_u2),
            xi1: sigma_u2,
            xi2: sigma_u2,
        });
    }
    let denom = xi1_denominator(theta1, sigma_u2, sigma_v2, sigma_uv);
    if !(denom > 0.0) {
        return Err(Error::Numerical {
            at: theta1,
            context: format!("xi1 denominator is not positive ({denom})"),
        });
    }
    let x1 = xi1(theta1, sigma_u2, sigma_v2, sigma_uv);
    let x2 = xi2(theta1, sigma_u2, sigma_v2);
    // xi1 <= sigma_u2 algebraically; guard the last ulp.
    let lo = x1.max(x2).min(sigma_u2);
    Ok(SigmaBounds {
        interval: Interval { lo, hi: sigma_u2 },
        xi1: x1,
        xi2: x2,
    })
}

/// Largest measurement-error variance compatible with the reduced form.
pub fn epsilon_upper(theta1: f64, sigma_u2: f64, sigma_v2: f64, sigma_uv: f64) -> Result<f64> {
    check_reduced_form(sigma_u2, sigma_v2, sigma_uv)?;
    let denom = xi1_denominator(theta1, sigma_u2, sigma_v2, sigma_uv);
    let cs = (sigma_u2 * sigma_v2 - sigma_uv * sigma_uv) / denom;
    Ok(cs.min(sigma_v2))
}

/// Structural parameters observationally equivalent to the reduced form at
/// a given `sigma_ustar2`, without checking that the point is identified.
pub fn implied_structural_unchecked(
    sigma_ustar2: f64,
    theta1: f64,
    sigma_u2: f64,
    sigma_v2: f64,
    sigma_uv: f64,
) -> StructuralParams {
    let gap = sigma_u2 - sigma_ustar2;
    let sigma_eps2 = gap / (theta1 * theta1);
    StructuralParams {
        sigma_ustar2,
        sigma_vstar2: sigma_v2 - sigma_eps2,
        sigma_ustar_vstar: sigma_uv + gap / theta1,
        sigma_eps2,
    }
}

/// Structural parameters implied by `sigma_ustar2` inside the identified set.
pub fn implied_structural(
    sigma_ustar2: f64,
    theta1: f64,
    sigma_u2: f64,
    sigma_v2: f64,
    sigma_uv: f64,
) -> Result<StructuralParams> {
    if theta1 == 0.0 {
        return Err(Error::Precondition(
            "theta1 = 0: the measurement-error variance is not determined".into(),
        ));
    }
    let b = sigma_ustar_interval(theta1, sigma_u2, sigma_v2, sigma_uv)?;
    let slack = 1e-12 * sigma_u2.max(1.0);
    if !(sigma_ustar2 >= b.interval.lo - slack && sigma_ustar2 <= b.interval.hi + slack) {
        return Err(Error::Precondition(format!(
            "sigma_ustar2 = {sigma_ustar2} lies outside the identified set [{}, {}]",
            b.interval.lo, b.interval.hi
        )));
    }
    Ok(implied_structural_unchecked(
        sigma_ustar2,
        theta1,
        sigma_u2,
        sigma_v2,
        sigma_uv,
    ))
}

/// Intersection of the per-component identified sets of a mixture:
/// `[max_k lower_k, min_k sigma_u2_k]`.
pub fn intersect_component_intervals(components: &[ComponentCov], theta1: f64) -> Result<Interval> {
    if components.is_empty() {
        return Err(Error::Precondition("no mixture components".into()));
    }
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    for c in components {
        let b = sigma_ustar_interval(theta1, c.sigma_u2, c.sigma_v2, c.sigma_uv)?;
        lower = lower.max(b.interval.lo);
        upper = upper.min(b.interval.hi);
    }
    if lower > upper {
        return Err(Error::EmptyIntersection { lower, upper });
    }
    Ok(Interval { lo: lower, hi: upper })
}
