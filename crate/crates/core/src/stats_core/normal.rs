//! Univariate and bivariate normal distribution functions.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

/// `ln(sqrt(2*pi))`
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn norm_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

pub fn log_norm_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

/// Standard normal CDF via the complementary error function.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// `ln Phi(x)`, accurate far into both tails.
pub fn log_norm_cdf(x: f64) -> f64 {
    if x > 0.0 {
        // Phi(x) = 1 - Q with Q small.
        (-0.5 * libm::erfc(x * FRAC_1_SQRT_2)).ln_1p()
    } else if x > -37.0 {
        (0.5 * libm::erfc(-x * FRAC_1_SQRT_2)).ln()
    } else {
        // Asymptotic (Mills ratio) expansion.
        let z2 = 1.0 / (x * x);
        let series = 1.0 - z2 * (1.0 - 3.0 * z2 * (1.0 - 5.0 * z2 * (1.0 - 7.0 * z2)));
        -0.5 * x * x - (-x).ln() - LN_SQRT_2PI + series.ln()
    }
}

/// Inverse Mills ratio `phi(x) / Phi(x)`.
pub fn inv_mills(x: f64) -> f64 {
    if x > -30.0 {
        norm_pdf(x) / norm_cdf(x)
    } else {
        (log_norm_pdf(x) - log_norm_cdf(x)).exp()
    }
}

/// Standard normal quantile.
///
/// Rational initial guess followed by two Halley corrections against
/// [`norm_cdf`], which brings the round-trip error to machine precision.
pub fn norm_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!(
            "normal quantile requires 0 < p < 1, got {p}"
        )));
    }
    if p > 0.5 {
        return Ok(-lower_quantile(1.0 - p));
    }
    Ok(lower_quantile(p))
}

// p <= 0.5
fn lower_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    let mut x = if p < 0.024_25 {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    for _ in 0..2 {
        let e = norm_cdf(x) - p;
        let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
        x -= u / (1.0 + 0.5 * x * u);
    }
    x
}

/// `P(eta1 <= c, eta2 <= c)` for standard bivariate normals with correlation `rho`.
///
/// Uses Plackett's identity `d Phi2 / d rho = phi2`; the substitution
/// `r = sin t` removes the endpoint singularity, leaving
/// `Phi(c)^2 + (1/2pi) * int_0^{asin rho} exp(-c^2 / (1 + sin t)) dt`.
pub fn bvn_cdf_equal(c: f64, rho: f64) -> f64 {
    let rho = rho.clamp(-1.0, 1.0);
    let base = norm_cdf(c);
    let upper = rho.asin();
    if upper == 0.0 {
        return base * base;
    }
    let c2 = c * c;
    let g = |t: f64| {
        let s = 1.0 + t.sin();
        if s <= 0.0 {
            0.0
        } else {
            (-c2 / s).exp()
        }
    };
    let integral = adaptive_simpson(&g, 0.0, upper, 1e-15, 40);
    (base * base + integral / (2.0 * PI)).clamp(0.0, 1.0)
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Quantile `c` of `max(eta1, eta2)` where `(eta1, eta2)` are standard
/// normals with correlation `rho`: solves `Phi2(c, c; rho) = p`.
pub fn max2_normal_quantile(p: f64, rho: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!(
            "max-normal quantile requires 0 < p < 1, got {p}"
        )));
    }
    if !(-1.0 - 1e-12..=1.0 + 1e-12).contains(&rho) || rho.is_nan() {
        return Err(Error::Domain(format!(
            "correlation must lie in [-1, 1], got {rho}"
        )));
    }
    let rho = rho.clamp(-1.0, 1.0);
    if rho == 1.0 {
        return norm_quantile(p);
    }
    if rho == -1.0 {
        // max(eta, -eta) = |eta|
        return norm_quantile(0.5 * (1.0 + p));
    }
    // Phi(c)^2 <= P(max <= c) <= Phi(c), and P(max <= c) >= 2 Phi(c) - 1.
    let mut lo = norm_quantile(p)?;
    let mut hi = norm_quantile(0.5 * (1.0 + p))?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if bvn_cdf_equal(mid, rho) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * (1.0 + hi.abs()) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Parameters of a univariate normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalParams {
    pub mean: f64,
    pub variance: f64,
}

impl NormalParams {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !(variance >= 0.0) || !mean.is_finite() || !variance.is_finite() {
            return Err(Error::Domain(format!(
                "normal requires finite mean and variance >= 0, got N({mean}, {variance})"
            )));
        }
        Ok(Self { mean, variance })
    }

    pub fn sd(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let s = self.sd();
        norm_pdf((x - self.mean) / s) / s
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        let s = self.sd();
        log_norm_pdf((x - self.mean) / s) - s.ln()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        norm_cdf((x - self.mean) / self.sd())
    }
}

/// Parameters of a bivariate normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BivariateNormalParams {
    pub mean: [f64; 2],
    pub cov: [[f64; 2]; 2],
}

impl BivariateNormalParams {
    pub fn new(mean: [f64; 2], cov: [[f64; 2]; 2]) -> Result<Self> {
        if cov[0][1] != cov[1][0] {
            return Err(Error::Domain("covariance matrix is not symmetric".into()));
        }
        let (a, b, d) = (cov[0][0], cov[0][1], cov[1][1]);
        let half_tr = 0.5 * (a + d);
        let disc = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        let min_eig = half_tr - disc;
        if !(min_eig >= -1e-12) {
            return Err(Error::Domain(format!(
                "covariance matrix is not positive semi-definite (min eigenvalue {min_eig})"
            )));
        }
        Ok(Self { mean, cov })
    }

    pub fn det(&self) -> f64 {
        self.cov[0][0] * self.cov[1][1] - self.cov[0][1] * self.cov[1][0]
    }

    pub fn log_pdf(&self, x: [f64; 2]) -> f64 {
        let det = self.det();
        let d0 = x[0] - self.mean[0];
        let d1 = x[1] - self.mean[1];
        let q = (self.cov[1][1] * d0 * d0 - 2.0 * self.cov[0][1] * d0 * d1
            + self.cov[0][0] * d1 * d1)
            / det;
        -0.5 * q - 2.0 * LN_SQRT_2PI - 0.5 * det.ln()
    }

    pub fn pdf(&self, x: [f64; 2]) -> f64 {
        self.log_pdf(x).exp()
    }

    /// Mean and variance of the first coordinate given the second equals `x1`.
    pub fn conditional_first(&self, x1: f64) -> (f64, f64) {
        let slope = self.cov[0][1] / self.cov[1][1];
        (
            self.mean[0] + slope * (x1 - self.mean[1]),
            self.cov[0][0] - slope * self.cov[0][1],
        )
    }
}
