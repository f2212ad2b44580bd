//! Data model shared by estimation and inference.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, ValidationError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Tobit,
    Probit,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelKind::Tobit => write!(f, "tobit"),
            ModelKind::Probit => write!(f, "probit"),
        }
    }
}

/// Outcome `y`, mismeasured endogenous regressor `x`, exogenous covariates
/// `w` (intercept included explicitly by the caller) and instruments `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub y: Vec<f64>,
    pub x: Vec<f64>,
    pub w: DMatrix<f64>,
    pub z: DMatrix<f64>,
}

impl Dataset {
    pub fn new(y: Vec<f64>, x: Vec<f64>, w: DMatrix<f64>, z: DMatrix<f64>) -> Self {
        Dataset { y, x, w, z }
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn d_w(&self) -> usize {
        self.w.ncols()
    }

    pub fn d_z(&self) -> usize {
        self.z.ncols()
    }

    /// Row `i` of the stacked first-stage design `(z_i, w_i)`.
    pub fn zw_row(&self, i: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.d_z())
            .map(move |k| self.z[(i, k)])
            .chain((0..self.d_w()).map(move |k| self.w[(i, k)]))
    }

    /// Stacked `n x (d_z + d_w)` first-stage design.
    pub fn zw(&self) -> DMatrix<f64> {
        let n = self.n();
        let (dz, dw) = (self.d_z(), self.d_w());
        DMatrix::from_fn(n, dz + dw, |i, k| {
            if k < dz {
                self.z[(i, k)]
            } else {
                self.w[(i, k - dz)]
            }
        })
    }

    /// Sample means `(x_bar, w_bar')'`.
    pub fn covariate_means(&self) -> Vec<f64> {
        let n = self.n() as f64;
        let mut h = vec![self.x.iter().sum::<f64>() / n];
        h.extend((0..self.d_w()).map(|k| self.w.column(k).sum() / n));
        h
    }

    fn select_rows(&self, keep: &[usize]) -> Dataset {
        let m = keep.len();
        Dataset {
            y: keep.iter().map(|&i| self.y[i]).collect(),
            x: keep.iter().map(|&i| self.x[i]).collect(),
            w: DMatrix::from_fn(m, self.d_w(), |r, k| self.w[(keep[r], k)]),
            z: DMatrix::from_fn(m, self.d_z(), |r, k| self.z[(keep[r], k)]),
        }
    }
}

/// Outcome of [`validate`]: the cleaned dataset and the number of rows
/// dropped for non-finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Validated {
    pub dataset: Dataset,
    pub dropped_rows: usize,
}

/// Check every dataset invariant, dropping rows with non-finite entries.
pub fn validate(d: &Dataset, kind: ModelKind) -> Result<Validated> {
    let n_raw = d.y.len();
    for (what, got) in [("x", d.x.len()), ("w", d.w.nrows()), ("z", d.z.nrows())] {
        if got != n_raw {
            return Err(ValidationError::LengthMismatch {
                what,
                got,
                expected: n_raw,
            }
            .into());
        }
    }
    if d.d_z() == 0 {
        return Err(ValidationError::NoInstruments.into());
    }
    let keep: Vec<usize> = (0..n_raw)
        .filter(|&i| {
            d.y[i].is_finite()
                && d.x[i].is_finite()
                && d.w.row(i).iter().all(|v| v.is_finite())
                && d.z.row(i).iter().all(|v| v.is_finite())
        })
        .collect();
    let dropped_rows = n_raw - keep.len();
    let data = if dropped_rows == 0 {
        d.clone()
    } else {
        d.select_rows(&keep)
    };
    let n = data.n();
    let required = data.d_w() + data.d_z() + 2;
    if n <= required {
        return Err(ValidationError::TooFewRows { n, required }.into());
    }
    match kind {
        ModelKind::Tobit => {
            if let Some((row, &value)) = data.y.iter().enumerate().find(|(_, &v)| v < 0.0) {
                return Err(ValidationError::NegativeOutcome { row, value }.into());
            }
            if !data.y.iter().any(|&v| v == 0.0) {
                return Err(ValidationError::NoCensored.into());
            }
            if !data.y.iter().any(|&v| v > 0.0) {
                return Err(ValidationError::NoUncensored.into());
            }
        }
        ModelKind::Probit => {
            if let Some((row, &value)) = data
                .y
                .iter()
                .enumerate()
                .find(|(_, &v)| v != 0.0 && v != 1.0)
            {
                return Err(ValidationError::NonBinaryOutcome { row, value }.into());
            }
            let ones = data.y.iter().filter(|&&v| v == 1.0).count();
            if ones == 0 || ones == n {
                return Err(ValidationError::DegenerateBinary.into());
            }
        }
    }
    let ratio = singular_value_ratio(&data.zw());
    if !(ratio > 1e-10) {
        return Err(ValidationError::RankDeficient { ratio }.into());
    }
    Ok(Validated {
        dataset: data,
        dropped_rows,
    })
}

/// Smallest over largest singular value of a tall matrix.
pub fn singular_value_ratio(m: &DMatrix<f64>) -> f64 {
    let r = m.clone().qr().r();
    let sv = r.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        0.0
    } else {
        min / max
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::Domain(format!("interval requires lo <= hi, got [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    TwoStep,
    Mle,
}

/// Point-identified reduced-form parameters with their joint covariance.
///
/// Parameter vector layout (also the layout of `vcov`):
/// `theta (1 + d_w) | pi1 (d_z) | pi2 (d_w) | sigma_u2 | sigma_v2 | sigma_uv`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedFormFit {
    pub theta: Vec<f64>,
    pub pi1: Vec<f64>,
    pub pi2: Vec<f64>,
    pub sigma_u2: f64,
    pub sigma_v2: f64,
    pub sigma_uv: f64,
    pub vcov: Option<DMatrix<f64>>,
    pub model_kind: ModelKind,
    pub estimator: Estimator,
    pub loglik: f64,
    pub iterations: usize,
}

impl ReducedFormFit {
    pub fn theta1(&self) -> f64 {
        self.theta[0]
    }

    pub fn d_w(&self) -> usize {
        self.pi2.len()
    }

    pub fn d_z(&self) -> usize {
        self.pi1.len()
    }

    pub fn dim(&self) -> usize {
        self.theta.len() + self.pi1.len() + self.pi2.len() + 3
    }

    pub fn idx_pi1(&self) -> usize {
        self.theta.len()
    }

    pub fn idx_pi2(&self) -> usize {
        self.theta.len() + self.pi1.len()
    }

    pub fn idx_sigma_u2(&self) -> usize {
        self.dim() - 3
    }

    pub fn idx_sigma_v2(&self) -> usize {
        self.dim() - 2
    }

    pub fn idx_sigma_uv(&self) -> usize {
        self.dim() - 1
    }

    pub fn rho_uv(&self) -> f64 {
        self.sigma_uv / (self.sigma_u2 * self.sigma_v2).sqrt()
    }

    pub fn to_vector(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim());
        v.extend_from_slice(&self.theta);
        v.extend_from_slice(&self.pi1);
        v.extend_from_slice(&self.pi2);
        v.extend([self.sigma_u2, self.sigma_v2, self.sigma_uv]);
        v
    }

    /// Copy of `self` with parameters replaced by `v` (same layout).
    pub fn with_vector(&self, v: &[f64]) -> ReducedFormFit {
        assert_eq!(v.len(), self.dim());
        let mut out = self.clone();
        let (t, a, b) = (self.theta.len(), self.idx_pi1(), self.idx_pi2());
        out.theta.copy_from_slice(&v[..t]);
        out.pi1.copy_from_slice(&v[a..b]);
        out.pi2.copy_from_slice(&v[b..b + self.pi2.len()]);
        out.sigma_u2 = v[self.idx_sigma_u2()];
        out.sigma_v2 = v[self.idx_sigma_v2()];
        out.sigma_uv = v[self.idx_sigma_uv()];
        out
    }

    /// Standard errors from the diagonal of `vcov`.
    pub fn standard_errors(&self) -> Option<Vec<f64>> {
        self.vcov
            .as_ref()
            .map(|v| (0..self.dim()).map(|i| v[(i, i)].max(0.0).sqrt()).collect())
    }

    /// Parameter labels in vector order.
    pub fn param_names(&self, w_names: &[String], z_names: &[String]) -> Vec<String> {
        let w = |k: usize| w_names.get(k).cloned().unwrap_or_else(|| format!("w{k}"));
        let z = |k: usize| z_names.get(k).cloned().unwrap_or_else(|| format!("z{k}"));
        let mut names = vec!["theta:x".to_string()];
        names.extend((0..self.d_w()).map(|k| format!("theta:{}", w(k))));
        names.extend((0..self.d_z()).map(|k| format!("pi:{}", z(k))));
        names.extend((0..self.d_w()).map(|k| format!("pi:{}", w(k))));
        names.extend(["sigma_u2".into(), "sigma_v2".into(), "sigma_uv".into()]);
        names
    }
}

/// Structural (partially identified) variance parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructuralParams {
    pub sigma_ustar2: f64,
    pub sigma_vstar2: f64,
    pub sigma_ustar_vstar: f64,
    pub sigma_eps2: f64,
}

impl StructuralParams {
    /// Names of violated invariants (empty when valid), with absolute slack `tol`.
    pub fn violations(&self, tol: f64) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.sigma_ustar2 < -tol {
            out.push("sigma_ustar2 < 0");
        }
        if self.sigma_vstar2 < -tol {
            out.push("sigma_vstar2 < 0");
        }
        if self.sigma_eps2 < -tol {
            out.push("sigma_eps2 < 0");
        }
        if self.sigma_ustar_vstar.powi(2) > self.sigma_ustar2 * self.sigma_vstar2 + tol {
            out.push("Cauchy-Schwarz");
        }
        out
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        self.violations(tol).is_empty()
    }

    /// Reduced-form `(sigma_u2, sigma_v2, sigma_uv)` implied for slope `theta1`.
    pub fn reduced_form(&self, theta1: f64) -> (f64, f64, f64) {
        (
            self.sigma_ustar2 + theta1 * theta1 * self.sigma_eps2,
            self.sigma_vstar2 + self.sigma_eps2,
            self.sigma_ustar_vstar - theta1 * self.sigma_eps2,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectKind {
    PeTobitMean,
    PeProbability,
    ApeTobitMean,
    ApeProbability,
}

impl EffectKind {
    pub fn is_average(self) -> bool {
        matches!(self, EffectKind::ApeTobitMean | EffectKind::ApeProbability)
    }

    pub fn is_probability(self) -> bool {
        matches!(self, EffectKind::PeProbability | EffectKind::ApeProbability)
    }

    pub fn label(self) -> &'static str {
        match self {
            EffectKind::PeTobitMean => "pe_mean",
            EffectKind::PeProbability => "pe_prob",
            EffectKind::ApeTobitMean => "ape_mean",
            EffectKind::ApeProbability => "ape_prob",
        }
    }
}

/// Which effect to evaluate: covariate `j` (0 = x*, 1.. = columns of w),
/// and for partial effects the evaluation point `h = (x, w')'`.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectQuery {
    pub kind: EffectKind,
    pub covariate_index: usize,
    pub h: Option<Vec<f64>>,
}

impl EffectQuery {
    pub fn pe(kind: EffectKind, covariate_index: usize, h: Vec<f64>) -> Self {
        EffectQuery {
            kind,
            covariate_index,
            h: Some(h),
        }
    }

    pub fn ape(kind: EffectKind, covariate_index: usize) -> Self {
        EffectQuery {
            kind,
            covariate_index,
            h: None,
        }
    }

    pub fn check(&self, n_covariates: usize) -> Result<()> {
        if self.covariate_index >= n_covariates {
            return Err(Error::Precondition(format!(
                "covariate index {} out of range (have {n_covariates})",
                self.covariate_index
            )));
        }
        if !self.kind.is_average() {
            match &self.h {
                Some(h) if h.len() == n_covariates && h.iter().all(|v| v.is_finite()) => {}
                Some(h) => {
                    return Err(Error::Precondition(format!(
                        "evaluation point must have {n_covariates} finite entries, got {}",
                        h.len()
                    )))
                }
                None => return Err(Error::Precondition("partial effect requires h".into())),
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(y: Vec<f64>) -> Dataset {
        let n = y.len();
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let w = DMatrix::from_element(n, 1, 1.0);
        let z = DMatrix::from_fn(n, 1, |i, _| (i as f64 * 1.3).cos());
        Dataset::new(y, x, w, z)
    }

    #[test]
    fn tobit_needs_censoring() {
        let d = small(vec![1.0; 10]);
        let err = validate(&d, ModelKind::Tobit).unwrap_err();
        assert!(matches!(err, Error::Validation(ValidationError::NoCensored)));
        assert_eq!(err.to_string(), "no censored observations (y = 0)");
    }

    #[test]
    fn probit_needs_binary() {
        let mut y = vec![0.0; 10];
        y[3] = 0.5;
        assert!(matches!(
            validate(&small(y), ModelKind::Probit),
            Err(Error::Validation(ValidationError::NonBinaryOutcome { row: 3, .. }))
        ));
        assert!(matches!(
            validate(&small(vec![1.0; 10]), ModelKind::Probit),
            Err(Error::Validation(ValidationError::DegenerateBinary))
        ));
    }

    #[test]
    fn duplicate_instrument_is_rank_error() {
        let mut d = small((0..20).map(|i| (i % 2) as f64).collect());
        let z = d.z.clone();
        d.z = DMatrix::from_fn(20, 2, |i, _| z[(i, 0)]);
        let err = validate(&d, ModelKind::Probit).unwrap_err();
        assert!(matches!(err, Error::Validation(ValidationError::RankDeficient { .. })));
    }

    #[test]
    fn zero_instrument_is_rank_error() {
        let mut d = small((0..20).map(|i| (i % 2) as f64).collect());
        d.z = DMatrix::zeros(20, 1);
        assert!(matches!(
            validate(&d, ModelKind::Probit),
            Err(Error::Validation(ValidationError::RankDeficient { .. }))
        ));
    }

    #[test]
    fn drops_non_finite_rows_and_is_idempotent() {
        let mut d = small((0..20).map(|i| (i % 3) as f64).collect());
        d.x[2] = f64::NAN;
        d.z[(5, 0)] = f64::INFINITY;
        d.w[(5, 0)] = f64::NAN;
        let v = validate(&d, ModelKind::Tobit).unwrap();
        assert_eq!(v.dropped_rows, 2);
        assert_eq!(v.dataset.n(), 18);
        let again = validate(&v.dataset, ModelKind::Tobit).unwrap();
        assert_eq!(again.dataset, v.dataset);
        assert_eq!(again.dropped_rows, 0);
    }

    #[test]
    fn too_few_rows_and_length_mismatch() {
        let d = small(vec![0.0, 1.0, 2.0, 0.0]);
        assert!(matches!(
            validate(&d, ModelKind::Tobit),
            Err(Error::Validation(ValidationError::TooFewRows { n: 4, required: 4 }))
        ));
        let mut d = small(vec![0.0, 1.0, 2.0, 0.0, 1.0, 1.0]);
        d.x.pop();
        assert!(matches!(
            validate(&d, ModelKind::Tobit),
            Err(Error::Validation(ValidationError::LengthMismatch { what: "x", .. }))
        ));
    }

    #[test]
    fn structural_forward_map() {
        let s = StructuralParams {
            sigma_ustar2: 1.0,
            sigma_vstar2: 1.0,
            sigma_ustar_vstar: 0.0,
            sigma_eps2: 1.0,
        };
        assert_eq!(s.reduced_form(2.0), (5.0, 2.0, -2.0));
        assert!(s.is_valid(0.0));
    }
}
