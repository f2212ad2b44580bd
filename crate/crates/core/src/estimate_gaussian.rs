//! Gaussian IV-Tobit / IV-Probit estimation: first-stage OLS, the
//! control-function second stage, and the joint maximum-likelihood fit.
//!
//! Both estimators return a [`ReducedFormFit`] whose covariance matrix is
//! laid out over `(theta, pi1, pi2, sigma_u2, sigma_v2, sigma_uv)`.
//!
//! Two-step covariance: first-stage normal equations, the `sigma_v2`
//! moment and the second-stage score are stacked into one just-identified
//! moment system `E g(psi) = 0`; the sequential-estimator sandwich
//! `G^{-1} Omega G^{-T} / n` accounts for the generated regressor.

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{Dataset, Estimator, ModelKind, ReducedFormFit};
use crate::stats_core::dual::{Dual, Real};
use crate::stats_core::normal::{inv_mills, log_norm_cdf, log_norm_pdf};
use crate::stats_core::optimize::{
    inverse_negative, quasi_newton_maximize, Maximum, Objective, QnOptions,
};
use crate::stats_core::rng;

/// Largest |rho_UV| accepted before declaring the endogeneity degenerate.
pub const RHO_DEGENERATE: f64 = 1.0 - 1e-6;

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub qn: QnOptions,
    /// Random restarts after a non-converged run.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            qn: QnOptions::default(),
            restarts: 3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FirstStageFit {
    pub pi1: Vec<f64>,
    pub pi2: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `RSS / n`.
    pub sigma_v2_hat: f64,
}

/// Second-stage coefficients on `(x, w, v_hat)` and the error scale.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondStageFit {
    pub b1: f64,
    pub b2: Vec<f64>,
    pub b_v: f64,
    /// Error standard deviation (fixed at 1 for Probit).
    pub sigma_e: f64,
}

impl SecondStageFit {
    fn mu(&self, d: &Dataset, vhat: &[f64], i: usize) -> f64 {
        let mut m = self.b1 * d.x[i] + self.b_v * vhat[i];
        for (k, b) in self.b2.iter().enumerate() {
            m += b * d.w[(i, k)];
        }
        m
    }
}

/// Least squares via thin QR. Returns coefficients and residuals.
fn ols(design: &DMatrix<f64>, target: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let ratio = crate::model::singular_value_ratio(design);
    if !(ratio > 1e-10) {
        return Err(crate::error::ValidationError::RankDeficient { ratio }.into());
    }
    let qr = design.clone().qr();
    let (q, r) = (qr.q(), qr.r());
    let t = DVector::from_column_slice(target);
    let coef = r
        .solve_upper_triangular(&(q.transpose() * &t))
        .ok_or_else(|| Error::Numerical {
            at: 0.0,
            context: "singular triangular factor in least squares".into(),
        })?;
    let resid = t - design * &coef;
    Ok((coef.as_slice().to_vec(), resid.as_slice().to_vec()))
}

/// OLS of `x` on `(z, w)`.
pub fn first_stage(d: &Dataset) -> Result<FirstStageFit> {
    let (coef, residuals) = ols(&d.zw(), &d.x)?;
    let n = d.n() as f64;
    let sigma_v2_hat = residuals.iter().map(|r| r * r).sum::<f64>() / n;
    Ok(FirstStageFit {
        pi1: coef[..d.d_z()].to_vec(),
        pi2: coef[d.d_z()..].to_vec(),
        residuals,
        sigma_v2_hat,
    })
}

/// Tobit contribution and its derivatives with respect to the index `mu`
/// and `ln sigma`.
#[inline]
fn tobit_term(y: f64, mu: f64, log_sigma: f64) -> (f64, f64, f64) {
    let sigma = log_sigma.exp();
    if y > 0.0 {
        let z = (y - mu) / sigma;
        (log_norm_pdf(z) - log_sigma, z / sigma, z * z - 1.0)
    } else {
        let t = -mu / sigma;
        let lam = inv_mills(t);
        (log_norm_cdf(t), -lam / sigma, lam * mu / sigma)
    }
}

/// Probit contribution and its derivative with respect to the index.
#[inline]
fn probit_term(y: f64, s: f64) -> (f64, f64) {
    if y > 0.5 {
        (log_norm_cdf(s), inv_mills(s))
    } else {
        (log_norm_cdf(-s), -inv_mills(-s))
    }
}

/// Censored-regression log-likelihood of the second stage.
pub fn tobit_loglik(params: &SecondStageFit, d: &Dataset, vhat: &[f64]) -> Result<f64> {
    if !(params.sigma_e > 0.0) {
        return Err(Error::Precondition(format!(
            "sigma_e must be positive, got {}",
            params.sigma_e
        )));
    }
    let ls = params.sigma_e.ln();
    let mut total = 0.0;
    for i in 0..d.n() {
        let (l, _, _) = tobit_term(d.y[i], params.mu(d, vhat, i), ls);
        if !l.is_finite() {
            return Err(Error::NonFiniteRow { row: i });
        }
        total += l;
    }
    Ok(total)
}

/// Binary-response log-likelihood of the second stage (unit error scale).
pub fn probit_loglik(params: &SecondStageFit, d: &Dataset, vhat: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..d.n() {
        let (l, _) = probit_term(d.y[i], params.mu(d, vhat, i));
        if !l.is_finite() {
            return Err(Error::NonFiniteRow { row: i });
        }
        total += l;
    }
    Ok(total)
}

/// Second-stage objective over `(b1, b2, b_v[, ln sigma_e])`.
pub struct SecondStageObjective<'a> {
    pub data: &'a Dataset,
    pub vhat: &'a [f64],
    pub kind: ModelKind,
}

impl SecondStageObjective<'_> {
    fn n_coef(&self) -> usize {
        self.data.d_w() + 2
    }

    fn regressor(&self, i: usize, j: usize) -> f64 {
        let dw = self.data.d_w();
        match j {
            0 => self.data.x[i],
            j if j <= dw => self.data.w[(i, j - 1)],
            _ => self.vhat[i],
        }
    }

    fn index(&self, p: &[f64], i: usize) -> f64 {
        (0..self.n_coef()).map(|j| p[j] * self.regressor(i, j)).sum()
    }

    fn eval(&self, p: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let k = self.n_coef();
        let mut total = 0.0;
        let mut g = vec![0.0; p.len()];
        for i in 0..self.data.n() {
            let mu = self.index(p, i);
            let y = self.data.y[i];
            let (l, dmu, ds) = match self.kind {
                ModelKind::Tobit => tobit_term(y, mu, p[k]),
                ModelKind::Probit => {
                    let (l, dmu) = probit_term(y, mu);
                    (l, dmu, 0.0)
                }
            };
            total += l;
            for (j, gj) in g.iter_mut().enumerate().take(k) {
                *gj += dmu * self.regressor(i, j);
            }
            if self.kind == ModelKind::Tobit {
                g[k] += ds;
            }
        }
        if let Some(out) = grad {
            out.copy_from_slice(&g);
        }
        total
    }

    /// Per-observation score, written into `out` (length = parameter count).
    fn score_i(&self, p: &[f64], i: usize, vhat_i: f64, out: &mut [f64]) {
        let k = self.n_coef();
        let dw = self.data.d_w();
        let reg = |j: usize| match j {
            0 => self.data.x[i],
            j if j <= dw => self.data.w[(i, j - 1)],
            _ => vhat_i,
        };
        let mu: f64 = (0..k).map(|j| p[j] * reg(j)).sum();
        let y = self.data.y[i];
        let (dmu, ds) = match self.kind {
            ModelKind::Tobit => {
                let (_, a, b) = tobit_term(y, mu, p[k]);
                (a, b)
            }
            ModelKind::Probit => (probit_term(y, mu).1, 0.0),
        };
        for (j, o) in out.iter_mut().enumerate().take(k) {
            *o = dmu * reg(j);
        }
        if self.kind == ModelKind::Tobit {
            out[k] = ds;
        }
    }
}

impl Objective for SecondStageObjective<'_> {
    fn value(&self, p: &[f64]) -> f64 {
        self.eval(p, None)
    }
    fn gradient(&self, p: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; p.len()];
        self.eval(p, Some(&mut g));
        g
    }
}

fn maximize_with_restarts(obj: &dyn Objective, start: &[f64], opts: &FitOptions) -> Result<Maximum> {
    let mut result = quasi_newton_maximize(obj, start, &opts.qn);
    let mut rng = rng::seeded(opts.seed);
    for _ in 0..opts.restarts {
        if result.is_ok() {
            break;
        }
        let jittered: Vec<f64> = start
            .iter()
            .map(|&s| {
                let e: f64 = rng.sample(StandardNormal);
                s + 0.1 * (1.0 + s.abs()) * e
            })
            .collect();
        result = quasi_newton_maximize(obj, &jittered, &opts.qn);
    }
    result
}

fn second_stage(d: &Dataset, vhat: &[f64], kind: ModelKind, opts: &FitOptions) -> Result<(Vec<f64>, Maximum)> {
    let obj = SecondStageObjective { data: d, vhat, kind };
    let k = obj.n_coef();
    let start = match kind {
        ModelKind::Tobit => {
            let design = DMatrix::from_fn(d.n(), k, |i, j| obj.regressor(i, j));
            let (coef, resid) = ols(&design, &d.y)?;
            let var = resid.iter().map(|r| r * r).sum::<f64>() / d.n() as f64;
            let mut s = coef;
            s.push(0.5 * var.max(1e-8).ln());
            s
        }
        ModelKind::Probit => vec![0.0; k],
    };
    let m = maximize_with_restarts(&obj, &start, opts)?;
    Ok((m.argmax.clone(), m))
}

/// Map a second-stage solution (plus first stage) to reduced-form values,
/// laid out as `theta | pi1 | pi2 | sigma_u2 | sigma_v2 | sigma_uv`.
fn two_step_to_reduced(kind: ModelKind, d_w: usize, pi: &[f64], sigma_v2: f64, beta: &[f64]) -> Vec<f64> {
    let k = d_w + 2;
    let b_v = beta[k - 1];
    let mut out = Vec::with_capacity(k + pi.len() + 2);
    match kind {
        ModelKind::Tobit => {
            let se2 = (2.0 * beta[k]).exp();
            out.extend_from_slice(&beta[..k - 1]);
            out.extend_from_slice(pi);
            out.extend([se2 + b_v * b_v * sigma_v2, sigma_v2, b_v * sigma_v2]);
        }
        ModelKind::Probit => {
            let se = (1.0 / (1.0 + b_v * b_v * sigma_v2)).sqrt();
            out.extend(beta[..k - 1].iter().map(|b| b * se));
            out.extend_from_slice(pi);
            out.extend([1.0, sigma_v2, b_v * se * sigma_v2]);
        }
    }
    out
}

fn jacobian(f: impl Fn(&[f64]) -> Vec<f64>, x: &[f64]) -> DMatrix<f64> {
    let m = f(x).len();
    let mut j = DMatrix::zeros(m, x.len());
    let mut p = x.to_vec();
    for c in 0..x.len() {
        let h = 1e-6 * (1.0 + x[c].abs());
        p[c] = x[c] + h;
        let up = f(&p);
        p[c] = x[c] - h;
        let down = f(&p);
        p[c] = x[c];
        for r in 0..m {
            j[(r, c)] = (up[r] - down[r]) / (2.0 * h);
        }
    }
    j
}

/// Per-observation stacked moments `g_i(psi)` for the two-step estimator,
/// `psi = (pi, sigma_v2, beta)`.
fn for_each_two_step_moment(d: &Dataset, kind: ModelKind, psi: &[f64], mut visit: impl FnMut(&[f64])) {
    let kz = d.d_z() + d.d_w();
    let sigma_v2 = psi[kz];
    let beta = &psi[kz + 1..];
    let obj = SecondStageObjective {
        data: d,
        vhat: &[],
        kind,
    };
    let mut g = vec![0.0; psi.len()];
    for i in 0..d.n() {
        let fitted: f64 = d.zw_row(i).zip(&psi[..kz]).map(|(a, b)| a * b).sum();
        let v = d.x[i] - fitted;
        for (gk, zk) in g.iter_mut().zip(d.zw_row(i)) {
            *gk = zk * v;
        }
        g[kz] = v * v - sigma_v2;
        obj.score_i(beta, i, v, &mut g[kz + 1..]);
        visit(&g);
    }
}

fn two_step_vcov(d: &Dataset, kind: ModelKind, psi: &[f64]) -> Result<DMatrix<f64>> {
    let m = psi.len();
    let n = d.n() as f64;
    let mean_moment = |p: &[f64]| {
        let mut acc = vec![0.0; m];
        for_each_two_step_moment(d, kind, p, |g| {
            for (a, b) in acc.iter_mut().zip(g) {
                *a += b;
            }
        });
        acc.iter().map(|a| a / n).collect::<Vec<_>>()
    };
    let g_mat = jacobian(mean_moment, psi);
    let mut omega = DMatrix::<f64>::zeros(m, m);
    for_each_two_step_moment(d, kind, psi, |g| {
        let gv = DVector::from_column_slice(g);
        omega += &gv * gv.transpose();
    });
    omega /= n;
    let g_inv = g_mat.try_inverse().ok_or_else(|| Error::Numerical {
        at: 0.0,
        context: "singular moment Jacobian in two-step covariance".into(),
    })?;
    let v = &g_inv * omega * g_inv.transpose() / n;
    Ok((&v + v.transpose()) * 0.5)
}

fn check_degenerate(fit: &ReducedFormFit) -> Result<()> {
    let rho = fit.rho_uv();
    if !(rho.abs() < RHO_DEGENERATE) {
        return Err(Error::DegenerateEndogeneity { rho });
    }
    Ok(())
}

/// Control-function two-step estimator.
pub fn fit_two_step(d: &Dataset, kind: ModelKind) -> Result<ReducedFormFit> {
    fit_two_step_with(d, kind, &FitOptions::default())
}

pub fn fit_two_step_with(d: &Dataset, kind: ModelKind, opts: &FitOptions) -> Result<ReducedFormFit> {
    let fs = first_stage(d)?;
    if !(fs.sigma_v2_hat > 1e-14 * (1.0 + d.x.iter().map(|v| v * v).sum::<f64>() / d.n() as f64)) {
        return Err(Error::DegenerateFirstStage);
    }
    let (beta, m) = second_stage(d, &fs.residuals, kind, opts)?;
    let mut pi = fs.pi1.clone();
    pi.extend_from_slice(&fs.pi2);
    let mut psi = pi.clone();
    psi.push(fs.sigma_v2_hat);
    psi.extend_from_slice(&beta);

    let d_w = d.d_w();
    let kz = pi.len();
    let rf_values = two_step_to_reduced(kind, d_w, &pi, fs.sigma_v2_hat, &beta);
    let mut fit = ReducedFormFit {
        theta: rf_values[..d_w + 1].to_vec(),
        pi1: fs.pi1.clone(),
        pi2: fs.pi2.clone(),
        sigma_u2: 0.0,
        sigma_v2: 0.0,
        sigma_uv: 0.0,
        vcov: None,
        model_kind: kind,
        estimator: Estimator::TwoStep,
        loglik: 0.0,
        iterations: m.iterations,
    };
    fit = fit.with_vector(&rf_values);
    check_degenerate(&fit)?;

    let v_psi = two_step_vcov(d, kind, &psi)?;
    let map = |p: &[f64]| two_step_to_reduced(kind, d_w, &p[..kz], p[kz], &p[kz + 1..]);
    let jac = jacobian(map, &psi);
    let v = &jac * v_psi * jac.transpose();
    fit.vcov = Some((&v + v.transpose()) * 0.5);
    fit.loglik = joint_loglik(&fit, d)?;
    Ok(fit)
}

/// One observation's joint log-density `ln f(y | x, z, w) + ln f(x | z, w)`,
/// given the outcome index `a = theta'h`, the first-stage fit `q = pi'(z,w)`
/// and `(ln sigma_v, ln sigma_u, atanh rho)`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn joint_term<T: Real>(kind: ModelKind, y: f64, x: f64, a: T, q: T, lsv: T, lsu: T, r: T) -> T {
    let sv = lsv.exp();
    let su = lsu.exp();
    let rho = r.tanh();
    let v = -q.add_f(-x);
    let first = (v / sv).log_norm_pdf() - lsv;
    // U | V ~ N(theta_v v, s_e^2), theta_v = rho su / sv, s_e = su sqrt(1 - rho^2) = su / cosh(r)
    let cond_mean = a + rho * su / sv * v;
    let se = su / r.cosh();
    let second = match kind {
        ModelKind::Tobit => {
            if y > 0.0 {
                ((-cond_mean).add_f(y) / se).log_norm_pdf() - se.ln()
            } else {
                (-cond_mean / se).log_norm_cdf()
            }
        }
        ModelKind::Probit => {
            if y > 0.5 {
                (cond_mean / se).log_norm_cdf()
            } else {
                (-cond_mean / se).log_norm_cdf()
            }
        }
    };
    first + second
}

/// Joint likelihood over `psi = (theta, pi, ln sigma_v, [ln sigma_u,] atanh rho)`.
pub struct JointObjective<'a> {
    pub data: &'a Dataset,
    pub kind: ModelKind,
}

impl JointObjective<'_> {
    pub fn dim(&self) -> usize {
        let d = self.data;
        1 + d.d_w() + d.d_z() + d.d_w() + if self.kind == ModelKind::Tobit { 3 } else { 2 }
    }

    fn split<'p>(&self, p: &'p [f64]) -> (&'p [f64], &'p [f64], f64, f64, f64) {
        let d = self.data;
        let nt = 1 + d.d_w();
        let np = d.d_z() + d.d_w();
        let (theta, rest) = p.split_at(nt);
        let (pi, s) = rest.split_at(np);
        match self.kind {
            ModelKind::Tobit => (theta, pi, s[0], s[1], s[2]),
            ModelKind::Probit => (theta, pi, s[0], 0.0, s[1]),
        }
    }

    fn indices(&self, theta: &[f64], pi: &[f64], i: usize) -> (f64, f64) {
        let d = self.data;
        let mut a = theta[0] * d.x[i];
        for k in 0..d.d_w() {
            a += theta[k + 1] * d.w[(i, k)];
        }
        let q: f64 = d.zw_row(i).zip(pi).map(|(z, p)| z * p).sum();
        (a, q)
    }

    /// Log-likelihood, failing on the first non-finite row.
    pub fn loglik(&self, p: &[f64]) -> Result<f64> {
        let (theta, pi, lsv, lsu, r) = self.split(p);
        let mut total = 0.0;
        for i in 0..self.data.n() {
            let (a, q) = self.indices(theta, pi, i);
            let l = joint_term(self.kind, self.data.y[i], self.data.x[i], a, q, lsv, lsu, r);
            if !l.is_finite() {
                return Err(Error::NonFiniteRow { row: i });
            }
            total += l;
        }
        Ok(total)
    }
}

impl Objective for JointObjective<'_> {
    fn value(&self, p: &[f64]) -> f64 {
        self.loglik(p).unwrap_or(f64::NAN)
    }

    fn gradient(&self, p: &[f64]) -> Vec<f64> {
        let d = self.data;
        let (theta, pi, lsv, lsu, r) = self.split(p);
        let nt = theta.len();
        let np = pi.len();
        let tobit = self.kind == ModelKind::Tobit;
        let nd = if tobit { 5 } else { 4 };
        let mut g = vec![0.0; p.len()];
        for i in 0..d.n() {
            let (a, q) = self.indices(theta, pi, i);
            let da = Dual::var(a, 0, nd);
            let dq = Dual::var(q, 1, nd);
            let dlsv = Dual::var(lsv, 2, nd);
            let (dlsu, dr) = if tobit {
                (Dual::var(lsu, 3, nd), Dual::var(r, 4, nd))
            } else {
                (Dual::constant(0.0, nd), Dual::var(r, 3, nd))
            };
            let l = joint_term(self.kind, d.y[i], d.x[i], da, dq, dlsv, dlsu, dr);
            let gl = l.grad();
            g[0] += gl[0] * d.x[i];
            for k in 0..d.d_w() {
                g[1 + k] += gl[0] * d.w[(i, k)];
            }
            for (k, z) in d.zw_row(i).enumerate() {
                g[nt + k] += gl[1] * z;
            }
            for (k, gk) in gl[2..].iter().enumerate() {
                g[nt + np + k] += gk;
            }
        }
        g
    }
}

fn joint_params_from_fit(fit: &ReducedFormFit) -> Result<Vec<f64>> {
    let rho = fit.rho_uv();
    if !(rho.abs() < 1.0) || !(fit.sigma_v2 > 0.0) || !(fit.sigma_u2 > 0.0) {
        return Err(Error::DegenerateEndogeneity { rho });
    }
    let mut p = fit.theta.clone();
    p.extend_from_slice(&fit.pi1);
    p.extend_from_slice(&fit.pi2);
    p.push(0.5 * fit.sigma_v2.ln());
    if fit.model_kind == ModelKind::Tobit {
        p.push(0.5 * fit.sigma_u2.ln());
    }
    p.push(rho.atanh());
    Ok(p)
}

fn joint_to_reduced(kind: ModelKind, nt: usize, np: usize, p: &[f64]) -> Vec<f64> {
    let mut out = p[..nt + np].to_vec();
    let s = &p[nt + np..];
    let (sv, su, rho) = match kind {
        ModelKind::Tobit => (s[0].exp(), s[1].exp(), s[2].tanh()),
        ModelKind::Probit => (s[0].exp(), 1.0, s[1].tanh()),
    };
    out.extend([su * su, sv * sv, rho * su * sv]);
    out
}

/// Exact joint log-likelihood `sum_i ln f(y_i, x_i | z_i, w_i)` at reduced-form values.
pub fn joint_loglik(fit: &ReducedFormFit, d: &Dataset) -> Result<f64> {
    let p = joint_params_from_fit(fit)?;
    JointObjective {
        data: d,
        kind: fit.model_kind,
    }
    .loglik(&p)
}

/// Joint maximum likelihood, started from the two-step estimate.
pub fn fit_joint_mle(d: &Dataset, kind: ModelKind) -> Result<ReducedFormFit> {
    fit_joint_mle_with(d, kind, &FitOptions::default())
}

pub fn fit_joint_mle_with(d: &Dataset, kind: ModelKind, opts: &FitOptions) -> Result<ReducedFormFit> {
    let start_fit = fit_two_step_with(d, kind, opts)?;
    fit_joint_mle_from(d, &start_fit, opts)
}

/// Joint maximum likelihood from an explicit starting point.
pub fn fit_joint_mle_from(d: &Dataset, start: &ReducedFormFit, opts: &FitOptions) -> Result<ReducedFormFit> {
    let kind = start.model_kind;
    let obj = JointObjective { data: d, kind };
    let p0 = joint_params_from_fit(start)?;
    let m = maximize_with_restarts(&obj, &p0, opts)?;
    let nt = 1 + d.d_w();
    let np = d.d_z() + d.d_w();
    let values = joint_to_reduced(kind, nt, np, &m.argmax);
    let mut fit = start.with_vector(&values);
    fit.estimator = Estimator::Mle;
    fit.loglik = m.value;
    fit.iterations = m.iterations;
    check_degenerate(&fit)?;
    let v_psi = inverse_negative(&m.hessian).ok_or_else(|| Error::NonConvergence {
        iterations: m.iterations,
        grad_norm: m.grad_norm,
        value: m.value,
        last: m.argmax.clone(),
    })?;
    let jac = jacobian(|p| joint_to_reduced(kind, nt, np, p), &m.argmax);
    let v = &jac * v_psi * jac.transpose();
    fit.vcov = Some((&v + v.transpose()) * 0.5);
    Ok(fit)
}

/// Dispatch on the estimator choice.
pub fn fit(d: &Dataset, kind: ModelKind, estimator: Estimator, opts: &FitOptions) -> Result<ReducedFormFit> {
    match estimator {
        Estimator::TwoStep => fit_two_step_with(d, kind, opts),
        Estimator::Mle => fit_joint_mle_with(d, kind, opts),
    }
}
