//! IV-Mixed-Tobit: the reduced-form disturbances `(U, V)` follow a
//! K-component bivariate normal mixture with overall mean zero.
//!
//! Estimation is direct maximum likelihood over an unconstrained vector
//!
//! ```text
//! theta | pi | logits (K-1) | (mu_u, mu_v) for k < K | (ln L11, L21, ln L22) per k
//! ```
//!
//! where the last logit is fixed at 0, `mu_K` is solved from
//! `sum_k p_k mu_k = 0`, and `Sigma_k = L L'` with `L = [[L11, 0], [L21, L22]]`.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{intersect_component_intervals, ComponentCov};
use crate::error::{Error, Result};
use crate::estimate_gaussian::{fit_two_step, FitOptions};
use crate::model::{Dataset, Interval, ModelKind};
use crate::stats_core::dual::{log_sum_exp, Dual, Real, MAX_DUAL};
use crate::stats_core::optimize::{inverse_negative, quasi_newton_maximize, Maximum, Objective};
use crate::stats_core::rng;

/// Smallest mixing weight accepted in a fitted model.
pub const MIN_WEIGHT: f64 = 1e-6;
/// Largest K supported by the fixed-capacity dual numbers.
pub const MAX_COMPONENTS: usize = (MAX_DUAL + 1) / 6;

const CHUNK: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub weight: f64,
    pub mu_u: f64,
    pub mu_v: f64,
    pub sigma_u2: f64,
    pub sigma_v2: f64,
    pub sigma_uv: f64,
}

impl Component {
    pub fn cov(&self) -> ComponentCov {
        ComponentCov::new(self.sigma_u2, self.sigma_v2, self.sigma_uv)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureParams {
    pub theta: Vec<f64>,
    pub pi1: Vec<f64>,
    pub pi2: Vec<f64>,
    pub components: Vec<Component>,
}

impl MixtureParams {
    pub fn k(&self) -> usize {
        self.components.len()
    }

    /// Check simplex weights, mean-zero location and positive-definite covariances.
    pub fn check(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::Precondition("mixture needs at least one component".into()));
        }
        let total: f64 = self.components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-10 || self.components.iter().any(|c| !(c.weight > 0.0)) {
            return Err(Error::Precondition(format!("weights must be positive and sum to 1 (sum {total})")));
        }
        let mu_u: f64 = self.components.iter().map(|c| c.weight * c.mu_u).sum();
        let mu_v: f64 = self.components.iter().map(|c| c.weight * c.mu_v).sum();
        if mu_u.abs() > 1e-10 || mu_v.abs() > 1e-10 {
            return Err(Error::Precondition(format!("mixture mean ({mu_u}, {mu_v}) is not zero")));
        }
        for (k, c) in self.components.iter().enumerate() {
            if !(c.sigma_u2 > 0.0 && c.sigma_v2 > 0.0 && c.sigma_uv * c.sigma_uv < c.sigma_u2 * c.sigma_v2) {
                return Err(Error::Precondition(format!("component {k} covariance is not positive definite")));
            }
        }
        Ok(())
    }

    /// Natural parameter vector: `theta | pi1 | pi2 | (p, mu_u, mu_v, su2, sv2, suv) per k`.
    pub fn to_vector(&self) -> Vec<f64> {
        let mut v = self.theta.clone();
        v.extend_from_slice(&self.pi1);
        v.extend_from_slice(&self.pi2);
        for c in &self.components {
            v.extend([c.weight, c.mu_u, c.mu_v, c.sigma_u2, c.sigma_v2, c.sigma_uv]);
        }
        v
    }

    pub fn param_names(&self) -> Vec<String> {
        let mut names = vec!["theta:x".to_string()];
        names.extend((0..self.pi2.len()).map(|k| format!("theta:w{k}")));
        names.extend((0..self.pi1.len()).map(|k| format!("pi:z{k}")));
        names.extend((0..self.pi2.len()).map(|k| format!("pi:w{k}")));
        for k in 0..self.k() {
            for p in ["p", "mu_u", "mu_v", "sigma_u2", "sigma_v2", "sigma_uv"] {
                names.push(format!("{p}[{k}]"));
            }
        }
        names
    }
}

/// Component quantities used by the per-observation density.
#[derive(Clone, Copy)]
struct CompT<T> {
    log_w: T,
    mu_u: T,
    mu_v: T,
    ln_sv: T,
    sv: T,
    beta: T,
    ln_s: T,
    s: T,
}

fn comp_from_moments<T: Real>(log_w: T, mu_u: T, mu_v: T, su2: T, sv2: T, suv: T) -> CompT<T> {
    let sv = sv2.sqrt();
    let s2 = su2 - suv * suv / sv2;
    let s = s2.sqrt();
    CompT {
        log_w,
        mu_u,
        mu_v,
        ln_sv: sv.ln(),
        sv,
        beta: suv / sv2,
        ln_s: s.ln(),
        s,
    }
}

/// `ln f(y, x | a, q)` for one observation.
fn obs_term<T: Real>(y: f64, x: f64, a: T, q: T, comps: &[CompT<T>], buf: &mut Vec<T>) -> T {
    buf.clear();
    let v = -q.add_f(-x);
    for c in comps {
        let dv = v - c.mu_v;
        let lv = (dv / c.sv).log_norm_pdf() - c.ln_sv;
        let m = c.mu_u + c.beta * dv;
        let lu = if y > 0.0 {
            ((-a - m).add_f(y) / c.s).log_norm_pdf() - c.ln_s
        } else {
            ((-a - m) / c.s).log_norm_cdf()
        };
        buf.push(c.log_w + lv + lu);
    }
    log_sum_exp(buf)
}

/// Layout of the unconstrained parameter vector.
#[derive(Debug, Clone, Copy)]
struct Layout {
    nt: usize,
    np: usize,
    k: usize,
}

impl Layout {
    fn n_comp(&self) -> usize {
        6 * self.k - 3
    }
    fn dim(&self) -> usize {
        self.nt + self.np + self.n_comp()
    }
    fn comp_start(&self) -> usize {
        self.nt + self.np
    }
}

/// Component quantities from the unconstrained block `b`.
fn comps_from_free<T: Real>(k: usize, b: &[T]) -> Vec<CompT<T>> {
    let zero = b.first().map(|x| x.cst(0.0));
    let mut logits: Vec<T> = b[..k - 1].to_vec();
    let zero = zero.unwrap_or_else(|| panic!("empty parameter block"));
    logits.push(zero);
    let lse = log_sum_exp(&logits);
    let log_w: Vec<T> = logits.iter().map(|&l| l - lse).collect();
    let w: Vec<T> = log_w.iter().map(|l| l.exp()).collect();
    let means = &b[k - 1..3 * (k - 1)];
    let mut mu_u: Vec<T> = (0..k - 1).map(|j| means[2 * j]).collect();
    let mut mu_v: Vec<T> = (0..k - 1).map(|j| means[2 * j + 1]).collect();
    let mut su = zero;
    let mut sv = zero;
    for j in 0..k - 1 {
        su = su + w[j] * mu_u[j];
        sv = sv + w[j] * mu_v[j];
    }
    mu_u.push(-su / w[k - 1]);
    mu_v.push(-sv / w[k - 1]);
    let chol = &b[3 * (k - 1)..];
    (0..k)
        .map(|j| {
            let l11 = chol[3 * j].exp();
            let l21 = chol[3 * j + 1];
            let l22 = chol[3 * j + 2].exp();
            comp_from_moments(log_w[j], mu_u[j], mu_v[j], l11 * l11, l21 * l21 + l22 * l22, l11 * l21)
        })
        .collect()
}

fn natural_from_free(layout: Layout, p: &[f64]) -> Vec<f64> {
    let k = layout.k;
    let b = &p[layout.comp_start()..];
    let mut logits = b[..k - 1].to_vec();
    logits.push(0.0);
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tot: f64 = logits.iter().map(|l| (l - m).exp()).sum();
    let w: Vec<f64> = logits.iter().map(|l| (l - m).exp() / tot).collect();
    let means = &b[k - 1..3 * (k - 1)];
    let mut mu_u: Vec<f64> = (0..k - 1).map(|j| means[2 * j]).collect();
    let mut mu_v: Vec<f64> = (0..k - 1).map(|j| means[2 * j + 1]).collect();
    let su: f64 = (0..k - 1).map(|j| w[j] * mu_u[j]).sum();
    let sv: f64 = (0..k - 1).map(|j| w[j] * mu_v[j]).sum();
    mu_u.push(-su / w[k - 1]);
    mu_v.push(-sv / w[k - 1]);
    let chol = &b[3 * (k - 1)..];
    let mut out = p[..layout.comp_start()].to_vec();
    for j in 0..k {
        let l11 = chol[3 * j].exp();
        let l21 = chol[3 * j + 1];
        let l22 = chol[3 * j + 2].exp();
        out.extend([w[j], mu_u[j], mu_v[j], l11 * l11, l21 * l21 + l22 * l22, l11 * l21]);
    }
    out
}

fn params_from_natural(layout: Layout, v: &[f64]) -> MixtureParams {
    let nw = layout.nt - 1;
    let nz = layout.np - nw;
    let theta = v[..layout.nt].to_vec();
    let pi1 = v[layout.nt..layout.nt + nz].to_vec();
    let pi2 = v[layout.nt + nz..layout.comp_start()].to_vec();
    let components = v[layout.comp_start()..]
        .chunks(6)
        .map(|c| Component {
            weight: c[0],
            mu_u: c[1],
            mu_v: c[2],
            sigma_u2: c[3],
            sigma_v2: c[4],
            sigma_uv: c[5],
        })
        .collect();
    MixtureParams {
        theta,
        pi1,
        pi2,
        components,
    }
}

fn free_from_params(params: &MixtureParams) -> Vec<f64> {
    let k = params.k();
    let mut p = params.theta.clone();
    p.extend_from_slice(&params.pi1);
    p.extend_from_slice(&params.pi2);
    let last = params.components[k - 1].weight.ln();
    for c in &params.components[..k - 1] {
        p.push(c.weight.ln() - last);
    }
    for c in &params.components[..k - 1] {
        p.extend([c.mu_u, c.mu_v]);
    }
    for c in &params.components {
        let l11 = c.sigma_u2.sqrt();
        let l21 = c.sigma_uv / l11;
        let l22 = (c.sigma_v2 - l21 * l21).sqrt();
        p.extend([l11.ln(), l21, l22.ln()]);
    }
    p
}

/// Mixed-Tobit log-likelihood over the unconstrained parameter vector.
pub struct MixtureObjective<'a> {
    pub data: &'a Dataset,
    layout: Layout,
}

impl<'a> MixtureObjective<'a> {
    pub fn new(data: &'a Dataset, k: usize) -> Result<Self> {
        if k == 0 || k > MAX_COMPONENTS {
            return Err(Error::Precondition(format!(
                "number of components must be in 1..={MAX_COMPONENTS}, got {k}"
            )));
        }
        Ok(MixtureObjective {
            data,
            layout: Layout {
                nt: 1 + data.d_w(),
                np: data.d_z() + data.d_w(),
                k,
            },
        })
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    /// Unconstrained vector for `params`.
    pub fn encode(&self, params: &MixtureParams) -> Vec<f64> {
        free_from_params(params)
    }

    pub fn decode(&self, p: &[f64]) -> MixtureParams {
        params_from_natural(self.layout, &natural_from_free(self.layout, p))
    }

    fn indices(&self, p: &[f64], i: usize) -> (f64, f64) {
        let d = self.data;
        let nt = self.layout.nt;
        let mut a = p[0] * d.x[i];
        for k in 0..d.d_w() {
            a += p[1 + k] * d.w[(i, k)];
        }
        let q: f64 = d.zw_row(i).zip(&p[nt..nt + self.layout.np]).map(|(z, b)| z * b).sum();
        (a, q)
    }

    fn terms_f64(&self, p: &[f64], range: std::ops::Range<usize>) -> std::result::Result<f64, usize> {
        let comps = comps_from_free(self.layout.k, &p[self.layout.comp_start()..]);
        let mut buf = Vec::with_capacity(self.layout.k);
        let mut total = 0.0;
        for i in range {
            let (a, q) = self.indices(p, i);
            let l = obs_term(self.data.y[i], self.data.x[i], a, q, &comps, &mut buf);
            if !l.is_finite() {
                return Err(i);
            }
            total += l;
        }
        Ok(total)
    }

    pub fn loglik(&self, p: &[f64]) -> Result<f64> {
        let n = self.data.n();
        let parts: Vec<_> = (0..n.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| self.terms_f64(p, c * CHUNK..((c + 1) * CHUNK).min(n)))
            .collect();
        let mut total = 0.0;
        for part in parts {
            total += part.map_err(|row| Error::NonFiniteRow { row })?;
        }
        Ok(total)
    }

    fn gradient_chunk(&self, p: &[f64], range: std::ops::Range<usize>) -> Vec<f64> {
        let lay = self.layout;
        let nd = 2 + lay.n_comp();
        let cs = lay.comp_start();
        let block: Vec<Dual> = (0..lay.n_comp()).map(|j| Dual::var(p[cs + j], 2 + j, nd)).collect();
        let comps = comps_from_free(lay.k, &block);
        let mut buf = Vec::with_capacity(lay.k);
        let mut g = vec![0.0; p.len()];
        let d = self.data;
        for i in range {
            let (a, q) = self.indices(p, i);
            let l = obs_term(d.y[i], d.x[i], Dual::var(a, 0, nd), Dual::var(q, 1, nd), &comps, &mut buf);
            let gl = l.grad();
            g[0] += gl[0] * d.x[i];
            for k in 0..d.d_w() {
                g[1 + k] += gl[0] * d.w[(i, k)];
            }
            for (k, z) in d.zw_row(i).enumerate() {
                g[lay.nt + k] += gl[1] * z;
            }
            for (k, gk) in gl[2..].iter().enumerate() {
                g[cs + k] += gk;
            }
        }
        g
    }
}

impl Objective for MixtureObjective<'_> {
    fn value(&self, p: &[f64]) -> f64 {
        self.loglik(p).unwrap_or(f64::NAN)
    }

    fn gradient(&self, p: &[f64]) -> Vec<f64> {
        let n = self.data.n();
        let parts: Vec<Vec<f64>> = (0..n.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| self.gradient_chunk(p, c * CHUNK..((c + 1) * CHUNK).min(n)))
            .collect();
        let mut g = vec![0.0; p.len()];
        for part in parts {
            for (a, b) in g.iter_mut().zip(part) {
                *a += b;
            }
        }
        g
    }
}

/// Exact mixed-Tobit log-likelihood at natural parameters.
pub fn mixed_tobit_loglik(params: &MixtureParams, d: &Dataset) -> Result<f64> {
    params.check()?;
    if params.theta.len() != 1 + d.d_w() || params.pi1.len() != d.d_z() || params.pi2.len() != d.d_w() {
        return Err(Error::Precondition("parameter dimensions do not match the dataset".into()));
    }
    let comps: Vec<CompT<f64>> = params
        .components
        .iter()
        .map(|c| comp_from_moments(c.weight.ln(), c.mu_u, c.mu_v, c.sigma_u2, c.sigma_v2, c.sigma_uv))
        .collect();
    let mut buf = Vec::new();
    let mut total = 0.0;
    for i in 0..d.n() {
        let mut a = params.theta[0] * d.x[i];
        for k in 0..d.d_w() {
            a += params.theta[1 + k] * d.w[(i, k)];
        }
        let q: f64 = d
            .zw_row(i)
            .zip(params.pi1.iter().chain(&params.pi2))
            .map(|(z, b)| z * b)
            .sum();
        let l = obs_term(d.y[i], d.x[i], a, q, &comps, &mut buf);
        if !l.is_finite() {
            return Err(Error::NonFiniteRow { row: i });
        }
        total += l;
    }
    Ok(total)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixtureOptions {
    pub starts: usize,
    pub seed: u64,
    #[serde(skip)]
    pub fit: FitOptions,
}

impl Default for MixtureOptions {
    fn default() -> Self {
        MixtureOptions {
            starts: 8,
            seed: 0,
            fit: FitOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MixtureFit {
    pub params: MixtureParams,
    pub loglik: f64,
    pub bic: f64,
    pub iterations: usize,
    /// Covariance of the natural parameter vector (see [`MixtureParams::to_vector`]).
    pub vcov: Option<DMatrix<f64>>,
    /// Index of the winning start.
    pub start: usize,
    /// Number of free parameters.
    pub n_free: usize,
}

impl MixtureFit {
    pub fn standard_errors(&self) -> Option<Vec<f64>> {
        self.vcov
            .as_ref()
            .map(|v| (0..v.nrows()).map(|i| v[(i, i)].max(0.0).sqrt()).collect())
    }
}

/// One-dimensional k-means (Lloyd) with random initial centres.
fn kmeans_1d(values: &[f64], k: usize, rng: &mut rng::Rng) -> Vec<usize> {
    let n = values.len();
    let mut centres: Vec<f64> = sample(rng, n, k.min(n)).into_iter().map(|i| values[i]).collect();
    centres.sort_by(f64::total_cmp);
    let mut labels = vec![0usize; n];
    for _ in 0..50 {
        let mut changed = false;
        for (i, &x) in values.iter().enumerate() {
            let best = (0..centres.len())
                .min_by(|&a, &b| (x - centres[a]).abs().total_cmp(&(x - centres[b]).abs()))
                .unwrap_or(0);
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        for (c, centre) in centres.iter_mut().enumerate() {
            let (s, m) = values
                .iter()
                .zip(&labels)
                .filter(|(_, &l)| l == c)
                .fold((0.0, 0usize), |(s, m), (x, _)| (s + x, m + 1));
            if m > 0 {
                *centre = s / m as f64;
            }
        }
        if !changed {
            break;
        }
    }
    labels
}

/// Starting values from a k-means split of the Gaussian first-stage residuals.
fn starting_params(d: &Dataset, k: usize, gauss: &crate::model::ReducedFormFit, start: usize, seed: u64) -> MixtureParams {
    let n = d.n();
    let v: Vec<f64> = (0..n)
        .map(|i| d.x[i] - d.zw_row(i).zip(gauss.pi1.iter().chain(&gauss.pi2)).map(|(z, b)| z * b).sum::<f64>())
        .collect();
    let labels = if k == 1 {
        vec![0; n]
    } else {
        kmeans_1d(&v, k, &mut rng::stream(seed, start as u64))
    };
    let rho = gauss.rho_uv().clamp(-0.9, 0.9);
    let mut comps: Vec<Component> = (0..k)
        .map(|c| {
            let members: Vec<f64> = v.iter().zip(&labels).filter(|(_, &l)| l == c).map(|(x, _)| *x).collect();
            let m = members.len().max(1) as f64;
            let mean = members.iter().sum::<f64>() / m;
            let var = members.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m;
            let sv2 = var.max(0.05 * gauss.sigma_v2);
            Component {
                weight: (members.len().max(1) as f64) / (n as f64 + k as f64),
                mu_u: 0.0,
                mu_v: mean,
                sigma_u2: gauss.sigma_u2,
                sigma_v2: sv2,
                sigma_uv: rho * (gauss.sigma_u2 * sv2).sqrt(),
            }
        })
        .collect();
    let total: f64 = comps.iter().map(|c| c.weight).sum();
    for c in &mut comps {
        c.weight /= total;
    }
    let centre: f64 = comps.iter().map(|c| c.weight * c.mu_v).sum();
    for c in &mut comps {
        c.mu_v -= centre;
    }
    MixtureParams {
        theta: gauss.theta.clone(),
        pi1: gauss.pi1.clone(),
        pi2: gauss.pi2.clone(),
        components: comps,
    }
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

/// Reorder components by `mu_v` (then `sigma_v2`), permuting the covariance accordingly.
fn canonical_order(params: &mut MixtureParams, vcov: &mut Option<DMatrix<f64>>) {
    let k = params.k();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        let (ca, cb) = (&params.components[a], &params.components[b]);
        ca.mu_v.total_cmp(&cb.mu_v).then(ca.sigma_v2.total_cmp(&cb.sigma_v2))
    });
    let base = params.theta.len() + params.pi1.len() + params.pi2.len();
    let perm: Vec<usize> = (0..base)
        .chain(order.iter().flat_map(|&c| (0..6).map(move |r| base + 6 * c + r)))
        .collect();
    params.components = order.iter().map(|&c| params.components[c]).collect();
    if let Some(v) = vcov.as_mut() {
        *v = DMatrix::from_fn(v.nrows(), v.ncols(), |r, c| v[(perm[r], perm[c])]);
    }
}

/// Fit a K-component IV-Mixed-Tobit model by direct maximum likelihood.
pub fn fit_mixture(d: &Dataset, k: usize, opts: &MixtureOptions) -> Result<MixtureFit> {
    let obj = MixtureObjective::new(d, k)?;
    let base = 1 + 2 * d.d_w() + d.d_z();
    if !(((6 * k + base + 1) as f64) < d.n() as f64 / 10.0) {
        return Err(Error::Precondition(format!(
            "too few observations for {k} components: need 6K + {base} + 1 < n/10 (n = {})",
            d.n()
        )));
    }
    if opts.starts == 0 {
        return Err(Error::Precondition("need at least one start".into()));
    }
    let gauss = fit_two_step(d, ModelKind::Tobit)?;
    let runs: Vec<(usize, Result<Maximum>)> = (0..opts.starts)
        .into_par_iter()
        .map(|s| {
            let start = starting_params(d, k, &gauss, s, opts.seed);
            (s, quasi_newton_maximize(&obj, &obj.encode(&start), &opts.fit.qn))
        })
        .collect();

    let mut best: Option<(usize, Maximum)> = None;
    let mut first_err = None;
    for (s, r) in runs {
        match r {
            Ok(m) => {
                if best.as_ref().is_none_or(|(_, b)| m.value > b.value) {
                    best = Some((s, m));
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let (start, m) = match best {
        Some(b) => b,
        None => return Err(first_err.unwrap_or(Error::Precondition("no starts ran".into()))),
    };
    let layout = obj.layout;
    let natural = natural_from_free(layout, &m.argmax);
    let mut params = params_from_natural(layout, &natural);
    for (c, comp) in params.components.iter().enumerate() {
        if comp.weight < MIN_WEIGHT {
            return Err(Error::EmptyComponent {
                component: c,
                weight: comp.weight,
            });
        }
    }
    let mut vcov = inverse_negative(&m.hessian).map(|v_free| {
        let j = jacobian(|p| natural_from_free(layout, p), &m.argmax);
        let v = &j * v_free * j.transpose();
        (&v + v.transpose()) * 0.5
    });
    canonical_order(&mut params, &mut vcov);
    let n_free = layout.dim();
    Ok(MixtureFit {
        params,
        loglik: m.value,
        bic: -2.0 * m.value + n_free as f64 * (d.n() as f64).ln(),
        iterations: m.iterations,
        vcov,
        start,
        n_free,
    })
}

/// Intersection of the component identified sets for `sigma_ustar2`.
pub fn mixture_sigma_ustar_interval(params: &MixtureParams) -> Result<Interval> {
    let comps: Vec<ComponentCov> = params.components.iter().map(Component::cov).collect();
    intersect_component_intervals(&comps, params.theta[0])
}
