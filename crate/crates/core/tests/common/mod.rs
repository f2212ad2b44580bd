//! Helpers shared by the mixture and acceptance tests.
#![allow(dead_code)]

use ivbounds::mixture::{Component, MixtureParams};
use ivbounds::model::Dataset;
use ivbounds::simulate::{DgpConfig, ErrorComponent, MixtureSpec, StructuralComponent};
use ivbounds::stats_core::rng::Rng;
use nalgebra::DMatrix;
use rand::Rng as _;

/// Random valid parameters for `k` components with the mean-zero constraint.
pub fn random_params(r: &mut Rng, k: usize) -> MixtureParams {
    let raw: Vec<f64> = (0..k).map(|_| r.random_range(0.3..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut comps: Vec<Component> = raw
        .iter()
        .map(|w| {
            let su2: f64 = r.random_range(0.3..3.0);
            let sv2: f64 = r.random_range(0.3..3.0);
            Component {
                weight: w / total,
                mu_u: r.random_range(-1.0..1.0),
                mu_v: r.random_range(-1.0..1.0),
                sigma_u2: su2,
                sigma_v2: sv2,
                sigma_uv: r.random_range(-0.8..0.8) * (su2 * sv2).sqrt(),
            }
        })
        .collect();
    let (mu, mv) = comps[..k - 1]
        .iter()
        .fold((0.0, 0.0), |(a, b), c| (a + c.weight * c.mu_u, b + c.weight * c.mu_v));
    let last = &mut comps[k - 1];
    last.mu_u = -mu / last.weight;
    last.mu_v = -mv / last.weight;
    MixtureParams {
        theta: vec![r.random_range(0.5..2.5), r.random_range(-1.0..1.0)],
        pi1: vec![r.random_range(0.5..1.5)],
        pi2: vec![r.random_range(-0.5..0.5)],
        components: comps,
    }
}

pub fn one_row(y: f64, x: f64, w: f64, z: f64) -> Dataset {
    Dataset::new(vec![y], vec![x], DMatrix::from_element(1, 1, w), DMatrix::from_element(1, 1, z))
}

pub fn biv_pdf(u: f64, v: f64, c: &Component) -> f64 {
    let det = c.sigma_u2 * c.sigma_v2 - c.sigma_uv * c.sigma_uv;
    let (a, b) = (u - c.mu_u, v - c.mu_v);
    let q = (c.sigma_v2 * a * a - 2.0 * c.sigma_uv * a * b + c.sigma_u2 * b * b) / det;
    (-0.5 * q).exp() / (2.0 * std::f64::consts::PI * det.sqrt())
}

pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Censored-row likelihood by direct quadrature of the joint density over
/// `u < -theta'(x, w)` at `v = x - pi'(z, w)`.
pub fn censored_by_quadrature(p: &MixtureParams, x: f64, w: f64, z: f64) -> f64 {
    let cut = -(p.theta[0] * x + p.theta[1] * w);
    let v = x - p.pi1[0] * z - p.pi2[0] * w;
    let f: f64 = p
        .components
        .iter()
        .map(|c| {
            let lo = c.mu_u.min(cut) - 16.0 * c.sigma_u2.sqrt();
            c.weight * simpson(|u| biv_pdf(u, v, c), lo, cut, 40_000)
        })
        .sum();
    f.ln()
}

/// Two structural components separated in `v*`, one measurement-error component.
pub fn two_component_dgp(n: usize) -> DgpConfig {
    DgpConfig {
        n,
        mixture: Some(MixtureSpec {
            structural: vec![
                StructuralComponent {
                    weight: 0.4,
                    mu_vstar: -1.5,
                    sigma_vstar2: 0.5,
                    sigma_ustar_vstar: 0.4,
                },
                StructuralComponent {
                    weight: 0.6,
                    mu_vstar: 1.0,
                    sigma_vstar2: 1.0,
                    sigma_ustar_vstar: -0.5,
                },
            ],
            error: vec![ErrorComponent {
                weight: 1.0,
                mu: 0.0,
                sigma2: 0.5,
            }],
        }),
        ..Default::default()
    }
}
