//! Univariate global search and quasi-Newton maximization.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::Interval;

const GRID_POINTS: usize = 200;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Minimize `f` over a closed interval: evaluate a 200-point uniform grid,
/// then golden-section refine inside the cells adjacent to the best point.
///
/// Returns `(argmin, min)`. A degenerate interval returns its endpoint.
pub fn golden_minimize(f: impl Fn(f64) -> f64, interval: Interval, tol: f64) -> Result<(f64, f64)> {
    let eval = |x: f64| -> Result<f64> {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Numerical {
                at: x,
                context: "objective is not finite".into(),
            })
        }
    };
    let (lo, hi) = (interval.lo, interval.hi);
    if lo == hi {
        return Ok((lo, eval(lo)?));
    }
    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    let grid_x = |i: usize| {
        if i == GRID_POINTS - 1 {
            hi
        } else {
            lo + step * i as f64
        }
    };
    let mut best = (lo, eval(lo)?);
    let mut best_i = 0;
    for i in 1..GRID_POINTS {
        let x = grid_x(i);
        let v = eval(x)?;
        if v < best.1 {
            best = (x, v);
            best_i = i;
        }
    }
    let mut a = grid_x(best_i.saturating_sub(1));
    let mut b = grid_x((best_i + 1).min(GRID_POINTS - 1));
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval(d)?;
        }
        if b - a <= f64::EPSILON * (1.0 + a.abs()) {
            break;
        }
    }
    for (x, v) in [(c, fc), (d, fd)] {
        if v < best.1 {
            best = (x, v);
        }
    }
    Ok(best)
}

/// Maximize `f` over a closed interval; counterpart of [`golden_minimize`].
pub fn golden_maximize(f: impl Fn(f64) -> f64, interval: Interval, tol: f64) -> Result<(f64, f64)> {
    let (x, v) = golden_minimize(|x| -f(x), interval, tol)?;
    Ok((x, -v))
}

/// A smooth objective with an optional analytic gradient.
pub trait Objective {
    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        central_gradient(|p| self.value(p), x)
    }
}

/// Wraps a closure as a value-only [`Objective`] (numeric gradient).
pub struct FnObjective<F>(pub F);

impl<F: Fn(&[f64]) -> f64> Objective for FnObjective<F> {
    fn value(&self, x: &[f64]) -> f64 {
        (self.0)(x)
    }
}

/// Wraps a value closure together with an analytic gradient closure.
pub struct GradObjective<F, G>(pub F, pub G);

impl<F: Fn(&[f64]) -> f64, G: Fn(&[f64]) -> Vec<f64>> Objective for GradObjective<F, G> {
    fn value(&self, x: &[f64]) -> f64 {
        (self.0)(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (self.1)(x)
    }
}

fn diff_step(x: f64) -> f64 {
    f64::EPSILON.cbrt() * x.abs().max(1.0)
}

/// Central-difference gradient with step `eps^(1/3) * max(1, |x|)`.
pub fn central_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|j| {
            let h = diff_step(x[j]);
            p[j] = x[j] + h;
            let up = f(&p);
            p[j] = x[j] - h;
            let down = f(&p);
            p[j] = x[j];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Hessian by central differences of the objective's gradient, symmetrized.
pub fn numeric_hessian(obj: &dyn Objective, x: &[f64]) -> DMatrix<f64> {
    let n = x.len();
    let mut h = DMatrix::zeros(n, n);
    let mut p = x.to_vec();
    for j in 0..n {
        let step = diff_step(x[j]);
        p[j] = x[j] + step;
        let up = obj.gradient(&p);
        p[j] = x[j] - step;
        let down = obj.gradient(&p);
        p[j] = x[j];
        for i in 0..n {
            h[(i, j)] = (up[i] - down[i]) / (2.0 * step);
        }
    }
    let ht = h.transpose();
    (h + ht) * 0.5
}

#[derive(Debug, Clone)]
pub struct QnOptions {
    pub max_iter: usize,
    /// Convergence when `||grad|| <= gtol * (1 + |f|)`.
    pub gtol: f64,
    /// Finish with Newton steps on the numerical Hessian.
    pub polish: bool,
}

impl Default for QnOptions {
    fn default() -> Self {
        QnOptions {
            max_iter: 500,
            gtol: 1e-6,
            polish: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Maximum {
    pub argmax: Vec<f64>,
    pub value: f64,
    /// Numerical Hessian of the objective at `argmax` (negative definite).
    pub hessian: DMatrix<f64>,
    pub iterations: usize,
    pub grad_norm: f64,
    /// Objective value after every accepted step.
    pub trace: Vec<f64>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn is_negative_definite(h: &DMatrix<f64>) -> bool {
    (-h.clone()).cholesky().is_some()
}

/// BFGS ascent with backtracking (Armijo) line search.
pub fn quasi_newton_maximize(obj: &dyn Objective, start: &[f64], opts: &QnOptions) -> Result<Maximum> {
    let n = start.len();
    let mut x = DVector::from_column_slice(start);
    let mut f = obj.value(x.as_slice());
    if !f.is_finite() {
        return Err(Error::Numerical {
            at: f64::NAN,
            context: "objective is not finite at the starting point".into(),
        });
    }
    // Work with the minimization of -f.
    let mut g = -DVector::from_vec(obj.gradient(x.as_slice()));
    let mut hinv = DMatrix::<f64>::identity(n, n);
    let mut fresh = true;
    let mut trace = vec![f];
    let mut iterations = 0;
    let converged = |g: &DVector<f64>, f: f64| g.norm() <= opts.gtol * (1.0 + f.abs());

    while iterations < opts.max_iter && !converged(&g, f) {
        iterations += 1;
        let mut d = -(&hinv * &g);
        let mut slope = g.dot(&d);
        if !(slope < 0.0) {
            hinv = DMatrix::identity(n, n);
            fresh = true;
            d = -g.clone();
            slope = g.dot(&d);
        }
        let mut alpha = if fresh { (1.0 / g.norm()).min(1.0) } else { 1.0 };
        let mut accepted = None;
        for _ in 0..60 {
            let xt = &x + &d * alpha;
            let ft = obj.value(xt.as_slice());
            if ft.is_finite() && -ft <= -f + 1e-4 * alpha * slope {
                accepted = Some((xt, ft));
                break;
            }
            alpha *= 0.5;
        }
        let Some((xn, fnew)) = accepted else {
            if fresh {
                break;
            }
            hinv = DMatrix::identity(n, n);
            fresh = true;
            continue;
        };
        let gn = -DVector::from_vec(obj.gradient(xn.as_slice()));
        let s = &xn - &x;
        let y = &gn - &g;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            if fresh {
                hinv = DMatrix::identity(n, n) * (sy / y.dot(&y));
            }
            let rho = 1.0 / sy;
            let hy = &hinv * &y;
            let yhy = y.dot(&hy);
            // H+ = H - rho (s hy' + hy s') + (rho^2 y'Hy + rho) s s'
            hinv -= (&s * hy.transpose() + &hy * s.transpose()) * rho;
            hinv += (&s * s.transpose()) * (rho * rho * yhy + rho);
            fresh = false;
        }
        x = xn;
        f = fnew;
        g = gn;
        trace.push(f);
    }

    let mut hessian = numeric_hessian(obj, x.as_slice());
    if opts.polish {
        for _ in 0..3 {
            let Some(chol) = (-hessian.clone()).cholesky() else {
                break;
            };
            // Newton step for the maximum: x + (-H)^{-1} grad f
            let step = chol.solve(&(-&g));
            let xt = &x + &step;
            let ft = obj.value(xt.as_slice());
            if !(ft.is_finite() && ft >= f) {
                break;
            }
            let gt = -DVector::from_vec(obj.gradient(xt.as_slice()));
            if gt.norm() > g.norm() {
                break;
            }
            x = xt;
            f = ft;
            g = gt;
            trace.push(f);
            hessian = numeric_hessian(obj, x.as_slice());
        }
    }

    let grad_norm = g.norm();
    if !converged(&g, f) || !is_negative_definite(&hessian) {
        return Err(Error::NonConvergence {
            iterations,
            grad_norm,
            value: f,
            last: x.as_slice().to_vec(),
        });
    }
    Ok(Maximum {
        argmax: x.as_slice().to_vec(),
        value: f,
        hessian,
        iterations,
        grad_norm,
        trace,
    })
}

/// Covariance estimate `(-H)^{-1}` from a negative-definite Hessian.
pub fn inverse_negative(hessian: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    (-hessian.clone()).cholesky().map(|c| c.inverse())
}

pub fn vector_norm(v: &[f64]) -> f64 {
    norm(v)
}
