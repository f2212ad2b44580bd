//! Forward-mode dual numbers with a small fixed-capacity gradient.
//!
//! Log-likelihood contributions are written once, generically over [`Real`],
//! and evaluated either with `f64` (values) or [`Dual`] (value plus exact
//! gradient with respect to up to [`MAX_DUAL`] seed variables).

use std::ops::{Add, Div, Mul, Neg, Sub};

use super::normal::{inv_mills, log_norm_cdf, log_norm_pdf};

pub const MAX_DUAL: usize = 32;

pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn cst(&self, x: f64) -> Self;
    fn value(&self) -> f64;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn tanh(self) -> Self;
    fn cosh(self) -> Self;
    /// `ln Phi(self)`
    fn log_norm_cdf(self) -> Self;

    fn scale(self, k: f64) -> Self {
        self * self.cst(k)
    }

    fn add_f(self, k: f64) -> Self {
        self + self.cst(k)
    }

    /// `ln phi(self)` for the standard normal density.
    fn log_norm_pdf(self) -> Self {
        (self * self).scale(-0.5).add_f(-super::normal::LN_SQRT_2PI)
    }
}

impl Real for f64 {
    fn cst(&self, x: f64) -> Self {
        x
    }
    fn value(&self) -> f64 {
        *self
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    fn cosh(self) -> Self {
        f64::cosh(self)
    }
    fn log_norm_cdf(self) -> Self {
        log_norm_cdf(self)
    }
    fn log_norm_pdf(self) -> Self {
        log_norm_pdf(self)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Dual {
    pub v: f64,
    pub d: [f64; MAX_DUAL],
    n: usize,
}

impl Dual {
    pub fn constant(v: f64, n: usize) -> Self {
        assert!(n <= MAX_DUAL, "dual dimension {n} exceeds {MAX_DUAL}");
        Dual {
            v,
            d: [0.0; MAX_DUAL],
            n,
        }
    }

    /// Seed variable `i` of an `n`-dimensional gradient.
    pub fn var(v: f64, i: usize, n: usize) -> Self {
        let mut x = Self::constant(v, n);
        x.d[i] = 1.0;
        x
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn grad(&self) -> &[f64] {
        &self.d[..self.n]
    }

    #[inline]
    fn chain(self, v: f64, dv: f64) -> Self {
        let mut out = self;
        out.v = v;
        for k in 0..self.n {
            out.d[k] = self.d[k] * dv;
        }
        out
    }
}

impl Add for Dual {
    type Output = Dual;
    #[inline]
    fn add(mut self, rhs: Dual) -> Dual {
        self.v += rhs.v;
        let n = self.n.max(rhs.n);
        for k in 0..n {
            self.d[k] += rhs.d[k];
        }
        self.n = n;
        self
    }
}

impl Sub for Dual {
    type Output = Dual;
    #[inline]
    fn sub(mut self, rhs: Dual) -> Dual {
        self.v -= rhs.v;
        let n = self.n.max(rhs.n);
        for k in 0..n {
            self.d[k] -= rhs.d[k];
        }
        self.n = n;
        self
    }
}

impl Mul for Dual {
    type Output = Dual;
    #[inline]
    fn mul(self, rhs: Dual) -> Dual {
        let mut out = self;
        out.v = self.v * rhs.v;
        let n = self.n.max(rhs.n);
        for k in 0..n {
            out.d[k] = self.d[k] * rhs.v + rhs.d[k] * self.v;
        }
        out.n = n;
        out
    }
}

impl Div for Dual {
    type Output = Dual;
    #[inline]
    fn div(self, rhs: Dual) -> Dual {
        let mut out = self;
        let inv = 1.0 / rhs.v;
        out.v = self.v * inv;
        let n = self.n.max(rhs.n);
        for k in 0..n {
            out.d[k] = (self.d[k] - out.v * rhs.d[k]) * inv;
        }
        out.n = n;
        out
    }
}

impl Neg for Dual {
    type Output = Dual;
    #[inline]
    fn neg(self) -> Dual {
        self.chain(-self.v, -1.0)
    }
}

impl Real for Dual {
    fn cst(&self, x: f64) -> Self {
        Dual::constant(x, self.n)
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e)
    }
    fn ln(self) -> Self {
        self.chain(self.v.ln(), 1.0 / self.v)
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s)
    }
    fn tanh(self) -> Self {
        let t = self.v.tanh();
        self.chain(t, 1.0 - t * t)
    }
    fn cosh(self) -> Self {
        self.chain(self.v.cosh(), self.v.sinh())
    }
    fn log_norm_cdf(self) -> Self {
        self.chain(log_norm_cdf(self.v), inv_mills(self.v))
    }
    fn scale(self, k: f64) -> Self {
        self.chain(self.v * k, k)
    }
    fn add_f(mut self, k: f64) -> Self {
        self.v += k;
        self
    }
    fn log_norm_pdf(self) -> Self {
        self.chain(log_norm_pdf(self.v), -self.v)
    }
}

/// Numerically stable `ln(sum_k exp(terms_k))`.
pub fn log_sum_exp<T: Real>(terms: &[T]) -> T {
    let m = terms
        .iter()
        .map(|t| t.value())
        .fold(f64::NEG_INFINITY, f64::max);
    let mut acc = terms[0].cst(0.0);
    for &t in terms {
        acc = acc + t.add_f(-m).exp();
    }
    acc.ln().add_f(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(f: impl Fn(f64) -> f64, x: f64) -> f64 {
        let h = 1e-6 * (1.0 + x.abs());
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn elementary_derivatives_match_finite_differences() {
        let cases: Vec<(fn(Dual) -> Dual, fn(f64) -> f64)> = vec![
            (|x| x.exp(), f64::exp),
            (|x| x.ln(), f64::ln),
            (|x| x.sqrt(), f64::sqrt),
            (|x| x.tanh(), f64::tanh),
            (|x| x.cosh(), f64::cosh),
            (|x| Real::log_norm_cdf(x), log_norm_cdf),
            (|x| Real::log_norm_pdf(x), log_norm_pdf),
            (|x| (x * x + x.cst(1.0)) / x, |x| (x * x + 1.0) / x),
        ];
        for (fd_fn, f) in cases {
            for &x in &[0.3, 1.7, 2.5] {
                let d = fd_fn(Dual::var(x, 0, 1));
                assert!((d.v - f(x)).abs() < 1e-14);
                let num = fd(f, x);
                assert!((d.d[0] - num).abs() < 1e-7 * (1.0 + num.abs()), "x={x}");
            }
        }
    }

    #[test]
    fn log_sum_exp_stable() {
        let t = [1000.0, 1000.0];
        assert!((log_sum_exp(&t) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        let a = Dual::var(0.2, 0, 2);
        let b = Dual::var(-0.4, 1, 2);
        let l = log_sum_exp(&[a, b]);
        let wa = 0.2f64.exp() / (0.2f64.exp() + (-0.4f64).exp());
        assert!((l.d[0] - wa).abs() < 1e-14);
        assert!((l.d[1] - (1.0 - wa)).abs() < 1e-14);
    }
}
