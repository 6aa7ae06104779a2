//! Second-order forward-mode automatic differentiation.
//!
//! A [`Jet`] carries a value together with its gradient and Hessian with
//! respect to up to [`MAX_VARS`] independent variables. Expressions written
//! against the [`Real`] trait evaluate either on plain `f64` or on jets.

use std::ops::{Add, Div, Mul, Neg, Sub};

pub const MAX_VARS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    nvars: usize,
    pub value: f64,
    pub grad: [f64; MAX_VARS],
    pub hess: [[f64; MAX_VARS]; MAX_VARS],
}

impl Jet {
    pub fn constant(value: f64, nvars: usize) -> Self {
        assert!(nvars <= MAX_VARS, "at most {MAX_VARS} jet variables");
        Self {
            nvars,
            value,
            grad: [0.0; MAX_VARS],
            hess: [[0.0; MAX_VARS]; MAX_VARS],
        }
    }

    /// The `index`-th independent variable, evaluated at `value`.
    pub fn variable(value: f64, index: usize, nvars: usize) -> Self {
        let mut j = Self::constant(value, nvars);
        j.grad[index] = 1.0;
        j
    }

    /// Independent variables seeded at `point`.
    pub fn variables(point: &[f64]) -> Vec<Jet> {
        let n = point.len();
        point
            .iter()
            .enumerate()
            .map(|(i, &x)| Jet::variable(x, i, n))
            .collect()
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn gradient(&self) -> Vec<f64> {
        self.grad[..self.nvars].to_vec()
    }

    pub fn hessian(&self) -> Vec<Vec<f64>> {
        (0..self.nvars)
            .map(|i| self.hess[i][..self.nvars].to_vec())
            .collect()
    }

    /// Applies a univariate function given its value and first two
    /// derivatives at `self.value`.
    #[inline]
    pub fn chain(&self, f0: f64, f1: f64, f2: f64) -> Self {
        let n = self.nvars;
        let mut out = Self::constant(f0, n);
        for i in 0..n {
            out.grad[i] = f1 * self.grad[i];
        }
        for i in 0..n {
            for j in 0..n {
                out.hess[i][j] = f1 * self.hess[i][j] + f2 * self.grad[i] * self.grad[j];
            }
        }
        out
    }

    /// Composes a function `F` of `inputs.len()` arguments, given `F`, its
    /// gradient and Hessian at the input values, with the input jets.
    pub fn compose(value: f64, grad: &[f64], hess: &[Vec<f64>], inputs: &[Jet]) -> Self {
        let n = inputs.first().map_or(0, |j| j.nvars);
        let mut out = Self::constant(value, n);
        for (a, ja) in inputs.iter().enumerate() {
            for i in 0..n {
                out.grad[i] += grad[a] * ja.grad[i];
                for j in 0..n {
                    out.hess[i][j] += grad[a] * ja.hess[i][j];
                }
            }
            for (b, jb) in inputs.iter().enumerate() {
                let h = hess[a][b];
                if h == 0.0 {
                    continue;
                }
                for i in 0..n {
                    for j in 0..n {
                        out.hess[i][j] += h * ja.grad[i] * jb.grad[j];
                    }
                }
            }
        }
        out
    }

    fn zip(self, rhs: Self, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = self.nvars.max(rhs.nvars);
        let mut out = Self::constant(f(self.value, rhs.value), n);
        for i in 0..n {
            out.grad[i] = f(self.grad[i], rhs.grad[i]);
            for j in 0..n {
                out.hess[i][j] = f(self.hess[i][j], rhs.hess[i][j]);
            }
        }
        out
    }

    pub fn scale(mut self, s: f64) -> Self {
        self.value *= s;
        for i in 0..self.nvars {
            self.grad[i] *= s;
            for j in 0..self.nvars {
                self.hess[i][j] *= s;
            }
        }
        self
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        self.zip(rhs, |a, b| a + b)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        self.zip(rhs, |a, b| a - b)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let n = self.nvars.max(rhs.nvars);
        let (a, b) = (self.value, rhs.value);
        let mut out = Jet::constant(a * b, n);
        for i in 0..n {
            out.grad[i] = a * rhs.grad[i] + b * self.grad[i];
            for j in 0..n {
                out.hess[i][j] = a * rhs.hess[i][j]
                    + b * self.hess[i][j]
                    + self.grad[i] * rhs.grad[j]
                    + rhs.grad[i] * self.grad[j];
            }
        }
        out
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        self * rhs.recip()
    }
}

/// Scalars that expressions can be evaluated on.
pub trait Real:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn value(&self) -> f64;
    /// A constant with the same shape as `self`.
    fn lift(&self, c: f64) -> Self;
    fn chain(&self, f0: f64, f1: f64, f2: f64) -> Self;
    /// Multivariate chain rule, see [`Jet::compose`].
    fn compose(value: f64, grad: &[f64], hess: &[Vec<f64>], inputs: &[Self]) -> Self;

    fn recip(&self) -> Self {
        let x = self.value();
        self.chain(1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x))
    }
    fn exp(&self) -> Self {
        let e = self.value().exp();
        self.chain(e, e, e)
    }
    fn ln(&self) -> Self {
        let x = self.value();
        self.chain(x.ln(), 1.0 / x, -1.0 / (x * x))
    }
    fn sin(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.chain(s, c, -s)
    }
    fn cos(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.chain(c, -s, -c)
    }
    fn sinh(&self) -> Self {
        let x = self.value();
        self.chain(x.sinh(), x.cosh(), x.sinh())
    }
    fn cosh(&self) -> Self {
        let x = self.value();
        self.chain(x.cosh(), x.sinh(), x.cosh())
    }
    fn sqrt(&self) -> Self {
        let x = self.value();
        let r = x.sqrt();
        self.chain(r, 0.5 / r, -0.25 / (r * x))
    }
    fn powi(&self, k: i32) -> Self {
        let x = self.value();
        let kf = k as f64;
        let f0 = x.powi(k);
        let f1 = if k == 0 { 0.0 } else { kf * x.powi(k - 1) };
        let f2 = if k == 0 || k == 1 {
            0.0
        } else {
            kf * (kf - 1.0) * x.powi(k - 2)
        };
        self.chain(f0, f1, f2)
    }
    fn powf(&self, p: f64) -> Self {
        let x = self.value();
        self.chain(x.powf(p), p * x.powf(p - 1.0), p * (p - 1.0) * x.powf(p - 2.0))
    }
}

impl Real for f64 {
    #[inline]
    fn value(&self) -> f64 {
        *self
    }
    #[inline]
    fn lift(&self, c: f64) -> Self {
        c
    }
    #[inline]
    fn chain(&self, f0: f64, _f1: f64, _f2: f64) -> Self {
        f0
    }
    #[inline]
    fn compose(value: f64, _grad: &[f64], _hess: &[Vec<f64>], _inputs: &[Self]) -> Self {
        value
    }
}

impl Real for Jet {
    #[inline]
    fn value(&self) -> f64 {
        self.value
    }
    #[inline]
    fn lift(&self, c: f64) -> Self {
        Jet::constant(c, self.nvars)
    }
    #[inline]
    fn chain(&self, f0: f64, f1: f64, f2: f64) -> Self {
        Jet::chain(self, f0, f1, f2)
    }
    fn compose(value: f64, grad: &[f64], hess: &[Vec<f64>], inputs: &[Self]) -> Self {
        Jet::compose(value, grad, hess, inputs)
    }
}
