//! Scalar fields on `Sⁿ` with tangential derivatives.
//!
//! Every representation is evaluated through an ambient extension `F` on
//! `R^{n+1}`. For any extension, at `|x| = 1`,
//!
//! ```text
//! ∇⁰f = ∇F − (∇F·x) x,     Δ⁰f = tr D²F − xᵀ D²F x − n (∇F·x).
//! ```
//!
//! Analytic derivatives come from second-order jets of `F`. The
//! finite-difference path uses the degree-0 homogeneous extension
//! `F(y) = f(y/|y|)`, whose ambient gradient is tangential and whose ambient
//! Laplacian equals `Δ⁰f` on the sphere.

use std::fmt;
use std::sync::Arc;

use crate::conformal::ObataParameters;
use crate::error::{Error, Result};
use crate::expr::{self, Expression};
use crate::jet::{Jet, Real, MAX_VARS};
use crate::quadrature::{QuadratureRule, RuleDomain};
use crate::spectral::SpectralField;
use crate::sphere::SpherePoint;

/// Default central-difference step for the homogeneous-extension path.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Derivatives {
    /// Exact derivatives through jets (unavailable for opaque closures).
    Analytic,
    /// Central differences of the degree-0 extension with step `h`.
    FiniteDifference { h: f64 },
}

impl Default for Derivatives {
    fn default() -> Self {
        Derivatives::Analytic
    }
}

type ClosureFn = dyn Fn(&[f64]) -> Result<f64> + Send + Sync;

/// A smooth real function on `Sⁿ`.
#[derive(Clone)]
pub enum ScalarField {
    /// Closed-form expression in `x1 … x{n+1}`.
    Expr { expr: Expression, n: usize },
    /// Member of the explicit constant-curvature family.
    Obata(ObataParameters),
    /// Band-limited spherical-harmonic expansion on S².
    Spectral(SpectralField),
    /// Opaque closure of the ambient point; finite differences only.
    Closure { n: usize, label: String, f: Arc<ClosureFn> },
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarField::Expr { expr, n } => write!(f, "Expr({expr}, n = {n})"),
            ScalarField::Obata(p) => write!(f, "Obata({p:?})"),
            ScalarField::Spectral(s) => write!(f, "Spectral(lmax = {})", s.lmax()),
            ScalarField::Closure { n, label, .. } => write!(f, "Closure({label}, n = {n})"),
        }
    }
}

/// Value and tangential derivatives of a field at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentialData {
    pub value: f64,
    /// `∇⁰f` as an ambient vector orthogonal to `x`.
    pub gradient: Vec<f64>,
    pub laplacian: f64,
}

impl TangentialData {
    pub fn grad_norm_sq(&self) -> f64 {
        self.gradient.iter().map(|g| g * g).sum()
    }
}

impl ScalarField {
    /// Parses a closed-form field on `Sⁿ`.
    pub fn parse(text: &str, n: usize) -> Result<Self> {
        check_dim(n)?;
        Ok(ScalarField::Expr {
            expr: expr::parse_field(text, n)?,
            n,
        })
    }

    pub fn from_expression(expr: Expression, n: usize) -> Result<Self> {
        check_dim(n)?;
        if expr.uses_chart_vars() || expr.max_ambient_index() > n + 1 {
            return Err(Error::InvalidParameters(format!(
                "expression `{expr}` is not a field on S^{n}"
            )));
        }
        Ok(ScalarField::Expr { expr, n })
    }

    pub fn constant(c: f64, n: usize) -> Result<Self> {
        Self::from_expression(Expression::from_node(expr::Node::num(c)), n)
    }

    pub fn closure<F>(n: usize, label: impl Into<String>, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Result<f64> + Send + Sync + 'static,
    {
        check_dim(n)?;
        Ok(ScalarField::Closure {
            n,
            label: label.into(),
            f: Arc::new(f),
        })
    }

    /// Dimension `n` of the sphere the field lives on.
    pub fn dim(&self) -> usize {
        match self {
            ScalarField::Expr { n, .. } | ScalarField::Closure { n, .. } => *n,
            ScalarField::Obata(p) => p.dim(),
            ScalarField::Spectral(_) => 2,
        }
    }

    /// Short human-readable description.
    pub fn describe(&self) -> String {
        match self {
            ScalarField::Expr { expr, .. } => expr.source().to_string(),
            ScalarField::Obata(p) => format!("obata(v = {:?}, k = {})", p.v().as_slice(), p.k()),
            ScalarField::Spectral(s) => format!("spectral(lmax = {})", s.lmax()),
            ScalarField::Closure { label, .. } => label.clone(),
        }
    }

    /// Whether [`Derivatives::Analytic`] is available.
    pub fn has_analytic_derivatives(&self) -> bool {
        !matches!(self, ScalarField::Closure { .. })
    }

    /// The preferred derivative mode for this representation.
    pub fn default_derivatives(&self) -> Derivatives {
        if self.has_analytic_derivatives() {
            Derivatives::Analytic
        } else {
            Derivatives::FiniteDifference { h: DEFAULT_FD_STEP }
        }
    }

    /// `f(x)`.
    pub fn value(&self, x: &SpherePoint) -> Result<f64> {
        self.check_point(x.coords())?;
        self.value_ambient(x.coords())
    }

    /// Value of the ambient extension at `y ∈ R^{n+1}`.
    pub fn value_ambient(&self, y: &[f64]) -> Result<f64> {
        match self {
            ScalarField::Closure { f, .. } => f(y),
            _ => self.eval_ambient(y),
        }
    }

    /// Evaluates the ambient extension on any [`Real`]; on jets this gives
    /// exact ambient derivatives. Closures only support `f64`-valued jets of
    /// order zero and return an error otherwise.
    pub fn eval_ambient<T: Real>(&self, y: &[T]) -> Result<T> {
        if y.len() != self.dim() + 1 {
            return Err(Error::DimensionMismatch {
                expected: self.dim() + 1,
                found: y.len(),
            });
        }
        match self {
            ScalarField::Expr { expr, .. } => expr.eval_ambient(y),
            ScalarField::Obata(p) => p.eval(y),
            ScalarField::Spectral(s) => s.eval_ambient(y),
            ScalarField::Closure { label, .. } => Err(Error::Unsupported(format!(
                "analytic evaluation of closure field `{label}`"
            ))),
        }
    }

    /// Value, `∇⁰f` and `Δ⁰f` at `x`.
    pub fn tangential(&self, x: &SpherePoint, mode: Derivatives) -> Result<TangentialData> {
        self.check_point(x.coords())?;
        let x = x.coords();
        let n = self.dim();
        match mode {
            Derivatives::Analytic => {
                if n + 1 > MAX_VARS {
                    return Err(Error::Unsupported(format!("analytic derivatives for n = {n}")));
                }
                let jet = self.eval_ambient(&Jet::variables(x))?;
                Ok(tangential_from_ambient(x, jet.value, &jet.gradient(), &jet.hessian()))
            }
            Derivatives::FiniteDifference { h } => self.tangential_fd(x, h),
        }
    }

    fn tangential_fd(&self, x: &[f64], h: f64) -> Result<TangentialData> {
        if !(h > 0.0) {
            return Err(Error::InvalidParameters(format!("finite-difference step {h}")));
        }
        let homogeneous = |y: &[f64]| -> Result<f64> {
            let r = y.iter().map(|c| c * c).sum::<f64>().sqrt();
            let p: Vec<f64> = y.iter().map(|c| c / r).collect();
            self.value_ambient(&p)
        };
        let f0 = self.value_ambient(x)?;
        let mut gradient = vec![0.0; x.len()];
        let mut laplacian = 0.0;
        let mut y = x.to_vec();
        for i in 0..x.len() {
            y[i] = x[i] + h;
            let fp = homogeneous(&y)?;
            y[i] = x[i] - h;
            let fm = homogeneous(&y)?;
            y[i] = x[i];
            gradient[i] = (fp - fm) / (2.0 * h);
            laplacian += (fp - 2.0 * f0 + fm) / (h * h);
        }
        Ok(TangentialData {
            value: f0,
            gradient,
            laplacian,
        })
    }

    /// `∇⁰f(x)` as an ambient vector.
    pub fn tangential_gradient(&self, x: &SpherePoint, mode: Derivatives) -> Result<Vec<f64>> {
        Ok(self.tangential(x, mode)?.gradient)
    }

    /// `Δ⁰f(x)`.
    pub fn laplace_beltrami(&self, x: &SpherePoint, mode: Derivatives) -> Result<f64> {
        Ok(self.tangential(x, mode)?.laplacian)
    }

    /// `‖∇⁰f(x)‖₀²`.
    pub fn grad_norm_sq(&self, x: &SpherePoint, mode: Derivatives) -> Result<f64> {
        Ok(self.tangential(x, mode)?.grad_norm_sq())
    }

    /// Node values on a sphere rule.
    pub fn sample(&self, rule: &QuadratureRule) -> Result<Vec<f64>> {
        self.check_rule(rule)?;
        rule.sample(|y| self.value_ambient(y))
    }

    /// `∫ f dV₀` by the rule.
    pub fn integrate(&self, rule: &QuadratureRule) -> Result<f64> {
        self.check_rule(rule)?;
        rule.integrate(|y| self.value_ambient(y))
    }

    fn check_rule(&self, rule: &QuadratureRule) -> Result<()> {
        match rule.domain() {
            RuleDomain::Sphere { n } if n == self.dim() => Ok(()),
            RuleDomain::Sphere { n } => Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: n,
            }),
            RuleDomain::Chart { .. } => Err(Error::InvalidParameters(
                "sphere field integrated with a chart rule".into(),
            )),
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() + 1 {
            return Err(Error::DimensionMismatch {
                expected: self.dim() + 1,
                found: x.len(),
            });
        }
        Ok(())
    }
}

/// Tangential gradient and Laplacian from ambient value, gradient `g` and
/// Hessian `hess` of any extension at `x ∈ Sⁿ`.
pub fn tangential_from_ambient(x: &[f64], value: f64, g: &[f64], hess: &[Vec<f64>]) -> TangentialData {
    let n = x.len() - 1;
    let gx: f64 = g.iter().zip(x).map(|(a, b)| a * b).sum();
    let gradient = g.iter().zip(x).map(|(gi, xi)| gi - gx * xi).collect();
    let trace: f64 = (0..=n).map(|i| hess[i][i]).sum();
    let mut xhx = 0.0;
    for i in 0..=n {
        for j in 0..=n {
            xhx += x[i] * hess[i][j] * x[j];
        }
    }
    TangentialData {
        value,
        gradient,
        laplacian: trace - xhx - n as f64 * gx,
    }
}

fn check_dim(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidParameters(format!("sphere dimension n = {n} (need n ≥ 2)")));
    }
    Ok(())
}
