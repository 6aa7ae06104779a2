//! Curvature of conformal metrics `g_f = e^{2f} g₀` on `Sⁿ` and the
//! constant-curvature equation
//!
//! ```text
//! 2Δ⁰f + (n−2)‖∇⁰f‖₀² = n (1 − k e^{2f}).
//! ```
//!
//! All pointwise formulas take the derivative mode explicitly so that the
//! analytic and finite-difference paths can be compared.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Expression, Func, Node};
use crate::field::{Derivatives, ScalarField, TangentialData};
use crate::jet::Real;
use crate::minkowski::LorentzVector;
use crate::quadrature::QuadratureRule;
use crate::sphere::SpherePoint;

/// Tolerance on `⟨v, v⟩ = −1` for [`ObataParameters`].
pub const OBATA_NORM_TOL: f64 = 1e-10;

/// Parameters `(v, k)` of `f(x) = log((1/√k) / (−v₀ + ⟨v̄, x⟩))` with
/// `⟨v, v⟩ = −1`, `v₀ < 0`, `k > 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObataParameters {
    v: LorentzVector,
    k: f64,
}

impl ObataParameters {
    pub fn new(v: LorentzVector, k: f64) -> Result<Self> {
        if v.len() < 4 {
            return Err(Error::InvalidParameters(format!(
                "v must have n + 2 ≥ 4 components, got {}",
                v.len()
            )));
        }
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidParameters(format!("k must be positive, got {k}")));
        }
        let norm = v.norm_sq();
        if (norm + 1.0).abs() > OBATA_NORM_TOL {
            return Err(Error::InvalidParameters(format!("⟨v, v⟩ = {norm}, expected −1")));
        }
        if !(v.time() < 0.0) {
            return Err(Error::InvalidParameters(format!("v₀ = {} must be negative", v.time())));
        }
        Ok(Self { v, k })
    }

    /// Completes the spatial part `v̄` with `v₀ = −√(1 + |v̄|²)`.
    pub fn from_spatial(space: &[f64], k: f64) -> Result<Self> {
        let s2: f64 = space.iter().map(|c| c * c).sum();
        Self::new(LorentzVector::from_time_space(-(1.0 + s2).sqrt(), space), k)
    }

    /// Random parameters on `Sⁿ` with `|v̄| ≤ max_space` and `k` uniform in
    /// `k_range`.
    pub fn random<R: Rng + ?Sized>(n: usize, max_space: f64, k_range: (f64, f64), rng: &mut R) -> Self {
        let dir = SpherePoint::random(n, rng);
        let len = max_space * rng.gen::<f64>();
        let space: Vec<f64> = dir.coords().iter().map(|c| c * len).collect();
        let k = if k_range.0 == k_range.1 {
            k_range.0
        } else {
            rng.gen_range(k_range.0..k_range.1)
        };
        Self::from_spatial(&space, k).expect("valid by construction")
    }

    pub fn dim(&self) -> usize {
        self.v.len() - 2
    }

    pub fn v(&self) -> &LorentzVector {
        &self.v
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// `−v₀ + ⟨v̄, x⟩`, positive on the sphere.
    pub fn denominator<T: Real>(&self, x: &[T]) -> T {
        let mut d = x[0].lift(-self.v.time());
        for (xi, vi) in x.iter().zip(self.v.space()) {
            d = d + *xi * x[0].lift(*vi);
        }
        d
    }

    /// `f(x)` on any [`Real`].
    pub fn eval<T: Real>(&self, x: &[T]) -> Result<T> {
        let d = self.denominator(x);
        if !(d.value() > 0.0) {
            return Err(Error::Domain(format!("Obata denominator {} is not positive", d.value())));
        }
        Ok(x[0].lift(-0.5 * self.k.ln()) - d.ln())
    }

    /// The same family member with a different `k`.
    pub fn with_k(&self, k: f64) -> Result<Self> {
        Self::new(self.v.clone(), k)
    }

    fn denominator_node(&self) -> Node {
        let mut d = Node::num(-self.v.time());
        for (i, vi) in self.v.space().iter().enumerate() {
            d = Node::add(d, Node::mul(Node::num(*vi), Node::x(i as u8 + 1)));
        }
        d
    }

    /// `h = −v₀ + ⟨v̄, x⟩` as a closed-form field.
    pub fn h_field(&self) -> ScalarField {
        ScalarField::from_expression(Expression::from_node(self.denominator_node()), self.dim())
            .expect("valid by construction")
    }

    /// `f` as a closed-form expression.
    pub fn expression_field(&self) -> ScalarField {
        let node = Node::sub(
            Node::num(-0.5 * self.k.ln()),
            Node::call(Func::Log, self.denominator_node()),
        );
        ScalarField::from_expression(Expression::from_node(node), self.dim()).expect("valid by construction")
    }

    /// `φ = e^{(n−2)f/2} = (√k (−v₀ + ⟨v̄, x⟩))^{−(n−2)/2}`.
    pub fn yamabe_phi(&self) -> ScalarField {
        let n = self.dim() as f64;
        let base = Node::mul(Node::num(self.k.sqrt()), self.denominator_node());
        let node = Node::pow(base, Node::num(-(n - 2.0) / 2.0));
        ScalarField::from_expression(Expression::from_node(node), self.dim()).expect("valid by construction")
    }
}

/// The field `log((1/√k)/(−v₀ + ⟨v̄, x⟩))`.
pub fn obata_field(p: ObataParameters) -> ScalarField {
    ScalarField::Obata(p)
}

/// `S_f` from value and tangential derivatives of `f`.
pub fn scalar_curvature_from(n: usize, t: &TangentialData) -> f64 {
    let nf = n as f64;
    (nf * (nf - 1.0) - 2.0 * (nf - 1.0) * t.laplacian - (nf - 1.0) * (nf - 2.0) * t.grad_norm_sq())
        * (-2.0 * t.value).exp()
}

/// `⟨H_f, H_f⟩` from value and tangential derivatives of `f`.
pub fn mean_curvature_sq_from(n: usize, t: &TangentialData) -> f64 {
    let nf = n as f64;
    (nf - 2.0 * t.laplacian - (nf - 2.0) * t.grad_norm_sq()) / (nf * (2.0 * t.value).exp())
}

/// Residual of the equation from value and tangential derivatives of `f`.
pub fn equation_e_residual_from(n: usize, k: f64, t: &TangentialData) -> f64 {
    let nf = n as f64;
    2.0 * t.laplacian + (nf - 2.0) * t.grad_norm_sq() - nf * (1.0 - k * (2.0 * t.value).exp())
}

/// Residual of the equation for `n = 2`, `2Δ⁰f − 2(1 − k e^{2f})`, from `f` and `Δ⁰f`.
pub fn equation_e_residual_2d(value: f64, laplacian: f64, k: f64) -> f64 {
    2.0 * laplacian - 2.0 * (1.0 - k * (2.0 * value).exp())
}

/// Scalar curvature `S_f(x)` of `e^{2f} g₀`.
pub fn scalar_curvature(f: &ScalarField, x: &SpherePoint, mode: Derivatives) -> Result<f64> {
    Ok(scalar_curvature_from(f.dim(), &f.tangential(x, mode)?))
}

/// Squared length `⟨H_f, H_f⟩(x)` of the mean curvature of the light-cone
/// graph of `f`.
pub fn mean_curvature_sq(f: &ScalarField, x: &SpherePoint, mode: Derivatives) -> Result<f64> {
    Ok(mean_curvature_sq_from(f.dim(), &f.tangential(x, mode)?))
}

/// Signed residual `2Δ⁰f + (n−2)‖∇⁰f‖₀² − n(1 − k e^{2f})` of the equation.
pub fn equation_e_residual(f: &ScalarField, k: f64, x: &SpherePoint, mode: Derivatives) -> Result<f64> {
    check_k(k)?;
    Ok(equation_e_residual_from(f.dim(), k, &f.tangential(x, mode)?))
}

/// Residual of the equation through the mean curvature: `n (k − ⟨H_f, H_f⟩) e^{2f}`.
pub fn equation_e_residual_via_mean_curvature(
    f: &ScalarField,
    k: f64,
    x: &SpherePoint,
    mode: Derivatives,
) -> Result<f64> {
    check_k(k)?;
    let t = f.tangential(x, mode)?;
    let n = f.dim() as f64;
    Ok(n * (k - mean_curvature_sq_from(f.dim(), &t)) * (2.0 * t.value).exp())
}

/// Proportionality constant between the `h`-equation residual of
/// `h = e^{−f}` and the residual of the equation with `k = 1`: the former equals
/// `H_SUBSTITUTION_FACTOR · e^{−f} · residual`.
pub const H_SUBSTITUTION_FACTOR: f64 = -0.5;

/// Signed residual `Δ⁰h − (n/(2h))(1 − h² + ‖∇⁰h‖₀²)`.
pub fn h_equation_residual(h: &ScalarField, x: &SpherePoint, mode: Derivatives) -> Result<f64> {
    let t = h.tangential(x, mode)?;
    if !(t.value > 0.0) {
        return Err(Error::Domain(format!("h(x) = {} must be positive", t.value)));
    }
    let n = h.dim() as f64;
    Ok(t.laplacian - n / (2.0 * t.value) * (1.0 - t.value * t.value + t.grad_norm_sq()))
}

fn yamabe_exponents(n: usize) -> Result<(f64, f64)> {
    if n < 3 {
        return Err(Error::Unsupported(format!(
            "Yamabe form needs n ≥ 3 (p = 2n/(n−2) is undefined for n = {n})"
        )));
    }
    let nf = n as f64;
    Ok((nf * (nf - 2.0) / 4.0, 2.0 * nf / (nf - 2.0)))
}

/// Residual of `□⁰φ + (n(n−2)/4) k φ^{(n+2)/(n−2)}` with
/// `□⁰φ = Δ⁰φ − (n(n−2)/4) φ`.
pub fn yamabe_residual(phi: &ScalarField, k: f64, x: &SpherePoint, mode: Derivatives) -> Result<f64> {
    check_k(k)?;
    let (c, _) = yamabe_exponents(phi.dim())?;
    let nf = phi.dim() as f64;
    let t = phi.tangential(x, mode)?;
    if !(t.value > 0.0) {
        return Err(Error::Domain(format!("φ(x) = {} must be positive", t.value)));
    }
    Ok(t.laplacian - c * t.value + c * k * t.value.powf((nf + 2.0) / (nf - 2.0)))
}

/// The energy `E(φ) = ∫ (‖∇⁰φ‖₀² + (n(n−2)k/4) φ²) dV₀` and
/// `‖φ‖_p = (∫ φ^p dV₀)^{1/p}`, `p = 2n/(n−2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct YamabeEnergy {
    pub energy: f64,
    pub norm_p: f64,
    pub p: f64,
}

pub fn yamabe_energy(phi: &ScalarField, k: f64, rule: &QuadratureRule, mode: Derivatives) -> Result<YamabeEnergy> {
    check_k(k)?;
    let (c, p) = yamabe_exponents(phi.dim())?;
    let nodes = rule.sample(|y| {
        let t = phi.tangential(&SpherePoint::new(y.to_vec())?, mode)?;
        if !(t.value > 0.0) {
            return Err(Error::Domain(format!("φ = {} must be positive at quadrature nodes", t.value)));
        }
        Ok(t.grad_norm_sq() + c * k * t.value * t.value)
    })?;
    let energy = rule.integrate_values(&nodes)?;
    let pow = rule.integrate(|y| Ok(phi.value_ambient(y)?.powf(p)))?;
    Ok(YamabeEnergy {
        energy,
        norm_p: pow.powf(1.0 / p),
        p,
    })
}

/// Both sides of `(4/(n(n−2))) E(e^{(n−2)f/2}) = ∫ ⟨H_f, H_f⟩ dV_{g_f}`
/// (the energy taken with `k = 1`).
pub fn energy_identity(f: &ScalarField, rule: &QuadratureRule, mode: Derivatives) -> Result<(f64, f64)> {
    let n = f.dim();
    let (c, _) = yamabe_exponents(n)?;
    let nf = n as f64;
    let values = rule.sample(|y| {
        let t = f.tangential(&SpherePoint::new(y.to_vec())?, mode)?;
        let phi2 = ((nf - 2.0) * t.value).exp();
        Ok(((nf - 2.0) / 2.0).powi(2) * phi2 * t.grad_norm_sq() + c * phi2)
    })?;
    let lhs = 4.0 / (nf * (nf - 2.0)) * rule.integrate_values(&values)?;
    let rhs = rule.integrate(|y| {
        let t = f.tangential(&SpherePoint::new(y.to_vec())?, mode)?;
        Ok(mean_curvature_sq_from(n, &t) * (nf * t.value).exp())
    })?;
    Ok((lhs, rhs))
}

/// Volume `∫ e^{nf} dV₀` of `g_f`.
pub fn conformal_volume(f: &ScalarField, rule: &QuadratureRule) -> Result<f64> {
    let n = f.dim() as f64;
    rule.integrate(|y| Ok((n * f.value_ambient(y)?).exp()))
}

fn check_k(k: f64) -> Result<()> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidParameters(format!("k must be positive, got {k}")));
    }
    Ok(())
}

/// Pointwise conformal quantities at one point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConformalPoint {
    pub point: Vec<f64>,
    pub f: f64,
    pub laplacian: f64,
    pub grad_norm_sq: f64,
    pub scalar_curvature: f64,
    pub mean_curvature_sq: f64,
    pub e_residual: f64,
    /// `|S_f − n(n−1)⟨H_f, H_f⟩|`.
    pub identity_defect: f64,
}

pub fn conformal_point(f: &ScalarField, k: f64, x: &SpherePoint, mode: Derivatives) -> Result<ConformalPoint> {
    check_k(k)?;
    let n = f.dim();
    let t = f.tangential(x, mode)?;
    let s = scalar_curvature_from(n, &t);
    let h2 = mean_curvature_sq_from(n, &t);
    let nf = n as f64;
    Ok(ConformalPoint {
        point: x.coords().to_vec(),
        f: t.value,
        laplacian: t.laplacian,
        grad_norm_sq: t.grad_norm_sq(),
        scalar_curvature: s,
        mean_curvature_sq: h2,
        e_residual: equation_e_residual_from(n, k, &t),
        identity_defect: (s - nf * (nf - 1.0) * h2).abs(),
    })
}
