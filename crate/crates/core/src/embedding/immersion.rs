use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;

use crate::conformal::ObataParameters;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::jet::{Jet, Real};
use crate::minkowski::{minkowski_dot_slices, LorentzVector};
use crate::quadrature::QuadratureRule;
use crate::sphere::{chart_point, SpherePoint};

/// Angular radius of the excluded caps around the hyperspherical chart poles.
pub const CHART_CAP: f64 = 1e-3;

/// Parameter domain of an immersion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChartDomain {
    /// Hyperspherical chart `(θ₁, …, θ_{n−1}, φ)` of `Sⁿ`.
    Sphere { n: usize },
    /// `[0, 2π)²`, periodic in both variables.
    Torus,
    /// `R × [0, 2π)`, periodic in the second variable.
    Cylinder,
    /// `{x > 0} × R`.
    HalfPlane,
    /// `Rⁿ`.
    Plane { n: usize },
}

impl ChartDomain {
    pub fn dim(&self) -> usize {
        match self {
            ChartDomain::Sphere { n } | ChartDomain::Plane { n } => *n,
            _ => 2,
        }
    }

    /// Random chart point in a representative bounded region (off the caps
    /// for sphere charts).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            ChartDomain::Sphere { n } => SpherePoint::random_off_caps(*n, CHART_CAP, rng).chart_coords(),
            ChartDomain::Torus => vec![rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..2.0 * PI)],
            ChartDomain::Cylinder => vec![rng.gen_range(-2.0..2.0), rng.gen_range(0.0..2.0 * PI)],
            ChartDomain::HalfPlane => vec![rng.gen_range(0.3..3.0), rng.gen_range(-2.0..2.0)],
            ChartDomain::Plane { n } => (0..*n).map(|_| rng.gen_range(-2.0..2.0)).collect(),
        }
    }

    /// Step `≤ h` for a difference stencil in coordinate `i` that keeps the
    /// stencil `u ± 2·step` inside the chart.
    pub fn fd_step(&self, u: &[f64], i: usize, h: f64) -> f64 {
        match self {
            ChartDomain::Sphere { n } if i + 1 < *n => h.min(u[i] / 4.0).min((PI - u[i]) / 4.0),
            ChartDomain::HalfPlane if i == 0 => h.min(u[0] / 4.0),
            _ => h,
        }
    }
}

/// `ψ`, `∂ᵢψ` and `∂ᵢ∂ⱼψ` at a chart point.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartJet {
    pub u: Vec<f64>,
    pub psi: Vec<f64>,
    /// `d[i]` is `∂ᵢψ`.
    pub d: Vec<Vec<f64>>,
    /// `dd[i][j]` is `∂ᵢ∂ⱼψ`.
    pub dd: Vec<Vec<Vec<f64>>>,
}

impl ChartJet {
    fn from_jets(u: &[f64], jets: &[Jet]) -> Self {
        let n = u.len();
        Self {
            u: u.to_vec(),
            psi: jets.iter().map(|j| j.value).collect(),
            d: (0..n).map(|i| jets.iter().map(|j| j.grad[i]).collect()).collect(),
            dd: (0..n)
                .map(|i| (0..n).map(|k| jets.iter().map(|j| j.hess[i][k]).collect()).collect())
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    /// Induced metric `gᵢⱼ = ⟨∂ᵢψ, ∂ⱼψ⟩`.
    pub fn metric(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| minkowski_dot_slices(&self.d[i], &self.d[j]))
    }

    /// `ψ_* X = Xⁱ ∂ᵢψ`.
    pub fn push_forward(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.psi.len()];
        for (xi, di) in x.iter().zip(&self.d) {
            for (o, d) in out.iter_mut().zip(di) {
                *o += xi * d;
            }
        }
        out
    }
}

/// Catalog of spacelike immersions into `L^{n+2}`.
#[derive(Debug, Clone)]
pub enum Immersion {
    /// Light-cone graph `x ↦ e^{f(x)} (1, x)` over `Sⁿ`.
    Graph(ScalarField),
    /// `x ↦ e^{f(Rx)} (1, Rx)` for a rotation `R`.
    RotatedGraph { field: ScalarField, rotation: Vec<Vec<f64>> },
    /// The umbilical sphere `Sⁿ(v, r)` via `x ↦ (r/⟨v, (1, x)⟩)(1, x)`.
    Snvr { v: LorentzVector, r: f64 },
    /// `(x, y) ↦ (cosh x, sinh x, cos y, sin y)`.
    FlatCylinder,
    /// `(x, y) ↦ (1/x)(cosh x, sinh x, cos y, sin y)`, `x > 0`.
    PoincareHalfPlane,
    /// `x ↦ ((1 + |x|²)/2, (−1 + |x|²)/2, x)`.
    EuclidGraph { n: usize },
    /// Torus of revolution in the hyperplane `x₀ = 0` of `L⁴`.
    Torus { big_r: f64, rho: f64 },
}

impl Immersion {
    pub fn graph(field: ScalarField) -> Self {
        Immersion::Graph(field)
    }

    pub fn round_graph(n: usize) -> Result<Self> {
        Ok(Immersion::Graph(ScalarField::constant(0.0, n)?))
    }

    pub fn obata_graph(p: ObataParameters) -> Self {
        Immersion::Graph(ScalarField::Obata(p))
    }

    pub fn rotated_graph(field: ScalarField, rotation: Vec<Vec<f64>>) -> Result<Self> {
        let m = field.dim() + 1;
        if rotation.len() != m || rotation.iter().any(|r| r.len() != m) {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: rotation.len(),
            });
        }
        for i in 0..m {
            for j in 0..m {
                let dot: f64 = (0..m).map(|k| rotation[i][k] * rotation[j][k]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                if (dot - target).abs() > 1e-12 {
                    return Err(Error::InvalidParameters("rotation is not orthogonal".into()));
                }
            }
        }
        Ok(Immersion::RotatedGraph { field, rotation })
    }

    /// `Sⁿ(v, r)`; requires `⟨v, v⟩ = −1`, `v₀ < 0` and `r > 0`.
    pub fn snvr(v: LorentzVector, r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidParameters(format!("radius r = {r} must be positive")));
        }
        ObataParameters::new(v.clone(), 1.0 / (r * r))?;
        Ok(Immersion::Snvr { v, r })
    }

    pub fn torus(big_r: f64, rho: f64) -> Result<Self> {
        if !(rho > 0.0 && big_r > rho && big_r.is_finite()) {
            return Err(Error::InvalidParameters(format!("torus needs R > ρ > 0, got R = {big_r}, ρ = {rho}")));
        }
        Ok(Immersion::Torus { big_r, rho })
    }

    pub fn euclid_graph(n: usize) -> Result<Self> {
        if !(2..=4).contains(&n) {
            return Err(Error::InvalidParameters(format!("dimension n = {n} (supported 2..=4)")));
        }
        Ok(Immersion::EuclidGraph { n })
    }

    /// Dimension `n` of the submanifold.
    pub fn dim(&self) -> usize {
        self.chart().dim()
    }

    pub fn chart(&self) -> ChartDomain {
        match self {
            Immersion::Graph(f) | Immersion::RotatedGraph { field: f, .. } => ChartDomain::Sphere { n: f.dim() },
            Immersion::Snvr { v, .. } => ChartDomain::Sphere { n: v.len() - 2 },
            Immersion::FlatCylinder => ChartDomain::Cylinder,
            Immersion::PoincareHalfPlane => ChartDomain::HalfPlane,
            Immersion::EuclidGraph { n } => ChartDomain::Plane { n: *n },
            Immersion::Torus { .. } => ChartDomain::Torus,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Immersion::Graph(f) => format!("graph({})", f.describe()),
            Immersion::RotatedGraph { field, .. } => format!("rotated-graph({})", field.describe()),
            Immersion::Snvr { v, r } => format!("snvr(v = {:?}, r = {r})", v.as_slice()),
            Immersion::FlatCylinder => "flat-cylinder".into(),
            Immersion::PoincareHalfPlane => "poincare-halfplane".into(),
            Immersion::EuclidGraph { n } => format!("euclid-graph(n = {n})"),
            Immersion::Torus { big_r, rho } => format!("torus(R = {big_r}, rho = {rho})"),
        }
    }

    /// Whether `ψ` takes values in the future light cone.
    pub fn in_light_cone(&self) -> bool {
        !matches!(self, Immersion::Torus { .. })
    }

    pub fn is_compact(&self) -> bool {
        matches!(
            self,
            Immersion::Graph(_) | Immersion::RotatedGraph { .. } | Immersion::Snvr { .. } | Immersion::Torus { .. }
        )
    }

    /// `ψ(u)` on any [`Real`].
    pub fn eval<T: Real>(&self, u: &[T]) -> Result<Vec<T>> {
        let n = self.dim();
        if u.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: u.len(),
            });
        }
        let zero = u[0].lift(0.0);
        let one = u[0].lift(1.0);
        let cone = |s: T, x: Vec<T>| {
            let mut out = Vec::with_capacity(x.len() + 1);
            out.push(s);
            out.extend(x.into_iter().map(|xi| s * xi));
            out
        };
        Ok(match self {
            Immersion::Graph(f) => {
                let x = chart_point(u);
                cone(f.eval_ambient(&x)?.exp(), x)
            }
            Immersion::RotatedGraph { field, rotation } => {
                let x = chart_point(u);
                let y: Vec<T> = rotation
                    .iter()
                    .map(|row| row.iter().zip(&x).fold(zero, |acc, (r, xi)| acc + *xi * zero.lift(*r)))
                    .collect();
                cone(field.eval_ambient(&y)?.exp(), y)
            }
            Immersion::Snvr { v, r } => {
                let x = chart_point(u);
                let mut d = zero.lift(-v.time());
                for (xi, vi) in x.iter().zip(v.space()) {
                    d = d + *xi * zero.lift(*vi);
                }
                if !(d.value() > 0.0) {
                    return Err(Error::Domain("⟨v, (1, x)⟩ must be positive".into()));
                }
                cone(zero.lift(*r) / d, x)
            }
            Immersion::FlatCylinder => vec![u[0].cosh(), u[0].sinh(), u[1].cos(), u[1].sin()],
            Immersion::PoincareHalfPlane => {
                if !(u[0].value() > 0.0) {
                    return Err(Error::Domain(format!("x = {} outside the half-plane x > 0", u[0].value())));
                }
                let s = one / u[0];
                vec![s * u[0].cosh(), s * u[0].sinh(), s * u[1].cos(), s * u[1].sin()]
            }
            Immersion::EuclidGraph { .. } => {
                let s = u.iter().fold(zero, |acc, x| acc + *x * *x);
                let mut out = vec![(one + s) * zero.lift(0.5), (s - one) * zero.lift(0.5)];
                out.extend_from_slice(u);
                out
            }
            Immersion::Torus { big_r, rho } => {
                let radial = zero.lift(*big_r) + u[0].cos() * zero.lift(*rho);
                vec![zero, radial * u[1].cos(), radial * u[1].sin(), u[0].sin() * zero.lift(*rho)]
            }
        })
    }

    /// `ψ(u)`.
    pub fn position(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.eval(u)
    }

    /// Exact first and second chart derivatives of `ψ` at `u`.
    pub fn chart_jet(&self, u: &[f64]) -> Result<ChartJet> {
        let jets = self.eval(&Jet::variables(u))?;
        Ok(ChartJet::from_jets(u, &jets))
    }

    /// Quadrature rule on the chart for `∫ F du` over a compact immersion;
    /// multiply integrands by `√det g` to integrate against `dV_g`.
    pub fn chart_rule(&self, res: usize) -> Result<QuadratureRule> {
        match self.chart() {
            ChartDomain::Torus => Ok(QuadratureRule::periodic_chart(res, res)),
            ChartDomain::Sphere { n } => QuadratureRule::sphere_chart(n, res),
            _ => Err(Error::NotCompact(self.name())),
        }
    }

    /// Checks `⟨ψ, ψ⟩ = 0` and `ψ₀ > 0` at `u` within `1e−10` (relative to
    /// `ψ₀²`).
    pub fn check_light_cone(&self, u: &[f64]) -> Result<Vec<f64>> {
        let psi = self.position(u)?;
        let norm = minkowski_dot_slices(&psi, &psi);
        if !(psi[0] > 0.0) || norm.abs() > 1e-10 * psi[0].powi(2).max(1.0) {
            return Err(Error::NotLightCone(format!(
                "{} at u = {u:?}: ψ₀ = {}, ⟨ψ, ψ⟩ = {norm:e}",
                self.name(),
                psi[0]
            )));
        }
        Ok(psi)
    }
}
