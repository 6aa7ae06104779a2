use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::minkowski::minkowski_dot_slices;

use super::immersion::{ChartJet, Immersion};

/// A lightlike normal frame `(ξ, η)` with `⟨ξ, η⟩ = 1`.
#[derive(Debug, Clone, PartialEq)]
pub enum Frame {
    /// For immersions in the light cone: `ξ = ψ` and
    /// `η = ((1 + ‖∇ψ₀‖²)/(2ψ₀²)) ψ − (1/ψ₀)(e₀ + ψ_*∇ψ₀)`; `η₀ < 0`.
    LightCone,
    /// For surfaces in the hyperplane `x₀ = 0` of `L⁴` with unit normal `ν`:
    /// `ξ = (e₀ + ν)/√2`, `η = (−e₀ + ν)/√2`. Parallel in the normal bundle.
    Hyperplane,
    /// `(ξ/φ, φ η)` for a positive chart function `φ(u, w)`.
    Rescaled { base: Box<Frame>, phi: Expression },
}

impl Frame {
    pub fn rescaled(self, phi: Expression) -> Result<Self> {
        if phi.max_ambient_index() > 0 {
            return Err(Error::InvalidParameters(format!("rescaling `{phi}` must be a chart function of u, w")));
        }
        Ok(Frame::Rescaled {
            base: Box::new(self),
            phi,
        })
    }

    pub fn name(&self) -> String {
        match self {
            Frame::LightCone => "light-cone".into(),
            Frame::Hyperplane => "hyperplane".into(),
            Frame::Rescaled { base, phi } => format!("{} rescaled by {phi}", base.name()),
        }
    }

    /// Default frame for an immersion.
    pub fn default_for(im: &Immersion) -> Self {
        if im.in_light_cone() {
            Frame::LightCone
        } else {
            Frame::Hyperplane
        }
    }

    /// `(ξ, η)` at the chart point of `cj`.
    pub fn eval(&self, im: &Immersion, cj: &ChartJet) -> Result<(Vec<f64>, Vec<f64>)> {
        match self {
            Frame::LightCone => light_cone_frame(im, cj),
            Frame::Hyperplane => hyperplane_frame(cj),
            Frame::Rescaled { base, phi } => {
                let (xi, eta) = base.eval(im, cj)?;
                let s = rescaling_factor(phi, &cj.u)?;
                Ok((xi.iter().map(|c| c / s).collect(), eta.iter().map(|c| c * s).collect()))
            }
        }
    }

    /// `(ξ, η)` at chart point `u`.
    pub fn at(&self, im: &Immersion, u: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.eval(im, &im.chart_jet(u)?)
    }
}

/// Value of a rescaling function at `u = (u, w)`; must be positive.
pub(crate) fn rescaling_factor(phi: &Expression, u: &[f64]) -> Result<f64> {
    if u.len() != 2 {
        return Err(Error::Unsupported("frame rescaling on charts of dimension ≠ 2".into()));
    }
    let s = phi.eval_chart(u[0], u[1])?;
    if !(s > 0.0) {
        return Err(Error::Domain(format!("rescaling function {phi} = {s} must be positive")));
    }
    Ok(s)
}

/// Inverse of the induced metric, or a chart-singularity error.
pub(crate) fn metric_inverse(cj: &ChartJet) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let g = cj.metric();
    let n = g.nrows();
    let diag: f64 = (0..n).map(|i| g[(i, i)]).product();
    let singular = || Error::ChartSingularity(cj.u.clone());
    if !(diag > 0.0) {
        return Err(singular());
    }
    let chol = g.clone().cholesky().ok_or_else(singular)?;
    let det = chol.determinant();
    if !(det > 1e-14 * diag) {
        return Err(singular());
    }
    Ok((g, chol.inverse()))
}

fn light_cone_frame(im: &Immersion, cj: &ChartJet) -> Result<(Vec<f64>, Vec<f64>)> {
    let psi = &cj.psi;
    let norm = minkowski_dot_slices(psi, psi);
    if !im.in_light_cone() || !(psi[0] > 0.0) || norm.abs() > 1e-10 * psi[0].powi(2).max(1.0) {
        return Err(Error::NotLightCone(format!("{} at u = {:?}", im.name(), cj.u)));
    }
    let (_, ginv) = metric_inverse(cj)?;
    let n = cj.dim();
    let p0 = psi[0];
    let dp0: Vec<f64> = cj.d.iter().map(|d| d[0]).collect();
    let grad: Vec<f64> = (0..n).map(|i| (0..n).map(|j| ginv[(i, j)] * dp0[j]).sum()).collect();
    let grad_sq: f64 = grad.iter().zip(&dp0).map(|(a, b)| a * b).sum();
    let push = cj.push_forward(&grad);
    let c = (1.0 + grad_sq) / (2.0 * p0 * p0);
    let eta = psi
        .iter()
        .zip(&push)
        .enumerate()
        .map(|(a, (p, q))| c * p - (q + if a == 0 { 1.0 } else { 0.0 }) / p0)
        .collect();
    Ok((psi.clone(), eta))
}

fn hyperplane_frame(cj: &ChartJet) -> Result<(Vec<f64>, Vec<f64>)> {
    if cj.psi.len() != 4 || cj.dim() != 2 {
        return Err(Error::Unsupported("hyperplane frames need surfaces in L⁴".into()));
    }
    if cj.psi[0].abs() > 1e-12 || cj.d.iter().any(|d| d[0].abs() > 1e-12) {
        return Err(Error::InvalidParameters("surface does not lie in the hyperplane x₀ = 0".into()));
    }
    let (a, b) = (&cj.d[0][1..], &cj.d[1][1..]);
    // ν = ∂₂ψ × ∂₁ψ, normalised (outward for the catalog torus).
    let cross = [
        b[1] * a[2] - b[2] * a[1],
        b[2] * a[0] - b[0] * a[2],
        b[0] * a[1] - b[1] * a[0],
    ];
    let len = cross.iter().map(|c| c * c).sum::<f64>().sqrt();
    if !(len > 0.0) {
        return Err(Error::ChartSingularity(cj.u.clone()));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let nu: Vec<f64> = cross.iter().map(|c| c / len).collect();
    let xi = [vec![s], nu.iter().map(|c| s * c).collect()].concat();
    let eta = [vec![-s], nu.iter().map(|c| s * c).collect()].concat();
    Ok((xi, eta))
}
