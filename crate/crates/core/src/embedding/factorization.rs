use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::{Jet, Real};
use crate::minkowski::minkowski_dot_slices;

use super::immersion::{ChartDomain, Immersion};

/// Factorisation `ψ = i_f ∘ Φ` of an immersion of `Sⁿ` into the light cone,
/// with `f ∘ Φ = log ψ₀` and `Φ = ψ̄/ψ₀`.
#[derive(Debug, Clone, Copy)]
pub struct GraphFactorization<'a> {
    im: &'a Immersion,
}

/// The factorisation at one chart point together with its checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorPoint {
    pub u: Vec<f64>,
    /// `f(Φ(x)) = log ψ₀`.
    pub f: f64,
    /// `Φ(x) ∈ Sⁿ`.
    pub phi: Vec<f64>,
    /// `| |Φ|² − 1 |`.
    pub sphere_defect: f64,
    /// `max |g − ψ₀² Φ*g₀|` over metric entries.
    pub metric_defect: f64,
}

pub fn graph_factorization(im: &Immersion) -> Result<GraphFactorization<'_>> {
    if !im.in_light_cone() {
        return Err(Error::NotLightCone(im.name()));
    }
    if !matches!(im.chart(), ChartDomain::Sphere { .. }) {
        return Err(Error::InvalidParameters(format!("{} is not parametrised by a sphere", im.name())));
    }
    Ok(GraphFactorization { im })
}

impl GraphFactorization<'_> {
    pub fn at(&self, u: &[f64]) -> Result<FactorPoint> {
        self.im.check_light_cone(u)?;
        let psi = self.im.eval(&Jet::variables(u))?;
        let n = u.len();
        let p0 = psi[0];
        let phi: Vec<Jet> = psi[1..].iter().map(|c| *c / p0).collect();
        let phi_val: Vec<f64> = phi.iter().map(|j| j.value()).collect();
        let sphere_defect = (phi_val.iter().map(|c| c * c).sum::<f64>() - 1.0).abs();
        let mut metric_defect: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let gi: Vec<f64> = psi.iter().map(|c| c.grad[i]).collect();
                let gj: Vec<f64> = psi.iter().map(|c| c.grad[j]).collect();
                let g = minkowski_dot_slices(&gi, &gj);
                let pull: f64 = phi.iter().map(|c| c.grad[i] * c.grad[j]).sum();
                metric_defect = metric_defect.max((g - p0.value * p0.value * pull).abs());
            }
        }
        Ok(FactorPoint {
            u: u.to_vec(),
            f: p0.value.ln(),
            phi: phi_val,
            sphere_defect,
            metric_defect,
        })
    }
}
