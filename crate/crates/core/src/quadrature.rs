//! Quadrature rules on spheres and on periodic 2D charts.
//!
//! Sphere rules are tensor products of Gauss–Legendre rules in the polar
//! variables and the trapezoid rule in the periodic angles; they integrate
//! with respect to the round volume element `dV₀`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sphere::SpherePoint;
use crate::sum;

/// Gauss–Legendre nodes (ascending) and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "need at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, refined by Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_and_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Volume of the unit sphere `Sⁿ`.
pub fn sphere_volume(n: usize) -> f64 {
    // vol(Sⁿ) = 2π^{(n+1)/2} / Γ((n+1)/2), via vol(Sⁿ) = 2π/(n−1) vol(S^{n−2}).
    match n {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (n as f64 - 1.0) * sphere_volume(n - 2),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RuleDomain {
    /// Nodes are points of `Sⁿ` (ambient coordinates), weights for `dV₀`.
    Sphere { n: usize },
    /// Nodes are chart coordinates, weights for Lebesgue measure `du`.
    Chart { dim: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleDescriptor {
    pub kind: String,
    pub resolution: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    domain: RuleDomain,
    nodes: Vec<Vec<f64>>,
    weights: Vec<f64>,
    descriptor: RuleDescriptor,
}

impl QuadratureRule {
    /// Gauss–Legendre × trapezoid rule on `Sⁿ`, `n ∈ {2, 3, 4}`, with `res`
    /// polar nodes and `2·res` nodes per periodic angle.
    pub fn sphere(n: usize, res: usize) -> Result<Self> {
        if res == 0 {
            return Err(Error::InvalidParameters("resolution must be positive".into()));
        }
        match n {
            2 => Ok(Self::sphere_grid(res, 2 * res)),
            3 => Ok(Self::s3(res, 2 * res)),
            4 => Ok(Self::s4(res, res, 2 * res)),
            _ => Err(Error::Unsupported(format!("sphere quadrature for n = {n} (supported: 2, 3, 4)"))),
        }
    }

    /// `nlat` Gauss–Legendre nodes in `x₃` times `nlon` equispaced longitudes.
    /// Node order is latitude-major, matching [`crate::ShTransform`] grids.
    pub fn sphere_grid(nlat: usize, nlon: usize) -> Self {
        let (z, wz) = gauss_legendre(nlat);
        let dphi = 2.0 * PI / nlon as f64;
        let mut nodes = Vec::with_capacity(nlat * nlon);
        let mut weights = Vec::with_capacity(nlat * nlon);
        for (zj, wj) in z.iter().zip(&wz) {
            let s = (1.0 - zj * zj).sqrt();
            for k in 0..nlon {
                let phi = k as f64 * dphi;
                nodes.push(vec![s * phi.cos(), s * phi.sin(), *zj]);
                weights.push(wj * dphi);
            }
        }
        Self {
            domain: RuleDomain::Sphere { n: 2 },
            nodes,
            weights,
            descriptor: RuleDescriptor {
                kind: "gauss-legendre x trapezoid (S2)".into(),
                resolution: vec![nlat, nlon],
            },
        }
    }

    // S³ in Hopf coordinates (cos a e^{iφ₁}, sin a e^{iφ₂}); with s = sin²a the
    // volume element is ½ ds dφ₁ dφ₂.
    fn s3(ns: usize, nphi: usize) -> Self {
        let (t, wt) = gauss_legendre(ns);
        let dphi = 2.0 * PI / nphi as f64;
        let mut nodes = Vec::with_capacity(ns * nphi * nphi);
        let mut weights = Vec::with_capacity(ns * nphi * nphi);
        for (tj, wj) in t.iter().zip(&wt) {
            let s = 0.5 * (tj + 1.0);
            let (ca, sa) = ((1.0 - s).sqrt(), s.sqrt());
            let w = 0.5 * (0.5 * wj) * dphi * dphi;
            for k1 in 0..nphi {
                let p1 = k1 as f64 * dphi;
                for k2 in 0..nphi {
                    let p2 = k2 as f64 * dphi;
                    nodes.push(vec![ca * p1.cos(), ca * p1.sin(), sa * p2.cos(), sa * p2.sin()]);
                    weights.push(w);
                }
            }
        }
        Self {
            domain: RuleDomain::Sphere { n: 3 },
            nodes,
            weights,
            descriptor: RuleDescriptor {
                kind: "gauss-legendre x trapezoid^2 (S3, Hopf)".into(),
                resolution: vec![ns, nphi, nphi],
            },
        }
    }

    // S⁴ as x₅ = t ∈ [−1, 1] times √(1−t²)·S³, dV = (1 − t²) dt dV_{S³}.
    fn s4(nt: usize, ns: usize, nphi: usize) -> Self {
        let (t, wt) = gauss_legendre(nt);
        let inner = Self::s3(ns, nphi);
        let mut nodes = Vec::with_capacity(nt * inner.len());
        let mut weights = Vec::with_capacity(nt * inner.len());
        for (tj, wj) in t.iter().zip(&wt) {
            let r = (1.0 - tj * tj).sqrt();
            for (p, w) in inner.nodes.iter().zip(&inner.weights) {
                let mut x: Vec<f64> = p.iter().map(|c| r * c).collect();
                x.push(*tj);
                nodes.push(x);
                weights.push(wj * (1.0 - tj * tj) * w);
            }
        }
        Self {
            domain: RuleDomain::Sphere { n: 4 },
            nodes,
            weights,
            descriptor: RuleDescriptor {
                kind: "gauss-legendre x S3 rule (S4)".into(),
                resolution: vec![nt, ns, nphi, nphi],
            },
        }
    }

    /// Trapezoid rule on the periodic chart `[0, 2π)²`.
    pub fn periodic_chart(nu: usize, nw: usize) -> Self {
        let (du, dw) = (2.0 * PI / nu as f64, 2.0 * PI / nw as f64);
        let mut nodes = Vec::with_capacity(nu * nw);
        for i in 0..nu {
            for j in 0..nw {
                nodes.push(vec![i as f64 * du, j as f64 * dw]);
            }
        }
        Self {
            domain: RuleDomain::Chart { dim: 2 },
            weights: vec![du * dw; nu * nw],
            nodes,
            descriptor: RuleDescriptor {
                kind: "trapezoid x trapezoid (periodic chart)".into(),
                resolution: vec![nu, nw],
            },
        }
    }

    /// Rule in the spherical chart `(θ, φ)` of S² for integrals `∫ F du`:
    /// Gauss–Legendre in `cos θ` (weights divided by `sin θ`) times trapezoid
    /// in `φ`. Nodes never touch the poles.
    pub fn s2_chart(nlat: usize, nlon: usize) -> Self {
        let (z, wz) = gauss_legendre(nlat);
        let dphi = 2.0 * PI / nlon as f64;
        let mut nodes = Vec::with_capacity(nlat * nlon);
        let mut weights = Vec::with_capacity(nlat * nlon);
        for (zj, wj) in z.iter().zip(&wz) {
            let theta = zj.acos();
            let s = (1.0 - zj * zj).sqrt();
            for k in 0..nlon {
                nodes.push(vec![theta, k as f64 * dphi]);
                weights.push(wj * dphi / s);
            }
        }
        Self {
            domain: RuleDomain::Chart { dim: 2 },
            nodes,
            weights,
            descriptor: RuleDescriptor {
                kind: "gauss-legendre(cos theta) x trapezoid (S2 chart)".into(),
                resolution: vec![nlat, nlon],
            },
        }
    }

    /// Sphere rule transported to the hyperspherical chart `(θ₁, …, θ_{n−1}, φ)`
    /// for integrals `∫ F du`: node weights are divided by the round volume
    /// density `Π sin^{n−i} θᵢ`. Nodes never touch the chart singularities.
    pub fn sphere_chart(n: usize, res: usize) -> Result<Self> {
        let rule = Self::sphere(n, res)?;
        let mut nodes = Vec::with_capacity(rule.len());
        let mut weights = Vec::with_capacity(rule.len());
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let u = SpherePoint::normalized(x.clone())?.chart_coords();
            let density: f64 = (0..n - 1).map(|i| u[i].sin().powi((n - 1 - i) as i32)).product();
            if !(density > 0.0) {
                return Err(Error::ChartSingularity(u));
            }
            weights.push(w / density);
            nodes.push(u);
        }
        Ok(Self {
            domain: RuleDomain::Chart { dim: n },
            nodes,
            weights,
            descriptor: RuleDescriptor {
                kind: format!("{} in hyperspherical chart", rule.descriptor.kind),
                resolution: rule.descriptor.resolution,
            },
        })
    }

    pub fn domain(&self) -> RuleDomain {
        self.domain
    }

    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn descriptor(&self) -> &RuleDescriptor {
        &self.descriptor
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        sum::sum(self.weights.iter().copied())
    }

    /// `Σ wᵢ vᵢ` for values sampled at the nodes.
    pub fn integrate_values(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: values.len(),
            });
        }
        Ok(sum::dot(&self.weights, values))
    }

    /// Evaluates `f` at every node (in parallel) and integrates.
    pub fn integrate<F>(&self, f: F) -> Result<f64>
    where
        F: Fn(&[f64]) -> Result<f64> + Sync,
    {
        let values = self.sample(f)?;
        self.integrate_values(&values)
    }

    /// Node values of `f`, in node order.
    pub fn sample<F>(&self, f: F) -> Result<Vec<f64>>
    where
        F: Fn(&[f64]) -> Result<f64> + Sync,
    {
        self.nodes.par_iter().map(|x| f(x)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let (x, w) = gauss_legendre(7);
        for k in 0..14 {
            let q = sum::sum(x.iter().zip(&w).map(|(x, w)| w * x.powi(k)));
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "degree {k}: {q} vs {exact}");
        }
        let (x, w) = gauss_legendre(64);
        assert!((sum::sum(w.iter().copied()) - 2.0).abs() < 1e-14);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn sphere_rules_have_exact_volume() {
        for (n, res) in [(2, 8), (2, 33), (3, 6), (4, 5)] {
            let rule = QuadratureRule::sphere(n, res).unwrap();
            let vol = sphere_volume(n);
            assert!((rule.total_weight() - vol).abs() / vol < 1e-12, "n = {n}");
            assert!(rule.weights().iter().all(|&w| w > 0.0));
            for x in rule.nodes() {
                let r2: f64 = x.iter().map(|c| c * c).sum();
                assert!((r2 - 1.0).abs() < 1e-13);
            }
        }
        assert!((sphere_volume(2) - 4.0 * PI).abs() < 1e-15);
        assert!((sphere_volume(3) - 2.0 * PI * PI).abs() < 1e-14);
        assert!(QuadratureRule::sphere(5, 4).is_err());
    }

    #[test]
    fn second_moments() {
        // ∫ x_i² dV = vol / (n + 1) on Sⁿ.
        for n in 2..=4 {
            let rule = QuadratureRule::sphere(n, 8).unwrap();
            for i in 0..=n {
                let q = rule.integrate(|x| Ok(x[i] * x[i])).unwrap();
                let exact = sphere_volume(n) / (n as f64 + 1.0);
                assert!((q - exact).abs() < 1e-12, "n = {n}, i = {i}");
            }
        }
    }

    #[test]
    fn size_mismatch_is_an_error() {
        let rule = QuadratureRule::sphere(2, 4).unwrap();
        assert!(matches!(rule.integrate_values(&[1.0; 3]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn sphere_chart_rules_integrate_volume_density() {
        for n in 2..=4 {
            let rule = QuadratureRule::sphere_chart(n, 6).unwrap();
            let vol = rule
                .integrate(|u| Ok((0..n - 1).map(|i| u[i].sin().powi((n - 1 - i) as i32)).product()))
                .unwrap();
            assert!((vol - sphere_volume(n)).abs() < 1e-11, "n = {n}");
        }
    }

    #[test]
    fn s2_chart_rule_integrates_area_element() {
        let rule = QuadratureRule::s2_chart(12, 24);
        let area = rule.integrate(|u| Ok(u[0].sin())).unwrap();
        assert!((area - 4.0 * PI).abs() < 1e-12);
    }
}
