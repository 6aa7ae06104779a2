//! Points of the unit sphere `Sⁿ ⊂ R^{n+1}` and the hyperspherical chart.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::Real;
use crate::sum;

/// Tolerance on `|Σ xᵢ² − 1|` accepted by [`SpherePoint::new`].
pub const UNIT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpherePoint(Vec<f64>);

impl SpherePoint {
    /// Accepts coordinates already on the sphere (within [`UNIT_TOL`]).
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        check_len(coords.len())?;
        let r2 = sum::dot(&coords, &coords);
        if (r2 - 1.0).abs() > UNIT_TOL {
            return Err(Error::Domain(format!(
                "point is not on the unit sphere (|x|² = {r2})"
            )));
        }
        Ok(Self(coords))
    }

    /// Projects nonzero coordinates radially onto the sphere.
    pub fn normalized(coords: Vec<f64>) -> Result<Self> {
        check_len(coords.len())?;
        let r = sum::dot(&coords, &coords).sqrt();
        if r == 0.0 || !r.is_finite() {
            return Err(Error::Domain("cannot normalise the zero vector".into()));
        }
        Ok(Self(coords.into_iter().map(|x| x / r).collect()))
    }

    /// `(0, …, 0, ±1)` on `Sⁿ`.
    pub fn pole(n: usize, north: bool) -> Self {
        let mut c = vec![0.0; n + 1];
        c[n] = if north { 1.0 } else { -1.0 };
        Self(c)
    }

    /// Uniformly distributed point on `Sⁿ`.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        loop {
            let c: Vec<f64> = (0..=n).map(|_| gaussian(rng)).collect();
            if let Ok(p) = Self::normalized(c) {
                return p;
            }
        }
    }

    /// Uniform point avoiding the chart caps of angular radius `cap` around
    /// the singular set of the hyperspherical chart.
    pub fn random_off_caps<R: Rng + ?Sized>(n: usize, cap: f64, rng: &mut R) -> Self {
        loop {
            let p = Self::random(n, rng);
            let u = p.chart_coords();
            let polar = &u[..n - 1];
            if polar.iter().all(|&t| t > cap && t < std::f64::consts::PI - cap) {
                return p;
            }
        }
    }

    /// Dimension `n` of the sphere.
    pub fn dim(&self) -> usize {
        self.0.len() - 1
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Hyperspherical chart coordinates `(θ₁, …, θ_{n−1}, φ)`; inverse of
    /// [`chart_point`].
    pub fn chart_coords(&self) -> Vec<f64> {
        let n = self.dim();
        let x = &self.0;
        let mut u = Vec::with_capacity(n);
        // x_{n+1} = cos θ₁, x_n = sin θ₁ cos θ₂, …
        let mut tail = sum::dot(x, x).sqrt();
        for i in 0..n - 1 {
            let comp = x[n - i];
            let t = if tail > 0.0 { (comp / tail).clamp(-1.0, 1.0).acos() } else { 0.0 };
            u.push(t);
            tail = (tail * tail - comp * comp).max(0.0).sqrt();
        }
        let mut phi = x[1].atan2(x[0]);
        if phi < 0.0 {
            phi += 2.0 * std::f64::consts::PI;
        }
        u.push(phi);
        u
    }

    pub fn from_chart(u: &[f64]) -> Self {
        Self(chart_point(u))
    }
}

fn check_len(len: usize) -> Result<()> {
    if len < 3 {
        return Err(Error::InvalidParameters(format!(
            "sphere points need n + 1 ≥ 3 coordinates, got {len}"
        )));
    }
    Ok(())
}

pub(crate) fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // Box–Muller; avoids pulling in a distributions crate for one sampler.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Hyperspherical chart `(θ₁, …, θ_{n−1}, φ) ↦ x ∈ Sⁿ`:
/// `x_{n+1} = cos θ₁`, `x_n = sin θ₁ cos θ₂`, …, `x₁ = Π sin θᵢ cos φ`,
/// `x₂ = Π sin θᵢ sin φ`. Generic so that it can be evaluated on jets.
pub fn chart_point<T: Real>(u: &[T]) -> Vec<T> {
    let n = u.len();
    let one = u[0].lift(1.0);
    let mut x = vec![one.lift(0.0); n + 1];
    let mut prod = one;
    for i in 0..n - 1 {
        x[n - i] = prod * u[i].cos();
        prod = prod * u[i].sin();
    }
    x[0] = prod * u[n - 1].cos();
    x[1] = prod * u[n - 1].sin();
    x
}
