//! Vectors of Lorentz–Minkowski space `L^{m}` with signature `(−, +, …, +)`.

use std::ops::{Add, Index, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum;

/// Relative tolerance used by [`LorentzVector::causal_character`].
pub const CAUSAL_REL_TOL: f64 = 1e-12;

/// Causal character of a vector of `L^{m}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CausalCharacter {
    Timelike,
    Lightlike,
    Spacelike,
    Zero,
}

/// A point or vector of `L^{m}`; component 0 is the timelike coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LorentzVector(Vec<f64>);

impl LorentzVector {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.len() < 2 {
            return Err(Error::InvalidParameters(format!(
                "a Lorentz vector needs at least 2 components, got {}",
                components.len()
            )));
        }
        Ok(Self(components))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    /// The unit timelike basis vector `e₀ = ∂/∂x₀`.
    pub fn e0(len: usize) -> Self {
        Self::basis(len, 0)
    }

    pub fn basis(len: usize, i: usize) -> Self {
        let mut v = vec![0.0; len];
        v[i] = 1.0;
        Self(v)
    }

    /// Builds `(t, x₁, …, x_{n+1})`.
    pub fn from_time_space(t: f64, space: &[f64]) -> Self {
        let mut v = Vec::with_capacity(space.len() + 1);
        v.push(t);
        v.extend_from_slice(space);
        Self(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn time(&self) -> f64 {
        self.0[0]
    }

    pub fn space(&self) -> &[f64] {
        &self.0[1..]
    }

    /// Minkowski product `−a₀b₀ + Σ aᵢbᵢ`.
    pub fn dot(&self, other: &Self) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(minkowski_dot_slices(&self.0, &other.0))
    }

    pub fn norm_sq(&self) -> f64 {
        minkowski_dot_slices(&self.0, &self.0)
    }

    pub fn euclidean_norm_sq(&self) -> f64 {
        sum::dot(&self.0, &self.0)
    }

    pub fn causal_character(&self) -> CausalCharacter {
        let e = self.euclidean_norm_sq();
        if e == 0.0 {
            return CausalCharacter::Zero;
        }
        let q = self.norm_sq();
        if q.abs() <= CAUSAL_REL_TOL * e {
            CausalCharacter::Lightlike
        } else if q < 0.0 {
            CausalCharacter::Timelike
        } else {
            CausalCharacter::Spacelike
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.iter().map(|x| s * x).collect())
    }

    /// `self + s·other`.
    pub fn axpy(&self, s: f64, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + s * b).collect())
    }
}

/// Minkowski product on raw component slices of equal length.
#[inline]
pub fn minkowski_dot_slices(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = -a[0] * b[0];
    for i in 1..a.len() {
        acc += a[i] * b[i];
    }
    acc
}

/// Free-function form of [`LorentzVector::dot`].
pub fn minkowski_dot(a: &LorentzVector, b: &LorentzVector) -> Result<f64> {
    a.dot(b)
}

impl Index<usize> for LorentzVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for &LorentzVector {
    type Output = LorentzVector;
    fn add(self, rhs: &LorentzVector) -> LorentzVector {
        LorentzVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &LorentzVector {
    type Output = LorentzVector;
    fn sub(self, rhs: &LorentzVector) -> LorentzVector {
        LorentzVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &LorentzVector {
    type Output = LorentzVector;
    fn neg(self) -> LorentzVector {
        self.scale(-1.0)
    }
}

impl Mul<&LorentzVector> for f64 {
    type Output = LorentzVector;
    fn mul(self, rhs: &LorentzVector) -> LorentzVector {
        rhs.scale(self)
    }
}
