//! Numerical geometry of codimension-two spacelike submanifolds of
//! Lorentz–Minkowski space that lie in the future light cone.
//!
//! The crate is organised in layers:
//!
//! * [`minkowski`], [`sphere`], [`jet`], [`expr`], [`field`], [`quadrature`]
//!   and [`spectral`] form the geometry kernel: Minkowski algebra, points and
//!   scalar fields on the unit sphere with tangential derivatives, quadrature
//!   rules and the real spherical-harmonic transform on S².
//! * [`conformal`] evaluates curvature of conformal metrics `e^{2f} g₀` and the
//!   constant-curvature equation for `f`, including the explicit family of
//!   solutions.
//! * [`embedding`] works with chart-parametrised immersions: null normal
//!   frames, Weingarten operators, mean curvature and Gauss/Codazzi checks.
//! * [`audit`] verifies the integral identities for compact immersions by
//!   quadrature.
//! * [`solver`] is the pseudospectral Levenberg–Marquardt solver on S² and
//!   the classifier of its solutions.

pub mod audit;
pub mod conformal;
pub mod embedding;
pub mod error;
pub mod expr;
pub mod field;
pub mod jet;
pub mod minkowski;
pub mod quadrature;
pub mod solver;
pub mod spectral;
pub mod sphere;
pub mod sum;

pub use error::{Error, Result};
pub use field::{Derivatives, ScalarField};
pub use minkowski::{CausalCharacter, LorentzVector};
pub use quadrature::QuadratureRule;
pub use spectral::{ShTransform, SpectralField};
pub use sphere::SpherePoint;
