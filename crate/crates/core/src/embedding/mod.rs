//! Chart-parametrised spacelike immersions `ψ : Mⁿ → L^{n+2}`.
//!
//! [`Immersion`] evaluates `ψ` on jets, so tangent vectors and second
//! derivatives are exact. Normal frames ([`Frame`]) are built from those
//! jets; shape operators follow the Weingarten identity with central
//! differences of the normal fields, cross-checked against the second
//! fundamental form route `⟨A_μ ∂ᵢ, ∂ⱼ⟩ = ⟨∂ᵢ∂ⱼψ, μ⟩`.

mod factorization;
mod frame;
mod immersion;
mod shape;

pub use factorization::{graph_factorization, FactorPoint, GraphFactorization};
pub use frame::Frame;
pub(crate) use shape::{apply, conformal_representative, five_point, umbilicity};
pub use immersion::{ChartDomain, ChartJet, Immersion, CHART_CAP};
pub use shape::{
    christoffel_from_metric_fd, codazzi_defect, covariant_shape_derivative, gauss_sectional, intrinsic_scalar_curvature,
    invariants_report, nabla_a_eta, shape_data, shape_data_with_step, trace_a_eta_differential, InvariantsReport, ShapeData, CHART_FD_STEP,
    TENSOR_FD_STEP,
};

/// FD tolerance tier `max(1e−6, 100 h²)` for chart step `h`.
pub fn fd_tolerance(h: f64) -> f64 {
    (100.0 * h * h).max(1e-6)
}
