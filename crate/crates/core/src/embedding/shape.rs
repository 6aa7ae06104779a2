use nalgebra::DMatrix;
use serde::Serialize;

use crate::conformal::{self, ObataParameters};
use crate::error::{Error, Result};
use crate::field::{Derivatives, ScalarField};
use crate::minkowski::minkowski_dot_slices as dot;
use crate::sphere::{chart_point, SpherePoint};

use super::frame::{metric_inverse, Frame};
use super::immersion::{ChartJet, Immersion};

/// Default central-difference step for normal-field derivatives.
pub const CHART_FD_STEP: f64 = 1e-5;

/// Step of the fourth-order stencil used for derivatives of analytic
/// tensor fields (shape operator, Christoffel symbols).
pub const TENSOR_FD_STEP: f64 = 1e-3;

/// First- and second-order data of an immersion with a normal frame at one
/// chart point. Endomorphisms are stored as matrices `A[(k, i)] = Aᵏᵢ` in the
/// coordinate basis.
#[derive(Debug, Clone)]
pub struct ShapeData {
    pub jet: ChartJet,
    pub metric: DMatrix<f64>,
    pub metric_inv: DMatrix<f64>,
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
    /// Weingarten route: `Aᵏᵢ = −gᵏˡ ⟨Dᵢμ, ∂ₗψ⟩`, `Dᵢμ` by central differences.
    pub a_xi: DMatrix<f64>,
    pub a_eta: DMatrix<f64>,
    /// Second fundamental form route: `Aᵏᵢ = gᵏʲ ⟨∂ᵢ∂ⱼψ, μ⟩`.
    pub a_xi_ii: DMatrix<f64>,
    pub a_eta_ii: DMatrix<f64>,
    /// `α(∂ᵢ) = ⟨Dᵢξ, η⟩`.
    pub alpha: Vec<f64>,
    /// `christoffel[k][(i, j)] = Γᵏᵢⱼ`.
    pub christoffel: Vec<DMatrix<f64>>,
    pub fd_step: f64,
}

pub fn shape_data(im: &Immersion, frame: &Frame, u: &[f64]) -> Result<ShapeData> {
    shape_data_with_step(im, frame, u, CHART_FD_STEP)
}

pub fn shape_data_with_step(im: &Immersion, frame: &Frame, u: &[f64], h: f64) -> Result<ShapeData> {
    let jet = im.chart_jet(u)?;
    let (metric, metric_inv) = metric_inverse(&jet)?;
    let (xi, eta) = frame.eval(im, &jet)?;
    let n = jet.dim();

    let mut dxi = Vec::with_capacity(n);
    let mut deta = Vec::with_capacity(n);
    let mut up = u.to_vec();
    for i in 0..n {
        up[i] = u[i] + h;
        let (xp, ep) = frame.at(im, &up)?;
        up[i] = u[i] - h;
        let (xm, em) = frame.at(im, &up)?;
        up[i] = u[i];
        dxi.push(central(&xp, &xm, h));
        deta.push(central(&ep, &em, h));
    }
    let weingarten = |dmu: &[Vec<f64>]| -> DMatrix<f64> {
        let c = DMatrix::from_fn(n, n, |l, i| dot(&jet.d[l], &dmu[i]));
        -(&metric_inv * c)
    };
    let a_xi = weingarten(&dxi);
    let a_eta = weingarten(&deta);
    let a_xi_ii = second_form_operator(&jet, &metric_inv, &xi);
    let a_eta_ii = second_form_operator(&jet, &metric_inv, &eta);
    let alpha = dxi.iter().map(|d| dot(d, &eta)).collect();
    let christoffel = christoffel(&jet, &metric_inv);
    Ok(ShapeData {
        jet,
        metric,
        metric_inv,
        xi,
        eta,
        a_xi,
        a_eta,
        a_xi_ii,
        a_eta_ii,
        alpha,
        christoffel,
        fd_step: h,
    })
}

fn central(p: &[f64], m: &[f64], h: f64) -> Vec<f64> {
    p.iter().zip(m).map(|(a, b)| (a - b) / (2.0 * h)).collect()
}

fn second_form_operator(jet: &ChartJet, ginv: &DMatrix<f64>, mu: &[f64]) -> DMatrix<f64> {
    let n = jet.dim();
    let b = DMatrix::from_fn(n, n, |j, i| dot(&jet.dd[j][i], mu));
    ginv * b
}

fn christoffel(jet: &ChartJet, ginv: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
    let n = jet.dim();
    // ⟨∂ᵢ∂ⱼψ, ∂ₗψ⟩
    let lower: Vec<DMatrix<f64>> = (0..n)
        .map(|l| DMatrix::from_fn(n, n, |i, j| dot(&jet.dd[i][j], &jet.d[l])))
        .collect();
    (0..n)
        .map(|k| {
            let mut m = DMatrix::zeros(n, n);
            for (l, low) in lower.iter().enumerate() {
                m += low * ginv[(k, l)];
            }
            m
        })
        .collect()
}

impl ShapeData {
    pub fn dim(&self) -> usize {
        self.jet.dim()
    }

    pub fn u(&self) -> &[f64] {
        &self.jet.u
    }

    pub fn psi(&self) -> &[f64] {
        &self.jet.psi
    }

    /// `√det g`.
    pub fn volume_density(&self) -> f64 {
        self.metric.determinant().sqrt()
    }

    pub fn trace_a_xi(&self) -> f64 {
        self.a_xi.trace()
    }

    pub fn trace_a_eta(&self) -> f64 {
        self.a_eta.trace()
    }

    /// `A_μ = ⟨μ, η⟩ A_ξ + ⟨μ, ξ⟩ A_η` for a normal vector `μ`.
    pub fn shape_operator(&self, mu: &[f64]) -> DMatrix<f64> {
        &self.a_xi * dot(mu, &self.eta) + &self.a_eta * dot(mu, &self.xi)
    }

    /// `H = (1/n)(tr A_η ξ + tr A_ξ η)`.
    pub fn mean_curvature(&self) -> Vec<f64> {
        let n = self.dim() as f64;
        let (te, tx) = (self.trace_a_eta(), self.trace_a_xi());
        self.xi.iter().zip(&self.eta).map(|(x, e)| (te * x + tx * e) / n).collect()
    }

    /// `⟨H, H⟩ = (2/n²) tr A_ξ tr A_η`.
    pub fn mean_curvature_sq(&self) -> f64 {
        let n = self.dim() as f64;
        2.0 / (n * n) * self.trace_a_xi() * self.trace_a_eta()
    }

    /// `⟨II, II⟩ = 2 tr(A_ξ A_η)`.
    pub fn second_form_sq(&self) -> f64 {
        2.0 * (&self.a_xi * &self.a_eta).trace()
    }

    /// `S = n²⟨H, H⟩ − ⟨II, II⟩` from the Gauss equation.
    pub fn extrinsic_scalar_curvature(&self) -> f64 {
        2.0 * self.trace_a_xi() * self.trace_a_eta() - self.second_form_sq()
    }

    /// `tr A_η² − (1/n)(tr A_η)²`.
    pub fn umbilicity_defect(&self) -> f64 {
        umbilicity(&self.a_eta)
    }

    /// Ambient vector `ψ_* X`.
    pub fn push_forward(&self, x: &[f64]) -> Vec<f64> {
        self.jet.push_forward(x)
    }

    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = self.dim();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += x[i] * self.metric[(i, j)] * y[j];
            }
        }
        s
    }

    pub fn norm(&self, x: &[f64]) -> f64 {
        self.inner(x, x).max(0.0).sqrt()
    }

    /// `II(X, Y) = ⟨A_η X, Y⟩ ξ + ⟨A_ξ X, Y⟩ η`.
    pub fn second_fundamental_form(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let ae = self.inner(&apply(&self.a_eta, x), y);
        let ax = self.inner(&apply(&self.a_xi, x), y);
        self.xi.iter().zip(&self.eta).map(|(a, b)| ae * a + ax * b).collect()
    }

    /// Normal component of `∂ᵢ∂ⱼψ` expressed in the frame.
    pub fn normal_second_derivative(&self, i: usize, j: usize) -> Vec<f64> {
        let v = &self.jet.dd[i][j];
        let (a, b) = (dot(v, &self.xi), dot(v, &self.eta));
        self.xi.iter().zip(&self.eta).map(|(x, e)| b * x + a * e).collect()
    }

    /// Sectional curvature of the plane spanned by `x`, `y` from
    /// `R(X, Y)Z = A_{II(Y,Z)} X − A_{II(X,Z)} Y`.
    pub fn sectional_curvature(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let (xx, yy, xy) = (self.inner(x, x), self.inner(y, y), self.inner(x, y));
        let area = xx * yy - xy * xy;
        if !(area > 1e-14 * xx * yy) {
            return Err(Error::InvalidParameters("degenerate tangent plane".into()));
        }
        let iyy = self.second_fundamental_form(y, y);
        let ixy = self.second_fundamental_form(x, y);
        let r = self.inner(&apply(&self.shape_operator(&iyy), x), x) - self.inner(&apply(&self.shape_operator(&ixy), y), x);
        Ok(r / area)
    }

    /// `a = a^⊤ + a^N`: coordinates of `a^⊤` (`(a^⊤)ⁱ = gⁱʲ⟨a, ∂ⱼψ⟩`) and the
    /// ambient vector `a^N = ⟨a, ξ⟩ η + ⟨a, η⟩ ξ`.
    pub fn decompose(&self, a: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.dim();
        let low: Vec<f64> = self.jet.d.iter().map(|d| dot(a, d)).collect();
        let top = (0..n).map(|i| (0..n).map(|j| self.metric_inv[(i, j)] * low[j]).sum()).collect();
        let (ax, ae) = (dot(a, &self.xi), dot(a, &self.eta));
        let normal = self.xi.iter().zip(&self.eta).map(|(x, e)| ax * e + ae * x).collect();
        (top, normal)
    }

    /// Coordinates of `α♯`.
    pub fn alpha_sharp(&self) -> Vec<f64> {
        apply(&self.metric_inv, &self.alpha)
    }

    /// `max |A − A_II|` between the two shape-operator routes.
    pub fn route_defect(&self) -> f64 {
        (&self.a_xi - &self.a_xi_ii).amax().max((&self.a_eta - &self.a_eta_ii).amax())
    }

    /// `max |gA − (gA)ᵀ|` over both operators.
    pub fn self_adjoint_defect(&self) -> f64 {
        let s = |a: &DMatrix<f64>| {
            let ga = &self.metric * a;
            (&ga - ga.transpose()).amax()
        };
        s(&self.a_xi).max(s(&self.a_eta))
    }

    /// Largest violation of `⟨ξ,ξ⟩ = ⟨η,η⟩ = 0`, `⟨ξ,η⟩ = 1` and normality.
    pub fn frame_defect(&self) -> f64 {
        let mut m = dot(&self.xi, &self.xi)
            .abs()
            .max(dot(&self.eta, &self.eta).abs())
            .max((dot(&self.xi, &self.eta) - 1.0).abs());
        for d in &self.jet.d {
            m = m.max(dot(&self.xi, d).abs()).max(dot(&self.eta, d).abs());
        }
        m
    }

    /// Coordinates of the induced gradient `∇ψ₀` and `Δψ₀` (analytic).
    pub fn time_gradient_and_laplacian(&self) -> (Vec<f64>, f64) {
        let n = self.dim();
        let dp0: Vec<f64> = self.jet.d.iter().map(|d| d[0]).collect();
        let grad = apply(&self.metric_inv, &dp0);
        let mut lap = 0.0;
        for i in 0..n {
            for j in 0..n {
                let gamma: f64 = (0..n).map(|k| self.christoffel[k][(i, j)] * dp0[k]).sum();
                lap += self.metric_inv[(i, j)] * (self.jet.dd[i][j][0] - gamma);
            }
        }
        (grad, lap)
    }

    /// `(1 + ‖∇ψ₀‖²)/ψ₀² − (2/(nψ₀)) Δψ₀` for light-cone immersions.
    pub fn mean_curvature_sq_from_time_function(&self) -> f64 {
        let n = self.dim() as f64;
        let p0 = self.jet.psi[0];
        let dp0: Vec<f64> = self.jet.d.iter().map(|d| d[0]).collect();
        let (grad, lap) = self.time_gradient_and_laplacian();
        let gsq: f64 = grad.iter().zip(&dp0).map(|(a, b)| a * b).sum();
        (1.0 + gsq) / (p0 * p0) - 2.0 / (n * p0) * lap
    }

    /// `A_η = −((1 + ‖∇ψ₀‖²)/(2ψ₀²)) Id + Hess(ψ₀)/ψ₀` for the light-cone frame.
    pub fn a_eta_from_hessian(&self) -> DMatrix<f64> {
        let n = self.dim();
        let p0 = self.jet.psi[0];
        let dp0: Vec<f64> = self.jet.d.iter().map(|d| d[0]).collect();
        let (grad, _) = self.time_gradient_and_laplacian();
        let gsq: f64 = grad.iter().zip(&dp0).map(|(a, b)| a * b).sum();
        let hess_low = DMatrix::from_fn(n, n, |j, i| {
            let gamma: f64 = (0..n).map(|k| self.christoffel[k][(i, j)] * dp0[k]).sum();
            self.jet.dd[i][j][0] - gamma
        });
        &self.metric_inv * hess_low / p0 - DMatrix::identity(n, n) * ((1.0 + gsq) / (2.0 * p0 * p0))
    }
}

pub(crate) fn apply(a: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    (0..a.nrows()).map(|k| (0..a.ncols()).map(|i| a[(k, i)] * x[i]).sum()).collect()
}

pub(crate) fn umbilicity(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows() as f64;
    (a * a).trace() - a.trace().powi(2) / n
}

/// Sectional curvature at `u` of the plane spanned by `x`, `y`.
pub fn gauss_sectional(im: &Immersion, frame: &Frame, u: &[f64], x: &[f64], y: &[f64]) -> Result<f64> {
    shape_data(im, frame, u)?.sectional_curvature(x, y)
}

/// `A_η` at `u` by the second fundamental form route (no differencing).
fn a_eta_analytic(im: &Immersion, frame: &Frame, u: &[f64]) -> Result<(DMatrix<f64>, Vec<DMatrix<f64>>)> {
    let jet = im.chart_jet(u)?;
    let (_, ginv) = metric_inverse(&jet)?;
    let (_, eta) = frame.eval(im, &jet)?;
    Ok((second_form_operator(&jet, &ginv, &eta), christoffel(&jet, &ginv)))
}

pub(crate) fn five_point<T, F>(u: &[f64], i: usize, h: f64, mut f: F) -> Result<T>
where
    T: std::ops::Sub<Output = T> + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
    F: FnMut(&[f64]) -> Result<T>,
{
    let mut v = u.to_vec();
    let mut at = |s: f64| {
        v[i] = u[i] + s * h;
        f(&v)
    };
    let (p2, p1, m1, m2) = (at(2.0)?, at(1.0)?, at(-1.0)?, at(-2.0)?);
    Ok((p1 - m1) * (8.0 / (12.0 * h)) + (m2 - p2) * (1.0 / (12.0 * h)))
}

/// `∇ᵢA_η` for each coordinate direction `i`, as matrices
/// `(∇ᵢA)ᵏⱼ = ∂ᵢAᵏⱼ + Γᵏᵢₗ Aˡⱼ − Aᵏₗ Γˡᵢⱼ`, with `∂ᵢA` from a fourth-order
/// stencil on the analytic second-form route.
pub fn nabla_a_eta(im: &Immersion, frame: &Frame, u: &[f64]) -> Result<Vec<DMatrix<f64>>> {
    let (a, gamma) = a_eta_analytic(im, frame, u)?;
    let n = u.len();
    (0..n)
        .map(|i| {
            let da = five_point(u, i, TENSOR_FD_STEP, |v| Ok(a_eta_analytic(im, frame, v)?.0))?;
            let gi = DMatrix::from_fn(n, n, |k, l| gamma[k][(i, l)]);
            Ok(da + &gi * &a - &a * &gi)
        })
        .collect()
}

/// `∂ᵢ tr A_η`, from a fourth-order stencil on the analytic route.
pub fn trace_a_eta_differential(im: &Immersion, frame: &Frame, u: &[f64]) -> Result<Vec<f64>> {
    let chart = im.chart();
    (0..u.len())
        .map(|i| {
            let h = chart.fd_step(u, i, TENSOR_FD_STEP);
            five_point(u, i, h, |v| Ok(a_eta_analytic(im, frame, v)?.0.trace()))
        })
        .collect()
}

/// `(∇_X A_η) Y` in coordinates.
pub fn covariant_shape_derivative(im: &Immersion, frame: &Frame, u: &[f64], x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let nabla = nabla_a_eta(im, frame, u)?;
    let n = u.len();
    let mut out = vec![0.0; n];
    for (xi, m) in x.iter().zip(&nabla) {
        for (o, v) in out.iter_mut().zip(apply(m, y)) {
            *o += xi * v;
        }
    }
    Ok(out)
}

/// `‖(∇_X A_η)Y − (∇_Y A_η)X + α(X) A_η Y − α(Y) A_η X‖_g`.
pub fn codazzi_defect(im: &Immersion, frame: &Frame, u: &[f64], x: &[f64], y: &[f64]) -> Result<f64> {
    let sd = shape_data(im, frame, u)?;
    let nxy = covariant_shape_derivative(im, frame, u, x, y)?;
    let nyx = covariant_shape_derivative(im, frame, u, y, x)?;
    let ax: f64 = sd.alpha.iter().zip(x).map(|(a, b)| a * b).sum();
    let ay: f64 = sd.alpha.iter().zip(y).map(|(a, b)| a * b).sum();
    let (ay_vec, ax_vec) = (apply(&sd.a_eta_ii, y), apply(&sd.a_eta_ii, x));
    let v: Vec<f64> = (0..u.len())
        .map(|k| nxy[k] - nyx[k] + ax * ay_vec[k] - ay * ax_vec[k])
        .collect();
    Ok(sd.norm(&v))
}

/// Christoffel symbols from central differences of the metric coefficients.
pub fn christoffel_from_metric_fd(im: &Immersion, u: &[f64], h: f64) -> Result<Vec<DMatrix<f64>>> {
    let n = u.len();
    let jet = im.chart_jet(u)?;
    let (_, ginv) = metric_inverse(&jet)?;
    let mut dg = Vec::with_capacity(n);
    let mut v = u.to_vec();
    for i in 0..n {
        v[i] = u[i] + h;
        let gp = im.chart_jet(&v)?.metric();
        v[i] = u[i] - h;
        let gm = im.chart_jet(&v)?.metric();
        v[i] = u[i];
        dg.push((gp - gm) / (2.0 * h));
    }
    Ok((0..n)
        .map(|k| {
            DMatrix::from_fn(n, n, |i, j| {
                (0..n)
                    .map(|l| 0.5 * ginv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]))
                    .sum()
            })
        })
        .collect())
}

/// Scalar curvature of the induced metric from Christoffel symbols and
/// their fourth-order finite differences.
pub fn intrinsic_scalar_curvature(im: &Immersion, u: &[f64]) -> Result<f64> {
    let n = u.len();
    let gamma_at = |v: &[f64]| -> Result<Vec<DMatrix<f64>>> {
        let jet = im.chart_jet(v)?;
        let (_, ginv) = metric_inverse(&jet)?;
        Ok(christoffel(&jet, &ginv))
    };
    let jet = im.chart_jet(u)?;
    let (_, ginv) = metric_inverse(&jet)?;
    let gamma = christoffel(&jet, &ginv);
    // dgamma[i][l] = ∂ᵢ Γˡ
    let mut dgamma = Vec::with_capacity(n);
    for i in 0..n {
        let d = five_point(u, i, TENSOR_FD_STEP, |v| Ok(GammaVec(gamma_at(v)?)))?;
        dgamma.push(d.0);
    }
    let mut s = 0.0;
    for j in 0..n {
        for k in 0..n {
            // Ric_jk = Rⁱᵢⱼₖ
            let mut ric = 0.0;
            for i in 0..n {
                ric += dgamma[i][i][(j, k)] - dgamma[j][i][(i, k)];
                for m in 0..n {
                    ric += gamma[i][(i, m)] * gamma[m][(j, k)] - gamma[i][(j, m)] * gamma[m][(i, k)];
                }
            }
            s += ginv[(j, k)] * ric;
        }
    }
    Ok(s)
}

struct GammaVec(Vec<DMatrix<f64>>);

impl std::ops::Add for GammaVec {
    type Output = GammaVec;
    fn add(self, rhs: GammaVec) -> GammaVec {
        GammaVec(self.0.into_iter().zip(rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl std::ops::Sub for GammaVec {
    type Output = GammaVec;
    fn sub(self, rhs: GammaVec) -> GammaVec {
        GammaVec(self.0.into_iter().zip(rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl std::ops::Mul<f64> for GammaVec {
    type Output = GammaVec;
    fn mul(self, s: f64) -> GammaVec {
        GammaVec(self.0.into_iter().map(|a| a * s).collect())
    }
}

/// Pointwise cross-checks of the extrinsic and intrinsic invariants.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantsReport {
    pub u: Vec<f64>,
    pub trace_a_xi: f64,
    pub trace_a_eta: f64,
    pub mean_curvature: Vec<f64>,
    /// `(2/n²) tr A_ξ tr A_η`.
    pub h_sq_trace: f64,
    /// From the intrinsic geometry (conformal formulas for graphs, otherwise
    /// `S/(n(n−1))` of the induced metric).
    pub h_sq_intrinsic: f64,
    /// `(1 + ‖∇ψ₀‖²)/ψ₀² − (2/(nψ₀)) Δψ₀`, light-cone immersions only.
    pub h_sq_time_function: Option<f64>,
    pub ii_sq: f64,
    pub n_h_sq: f64,
    pub scalar_curvature_extrinsic: f64,
    pub scalar_curvature_intrinsic: f64,
    pub umbilicity_defect: f64,
    /// `max |A_ξ + Id|`, light-cone frame only.
    pub a_xi_identity_defect: Option<f64>,
    pub route_defect: f64,
    pub self_adjoint_defect: f64,
    pub frame_defect: f64,
    pub alpha: Vec<f64>,
}

impl InvariantsReport {
    /// Largest disagreement between the available `⟨H, H⟩` paths.
    pub fn h_sq_spread(&self) -> f64 {
        let mut v = vec![self.h_sq_trace, self.h_sq_intrinsic];
        v.extend(self.h_sq_time_function);
        let max = v.iter().cloned().fold(f64::MIN, f64::max);
        let min = v.iter().cloned().fold(f64::MAX, f64::min);
        max - min
    }
}

/// Field `f` and point `x` such that the immersion near `u` is the graph of
/// `f` over `Sⁿ`, when that is known in closed form.
pub(crate) fn conformal_representative(im: &Immersion, u: &[f64]) -> Option<Result<(ScalarField, SpherePoint)>> {
    let x = || SpherePoint::normalized(chart_point(u));
    match im {
        Immersion::Graph(f) => Some(x().map(|x| (f.clone(), x))),
        Immersion::RotatedGraph { field, rotation } => Some(x().and_then(|x| {
            let y = rotation
                .iter()
                .map(|row| row.iter().zip(x.coords()).map(|(a, b)| a * b).sum())
                .collect();
            Ok((field.clone(), SpherePoint::normalized(y)?))
        })),
        Immersion::Snvr { v, r } => Some(x().and_then(|x| {
            let p = ObataParameters::new(v.clone(), 1.0 / (r * r))?;
            Ok((ScalarField::Obata(p), x))
        })),
        _ => None,
    }
}

pub fn invariants_report(im: &Immersion, frame: &Frame, u: &[f64]) -> Result<InvariantsReport> {
    let sd = shape_data(im, frame, u)?;
    let n = sd.dim();
    let nf = n as f64;
    let (h_sq_intrinsic, s_intrinsic) = match conformal_representative(im, u) {
        Some(rep) => {
            let (f, x) = rep?;
            let t = f.tangential(&x, Derivatives::Analytic)?;
            (conformal::mean_curvature_sq_from(n, &t), conformal::scalar_curvature_from(n, &t))
        }
        None => {
            let s = intrinsic_scalar_curvature(im, u)?;
            (s / (nf * (nf - 1.0)), s)
        }
    };
    let light_cone = matches!(frame, Frame::LightCone);
    let h_sq = sd.mean_curvature_sq();
    Ok(InvariantsReport {
        u: u.to_vec(),
        trace_a_xi: sd.trace_a_xi(),
        trace_a_eta: sd.trace_a_eta(),
        mean_curvature: sd.mean_curvature(),
        h_sq_trace: h_sq,
        h_sq_intrinsic,
        h_sq_time_function: light_cone.then(|| sd.mean_curvature_sq_from_time_function()),
        ii_sq: sd.second_form_sq(),
        n_h_sq: nf * h_sq,
        scalar_curvature_extrinsic: sd.extrinsic_scalar_curvature(),
        scalar_curvature_intrinsic: s_intrinsic,
        umbilicity_defect: sd.umbilicity_defect(),
        a_xi_identity_defect: light_cone.then(|| (&sd.a_xi + DMatrix::identity(n, n)).amax()),
        route_defect: sd.route_defect(),
        self_adjoint_defect: sd.self_adjoint_defect(),
        frame_defect: sd.frame_defect(),
        alpha: sd.alpha.clone(),
    })
}
