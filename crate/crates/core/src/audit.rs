//! Quadrature audits of integral identities on compact immersions.
//!
//! Every audit evaluates a pointwise integrand at the nodes of the chart
//! rule of the immersion (in parallel), multiplies by `√det g` and sums the
//! weighted values in node order with compensated summation, so results are
//! deterministic. Identities pass when `|∫| ≤ tol(N)`; the inequality passes
//! when `∫ ≥ −tol(N)`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::conformal;
use crate::embedding::{
    apply, conformal_representative, five_point, shape_data, trace_a_eta_differential, umbilicity, Frame, Immersion,
    ShapeData, CHART_FD_STEP, TENSOR_FD_STEP,
};
use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::field::Derivatives;
use crate::minkowski::{minkowski_dot_slices as mdot, CausalCharacter, LorentzVector};
use crate::quadrature::{QuadratureRule, RuleDescriptor};
use crate::sum::sum;

/// Largest admissible spread of `⟨H, H⟩` over the nodes for the audits
/// that assume constant mean curvature length.
pub const CONSTANT_H_TOL: f64 = 1e-6;

/// `tol(N) = max(c·N⁻⁴, floor)` for a rule of resolution `N`. The default
/// `c = 1` admits `≈ 1e−6` at `N = 32`; the floor `1e−9` sits an order of
/// magnitude above the noise of the difference stencils inside the
/// integrands (`≲ 1e−10`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TolerancePolicy {
    pub c: f64,
    pub floor: f64,
}

impl TolerancePolicy {
    pub const DEFAULT: TolerancePolicy = TolerancePolicy { c: 1.0, floor: 1e-9 };

    pub fn tol(&self, resolution: usize) -> f64 {
        (self.c * (resolution as f64).powi(-4)).max(self.floor)
    }
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// Resolution, tolerance and convergence-table settings of an audit run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditOptions {
    pub resolution: usize,
    pub policy: TolerancePolicy,
    /// Replaces `tol(N)` when set.
    pub tol: Option<f64>,
    /// Coarser resolutions integrated for the convergence table.
    pub coarse_levels: Vec<usize>,
}

impl AuditOptions {
    pub fn new(resolution: usize) -> Self {
        Self {
            resolution,
            policy: TolerancePolicy::DEFAULT,
            tol: None,
            coarse_levels: Vec::new(),
        }
    }

    /// Convergence table at `N/4`, `N/2`, `N`.
    pub fn with_convergence(self) -> Self {
        let levels = [self.resolution / 4, self.resolution / 2];
        self.with_levels(&levels)
    }

    /// Convergence table at the given coarser resolutions followed by `N`.
    pub fn with_levels(mut self, levels: &[usize]) -> Self {
        self.coarse_levels = levels.iter().copied().filter(|&r| r >= 2 && r < self.resolution).collect();
        self.coarse_levels.sort_unstable();
        self.coarse_levels.dedup();
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = Some(tol);
        self
    }

    pub fn tol(&self) -> f64 {
        self.tol.unwrap_or_else(|| self.policy.tol(self.resolution))
    }

    fn levels(&self) -> Vec<usize> {
        let mut v = self.coarse_levels.clone();
        v.push(self.resolution);
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuditKind {
    Minkowski,
    ParallelH,
    Inequality,
    Beltrami,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditTerm {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub resolution: usize,
    pub nodes: usize,
    pub value: f64,
}

/// Outcome of one integral audit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditResult {
    pub kind: AuditKind,
    pub immersion: String,
    pub frame: String,
    /// The constant vector actually used.
    pub a: Vec<f64>,
    pub value: f64,
    pub tol: f64,
    pub resolution: usize,
    pub quadrature: RuleDescriptor,
    pub nodes: usize,
    /// Integrals of the individual summands; they add up to `value`.
    pub terms: Vec<AuditTerm>,
    /// Named pointwise maxima over the nodes (absolute values).
    pub pointwise: Vec<AuditTerm>,
    /// Coarsest first; the last row is the reported value.
    pub convergence: Vec<ConvergenceRow>,
    pub notes: Vec<String>,
    pub pass: bool,
}

impl AuditResult {
    pub fn pointwise(&self, name: &str) -> Option<f64> {
        self.pointwise.iter().find(|t| t.name == name).map(|t| t.value)
    }

    pub fn term(&self, name: &str) -> Option<f64> {
        self.terms.iter().find(|t| t.name == name).map(|t| t.value)
    }

    /// Empirical orders `log₂(|I_k| / |I_{k+1}|)` between consecutive rows.
    pub fn observed_orders(&self) -> Vec<f64> {
        self.convergence
            .windows(2)
            .map(|w| {
                let ratio = w[1].resolution as f64 / w[0].resolution as f64;
                (w[0].value.abs() / w[1].value.abs()).ln() / ratio.ln()
            })
            .collect()
    }

    /// Whether every refinement either decays with at least the given order or
    /// lands at or below `floor`.
    pub fn decays_with_order(&self, order: f64, floor: f64) -> bool {
        self.convergence.windows(2).all(|w| {
            let ratio = w[1].resolution as f64 / w[0].resolution as f64;
            w[1].value.abs() <= floor || w[0].value.abs() >= ratio.powf(order) * w[1].value.abs()
        })
    }
}

/// Per-node integrand: summands (before the volume factor) and monitored
/// pointwise quantities.
struct NodeValue {
    density: f64,
    terms: Vec<f64>,
    monitors: Vec<f64>,
}

struct Integrated {
    terms: Vec<f64>,
    monitor_max: Vec<f64>,
    monitor_min: Vec<f64>,
    nodes: usize,
    descriptor: RuleDescriptor,
}

fn integrate_nodes<F>(rule: &QuadratureRule, f: F) -> Result<Integrated>
where
    F: Fn(&[f64]) -> Result<NodeValue> + Sync,
{
    let values: Vec<NodeValue> = rule.nodes().par_iter().map(|u| f(u)).collect::<Result<_>>()?;
    let k = values.first().map_or(0, |v| v.terms.len());
    let m = values.first().map_or(0, |v| v.monitors.len());
    let terms = (0..k)
        .map(|j| sum(values.iter().zip(rule.weights()).map(|(v, w)| w * v.density * v.terms[j])))
        .collect();
    let monitor_max = (0..m)
        .map(|j| values.iter().map(|v| v.monitors[j]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let monitor_min = (0..m)
        .map(|j| values.iter().map(|v| v.monitors[j]).fold(f64::INFINITY, f64::min))
        .collect();
    Ok(Integrated {
        terms,
        monitor_max,
        monitor_min,
        nodes: rule.len(),
        descriptor: rule.descriptor().clone(),
    })
}

fn check_a(im: &Immersion, a: &LorentzVector) -> Result<()> {
    let expected = im.dim() + 2;
    if a.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: a.len(),
        });
    }
    Ok(())
}

fn compact_rule(im: &Immersion, res: usize) -> Result<QuadratureRule> {
    if !im.is_compact() {
        return Err(Error::NotCompact(im.name()));
    }
    im.chart_rule(res)
}

/// Integrates at every level of `opts` and assembles the result from the
/// finest one.
struct Spec<'a> {
    kind: AuditKind,
    im: &'a Immersion,
    frame: String,
    a: Vec<f64>,
    term_names: &'a [&'a str],
    monitor_names: &'a [&'a str],
    one_sided: bool,
}

fn run<F>(spec: Spec<'_>, opts: &AuditOptions, f: F) -> Result<(AuditResult, Integrated)>
where
    F: Fn(&[f64]) -> Result<NodeValue> + Sync,
{
    let mut convergence = Vec::new();
    let mut last = None;
    for res in opts.levels() {
        let rule = compact_rule(spec.im, res)?;
        let out = integrate_nodes(&rule, &f)?;
        convergence.push(ConvergenceRow {
            resolution: res,
            nodes: out.nodes,
            value: sum(out.terms.iter().copied()),
        });
        last = Some(out);
    }
    let out = last.ok_or_else(|| Error::InvalidParameters("no quadrature level".into()))?;
    let value = convergence.last().map_or(0.0, |r| r.value);
    let tol = opts.tol();
    let pass = if spec.one_sided { value >= -tol } else { value.abs() <= tol };
    let named = |names: &[&str], vals: &[f64]| {
        names
            .iter()
            .zip(vals)
            .map(|(n, v)| AuditTerm {
                name: (*n).into(),
                value: *v,
            })
            .collect()
    };
    let result = AuditResult {
        kind: spec.kind,
        immersion: spec.im.name(),
        frame: spec.frame,
        a: spec.a,
        value,
        tol,
        resolution: opts.resolution,
        quadrature: out.descriptor.clone(),
        nodes: out.nodes,
        terms: named(spec.term_names, &out.terms),
        pointwise: named(spec.monitor_names, &out.monitor_max),
        convergence,
        notes: Vec::new(),
        pass,
    };
    Ok((result, out))
}

const MINKOWSKI_TERMS: [&str; 5] = [
    "((n-1)/n) a_top(tr A_eta)",
    "<a,xi> (tr A_eta^2 - (tr A_eta)^2/n)",
    "<a,eta> (tr(A_eta A_xi) - tr A_eta tr A_xi/n)",
    "-<A_eta a_top, alpha#>",
    "<a_top, alpha#> tr A_eta",
];

/// The five summands of the divergence identity at one node.
fn minkowski_integrand(im: &Immersion, frame: &Frame, a: &[f64], u: &[f64]) -> Result<NodeValue> {
    let sd = shape_data(im, frame, u)?;
    let n = sd.dim() as f64;
    let (ax, ae) = (&sd.a_xi_ii, &sd.a_eta_ii);
    let (tx, te) = (ax.trace(), ae.trace());
    let (top, _) = sd.decompose(a);
    let dtr = trace_a_eta_differential(im, frame, u)?;
    let covector = |w: &[f64], x: &[f64]| -> f64 { w.iter().zip(x).map(|(p, q)| p * q).sum() };
    let terms = vec![
        (n - 1.0) / n * covector(&dtr, &top),
        mdot(a, &sd.xi) * umbilicity(ae),
        mdot(a, &sd.eta) * ((ae * ax).trace() - te * tx / n),
        -covector(&sd.alpha, &apply(ae, &top)),
        covector(&sd.alpha, &top) * te,
    ];
    Ok(NodeValue {
        density: sd.volume_density(),
        terms,
        monitors: Vec::new(),
    })
}

/// Integral of the divergence identity whose integrand is
/// `((n−1)/n) a^⊤(tr A_η) + ⟨a,ξ⟩(tr A_η² − (tr A_η)²/n)
///  + ⟨a,η⟩(tr(A_η A_ξ) − tr A_η tr A_ξ/n) − ⟨A_η a^⊤, α♯⟩ + ⟨a^⊤, α♯⟩ tr A_η`
/// over a compact immersion; the exact value is zero for every frame and `a`.
pub fn minkowski_formula_audit(
    im: &Immersion,
    frame: &Frame,
    a: &LorentzVector,
    opts: &AuditOptions,
) -> Result<AuditResult> {
    check_a(im, a)?;
    let av = a.as_slice();
    let spec = Spec {
        kind: AuditKind::Minkowski,
        im,
        frame: frame.name(),
        a: av.to_vec(),
        term_names: &MINKOWSKI_TERMS,
        monitor_names: &[],
        one_sided: false,
    };
    Ok(run(spec, opts, |u| minkowski_integrand(im, frame, av, u))?.0)
}

/// `(ξ/φ, φη)`.
pub fn rescaled_frame(frame: Frame, phi: Expression) -> Result<Frame> {
    frame.rescaled(phi)
}

/// `max ‖ᾱ − (α − d log φ)‖_∞` over `points`, where `ᾱ` is the connection
/// form of the rescaled frame and `d log φ` is a central difference.
pub fn alpha_rescaling_check(im: &Immersion, frame: &Frame, phi: &Expression, points: &[Vec<f64>]) -> Result<f64> {
    let rescaled = frame.clone().rescaled(phi.clone())?;
    let log_phi = |u: f64, w: f64| -> Result<f64> {
        let s: f64 = phi.eval_chart(u, w)?;
        if !(s > 0.0) {
            return Err(Error::Domain(format!("rescaling function {phi} = {s} must be positive")));
        }
        Ok(s.ln())
    };
    let h = CHART_FD_STEP;
    let mut worst = 0.0f64;
    for u in points {
        if u.len() != 2 {
            return Err(Error::Unsupported("frame rescaling on charts of dimension ≠ 2".into()));
        }
        let alpha = shape_data(im, frame, u)?.alpha;
        let alpha_bar = shape_data(im, &rescaled, u)?.alpha;
        let dlog = [
            (log_phi(u[0] + h, u[1])? - log_phi(u[0] - h, u[1])?) / (2.0 * h),
            (log_phi(u[0], u[1] + h)? - log_phi(u[0], u[1] - h)?) / (2.0 * h),
        ];
        for i in 0..2 {
            worst = worst.max((alpha_bar[i] - (alpha[i] - dlog[i])).abs());
        }
    }
    Ok(worst)
}

/// Shape data in the light-cone frame together with the normalised frame
/// `ξ₀ = ξ/u`, `ξ₁ = uη` with `u = tr A_ξ`.
struct TraceFrame {
    sd: ShapeData,
    xi0: Vec<f64>,
    xi1: Vec<f64>,
    a0: DMatrix<f64>,
    a1: DMatrix<f64>,
}

fn trace_frame(im: &Immersion, u: &[f64]) -> Result<TraceFrame> {
    let sd = shape_data(im, &Frame::LightCone, u)?;
    let s = sd.a_xi_ii.trace();
    if !(s.abs() > 0.0) {
        return Err(Error::Precondition(format!("tr A_ξ vanishes at {u:?}")));
    }
    Ok(TraceFrame {
        xi0: sd.xi.iter().map(|c| c / s).collect(),
        xi1: sd.eta.iter().map(|c| c * s).collect(),
        a0: &sd.a_xi_ii / s,
        a1: &sd.a_eta_ii * s,
        sd,
    })
}

fn light_cone_graph(im: &Immersion) -> Result<()> {
    let probe = im.chart_rule(2)?;
    let u = probe.nodes().first().cloned().unwrap_or_default();
    if !im.in_light_cone() || conformal_representative(im, &u).is_none() {
        return Err(Error::Precondition(format!(
            "{} is not a light-cone graph over the sphere",
            im.name()
        )));
    }
    Ok(())
}

fn check_constant_h(out: &Integrated, index: usize) -> Result<(f64, f64)> {
    let (lo, hi) = (out.monitor_min[index], out.monitor_max[index]);
    if !(hi - lo <= CONSTANT_H_TOL) {
        return Err(Error::Precondition(format!(
            "⟨H, H⟩ is not constant: range [{lo}, {hi}] exceeds {CONSTANT_H_TOL:e}"
        )));
    }
    Ok((lo, hi))
}

/// `⟨H, H⟩ = (2/n²) tr A_ξ tr A_η` from the second-form route.
fn mean_curvature_sq_ii(sd: &ShapeData) -> f64 {
    let n = sd.dim() as f64;
    2.0 / (n * n) * sd.a_xi_ii.trace() * sd.a_eta_ii.trace()
}

fn mixed(x: &DMatrix<f64>, y: &DMatrix<f64>, n: f64) -> f64 {
    (x * y).trace() - x.trace() * y.trace() / n
}

/// The pair of integral formulas for light-cone graphs with constant
/// `⟨H, H⟩`, written in the frame `ξ₀ = ξ/u`, `ξ₁ = uη` (`u = tr A_ξ`): for
/// `i ∈ Z₂`,
/// `∫ ⟨a,ξᵢ⟩(tr A²_{ξᵢ₊₁} − (tr A_{ξᵢ₊₁})²/n) + ⟨a,ξᵢ₊₁⟩(tr(A_{ξᵢ₊₁}A_{ξᵢ}) − tr A_{ξᵢ₊₁} tr A_{ξᵢ}/n) = 0`.
pub fn parallel_h_audit(im: &Immersion, a: &LorentzVector, opts: &AuditOptions) -> Result<Vec<AuditResult>> {
    check_a(im, a)?;
    light_cone_graph(im)?;
    let av = a.as_slice();
    let terms: [[&str; 2]; 2] = [
        [
            "<a,xi_0> (tr A_1^2 - (tr A_1)^2/n)",
            "<a,xi_1> (tr(A_1 A_0) - tr A_1 tr A_0/n)",
        ],
        [
            "<a,xi_1> (tr A_0^2 - (tr A_0)^2/n)",
            "<a,xi_0> (tr(A_0 A_1) - tr A_0 tr A_1/n)",
        ],
    ];
    let mut results = Vec::with_capacity(2);
    for (i, names) in terms.iter().enumerate() {
        let spec = Spec {
            kind: AuditKind::ParallelH,
            im,
            frame: format!("(xi_0, xi_1) = (xi/tr A_xi, tr A_xi eta), formula i = {i}"),
            a: av.to_vec(),
            term_names: names,
            monitor_names: &["<H,H>"],
            one_sided: false,
        };
        let (mut r, out) = run(spec, opts, |u| {
            let c = trace_frame(im, u)?;
            let n = c.sd.dim() as f64;
            let (this, next, a_this, a_next) = if i == 0 {
                (&c.xi0, &c.xi1, &c.a0, &c.a1)
            } else {
                (&c.xi1, &c.xi0, &c.a1, &c.a0)
            };
            Ok(NodeValue {
                density: c.sd.volume_density(),
                terms: vec![
                    mdot(av, this) * umbilicity(a_next),
                    mdot(av, next) * mixed(a_next, a_this, n),
                ],
                monitors: vec![mean_curvature_sq_ii(&c.sd)],
            })
        })?;
        let (lo, hi) = check_constant_h(&out, 0)?;
        r.pointwise = vec![
            AuditTerm {
                name: "<H,H> min".into(),
                value: lo,
            },
            AuditTerm {
                name: "<H,H> max".into(),
                value: hi,
            },
        ];
        results.push(r);
    }
    Ok(results)
}

/// `∫ ⟨a, ξ₀ − ξ₁⟩ (n(n−1)⟨H,H⟩ − S) dV ≥ 0` for a light-cone graph with
/// constant `⟨H, H⟩` and timelike `a` with `⟨a, ξ₀⟩ > 0`. `S` is the scalar
/// curvature of the induced (conformal) metric. When `a` violates the sign
/// condition everywhere, `−a` is used instead and a note records it. Also
/// reports the maxima of `|n(n−1)⟨H,H⟩ − S|` and of the umbilicity defect
/// `|tr A_η² − (tr A_η)²/n|` over the nodes.
pub fn inequality_audit(im: &Immersion, a: &LorentzVector, opts: &AuditOptions) -> Result<AuditResult> {
    check_a(im, a)?;
    light_cone_graph(im)?;
    if a.causal_character() != CausalCharacter::Timelike {
        return Err(Error::Precondition(format!("a = {:?} is not timelike", a.as_slice())));
    }
    let probe = compact_rule(im, 4)?;
    let signs: Vec<f64> = probe
        .nodes()
        .iter()
        .map(|u| Ok(mdot(a.as_slice(), &trace_frame(im, u)?.xi0)))
        .collect::<Result<_>>()?;
    let (av, flipped) = if signs.iter().all(|s| *s > 0.0) {
        (a.as_slice().to_vec(), false)
    } else if signs.iter().all(|s| *s < 0.0) {
        (a.scale(-1.0).into_vec(), true)
    } else {
        return Err(Error::Precondition("⟨a, ξ₀⟩ changes sign".into()));
    };
    let spec = Spec {
        kind: AuditKind::Inequality,
        im,
        frame: "(xi_0, xi_1) = (xi/tr A_xi, tr A_xi eta)".into(),
        a: av.clone(),
        term_names: &["<a, xi_0 - xi_1> (n(n-1)<H,H> - S)"],
        monitor_names: &["|n(n-1)<H,H> - S|", "umbilicity defect", "<H,H>", "-<a,xi_0>"],
        one_sided: true,
    };
    let (mut r, out) = run(spec, opts, |u| {
        let c = trace_frame(im, u)?;
        let n = c.sd.dim();
        let nf = n as f64;
        let (field, x) = conformal_representative(im, u).ok_or_else(|| Error::Precondition(im.name()))??;
        let t = field.tangential(&x, Derivatives::Analytic)?;
        let s = conformal::scalar_curvature_from(n, &t);
        let h2 = mean_curvature_sq_ii(&c.sd);
        let defect = nf * (nf - 1.0) * h2 - s;
        let diff: Vec<f64> = c.xi0.iter().zip(&c.xi1).map(|(p, q)| p - q).collect();
        Ok(NodeValue {
            density: c.sd.volume_density(),
            terms: vec![mdot(&av, &diff) * defect],
            monitors: vec![
                defect.abs(),
                umbilicity(&c.sd.a_eta_ii).abs(),
                h2,
                -mdot(&av, &c.xi0),
            ],
        })
    })?;
    let (lo, hi) = check_constant_h(&out, 2)?;
    if !(out.monitor_max[3] < 0.0) {
        return Err(Error::Precondition("⟨a, ξ₀⟩ > 0 fails at a node".into()));
    }
    r.pointwise.truncate(2);
    r.pointwise.push(AuditTerm {
        name: "<H,H> min".into(),
        value: lo,
    });
    r.pointwise.push(AuditTerm {
        name: "<H,H> max".into(),
        value: hi,
    });
    if flipped {
        r.notes.push("a replaced by -a to satisfy <a, xi_0> > 0".into());
    }
    Ok(r)
}

/// `√det g · (a^⊤)ⁱ` at `u`, with `(a^⊤)ⁱ = gⁱʲ⟨a, ∂ⱼψ⟩`.
fn weighted_tangent(im: &Immersion, a: &[f64], u: &[f64], i: usize) -> Result<f64> {
    let jet = im.chart_jet(u)?;
    let g = jet.metric();
    let n = g.nrows();
    let chol = g
        .clone()
        .cholesky()
        .ok_or_else(|| Error::ChartSingularity(u.to_vec()))?;
    let low = nalgebra::DVector::from_iterator(n, jet.d.iter().map(|d| mdot(a, d)));
    let top = chol.solve(&low);
    Ok(chol.determinant().sqrt() * top[i])
}

/// `div(a^⊤) = (1/√g) ∂ᵢ(√g (a^⊤)ⁱ)` by a fourth-order stencil.
pub fn tangent_divergence(im: &Immersion, a: &[f64], u: &[f64]) -> Result<f64> {
    let chart = im.chart();
    let mut total = 0.0;
    for i in 0..u.len() {
        let h = chart.fd_step(u, i, TENSOR_FD_STEP);
        total += five_point(u, i, h, |v| weighted_tangent(im, a, v, i))?;
    }
    let g = im.chart_jet(u)?.metric();
    Ok(total / g.determinant().sqrt())
}

/// Beltrami's equation `div(a^⊤) = ⟨a,ξ⟩ tr A_η + ⟨a,η⟩ tr A_ξ`: the value
/// is `∫ div(a^⊤) dV` (zero on a closed manifold) and the pointwise monitor is
/// the largest residual between the difference divergence and the right side.
pub fn beltrami_audit(im: &Immersion, frame: &Frame, a: &LorentzVector, opts: &AuditOptions) -> Result<AuditResult> {
    check_a(im, a)?;
    let av = a.as_slice();
    let spec = Spec {
        kind: AuditKind::Beltrami,
        im,
        frame: frame.name(),
        a: av.to_vec(),
        term_names: &["div(a_top)"],
        monitor_names: &["|div(a_top) - <a,xi> tr A_eta - <a,eta> tr A_xi|", "|<a,xi> tr A_eta + <a,eta> tr A_xi|"],
        one_sided: false,
    };
    let (r, _) = run(spec, opts, |u| {
        let sd = shape_data(im, frame, u)?;
        let div = tangent_divergence(im, av, u)?;
        let rhs = mdot(av, &sd.xi) * sd.a_eta_ii.trace() + mdot(av, &sd.eta) * sd.a_xi_ii.trace();
        Ok(NodeValue {
            density: sd.volume_density(),
            terms: vec![div],
            monitors: vec![(div - rhs).abs(), rhs.abs()],
        })
    })?;
    Ok(r)
}

/// Largest Beltrami residual over explicit chart points.
pub fn beltrami_residual(im: &Immersion, frame: &Frame, a: &LorentzVector, points: &[Vec<f64>]) -> Result<f64> {
    check_a(im, a)?;
    let av = a.as_slice();
    let mut worst = 0.0f64;
    for u in points {
        let sd = shape_data(im, frame, u)?;
        let div = tangent_divergence(im, av, u)?;
        let rhs = mdot(av, &sd.xi) * sd.a_eta_ii.trace() + mdot(av, &sd.eta) * sd.a_xi_ii.trace();
        worst = worst.max((div - rhs).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_policy_has_floor() {
        let p = TolerancePolicy { c: 1.0, floor: 1e-9 };
        assert_eq!(p.tol(2), 1.0 / 16.0);
        assert_eq!(p.tol(10_000), 1e-9);
    }

    #[test]
    fn levels_double() {
        assert_eq!(AuditOptions::new(256).with_convergence().levels(), vec![64, 128, 256]);
        assert_eq!(AuditOptions::new(8).levels(), vec![8]);
        assert_eq!(AuditOptions::new(8).with_levels(&[4, 2, 8, 16]).levels(), vec![2, 4, 8]);
    }

    #[test]
    fn round_graph_formulas_vanish() {
        let im = Immersion::round_graph(2).unwrap();
        let a = LorentzVector::new(vec![-1.0, 0.0, 0.0, 0.0]).unwrap();
        let opts = AuditOptions::new(32);
        let m = minkowski_formula_audit(&im, &Frame::LightCone, &a, &opts).unwrap();
        assert!(m.pass, "{m:?}");
        let b = beltrami_audit(&im, &Frame::LightCone, &a, &opts).unwrap();
        assert!(b.pointwise[0].value < 1e-9, "{b:?}");
        let i = inequality_audit(&im, &a, &opts).unwrap();
        assert_eq!(i.notes.len(), 1);
        assert!(i.pass);
    }

    #[test]
    fn non_compact_rejected() {
        let im = Immersion::FlatCylinder;
        let a = LorentzVector::e0(4);
        let err = minkowski_formula_audit(&im, &Frame::LightCone, &a, &AuditOptions::new(8)).unwrap_err();
        assert!(matches!(err, Error::NotCompact(_)));
    }
}
