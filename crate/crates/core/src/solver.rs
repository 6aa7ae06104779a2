//! Pseudospectral Levenberg–Marquardt solver for `2Δ⁰f − 2(1 − k e^{2f}) = 0`
//! on S², and classification of solutions against the explicit family
//! `f = log((1/√k)/(−v₀ + ⟨v̄, x⟩))`.
//!
//! The unknown is the coefficient vector of `f` up to degree `Lmax`.
//! Nonlinear terms are evaluated on a Gauss–Legendre grid and projected back
//! by quadrature (Galerkin), which makes the linearization
//! `J = Δ⁰ + Π(2k e^{2f} ·)` symmetric. Each step minimises
//! `‖ΠR + Jδ‖² + λ‖δ‖²` by preconditioned conjugate gradients on
//! `(J² + λ)δ = −JΠR`; `λ` adapts so that the grid residual norm strictly
//! decreases.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::conformal;
use crate::error::{Error, Result};
use crate::field::{Derivatives, ScalarField};
use crate::quadrature::{QuadratureRule, RuleDomain};
use crate::spectral::{sh_count, ShTransform, SpectralField};
use crate::sphere::SpherePoint;
use crate::sum::sum;

/// Relative fit residual below which a field counts as a family member.
pub const FAMILY_RHO_TOL: f64 = 1e-6;

/// Solver settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverConfig {
    pub k: f64,
    pub lmax: usize,
    pub nlat: usize,
    pub nlon: usize,
    /// Convergence threshold on the grid max-norm of `2Δ⁰f − 2(1 − k e^{2f})`.
    pub tol: f64,
    pub max_iter: usize,
    pub lambda0: f64,
    pub lambda_decrease: f64,
    pub lambda_increase: f64,
    pub lambda_min: f64,
    /// Damping beyond which the iteration is declared stalled.
    pub lambda_max: f64,
    /// Floor of the relative residual target of the inner conjugate-gradient
    /// solve; the target is `clamp(‖R‖₂, cg_tol, 1e−2)` (inexact steps far
    /// from a solution).
    pub cg_tol: f64,
    pub cg_max_iter: usize,
    /// Seed for random initial data in sweeps.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            k: 1.0,
            lmax: 32,
            nlat: 64,
            nlon: 128,
            tol: 1e-10,
            max_iter: 60,
            lambda0: 1e-3,
            lambda_decrease: 0.1,
            lambda_increase: 10.0,
            lambda_min: 1e-14,
            lambda_max: 1e10,
            cg_tol: 1e-13,
            cg_max_iter: 500,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn with_k(mut self, k: f64) -> Self {
        self.k = k;
        self
    }

    /// Band limit `lmax` on a `2·lmax × 4·lmax` grid.
    pub fn with_lmax(mut self, lmax: usize) -> Self {
        self.lmax = lmax;
        self.nlat = 2 * lmax.max(1);
        self.nlon = 4 * lmax.max(1);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0) || !self.k.is_finite() {
            return Err(Error::InvalidParameters(format!("k = {} must be positive", self.k)));
        }
        if self.nlat < self.lmax + 1 || self.nlon < 2 * self.lmax + 1 {
            return Err(Error::GridTooCoarse {
                lmax: self.lmax,
                nlat: self.nlat,
                nlon: self.nlon,
            });
        }
        let positive = [self.tol, self.lambda0, self.lambda_min, self.lambda_max, self.cg_tol];
        if positive.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::InvalidParameters("tolerances and damping must be positive".into()));
        }
        if !(self.lambda_decrease > 0.0 && self.lambda_decrease < 1.0 && self.lambda_increase > 1.0) {
            return Err(Error::InvalidParameters(
                "damping factors need 0 < decrease < 1 < increase".into(),
            ));
        }
        Ok(())
    }
}

/// Iteration record of a solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveDiagnostics {
    pub converged: bool,
    /// Accepted steps.
    pub iterations: usize,
    pub rejected_steps: usize,
    /// Grid max-norm of the residual after each accepted step (first entry:
    /// initial data).
    pub residual_history: Vec<f64>,
    /// Grid L² norm of the residual, same indexing.
    pub l2_history: Vec<f64>,
    /// Damping used for each accepted step.
    pub lambda_history: Vec<f64>,
    pub cg_iterations: Vec<usize>,
    pub residual_max: f64,
    pub message: String,
}

struct State {
    coeffs: Vec<f64>,
    /// `2k e^{2f}` on the grid.
    weight: Vec<f64>,
    /// `Δ⁰f − 1 + k e^{2f}` on the grid (half the residual of the equation).
    half_residual: Vec<f64>,
    max: f64,
    l2: f64,
}

/// Operator context for one band limit and grid.
struct Galerkin {
    tr: ShTransform,
    lap: Vec<f64>,
    quad: Vec<f64>,
    k: f64,
}

impl Galerkin {
    fn new(lmax: usize, nlat: usize, nlon: usize, k: f64) -> Result<Self> {
        let tr = ShTransform::new(lmax, nlat, nlon)?;
        let ones = SpectralField::from_coeffs(lmax, vec![1.0; sh_count(lmax)])?;
        let lap = ones.laplacian().coeffs().to_vec();
        let quad = tr.rule().weights().to_vec();
        Ok(Self { tr, lap, quad, k })
    }

    fn field(&self, coeffs: &[f64]) -> SpectralField {
        SpectralField::from_coeffs(self.tr.lmax(), coeffs.to_vec()).expect("coefficient count fixed by construction")
    }

    fn project(&self, values: &[f64]) -> Vec<f64> {
        self.tr.analyze(values).expect("grid size fixed by construction").coeffs().to_vec()
    }

    /// Residual data at `coeffs`, or `None` when `e^{2f}` is not finite.
    fn state(&self, coeffs: Vec<f64>) -> Option<State> {
        let f = self.field(&coeffs);
        let values = self.tr.synthesize(&f);
        let lap = self.tr.synthesize(&f.laplacian());
        let mut weight = Vec::with_capacity(values.len());
        let mut half_residual = Vec::with_capacity(values.len());
        for (v, d) in values.iter().zip(&lap) {
            let e = (2.0 * v).exp();
            if !e.is_finite() {
                return None;
            }
            weight.push(2.0 * self.k * e);
            half_residual.push(d - 1.0 + self.k * e);
        }
        let max = 2.0 * half_residual.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        let l2 = 2.0 * sum(half_residual.iter().zip(&self.quad).map(|(r, w)| w * r * r)).sqrt();
        if !(max.is_finite() && l2.is_finite()) {
            return None;
        }
        Some(State {
            coeffs,
            weight,
            half_residual,
            max,
            l2,
        })
    }

    /// `J v = Δ⁰v + Π(2k e^{2f} v)`.
    fn apply(&self, weight: &[f64], v: &[f64]) -> Vec<f64> {
        let grid = self.tr.synthesize(&self.field(v));
        let prod: Vec<f64> = grid.iter().zip(weight).map(|(g, w)| g * w).collect();
        let mut out = self.project(&prod);
        for ((o, l), x) in out.iter_mut().zip(&self.lap).zip(v) {
            *o += l * x;
        }
        out
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    sum(a.iter().zip(b).map(|(x, y)| x * y))
}

/// Preconditioned conjugate gradients for an SPD operator with a diagonal
/// preconditioner. Returns the solution and the iteration count.
fn pcg(op: impl Fn(&[f64]) -> Vec<f64>, b: &[f64], diag: &[f64], tol: f64, max_iter: usize) -> (Vec<f64>, usize) {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return (x, 0);
    }
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 0..max_iter {
        let ap = op(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return (x, it);
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if dot(&r, &r).sqrt() <= tol * bnorm {
            return (x, it + 1);
        }
        z = r.iter().zip(diag).map(|(r, d)| r / d).collect();
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    (x, max_iter)
}

/// Band-limited coefficients of `f₀` at `lmax`; fields that are not
/// band-limited at `lmax` are rejected.
pub fn band_limited(f0: &ScalarField, lmax: usize) -> Result<SpectralField> {
    if f0.dim() != 2 {
        return Err(Error::Unsupported(format!("the solver works on S², got n = {}", f0.dim())));
    }
    if let ScalarField::Spectral(s) = f0 {
        if s.lmax() <= lmax || s.coeffs()[sh_count(lmax)..].iter().all(|c| *c == 0.0) {
            return Ok(s.with_lmax(lmax));
        }
        return Err(Error::Precondition(format!(
            "initial data has degree {} > Lmax = {lmax}",
            s.lmax()
        )));
    }
    let tr = ShTransform::with_lmax(lmax.max(1))?;
    let points = tr.points();
    let values: Vec<f64> = points.iter().map(|p| f0.value_ambient(p)).collect::<Result<_>>()?;
    let s = tr.analyze(&values)?;
    let back = tr.synthesize(&s);
    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let err = values.iter().zip(&back).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if err > 1e-10 * scale {
        return Err(Error::Precondition(format!(
            "initial data is not band-limited at Lmax = {lmax} (reconstruction error {err:e})"
        )));
    }
    Ok(s.with_lmax(lmax))
}

/// Solves `2Δ⁰f − 2(1 − k e^{2f}) = 0` from `f₀`. Non-convergence is reported
/// in the diagnostics, not as an error.
pub fn solve_e(config: &SolverConfig, f0: &ScalarField) -> Result<(SpectralField, SolveDiagnostics)> {
    config.validate()?;
    let start = band_limited(f0, config.lmax)?;
    let g = Galerkin::new(config.lmax, config.nlat, config.nlon, config.k)?;
    let mut state = g
        .state(start.coeffs().to_vec())
        .ok_or_else(|| Error::Domain("e^{2f₀} overflows".into()))?;
    let precond_base: Vec<f64> = g.lap.iter().map(|l| (1.0 - l).powi(2)).collect();
    let mut diag = SolveDiagnostics {
        converged: false,
        iterations: 0,
        rejected_steps: 0,
        residual_history: vec![state.max],
        l2_history: vec![state.l2],
        lambda_history: Vec::new(),
        cg_iterations: Vec::new(),
        residual_max: state.max,
        message: String::new(),
    };
    let mut lambda = config.lambda0;
    'outer: loop {
        if state.max < config.tol {
            diag.converged = true;
            diag.message = format!("converged after {} steps", diag.iterations);
            break;
        }
        if diag.iterations >= config.max_iter {
            diag.message = format!("no convergence after {} steps", config.max_iter);
            break;
        }
        let pr = g.project(&state.half_residual);
        let rhs: Vec<f64> = g.apply(&state.weight, &pr).iter().map(|v| -v).collect();
        loop {
            let precond: Vec<f64> = precond_base.iter().map(|p| p + lambda).collect();
            let weight = &state.weight;
            let op = |v: &[f64]| -> Vec<f64> {
                let jv = g.apply(weight, v);
                let mut out = g.apply(weight, &jv);
                for (o, x) in out.iter_mut().zip(v) {
                    *o += lambda * x;
                }
                out
            };
            let cg_tol = state.l2.clamp(config.cg_tol, 1e-2);
            let (delta, its) = pcg(op, &rhs, &precond, cg_tol, config.cg_max_iter);
            let trial: Vec<f64> = state.coeffs.iter().zip(&delta).map(|(c, d)| c + d).collect();
            match g.state(trial) {
                Some(next) if next.l2 < state.l2 => {
                    state = next;
                    diag.iterations += 1;
                    diag.residual_history.push(state.max);
                    diag.l2_history.push(state.l2);
                    diag.lambda_history.push(lambda);
                    diag.cg_iterations.push(its);
                    lambda = (lambda * config.lambda_decrease).max(config.lambda_min);
                    continue 'outer;
                }
                _ => {
                    diag.rejected_steps += 1;
                    lambda *= config.lambda_increase;
                    if lambda > config.lambda_max {
                        diag.message = format!(
                            "stalled at residual {:e} after {} steps (damping exceeded {:e})",
                            state.max, diag.iterations, config.lambda_max
                        );
                        break 'outer;
                    }
                }
            }
        }
    }
    diag.residual_max = state.max;
    Ok((g.field(&state.coeffs), diag))
}

/// Largest `|2Δ⁰f − 2(1 − k e^{2f})|` over `count` random points, evaluated
/// pointwise from the harmonic extension of `f` through the conformal
/// formulas (no grid, no transform).
pub fn independent_residual(f: &SpectralField, k: f64, count: usize, seed: u64) -> Result<f64> {
    let field = ScalarField::Spectral(f.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<SpherePoint> = (0..count).map(|_| SpherePoint::random(2, &mut rng)).collect();
    let values: Vec<f64> = points
        .par_iter()
        .map(|x| conformal::equation_e_residual(&field, k, x, Derivatives::Analytic))
        .collect::<Result<_>>()?;
    Ok(values.iter().fold(0.0f64, |m, r| m.max(r.abs())))
}

/// Fit of `e^{−f}` by `√k̂ (−v₀ + ⟨v̄, x⟩)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationResult {
    /// Fitted `v` with `⟨v, v⟩ = −1`, `v₀ < 0`; absent when `k̂ ≤ 0`.
    pub v: Option<Vec<f64>>,
    pub k_hat: f64,
    /// `‖e^{−f} − Π₁e^{−f}‖₂ / ‖e^{−f}‖₂`.
    pub rho: f64,
    pub c0: f64,
    pub c: [f64; 3],
    pub in_family: bool,
}

/// Projects `e^{−f}` onto `span{1, x₁, x₂, x₃}` with the quadrature `rule` on
/// S²: `c₀ = (1/4π)∫e^{−f}`, `cᵢ = (3/4π)∫e^{−f}xᵢ`, `k̂ = c₀² − |c|²`,
/// `v₀ = −c₀/√k̂`, `v̄ = c/√k̂`.
pub fn classify(f: &ScalarField, rule: &QuadratureRule) -> Result<ClassificationResult> {
    if rule.domain() != (RuleDomain::Sphere { n: 2 }) || f.dim() != 2 {
        return Err(Error::Unsupported("classification works on S² with a sphere rule".into()));
    }
    let g: Vec<f64> = rule
        .nodes()
        .par_iter()
        .map(|x| Ok((-f.value_ambient(x)?).exp()))
        .collect::<Result<_>>()?;
    let w = rule.weights();
    let four_pi = 4.0 * std::f64::consts::PI;
    let c0 = sum(g.iter().zip(w).map(|(g, w)| g * w)) / four_pi;
    let c = [0, 1, 2].map(|i| 3.0 * sum(g.iter().zip(w).zip(rule.nodes()).map(|((g, w), x)| g * w * x[i])) / four_pi);
    let fit_err = sum(g.iter().zip(w).zip(rule.nodes()).map(|((g, w), x)| {
        let d = g - c0 - c[0] * x[0] - c[1] * x[1] - c[2] * x[2];
        w * d * d
    }));
    let norm = sum(g.iter().zip(w).map(|(g, w)| w * g * g));
    let rho = (fit_err / norm).sqrt();
    let k_hat = c0 * c0 - c.iter().map(|x| x * x).sum::<f64>();
    let v = (k_hat > 0.0).then(|| {
        let s = k_hat.sqrt();
        vec![-c0 / s, c[0] / s, c[1] / s, c[2] / s]
    });
    let in_family = rho < FAMILY_RHO_TOL && k_hat > 0.0 && c0 > 0.0;
    Ok(ClassificationResult {
        v,
        k_hat,
        rho,
        c0,
        c,
        in_family,
    })
}

/// Default rule for [`classify`]: exact for the degree-1 content of any
/// family member.
pub fn classification_rule() -> QuadratureRule {
    QuadratureRule::sphere(2, 64).expect("n = 2 is supported")
}

/// Eigenvalues of the Galerkin linearization `Δ⁰ + Π(2k e^{2f} ·)` at `f`
/// on its band limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelSpectrum {
    pub lmax: usize,
    /// Sorted by magnitude.
    pub eigenvalues: Vec<f64>,
}

impl KernelSpectrum {
    /// The `count` eigenvalues of smallest magnitude.
    pub fn smallest(&self, count: usize) -> &[f64] {
        &self.eigenvalues[..count.min(self.eigenvalues.len())]
    }

    pub fn count_below(&self, threshold: f64) -> usize {
        self.eigenvalues.iter().filter(|l| l.abs() < threshold).count()
    }
}

pub fn kernel_spectrum(f: &SpectralField, k: f64) -> Result<KernelSpectrum> {
    if !(k > 0.0) {
        return Err(Error::InvalidParameters(format!("k = {k} must be positive")));
    }
    let lmax = f.lmax();
    let g = Galerkin::new(lmax, 2 * lmax.max(1) + 2, 4 * lmax.max(1) + 4, k)?;
    let state = g
        .state(f.coeffs().to_vec())
        .ok_or_else(|| Error::Domain("e^{2f} overflows".into()))?;
    let n = sh_count(lmax);
    let columns: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            g.apply(&state.weight, &e)
        })
        .collect();
    let m = DMatrix::from_fn(n, n, |i, j| 0.5 * (columns[j][i] + columns[i][j]));
    let mut eigenvalues: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    Ok(KernelSpectrum { lmax, eigenvalues })
}

/// Random band-limited initial data: uniform coefficients up to degree
/// `degree`, rescaled so that the maximum of `|f₀|` is a uniform draw in
/// `[0.2, 1]·amplitude`. The maximum is taken on a grid of four times the
/// degree (at least 16).
pub fn random_initial<R: Rng + ?Sized>(degree: usize, amplitude: f64, rng: &mut R) -> SpectralField {
    let mut f = SpectralField::zeros(degree);
    for c in f.coeffs_mut() {
        *c = rng.gen_range(-1.0..1.0);
    }
    let fine = (4 * degree).max(16);
    let tr = ShTransform::with_lmax(fine).expect("grid is fine");
    let peak = tr.synthesize(&f.with_lmax(fine)).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let target = amplitude * rng.gen_range(0.2..=1.0);
    let s = if peak > 0.0 { target / peak } else { 0.0 };
    f.map_degree(|_| s)
}

/// Settings of a seed sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub solver: SolverConfig,
    pub ks: Vec<f64>,
    pub seeds: Vec<u64>,
    pub init_degree: usize,
    pub amplitude: f64,
    /// Random points of the independent residual check.
    pub check_points: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            ks: vec![0.5, 1.0, 4.0],
            seeds: (0..20).collect(),
            init_degree: 3,
            amplitude: 0.5,
            check_points: 200,
        }
    }
}

/// One solve of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub k: f64,
    pub seed: u64,
    pub converged: bool,
    pub iterations: usize,
    pub residual_max: f64,
    /// Present for converged runs.
    pub independent_residual: Option<f64>,
    pub classification: Option<ClassificationResult>,
    pub message: String,
}

/// Solves from [`random_initial`] data for every `(k, seed)` pair, in
/// parallel. Records are ordered by `k`, then seed.
pub fn sweep(config: &SweepConfig) -> Result<Vec<SweepRecord>> {
    config.solver.validate()?;
    let jobs: Vec<(f64, u64)> = config
        .ks
        .iter()
        .flat_map(|&k| config.seeds.iter().map(move |&s| (k, s)))
        .collect();
    jobs.par_iter()
        .map(|&(k, seed)| solve_seed(config, k, seed))
        .collect()
}

/// The sweep run for a single `(k, seed)`.
pub fn solve_seed(config: &SweepConfig, k: f64, seed: u64) -> Result<SweepRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f0 = random_initial(config.init_degree, config.amplitude, &mut rng);
    let solver = config.solver.clone().with_k(k).with_seed(seed);
    let (f, d) = solve_e(&solver, &ScalarField::Spectral(f0))?;
    let (independent_residual, classification) = if d.converged {
        let r = independent_residual(&f, k, config.check_points, seed)?;
        let c = classify(&ScalarField::Spectral(f), &classification_rule())?;
        (Some(r), Some(c))
    } else {
        (None, None)
    };
    Ok(SweepRecord {
        k,
        seed,
        converged: d.converged,
        iterations: d.iterations,
        residual_max: d.residual_max,
        independent_residual,
        classification,
        message: d.message,
    })
}
