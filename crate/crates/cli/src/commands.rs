use std::fs;

use anyhow::{Context, Result};
use lightcone::audit::{
    beltrami_audit, inequality_audit, minkowski_formula_audit, parallel_h_audit, AuditOptions, AuditResult,
};
use lightcone::conformal::{conformal_point, conformal_volume};
use lightcone::embedding::{invariants_report, shape_data};
use lightcone::quadrature::QuadratureRule;
use lightcone::solver::{
    classification_rule, classify, independent_residual, random_initial, solve_e, sweep, ClassificationResult,
    SolverConfig, SweepConfig, FAMILY_RHO_TOL,
};
use lightcone::{Derivatives, LorentzVector, ScalarField};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::args::*;
use crate::inputs::{chart_points, lorentz, parse_list, read_coeffs, sphere_points, usage};
use crate::report::Report;

/// Tolerance tiers of pointwise identities.
const ANALYTIC_TOL: f64 = 1e-9;
const FD_TOL: f64 = 1e-5;
/// Independent residual and `k̂` tolerances of a solve.
const INDEPENDENT_TOL: f64 = 1e-9;
const K_TOL: f64 = 1e-6;
/// Sweep requirement: converged fraction per `k`.
const SWEEP_CONVERGED_FRACTION: f64 = 0.9;

pub fn run(command: &Command) -> Result<Report> {
    match command {
        Command::Field(FieldCommand::Eval(a)) => field_eval(a),
        Command::Conformal(ConformalCommand::Report(a)) => conformal_report(a),
        Command::Embed(EmbedCommand::Report(a)) => embed_report(a),
        Command::Audit(c) => audit(c),
        Command::Solve(a) => solve(a),
        Command::Classify(a) => classify_field(a),
        Command::Sweep(a) => run_sweep(a),
    }
}

fn derivatives(field: &ScalarField, fd: Option<f64>) -> Result<Derivatives> {
    match fd {
        Some(h) if h > 0.0 => Ok(Derivatives::FiniteDifference { h }),
        Some(h) => usage(format!("--fd step must be positive, got {h}")),
        None => Ok(field.default_derivatives()),
    }
}

fn tier(mode: Derivatives) -> f64 {
    match mode {
        Derivatives::Analytic => ANALYTIC_TOL,
        Derivatives::FiniteDifference { .. } => FD_TOL,
    }
}

#[derive(Serialize)]
struct FieldValue {
    point: Vec<f64>,
    value: f64,
    gradient: Vec<f64>,
    laplacian: f64,
    grad_norm_sq: f64,
}

fn field_eval(a: &FieldEvalArgs) -> Result<Report> {
    let f = a.source.build(a.k)?;
    let mode = derivatives(&f, a.fd)?;
    let values = sphere_points(&a.points, f.dim(), a.seed)?
        .iter()
        .map(|x| {
            let t = f.tangential(x, mode)?;
            Ok(FieldValue {
                point: x.coords().to_vec(),
                value: t.value,
                grad_norm_sq: t.grad_norm_sq(),
                gradient: t.gradient,
                laplacian: t.laplacian,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let finite = values.iter().all(|v| v.value.is_finite() && v.laplacian.is_finite());
    Ok(Report::new("field eval", a)?
        .results(serde_json::json!({ "field": f.describe(), "derivatives": format!("{mode:?}"), "points": &values }))?
        .pass(finite)
        .summary(format!("{}: {} points", f.describe(), values.len())))
}

fn conformal_report(a: &ConformalArgs) -> Result<Report> {
    let f = a.source.build(a.k)?;
    let mode = derivatives(&f, a.fd)?;
    let n = f.dim();
    let points = sphere_points(&a.points, n, a.seed)?
        .iter()
        .map(|x| Ok(conformal_point(&f, a.k, x, mode)?))
        .collect::<Result<Vec<_>>>()?;
    let rule = QuadratureRule::sphere(n, a.grid)?;
    let volume = conformal_volume(&f, &rule)?;
    let tol = tier(mode);
    let worst = points
        .iter()
        .map(|p| p.identity_defect / (1.0 + p.scalar_curvature.abs()))
        .fold(0.0, f64::max);
    let summary = points
        .iter()
        .map(|p| format!("<H,H>({:?}) = {:.12}", p.point, p.mean_curvature_sq))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(Report::new("conformal report", a)?
        .results(serde_json::json!({
            "field": f.describe(),
            "n": n,
            "points": points,
            "volume": volume,
            "max_relative_identity_defect": worst,
        }))?
        .quadrature(rule.descriptor())?
        .tolerance("identity S = n(n-1)<H,H> (relative)", tol)
        .pass(worst < tol)
        .summary(summary))
}

#[derive(Serialize)]
struct EmbedPoint {
    invariants: lightcone::embedding::InvariantsReport,
    a_xi: Vec<Vec<f64>>,
    a_eta: Vec<Vec<f64>>,
    metric: Vec<Vec<f64>>,
    xi: Vec<f64>,
    eta: Vec<f64>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn embed_report(a: &EmbedArgs) -> Result<Report> {
    let im = a.example.immersion()?;
    let frame = a.example.frame(&im)?;
    let n = im.dim() as f64;
    let light_cone = im.in_light_cone();
    let mut spread = 0.0f64;
    let mut ii = 0.0f64;
    let mut gauss = 0.0f64;
    let mut frame_defect = 0.0f64;
    let points = chart_points(&a.points, &im, a.seed)?
        .iter()
        .map(|u| {
            let rep = invariants_report(&im, &frame, u)?;
            let sd = shape_data(&im, &frame, u)?;
            spread = spread.max(rep.h_sq_spread());
            ii = ii.max((rep.n_h_sq - rep.ii_sq).abs());
            gauss = gauss.max((rep.scalar_curvature_intrinsic - rep.scalar_curvature_extrinsic).abs());
            frame_defect = frame_defect.max(rep.frame_defect);
            Ok(EmbedPoint {
                invariants: rep,
                a_xi: rows(&sd.a_xi),
                a_eta: rows(&sd.a_eta),
                metric: rows(&sd.metric),
                xi: sd.xi.clone(),
                eta: sd.eta.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    // <H,H> = S/(n(n-1)) and n<H,H> = <II,II> hold in the light cone only
    let lattice = !light_cone || (spread < FD_TOL && ii < FD_TOL);
    let pass = lattice && gauss < FD_TOL && frame_defect < ANALYTIC_TOL;
    Ok(Report::new("embed report", a)?
        .results(serde_json::json!({
            "immersion": im.name(),
            "frame": frame.name(),
            "n": n,
            "points": points,
            "max_h_sq_spread": spread,
            "max_n_h_sq_minus_ii_sq": ii,
            "max_frame_defect": frame_defect,
            "max_gauss_equation_defect": gauss,
            "light_cone_identities_checked": light_cone,
        }))?
        .tolerance("<H,H> paths", FD_TOL)
        .tolerance("n<H,H> = <II,II>", FD_TOL)
        .tolerance("Gauss equation", FD_TOL)
        .tolerance("frame", ANALYTIC_TOL)
        .pass(pass)
        .summary(format!("{} ({}): {} points, <H,H> spread {spread:.2e}", im.name(), frame.name(), points.len())))
}

fn audit(c: &AuditCommand) -> Result<Report> {
    let (name, a) = match c {
        AuditCommand::Minkowski(a) => ("audit minkowski", a),
        AuditCommand::Parallel(a) => ("audit parallel", a),
        AuditCommand::Inequality(a) => ("audit inequality", a),
        AuditCommand::Beltrami(a) => ("audit beltrami", a),
    };
    let im = a.example.immersion()?;
    let frame = a.example.frame(&im)?;
    let vector = match &a.a {
        Some(text) => lorentz(text, "--a")?,
        None => LorentzVector::e0(im.dim() + 2),
    };
    if a.grid < 2 {
        return usage("--grid must be at least 2");
    }
    let mut opts = AuditOptions::new(a.grid);
    if a.convergence {
        opts = opts.with_convergence();
    }
    if let Some(tol) = a.tol {
        opts = opts.with_tol(tol);
    }
    let results: Vec<AuditResult> = match c {
        AuditCommand::Minkowski(_) => vec![minkowski_formula_audit(&im, &frame, &vector, &opts)?],
        AuditCommand::Parallel(_) => parallel_h_audit(&im, &vector, &opts)?,
        AuditCommand::Inequality(_) => vec![inequality_audit(&im, &vector, &opts)?],
        AuditCommand::Beltrami(_) => vec![beltrami_audit(&im, &frame, &vector, &opts)?],
    };
    let pass = results.iter().all(|r| r.pass);
    let summary = results
        .iter()
        .map(|r| format!("{:?} = {:.3e} (tol {:.0e})", r.kind, r.value, r.tol))
        .collect::<Vec<_>>()
        .join(", ");
    let quadrature = results.first().map(|r| r.quadrature.clone());
    Ok(Report::new(name, a)?
        .results(&results)?
        .quadrature(quadrature)?
        .tolerance("integral", opts.tol())
        .pass(pass)
        .summary(format!("{}: {summary}", im.name())))
}

fn in_family(c: &ClassificationResult, k: f64) -> bool {
    c.in_family && (c.k_hat - k).abs() < K_TOL
}

fn solve(a: &SolveArgs) -> Result<Report> {
    let mut config = SolverConfig::default().with_lmax(a.lmax).with_k(a.k).with_seed(a.seed);
    config.tol = a.tol;
    config.max_iter = a.max_iter;
    let f0 = match (&a.field, &a.coeffs) {
        (Some(_), Some(_)) => return usage("give at most one of --field, --coeffs"),
        (Some(text), None) => ScalarField::parse(text, 2)?,
        (None, Some(path)) => ScalarField::Spectral(read_coeffs(path)?),
        (None, None) => {
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            let d = SweepConfig::default();
            ScalarField::Spectral(random_initial(d.init_degree, d.amplitude, &mut rng))
        }
    };
    let (f, diag) = solve_e(&config, &f0)?;
    if let Some(path) = &a.save_coeffs {
        fs::write(path, f.to_coeff_string()).with_context(|| format!("writing {}", path.display()))?;
    }
    let (indep, class) = if diag.converged {
        let r = independent_residual(&f, a.k, a.check_points, a.seed)?;
        (Some(r), Some(classify(&ScalarField::Spectral(f.clone()), &classification_rule())?))
    } else {
        (None, None)
    };
    let family = class.as_ref().is_some_and(|c| in_family(c, a.k));
    let pass = diag.converged && indep.is_some_and(|r| r < INDEPENDENT_TOL) && family;
    let summary = format!(
        "converged {} in {} steps, residual {:.2e}, in_family {family}",
        diag.converged, diag.iterations, diag.residual_max
    );
    Ok(Report::new("solve", a)?
        .results(serde_json::json!({
            "diagnostics": diag,
            "independent_residual": indep,
            "classification": class,
            "in_family": family,
            "solution_l2": f.l2_norm(),
        }))?
        .quadrature(serde_json::json!({
            "solver_grid": { "nlat": config.nlat, "nlon": config.nlon, "lmax": config.lmax },
            "classification": classification_rule().descriptor(),
        }))?
        .tolerance("solver residual (grid max)", config.tol)
        .tolerance("independent residual", INDEPENDENT_TOL)
        .tolerance("rho", FAMILY_RHO_TOL)
        .tolerance("k_hat", K_TOL)
        .pass(pass)
        .summary(summary))
}

fn classify_field(a: &ClassifyArgs) -> Result<Report> {
    if a.source.dim()? != 2 {
        return usage("classification works on S² (n = 2)");
    }
    let f = a.source.build(a.k)?;
    let rule = classification_rule();
    let c = classify(&f, &rule)?;
    Ok(Report::new("classify", a)?
        .summary(format!("k_hat = {:.12}, rho = {:.2e}, in_family {}", c.k_hat, c.rho, c.in_family))
        .pass(c.in_family)
        .results(&c)?
        .quadrature(rule.descriptor())?
        .tolerance("rho", FAMILY_RHO_TOL))
}

#[derive(Serialize)]
struct SweepSummary {
    k: f64,
    runs: usize,
    converged: usize,
    in_family: usize,
    worst_independent_residual: f64,
    worst_rho: f64,
    worst_k_error: f64,
}

fn run_sweep(a: &SweepArgs) -> Result<Report> {
    let ks = parse_list(&a.k, "--k")?;
    if a.seeds == 0 {
        return usage("--seeds must be positive");
    }
    let config = SweepConfig {
        solver: SolverConfig::default().with_lmax(a.lmax),
        ks: ks.clone(),
        seeds: (a.seed..a.seed + a.seeds).collect(),
        check_points: a.check_points,
        ..SweepConfig::default()
    };
    let records = sweep(&config)?;
    let mut pass = true;
    let mut summaries = Vec::new();
    for &k in &ks {
        let runs: Vec<_> = records.iter().filter(|r| r.k == k).collect();
        let converged: Vec<_> = runs.iter().filter(|r| r.converged).collect();
        let family = converged
            .iter()
            .filter(|r| r.classification.as_ref().is_some_and(|c| in_family(c, k)))
            .count();
        let worst = |g: &dyn Fn(&lightcone::solver::SweepRecord) -> f64| {
            converged.iter().map(|r| g(r)).fold(0.0, f64::max)
        };
        let s = SweepSummary {
            k,
            runs: runs.len(),
            converged: converged.len(),
            in_family: family,
            worst_independent_residual: worst(&|r| r.independent_residual.unwrap_or(f64::INFINITY)),
            worst_rho: worst(&|r| r.classification.as_ref().map_or(f64::INFINITY, |c| c.rho)),
            worst_k_error: worst(&|r| r.classification.as_ref().map_or(f64::INFINITY, |c| (c.k_hat - k).abs())),
        };
        pass &= s.converged as f64 >= SWEEP_CONVERGED_FRACTION * s.runs as f64
            && s.in_family == s.converged
            && s.worst_independent_residual < INDEPENDENT_TOL;
        summaries.push(s);
    }
    let text = summaries
        .iter()
        .map(|s| format!("k={}: {}/{} converged, {} in family", s.k, s.converged, s.runs, s.in_family))
        .collect::<Vec<_>>()
        .join("; ");
    Ok(Report::new("sweep", a)?
        .results(serde_json::json!({ "summary": summaries, "records": records }))?
        .quadrature(classification_rule().descriptor())?
        .tolerance("independent residual", INDEPENDENT_TOL)
        .tolerance("rho", FAMILY_RHO_TOL)
        .tolerance("k_hat", K_TOL)
        .tolerance("converged fraction", SWEEP_CONVERGED_FRACTION)
        .pass(pass)
        .summary(text))
}
