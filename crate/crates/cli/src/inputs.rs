use std::fmt;
use std::fs;

use anyhow::{Context, Result};
use lightcone::conformal::ObataParameters;
use lightcone::embedding::{Frame, Immersion};
use lightcone::expr::Expression;
use lightcone::{LorentzVector, ScalarField, SpectralField, SpherePoint};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::args::{ExampleArgs, FieldSource};

/// Bad command-line input; reported with exit status 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Usage(msg.into()).into())
}

pub fn parse_list(text: &str, what: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .or_else(|_| usage(format!("{what}: expected a comma list of numbers, got `{text}`")))
}

pub fn lorentz(text: &str, what: &str) -> Result<LorentzVector> {
    Ok(LorentzVector::new(parse_list(text, what)?)?)
}

impl FieldSource {
    /// Dimension of the field this source describes.
    pub fn dim(&self) -> Result<usize> {
        if let Some(v) = &self.v {
            let len = parse_list(v, "--v")?.len();
            if len < 4 {
                return usage("--v needs at least 4 components");
            }
            return Ok(len - 2);
        }
        Ok(if self.coeffs.is_some() { 2 } else { self.n })
    }

    /// The field; `k` is used by `--v` only.
    pub fn build(&self, k: f64) -> Result<ScalarField> {
        let given = [self.field.is_some(), self.coeffs.is_some(), self.v.is_some()];
        if given.iter().filter(|g| **g).count() != 1 {
            return usage("give exactly one of --field, --coeffs, --v");
        }
        if let Some(text) = &self.field {
            return Ok(ScalarField::parse(text, self.n)?);
        }
        if let Some(path) = &self.coeffs {
            return Ok(ScalarField::Spectral(read_coeffs(path)?));
        }
        let v = lorentz(self.v.as_deref().unwrap_or_default(), "--v")?;
        Ok(ScalarField::Obata(ObataParameters::new(v, k)?))
    }
}

pub fn read_coeffs(path: &std::path::Path) -> Result<SpectralField> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(SpectralField::parse_coeffs(&text)?)
}

/// Sphere points from `poles`, `random:<count>` or `x1,x2,x3;…`.
pub fn sphere_points(spec: &str, n: usize, seed: u64) -> Result<Vec<SpherePoint>> {
    if spec == "poles" {
        return Ok(vec![SpherePoint::pole(n, true), SpherePoint::pole(n, false)]);
    }
    if let Some(count) = spec.strip_prefix("random:") {
        let count = random_count(count)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        return Ok((0..count).map(|_| SpherePoint::random(n, &mut rng)).collect());
    }
    explicit_points(spec, n + 1)?
        .into_iter()
        .map(|c| Ok(SpherePoint::normalized(c)?))
        .collect()
}

/// Chart points from `random:<count>` or `u1,u2;…`.
pub fn chart_points(spec: &str, im: &Immersion, seed: u64) -> Result<Vec<Vec<f64>>> {
    if let Some(count) = spec.strip_prefix("random:") {
        let count = random_count(count)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        return Ok((0..count).map(|_| im.chart().sample(&mut rng)).collect());
    }
    explicit_points(spec, im.dim())
}

fn random_count(text: &str) -> Result<usize> {
    match text.parse::<usize>() {
        Ok(c) if c > 0 => Ok(c),
        _ => usage(format!("random:<count> needs a positive count, got `{text}`")),
    }
}

fn explicit_points(spec: &str, len: usize) -> Result<Vec<Vec<f64>>> {
    let points = spec
        .split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| parse_list(p, "--points"))
        .collect::<Result<Vec<_>>>()?;
    if points.is_empty() || points.iter().any(|p| p.len() != len) {
        return usage(format!("--points: expected `poles`, `random:<count>` or points with {len} coordinates"));
    }
    Ok(points)
}

impl ExampleArgs {
    pub fn immersion(&self) -> Result<Immersion> {
        let s = &self.source;
        Ok(match self.example.as_str() {
            "round-graph" => Immersion::round_graph(s.n)?,
            "graph" => Immersion::graph(s.build(self.k)?),
            "obata-graph" => {
                let Some(v) = &s.v else { return usage("obata-graph needs --v") };
                Immersion::obata_graph(ObataParameters::new(lorentz(v, "--v")?, self.k)?)
            }
            "snvr" => {
                let Some(v) = &s.v else { return usage("snvr needs --v") };
                Immersion::snvr(lorentz(v, "--v")?, self.r)?
            }
            "flat-cylinder" => Immersion::FlatCylinder,
            "poincare-halfplane" => Immersion::PoincareHalfPlane,
            "euclid-graph" => Immersion::euclid_graph(s.n)?,
            "torus" => Immersion::torus(self.big_r, self.rho)?,
            other => {
                return usage(format!(
                    "unknown example `{other}` (round-graph, graph, obata-graph, snvr, flat-cylinder, \
                     poincare-halfplane, euclid-graph, torus)"
                ))
            }
        })
    }

    pub fn frame(&self, im: &Immersion) -> Result<Frame> {
        let frame = Frame::default_for(im);
        match &self.phi {
            Some(text) => Ok(frame.rescaled(Expression::parse(text)?)?),
            None => Ok(frame),
        }
    }
}
