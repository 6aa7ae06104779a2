//! Real spherical harmonics on S² and the Gauss–Legendre/FFT transform.
//!
//! The basis is orthonormal on the round sphere, without the Condon–Shortley
//! phase: `Y_l0 = P̄_l⁰(x₃)`, `Y_lm = √2 P̄_l^m(x₃) cos mφ` and
//! `Y_l,−m = √2 P̄_l^m(x₃) sin mφ` for `m > 0`, where `P̄_l^m` is normalised
//! so that `2π ∫ P̄² dx₃ = 1`. Coefficients are stored at `l² + l + m`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::jet::Real;
use crate::quadrature::{gauss_legendre, QuadratureRule};

/// Flat index of `(l, m)`.
pub fn sh_index(l: usize, m: i64) -> usize {
    ((l * l + l) as i64 + m) as usize
}

/// Number of coefficients for band limit `lmax`.
pub fn sh_count(lmax: usize) -> usize {
    (lmax + 1) * (lmax + 1)
}

fn tri_index(lmax: usize, l: usize, m: usize) -> usize {
    // m-major triangular storage: for each m, l runs over m..=lmax.
    m * (2 * lmax + 3 - m) / 2 + (l - m)
}

fn recurrence_coefficients(l: usize, m: usize) -> (f64, f64) {
    let (lf, mf) = (l as f64, m as f64);
    let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
    let lm1 = lf - 1.0;
    let b = ((lm1 * lm1 - mf * mf) / (4.0 * lm1 * lm1 - 1.0)).sqrt();
    (a, b)
}

/// Normalised associated Legendre values `P̄_l^m(z)` for `0 ≤ m ≤ l ≤ lmax`
/// in m-major triangular order.
fn legendre_table(lmax: usize, z: f64) -> Vec<f64> {
    let s = (1.0 - z * z).max(0.0).sqrt();
    let mut out = vec![0.0; (lmax + 1) * (lmax + 2) / 2];
    let mut pmm = 1.0 / (4.0 * PI).sqrt();
    for m in 0..=lmax {
        if m > 0 {
            let mf = m as f64;
            pmm *= ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s;
        }
        let base = tri_index(lmax, m, m);
        out[base] = pmm;
        if m < lmax {
            out[base + 1] = (2.0 * m as f64 + 3.0).sqrt() * z * pmm;
        }
        for l in m + 2..=lmax {
            let (a, b) = recurrence_coefficients(l, m);
            let k = base + (l - m);
            out[k] = a * (z * out[k - 1] - b * out[k - 2]);
        }
    }
    out
}

/// Coefficients of a band-limited real function on S².
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    lmax: usize,
    coeffs: Vec<f64>,
}

impl SpectralField {
    pub fn zeros(lmax: usize) -> Self {
        Self {
            lmax,
            coeffs: vec![0.0; sh_count(lmax)],
        }
    }

    pub fn from_coeffs(lmax: usize, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != sh_count(lmax) {
            return Err(Error::DimensionMismatch {
                expected: sh_count(lmax),
                found: coeffs.len(),
            });
        }
        Ok(Self { lmax, coeffs })
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn get(&self, l: usize, m: i64) -> f64 {
        if l > self.lmax || m.unsigned_abs() as usize > l {
            return 0.0;
        }
        self.coeffs[sh_index(l, m)]
    }

    pub fn set(&mut self, l: usize, m: i64, value: f64) {
        assert!(l <= self.lmax && m.unsigned_abs() as usize <= l, "({l}, {m}) out of range");
        self.coeffs[sh_index(l, m)] = value;
    }

    /// Copy with band limit `lmax`, truncating or zero-padding.
    pub fn with_lmax(&self, lmax: usize) -> Self {
        let mut out = Self::zeros(lmax);
        for l in 0..=lmax.min(self.lmax) {
            for m in -(l as i64)..=l as i64 {
                out.set(l, m, self.get(l, m));
            }
        }
        out
    }

    /// Applies the round Laplacian, `Y_lm ↦ −l(l+1) Y_lm`.
    pub fn laplacian(&self) -> Self {
        self.map_degree(|l| -((l * (l + 1)) as f64))
    }

    /// Multiplies each degree-`l` block by `g(l)`.
    pub fn map_degree(&self, g: impl Fn(usize) -> f64) -> Self {
        let mut out = self.clone();
        for l in 0..=self.lmax {
            let s = g(l);
            for c in &mut out.coeffs[l * l..(l + 1) * (l + 1)] {
                *c *= s;
            }
        }
        out
    }

    /// L²(S²) norm, equal to the Euclidean norm of the coefficients.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Evaluates the harmonic polynomial extension `Σ c_lm Y_lm` at an ambient
    /// point `x = (x₁, x₂, x₃)`; on jets this yields exact ambient
    /// derivatives of that extension.
    pub fn eval_ambient<T: Real>(&self, x: &[T]) -> Result<T> {
        if x.len() != 3 {
            return Err(Error::DimensionMismatch {
                expected: 3,
                found: x.len(),
            });
        }
        let (xv, yv, zv) = (x[0].value(), x[1].value(), x[2].value());
        let (value, grad, hess) = self.ambient_derivatives([xv, yv, zv]);
        Ok(T::compose(value, &grad, &hess, x))
    }

    /// Value, gradient and Hessian of the polynomial extension at `p`.
    pub fn ambient_derivatives(&self, p: [f64; 3]) -> (f64, [f64; 3], Vec<Vec<f64>>) {
        let lmax = self.lmax;
        let z = p[2];
        let w = Complex64::new(p[0], p[1]);
        let i = Complex64::new(0.0, 1.0);
        // w^k for k = 0..=lmax.
        let mut wp = Vec::with_capacity(lmax + 1);
        let mut acc = Complex64::new(1.0, 0.0);
        for _ in 0..=lmax {
            wp.push(acc);
            acc *= w;
        }
        let mut f = 0.0;
        let (mut fx, mut fy, mut fz) = (0.0, 0.0, 0.0);
        let (mut fxx, mut fxy, mut fxz, mut fyz, mut fzz) = (0.0, 0.0, 0.0, 0.0, 0.0);
        let mut qmm = 1.0 / (4.0 * PI).sqrt();
        for m in 0..=lmax {
            let mf = m as f64;
            if m > 0 {
                qmm *= ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt();
            }
            let norm = if m == 0 { 1.0 } else { 2f64.sqrt() };
            // C_m(z) = Σ_l (c_lm − i c_l,−m) Q_l^m(z) and its z-derivatives.
            let mut c = [Complex64::new(0.0, 0.0); 3];
            let (mut q2, mut d2, mut e2) = (0.0, 0.0, 0.0);
            let (mut q1, mut d1, mut e1) = (qmm, 0.0, 0.0);
            for l in m..=lmax {
                let (q, d, e) = if l == m {
                    (qmm, 0.0, 0.0)
                } else if l == m + 1 {
                    let a = (2.0 * mf + 3.0).sqrt();
                    (a * z * qmm, a * qmm, 0.0)
                } else {
                    let (a, b) = recurrence_coefficients(l, m);
                    (
                        a * (z * q1 - b * q2),
                        a * (q1 + z * d1 - b * d2),
                        a * (2.0 * d1 + z * e1 - b * e2),
                    )
                };
                if l > m {
                    q2 = q1;
                    d2 = d1;
                    e2 = e1;
                }
                q1 = q;
                d1 = d;
                e1 = e;
                let re = self.coeffs[sh_index(l, m as i64)];
                let im = if m > 0 { self.coeffs[sh_index(l, -(m as i64))] } else { 0.0 };
                let cm = Complex64::new(re, -im) * norm;
                c[0] += cm * q;
                c[1] += cm * d;
                c[2] += cm * e;
            }
            let w0 = wp[m];
            let w1 = if m >= 1 { wp[m - 1] * mf } else { Complex64::new(0.0, 0.0) };
            let w2 = if m >= 2 { wp[m - 2] * (mf * (mf - 1.0)) } else { Complex64::new(0.0, 0.0) };
            f += (c[0] * w0).re;
            fx += (c[0] * w1).re;
            fy += (c[0] * w1 * i).re;
            fz += (c[1] * w0).re;
            fxx += (c[0] * w2).re;
            fxy += (c[0] * w2 * i).re;
            fxz += (c[1] * w1).re;
            fyz += (c[1] * w1 * i).re;
            fzz += (c[2] * w0).re;
        }
        let fyy = -fxx;
        let hess = vec![vec![fxx, fxy, fxz], vec![fxy, fyy, fyz], vec![fxz, fyz, fzz]];
        (f, [fx, fy, fz], hess)
    }

    /// `x ↦ f(Rᵀx)` for an orthogonal `R`; exact since rotations preserve
    /// each degree.
    pub fn rotated(&self, r: &[[f64; 3]; 3]) -> Result<Self> {
        let tr = ShTransform::with_lmax(self.lmax)?;
        let values = tr.sample(|x| {
            let y = [0, 1, 2].map(|j| r[0][j] * x[0] + r[1][j] * x[1] + r[2][j] * x[2]);
            self.ambient_derivatives(y).0
        });
        tr.analyze(&values)
    }

    /// Serialises to the plain-text coefficient format.
    pub fn to_coeff_string(&self) -> String {
        let mut s = format!("shcoeffs n=2 lmax={}\n", self.lmax);
        for l in 0..=self.lmax {
            for m in -(l as i64)..=l as i64 {
                let _ = writeln!(s, "{l} {m} {:e}", self.get(l, m));
            }
        }
        s
    }

    /// Parses the coefficient format written by [`Self::to_coeff_string`].
    /// Missing coefficients are zero; blank lines and `#` comments are skipped.
    pub fn parse_coeffs(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Format("empty coefficient file".into()))?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some("shcoeffs") || parts.next() != Some("n=2") {
            return Err(Error::Format(format!("bad header `{header}`")));
        }
        let lmax: usize = parts
            .next()
            .and_then(|p| p.strip_prefix("lmax="))
            .and_then(|p| p.parse().ok())
            .ok_or_else(|| Error::Format(format!("bad header `{header}`")))?;
        let mut field = Self::zeros(lmax);
        let mut seen = vec![false; sh_count(lmax)];
        for (lineno, line) in lines {
            let bad = || Error::Format(format!("line {lineno}: expected `<l> <m> <value>`, found `{line}`"));
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 3 {
                return Err(bad());
            }
            let l: usize = toks[0].parse().map_err(|_| bad())?;
            let m: i64 = toks[1].parse().map_err(|_| bad())?;
            let v: f64 = toks[2].parse().map_err(|_| bad())?;
            if l > lmax || m.unsigned_abs() as usize > l {
                return Err(Error::Format(format!("line {lineno}: (l, m) = ({l}, {m}) outside lmax = {lmax}")));
            }
            if !v.is_finite() {
                return Err(Error::Format(format!("line {lineno}: non-finite coefficient")));
            }
            let k = sh_index(l, m);
            if seen[k] {
                return Err(Error::Format(format!("line {lineno}: duplicate coefficient ({l}, {m})")));
            }
            seen[k] = true;
            field.coeffs[k] = v;
        }
        Ok(field)
    }
}

/// Forward and inverse spherical-harmonic transform on a Gauss–Legendre ×
/// equispaced grid.
#[derive(Clone)]
pub struct ShTransform {
    lmax: usize,
    nlat: usize,
    nlon: usize,
    z: Vec<f64>,
    wz: Vec<f64>,
    plm: Vec<Vec<f64>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for ShTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ShTransform")
            .field("lmax", &self.lmax)
            .field("nlat", &self.nlat)
            .field("nlon", &self.nlon)
            .finish()
    }
}

impl ShTransform {
    /// Transform for band limit `lmax`; requires `nlat ≥ lmax + 1` and
    /// `nlon ≥ 2 lmax + 1`.
    pub fn new(lmax: usize, nlat: usize, nlon: usize) -> Result<Self> {
        if nlat < lmax + 1 || nlon < 2 * lmax + 1 {
            return Err(Error::GridTooCoarse { lmax, nlat, nlon });
        }
        let (z, wz) = gauss_legendre(nlat);
        let plm = z.iter().map(|&zj| legendre_table(lmax, zj)).collect();
        let mut planner = FftPlanner::new();
        Ok(Self {
            lmax,
            nlat,
            nlon,
            forward: planner.plan_fft_forward(nlon),
            inverse: planner.plan_fft_inverse(nlon),
            z,
            wz,
            plm,
        })
    }

    /// Transform on a `2·lmax × 4·lmax` grid (at least 2 × 4).
    pub fn with_lmax(lmax: usize) -> Result<Self> {
        let l = lmax.max(1);
        Self::new(lmax, 2 * l, 4 * l)
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    pub fn nlat(&self) -> usize {
        self.nlat
    }

    pub fn nlon(&self) -> usize {
        self.nlon
    }

    pub fn grid_len(&self) -> usize {
        self.nlat * self.nlon
    }

    /// The grid as a quadrature rule; node order matches grid values.
    pub fn rule(&self) -> QuadratureRule {
        QuadratureRule::sphere_grid(self.nlat, self.nlon)
    }

    /// Grid points, latitude-major.
    pub fn points(&self) -> Vec<[f64; 3]> {
        let dphi = 2.0 * PI / self.nlon as f64;
        let mut out = Vec::with_capacity(self.grid_len());
        for &zj in &self.z {
            let s = (1.0 - zj * zj).sqrt();
            for k in 0..self.nlon {
                let (sp, cp) = (k as f64 * dphi).sin_cos();
                out.push([s * cp, s * sp, zj]);
            }
        }
        out
    }

    /// Grid values of `Σ c_lm Y_lm`. Degrees above `lmax` are ignored.
    pub fn synthesize(&self, field: &SpectralField) -> Vec<f64> {
        let lmax = self.lmax.min(field.lmax());
        let sqrt2 = 2f64.sqrt();
        let mut out = Vec::with_capacity(self.grid_len());
        let mut buf = vec![Complex64::new(0.0, 0.0); self.nlon];
        for p in &self.plm {
            buf.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
            for m in 0..=lmax {
                let (mut a, mut b) = (0.0, 0.0);
                for l in m..=lmax {
                    let pl = p[tri_index(self.lmax, l, m)];
                    a += field.coeffs[sh_index(l, m as i64)] * pl;
                    if m > 0 {
                        b += field.coeffs[sh_index(l, -(m as i64))] * pl;
                    }
                }
                buf[m] = if m == 0 {
                    Complex64::new(a, 0.0)
                } else {
                    Complex64::new(a, -b) * sqrt2
                };
            }
            self.inverse.process(&mut buf);
            out.extend(buf.iter().map(|c| c.re));
        }
        out
    }

    /// Quadrature projection of grid values onto the harmonics up to `lmax`.
    /// Exact for band-limited input.
    pub fn analyze(&self, values: &[f64]) -> Result<SpectralField> {
        if values.len() != self.grid_len() {
            return Err(Error::DimensionMismatch {
                expected: self.grid_len(),
                found: values.len(),
            });
        }
        let lmax = self.lmax;
        let sqrt2 = 2f64.sqrt();
        let dphi = 2.0 * PI / self.nlon as f64;
        let mut out = SpectralField::zeros(lmax);
        let mut buf = vec![Complex64::new(0.0, 0.0); self.nlon];
        for (j, row) in values.chunks(self.nlon).enumerate() {
            for (b, &v) in buf.iter_mut().zip(row) {
                *b = Complex64::new(v, 0.0);
            }
            self.forward.process(&mut buf);
            let p = &self.plm[j];
            let w = self.wz[j] * dphi;
            for m in 0..=lmax {
                let (cs, sn) = (buf[m].re, -buf[m].im);
                for l in m..=lmax {
                    let pl = w * p[tri_index(lmax, l, m)];
                    if m == 0 {
                        out.coeffs[sh_index(l, 0)] += pl * cs;
                    } else {
                        out.coeffs[sh_index(l, m as i64)] += sqrt2 * pl * cs;
                        out.coeffs[sh_index(l, -(m as i64))] += sqrt2 * pl * sn;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Grid values of `f` at the grid points.
    pub fn sample(&self, f: impl Fn(&[f64; 3]) -> f64) -> Vec<f64> {
        self.points().iter().map(f).collect()
    }
}
