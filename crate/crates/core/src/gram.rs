//! Matched-filter Gram matrices and spectral dimension estimates.

use std::f64::consts::PI;
use std::fmt;
use std::io::{BufRead, Write};
use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{fraction_nu, SurfaceSpec, Terminal, Wavelength};
use crate::quadrature::{correlation_integral, QuadratureConfig, SurfaceRule};
use crate::special::sinc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GramMode {
    Numeric,
    SincApprox,
}

impl fmt::Display for GramMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GramMode::Numeric => "numeric",
            GramMode::SincApprox => "sinc-approx",
        })
    }
}

impl std::str::FromStr for GramMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "numeric" => Ok(GramMode::Numeric),
            "sinc-approx" | "sinc" => Ok(GramMode::SincApprox),
            other => Err(Error::invalid(format!("unknown Gram mode '{other}'"))),
        }
    }
}

/// How the entries of a [`GramMatrix`] were produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BuiltWith {
    Quadrature(QuadratureConfig),
    SincModel,
    /// Read back from the text format; origin unknown.
    External,
}

/// `K x K` Hermitian matrix with `G_lk = sqrt(P_l P_k) phi_lk`.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    entries: DMatrix<Complex64>,
    powers: Option<Vec<f64>>,
    lambda: f64,
    mode: GramMode,
    built_with: BuiltWith,
    est_error: f64,
    eigen: OnceLock<Vec<f64>>,
}

impl GramMatrix {
    /// Wraps explicit entries; the matrix is Hermitized on the way in.
    pub fn from_entries(
        entries: DMatrix<Complex64>,
        lambda: f64,
        mode: GramMode,
        powers: Option<Vec<f64>>,
    ) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::invalid("Gram matrix must be square"));
        }
        if let Some(p) = &powers {
            if p.len() != entries.nrows() {
                return Err(Error::invalid("one power per terminal required"));
            }
        }
        if entries.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::invalid("Gram entries must be finite"));
        }
        Ok(GramMatrix {
            entries: hermitize(entries),
            powers,
            lambda,
            mode,
            built_with: BuiltWith::External,
            est_error: 0.0,
            eigen: OnceLock::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn get(&self, l: usize, k: usize) -> Complex64 {
        self.entries[(l, k)]
    }

    pub fn powers(&self) -> Option<&[f64]> {
        self.powers.as_deref()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mode(&self) -> GramMode {
        self.mode
    }

    pub fn built_with(&self) -> &BuiltWith {
        &self.built_with
    }

    /// Largest estimated absolute error over all entries.
    pub fn est_error(&self) -> f64 {
        self.est_error
    }

    /// Eigenvalues in ascending order, computed once.
    pub fn eigenvalues(&self) -> &[f64] {
        self.eigen.get_or_init(|| {
            let mut ev: Vec<f64> = if self.entries.iter().all(|v| v.im == 0.0) {
                let re = self.entries.map(|v| v.re);
                SymmetricEigen::new(re).eigenvalues.iter().copied().collect()
            } else {
                SymmetricEigen::new(self.entries.clone())
                    .eigenvalues
                    .iter()
                    .copied()
                    .collect()
            };
            ev.sort_by(f64::total_cmp);
            ev
        })
    }

    /// Returns a copy with all powers multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::invalid("power scale must be finite and non-negative"));
        }
        Ok(GramMatrix {
            entries: self.entries.map(|v| v * c),
            powers: self.powers.as_ref().map(|p| p.iter().map(|v| v * c).collect()),
            est_error: self.est_error * c,
            eigen: OnceLock::new(),
            ..self.clone()
        })
    }

    /// Text form: header `K lambda mode`, then `K^2` rows `i j re im`.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        let k = self.len();
        writeln!(w, "{} {} {}", k, self.lambda, self.mode)?;
        for i in 0..k {
            for j in 0..k {
                let v = self.entries[(i, j)];
                writeln!(w, "{} {} {} {}", i, j, v.re, v.im)?;
            }
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::invalid("empty Gram file"))??;
        let mut it = header.split_whitespace();
        let bad = |what: &str| Error::invalid(format!("malformed Gram header: {what}"));
        let k: usize = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("K"))?;
        let lambda: f64 = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("lambda"))?;
        let mode: GramMode = it.next().ok_or_else(|| bad("mode"))?.parse()?;
        let mut m = DMatrix::from_element(k, k, Complex64::new(f64::NAN, 0.0));
        let mut seen = 0usize;
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            let row_err = || Error::invalid(format!("malformed Gram row '{line}'"));
            if f.len() != 4 {
                return Err(row_err());
            }
            let i: usize = f[0].parse().map_err(|_| row_err())?;
            let j: usize = f[1].parse().map_err(|_| row_err())?;
            let re: f64 = f[2].parse().map_err(|_| row_err())?;
            let im: f64 = f[3].parse().map_err(|_| row_err())?;
            if i >= k || j >= k {
                return Err(row_err());
            }
            m[(i, j)] = Complex64::new(re, im);
            seen += 1;
        }
        if seen != k * k {
            return Err(Error::invalid(format!(
                "expected {} Gram rows, found {seen}",
                k * k
            )));
        }
        GramMatrix::from_entries(m, lambda, mode, None)
    }
}

fn hermitize(m: DMatrix<Complex64>) -> DMatrix<Complex64> {
    let k = m.nrows();
    DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            Complex64::new(m[(i, i)].re, 0.0)
        } else {
            0.5 * (m[(i, j)] + m[(j, i)].conj())
        }
    })
}

/// Assembles the Gram matrix of `terminals` against `surface`.
///
/// Numeric mode integrates every signature pair. Finite surfaces share one
/// composite rule across all pairs, and any entry whose embedded error
/// estimate misses the tolerance is recomputed by adaptive per-pair
/// quadrature. Sinc mode requires a common `z` and uses
/// `nu * sinc(2 d / lambda)` with `d` the in-plane distance.
pub fn build_gram(
    terminals: &[Terminal],
    surface: &SurfaceSpec,
    lam: Wavelength,
    cfg: &QuadratureConfig,
    mode: GramMode,
) -> Result<GramMatrix> {
    if terminals.is_empty() {
        return Err(Error::invalid("at least one terminal required"));
    }
    for t in terminals {
        t.validate()?;
    }
    cfg.validate()?;
    let k = terminals.len();
    let (phi, est_error, built_with) = match mode {
        GramMode::SincApprox => {
            let z = terminals[0].z;
            if terminals.iter().any(|t| t.z != z) {
                return Err(Error::invalid(
                    "sinc-approx mode requires all terminals at a common z",
                ));
            }
            let nu = fraction_nu(surface, z)?;
            let l = lam.get();
            let phi = DMatrix::from_fn(k, k, |i, j| {
                let (a, b) = (&terminals[i], &terminals[j]);
                let d = (a.x - b.x).hypot(a.y - b.y);
                Complex64::new(nu * sinc(2.0 * d / l), 0.0)
            });
            (phi, 0.0, BuiltWith::SincModel)
        }
        GramMode::Numeric => {
            let (phi, err) = numeric_phi(terminals, surface, lam, cfg)?;
            (phi, err, BuiltWith::Quadrature(*cfg))
        }
    };
    let sq: Vec<f64> = terminals.iter().map(|t| t.power.sqrt()).collect();
    let entries = DMatrix::from_fn(k, k, |i, j| phi[(i, j)] * (sq[i] * sq[j]));
    let max_p = terminals.iter().map(|t| t.power).fold(0.0, f64::max);
    let g = GramMatrix {
        entries: hermitize(entries),
        powers: Some(terminals.iter().map(|t| t.power).collect()),
        lambda: lam.get(),
        mode,
        built_with,
        est_error: est_error * max_p,
        eigen: OnceLock::new(),
    };
    let ev = g.eigenvalues();
    let (lo, hi) = (ev[0], ev[k - 1]);
    let allowance = match mode {
        GramMode::Numeric => 10.0 * cfg.rel_tol,
        GramMode::SincApprox => 1e-10,
    };
    if lo < -allowance * hi.max(0.0) {
        return Err(Error::Numerical(format!(
            "Gram matrix not positive semidefinite: min eigenvalue {lo:e}, max {hi:e}"
        )));
    }
    Ok(g)
}

/// Unit-power correlation matrix and the largest estimated entry error.
fn numeric_phi(
    terminals: &[Terminal],
    surface: &SurfaceSpec,
    lam: Wavelength,
    cfg: &QuadratureConfig,
) -> Result<(DMatrix<Complex64>, f64)> {
    let k = terminals.len();
    let mut phi = DMatrix::from_element(k, k, Complex64::new(0.0, 0.0));
    let mut err = DMatrix::from_element(k, k, f64::INFINITY);
    if let Some(rule) = SurfaceRule::build(surface, terminals, lam, cfg)? {
        let fine = accumulate(&rule.fine, terminals, lam);
        let coarse = accumulate(&rule.coarse, terminals, lam);
        for i in 0..k {
            for j in 0..k {
                phi[(i, j)] = fine[(i, j)];
                err[(i, j)] = (fine[(i, j)] - coarse[(i, j)]).norm();
            }
        }
    }
    // upper triangle entries that need the adaptive path, in fixed order
    let mut redo = Vec::new();
    for i in 0..k {
        for j in i..k {
            let scale = (phi[(i, i)].re.abs() * phi[(j, j)].re.abs()).sqrt();
            let tol = cfg.rel_tol * scale + cfg.abs_tol;
            if !(err[(i, j)] <= tol) || !(err[(j, i)] <= tol) || !scale.is_finite() || scale == 0.0
            {
                redo.push((i, j));
            }
        }
    }
    let fixed: Vec<_> = redo
        .par_iter()
        .map(|&(i, j)| correlation_integral(&terminals[i], &terminals[j], surface, lam, cfg))
        .collect::<Result<_>>()?;
    for (&(i, j), c) in redo.iter().zip(fixed) {
        phi[(i, j)] = c.value;
        phi[(j, i)] = c.value.conj();
        err[(i, j)] = c.est_error;
        err[(j, i)] = c.est_error;
    }
    let max_err = err.iter().copied().fold(0.0, f64::max);
    Ok((phi, max_err))
}

const NODE_CHUNK: usize = 2048;

/// `sum_n w_n conj(s_l(n)) s_k(n)` for all pairs via blocked real products.
fn accumulate(
    nodes: &[(f64, f64, f64)],
    terminals: &[Terminal],
    lam: Wavelength,
) -> DMatrix<Complex64> {
    let k = terminals.len();
    let wavenumber = lam.wavenumber();
    let norm = 0.5 / PI.sqrt();
    let mut rr = vec![0.0; k * k];
    let mut ii = vec![0.0; k * k];
    let mut ri = vec![0.0; k * k];
    let mut tr = vec![0.0; NODE_CHUNK * k];
    let mut ti = vec![0.0; NODE_CHUNK * k];
    for chunk in nodes.chunks(NODE_CHUNK) {
        let n = chunk.len();
        for (row, &(x, y, w)) in chunk.iter().enumerate() {
            let sw = w.sqrt();
            for (col, t) in terminals.iter().enumerate() {
                let (dx, dy) = (x - t.x, y - t.y);
                let r = (t.z * t.z + dx * dx + dy * dy).sqrt();
                let mag = sw * norm * t.z.sqrt() / (r * r.sqrt());
                let (s, c) = (-wavenumber * r).sin_cos();
                tr[row * k + col] = mag * c;
                ti[row * k + col] = mag * s;
            }
        }
        // C (k x k, row major) += A^T B with A, B stored n x k row major
        let gemm = |a: &[f64], b: &[f64], c: &mut [f64]| unsafe {
            matrixmultiply::dgemm(
                k,
                n,
                k,
                1.0,
                a.as_ptr(),
                1,
                k as isize,
                b.as_ptr(),
                k as isize,
                1,
                1.0,
                c.as_mut_ptr(),
                k as isize,
                1,
            );
        };
        gemm(&tr[..n * k], &tr[..n * k], &mut rr);
        gemm(&ti[..n * k], &ti[..n * k], &mut ii);
        gemm(&tr[..n * k], &ti[..n * k], &mut ri);
    }
    DMatrix::from_fn(k, k, |l, m| {
        Complex64::new(rr[l * k + m] + ii[l * k + m], ri[l * k + m] - ri[m * k + l])
    })
}

/// Numerical surrogate for `rank(G)` and its density per unit volume.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DimensionEstimate {
    pub effective_rank: usize,
    pub threshold: f64,
    pub volume: Option<f64>,
    pub density: Option<f64>,
}

/// Default relative eigenvalue cutoff for [`effective_rank`].
pub const DEFAULT_RANK_THRESHOLD: f64 = 1e-3;

/// Counts eigenvalues above `threshold` times the largest one.
pub fn effective_rank(
    g: &GramMatrix,
    threshold: f64,
    volume: Option<f64>,
) -> Result<DimensionEstimate> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::invalid("rank threshold must lie in (0, 1)"));
    }
    if let Some(v) = volume {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::invalid("volume must be positive"));
        }
    }
    let ev = g.eigenvalues();
    let top = ev.last().copied().unwrap_or(0.0);
    let rank = if top > 0.0 {
        ev.iter().filter(|&&v| v > threshold * top).count()
    } else {
        0
    };
    Ok(DimensionEstimate {
        effective_rank: rank,
        threshold,
        volume,
        density: volume.map(|v| rank as f64 / v),
    })
}
