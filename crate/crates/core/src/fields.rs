//! Free-space line-of-sight field model and captured-power fraction.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Carrier wavelength in meters.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Wavelength(f64);

impl Wavelength {
    pub fn new(lambda: f64) -> Result<Self> {
        if lambda.is_finite() && lambda > 0.0 {
            Ok(Wavelength(lambda))
        } else {
            Err(Error::invalid(format!(
                "wavelength must be finite and positive, got {lambda}"
            )))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn wavenumber(self) -> f64 {
        2.0 * PI / self.0
    }
}

impl TryFrom<f64> for Wavelength {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Wavelength::new(v)
    }
}

impl From<Wavelength> for f64 {
    fn from(w: Wavelength) -> f64 {
        w.0
    }
}

/// Half-extent of the surface along one axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ExtentRepr", into = "ExtentRepr")]
pub enum Extent {
    Finite(f64),
    Infinite,
}

impl Extent {
    pub fn finite(v: f64) -> Result<Self> {
        if v.is_finite() && v > 0.0 {
            Ok(Extent::Finite(v))
        } else if v == f64::INFINITY {
            Ok(Extent::Infinite)
        } else {
            Err(Error::invalid(format!(
                "surface half-extent must be positive, got {v}"
            )))
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Extent::Infinite)
    }

    /// The extent as a float, `f64::INFINITY` for the unbounded case.
    pub fn as_f64(self) -> f64 {
        match self {
            Extent::Finite(v) => v,
            Extent::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Extent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extent::Finite(v) => write!(f, "{v}"),
            Extent::Infinite => f.write_str("inf"),
        }
    }
}

impl std::str::FromStr for Extent {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "+inf" => Ok(Extent::Infinite),
            other => {
                let v: f64 = other
                    .parse()
                    .map_err(|_| Error::invalid(format!("cannot parse extent '{s}'")))?;
                Extent::finite(v)
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ExtentRepr {
    Number(f64),
    Text(String),
}

impl TryFrom<ExtentRepr> for Extent {
    type Error = Error;
    fn try_from(r: ExtentRepr) -> Result<Self> {
        match r {
            ExtentRepr::Number(v) => Extent::finite(v),
            ExtentRepr::Text(s) => s.parse(),
        }
    }
}

impl From<Extent> for ExtentRepr {
    fn from(e: Extent) -> Self {
        match e {
            Extent::Finite(v) => ExtentRepr::Number(v),
            Extent::Infinite => ExtentRepr::Text("inf".to_string()),
        }
    }
}

/// Rectangular surface `[-A, A] x [-B, B]` in the plane `z = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSpec {
    pub half_width: Extent,
    pub half_height: Extent,
}

impl SurfaceSpec {
    pub fn new(half_width: Extent, half_height: Extent) -> Result<Self> {
        for e in [half_width, half_height] {
            if let Extent::Finite(v) = e {
                Extent::finite(v)?;
            }
        }
        Ok(SurfaceSpec {
            half_width,
            half_height,
        })
    }

    pub fn finite(a: f64, b: f64) -> Result<Self> {
        SurfaceSpec::new(Extent::finite(a)?, Extent::finite(b)?)
    }

    pub fn infinite() -> Self {
        SurfaceSpec {
            half_width: Extent::Infinite,
            half_height: Extent::Infinite,
        }
    }

    /// A finite square standing in for an unbounded surface: half-extent
    /// `factor * max(z, lambda)`.
    pub fn effectively_infinite(z: f64, lam: Wavelength, factor: f64) -> Result<Self> {
        let half = factor * z.max(lam.get());
        SurfaceSpec::finite(half, half)
    }

    pub fn is_finite(&self) -> bool {
        !self.half_width.is_infinite() && !self.half_height.is_infinite()
    }
}

/// Single-antenna terminal at `(x, y, z)` with transmit power `power`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Terminal {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub power: f64,
}

impl Terminal {
    pub fn new(x: f64, y: f64, z: f64, power: f64) -> Result<Self> {
        let t = Terminal { x, y, z, power };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x.is_finite() && self.y.is_finite() && self.z.is_finite()) {
            return Err(Error::invalid("terminal coordinates must be finite"));
        }
        if self.z <= 0.0 {
            return Err(Error::invalid(format!(
                "terminal must be in front of the surface (z > 0), got z = {}",
                self.z
            )));
        }
        if !(self.power.is_finite() && self.power >= 0.0) {
            return Err(Error::invalid(format!(
                "terminal power must be finite and non-negative, got {}",
                self.power
            )));
        }
        Ok(())
    }
}

/// Spatial noise power spectral density on the surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub n0: f64,
}

impl NoiseModel {
    pub fn new(n0: f64) -> Result<Self> {
        if n0.is_finite() && n0 > 0.0 {
            Ok(NoiseModel { n0 })
        } else {
            Err(Error::invalid(format!("N0 must be positive, got {n0}")))
        }
    }
}

const AMPLITUDE_SCALE: f64 = 0.282_094_791_773_878_14; // 1 / (2 sqrt(pi))

/// Complex field `s(x, y)` that a unit-power terminal produces at surface
/// point `(x, y)`.
pub fn field_amplitude(term: &Terminal, x: f64, y: f64, lam: Wavelength) -> Result<Complex64> {
    if term.z <= 0.0 || !term.z.is_finite() {
        return Err(Error::invalid(format!(
            "field undefined for z = {} (terminal must satisfy z > 0)",
            term.z
        )));
    }
    let dx = x - term.x;
    let dy = y - term.y;
    let r2 = term.z * term.z + dx * dx + dy * dy;
    let r = r2.sqrt();
    let mag = AMPLITUDE_SCALE * term.z.sqrt() / (r * r.sqrt());
    let phase = -lam.wavenumber() * r;
    Ok(Complex64::from_polar(mag, phase))
}

/// Fraction of an isotropic terminal's power captured by the surface when
/// the terminal sits at distance `z0` on the surface's normal through its
/// centre.
pub fn fraction_nu(surface: &SurfaceSpec, z0: f64) -> Result<f64> {
    if !(z0 > 0.0 && z0.is_finite()) {
        return Err(Error::invalid(format!("z0 must be positive, got {z0}")));
    }
    let nu = match (surface.half_width, surface.half_height) {
        (Extent::Infinite, Extent::Infinite) => 0.5,
        (Extent::Infinite, Extent::Finite(b)) | (Extent::Finite(b), Extent::Infinite) => {
            (b / z0).atan() / PI
        }
        (Extent::Finite(a), Extent::Finite(b)) => {
            (a * b / (z0 * (a * a + b * b + z0 * z0).sqrt())).atan() / PI
        }
    };
    Ok(nu)
}

/// Captured-power fraction for a terminal anywhere in front of the surface.
///
/// Sums the signed solid angles of the four rectangles spanned by the
/// terminal's foot point and the surface corners.
pub fn fraction_nu_at(surface: &SurfaceSpec, term: &Terminal) -> Result<f64> {
    term.validate()?;
    let z = term.z;
    let a = surface.half_width.as_f64();
    let b = surface.half_height.as_f64();
    let xs = [-a - term.x, a - term.x];
    let ys = [-b - term.y, b - term.y];
    let corner = |x: f64, y: f64| -> f64 {
        match (x.is_infinite(), y.is_infinite()) {
            (true, true) => x.signum() * y.signum() * PI / 2.0,
            (true, false) => x.signum() * (y / z).atan(),
            (false, true) => y.signum() * (x / z).atan(),
            (false, false) => (x * y / (z * (x * x + y * y + z * z).sqrt())).atan(),
        }
    };
    let total = corner(xs[1], ys[1]) - corner(xs[0], ys[1]) - corner(xs[1], ys[0])
        + corner(xs[0], ys[0]);
    Ok(total / (4.0 * PI))
}

/// Ratio between the power the surface collects and what a single
/// isotropic receive antenna at the same distance would collect.
pub fn array_gain_comparison(surface: &SurfaceSpec, z0: f64, lam: Wavelength) -> Result<f64> {
    let nu = fraction_nu(surface, z0)?;
    let free_space = lam.get() / (4.0 * PI * z0);
    Ok(nu / (free_space * free_space))
}
