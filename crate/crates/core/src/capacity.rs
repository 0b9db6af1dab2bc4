//! Capacity and signal-dimension formulas.
//!
//! One-dimensional results hold for an infinite line of equi-spaced
//! terminals, two-dimensional ones for an infinite plane; the matrix
//! capacities apply to any finite deployment through its Gram matrix.
//! Information is measured in nats throughout.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{NoiseModel, Wavelength};
use crate::gram::GramMatrix;

/// Tolerance used to recognise an integer `1/theta`.
pub const INTEGER_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinePower {
    /// Power per meter of line, `P_bar`.
    PerMeter(f64),
    /// Power per terminal, `P`.
    PerTerminal(f64),
}

/// Infinite line of terminals spaced `delta_x` apart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineConfig {
    pub delta_x: f64,
    pub lambda: Wavelength,
    pub nu: f64,
    pub n0: f64,
    pub power: LinePower,
}

impl LineConfig {
    pub fn new(delta_x: f64, lambda: Wavelength, nu: f64, n0: f64, power: LinePower) -> Result<Self> {
        let cfg = LineConfig {
            delta_x,
            lambda,
            nu,
            n0,
            power,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Line with spacing chosen to give the requested `theta`.
    pub fn from_theta(theta: f64, lambda: Wavelength, nu: f64, n0: f64, power: LinePower) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::invalid("theta must be positive"));
        }
        LineConfig::new(lambda.get() / (2.0 * theta), lambda, nu, n0, power)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta_x > 0.0 && self.delta_x.is_finite()) {
            return Err(Error::invalid("delta_x must be positive"));
        }
        if !(0.0..=0.5).contains(&self.nu) {
            return Err(Error::invalid("nu must lie in [0, 1/2]"));
        }
        NoiseModel::new(self.n0)?;
        let p = match self.power {
            LinePower::PerMeter(p) | LinePower::PerTerminal(p) => p,
        };
        if !(p >= 0.0 && p.is_finite()) {
            return Err(Error::invalid("power must be finite and non-negative"));
        }
        Ok(())
    }

    /// `theta = lambda / (2 delta_x)`.
    pub fn theta(&self) -> f64 {
        self.lambda.get() / (2.0 * self.delta_x)
    }

    /// `(alpha, beta)` with `1/theta = beta + alpha`, `beta` integer and
    /// `alpha` in `[0, 1)`.
    pub fn alpha_beta(&self) -> (f64, f64) {
        split_inverse_theta(2.0 * self.delta_x / self.lambda.get())
    }

    pub fn power_per_terminal(&self) -> f64 {
        match self.power {
            LinePower::PerMeter(p) => p * self.delta_x,
            LinePower::PerTerminal(p) => p,
        }
    }

    pub fn power_per_meter(&self) -> f64 {
        match self.power {
            LinePower::PerMeter(p) => p,
            LinePower::PerTerminal(p) => p / self.delta_x,
        }
    }

    /// Received power `P nu` of a single terminal.
    pub fn received_power(&self) -> f64 {
        self.power_per_terminal() * self.nu
    }
}

fn split_inverse_theta(inv: f64) -> (f64, f64) {
    let r = inv.round();
    if (inv - r).abs() <= INTEGER_TOL {
        (0.0, r)
    } else {
        let beta = inv.floor();
        (inv - beta, beta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsdLevel {
    pub amplitude: f64,
    /// Share of the normalized band occupied by this level.
    pub fraction: f64,
}

/// Aliased spectrum of the sampled sinc channel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldedPsd {
    pub levels: Vec<PsdLevel>,
    pub theta: f64,
}

impl FoldedPsd {
    /// Band average, `sum amplitude * fraction`.
    pub fn mean(&self) -> f64 {
        self.levels.iter().map(|l| l.amplitude * l.fraction).sum()
    }

    /// `int log(1 + G(f)/N0) df` over the normalized band.
    pub fn log_integral(&self, n0: f64) -> f64 {
        self.levels
            .iter()
            .map(|l| l.fraction * (l.amplitude / n0).ln_1p())
            .sum()
    }
}

/// Folded spectrum: `beta + 1` overlapping copies of the `theta P nu`
/// rectangle on a fraction `alpha` of the band and `beta` copies elsewhere.
pub fn folded_psd(cfg: &LineConfig) -> FoldedPsd {
    let theta = cfg.theta();
    let (alpha, beta) = cfg.alpha_beta();
    let unit = theta * cfg.received_power();
    let levels = if alpha == 0.0 {
        vec![PsdLevel {
            amplitude: beta * unit,
            fraction: 1.0,
        }]
    } else {
        vec![
            PsdLevel {
                amplitude: (beta + 1.0) * unit,
                fraction: alpha,
            },
            PsdLevel {
                amplitude: beta * unit,
                fraction: 1.0 - alpha,
            },
        ]
    };
    FoldedPsd { levels, theta }
}

/// Per-terminal capacity `c` and its value per meter of line `c_bar`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineCapacity {
    pub c: f64,
    pub c_bar: f64,
}

pub fn capacity_1d_optimal(cfg: &LineConfig) -> LineCapacity {
    let c = folded_psd(cfg).log_integral(cfg.n0);
    LineCapacity {
        c,
        c_bar: c / cfg.delta_x,
    }
}

/// Residual inter-terminal interference seen by the matched filter,
/// `P nu (theta^2 (beta^2 + 2 alpha beta + alpha) - 1)`, evaluated in the
/// equivalent form `P nu theta^2 alpha (1 - alpha)`.
pub fn interference_power(cfg: &LineConfig) -> f64 {
    let theta = cfg.theta();
    let (alpha, _) = cfg.alpha_beta();
    cfg.received_power() * theta * theta * alpha * (1.0 - alpha)
}

/// Direct lag sum for [`interference_power`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesEstimate {
    /// `P nu sum_{0 < |l| <= max_lag} sinc^2(l / theta)`.
    pub truncated: f64,
    /// Mean value of the discarded tail, `P nu theta^2 / pi^2 * sum_{l > L} 1/l^2`.
    pub tail_mean: f64,
    /// Rigorous upper bound on the discarded tail.
    pub tail_bound: f64,
}

impl SeriesEstimate {
    pub fn corrected(&self) -> f64 {
        self.truncated + self.tail_mean
    }
}

pub fn interference_power_series(cfg: &LineConfig, max_lag: u64) -> SeriesEstimate {
    let theta = cfg.theta();
    let inv = 1.0 / theta;
    let pnu = cfg.received_power();
    let mut sum = 0.0;
    for l in 1..=max_lag {
        let x = PI * l as f64 * inv;
        let s = x.sin() / x;
        sum += s * s;
    }
    let c = theta * theta / (PI * PI);
    let tail_sq = trigamma_tail(max_lag);
    SeriesEstimate {
        truncated: 2.0 * pnu * sum,
        tail_mean: pnu * c * tail_sq,
        tail_bound: 2.0 * pnu * c * tail_sq,
    }
}

/// `sum_{l > n} 1/l^2`.
fn trigamma_tail(n: u64) -> f64 {
    if n < 20 {
        let head: f64 = (1..=n).map(|l| 1.0 / (l as f64).powi(2)).sum();
        return PI * PI / 6.0 - head;
    }
    let x = n as f64 + 1.0;
    1.0 / x + 0.5 / (x * x) + 1.0 / (6.0 * x.powi(3)) - 1.0 / (30.0 * x.powi(5))
}

pub fn capacity_1d_mf(cfg: &LineConfig) -> LineCapacity {
    let i = interference_power(cfg);
    let c = (cfg.received_power() / (cfg.n0 + i)).ln_1p();
    LineCapacity {
        c,
        c_bar: c / cfg.delta_x,
    }
}

/// Signal dimensions per meter: `2/lambda` once `theta >= 1`, otherwise
/// one per terminal.
pub fn dims_1d(lam: Wavelength, theta: f64) -> Result<f64> {
    if !(theta > 0.0) {
        return Err(Error::invalid("theta must be positive"));
    }
    let l = lam.get();
    Ok(if theta >= 1.0 { 2.0 / l } else { 2.0 * theta / l })
}

/// Value of the two-dimensional spectrum at one radial frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum PsdValue {
    Finite(f64),
    /// `s = 1/lambda`, where the spectrum diverges.
    Singular,
}

impl PsdValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            PsdValue::Finite(v) => Some(v),
            PsdValue::Singular => None,
        }
    }
}

/// Radial spectrum of the plane's sinc kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Spectrum2D {
    pub lambda: Wavelength,
}

impl Spectrum2D {
    pub fn new(lambda: Wavelength) -> Self {
        Spectrum2D { lambda }
    }

    pub fn cutoff(&self) -> f64 {
        1.0 / self.lambda.get()
    }

    pub fn amplitude(&self, s: f64) -> Result<PsdValue> {
        psd_2d(s, self.lambda)
    }
}

/// `G(s) = (lambda / 4 pi) / sqrt(1/lambda^2 - s^2)` below the cutoff `1/lambda`,
/// zero above it.
pub fn psd_2d(s: f64, lam: Wavelength) -> Result<PsdValue> {
    if !(s >= 0.0) {
        return Err(Error::invalid("radial frequency must be non-negative"));
    }
    let l = lam.get();
    let cut = 1.0 / l;
    Ok(if s == cut {
        PsdValue::Singular
    } else if s > cut {
        PsdValue::Finite(0.0)
    } else {
        PsdValue::Finite(l / (4.0 * PI) / ((cut - s) * (cut + s)).sqrt())
    })
}

/// Capacity per m^2 of an infinite plane with power density `p_bar`.
pub fn capacity_2d(lam: Wavelength, p_bar: f64, n0: f64) -> Result<f64> {
    NoiseModel::new(n0)?;
    if !(p_bar >= 0.0 && p_bar.is_finite()) {
        return Err(Error::invalid("p_bar must be finite and non-negative"));
    }
    let l = lam.get();
    let n = l * p_bar / (4.0 * PI * n0);
    let u = n * l;
    if u == 0.0 {
        return Ok(0.0);
    }
    // N^2 log(u / (1+u)) + N / lambda = (N / lambda) (1 - u log(1 + 1/u))
    let bracket = if u > 100.0 {
        let mut acc = 0.0;
        let mut p = 1.0;
        for k in 1..=10 {
            p /= u;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            acc += sign * p / (k as f64 + 1.0);
        }
        acc
    } else {
        1.0 - u * (1.0 / u).ln_1p()
    };
    Ok(PI * (u.ln_1p() / (l * l) + n / l * bracket))
}

/// Signal dimensions per m^2 of a plane, `pi / lambda^2`.
pub fn dims_2d(lam: Wavelength) -> f64 {
    PI / (lam.get() * lam.get())
}

/// Total, per-user and volume-normalized log-det capacity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogDetCapacity {
    pub total: f64,
    pub per_user: f64,
    pub per_volume: Option<f64>,
}

/// `log det(I + G / N0)` through the eigenvalues of `G`.
pub fn sum_capacity_logdet(g: &GramMatrix, noise: NoiseModel, volume: Option<f64>) -> LogDetCapacity {
    let total: f64 = g
        .eigenvalues()
        .iter()
        .map(|&v| (v.max(0.0) / noise.n0).ln_1p())
        .sum();
    let k = g.len();
    LogDetCapacity {
        total,
        per_user: if k > 0 { total / k as f64 } else { 0.0 },
        per_volume: volume.map(|v| total / v),
    }
}

/// Matched-filter capacity of each user,
/// `log(1 + G_kk^2 / (N0 G_kk + sum_{l != k} |G_kl|^2))`.
pub fn mf_per_user_capacity(g: &GramMatrix, noise: NoiseModel) -> Result<Vec<f64>> {
    let k = g.len();
    let e = g.entries();
    (0..k)
        .map(|i| {
            let d = e[(i, i)].re;
            if !(d > 0.0) {
                return Err(Error::invalid(format!(
                    "user {i} has zero received power; MF capacity undefined"
                )));
            }
            let interference: f64 = (0..k)
                .filter(|&j| j != i)
                .map(|j| e[(i, j)].norm_sqr())
                .sum();
            Ok((d * d / (noise.n0 * d + interference)).ln_1p())
        })
        .collect()
}

/// Least-squares slope of `capacity_fn` against `ln(snr)` over the top
/// decade of `snr_grid`.
pub fn highsnr_slope(capacity_fn: impl Fn(f64) -> Result<f64>, snr_grid: &[f64]) -> Result<f64> {
    if snr_grid.len() < 2 {
        return Err(Error::invalid("slope fit needs at least two grid points"));
    }
    if snr_grid.windows(2).any(|w| !(w[1] > w[0])) || !(snr_grid[0] > 0.0) {
        return Err(Error::invalid("SNR grid must be positive and increasing"));
    }
    let top = *snr_grid.last().unwrap();
    if top < 1e6 {
        return Err(Error::invalid("largest SNR grid point must be at least 1e6"));
    }
    let pts: Vec<(f64, f64)> = snr_grid
        .iter()
        .filter(|&&s| s >= top / 10.0)
        .map(|&s| Ok((s.ln(), capacity_fn(s)?)))
        .collect::<Result<_>>()?;
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if pts.len() < 2 || sxx < 1e-6 {
        return Err(Error::Numerical(
            "slope fit ill-conditioned: fewer than two distinct points in the top decade".into(),
        ));
    }
    if !(sxy.is_finite()) {
        return Err(Error::Numerical("non-finite capacity in slope fit".into()));
    }
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineSweepRow {
    pub theta: f64,
    pub lambda: f64,
    pub delta_x: f64,
    pub c_opt: f64,
    pub c_mf: f64,
    pub c_bar_opt: f64,
    pub c_bar_mf: f64,
}

impl LineSweepRow {
    pub fn evaluate(cfg: &LineConfig) -> Self {
        let opt = capacity_1d_optimal(cfg);
        let mf = capacity_1d_mf(cfg);
        LineSweepRow {
            theta: cfg.theta(),
            lambda: cfg.lambda.get(),
            delta_x: cfg.delta_x,
            c_opt: opt.c,
            c_mf: mf.c,
            c_bar_opt: opt.c_bar,
            c_bar_mf: mf.c_bar,
        }
    }
}

pub fn sweep_1d(configs: &[LineConfig]) -> Vec<LineSweepRow> {
    configs.par_iter().map(LineSweepRow::evaluate).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlaneSweepRow {
    pub lambda: f64,
    pub p_bar_over_n0: f64,
    pub c_bar_2d: f64,
    /// Local slope `d c_bar_2d / d ln(p_bar / n0)`.
    pub slope: f64,
}

pub fn sweep_2d(lambdas: &[Wavelength], snrs: &[f64]) -> Result<Vec<PlaneSweepRow>> {
    let pairs: Vec<(Wavelength, f64)> = lambdas
        .iter()
        .flat_map(|&l| snrs.iter().map(move |&s| (l, s)))
        .collect();
    pairs
        .par_iter()
        .map(|&(l, snr)| {
            if !(snr > 0.0) {
                return Err(Error::invalid("p_bar / n0 must be positive"));
            }
            let h: f64 = 1e-4;
            let c = capacity_2d(l, snr, 1.0)?;
            let up = capacity_2d(l, snr * h.exp(), 1.0)?;
            let down = capacity_2d(l, snr * (-h).exp(), 1.0)?;
            Ok(PlaneSweepRow {
                lambda: l.get(),
                p_bar_over_n0: snr,
                c_bar_2d: c,
                slope: (up - down) / (2.0 * h),
            })
        })
        .collect()
}

pub fn write_rows_csv<W: Write, T: Serialize>(rows: &[T], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}
