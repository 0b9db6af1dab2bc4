//! Oscillatory correlation integrals between terminal signatures.
//!
//! Everything here runs on one adaptive engine: the domain is first
//! partitioned so that no panel is wider than a fraction of the *local*
//! oscillation length of the integrand or wider than its distance to the
//! nearest amplitude peak, then panels with the largest embedded
//! Gauss–Kronrod error are bisected until the requested tolerance is met or
//! the panel budget runs out.
//!
//! The local oscillation length is `lambda / |grad(rho_b - rho_a)|`, where
//! `rho_k` is the distance from terminal `k`. Its gradient difference is at
//! most 2, so in the worst case the cap equals
//! `max_panel_fraction_of_lambda * lambda`; far from both terminals the
//! phase flattens out and panels grow geometrically.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{Extent, SurfaceSpec, Terminal, Wavelength};
use crate::special::{bessel_j0, sinc};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    /// Absolute error floor, in units of the integral's natural scale
    /// (captured-power fraction for surface integrals, `2/z^2` for the line).
    pub abs_tol: f64,
    pub max_panel_fraction_of_lambda: f64,
    pub line_truncation_tol: f64,
    pub max_panels: usize,
    /// Half-extent multiplier used by [`SurfaceSpec::effectively_infinite`].
    pub effective_infinity_factor: f64,
    /// Node budget for the shared surface rule used when assembling Gram
    /// matrices; larger problems fall back to per-pair integration.
    pub max_shared_nodes: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            max_panel_fraction_of_lambda: 0.125,
            line_truncation_tol: 1e-9,
            max_panels: 200_000,
            effective_infinity_factor: 50.0,
            max_shared_nodes: 400_000,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::invalid("rel_tol must lie in (0, 1)"));
        }
        if !(self.abs_tol >= 0.0) {
            return Err(Error::invalid("abs_tol must be non-negative"));
        }
        if !(self.max_panel_fraction_of_lambda > 0.0 && self.max_panel_fraction_of_lambda <= 1.0)
        {
            return Err(Error::invalid(
                "max_panel_fraction_of_lambda must lie in (0, 1]",
            ));
        }
        if !(self.line_truncation_tol > 0.0 && self.line_truncation_tol < 1.0) {
            return Err(Error::invalid("line_truncation_tol must lie in (0, 1)"));
        }
        if self.max_panels < 1 {
            return Err(Error::invalid("max_panels must be at least 1"));
        }
        if !(self.effective_infinity_factor >= 1.0) {
            return Err(Error::invalid("effective_infinity_factor must be >= 1"));
        }
        Ok(())
    }
}

/// Value of a correlation integral and its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationValue {
    pub value: Complex64,
    pub est_error: f64,
}

/// Result of a real-valued adaptive integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Integral {
    pub value: f64,
    pub est_error: f64,
    pub panels: usize,
}

// ---------------------------------------------------------------------------
// Gauss–Kronrod 7/15

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Gk15 {
    nodes: [f64; 15],
    kronrod: [f64; 15],
    gauss: [f64; 15],
}

const fn gk15() -> Gk15 {
    let mut nodes = [0.0; 15];
    let mut kronrod = [0.0; 15];
    let mut gauss = [0.0; 15];
    let mut i = 0;
    while i < 7 {
        nodes[i] = -XGK[i];
        nodes[14 - i] = XGK[i];
        kronrod[i] = WGK[i];
        kronrod[14 - i] = WGK[i];
        if i % 2 == 1 {
            gauss[i] = WG[i / 2];
            gauss[14 - i] = WG[i / 2];
        }
        i += 1;
    }
    nodes[7] = 0.0;
    kronrod[7] = WGK[7];
    gauss[7] = WG[3];
    Gk15 {
        nodes,
        kronrod,
        gauss,
    }
}

const RULE: Gk15 = gk15();

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on the
/// three-term recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = nf * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

// ---------------------------------------------------------------------------
// adaptive engine

#[derive(Debug, Clone, Copy)]
struct Estimate {
    value: Complex64,
    error: f64,
}

trait Cell: Copy {
    fn split(&self) -> Vec<Self>;
    fn size(&self) -> f64;
}

#[derive(Debug, Clone, Copy)]
struct Interval {
    a: f64,
    b: f64,
}

impl Cell for Interval {
    fn split(&self) -> Vec<Self> {
        let m = 0.5 * (self.a + self.b);
        vec![Interval { a: self.a, b: m }, Interval { a: m, b: self.b }]
    }
    fn size(&self) -> f64 {
        self.b - self.a
    }
}

#[derive(Debug, Clone, Copy)]
struct Rect {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Rect {
    fn wx(&self) -> f64 {
        self.x1 - self.x0
    }
    fn wy(&self) -> f64 {
        self.y1 - self.y0
    }
    fn diag(&self) -> f64 {
        self.wx().hypot(self.wy())
    }
    fn centre(&self) -> (f64, f64) {
        (0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }
    /// Distance from `(px, py, pz)` to the nearest point of the rectangle.
    fn distance_to(&self, px: f64, py: f64, pz: f64) -> f64 {
        let dx = (self.x0 - px).max(px - self.x1).max(0.0);
        let dy = (self.y0 - py).max(py - self.y1).max(0.0);
        (pz * pz + dx * dx + dy * dy).sqrt()
    }
}

impl Cell for Rect {
    fn split(&self) -> Vec<Self> {
        let (cx, cy) = self.centre();
        let (wx, wy) = (self.wx(), self.wy());
        if wx > 2.0 * wy {
            vec![Rect { x1: cx, ..*self }, Rect { x0: cx, ..*self }]
        } else if wy > 2.0 * wx {
            vec![Rect { y1: cy, ..*self }, Rect { y0: cy, ..*self }]
        } else {
            vec![
                Rect { x1: cx, y1: cy, ..*self },
                Rect { x0: cx, y1: cy, ..*self },
                Rect { x1: cx, y0: cy, ..*self },
                Rect { x0: cx, y0: cy, ..*self },
            ]
        }
    }
    fn size(&self) -> f64 {
        self.diag()
    }
}

/// Recursively split `root` until `needs_split` is false everywhere.
fn partition<C: Cell>(root: C, needs_split: impl Fn(&C) -> bool, budget: usize) -> Result<Vec<C>> {
    let mut out = Vec::new();
    let mut stack = vec![root];
    let floor = root.size() * 1e-13;
    while let Some(c) = stack.pop() {
        if c.size() > floor && needs_split(&c) {
            // reversed so that children come out in their natural order
            stack.extend(c.split().into_iter().rev());
            if out.len() + stack.len() > budget {
                return Err(Error::BudgetExceeded {
                    achieved: f64::INFINITY,
                    requested: 0.0,
                    panels: budget,
                });
            }
        } else {
            out.push(c);
        }
    }
    Ok(out)
}

#[derive(PartialEq)]
struct HeapKey {
    error: f64,
    id: usize,
}

impl Eq for HeapKey {}

impl PartialOrd for HeapKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.id.cmp(&self.id))
    }
}

#[derive(Debug, Clone, Copy)]
struct Outcome {
    value: Complex64,
    error: f64,
    panels: usize,
}

/// Global adaptive refinement. Stops when the summed error estimate drops
/// below `max(rel_tol * |value|, abs_tol)`.
fn refine<C: Cell>(
    initial: Vec<C>,
    eval: impl Fn(&C) -> Estimate,
    rel_tol: f64,
    abs_tol: f64,
    max_panels: usize,
) -> Result<Outcome> {
    let mut cells: Vec<Option<(C, Estimate)>> = Vec::with_capacity(initial.len() * 2);
    let mut heap = BinaryHeap::with_capacity(initial.len() * 2);
    for c in initial {
        let e = eval(&c);
        heap.push(HeapKey {
            error: e.error,
            id: cells.len(),
        });
        cells.push(Some((c, e)));
    }
    let resum = |cells: &[Option<(C, Estimate)>]| {
        let mut v = Complex64::new(0.0, 0.0);
        let mut err = 0.0;
        for (_, e) in cells.iter().flatten() {
            v += e.value;
            err += e.error;
        }
        (v, err)
    };
    let (mut value, mut error) = resum(&cells);
    let mut active = cells.len();
    let mut iter = 0usize;
    loop {
        let tol = (rel_tol * value.norm()).max(abs_tol);
        if error <= tol {
            // re-check with an exact resummation before accepting
            let (v, e) = resum(&cells);
            value = v;
            error = e;
            if error <= (rel_tol * value.norm()).max(abs_tol) {
                break;
            }
        }
        let Some(top) = heap.pop() else { break };
        let (cell, est) = cells[top.id].take().expect("heap entry refers to a live cell");
        if cell.size() < 1e-13 * (1.0 + cell.size()) || active + 3 > max_panels {
            return Err(Error::BudgetExceeded {
                achieved: error,
                requested: tol,
                panels: active,
            });
        }
        value -= est.value;
        error -= est.error;
        active -= 1;
        for child in cell.split() {
            let e = eval(&child);
            value += e.value;
            error += e.error;
            heap.push(HeapKey {
                error: e.error,
                id: cells.len(),
            });
            cells.push(Some((child, e)));
            active += 1;
        }
        iter += 1;
        if iter.is_multiple_of(256) {
            let (v, e) = resum(&cells);
            value = v;
            error = e;
        }
    }
    Ok(Outcome {
        value,
        error,
        panels: active,
    })
}

fn gk_interval(f: &impl Fn(f64) -> Complex64, iv: &Interval) -> Estimate {
    let c = 0.5 * (iv.a + iv.b);
    let h = 0.5 * (iv.b - iv.a);
    let mut k = Complex64::new(0.0, 0.0);
    let mut g = Complex64::new(0.0, 0.0);
    for i in 0..15 {
        let v = f(c + h * RULE.nodes[i]);
        k += v * RULE.kronrod[i];
        g += v * RULE.gauss[i];
    }
    Estimate {
        value: k * h,
        error: (k - g).norm() * h,
    }
}

fn gk_rect(f: &impl Fn(f64, f64) -> Complex64, r: &Rect) -> Estimate {
    let (cx, cy) = r.centre();
    let hx = 0.5 * r.wx();
    let hy = 0.5 * r.wy();
    let mut ys = [0.0; 15];
    for (j, y) in ys.iter_mut().enumerate() {
        *y = cy + hy * RULE.nodes[j];
    }
    let mut k = Complex64::new(0.0, 0.0);
    let mut g = Complex64::new(0.0, 0.0);
    for i in 0..15 {
        let x = cx + hx * RULE.nodes[i];
        let mut kr = Complex64::new(0.0, 0.0);
        let mut gr = Complex64::new(0.0, 0.0);
        for (j, &y) in ys.iter().enumerate() {
            let v = f(x, y);
            kr += v * RULE.kronrod[j];
            gr += v * RULE.gauss[j];
        }
        k += kr * RULE.kronrod[i];
        g += gr * RULE.gauss[i];
    }
    let area = hx * hy;
    Estimate {
        value: k * area,
        error: (k - g).norm() * area,
    }
}

/// Adaptive Gauss–Kronrod integral of a real function over `[a, b]`.
///
/// The interval is first cut into `initial_panels` equal pieces.
pub fn integrate(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    initial_panels: usize,
    max_panels: usize,
) -> Result<Integral> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::invalid("integration limits must be finite"));
    }
    if a == b {
        return Ok(Integral {
            value: 0.0,
            est_error: 0.0,
            panels: 0,
        });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let n = initial_panels.max(1);
    let h = (hi - lo) / n as f64;
    let cells: Vec<Interval> = (0..n)
        .map(|i| Interval {
            a: lo + h * i as f64,
            b: if i + 1 == n { hi } else { lo + h * (i + 1) as f64 },
        })
        .collect();
    let fc = |x: f64| Complex64::new(f(x), 0.0);
    let out = refine(cells, |c| gk_interval(&fc, c), rel_tol, abs_tol, max_panels)?;
    Ok(Integral {
        value: sign * out.value.re,
        est_error: out.error,
        panels: out.panels,
    })
}

// ---------------------------------------------------------------------------
// surface correlation

/// `s_b(x, y) * conj(s_a(x, y))` for two terminal signatures.
#[derive(Debug, Clone, Copy)]
struct PairKernel {
    a: Terminal,
    b: Terminal,
    k: f64,
    scale: f64,
}

impl PairKernel {
    fn new(a: &Terminal, b: &Terminal, lam: Wavelength) -> Self {
        PairKernel {
            a: *a,
            b: *b,
            k: lam.wavenumber(),
            scale: (a.z * b.z).sqrt() / (4.0 * PI),
        }
    }

    #[inline]
    fn eval(&self, x: f64, y: f64) -> Complex64 {
        let (ax, ay) = (x - self.a.x, y - self.a.y);
        let (bx, by) = (x - self.b.x, y - self.b.y);
        let ra2 = self.a.z * self.a.z + ax * ax + ay * ay;
        let rb2 = self.b.z * self.b.z + bx * bx + by * by;
        let (ra, rb) = (ra2.sqrt(), rb2.sqrt());
        let rr = ra * rb;
        let amp = self.scale / (rr * rr.sqrt());
        // rho_b - rho_a without cancellation far from both feet
        let diff = (rb2 - ra2) / (ra + rb);
        Complex64::from_polar(amp, -self.k * diff)
    }

    /// Upper bound of `|grad(rho_b - rho_a)|` on the rectangle.
    fn phase_gradient_bound(&self, r: &Rect) -> f64 {
        let (cx, cy) = r.centre();
        let grad = |t: &Terminal| {
            let (dx, dy) = (cx - t.x, cy - t.y);
            let rho = (t.z * t.z + dx * dx + dy * dy).sqrt();
            (dx / rho, dy / rho)
        };
        let (ga, gb) = (grad(&self.a), grad(&self.b));
        let g0 = (gb.0 - ga.0).hypot(gb.1 - ga.1);
        let da = r.distance_to(self.a.x, self.a.y, self.a.z);
        let db = r.distance_to(self.b.x, self.b.y, self.b.z);
        let sep = ((self.a.x - self.b.x).powi(2)
            + (self.a.y - self.b.y).powi(2)
            + (self.a.z - self.b.z).powi(2))
        .sqrt();
        (g0 + 0.5 * r.diag() * hessian_gap(da, db, sep, self.a.z.min(self.b.z))).min(2.0)
    }
}

/// Bound on `|H_b - H_a|` for the Hessians of the two distance functions
/// on a panel at distances `da`, `db` from terminals `sep` apart. Each
/// Hessian is at most `1/rho`; moving the terminal changes it by at most
/// `3/rho^2` per unit length.
fn hessian_gap(da: f64, db: f64, sep: f64, zmin: f64) -> f64 {
    let d_seg = (da.min(db) - sep).max(zmin);
    (1.0 / da + 1.0 / db).min(3.0 * sep / (d_seg * d_seg))
}

/// Caps shared by the initial partitions: panel no wider than a fraction of
/// the local oscillation length and no wider than its distance to the
/// nearest amplitude peak.
fn rect_needs_split(kernel: &PairKernel, r: &Rect, lam: f64, frac: f64, amp_ratio: f64) -> bool {
    let d = r
        .distance_to(kernel.a.x, kernel.a.y, kernel.a.z)
        .min(r.distance_to(kernel.b.x, kernel.b.y, kernel.b.z));
    if r.diag() > amp_ratio * d {
        return true;
    }
    let g = kernel.phase_gradient_bound(r);
    g > 0.0 && r.wx().max(r.wy()) > frac * lam * 2.0 / g
}

/// Integration rectangle for a pair: the surface itself, with unbounded
/// axes truncated so that the discarded tail of `|s_a s_b|` is below
/// `line_truncation_tol`.
fn pair_domain(a: &Terminal, b: &Terminal, surface: &SurfaceSpec, tol: f64) -> Rect {
    let (cx, cy) = (0.5 * (a.x + b.x), 0.5 * (a.y + b.y));
    let h = 0.5 * (a.x - b.x).hypot(a.y - b.y);
    // tail outside radius R0 + h around the midpoint is at most
    // sqrt(za zb) / 2 * (1/R0 + h / (2 R0^2))
    let r0 = (a.z * b.z).sqrt() / tol;
    let half = h + r0.max(h);
    let (x0, x1) = match surface.half_width {
        Extent::Finite(w) => (-w, w),
        Extent::Infinite => (cx - half, cx + half),
    };
    let (y0, y1) = match surface.half_height {
        Extent::Finite(w) => (-w, w),
        Extent::Infinite => (cy - half, cy + half),
    };
    Rect { x0, x1, y0, y1 }
}

/// `phi = \int\int s_b conj(s_a) dx dy` over the surface.
///
/// Returns `phi_ab` in the Gram-matrix convention `G_ab = sqrt(P_a P_b) phi_ab`.
pub fn correlation_integral(
    a: &Terminal,
    b: &Terminal,
    surface: &SurfaceSpec,
    lam: Wavelength,
    cfg: &QuadratureConfig,
) -> Result<CorrelationValue> {
    a.validate()?;
    b.validate()?;
    cfg.validate()?;
    let kernel = PairKernel::new(a, b, lam);
    let domain = pair_domain(a, b, surface, cfg.line_truncation_tol);
    let frac = cfg.max_panel_fraction_of_lambda;
    let cells = partition(
        domain,
        |r| rect_needs_split(&kernel, r, lam.get(), frac, 1.0),
        cfg.max_panels,
    )?;
    let out = refine(
        cells,
        |r| gk_rect(&|x, y| kernel.eval(x, y), r),
        cfg.rel_tol,
        cfg.abs_tol,
        cfg.max_panels,
    )?;
    let mut value = out.value;
    if a == b || (a.x == b.x && a.y == b.y && a.z == b.z) {
        value.im = 0.0;
    }
    Ok(CorrelationValue {
        value,
        est_error: out.error,
    })
}

// ---------------------------------------------------------------------------
// shared surface rule for many terminals

/// Composite tensor Gauss–Legendre rule over a finite surface, fine enough
/// for every signature of a given terminal set, plus a lower-order
/// companion rule on the same panels used as an error estimate.
pub(crate) struct SurfaceRule {
    pub fine: Vec<(f64, f64, f64)>,
    pub coarse: Vec<(f64, f64, f64)>,
}

const FINE_ORDER: usize = 6;
const COARSE_ORDER: usize = 5;

impl SurfaceRule {
    /// `None` when the surface is unbounded or the rule would exceed the
    /// node budget.
    pub fn build(
        surface: &SurfaceSpec,
        terminals: &[Terminal],
        lam: Wavelength,
        cfg: &QuadratureConfig,
    ) -> Result<Option<Self>> {
        let (Extent::Finite(a), Extent::Finite(b)) = (surface.half_width, surface.half_height)
        else {
            return Ok(None);
        };
        let per_panel = FINE_ORDER * FINE_ORDER;
        let budget_panels = cfg.max_shared_nodes / per_panel;
        let edge = cfg.max_panel_fraction_of_lambda * lam.get();
        let nx = (2.0 * a / edge).ceil().max(1.0) as usize;
        let ny = (2.0 * b / edge).ceil().max(1.0) as usize;
        if nx.saturating_mul(ny) > budget_panels {
            return Ok(None);
        }
        let (hx, hy) = (2.0 * a / nx as f64, 2.0 * b / ny as f64);
        let nearest = |r: &Rect| {
            terminals
                .iter()
                .map(|t| r.distance_to(t.x, t.y, t.z))
                .fold(f64::INFINITY, f64::min)
        };
        let mut panels = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let base = Rect {
                    x0: -a + hx * i as f64,
                    x1: if i + 1 == nx { a } else { -a + hx * (i + 1) as f64 },
                    y0: -b + hy * j as f64,
                    y1: if j + 1 == ny { b } else { -b + hy * (j + 1) as f64 },
                };
                // graded refinement towards feet of terminals close to the wall
                let sub = match partition(
                    base,
                    |r| r.diag() > 0.5 * nearest(r),
                    budget_panels.saturating_sub(panels.len()).max(1),
                ) {
                    Ok(sub) => sub,
                    Err(Error::BudgetExceeded { .. }) => return Ok(None),
                    Err(e) => return Err(e),
                };
                panels.extend(sub);
                if panels.len() > budget_panels {
                    return Ok(None);
                }
            }
        }
        let tensor = |order: usize| {
            let (nodes, weights) = gauss_legendre(order);
            let mut out = Vec::with_capacity(panels.len() * order * order);
            for r in &panels {
                let (cx, cy) = r.centre();
                let (hx, hy) = (0.5 * r.wx(), 0.5 * r.wy());
                for (xi, wi) in nodes.iter().zip(&weights) {
                    for (yj, wj) in nodes.iter().zip(&weights) {
                        out.push((cx + hx * xi, cy + hy * yj, wi * wj * hx * hy));
                    }
                }
            }
            out
        };
        Ok(Some(SurfaceRule {
            fine: tensor(FINE_ORDER),
            coarse: tensor(COARSE_ORDER),
        }))
    }
}

// ---------------------------------------------------------------------------
// infinite line

/// Value of the one-dimensional correlation along an infinite line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineCorrelation {
    pub value: f64,
    /// Imaginary part; zero by symmetry, reported as a diagnostic.
    pub imag: f64,
    pub est_error: f64,
    pub truncation: f64,
}

/// `\int (z^2+x^2)^{-3/4} (z^2+(x+dx)^2)^{-3/4} exp(-2 pi j/lambda [rho_1 - rho_2]) dx`
/// over the whole real line.
pub fn line_correlation(
    delta_x: f64,
    z: f64,
    lam: Wavelength,
    cfg: &QuadratureConfig,
) -> Result<LineCorrelation> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::invalid(format!("z must be positive, got {z}")));
    }
    if !delta_x.is_finite() {
        return Err(Error::invalid("delta_x must be finite"));
    }
    cfg.validate()?;
    let peak = 2.0 / (z * z);
    // |integrand| <= (|x| - |dx|)^-3 beyond |x| > |dx|, so both tails together
    // are below (X - |dx|)^-2
    let reach = z / (2.0 * cfg.line_truncation_tol).sqrt();
    let xmax = delta_x.abs() + reach;
    let k = lam.wavenumber();
    let z2 = z * z;
    let f = |x: f64| {
        let x2 = x + delta_x;
        let r1s = z2 + x * x;
        let r2s = z2 + x2 * x2;
        let (r1, r2) = (r1s.sqrt(), r2s.sqrt());
        let rr = r1 * r2;
        let amp = 1.0 / (rr * rr.sqrt());
        let diff = (r1s - r2s) / (r1 + r2);
        Complex64::from_polar(amp, -k * diff)
    };
    let u = |x: f64| x / (z2 + x * x).sqrt();
    let frac = cfg.max_panel_fraction_of_lambda;
    let lamv = lam.get();
    let needs_split = |iv: &Interval| {
        let len = iv.b - iv.a;
        let dist = |p: f64| {
            let d = (iv.a - p).max(p - iv.b).max(0.0);
            (z2 + d * d).sqrt()
        };
        let (d1, d2) = (dist(0.0), dist(-delta_x));
        if len > d1.min(d2) {
            return true;
        }
        let c = 0.5 * (iv.a + iv.b);
        let g = ((u(c) - u(c + delta_x)).abs()
            + 0.5 * len * hessian_gap(d1, d2, delta_x.abs(), z))
            .min(2.0);
        g > 0.0 && len > frac * lamv * 2.0 / g
    };
    let cells = partition(Interval { a: -xmax, b: xmax }, needs_split, cfg.max_panels)?;
    let out = refine(
        cells,
        |iv| gk_interval(&f, iv),
        cfg.rel_tol,
        cfg.abs_tol * peak,
        cfg.max_panels,
    )?;
    Ok(LineCorrelation {
        value: out.value.re,
        imag: out.value.im,
        est_error: out.error,
        truncation: reach.powi(-2),
    })
}

/// Closed-form approximation `(2/z^2) sinc(2 dx / lambda)`.
pub fn sinc_model(delta_x: f64, z: f64, lam: Wavelength) -> Result<f64> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::invalid(format!("z must be positive, got {z}")));
    }
    Ok(2.0 / (z * z) * sinc(2.0 * delta_x / lam.get()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditRow {
    pub delta_x: f64,
    pub numeric_value: f64,
    pub sinc_value: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NullOffset {
    /// Index `m` of the expected null at `m * lambda / 2`.
    pub order: i64,
    pub located: f64,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub z: f64,
    pub lambda: f64,
    pub peak: f64,
    pub rows: Vec<AuditRow>,
    /// Largest `|numeric - sinc|` divided by the peak `2/z^2`.
    pub max_deviation: f64,
    pub rms_deviation: f64,
    pub nulls: Vec<NullOffset>,
}

impl AuditReport {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for row in &self.rows {
            wr.serialize(row)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Compares the numerical line correlation with the sinc model on `grid`.
pub fn approximation_audit(
    z: f64,
    lam: Wavelength,
    grid: &[f64],
    cfg: &QuadratureConfig,
) -> Result<AuditReport> {
    if grid.is_empty() {
        return Err(Error::invalid("audit grid must not be empty"));
    }
    let peak = 2.0 / (z * z);
    let rows = grid
        .iter()
        .map(|&dx| {
            let numeric = line_correlation(dx, z, lam, cfg)?.value;
            let model = sinc_model(dx, z, lam)?;
            Ok(AuditRow {
                delta_x: dx,
                numeric_value: numeric,
                sinc_value: model,
                abs_error: (numeric - model).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_deviation = rows.iter().map(|r| r.abs_error).fold(0.0, f64::max) / peak;
    let rms_deviation =
        (rows.iter().map(|r| r.abs_error * r.abs_error).sum::<f64>() / rows.len() as f64).sqrt()
            / peak;

    let mut nulls = Vec::new();
    for pair in rows.windows(2) {
        let (l, r) = (&pair[0], &pair[1]);
        if l.numeric_value == 0.0 || l.numeric_value.signum() != r.numeric_value.signum() {
            let root = if l.numeric_value == 0.0 {
                l.delta_x
            } else {
                bracket_root(
                    |x| line_correlation(x, z, lam, cfg).map(|c| c.value),
                    (l.delta_x, l.numeric_value),
                    (r.delta_x, r.numeric_value),
                    1e-12 * lam.get(),
                )?
            };
            let half = 0.5 * lam.get();
            let order = (root / half).round() as i64;
            nulls.push(NullOffset {
                order,
                located: root,
                offset: root - order as f64 * half,
            });
        }
    }
    Ok(AuditReport {
        z,
        lambda: lam.get(),
        peak,
        rows,
        max_deviation,
        rms_deviation,
        nulls,
    })
}

/// Illinois-modified regula falsi on a sign-changing bracket.
fn bracket_root(
    f: impl Fn(f64) -> Result<f64>,
    (mut a, mut fa): (f64, f64),
    (mut b, mut fb): (f64, f64),
    xtol: f64,
) -> Result<f64> {
    let mut side = 0i8;
    for _ in 0..200 {
        let c = (a * fb - b * fa) / (fb - fa);
        let fc = f(c)?;
        if fc == 0.0 || (b - a).abs() < xtol {
            return Ok(c);
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        if (b - a).abs() < xtol {
            return Ok(0.5 * (a + b));
        }
    }
    Ok(0.5 * (a + b))
}

// ---------------------------------------------------------------------------
// Hankel transform of the radial sinc kernel

/// Numerical order-zero Hankel transform
/// `pi \int_0^inf sinc(2r/lambda) r J0(2 pi s r) dr`.
///
/// The integral converges only conditionally; it is evaluated with an
/// `exp(-eps r)` convergence factor at a ladder of `eps` values and
/// Richardson-extrapolated to `eps = 0`.
pub fn hankel_sinc_transform(s: f64, lam: Wavelength, cfg: &QuadratureConfig) -> Result<Integral> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::invalid("radial frequency must be non-negative"));
    }
    let l = lam.get();
    let a = 2.0 * PI / l;
    let b = 2.0 * PI * s;
    let gap = (a - b).abs();
    if gap < 1e-9 * a {
        return Err(Error::invalid(
            "Hankel transform is singular at s = 1/lambda",
        ));
    }
    const LEVELS: usize = 6;
    let eps0 = 0.5 * gap;
    let panel = cfg.max_panel_fraction_of_lambda * l;
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(LEVELS);
    let mut panels = 0;
    for level in 0..LEVELS {
        let eps = eps0 / f64::powi(2.0, level as i32);
        let reach = 40.0 / eps;
        let n = (reach / panel).ceil() as usize;
        let f = |r: f64| PI * sinc(2.0 * r / l) * r * bessel_j0(b * r) * (-eps * r).exp();
        let integral = integrate(
            f,
            0.0,
            reach,
            cfg.rel_tol.min(1e-10),
            1e-14 * l * l,
            n,
            cfg.max_panels.max(4 * n),
        )?;
        panels += integral.panels;
        let mut row = vec![integral.value];
        for j in 1..=level {
            let p = f64::powi(2.0, j as i32);
            let prev = &table[level - 1];
            row.push((p * row[j - 1] - prev[j - 1]) / (p - 1.0));
        }
        table.push(row);
    }
    let best = table[LEVELS - 1][LEVELS - 1];
    let prev = table[LEVELS - 2][LEVELS - 2];
    Ok(Integral {
        value: best,
        est_error: (best - prev).abs(),
        panels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::fraction_nu;
    use approx::assert_relative_eq;

    fn lam(v: f64) -> Wavelength {
        Wavelength::new(v).unwrap()
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in 1..=8 {
            let (x, w) = gauss_legendre(n);
            let deg = 2 * n - 1;
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32 - 1)).sum();
            let exact = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert!((q - exact).abs() < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn adaptive_1d_known_integrals() {
        let r = integrate(|x| x.sin(), 0.0, PI, 1e-12, 0.0, 1, 1000).unwrap();
        assert_relative_eq!(r.value, 2.0, epsilon = 1e-12);
        let r = integrate(|x| x.sqrt(), 0.0, 1.0, 1e-10, 0.0, 1, 1000).unwrap();
        assert_relative_eq!(r.value, 2.0 / 3.0, epsilon = 1e-10);
        let r = integrate(|x| x, 1.0, 0.0, 1e-12, 0.0, 1, 10).unwrap();
        assert_relative_eq!(r.value, -0.5, epsilon = 1e-14);
    }

    #[test]
    fn budget_error_is_reported() {
        let err = integrate(|x| (1.0 / x).sin(), 1e-9, 1.0, 1e-14, 0.0, 1, 20).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }));
    }

    #[test]
    fn diagonal_correlation_matches_nu() {
        let cfg = QuadratureConfig::default();
        let s = SurfaceSpec::finite(2.0, 1.0).unwrap();
        for z in [0.05, 0.7, 3.0] {
            let t = Terminal::new(0.0, 0.0, z, 1.0).unwrap();
            let c = correlation_integral(&t, &t, &s, lam(0.5), &cfg).unwrap();
            let nu = fraction_nu(&s, z).unwrap();
            assert_relative_eq!(c.value.re, nu, max_relative = 10.0 * cfg.rel_tol);
            assert_eq!(c.value.im, 0.0);
        }
    }

    #[test]
    fn correlation_is_hermitian() {
        let cfg = QuadratureConfig::default();
        let s = SurfaceSpec::finite(2.0, 1.0).unwrap();
        let a = Terminal::new(0.3, -0.2, 1.1, 1.0).unwrap();
        let b = Terminal::new(-0.8, 0.5, 2.3, 1.0).unwrap();
        let ab = correlation_integral(&a, &b, &s, lam(0.5), &cfg).unwrap();
        let ba = correlation_integral(&b, &a, &s, lam(0.5), &cfg).unwrap();
        let scale = ab.value.norm().max(1e-3);
        assert!((ab.value - ba.value.conj()).norm() <= 10.0 * cfg.rel_tol * scale);
    }

    #[test]
    fn infinite_surface_is_truncated() {
        let cfg = QuadratureConfig::default();
        let t = Terminal::new(0.0, 0.0, 1.5, 1.0).unwrap();
        let c = correlation_integral(&t, &t, &SurfaceSpec::infinite(), lam(0.4), &cfg).unwrap();
        assert!((c.value.re - 0.5).abs() < 2.0 * cfg.line_truncation_tol);
    }

    #[test]
    fn line_correlation_peak_and_symmetry() {
        let cfg = QuadratureConfig::default();
        let l = lam(0.4);
        let g0 = line_correlation(0.0, 2.0, l, &cfg).unwrap();
        assert_relative_eq!(g0.value, 0.5, max_relative = 1e-8);
        let gp = line_correlation(0.37, 2.0, l, &cfg).unwrap();
        let gm = line_correlation(-0.37, 2.0, l, &cfg).unwrap();
        assert!((gp.value - gm.value).abs() < 1e-9);
        assert!(gp.imag.abs() < 1e-9);
    }

    #[test]
    fn sinc_model_examples() {
        let l = lam(0.4);
        assert_eq!(sinc_model(0.0, 2.0, l).unwrap(), 0.5);
        assert!(sinc_model(0.2, 2.0, l).unwrap().abs() < 1e-16);
        assert_relative_eq!(sinc_model(0.1, 1.0, l).unwrap(), 4.0 / PI, epsilon = 1e-15);
        assert!(sinc_model(0.1, 0.0, l).is_err());
    }

    #[test]
    fn single_point_audit() {
        let cfg = QuadratureConfig::default();
        let rep = approximation_audit(2.0, lam(0.4), &[0.0], &cfg).unwrap();
        let g0 = line_correlation(0.0, 2.0, lam(0.4), &cfg).unwrap().value;
        assert_relative_eq!(rep.max_deviation, (g0 - 0.5).abs() / 0.5, epsilon = 1e-15);
        assert!(approximation_audit(2.0, lam(0.4), &[], &cfg).is_err());
    }

    #[test]
    fn hankel_transform_rejects_band_edge() {
        let cfg = QuadratureConfig::default();
        assert!(hankel_sinc_transform(2.5, lam(0.4), &cfg).is_err());
    }
}
