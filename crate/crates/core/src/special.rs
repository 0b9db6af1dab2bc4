//! Special functions used by the field and spectrum code.

use std::f64::consts::{FRAC_PI_4, PI};

/// Normalised sinc, `sin(pi x) / (pi x)` with `sinc(0) = 1`.
#[inline]
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

const J0_SERIES_LIMIT: f64 = 12.0;

/// Bessel function of the first kind, order zero.
///
/// Power series below `|x| = 12`, Hankel asymptotic expansion above; both
/// branches are accurate to roughly 1e-11 absolute at the switch point.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x <= J0_SERIES_LIMIT {
        let q = -0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        loop {
            term *= q / (k * k);
            sum += term;
            if term.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
            k += 1.0;
        }
        sum
    } else {
        // a_k / x^k with a_k = prod_{j<=k} (-(2j-1)^2) / (k! 8^k)
        let mut p = 1.0;
        let mut q = 0.0;
        let mut t = 1.0;
        let mut prev = f64::INFINITY;
        for k in 1..200 {
            let kf = k as f64;
            let odd = 2.0 * kf - 1.0;
            t *= -(odd * odd) / (kf * 8.0 * x);
            if t.abs() >= prev || t.abs() < 1e-18 {
                break;
            }
            prev = t.abs();
            // P collects (-1)^m a_{2m} x^{-2m}, Q collects (-1)^m a_{2m+1} x^{-2m-1}
            let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
            if k % 2 == 0 {
                p += sign * t;
            } else {
                q += sign * t;
            }
        }
        let chi = x - FRAC_PI_4;
        (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
    }
}
