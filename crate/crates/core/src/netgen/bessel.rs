//! Zeroth-order Bessel function of the first kind.
//!
//! Two regimes: the alternating power series is summed directly up to
//! `SERIES_LIMIT`, where cancellation still leaves ~12 correct digits, and the
//! Hankel asymptotic expansion (optimally truncated) is used beyond it, where
//! its truncation error is below 1e-11.

use std::f64::consts::{FRAC_PI_4, PI};

const SERIES_LIMIT: f64 = 12.0;

/// J0(x), accurate to about 1e-11 absolute for all finite x.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x <= SERIES_LIMIT {
        series(x)
    } else {
        asymptotic(x)
    }
}

fn series(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term: f64 = 1.0;
    let mut sum: f64 = 1.0;
    let mut k = 1.0;
    while term.abs() > 1e-18 * sum.abs().max(1e-300) || k < 4.0 {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
        if k > 200.0 {
            break;
        }
    }
    sum
}

fn asymptotic(x: f64) -> f64 {
    // b_k = a_k(0) / x^k, a_k(0) = prod_{j<=k} -(2j-1)^2 / (k! 8^k)
    let mut p = 1.0;
    let mut q = 0.0;
    let mut b: f64 = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..200u32 {
        let odd = f64::from(2 * k - 1);
        let next = b * (-(odd * odd)) / (f64::from(k) * 8.0 * x);
        if next.abs() >= prev || next.abs() < 1e-18 {
            break;
        }
        prev = next.abs();
        b = next;
        // sign pattern (-1)^{floor(k/2)} on the alternating a_k
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * b;
        } else {
            q += sign * b;
        }
    }
    let chi = x - FRAC_PI_4;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}
