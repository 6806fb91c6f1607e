//! Spherical Bessel functions `j_l` and their positive zeros.

use crate::error::{Result, SpectralError};

/// `j_l(x)`: power series below `x = l + 1`, upward recurrence above.
pub fn spherical_jn(l: usize, x: f64) -> f64 {
    if x == 0.0 {
        return if l == 0 { 1.0 } else { 0.0 };
    }
    if x < l as f64 + 1.0 {
        return series(l, x);
    }
    let (s, c) = x.sin_cos();
    let mut prev = s / x;
    if l == 0 {
        return prev;
    }
    let mut cur = s / (x * x) - c / x;
    for k in 1..l {
        let next = (2 * k + 1) as f64 / x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

fn series(l: usize, x: f64) -> f64 {
    let mut lead = 1.0;
    for k in 0..l {
        lead *= x / (2 * k + 3) as f64;
    }
    let y = -0.5 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= y / (k as f64 * (2 * l + 2 * k + 1) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    lead * sum
}

/// The first `n` positive zeros of `j_l`, by sign scan and bisection.
pub fn spherical_jn_zeros(l: usize, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(SpectralError::InvalidParameter(
            "need at least one zero".into(),
        ));
    }
    let step = 0.05;
    let mut zeros = Vec::with_capacity(n);
    let mut a = l as f64 + 0.5;
    let mut fa = spherical_jn(l, a);
    while zeros.len() < n {
        let b = a + step;
        let fb = spherical_jn(l, b);
        if fa == 0.0 {
            zeros.push(a);
        } else if fa * fb < 0.0 {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let fm = spherical_jn(l, mid);
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (fm < 0.0) == (flo < 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            zeros.push(0.5 * (lo + hi));
        }
        a = b;
        fa = fb;
    }
    Ok(zeros)
}
