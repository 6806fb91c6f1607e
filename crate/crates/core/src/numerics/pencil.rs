//! Closed-form quadratic pencils and the schematic two-level model.

use num_complex::Complex64;

use crate::error::{Result, SpectralError};

/// Roots of `a2 λ² + a1 λ + a0`, ordered by real part and then imaginary
/// part. Uses the cancellation-free form `q = -(a1 ± √disc)/2`.
pub fn quadratic_pencil_roots(
    a2: Complex64,
    a1: Complex64,
    a0: Complex64,
) -> Result<(Complex64, Complex64)> {
    if a2.norm() == 0.0 {
        return Err(SpectralError::DegeneratePencil);
    }
    let sq = (a1 * a1 - 4.0 * a0 * a2).sqrt();
    let sign = if (a1.conj() * sq).re >= 0.0 {
        1.0
    } else {
        -1.0
    };
    let q = -0.5 * (a1 + sign * sq);
    let (r1, r2) = if q.norm() == 0.0 {
        (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
    } else {
        (q / a2, a0 / q)
    };
    Ok(ordered(r1, r2))
}

/// Eigenvalues `c ± √(a² − |b|²)` of the two-level model
/// `[[c + a, b], [−b*, c − a]]`; real iff `|a| ≥ |b|`.
pub fn two_level_spectrum(a: f64, b: Complex64, c: f64) -> (Complex64, Complex64) {
    let (aa, bb) = (a.abs(), b.norm());
    let d = (aa - bb) * (aa + bb);
    let s = d.abs().sqrt();
    if d >= 0.0 {
        (Complex64::new(c - s, 0.0), Complex64::new(c + s, 0.0))
    } else {
        (Complex64::new(c, -s), Complex64::new(c, s))
    }
}

fn ordered(x: Complex64, y: Complex64) -> (Complex64, Complex64) {
    match x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)) {
        std::cmp::Ordering::Greater => (y, x),
        _ => (x, y),
    }
}
