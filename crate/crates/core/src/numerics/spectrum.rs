//! Certified lowest eigenvalues of conjugation-symmetric characteristic
//! functions (`f(z̄) = conj f(z)`) whose spectrum lies in a horizontal strip.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::branches::reality_tolerance;
use super::contour::{sort_spectrum, ContourOptions, Rect, RootLocator};
use super::roots::{newton, SpectralFunction};
use crate::error::{Result, SpectralError};

/// The strip `Re z ≥ re_min`, `|Im z| ≤ im_max` known to hold the whole
/// spectrum, and where to cut it for the first search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripSearch {
    pub re_min: f64,
    pub im_max: f64,
    pub initial_re_max: f64,
    /// Maximum number of strip extensions before giving up.
    pub max_extensions: usize,
}

/// The `count` eigenvalues of lowest real part (both members of a
/// conjugate pair are kept even if that exceeds `count`), sorted by
/// `(Re, Im)`. The strip is searched symmetrically so that real roots sit far
/// from the horizontal edges; every eigenvalue strictly to the left of the
/// last searched abscissa is found, with the winding number as the
/// completeness certificate.
pub fn lowest_eigenvalues<S: SpectralFunction + ?Sized>(
    func: &S,
    p: f64,
    search: &StripSearch,
    count: usize,
    opts: ContourOptions,
) -> Result<Vec<Complex64>> {
    let locator = RootLocator::new(func, p, opts);
    let mut lo = search.re_min;
    let mut hi = search.initial_re_max.max(search.re_min + 1.0);
    let mut raw: Vec<Complex64> = Vec::new();
    for _ in 0..=search.max_extensions {
        let mut attempt = 0;
        let strip = loop {
            let rect = Rect::new(
                Complex64::new(lo, -search.im_max),
                Complex64::new(hi, search.im_max),
            );
            match locator.roots(rect) {
                Ok(r) => break r,
                Err(SpectralError::RootOnContour { .. })
                | Err(SpectralError::InsufficientSampling { .. })
                    if attempt < 4 =>
                {
                    attempt += 1;
                    hi += 0.0173 * (hi - lo);
                }
                Err(e) => return Err(e),
            }
        };
        raw.extend(strip);
        let full = expand(func, p, &raw, opts.root_rel_tol);
        if full.len() >= count {
            return Ok(truncate(full, count));
        }
        let width = hi - search.re_min;
        lo = hi;
        hi += width;
    }
    Err(SpectralError::IncompleteSpectrum {
        found: expand(func, p, &raw, opts.root_rel_tol).len(),
        expected: count,
        lower: Complex64::new(search.re_min, -search.im_max),
        upper: Complex64::new(hi, search.im_max),
    })
}

/// Snaps near-real roots onto the axis.
fn expand<S: SpectralFunction + ?Sized>(
    func: &S,
    p: f64,
    raw: &[Complex64],
    rel_tol: f64,
) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(raw.len());
    for &z in raw {
        if z.im.abs() <= reality_tolerance(z) {
            let start = Complex64::new(z.re, 0.0);
            let real = newton(func, p, start, rel_tol * z.norm().max(1.0), 50)
                .ok()
                .map(|r| r.root)
                .filter(|r| r.im == 0.0 && (r - z).norm() <= 1e-6 * z.norm().max(1.0));
            out.push(real.unwrap_or(z));
        } else {
            out.push(z);
        }
    }
    // Make conjugate closure exact: each lower root becomes the mirror of
    // its upper partner.
    let upper: Vec<Complex64> = out.iter().copied().filter(|z| z.im > 0.0).collect();
    for z in out.iter_mut().filter(|z| z.im < 0.0) {
        let tol = 1e-6 * z.norm().max(1.0);
        if let Some(u) = upper.iter().find(|u| (u.conj() - *z).norm() <= tol) {
            *z = u.conj();
        }
    }
    sort_spectrum(&mut out);
    out
}

fn truncate(mut v: Vec<Complex64>, count: usize) -> Vec<Complex64> {
    if v.len() <= count {
        return v;
    }
    let last = v[count - 1];
    let mut n = count;
    // Keep the conjugate partner of a pair cut in half.
    while n < v.len()
        && last.im < -reality_tolerance(last)
        && (v[n] - last.conj()).norm() <= 1e-6 * last.norm().max(1.0)
    {
        n += 1;
    }
    v.truncate(n);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::roots::FnFamily;

    #[test]
    fn polynomial_with_conjugate_pairs() {
        let roots = [
            Complex64::new(1.0, 0.0),
            Complex64::new(2.0, 3.0),
            Complex64::new(2.0, -3.0),
            Complex64::new(4.5, 0.0),
            Complex64::new(7.0, 0.5),
            Complex64::new(7.0, -0.5),
        ];
        let fam = FnFamily(move |z: Complex64, _p: f64| {
            roots.iter().map(|r| z - r).product::<Complex64>()
        });
        let search = StripSearch {
            re_min: 0.0,
            im_max: 5.0,
            initial_re_max: 3.0,
            max_extensions: 10,
        };
        let got = lowest_eigenvalues(&fam, 0.0, &search, 4, ContourOptions::default()).unwrap();
        assert_eq!(got.len(), 4);
        assert!((got[0] - roots[0]).norm() < 1e-10);
        assert_eq!(got[0].im, 0.0);
        assert!((got[1] - roots[2]).norm() < 1e-10 && (got[2] - roots[1]).norm() < 1e-10);
        assert!((got[3] - roots[3]).norm() < 1e-10);
        let got = lowest_eigenvalues(&fam, 0.0, &search, 5, ContourOptions::default()).unwrap();
        assert_eq!(got.len(), 6);
    }
}
