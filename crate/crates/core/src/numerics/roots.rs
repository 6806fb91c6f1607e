//! Newton iteration for simple roots and Gauss–Newton localization of double
//! and triple roots (exceptional points and their coalescences).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpectralError};

/// A family of analytic characteristic functions `f(z; p)`: analytic in the
/// spectral variable `z`, smooth in the real parameter `p`.
pub trait SpectralFunction: Sync {
    /// Returns `[f, ∂f/∂z, ..., ∂^order f/∂z^order]` at `(z, p)`.
    fn jet(&self, z: Complex64, p: f64, order: usize) -> Result<Vec<Complex64>>;

    fn value(&self, z: Complex64, p: f64) -> Result<Complex64> {
        Ok(self.jet(z, p, 0)?[0])
    }

    /// Lower-accuracy evaluation, good enough for phase tracking on contours.
    fn coarse_value(&self, z: Complex64, p: f64) -> Result<Complex64> {
        self.value(z, p)
    }

    /// Step used for central differences in the parameter.
    fn parameter_step(&self, p: f64) -> f64 {
        1e-6 * p.abs().max(1.0)
    }
}

/// Adapts a plain closure `f(z, p)`; derivatives in `z` come from central
/// differences with step `max(1e-7, 1e-7 |z|)` (wider for higher orders).
pub struct FnFamily<F>(pub F);

impl<F> SpectralFunction for FnFamily<F>
where
    F: Fn(Complex64, f64) -> Complex64 + Sync,
{
    fn jet(&self, z: Complex64, p: f64, order: usize) -> Result<Vec<Complex64>> {
        let f = &self.0;
        let f0 = f(z, p);
        let mut out = vec![f0];
        if order >= 1 {
            let h = fd_step(z, 1e-7);
            out.push((f(z + h, p) - f(z - h, p)) / (2.0 * h));
        }
        if order >= 2 {
            let h = fd_step(z, 1e-4);
            out.push((f(z + h, p) - 2.0 * f0 + f(z - h, p)) / (h * h));
        }
        if order >= 3 {
            let h = fd_step(z, 1e-3);
            let h2 = 2.0 * h;
            out.push(
                (f(z + h2, p) - 2.0 * f(z + h, p) + 2.0 * f(z - h, p) - f(z - h2, p))
                    / (2.0 * h * h * h),
            );
        }
        if order >= 4 {
            return Err(SpectralError::InvalidParameter(
                "finite-difference jets stop at third order".into(),
            ));
        }
        Ok(out)
    }
}

fn fd_step(z: Complex64, rel: f64) -> f64 {
    rel.max(rel * z.norm())
}

/// Outcome of a Newton solve. `residual` is the length of the last Newton
/// correction `|f/f'|`, i.e. the estimated distance to the root.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootResult {
    pub root: Complex64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Newton iteration on `f` with a central-difference derivative.
pub fn find_root_complex<F>(f: F, guess: Complex64, tol: f64, max_iter: usize) -> Result<RootResult>
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    let family = FnFamily(move |z: Complex64, _p: f64| f(z));
    newton(&family, 0.0, guess, tol, max_iter)
}

/// Newton iteration on `z ↦ func(z; p)` using the family's own derivative.
///
/// Steps that increase `|f|` by more than a factor of four are halved up to
/// eight times.
pub fn newton<S: SpectralFunction + ?Sized>(
    func: &S,
    p: f64,
    guess: Complex64,
    tol: f64,
    max_iter: usize,
) -> Result<RootResult> {
    let mut z = guess;
    let mut jet = func.jet(z, p, 1)?;
    let mut last_step = f64::INFINITY;
    for it in 1..=max_iter {
        let (f, df) = (jet[0], jet[1]);
        if f == Complex64::new(0.0, 0.0) {
            return Ok(RootResult {
                root: z,
                residual: 0.0,
                iterations: it - 1,
                converged: true,
            });
        }
        let step = f / df;
        if df.norm() == 0.0 || !step.re.is_finite() || !step.im.is_finite() {
            return Err(SpectralError::DerivativeVanished { at: z });
        }
        let mut s = step;
        let mut candidate = z - s;
        let mut cjet = func.jet(candidate, p, 1)?;
        let mut halvings = 0;
        while (cjet[0].norm() > 4.0 * f.norm() || cjet[0].norm().is_nan()) && halvings < 8 {
            s *= 0.5;
            candidate = z - s;
            cjet = func.jet(candidate, p, 1)?;
            halvings += 1;
        }
        z = candidate;
        jet = cjet;
        last_step = step.norm();
        if last_step <= tol {
            return Ok(RootResult {
                root: z,
                residual: last_step,
                iterations: it,
                converged: true,
            });
        }
    }
    Err(SpectralError::NoConvergence {
        iterations: max_iter,
        last: z,
        step: last_step,
    })
}

/// A double root of `f(·; p)` in `z`, or a triple root in a two-parameter
/// family. Residuals are expressed as distances in the spectral variable:
/// `residual_f = sqrt(2|f|/|f''|)` and `residual_df = |f'|/|f''|` for double
/// roots, with the analogous third-order ratios for triple roots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExceptionalPoint {
    pub parameter: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secondary_parameter: Option<f64>,
    pub eigenvalue: Complex64,
    pub residual_f: f64,
    pub residual_df: f64,
}

impl ExceptionalPoint {
    pub fn max_residual(&self) -> f64 {
        self.residual_f.max(self.residual_df)
    }
}

/// Double-root residuals from a second-order jet.
pub fn double_root_residuals(jet: &[Complex64]) -> (f64, f64) {
    let f2 = jet[2].norm();
    if f2 == 0.0 {
        return (f64::INFINITY, f64::INFINITY);
    }
    ((2.0 * jet[0].norm() / f2).sqrt(), jet[1].norm() / f2)
}

/// Triple-root residuals from a third-order jet: `(6|f|/|f'''|)^(1/3)`,
/// `(2|f'|/|f'''|)^(1/2)` and `|f''|/|f'''|`.
pub fn triple_root_residuals(jet: &[Complex64]) -> [f64; 3] {
    let f3 = jet[3].norm();
    if f3 == 0.0 {
        return [f64::INFINITY; 3];
    }
    [
        (6.0 * jet[0].norm() / f3).cbrt(),
        (2.0 * jet[1].norm() / f3).sqrt(),
        jet[2].norm() / f3,
    ]
}

/// Solves `f = 0, ∂f/∂z = 0` for complex `z` and real `p` by Gauss–Newton
/// on the four real equations, each scaled by `1/|f''|`.
///
/// Converged when both residuals are below `tol · max(1, |z|)`. A double
/// root is only determined to the square root of the evaluation noise, so
/// once the update stalls at roundoff level the point is also accepted if
/// the residuals are below `√tol · max(1, |z|)`.
pub fn find_double_root<S: SpectralFunction + ?Sized>(
    func: &S,
    guess_z: Complex64,
    guess_p: f64,
    tol: f64,
) -> Result<ExceptionalPoint> {
    const MAX_ITER: usize = 60;
    let mut z = guess_z;
    let mut p = guess_p;
    let mut jet = func.jet(z, p, 2)?;
    let mut merit = double_merit(&jet);
    let mut stalled = false;
    for _ in 0..MAX_ITER {
        let (rf, rdf) = double_root_residuals(&jet);
        let scale_z = z.norm().max(1.0);
        let limit = if stalled {
            tol.sqrt() * scale_z
        } else {
            tol * scale_z
        };
        if rf <= limit && rdf <= limit {
            return Ok(ExceptionalPoint {
                parameter: p,
                secondary_parameter: None,
                eigenvalue: z,
                residual_f: rf,
                residual_df: rdf,
            });
        }
        let h = func.parameter_step(p);
        let jp = func.jet(z, p + h, 1)?;
        let jm = func.jet(z, p - h, 1)?;
        let fp = (jp[0] - jm[0]) / (2.0 * h);
        let dfp = (jp[1] - jm[1]) / (2.0 * h);
        let scale = jet[2].norm();
        if scale == 0.0 || !scale.is_finite() {
            return Err(SpectralError::SingularJacobian { z, p });
        }
        let i = Complex64::new(0.0, 1.0);
        // unknowns: (Re z, Im z, p)
        let cols = [[jet[1], jet[2]], [i * jet[1], i * jet[2]], [fp, dfp]];
        let res = [jet[0], jet[1]];
        let mut a = vec![vec![0.0; 3]; 4];
        let mut r = vec![0.0; 4];
        for e in 0..2 {
            for (c, col) in cols.iter().enumerate() {
                a[2 * e][c] = col[e].re / scale;
                a[2 * e + 1][c] = col[e].im / scale;
            }
            r[2 * e] = -res[e].re / scale;
            r[2 * e + 1] = -res[e].im / scale;
        }
        let delta = least_squares(&a, &r).ok_or(SpectralError::SingularJacobian { z, p })?;
        let tiny = delta[0].hypot(delta[1]) <= 1e-13 * scale_z
            && delta[2].abs() <= 1e-13 * p.abs().max(1.0);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..10 {
            let zn = z + Complex64::new(delta[0], delta[1]) * t;
            let pn = p + delta[2] * t;
            if let Ok(jn) = func.jet(zn, pn, 2) {
                let m = double_merit(&jn);
                if m.is_finite() && m < merit * 1.5 + 1e-300 {
                    z = zn;
                    p = pn;
                    jet = jn;
                    merit = m;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted || tiny {
            if stalled && !accepted {
                break;
            }
            stalled = true;
        }
    }
    let (rf, rdf) = double_root_residuals(&jet);
    Err(SpectralError::NoConvergence {
        iterations: MAX_ITER,
        last: z,
        step: rf.max(rdf),
    })
}

fn double_merit(jet: &[Complex64]) -> f64 {
    let (a, b) = double_root_residuals(jet);
    a * a + b
}

/// Two-parameter family `f(z; p, s)` for locating coalescing exceptional
/// points (triple roots in `z`).
pub trait SpectralFamily2: Sync {
    fn jet2(&self, z: Complex64, p: f64, s: f64, order: usize) -> Result<Vec<Complex64>>;
    fn steps(&self, p: f64, s: f64) -> (f64, f64) {
        (1e-6 * p.abs().max(1.0), 1e-6 * s.abs().max(1.0))
    }
}

/// Solves `f = f' = f'' = 0` for `(z, p, s)` by Gauss–Newton, residuals
/// scaled by `1/|f'''|`. Tolerances are relative to `max(1, |z|)`, with the
/// same stall fallback as [`find_double_root`].
pub fn find_triple_root<S: SpectralFamily2 + ?Sized>(
    func: &S,
    guess_z: Complex64,
    guess_p: f64,
    guess_s: f64,
    tol: f64,
) -> Result<ExceptionalPoint> {
    const MAX_ITER: usize = 80;
    let (mut z, mut p, mut s) = (guess_z, guess_p, guess_s);
    let mut jet = func.jet2(z, p, s, 3)?;
    let merit_of = |j: &[Complex64]| {
        let r = triple_root_residuals(j);
        r[0].powi(3) + r[1].powi(2) + r[2]
    };
    let mut merit = merit_of(&jet);
    let mut stalled = false;
    let mut slow = 0;
    for _ in 0..MAX_ITER {
        let r3 = triple_root_residuals(&jet);
        let scale_z = z.norm().max(1.0);
        let limit = if stalled {
            tol.sqrt() * scale_z
        } else {
            tol * scale_z
        };
        if r3.iter().all(|&v| v <= limit) {
            return Ok(ExceptionalPoint {
                parameter: p,
                secondary_parameter: Some(s),
                eigenvalue: z,
                residual_f: r3[0],
                residual_df: r3[1].max(r3[2]),
            });
        }
        let (hp, hs) = func.steps(p, s);
        let jpp = func.jet2(z, p + hp, s, 2)?;
        let jpm = func.jet2(z, p - hp, s, 2)?;
        let jsp = func.jet2(z, p, s + hs, 2)?;
        let jsm = func.jet2(z, p, s - hs, 2)?;
        let scale = jet[3].norm();
        if scale == 0.0 || !scale.is_finite() {
            return Err(SpectralError::SingularJacobian { z, p });
        }
        let i = Complex64::new(0.0, 1.0);
        let mut a = vec![vec![0.0; 4]; 6];
        let mut r = vec![0.0; 6];
        for e in 0..3 {
            let dz = jet[e + 1];
            let dp = (jpp[e] - jpm[e]) / (2.0 * hp);
            let ds = (jsp[e] - jsm[e]) / (2.0 * hs);
            let cols = [dz, i * dz, dp, ds];
            for (c, col) in cols.iter().enumerate() {
                a[2 * e][c] = col.re / scale;
                a[2 * e + 1][c] = col.im / scale;
            }
            r[2 * e] = -jet[e].re / scale;
            r[2 * e + 1] = -jet[e].im / scale;
        }
        let delta = least_squares(&a, &r).ok_or(SpectralError::SingularJacobian { z, p })?;
        let before = merit;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let zn = z + Complex64::new(delta[0], delta[1]) * t;
            let pn = p + delta[2] * t;
            let sn = s + delta[3] * t;
            if let Ok(jn) = func.jet2(zn, pn, sn, 3) {
                let m = merit_of(&jn);
                if m.is_finite() && m < merit * 1.5 + 1e-300 {
                    z = zn;
                    p = pn;
                    s = sn;
                    jet = jn;
                    merit = m;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        slow = if accepted && merit > 0.25 * before {
            slow + 1
        } else {
            0
        };
        if !accepted || slow >= 5 {
            if stalled {
                break;
            }
            stalled = true;
        }
    }
    let r3 = triple_root_residuals(&jet);
    Err(SpectralError::NoConvergence {
        iterations: MAX_ITER,
        last: z,
        step: r3.iter().cloned().fold(0.0, f64::max),
    })
}

/// Least-squares solution of `a x = r` through the normal equations.
fn least_squares(a: &[Vec<f64>], r: &[f64]) -> Option<Vec<f64>> {
    let n = a[0].len();
    let mut m = vec![vec![0.0; n + 1]; n];
    for i in 0..n {
        for j in 0..n {
            m[i][j] = a.iter().map(|row| row[i] * row[j]).sum();
        }
        m[i][n] = a.iter().zip(r).map(|(row, ri)| row[i] * ri).sum();
    }
    solve_dense(m)
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
pub(crate) fn solve_dense(mut m: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let n = m.len();
    let norm = m
        .iter()
        .flat_map(|row| row[..n].iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    if norm == 0.0 || !norm.is_finite() {
        return None;
    }
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() <= 1e-15 * norm {
            return None;
        }
        m.swap(col, piv);
        let (top, bottom) = m.split_at_mut(col + 1);
        let pivot = &top[col];
        for row in bottom {
            let factor = row[col] / pivot[col];
            for (x, p) in row[col..].iter_mut().zip(&pivot[col..]) {
                *x -= factor * p;
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| m[row][k] * x[k]).sum();
        x[row] = (m[row][n] - s) / m[row][row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn newton_finds_imaginary_unit() {
        let r = find_root_complex(|z| z * z + 1.0, c(0.5, 0.8), 1e-12, 50).unwrap();
        assert!(r.converged && r.residual <= 1e-12);
        assert!((r.root - c(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn newton_finds_empty_box_ground_level() {
        let det = |mu: Complex64| {
            let s = mu.sqrt();
            (2.0 * s).sin() / s
        };
        let r = find_root_complex(det, c(2.3, 0.0), 1e-12, 50).unwrap();
        assert!((r.root.re - PI * PI / 4.0).abs() < 1e-10);
        assert!(r.root.im.abs() < 1e-12);
    }

    #[test]
    fn newton_reports_vanishing_derivative() {
        let r = find_root_complex(|_z| c(1.0, 0.0), c(0.3, 0.0), 1e-12, 10);
        assert!(matches!(r, Err(SpectralError::DerivativeVanished { .. })));
    }

    #[test]
    fn newton_reports_no_convergence() {
        // z^2 + 1 from a real start never leaves the real axis
        let r = find_root_complex(|z| z * z + 1.0, c(0.3, 0.0), 1e-12, 20);
        assert!(r.is_err());
    }

    #[test]
    fn double_root_of_parabola() {
        let fam = FnFamily(|z: Complex64, p: f64| z * z - p);
        let ep = find_double_root(&fam, c(0.1, 0.0), 0.1, 1e-8).unwrap();
        assert!(ep.eigenvalue.norm() < 1e-7, "{ep:?}");
        assert!(ep.parameter.abs() < 1e-7, "{ep:?}");
        assert!(ep.max_residual() <= 1e-8);
    }

    #[test]
    fn double_root_of_two_level_model() {
        // (E - c)^2 - a^2 + |b|^2 with |b| = 0.7, c = 1.5; EP at a = |b|, E = c
        let fam = FnFamily(|e: Complex64, a: f64| (e - 1.5) * (e - 1.5) - a * a + 0.49);
        // a double root is only resolved to ~sqrt(eps) in z
        let ep = find_double_root(&fam, c(1.45, 0.0), 0.65, 1e-7).unwrap();
        assert!((ep.eigenvalue - c(1.5, 0.0)).norm() < 1e-6);
        assert!((ep.parameter - 0.7).abs() < 1e-9);
    }

    struct Cubic;
    impl SpectralFamily2 for Cubic {
        // z^3 - p z - s has a triple root only at p = s = 0
        fn jet2(&self, z: Complex64, p: f64, s: f64, order: usize) -> Result<Vec<Complex64>> {
            let all = [z * z * z - p * z - s, 3.0 * z * z - p, 6.0 * z, c(6.0, 0.0)];
            Ok(all[..=order].to_vec())
        }
    }

    #[test]
    fn triple_root_of_cusp() {
        let ep = find_triple_root(&Cubic, c(0.2, 0.05), 0.1, -0.05, 1e-8).unwrap();
        assert!(ep.eigenvalue.norm() < 1e-7);
        assert!(ep.parameter.abs() < 1e-7);
        assert!(ep.secondary_parameter.unwrap().abs() < 1e-7);
    }

    #[test]
    fn dense_solver_detects_singularity() {
        let m = vec![vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0]];
        assert!(solve_dense(m).is_none());
    }
}
