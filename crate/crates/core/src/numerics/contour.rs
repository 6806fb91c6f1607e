//! Argument-principle root counting on rectangles and complete root
//! localization by recursive subdivision.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::sync::Mutex;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::roots::{double_root_residuals, newton, SpectralFunction};
use crate::error::{Result, SpectralError};

/// Axis-aligned rectangle `[lo.re, hi.re] × [lo.im, hi.im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub lo: Complex64,
    pub hi: Complex64,
}

impl Rect {
    pub fn new(lo: Complex64, hi: Complex64) -> Self {
        Self {
            lo: Complex64::new(lo.re.min(hi.re), lo.im.min(hi.im)),
            hi: Complex64::new(lo.re.max(hi.re), lo.im.max(hi.im)),
        }
    }

    pub fn width(&self) -> f64 {
        self.hi.re - self.lo.re
    }

    pub fn height(&self) -> f64 {
        self.hi.im - self.lo.im
    }

    pub fn center(&self) -> Complex64 {
        (self.lo + self.hi) * 0.5
    }

    pub fn diameter(&self) -> f64 {
        (self.hi - self.lo).norm()
    }

    pub fn contains(&self, z: Complex64, slack: f64) -> bool {
        z.re >= self.lo.re - slack
            && z.re <= self.hi.re + slack
            && z.im >= self.lo.im - slack
            && z.im <= self.hi.im + slack
    }

    /// Counter-clockwise corners starting at `lo`.
    pub fn corners(&self) -> [Complex64; 4] {
        [
            self.lo,
            Complex64::new(self.hi.re, self.lo.im),
            self.hi,
            Complex64::new(self.lo.re, self.hi.im),
        ]
    }

    /// Splits across the longer side at `fraction` of its length.
    pub fn split(&self, fraction: f64) -> (Rect, Rect) {
        if self.width() >= self.height() {
            let x = self.lo.re + fraction * self.width();
            (
                Rect::new(self.lo, Complex64::new(x, self.hi.im)),
                Rect::new(Complex64::new(x, self.lo.im), self.hi),
            )
        } else {
            let y = self.lo.im + fraction * self.height();
            (
                Rect::new(self.lo, Complex64::new(self.hi.re, y)),
                Rect::new(Complex64::new(self.lo.re, y), self.hi),
            )
        }
    }
}

fn phase_step(from: Complex64, to: Complex64) -> f64 {
    (to / from).arg()
}

fn winding_from_total(total: f64, near: Complex64) -> Result<usize> {
    let w = total / (2.0 * PI);
    let n = w.round();
    if (w - n).abs() > 0.2 || n < 0.0 {
        return Err(SpectralError::RootOnContour { near });
    }
    Ok(n as usize)
}

/// Winding number of `f` around `rect` from `samples_per_edge` uniformly
/// spaced samples per side. Refuses to alias: any phase increment above π/2
/// between neighbouring samples is reported as `InsufficientSampling`.
pub fn count_roots_in_contour<F>(f: F, rect: Rect, samples_per_edge: usize) -> Result<usize>
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    let n = samples_per_edge.max(1);
    let corners = rect.corners();
    let mut pts = Vec::with_capacity(4 * n + 1);
    for side in 0..4 {
        let (a, b) = (corners[side], corners[(side + 1) % 4]);
        for k in 0..n {
            pts.push(a + (b - a) * (k as f64 / n as f64));
        }
    }
    pts.push(corners[0]);
    let vals: Vec<Complex64> = pts.par_iter().map(|&z| f(z)).collect();
    for (z, v) in pts.iter().zip(&vals) {
        if v.norm() == 0.0 {
            return Err(SpectralError::RootOnContour { near: *z });
        }
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(SpectralError::NonFiniteState { t: z.re });
        }
    }
    let mut total = 0.0;
    for k in 0..pts.len() - 1 {
        let d = phase_step(vals[k], vals[k + 1]);
        if d.abs() > FRAC_PI_2 {
            return Err(SpectralError::InsufficientSampling {
                jump: d,
                from: pts[k],
                to: pts[k + 1],
            });
        }
        total += d;
    }
    winding_from_total(total, rect.center())
}

/// Settings for adaptive counting and root localization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourOptions {
    /// Initial samples per side before adaptive refinement.
    pub initial_samples: usize,
    /// Largest accepted phase increment between neighbouring samples.
    pub max_phase_step: f64,
    /// Maximum number of bisections of a single sample interval.
    pub max_depth: usize,
    /// Bisection levels on which an accepted increment is still confirmed
    /// by a midpoint sample, guarding against a full turn hidden between
    /// two samples.
    pub verify_levels: usize,
    /// Newton tolerance relative to `max(1, |z|)`.
    pub root_rel_tol: f64,
    /// Rectangles holding several roots are treated as one multiple root
    /// once their diameter drops below `min_rel_size * max(1, |center|)`.
    pub min_rel_size: f64,
}

impl Default for ContourOptions {
    fn default() -> Self {
        Self {
            initial_samples: 24,
            max_phase_step: FRAC_PI_4,
            max_depth: 22,
            verify_levels: 2,
            root_rel_tol: 1e-11,
            min_rel_size: 1e-7,
        }
    }
}

type Key = (u64, u64);

fn key(z: Complex64) -> Key {
    (z.re.to_bits(), z.im.to_bits())
}

/// Locates all roots of `func(·; p)` inside a rectangle by the argument
/// principle and recursive subdivision, with a cache of phase samples shared
/// between neighbouring sub-rectangles.
pub struct RootLocator<'a, S: SpectralFunction + ?Sized> {
    func: &'a S,
    p: f64,
    opts: ContourOptions,
    cache: Mutex<HashMap<Key, Complex64>>,
}

impl<'a, S: SpectralFunction + ?Sized> RootLocator<'a, S> {
    pub fn new(func: &'a S, p: f64, opts: ContourOptions) -> Self {
        Self {
            func,
            p,
            opts,
            cache: Mutex::new(HashMap::new()),
        }
    }

    fn eval(&self, z: Complex64) -> Result<Complex64> {
        if let Some(v) = self.cache.lock().unwrap().get(&key(z)) {
            return Ok(*v);
        }
        let v = self.func.coarse_value(z, self.p)?;
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(SpectralError::NonFiniteState { t: z.re });
        }
        self.cache.lock().unwrap().insert(key(z), v);
        Ok(v)
    }

    fn eval_many(&self, pts: &[Complex64]) -> Result<Vec<Complex64>> {
        pts.par_iter().map(|&z| self.eval(z)).collect()
    }

    /// Initial samples are spaced at most half the rectangle's short side
    /// apart, so a root near a long edge cannot slip between them.
    fn edge_phase(&self, a: Complex64, b: Complex64, short_side: f64) -> Result<f64> {
        let dense = if short_side > 0.0 {
            (2.0 * (b - a).norm() / short_side).ceil().min(4096.0) as usize
        } else {
            0
        };
        let n = self.opts.initial_samples.max(2).max(dense);
        let pts: Vec<Complex64> = (0..=n)
            .map(|k| {
                if k == n {
                    b
                } else {
                    a + (b - a) * (k as f64 / n as f64)
                }
            })
            .collect();
        let vals = self.eval_many(&pts)?;
        if self.opts.verify_levels > 0 {
            let mids: Vec<Complex64> = pts.windows(2).map(|w| (w[0] + w[1]) * 0.5).collect();
            self.eval_many(&mids)?;
        }
        let mut total = 0.0;
        for k in 0..n {
            total += self.refine(pts[k], vals[k], pts[k + 1], vals[k + 1], 0)?;
        }
        Ok(total)
    }

    fn refine(
        &self,
        za: Complex64,
        fa: Complex64,
        zb: Complex64,
        fb: Complex64,
        depth: usize,
    ) -> Result<f64> {
        if fa.norm() == 0.0 {
            return Err(SpectralError::RootOnContour { near: za });
        }
        let d = phase_step(fa, fb);
        let small = d.abs() <= self.opts.max_phase_step;
        if small && depth >= self.opts.verify_levels {
            return Ok(d);
        }
        if depth >= self.opts.max_depth {
            return Err(SpectralError::RootOnContour {
                near: (za + zb) * 0.5,
            });
        }
        let zm = (za + zb) * 0.5;
        let fm = self.eval(zm)?;
        if small {
            let (d1, d2) = (phase_step(fa, fm), phase_step(fm, fb));
            let limit = self.opts.max_phase_step;
            if d1.abs() <= limit && d2.abs() <= limit && (d1 + d2 - d).abs() < 1e-6 {
                return Ok(d);
            }
        }
        Ok(self.refine(za, fa, zm, fm, depth + 1)? + self.refine(zm, fm, zb, fb, depth + 1)?)
    }

    /// Adaptive winding number of the rectangle boundary.
    pub fn count(&self, rect: Rect) -> Result<usize> {
        let c = rect.corners();
        let short = rect.width().min(rect.height());
        let mut total = 0.0;
        for side in 0..4 {
            total += self.edge_phase(c[side], c[(side + 1) % 4], short)?;
        }
        winding_from_total(total, rect.center())
    }

    /// All roots inside `rect`, repeated by multiplicity, sorted by
    /// `(Re, Im)`. Fails with `IncompleteSpectrum` when the located roots do
    /// not account for the winding count.
    pub fn roots(&self, rect: Rect) -> Result<Vec<Complex64>> {
        let total = self.count(rect)?;
        let mut found: Vec<Complex64> = Vec::new();
        let mut stack = vec![(rect, total)];
        while let Some((r, n)) = stack.pop() {
            if n == 0 {
                continue;
            }
            let scale = r.center().norm().max(1.0);
            if n == 1 {
                if let Some(z) = self.polish(r, 1)? {
                    found.push(z);
                    continue;
                }
            } else if r.diameter() < self.opts.min_rel_size * scale {
                if let Some(z) = self.polish(r, n)? {
                    found.extend(std::iter::repeat_n(z, n));
                    continue;
                }
                return Err(SpectralError::IncompleteSpectrum {
                    found: found.len(),
                    expected: total,
                    lower: r.lo,
                    upper: r.hi,
                });
            }
            if r.diameter() < 1e-14 * scale {
                return Err(SpectralError::IncompleteSpectrum {
                    found: found.len(),
                    expected: total,
                    lower: r.lo,
                    upper: r.hi,
                });
            }
            // A multiple root blurred by evaluation noise cannot be split;
            // accept it as a cluster if the fine jet confirms the multiplicity.
            let (a, b, na, nb) = match self.split_counted(r, n) {
                Ok(split) => split,
                Err(e) if n >= 2 => match self.polish(r, n)? {
                    Some(z) if self.is_multiple(z, scale)? => {
                        found.extend(std::iter::repeat_n(z, n));
                        continue;
                    }
                    _ => return Err(e),
                },
                Err(e) => return Err(e),
            };
            stack.push((b, nb));
            stack.push((a, na));
        }
        if found.len() != total {
            return Err(SpectralError::IncompleteSpectrum {
                found: found.len(),
                expected: total,
                lower: rect.lo,
                upper: rect.hi,
            });
        }
        sort_spectrum(&mut found);
        Ok(found)
    }

    fn split_counted(&self, r: Rect, n: usize) -> Result<(Rect, Rect, usize, usize)> {
        const FRACTIONS: [f64; 6] = [0.4631, 0.5417, 0.3877, 0.6213, 0.4129, 0.5893];
        let mut last_err = None;
        for f in FRACTIONS {
            let (a, b) = r.split(f);
            match (self.count(a), self.count(b)) {
                (Ok(na), Ok(nb)) if na + nb == n => return Ok((a, b, na, nb)),
                (Ok(na), Ok(nb)) => {
                    last_err = Some(SpectralError::IncompleteSpectrum {
                        found: na + nb,
                        expected: n,
                        lower: r.lo,
                        upper: r.hi,
                    })
                }
                (Err(e), _) | (_, Err(e)) => last_err = Some(e),
            }
        }
        Err(last_err.unwrap())
    }

    fn is_multiple(&self, z: Complex64, scale: f64) -> Result<bool> {
        let (rf, rdf) = double_root_residuals(&self.func.jet(z, self.p, 2)?);
        Ok(rf.max(rdf) <= 1e-4 * scale)
    }

    /// Newton (modified for multiplicity `m`) from the rectangle centre;
    /// returns the root only if it lands inside the rectangle.
    fn polish(&self, r: Rect, m: usize) -> Result<Option<Complex64>> {
        let z0 = r.center();
        let tol = self.opts.root_rel_tol * z0.norm().max(1.0);
        let slack = 1e-9 * z0.norm().max(1.0);
        if m == 1 {
            return Ok(match newton(self.func, self.p, z0, tol, 60) {
                Ok(res) if r.contains(res.root, slack) => Some(res.root),
                _ => None,
            });
        }
        let mut z = z0;
        for _ in 0..60 {
            let j = self.func.jet(z, self.p, 1)?;
            if j[1].norm() == 0.0 {
                return Ok(Some(z));
            }
            let step = j[0] / j[1] * m as f64;
            z -= step;
            if step.norm() <= tol * 1e3 {
                return Ok(if r.contains(z, r.diameter()) {
                    Some(z)
                } else {
                    None
                });
            }
        }
        Ok(if r.contains(z, r.diameter()) {
            Some(z)
        } else {
            None
        })
    }
}

/// Deterministic spectral ordering: ascending real part, then imaginary part.
pub fn sort_spectrum(v: &mut [Complex64]) {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}
