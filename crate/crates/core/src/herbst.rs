//! The Herbst box `−∂²_y − i b³ y` on `[−1, 1]` with Dirichlet walls, solved
//! through its Airy characteristic determinant, and the Squire equation
//! `iε∂² + y` obtained from it by `b³ = 1/ε`, `E = i b λ`.
//!
//! Energies `E` are those of the unscaled box on `[−b, b]`; the interpolation
//! model at `ν = −1` has `μ = b²E`.

use std::f64::consts::{FRAC_PI_3, FRAC_PI_6, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::airy::{airy_pair_scaled, airy_zeros, AiryRotation};
use crate::error::{Result, SpectralError};
use crate::numerics::branches::{track_branches, TrackOptions};
use crate::numerics::contour::ContourOptions;
use crate::numerics::roots::{find_double_root, ExceptionalPoint, SpectralFunction};
use crate::numerics::spectrum::{lowest_eigenvalues, StripSearch};
use crate::sweep::{EigenvalueKind, EnergyView, SweepResult};

/// `e^{iπ/3}`.
const OMEGA: Complex64 = Complex64::new(0.5, 0.866_025_403_784_438_6);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HerbstParams {
    pub b: f64,
}

impl HerbstParams {
    pub fn new(b: f64) -> Result<Self> {
        if !(b > 0.0 && b.is_finite()) {
            return Err(SpectralError::InvalidParameter(format!(
                "b = {b} must be positive"
            )));
        }
        Ok(Self { b })
    }
}

/// `ξ(y) = e^{iπ/3}(−i b y − E)`.
pub fn xi(y: f64, b: f64, e: Complex64) -> Complex64 {
    OMEGA * (Complex64::new(0.0, -b * y) - e)
}

/// Derivatives in `E` of `Ai(k ξ(E))` up to `order`, from `Ai″ = w Ai`,
/// all carrying the common factor `e^{−ζ}` returned alongside.
fn rotated_jet(
    rot: AiryRotation,
    xi: Complex64,
    order: usize,
) -> Result<(Vec<Complex64>, Complex64)> {
    let k = rot.factor();
    let w = k * xi;
    let s = airy_pair_scaled(w)?;
    let (a, d) = (s.ai, s.dai);
    let kappa = -k * OMEGA;
    let mut out = vec![a];
    if order >= 1 {
        out.push(kappa * d);
    }
    if order >= 2 {
        out.push(kappa * kappa * w * a);
    }
    if order >= 3 {
        out.push(kappa * kappa * kappa * (a + w * d));
    }
    Ok((out, s.zeta))
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn product_jet(f: &[Complex64], g: &[Complex64], order: usize) -> Vec<Complex64> {
    (0..=order)
        .map(|m| (0..=m).map(|k| f[k] * g[m - k] * binomial(m, k)).sum())
        .collect()
}

/// `[Δ, ∂_E Δ, …]` for `Δ(E) = Ai(ξ₊)Ai(q²ξ₋) − Ai(ξ₋)Ai(q²ξ₊)`,
/// `ξ± = ξ(±1)`, `order ≤ 3`.
///
/// With `A_j(z) = Ai(qʲz)` and `D_jk = A_j(ξ₊)A_k(ξ₋) − A_j(ξ₋)A_k(ξ₊)`,
/// `A₀ + qA₁ + q²A₂ = 0` gives `Δ = D₀₂ = −q D₁₂ = −q² D₀₁`. The pair with the
/// smallest products is used, which avoids cancelling exponentially large
/// terms. `Δ(Ē) = conj Δ(E)` holds exactly, so the imaginary part is dropped
/// on the real axis.
pub fn herbst_jet(e: Complex64, b: f64, order: usize) -> Result<Vec<Complex64>> {
    if order > 3 {
        return Err(SpectralError::InvalidParameter(
            "Herbst jets stop at third order".into(),
        ));
    }
    let (xp, xm) = (xi(1.0, b, e), xi(-1.0, b, e));
    let rots = [AiryRotation::Identity, AiryRotation::Q, AiryRotation::Q2];
    let mut plus = Vec::with_capacity(3);
    let mut minus = Vec::with_capacity(3);
    for rot in rots {
        plus.push(rotated_jet(rot, xp, order)?);
        minus.push(rotated_jet(rot, xm, order)?);
    }
    // Products are formed in log-scaled form: the individual Airy values
    // overflow long before the determinant does.
    let log_size = |f: &(Vec<Complex64>, Complex64), g: &(Vec<Complex64>, Complex64)| {
        (f.0[0] * g.0[0]).norm().ln() - (f.1 + g.1).re
    };
    let size =
        |j: usize, k: usize| log_size(&plus[j], &minus[k]).max(log_size(&minus[j], &plus[k]));
    let q = AiryRotation::Q.factor();
    let candidates = [(0, 2, Complex64::new(1.0, 0.0)), (1, 2, -q), (0, 1, -q * q)];
    let &(j, k, factor) = candidates
        .iter()
        .min_by(|a, b| size(a.0, a.1).total_cmp(&size(b.0, b.1)))
        .expect("three candidates");
    let left_scale = (-plus[j].1 - minus[k].1).exp();
    let right_scale = (-minus[j].1 - plus[k].1).exp();
    let left = product_jet(&plus[j].0, &minus[k].0, order);
    let right = product_jet(&minus[j].0, &plus[k].0, order);
    let jet: Vec<Complex64> = left
        .into_iter()
        .zip(right)
        .map(|(l, r)| {
            let mut d = factor * (l * left_scale - r * right_scale);
            if e.im == 0.0 {
                d.im = 0.0;
            }
            d
        })
        .collect();
    if !jet.iter().all(|d| d.re.is_finite() && d.im.is_finite()) {
        return Err(SpectralError::AccuracyLoss { z: e });
    }
    Ok(jet)
}

pub fn herbst_determinant(e: Complex64, b: f64) -> Result<Complex64> {
    Ok(herbst_jet(e, b, 0)?[0])
}

/// The same determinant built from the alternative solution pair
/// `Ai(ξ), Ai(qξ)`; differs from [`herbst_determinant`] by a nonvanishing
/// factor, so the roots coincide.
pub fn herbst_determinant_alt(e: Complex64, b: f64) -> Result<Complex64> {
    let (xp, xm) = (xi(1.0, b, e), xi(-1.0, b, e));
    let a = |r: AiryRotation, x| r.eval(x).map(|v| v.0);
    Ok(a(AiryRotation::Identity, xp)? * a(AiryRotation::Q, xm)?
        - a(AiryRotation::Identity, xm)? * a(AiryRotation::Q, xp)?)
}

/// `Δ(E; b)` as a spectral family in the box parameter `b`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct HerbstFamily;

impl SpectralFunction for HerbstFamily {
    fn jet(&self, z: Complex64, p: f64, order: usize) -> Result<Vec<Complex64>> {
        herbst_jet(z, p, order)
    }
}

/// The numerical-range strip `Re E ≥ π²/(4b²)`, `|Im E| ≤ b`.
pub fn search_strip(b: f64, count: usize) -> StripSearch {
    let re_min = PI * PI / (4.0 * b * b) * 0.98 - 0.05;
    let level = count as f64 * PI / (2.0 * b);
    StripSearch {
        re_min,
        im_max: 1.01 * b + 0.05,
        initial_re_max: re_min + 0.5 + 1.1 * level * level + b,
        max_extensions: 24,
    }
}

/// The `count` eigenvalues `E` of lowest real part, sorted by `(Re, Im)`,
/// certified complete by the argument principle.
pub fn herbst_spectrum(b: f64, count: usize) -> Result<Vec<Complex64>> {
    HerbstParams::new(b)?;
    if count == 0 {
        return Err(SpectralError::InvalidParameter(
            "count must be at least 1".into(),
        ));
    }
    lowest_eigenvalues(
        &HerbstFamily,
        b,
        &search_strip(b, count),
        count,
        ContourOptions::default(),
    )
}

/// `Δ(μ/b²; b)` in the rescaled variable `μ = b²E`, in which the high
/// levels `π²k²/4` do not move with `b`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct HerbstMuFamily;

impl SpectralFunction for HerbstMuFamily {
    fn jet(&self, z: Complex64, p: f64, order: usize) -> Result<Vec<Complex64>> {
        let inv = 1.0 / (p * p);
        let mut jet = herbst_jet(z * inv, p, order)?;
        let mut factor = 1.0;
        for d in jet.iter_mut().skip(1) {
            factor *= inv;
            *d *= factor;
        }
        Ok(jet)
    }
}

/// Tracks the `levels` lowest eigenvalues at `b_grid[0]` across the grid,
/// following `μ = b²E`.
pub fn b_sweep(b_grid: &[f64], levels: usize, opts: &TrackOptions) -> Result<SweepResult> {
    let b0 = *b_grid
        .first()
        .ok_or_else(|| SpectralError::InvalidParameter("empty b grid".into()))?;
    for &b in b_grid {
        HerbstParams::new(b)?;
    }
    let seeds: Vec<Complex64> = herbst_spectrum(b0, levels)?
        .into_iter()
        .take(levels)
        .map(|e| e * (b0 * b0))
        .collect();
    let tracked = track_branches(&HerbstMuFamily, "b", b_grid, &seeds, opts)?;
    let kind = EigenvalueKind::BoxMu {
        view: EnergyView::Energy,
    };
    let mut result = SweepResult::new("herbst", "b", kind, b_grid.to_vec(), tracked);
    result.record_tolerances(1e-10, 0.0, opts);
    result.metadata.insert(
        "determinant".into(),
        "airy, A1=Ai(xi), A2=Ai(q^2 xi)".into(),
    );
    Ok(result)
}

/// Leading-order crossing: `b_n ≈ |s_n|√3/2`, `E_n ≈ |s_n|/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingEstimate {
    pub n: usize,
    pub b: f64,
    pub e: f64,
}

pub fn crossing_estimate(n: usize) -> Result<CrossingEstimate> {
    let s = airy_zeros(n)?[n - 1].abs();
    Ok(CrossingEstimate {
        n,
        b: s * 3f64.sqrt() / 2.0,
        e: s / 2.0,
    })
}

/// Which of `A(ξ₊) = ±A(ξ₋)` (for both `A = Ai(ξ)` and `A = Ai(q²ξ)`) holds
/// at an exceptional point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CrossingSign {
    Plus,
    Minus,
    Neither,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HerbstCrossing {
    pub n: usize,
    pub estimate: CrossingEstimate,
    /// `parameter` is `b`, `eigenvalue` is `E`.
    pub point: ExceptionalPoint,
    pub sign: CrossingSign,
    /// `max_A |A(ξ₊) − A(ξ₋)| / |A(ξ₊)|`.
    pub plus_residual: f64,
    /// `max_A |A(ξ₊) + A(ξ₋)| / |A(ξ₊)|`.
    pub minus_residual: f64,
}

/// The `n`-th real-to-complex transition: a double root of `Δ` in `(E, b)`
/// seeded by [`crossing_estimate`].
pub fn crossing_exact(n: usize, tol: f64) -> Result<HerbstCrossing> {
    let est = crossing_estimate(n)?;
    let point = refine_crossing(est, tol)?;
    let b = point.parameter;
    let e = point.eigenvalue;
    let (xp, xm) = (xi(1.0, b, e), xi(-1.0, b, e));
    let mut plus: f64 = 0.0;
    let mut minus: f64 = 0.0;
    for rot in [AiryRotation::Identity, AiryRotation::Q2] {
        let ap = rot.eval(xp)?.0;
        let am = rot.eval(xm)?.0;
        plus = plus.max((ap - am).norm() / ap.norm());
        minus = minus.max((ap + am).norm() / ap.norm());
    }
    let threshold = 1e-6;
    let sign = if plus <= threshold {
        CrossingSign::Plus
    } else if minus <= threshold {
        CrossingSign::Minus
    } else {
        CrossingSign::Neither
    };
    Ok(HerbstCrossing {
        n,
        estimate: est,
        point,
        sign,
        plus_residual: plus,
        minus_residual: minus,
    })
}

/// The estimate can sit well off the exact point for small `n`; walk the
/// seed in `b` toward the coalescence of the two real levels nearest to the
/// estimated energy before the double-root solve.
fn refine_crossing(est: CrossingEstimate, tol: f64) -> Result<ExceptionalPoint> {
    let direct = find_double_root(&HerbstFamily, Complex64::new(est.e, 0.0), est.b, tol);
    if let Ok(ep) = direct {
        if ep.eigenvalue.im.abs() <= 1e-6 * ep.eigenvalue.norm().max(1.0) {
            return Ok(ep);
        }
    }
    // Continue the real pair around the estimate upward in b until it merges.
    let count = 2 * est.n + 2;
    let mut b = est.b * 0.8;
    let mut last: Option<(f64, Complex64, Complex64)> = None;
    while b < 2.0 * est.b + 2.0 {
        let eigs = herbst_spectrum(b, count)?;
        let real: Vec<Complex64> = eigs
            .iter()
            .copied()
            .filter(|z| {
                crate::numerics::branches::classify(*z)
                    == crate::numerics::branches::SegmentLabel::Real
            })
            .collect();
        let pair = real
            .windows(2)
            .min_by(|x, y| {
                let dx = ((x[0].re + x[1].re) * 0.5 - est.e).abs();
                let dy = ((y[0].re + y[1].re) * 0.5 - est.e).abs();
                dx.total_cmp(&dy)
            })
            .map(|w| (w[0], w[1]));
        match (pair, last) {
            (Some((z1, z2)), _) => last = Some((b, z1, z2)),
            (None, Some((bl, z1, z2))) => {
                return find_double_root(&HerbstFamily, (z1 + z2) * 0.5, bl, tol);
            }
            (None, None) => {}
        }
        if let Some((bl, z1, z2)) = last {
            if bl == b && (z2 - z1).norm() < 0.05 * z1.norm().max(1.0) {
                return find_double_root(&HerbstFamily, (z1 + z2) * 0.5, b, tol);
            }
        }
        b += 0.05 * est.b;
    }
    direct
}

/// `(4/3π)(2b/√3)^{3/2} + ½`; scales as `b^{3/2}`, half the scaling dimension
/// of the supremum bound at `ν = −1`.
pub fn lowest_real_mode_bound_ka(b: f64) -> f64 {
    4.0 / (3.0 * PI) * (2.0 * b / 3f64.sqrt()).powf(1.5) + 0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquireParams {
    pub epsilon: f64,
    pub alpha_tilde: Option<f64>,
    pub reynolds: Option<f64>,
}

impl SquireParams {
    pub fn from_epsilon(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(SpectralError::InvalidParameter(format!(
                "epsilon = {epsilon} must be positive"
            )));
        }
        Ok(Self {
            epsilon,
            alpha_tilde: None,
            reynolds: None,
        })
    }

    /// `ε = 1/(α̃ R)`.
    pub fn from_flow(alpha_tilde: f64, reynolds: f64) -> Result<Self> {
        if !(alpha_tilde >= 1.0 && reynolds > 0.0 && reynolds.is_finite()) {
            return Err(SpectralError::InvalidParameter(
                "need alpha_tilde >= 1 and a positive Reynolds number".into(),
            ));
        }
        Ok(Self {
            epsilon: 1.0 / (alpha_tilde * reynolds),
            alpha_tilde: Some(alpha_tilde),
            reynolds: Some(reynolds),
        })
    }

    /// `b = ε^{−1/3}`.
    pub fn box_size(&self) -> f64 {
        self.epsilon.powf(-1.0 / 3.0)
    }
}

/// `λ = −iE/b`, `ε = b^{−3}`.
pub fn squire_from_herbst(e: Complex64, b: f64) -> (Complex64, f64) {
    (Complex64::new(e.im / b, -e.re / b), b.powi(-3))
}

/// `b = ε^{−1/3}`, `E = i b λ`.
pub fn herbst_from_squire(lambda: Complex64, epsilon: f64) -> (Complex64, f64) {
    let b = epsilon.powf(-1.0 / 3.0);
    (Complex64::new(-b * lambda.im, b * lambda.re), b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum YSegment {
    PlusBranch,
    MinusBranch,
    VerticalRay,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YClassification {
    pub segment: YSegment,
    pub distance: f64,
}

fn segment_distance(z: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let t = ((z - a).re * ab.re + (z - a).im * ab.im) / ab.norm_sqr();
    (z - (a + ab * t.clamp(0.0, 1.0))).norm()
}

/// Nearest of the segments `[1, −i/√3]`, `[−1, −i/√3]`, `[−i/√3, −i∞)` and
/// the distance to it; ties go to the vertical ray, then the plus branch.
#[allow(non_snake_case)]
pub fn classify_Y(lambda: Complex64) -> YClassification {
    let apex = Complex64::new(0.0, -1.0 / 3f64.sqrt());
    let ray = if lambda.im <= apex.im {
        lambda.re.abs()
    } else {
        (lambda - apex).norm()
    };
    let plus = segment_distance(lambda, Complex64::new(1.0, 0.0), apex);
    let minus = segment_distance(lambda, Complex64::new(-1.0, 0.0), apex);
    let mut best = YClassification {
        segment: YSegment::VerticalRay,
        distance: ray,
    };
    for (segment, distance) in [(YSegment::PlusBranch, plus), (YSegment::MinusBranch, minus)] {
        if distance < best.distance {
            best = YClassification { segment, distance };
        }
    }
    best
}

/// `−iε π² n²/4`, the `n`-th vertical-ray eigenvalue for small `ε`.
pub fn vertical_ray_asymptote(n: usize, epsilon: f64) -> Complex64 {
    let n = n as f64;
    Complex64::new(0.0, -epsilon * PI * PI * n * n / 4.0)
}

/// `±1 ± ε^{1/3} s_n e^{±iπ/6}`, the `n`-th eigenvalue on the plus or minus
/// branch for small `ε`.
pub fn branch_asymptote(n: usize, epsilon: f64, plus: bool) -> Result<Complex64> {
    let s = airy_zeros(n)?[n - 1];
    let e3 = epsilon.cbrt();
    Ok(if plus {
        1.0 + Complex64::from_polar(e3 * s, FRAC_PI_6)
    } else {
        -1.0 - Complex64::from_polar(e3 * s, -FRAC_PI_6)
    })
}

/// `ε_n = (2/(|s_n|√3))³`, the viscosity at which the `n`-th pair of
/// vertical-ray modes leaves the ray.
pub fn crossing_epsilon(n: usize) -> Result<f64> {
    let s = airy_zeros(n)?[n - 1].abs();
    Ok((2.0 / (s * 3f64.sqrt())).powi(3))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquireMode {
    pub lambda: Complex64,
    pub classification: YClassification,
}

/// Squire eigenvalues from the Herbst spectrum at `b = ε^{−1/3}`.
pub fn squire_spectrum(params: &SquireParams, count: usize) -> Result<Vec<SquireMode>> {
    let b = params.box_size();
    Ok(herbst_spectrum(b, count)?
        .into_iter()
        .map(|e| {
            let lambda = squire_from_herbst(e, b).0;
            SquireMode {
                lambda,
                classification: classify_Y(lambda),
            }
        })
        .collect())
}

/// Angle of the branch segments, used for the Y geometry in rescaled views.
pub const BRANCH_ANGLE: f64 = FRAC_PI_3;
