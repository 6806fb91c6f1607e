//! The spherically symmetric α²-dynamo operator for one angular mode `l`,
//! solved by shooting in the variables `f = rφ` from a Frobenius seed near
//! the origin to the surface `r = 1`.
//!
//! With `L = l(l+1)/r²` the eigenvalue problem reads
//!
//! ```text
//! f₁″ = (L + λ) f₁ − α f₂
//! f₂″ = (L + λ) f₂ + (α f₁′)′ − α L f₁ = (L + λ − α²) f₂ + α′ f₁′ + α λ f₁
//! ```

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bessel::spherical_jn_zeros;
use crate::error::{Result, SpectralError};
use crate::interp::ShootingTolerances;
use crate::numerics::branches::{track_branches, TrackOptions};
use crate::numerics::contour::ContourOptions;
use crate::numerics::ivp::DormandPrince;
use crate::numerics::roots::SpectralFunction;
use crate::numerics::spectrum::{lowest_eigenvalues, StripSearch};
use crate::sweep::{EigenvalueKind, SweepResult};

/// Default start radius for the Frobenius seeds.
pub const DEFAULT_R0: f64 = 1e-4;

/// `α(r) = C Σ cₖ rᵏ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaProfile {
    pub coefficients: Vec<f64>,
    pub scale: f64,
}

impl AlphaProfile {
    pub fn new(coefficients: Vec<f64>, scale: f64) -> Result<Self> {
        if coefficients.is_empty()
            || !coefficients.iter().all(|c| c.is_finite())
            || !scale.is_finite()
        {
            return Err(SpectralError::InvalidParameter(
                "alpha profile needs finite coefficients and scale".into(),
            ));
        }
        Ok(Self {
            coefficients,
            scale,
        })
    }

    /// `C (1 − 26.09 r² + 53.64 r³ − 28.22 r⁴)`.
    pub fn fig1(scale: f64) -> Self {
        Self {
            coefficients: vec![1.0, 0.0, -26.09, 53.64, -28.22],
            scale,
        }
    }

    pub fn constant(alpha0: f64) -> Self {
        Self {
            coefficients: vec![1.0],
            scale: alpha0,
        }
    }

    pub fn with_scale(&self, scale: f64) -> Self {
        Self {
            coefficients: self.coefficients.clone(),
            scale,
        }
    }

    /// Coefficients one per line, lowest degree first; blank lines and
    /// `#` comments are skipped.
    pub fn from_coefficient_text(text: &str, scale: f64) -> Result<Self> {
        let coefficients = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| {
                l.parse::<f64>().map_err(|e| {
                    SpectralError::InvalidParameter(format!("bad coefficient {l:?}: {e}"))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        Self::new(coefficients, scale)
    }

    /// `(α(r), α′(r))` by Horner's rule.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        let mut a = 0.0;
        let mut d = 0.0;
        for &c in self.coefficients.iter().rev() {
            d = d * r + a;
            a = a * r + c;
        }
        (self.scale * a, self.scale * d)
    }

    /// `(max |α|, max |α′|)` over `[0, 1]`, sampled.
    pub fn sup_norms(&self) -> (f64, f64) {
        (0..=1000).fold((0.0f64, 0.0f64), |(ma, md), k| {
            let (a, d) = self.eval(k as f64 / 1000.0);
            (ma.max(a.abs()), md.max(d.abs()))
        })
    }
}

pub fn alpha_eval(r: f64, profile: &AlphaProfile) -> (f64, f64) {
    profile.eval(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DynamoBc {
    /// `φ(1) = 0`.
    Idealized,
    /// `∂_r φ₁ + (l+1)φ₁/r = 0`, `φ₂ = 0` at `r = 1`.
    Realistic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamoParams {
    pub l: usize,
    pub profile: AlphaProfile,
    pub bc: DynamoBc,
}

impl DynamoParams {
    pub fn new(l: usize, profile: AlphaProfile, bc: DynamoBc) -> Result<Self> {
        if l == 0 {
            return Err(SpectralError::InvalidParameter(
                "l must be at least 1".into(),
            ));
        }
        let profile = AlphaProfile::new(profile.coefficients, profile.scale)?;
        Ok(Self { l, profile, bc })
    }

    pub fn with_scale(&self, scale: f64) -> Self {
        Self {
            profile: self.profile.with_scale(scale),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamoState {
    pub f1: Complex64,
    pub df1: Complex64,
    pub f2: Complex64,
    pub df2: Complex64,
}

impl DynamoState {
    pub fn to_array(self) -> [Complex64; 4] {
        [self.f1, self.df1, self.f2, self.df2]
    }

    pub fn from_slice(s: &[Complex64]) -> Self {
        Self {
            f1: s[0],
            df1: s[1],
            f2: s[2],
            df2: s[3],
        }
    }
}

/// Derivative of `(f₁, f₁′, f₂, f₂′)` in `r`.
pub fn dynamo_rhs(
    r: f64,
    state: &DynamoState,
    lambda: Complex64,
    params: &DynamoParams,
) -> Result<DynamoState> {
    if r == 0.0 {
        return Err(SpectralError::RadiusAtZero);
    }
    let mut out = [Complex64::new(0.0, 0.0); 4];
    rhs_block(
        r,
        &state.to_array(),
        None,
        lambda,
        params.l,
        &params.profile,
        0,
        &mut out,
    );
    Ok(DynamoState::from_slice(&out))
}

/// Right-hand side for the `m`-th λ-derivative block, given block `m − 1`.
#[allow(clippy::too_many_arguments)]
fn rhs_block(
    r: f64,
    s: &[Complex64],
    prev: Option<&[Complex64]>,
    lambda: Complex64,
    l: usize,
    profile: &AlphaProfile,
    m: usize,
    out: &mut [Complex64],
) {
    let big_l = (l * (l + 1)) as f64 / (r * r);
    let (a, da) = profile.eval(r);
    out[0] = s[1];
    out[1] = (big_l + lambda) * s[0] - a * s[2];
    out[2] = s[3];
    out[3] = (big_l + lambda - a * a) * s[2] + da * s[1] + a * lambda * s[0];
    if let Some(p) = prev {
        let mf = m as f64;
        out[1] += mf * p[0];
        out[3] += mf * (p[2] + a * p[0]);
    }
}

/// Seeds `A = (r₀^{l+1}, (l+1)r₀^l, 0, 0)` and `B = (0, 0, r₀^{l+1}, (l+1)r₀^l)`.
pub fn regular_solutions_seed(r0: f64, l: usize) -> [DynamoState; 2] {
    let f = r0.powi(l as i32 + 1);
    let df = (l + 1) as f64 * r0.powi(l as i32);
    let z = Complex64::new(0.0, 0.0);
    [
        DynamoState {
            f1: f.into(),
            df1: df.into(),
            f2: z,
            df2: z,
        },
        DynamoState {
            f1: z,
            df1: z,
            f2: f.into(),
            df2: df.into(),
        },
    ]
}

fn residuals(s: &[Complex64], l: usize, bc: DynamoBc) -> (Complex64, Complex64) {
    match bc {
        DynamoBc::Idealized => (s[0], s[2]),
        DynamoBc::Realistic => (s[1] + s[0] * l as f64, s[2]),
    }
}

/// State layout: seed-major, then derivative order, then the four components.
fn integrate_seeds(
    lambda: Complex64,
    params: &DynamoParams,
    r0: f64,
    order: usize,
    tol: ShootingTolerances,
) -> Result<Vec<Complex64>> {
    let block = 4 * (order + 1);
    let seeds = regular_solutions_seed(r0, params.l);
    let mut y0 = vec![Complex64::new(0.0, 0.0); 2 * block];
    for (i, s) in seeds.iter().enumerate() {
        y0[i * block..i * block + 4].copy_from_slice(&s.to_array());
    }
    let l = params.l;
    let profile = params.profile.clone();
    let rhs = move |r: f64, y: &[Complex64], dy: &mut [Complex64]| {
        for seed in 0..2 {
            let base = seed * block;
            for m in 0..=order {
                let at = base + 4 * m;
                let prev = (m > 0).then(|| &y[at - 4..at]);
                rhs_block(
                    r,
                    &y[at..at + 4],
                    prev,
                    lambda,
                    l,
                    &profile,
                    m,
                    &mut dy[at..at + 4],
                );
            }
        }
    };
    let scale = r0.powi(l as i32 + 1);
    let mut stepper = DormandPrince::new(rhs, r0, y0, tol.rel, tol.abs * scale)?;
    stepper.advance_to(1.0)?;
    Ok(stepper.state().to_vec())
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `[D, ∂_λ D, …]` where `D` is the determinant of the 2×2 matrix of
/// boundary residuals of the two seeds.
pub fn dynamo_jet(
    lambda: Complex64,
    params: &DynamoParams,
    order: usize,
    r0: f64,
    tol: ShootingTolerances,
) -> Result<Vec<Complex64>> {
    if !(r0 > 0.0 && r0 < 1.0) {
        return Err(SpectralError::InvalidParameter(format!(
            "seed radius {r0} outside (0, 1)"
        )));
    }
    let y = integrate_seeds(lambda, params, r0, order, tol)?;
    let block = 4 * (order + 1);
    let res = |seed: usize, m: usize| {
        residuals(
            &y[seed * block + 4 * m..seed * block + 4 * m + 4],
            params.l,
            params.bc,
        )
    };
    let mut jet = Vec::with_capacity(order + 1);
    for m in 0..=order {
        let mut d = Complex64::new(0.0, 0.0);
        for k in 0..=m {
            let (a1, a2) = res(0, k);
            let (b1, b2) = res(1, m - k);
            d += (a1 * b2 - a2 * b1) * binomial(m, k);
        }
        if lambda.im == 0.0 {
            d.im = 0.0;
        }
        jet.push(d);
    }
    Ok(jet)
}

const FINE: ShootingTolerances = ShootingTolerances::FINE;
const COARSE: ShootingTolerances = ShootingTolerances::COARSE;

pub fn dynamo_determinant(lambda: Complex64, params: &DynamoParams) -> Result<Complex64> {
    Ok(dynamo_jet(lambda, params, 0, DEFAULT_R0, FINE)?[0])
}

/// The boundary determinant as a family in the profile scale `C`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamoFamily {
    pub base: DynamoParams,
    pub r0: f64,
    pub fine: ShootingTolerances,
    pub coarse: ShootingTolerances,
}

impl DynamoFamily {
    pub fn new(base: DynamoParams) -> Self {
        Self {
            base,
            r0: DEFAULT_R0,
            fine: FINE,
            coarse: COARSE,
        }
    }
}

impl SpectralFunction for DynamoFamily {
    fn jet(&self, z: Complex64, p: f64, order: usize) -> Result<Vec<Complex64>> {
        dynamo_jet(z, &self.base.with_scale(p), order, self.r0, self.fine)
    }

    fn coarse_value(&self, z: Complex64, p: f64) -> Result<Complex64> {
        Ok(dynamo_jet(z, &self.base.with_scale(p), 0, self.r0, self.coarse)?[0])
    }
}

/// `D(−z)`, so that the growth-dominant eigenvalues become those of lowest
/// real part.
struct Reflected<'a>(&'a DynamoFamily);

impl SpectralFunction for Reflected<'_> {
    fn jet(&self, z: Complex64, p: f64, order: usize) -> Result<Vec<Complex64>> {
        let mut j = self.0.jet(-z, p, order)?;
        for (m, v) in j.iter_mut().enumerate() {
            if m % 2 == 1 {
                *v = -*v;
            }
        }
        Ok(j)
    }

    fn coarse_value(&self, z: Complex64, p: f64) -> Result<Complex64> {
        self.0.coarse_value(-z, p)
    }
}

/// Search strip in `z = −λ`. The growth rate is bounded by
/// `max α²/4 + max |α′|` (with margin); imaginary parts by the coupling
/// strength times the deepest wavenumber searched.
fn search_strip(params: &DynamoParams, count: usize) -> StripSearch {
    let (a, da) = params.profile.sup_norms();
    let top = 0.5 * a * a + 2.0 * da + 1.0;
    let levels = count.div_ceil(2) as f64;
    let k = (levels + 0.5 * params.l as f64 + 1.0) * PI;
    StripSearch {
        re_min: -top,
        im_max: (a + da) * k + 2.0,
        initial_re_max: -top + 1.1 * k * k + a * k + 1.0,
        max_extensions: 24,
    }
}

/// The `count` eigenvalues of largest real part (a conjugate pair cut by
/// `count` is kept whole), by descending real part, the `Im ≥ 0` member of a
/// pair first.
pub fn dynamo_spectrum(params: &DynamoParams, count: usize) -> Result<Vec<Complex64>> {
    dynamo_spectrum_with(params, count, DEFAULT_R0)
}

pub fn dynamo_spectrum_with(
    params: &DynamoParams,
    count: usize,
    r0: f64,
) -> Result<Vec<Complex64>> {
    if count == 0 {
        return Err(SpectralError::InvalidParameter(
            "count must be at least 1".into(),
        ));
    }
    let family = DynamoFamily {
        r0,
        ..DynamoFamily::new(params.clone())
    };
    let z = lowest_eigenvalues(
        &Reflected(&family),
        params.profile.scale,
        &search_strip(params, count),
        count,
        ContourOptions::default(),
    )?;
    let mut lambda: Vec<Complex64> = z.into_iter().map(|z| -z).collect();
    lambda.sort_by(|x, y| y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im)));
    Ok(lambda)
}

/// Tracks the `n_levels` growth-dominant eigenvalues at `c_grid[0]` over the
/// profile scale `C`; level 1 is the most unstable.
pub fn c_sweep(
    params: &DynamoParams,
    c_grid: &[f64],
    n_levels: usize,
    opts: &TrackOptions,
) -> Result<SweepResult> {
    let c0 = *c_grid
        .first()
        .ok_or_else(|| SpectralError::InvalidParameter("empty C grid".into()))?;
    let seeds: Vec<Complex64> = dynamo_spectrum(&params.with_scale(c0), n_levels)?
        .into_iter()
        .take(n_levels)
        .collect();
    let family = DynamoFamily::new(params.clone());
    let mut tracked = track_branches(&family, "C", c_grid, &seeds, opts)?;
    tracked.reverse_levels();
    let mut result = SweepResult::new(
        "dynamo",
        "C",
        EigenvalueKind::Direct,
        c_grid.to_vec(),
        tracked,
    );
    result.record_tolerances(FINE.rel, FINE.abs, opts);
    result.fixed_params.insert("l".into(), params.l as f64);
    result
        .metadata
        .insert("bc".into(), format!("{:?}", params.bc).to_lowercase());
    result.metadata.insert(
        "alpha_coefficients".into(),
        params
            .profile
            .coefficients
            .iter()
            .map(|c| format!("{c:?}"))
            .collect::<Vec<_>>()
            .join(" "),
    );
    result
        .metadata
        .insert("seed_radius".into(), format!("{DEFAULT_R0:e}"));
    Ok(result)
}

/// `(−kₙ² + α₀kₙ, −kₙ² − α₀kₙ)` with `kₙ` the `n`-th zero of `j_l`.
pub fn constant_alpha_oracle(alpha0: f64, l: usize, n: usize) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(SpectralError::InvalidParameter("n starts at 1".into()));
    }
    let k = spherical_jn_zeros(l, n)?[n - 1];
    Ok((-k * k + alpha0 * k, -k * k - alpha0 * k))
}

/// The `n` leading eigenvalues at `α ≡ 0`, where the poloidal and toroidal
/// equations decouple: `−k²` over the zeros of `j_l` (toroidal, and poloidal
/// with Idealized conditions) and of `j_{l−1}` (poloidal, Realistic).
pub fn decoupled_oracle(l: usize, bc: DynamoBc, n: usize) -> Result<Vec<f64>> {
    if l == 0 || n == 0 {
        return Err(SpectralError::InvalidParameter(
            "need l >= 1 and n >= 1".into(),
        ));
    }
    let poloidal = match bc {
        DynamoBc::Idealized => spherical_jn_zeros(l, n)?,
        DynamoBc::Realistic => spherical_jn_zeros(l - 1, n)?,
    };
    let mut lambda: Vec<f64> = poloidal
        .into_iter()
        .chain(spherical_jn_zeros(l, n)?)
        .map(|k| -k * k)
        .collect();
    lambda.sort_by(|a, b| b.total_cmp(a));
    lambda.truncate(n);
    Ok(lambda)
}

/// `φ = f/r` on a uniform radial grid `rₖ = k/n` (with `φ(0) = 0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamoEigenfunction {
    pub eigenvalue: Complex64,
    pub grid: Vec<f64>,
    pub phi: Vec<[Complex64; 2]>,
}

pub fn dynamo_eigenfunction(
    params: &DynamoParams,
    lambda: Complex64,
    n: usize,
) -> Result<DynamoEigenfunction> {
    if n < 2 {
        return Err(SpectralError::InvalidParameter(
            "need at least two grid intervals".into(),
        ));
    }
    let y = integrate_seeds(lambda, params, DEFAULT_R0, 0, FINE)?;
    let (a1, a2) = residuals(&y[0..4], params.l, params.bc);
    let (b1, b2) = residuals(&y[4..8], params.l, params.bc);
    // Null vector of [[a1, b1], [a2, b2]] from its larger row.
    let (ca, cb) = if a1.norm() + b1.norm() >= a2.norm() + b2.norm() {
        (b1, -a1)
    } else {
        (b2, -a2)
    };
    let seeds = regular_solutions_seed(DEFAULT_R0, params.l);
    let mut y0 = Vec::with_capacity(4);
    for (x, z) in seeds[0].to_array().iter().zip(seeds[1].to_array()) {
        y0.push(ca * x + cb * z);
    }
    let l = params.l;
    let profile = params.profile.clone();
    let rhs = move |r: f64, s: &[Complex64], ds: &mut [Complex64]| {
        rhs_block(r, s, None, lambda, l, &profile, 0, ds)
    };
    let scale = DEFAULT_R0.powi(l as i32 + 1) * (ca.norm() + cb.norm());
    let mut stepper = DormandPrince::new(rhs, DEFAULT_R0, y0, FINE.rel, FINE.abs * scale)?;
    let grid: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
    let mut phi = vec![[Complex64::new(0.0, 0.0); 2]];
    for &r in &grid[1..] {
        stepper.advance_to(r)?;
        let s = stepper.state();
        phi.push([s[0] / r, s[2] / r]);
    }
    let norm = phi
        .iter()
        .map(|p| p[0].norm().max(p[1].norm()))
        .fold(0.0, f64::max);
    for p in &mut phi {
        p[0] /= norm;
        p[1] /= norm;
    }
    Ok(DynamoEigenfunction {
        eigenvalue: lambda,
        grid,
        phi,
    })
}

/// `[φ, φ]_J`, the ordinary norm, and their ratio. Under realistic boundary
/// conditions the form is not a Krein-space product of the operator, which
/// `krein_space_valid` records.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KreinJDiagnostic {
    pub product: Complex64,
    pub norm_squared: f64,
    pub neutrality: f64,
    pub krein_space_valid: bool,
}

fn check_grid(n: usize, grid: &[f64]) -> Result<()> {
    if n != grid.len() {
        return Err(SpectralError::GridMismatch(format!(
            "{n} samples on {} grid points",
            grid.len()
        )));
    }
    if grid.len() < 2 || grid.windows(2).any(|w| w[1] <= w[0]) || grid[0] < 0.0 {
        return Err(SpectralError::GridMismatch(
            "grid must increase and lie in [0, 1]".into(),
        ));
    }
    Ok(())
}

fn trapezoid(grid: &[f64], f: impl Fn(usize) -> Complex64) -> Complex64 {
    grid.windows(2)
        .enumerate()
        .map(|(i, w)| (f(i) * w[0] * w[0] + f(i + 1) * w[1] * w[1]) * (0.5 * (w[1] - w[0])))
        .sum()
}

/// `∫ (φ₁* φ₂ + φ₂* φ₁) r² dr` by the trapezoidal rule.
#[allow(non_snake_case)]
pub fn krein_inner_product_J(phi: &[[Complex64; 2]], grid: &[f64]) -> Result<KreinJDiagnostic> {
    check_grid(phi.len(), grid)?;
    let product = trapezoid(grid, |i| {
        phi[i][0].conj() * phi[i][1] + phi[i][1].conj() * phi[i][0]
    });
    let norm_squared = trapezoid(grid, |i| {
        Complex64::new(phi[i][0].norm_sqr() + phi[i][1].norm_sqr(), 0.0)
    })
    .re;
    Ok(KreinJDiagnostic {
        product,
        norm_squared,
        neutrality: if norm_squared > 0.0 {
            product.norm() / norm_squared
        } else {
            0.0
        },
        krein_space_valid: true,
    })
}

/// The J-form of a computed eigenfunction, flagged under realistic
/// boundary conditions.
pub fn krein_diagnostic(
    params: &DynamoParams,
    ef: &DynamoEigenfunction,
) -> Result<KreinJDiagnostic> {
    let mut d = krein_inner_product_J(&ef.phi, &ef.grid)?;
    d.krein_space_valid = params.bc == DynamoBc::Idealized;
    Ok(d)
}

/// `φ̌ = ((φ₂ + φ₁)/√2, (φ₂ − φ₁)/√2)`, in which `J` becomes `diag(1, −1)`.
pub fn transform_to_diagonal_metric(phi: [Complex64; 2]) -> [Complex64; 2] {
    [
        (phi[1] + phi[0]) * FRAC_1_SQRT_2,
        (phi[1] - phi[0]) * FRAC_1_SQRT_2,
    ]
}

/// `‖φ₊‖² − ‖φ₋‖²` with the `r² dr` weight.
pub fn diagonal_metric_form(transformed: &[[Complex64; 2]], grid: &[f64]) -> Result<f64> {
    check_grid(transformed.len(), grid)?;
    Ok(trapezoid(grid, |i| {
        Complex64::new(
            transformed[i][0].norm_sqr() - transformed[i][1].norm_sqr(),
            0.0,
        )
    })
    .re)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    const K1: f64 = 4.493_409_457_909_064;

    #[test]
    fn fig1_profile_values() {
        let p = AlphaProfile::fig1(1.0);
        assert_eq!(p.eval(0.0), (1.0, 0.0));
        let (a, d) = p.eval(1.0);
        assert!(
            (a - 0.33).abs() < 1e-12 && (d - (-4.14)).abs() < 1e-12,
            "{a} {d}"
        );
        let p2 = AlphaProfile::fig1(2.0);
        for r in [0.1, 0.4, 0.77] {
            let (a1, d1) = p.eval(r);
            let (a2, d2) = p2.eval(r);
            assert!((a2 - 2.0 * a1).abs() < 1e-14 && (d2 - 2.0 * d1).abs() < 1e-14);
        }
    }

    #[test]
    fn coefficient_text() {
        let p =
            AlphaProfile::from_coefficient_text("# fig 1\n1\n0\n-26.09\n\n53.64\n-28.22\n", 1.0)
                .unwrap();
        assert_eq!(p, AlphaProfile::fig1(1.0));
        assert!(AlphaProfile::from_coefficient_text("1\nx\n", 1.0).is_err());
        assert!(AlphaProfile::from_coefficient_text("", 1.0).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(DynamoParams::new(0, AlphaProfile::constant(1.0), DynamoBc::Idealized).is_err());
        assert!(
            DynamoParams::new(1, AlphaProfile::constant(f64::NAN), DynamoBc::Idealized).is_err()
        );
    }

    #[test]
    fn rhs_properties() {
        let p = DynamoParams::new(1, AlphaProfile::constant(0.0), DynamoBc::Idealized).unwrap();
        let s = DynamoState {
            f1: c(1.0, 0.5),
            df1: c(-0.3, 0.0),
            f2: c(0.2, -1.0),
            df2: c(0.7, 0.1),
        };
        let lam = c(-3.0, 1.0);
        let d = dynamo_rhs(0.5, &s, lam, &p).unwrap();
        assert_eq!(d.f1, s.df1);
        assert!((d.df1 - (8.0 + lam) * s.f1).norm() < 1e-14);
        assert!((d.df2 - (8.0 + lam) * s.f2).norm() < 1e-14);
        let p = DynamoParams::new(2, AlphaProfile::fig1(3.0), DynamoBc::Realistic).unwrap();
        let d1 = dynamo_rhs(0.3, &s, lam, &p).unwrap().to_array();
        let s2 = DynamoState::from_slice(&s.to_array().map(|v| v * 2.0));
        let d2 = dynamo_rhs(0.3, &s2, lam, &p).unwrap().to_array();
        for (x, y) in d1.iter().zip(d2) {
            assert!((y - x * 2.0).norm() < 1e-13);
        }
        assert_eq!(
            dynamo_rhs(0.0, &s, lam, &p),
            Err(SpectralError::RadiusAtZero)
        );
    }

    #[test]
    fn second_equation_matches_unexpanded_form() {
        let p = DynamoParams::new(1, AlphaProfile::fig1(2.5), DynamoBc::Idealized).unwrap();
        let s = DynamoState {
            f1: c(0.4, 0.1),
            df1: c(1.2, -0.2),
            f2: c(-0.5, 0.3),
            df2: c(0.1, 0.0),
        };
        let (r, lam) = (0.6, c(-7.0, 2.0));
        let d = dynamo_rhs(r, &s, lam, &p).unwrap();
        let big_l = 2.0 / (r * r);
        let (a, da) = p.profile.eval(r);
        let f1pp = (big_l + lam) * s.f1 - a * s.f2;
        let expect = (big_l + lam) * s.f2 + da * s.df1 + a * f1pp - a * big_l * s.f1;
        assert!((d.df2 - expect).norm() < 1e-13);
    }

    #[test]
    fn seeds() {
        let [a, b] = regular_solutions_seed(1e-4, 1);
        assert!((a.f1.re - 1e-8).abs() < 1e-22 && (a.df1.re - 2e-4).abs() < 1e-18);
        assert_eq!((a.f2, a.df2), (c(0.0, 0.0), c(0.0, 0.0)));
        assert_eq!((b.f2, b.df2), (a.f1, a.df1));
    }

    #[test]
    fn power_solution_at_zero() {
        let p = DynamoParams::new(1, AlphaProfile::constant(0.0), DynamoBc::Idealized).unwrap();
        let y = integrate_seeds(c(0.0, 0.0), &p, 1e-4, 0, FINE).unwrap();
        assert!((y[0] / y[1] - 0.5).norm() < 1e-9);
        assert!((y[0] - 1.0).norm() < 1e-8);
    }

    #[test]
    fn jet_matches_finite_differences() {
        let p = DynamoParams::new(1, AlphaProfile::fig1(4.0), DynamoBc::Realistic).unwrap();
        let z = c(-12.0, 3.0);
        let jet = dynamo_jet(z, &p, 2, DEFAULT_R0, FINE).unwrap();
        let f = |w: Complex64| dynamo_jet(w, &p, 0, DEFAULT_R0, FINE).unwrap()[0];
        let h = 1e-4;
        let d1 = (f(z + h) - f(z - h)) / (2.0 * h);
        assert!((jet[1] - d1).norm() < 1e-6 * jet[1].norm());
        let h = 1e-2;
        let d2 = (f(z + h) - 2.0 * f(z) + f(z - h)) / (h * h);
        assert!((jet[2] - d2).norm() < 1e-4 * jet[2].norm());
    }

    #[test]
    fn decoupled_roots() {
        let p = DynamoParams::new(1, AlphaProfile::constant(0.0), DynamoBc::Idealized).unwrap();
        let d0 = dynamo_determinant(c(-K1 * K1, 0.0), &p).unwrap();
        let scale = dynamo_determinant(c(-K1 * K1 + 1.0, 0.0), &p).unwrap();
        assert!(d0.norm() < 1e-16 * scale.norm().max(1.0) * 1e6);
        let jet = dynamo_jet(c(-K1 * K1, 0.0), &p, 1, DEFAULT_R0, FINE).unwrap();
        assert!(jet[1].norm() < 1e-8 * scale.norm());
    }

    #[test]
    fn oracle_values() {
        let (p, m) = constant_alpha_oracle(5.0, 1, 1).unwrap();
        assert!((p - (-K1 * K1 + 5.0 * K1)).abs() < 1e-12);
        assert!((p - 2.2773).abs() < 1e-3, "{p}");
        assert!((m + K1 * K1 + 5.0 * K1).abs() < 1e-12);
        let (a, b) = constant_alpha_oracle(0.0, 2, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn constant_alpha_spectrum() {
        let p = DynamoParams::new(1, AlphaProfile::constant(5.0), DynamoBc::Idealized).unwrap();
        let s = dynamo_spectrum(&p, 6).unwrap();
        let mut oracle: Vec<f64> = (1..=6)
            .flat_map(|n| {
                let (a, b) = constant_alpha_oracle(5.0, 1, n).unwrap();
                [a, b]
            })
            .collect();
        oracle.sort_by(|a, b| b.total_cmp(a));
        for (z, o) in s.iter().zip(&oracle) {
            assert!(z.im == 0.0);
            assert!((z.re - o).abs() <= 1e-7 * o.abs(), "{z} vs {o}");
        }
    }

    #[test]
    fn decoupled_spectrum() {
        let p = DynamoParams::new(1, AlphaProfile::fig1(0.0), DynamoBc::Realistic).unwrap();
        let s = dynamo_spectrum(&p, 5).unwrap();
        let oracle = decoupled_oracle(1, DynamoBc::Realistic, 5).unwrap();
        // j_0 zeros are multiples of π, interleaved with those of j_1.
        assert!((oracle[0] + PI * PI).abs() < 1e-12);
        for (z, o) in s.iter().zip(&oracle) {
            assert!(
                (z.re - o).abs() <= 1e-7 * o.abs() && z.im == 0.0,
                "{z} vs {o}"
            );
        }
        let ideal = decoupled_oracle(2, DynamoBc::Idealized, 4).unwrap();
        assert_eq!(ideal[0], ideal[1]);
    }

    #[test]
    fn seed_radius_independence() {
        let p = DynamoParams::new(1, AlphaProfile::fig1(10.0), DynamoBc::Realistic).unwrap();
        let a = dynamo_spectrum_with(&p, 4, 1e-5).unwrap();
        let b = dynamo_spectrum_with(&p, 4, 1e-3).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() <= 1e-8 * x.norm(), "{x} vs {y}");
        }
    }

    #[test]
    fn boundary_conditions_matter() {
        let r = dynamo_spectrum(
            &DynamoParams::new(1, AlphaProfile::fig1(10.0), DynamoBc::Realistic).unwrap(),
            2,
        )
        .unwrap();
        let i = dynamo_spectrum(
            &DynamoParams::new(1, AlphaProfile::fig1(10.0), DynamoBc::Idealized).unwrap(),
            2,
        )
        .unwrap();
        assert!((r[0] - i[0]).norm() > 1e-3);
    }

    #[test]
    fn spectrum_is_conjugation_closed() {
        let p = DynamoParams::new(1, AlphaProfile::fig1(30.0), DynamoBc::Idealized).unwrap();
        let s = dynamo_spectrum(&p, 6).unwrap();
        assert!(s.iter().any(|z| z.im != 0.0));
        for z in &s {
            assert!(s.iter().any(|w| *w == z.conj()), "{z}");
        }
        assert!(s.windows(2).all(|w| w[0].re >= w[1].re));
    }

    #[test]
    fn quiet_sweep_near_zero() {
        let p = DynamoParams::new(1, AlphaProfile::fig1(0.0), DynamoBc::Realistic).unwrap();
        let grid: Vec<f64> = (0..=4).map(|k| 0.25 * k as f64).collect();
        let s = c_sweep(&p, &grid, 4, &TrackOptions::default()).unwrap();
        assert!(s.exceptional_points.is_empty());
        assert!(s
            .branches
            .iter()
            .all(|b| b.points.iter().all(|(_, z)| z.im == 0.0)));
        assert_eq!(s.branches[0].points.len(), grid.len());
    }

    #[test]
    fn idealized_exceptional_point_is_neutral() {
        let p = DynamoParams::new(1, AlphaProfile::fig1(0.0), DynamoBc::Idealized).unwrap();
        let fam = DynamoFamily::new(p.clone());
        let ep = crate::numerics::roots::find_double_root(&fam, c(-4.2, 0.0), 27.4, 1e-7).unwrap();
        assert!((ep.parameter - 27.3968).abs() < 1e-3, "{ep:?}");
        let pc = p.with_scale(ep.parameter);
        let ef = dynamo_eigenfunction(&pc, ep.eigenvalue, 400).unwrap();
        let d = krein_diagnostic(&pc, &ef).unwrap();
        assert!(d.krein_space_valid);
        assert!(d.neutrality <= 1e-2, "{d:?}");
        let before = p.with_scale(ep.parameter - 0.5);
        let top = dynamo_spectrum(&before, 4).unwrap()[3];
        assert_eq!(top.im, 0.0);
        let away = dynamo_eigenfunction(&before, top, 400).unwrap();
        assert!(krein_diagnostic(&before, &away).unwrap().neutrality > 1e-2);
    }

    #[test]
    fn metric_transform() {
        let s2 = 2f64.sqrt();
        let t = transform_to_diagonal_metric([c(1.0, 0.0), c(1.0, 0.0)]);
        assert!((t[0] - s2).norm() < 1e-15 && t[1].norm() < 1e-15);
        let t = transform_to_diagonal_metric([c(1.0, 0.0), c(-1.0, 0.0)]);
        assert!(t[0].norm() < 1e-15 && (t[1] + s2).norm() < 1e-15);
    }

    #[test]
    fn j_form_signs() {
        let grid: Vec<f64> = (0..=200).map(|k| k as f64 / 200.0).collect();
        let u: Vec<f64> = grid.iter().map(|r| (PI * r).sin()).collect();
        let plus: Vec<[Complex64; 2]> = u.iter().map(|&v| [c(v, 0.0), c(v, 0.0)]).collect();
        let minus: Vec<[Complex64; 2]> = u.iter().map(|&v| [c(v, 0.0), c(-v, 0.0)]).collect();
        let dp = krein_inner_product_J(&plus, &grid).unwrap();
        let dm = krein_inner_product_J(&minus, &grid).unwrap();
        assert!(dp.product.re > 0.0 && (dp.product + dm.product).norm() < 1e-14);
        assert!((dp.neutrality - 1.0).abs() < 1e-14);
        assert!(matches!(
            krein_inner_product_J(&plus[1..], &grid),
            Err(SpectralError::GridMismatch(_))
        ));
    }
}
