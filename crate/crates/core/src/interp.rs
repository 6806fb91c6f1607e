//! The PT-symmetric interpolation Hamiltonian `−∂²_y + G y²(iy)^ν` on
//! `[−1, 1]` with Dirichlet walls, in the rescaled spectral variable
//! `μ = b²E`, `G = g b^{4+ν}`.
//!
//! The shooting determinant `D(μ) = ψ(1)` of the solution with
//! `ψ(−1) = 0, ψ′(−1) = 1` is evaluated from the left half only: PT symmetry
//! turns the right-wall solution into `conj ψ(−y; μ̄)`, and the Wronskian at
//! `y = 0` gives
//!
//! `D(μ) = ψ(0; μ) conj ψ′(0; μ̄) + ψ′(0; μ) conj ψ(0; μ̄)`.
//!
//! This is exactly real for real `μ`, keeps the potential's kink at the end
//! of the integration span, and halves the exponential growth the integrator
//! has to carry.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpectralError};
use crate::numerics::branches::{track_branches, TrackOptions};
use crate::numerics::contour::ContourOptions;
use crate::numerics::ivp::DormandPrince;
use crate::numerics::roots::{
    find_double_root, find_triple_root, ExceptionalPoint, SpectralFamily2, SpectralFunction,
};
use crate::numerics::spectrum::{lowest_eigenvalues, StripSearch};
use crate::sweep::{EigenvalueKind, SweepResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterpParams {
    pub nu: f64,
    pub b: f64,
    pub g: f64,
}

impl InterpParams {
    pub fn new(nu: f64, b: f64, g: f64) -> Result<Self> {
        if !(-2.0..=0.0).contains(&nu) {
            return Err(SpectralError::InvalidParameter(format!(
                "nu = {nu} outside [-2, 0]"
            )));
        }
        if !(b > 0.0 && b.is_finite()) {
            return Err(SpectralError::InvalidParameter(format!(
                "b = {b} must be positive"
            )));
        }
        if !g.is_finite() {
            return Err(SpectralError::InvalidParameter(format!(
                "g = {g} must be finite"
            )));
        }
        Ok(Self { nu, b, g })
    }

    /// `G = g b^{4+ν}`.
    pub fn coupling(&self) -> f64 {
        self.g * self.b.powf(4.0 + self.nu)
    }

    pub fn mu_from_energy(&self, e: Complex64) -> Complex64 {
        e * (self.b * self.b)
    }

    pub fn energy_from_mu(&self, mu: Complex64) -> Complex64 {
        mu / (self.b * self.b)
    }

    fn with_nu(self, nu: f64) -> Self {
        Self { nu, ..self }
    }

    fn with_b(self, b: f64) -> Self {
        Self { b, ..self }
    }
}

/// `G |y|^{2+ν} e^{i sign(y) νπ/2}`, the principal branch of `G y²(iy)^ν`.
pub fn potential(y: f64, params: &InterpParams) -> Complex64 {
    let big_g = params.coupling();
    if params.nu == -2.0 {
        return Complex64::new(-big_g, 0.0);
    }
    if y == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let phase = y.signum() * params.nu * FRAC_PI_2;
    Complex64::from_polar(big_g * y.abs().powf(2.0 + params.nu), phase)
}

/// Integration tolerances for the shooting determinant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootingTolerances {
    pub rel: f64,
    pub abs: f64,
}

impl ShootingTolerances {
    pub const FINE: Self = Self {
        rel: 1e-12,
        abs: 1e-14,
    };
    pub const COARSE: Self = Self {
        rel: 1e-7,
        abs: 1e-9,
    };
}

/// `(φ_j(0), φ_j′(0))` for `j ≤ order`, where `φ_j = ∂^j_μ ψ` solves
/// `φ_j″ = (V − μ)φ_j − j φ_{j−1}` with `φ_0(−1) = 0, φ_0′(−1) = 1` and zero
/// data for `j ≥ 1`.
fn half_shoot(
    params: &InterpParams,
    mu: Complex64,
    order: usize,
    tol: ShootingTolerances,
) -> Result<Vec<(Complex64, Complex64)>> {
    let n = order + 1;
    let big_g = params.coupling();
    let exponent = 2.0 + params.nu;
    let weight = if params.nu == -2.0 {
        Complex64::new(-1.0, 0.0)
    } else {
        Complex64::from_polar(1.0, -params.nu * FRAC_PI_2)
    };
    let rhs = move |y: f64, s: &[Complex64], ds: &mut [Complex64]| {
        let v = if params.nu == -2.0 {
            Complex64::new(-big_g, 0.0)
        } else {
            weight * (big_g * (-y).max(0.0).powf(exponent))
        };
        let w = v - mu;
        for j in 0..n {
            ds[2 * j] = s[2 * j + 1];
            ds[2 * j + 1] = w * s[2 * j];
            if j > 0 {
                ds[2 * j + 1] -= s[2 * j - 2] * j as f64;
            }
        }
    };
    let mut y0 = vec![Complex64::new(0.0, 0.0); 2 * n];
    y0[1] = Complex64::new(1.0, 0.0);
    let mut stepper = DormandPrince::new(rhs, -1.0, y0, tol.rel, tol.abs)?;
    stepper.advance_to(0.0)?;
    let s = stepper.state();
    Ok((0..n).map(|j| (s[2 * j], s[2 * j + 1])).collect())
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `[D, D′, …, D^{(order)}]` at `μ` (`order ≤ 3`).
pub fn shooting_jet(
    mu: Complex64,
    params: &InterpParams,
    order: usize,
    tol: ShootingTolerances,
) -> Result<Vec<Complex64>> {
    let left = half_shoot(params, mu, order, tol)?;
    let right: Vec<(Complex64, Complex64)> = if mu.im == 0.0 {
        left.iter().map(|(a, b)| (a.conj(), b.conj())).collect()
    } else {
        half_shoot(params, mu.conj(), order, tol)?
            .into_iter()
            .map(|(a, b)| (a.conj(), b.conj()))
            .collect()
    };
    let mut jet = Vec::with_capacity(order + 1);
    for m in 0..=order {
        let mut d = Complex64::new(0.0, 0.0);
        for k in 0..=m {
            let c = binomial(m, k);
            d += (left[k].0 * right[m - k].1 + left[k].1 * right[m - k].0) * c;
        }
        if mu.im == 0.0 {
            d.im = 0.0;
        }
        jet.push(d);
    }
    Ok(jet)
}

/// `D(μ) = ψ(1)`.
pub fn shooting_determinant(mu: Complex64, params: &InterpParams) -> Result<Complex64> {
    Ok(shooting_jet(mu, params, 0, ShootingTolerances::FINE)?[0])
}

/// `ψ(1)` by direct integration across the whole interval; an independent
/// check on the reflected evaluation.
pub fn shooting_determinant_one_sided(
    mu: Complex64,
    params: &InterpParams,
    tol: ShootingTolerances,
) -> Result<Complex64> {
    let p = *params;
    let rhs = move |y: f64, s: &[Complex64], ds: &mut [Complex64]| {
        ds[0] = s[1];
        ds[1] = (potential(y, &p) - mu) * s[0];
    };
    let mut stepper = DormandPrince::new(
        rhs,
        -1.0,
        vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        tol.rel,
        tol.abs,
    )?;
    // Stop at the kink of the potential before crossing it.
    stepper.advance_to(0.0)?;
    stepper.advance_to(1.0)?;
    Ok(stepper.state()[0])
}

/// Which parameter the family variable `p` replaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InterpAxis {
    Nu,
    B,
    G,
}

/// `D(μ; p)` as a spectral family, `p` standing for one of `ν`, `b`, `g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterpFamily {
    pub base: InterpParams,
    pub axis: InterpAxis,
    pub fine: ShootingTolerances,
    pub coarse: ShootingTolerances,
}

impl InterpFamily {
    pub fn new(base: InterpParams, axis: InterpAxis) -> Self {
        Self {
            base,
            axis,
            fine: ShootingTolerances::FINE,
            coarse: ShootingTolerances::COARSE,
        }
    }

    pub fn params_at(&self, p: f64) -> InterpParams {
        match self.axis {
            InterpAxis::Nu => self.base.with_nu(p),
            InterpAxis::B => self.base.with_b(p),
            InterpAxis::G => InterpParams { g: p, ..self.base },
        }
    }

    pub fn parameter(&self) -> f64 {
        match self.axis {
            InterpAxis::Nu => self.base.nu,
            InterpAxis::B => self.base.b,
            InterpAxis::G => self.base.g,
        }
    }
}

impl SpectralFunction for InterpFamily {
    fn jet(&self, z: Complex64, p: f64, order: usize) -> Result<Vec<Complex64>> {
        shooting_jet(z, &self.params_at(p), order, self.fine)
    }

    fn coarse_value(&self, z: Complex64, p: f64) -> Result<Complex64> {
        Ok(shooting_jet(z, &self.params_at(p), 0, self.coarse)?[0])
    }
}

/// The numerical-range strip holding every eigenvalue `μ`:
/// `Re μ ≥ π²/4 + min(0, G cos(νπ/2))`, `|Im μ| ≤ |G sin(νπ/2)|`.
pub fn search_strip(params: &InterpParams, count: usize) -> StripSearch {
    let big_g = params.coupling();
    let angle = params.nu * FRAC_PI_2;
    let re_v = big_g * angle.cos();
    let re_min = PI * PI / 4.0 + re_v.min(0.0) - 1.0 - 0.01 * big_g.abs();
    let im_max = (big_g * angle.sin()).abs() * 1.01 + 1.0;
    let level = count as f64 * FRAC_PI_2;
    StripSearch {
        re_min,
        im_max,
        initial_re_max: re_min + 1.0 + 1.1 * level * level + big_g.abs(),
        max_extensions: 24,
    }
}

/// The `count` eigenvalues `μ` of lowest real part (a conjugate pair cut by
/// `count` is reported whole), sorted by `(Re, Im)` and certified complete by
/// the argument principle on the numerical-range strip.
pub fn eigenvalues(params: &InterpParams, count: usize) -> Result<Vec<Complex64>> {
    if count == 0 {
        return Err(SpectralError::InvalidParameter(
            "count must be at least 1".into(),
        ));
    }
    let family = InterpFamily::new(*params, InterpAxis::Nu);
    lowest_eigenvalues(
        &family,
        params.nu,
        &search_strip(params, count),
        count,
        ContourOptions::default(),
    )
}

/// `½[(8/π²)|g| b^{4+ν} − 1]`.
pub fn supremum_bound_ks(b: f64, nu: f64, g: f64) -> f64 {
    0.5 * (8.0 / (PI * PI) * g.abs() * b.powf(4.0 + nu) - 1.0)
}

/// Lowest level index from which the spectrum at `(ν, b)` is real: one past
/// the highest-lying (by `Re μ`) member of a complex-conjugate pair. The
/// spectrum is deepened until three consecutive real levels follow the last
/// pair.
pub fn critical_level_kc(params: &InterpParams) -> Result<usize> {
    const MAX_LEVELS: usize = 256;
    let mut n = 12;
    loop {
        let eigs = eigenvalues(params, n)?;
        let start = eigs
            .iter()
            .rposition(|z| {
                crate::numerics::branches::classify(*z)
                    == crate::numerics::branches::SegmentLabel::ComplexPair
            })
            .map_or(0, |h| h + 1);
        if eigs.len() >= start + 3 {
            return Ok(start + 1);
        }
        if n >= MAX_LEVELS {
            return Err(SpectralError::InsufficientDepth(format!(
                "no three real levels above the complex pairs within {MAX_LEVELS} levels"
            )));
        }
        n = (2 * n).min(MAX_LEVELS);
    }
}

/// Tracks the `n_levels` lowest eigenvalues at `nu_grid[0]` across the grid.
pub fn nu_sweep(
    b: f64,
    g: f64,
    nu_grid: &[f64],
    n_levels: usize,
    opts: &TrackOptions,
) -> Result<SweepResult> {
    let first = *nu_grid
        .first()
        .ok_or_else(|| SpectralError::InvalidParameter("empty nu grid".into()))?;
    for &nu in nu_grid {
        InterpParams::new(nu, b, g)?;
    }
    let params = InterpParams::new(first, b, g)?;
    let seeds = eigenvalues(&params, n_levels)?;
    let seeds: Vec<Complex64> = seeds.into_iter().take(n_levels).collect();
    let family = InterpFamily::new(params, InterpAxis::Nu);
    let tracked = track_branches(&family, "nu", nu_grid, &seeds, opts)?;
    let mut result = SweepResult::new(
        "interp",
        "nu",
        EigenvalueKind::RescaledMu { b },
        nu_grid.to_vec(),
        tracked,
    );
    result.fixed_params.insert("b".into(), b);
    result.fixed_params.insert("g".into(), g);
    result.record_tolerances(family.fine.rel, family.fine.abs, opts);
    Ok(result)
}

/// Refines an exceptional point of the `ν`-family at fixed `(b, g)`.
pub fn exceptional_point_nu(
    params: &InterpParams,
    guess_mu: Complex64,
    tol: f64,
) -> Result<ExceptionalPoint> {
    let family = InterpFamily::new(*params, InterpAxis::Nu);
    find_double_root(&family, guess_mu, params.nu, tol)
}

/// Refines an exceptional point of the `b`-family at fixed `(ν, g)`.
pub fn exceptional_point_b(
    params: &InterpParams,
    guess_mu: Complex64,
    tol: f64,
) -> Result<ExceptionalPoint> {
    let family = InterpFamily::new(*params, InterpAxis::B);
    find_double_root(&family, guess_mu, params.b, tol)
}

/// `D(μ; ν, b)` for fixed `g`, the two-parameter family in which pairs of
/// exceptional points coalesce into triple roots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterpFamily2 {
    pub g: f64,
    pub tol: ShootingTolerances,
}

impl SpectralFamily2 for InterpFamily2 {
    fn jet2(&self, z: Complex64, p: f64, s: f64, order: usize) -> Result<Vec<Complex64>> {
        shooting_jet(
            z,
            &InterpParams {
                nu: p,
                b: s,
                g: self.g,
            },
            order,
            self.tol,
        )
    }
}

/// Two-parameter localization of a coalescence of exceptional points:
/// a triple root of `D(μ; ν, b)`. `parameter` is `ν`,
/// `secondary_parameter` is `b`.
pub fn coalescence_point(
    g: f64,
    guess_mu: Complex64,
    guess_nu: f64,
    guess_b: f64,
    tol: f64,
) -> Result<ExceptionalPoint> {
    let family = InterpFamily2 {
        g,
        tol: ShootingTolerances::FINE,
    };
    find_triple_root(&family, guess_mu, guess_nu, guess_b, tol)
}

/// Samples of an eigenfunction on a symmetric grid, `ψ(−1) = 0`,
/// `ψ′(−1) = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eigenfunction {
    pub samples: Vec<(f64, Complex64)>,
    pub eigenvalue: Complex64,
}

fn left_samples(
    params: &InterpParams,
    mu: Complex64,
    n_half: usize,
) -> Result<Vec<(Complex64, Complex64)>> {
    let p = *params;
    let rhs = move |y: f64, s: &[Complex64], ds: &mut [Complex64]| {
        ds[0] = s[1];
        ds[1] = (potential(y, &p) - mu) * s[0];
    };
    let tol = ShootingTolerances::FINE;
    let mut stepper = DormandPrince::new(
        rhs,
        -1.0,
        vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        tol.rel,
        tol.abs,
    )?;
    let mut out = vec![(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0))];
    for k in 1..=n_half {
        stepper.advance_to((k as f64 - n_half as f64) / n_half as f64)?;
        let s = stepper.state();
        out.push((s[0], s[1]));
    }
    Ok(out)
}

/// The eigenfunction at eigenvalue `mu` on `2 n_half + 1` equispaced points.
/// The right half is the PT reflection `conj ψ(−y; μ̄)`, matched at `y = 0`,
/// so both walls carry exact zeros.
pub fn eigenfunction(params: &InterpParams, mu: Complex64, n_half: usize) -> Result<Eigenfunction> {
    if n_half == 0 {
        return Err(SpectralError::InvalidParameter(
            "n_half must be positive".into(),
        ));
    }
    let left = left_samples(params, mu, n_half)?;
    let mirror = if mu.im == 0.0 {
        left.clone()
    } else {
        left_samples(params, mu.conj(), n_half)?
    };
    let (p0, dp0) = left[n_half];
    let (m0, dm0) = (mirror[n_half].0.conj(), -mirror[n_half].1.conj());
    let scale = if m0.norm() * dp0.norm().max(1e-300) >= dm0.norm() * p0.norm() * 1e-3
        && m0.norm() > dm0.norm() * 1e-8
    {
        p0 / m0
    } else {
        dp0 / dm0
    };
    let mut samples = Vec::with_capacity(2 * n_half + 1);
    for (k, (v, _)) in left.iter().enumerate() {
        samples.push(((k as f64 - n_half as f64) / n_half as f64, *v));
    }
    for k in 1..=n_half {
        let y = k as f64 / n_half as f64;
        samples.push((y, mirror[n_half - k].0.conj() * scale));
    }
    Ok(Eigenfunction {
        samples,
        eigenvalue: mu,
    })
}

/// `[ψ, ψ]_P = ∫ ψ*(y) ψ(−y) dy` with the neutrality ratio `|[ψ,ψ]_P|/(ψ,ψ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KreinDiagnostic {
    pub product: Complex64,
    pub norm_squared: f64,
    pub neutrality: f64,
}

/// Trapezoidal `P`-product of an eigenfunction with itself.
#[allow(non_snake_case)]
pub fn krein_inner_product_P(psi: &Eigenfunction) -> Result<KreinDiagnostic> {
    let s = &psi.samples;
    let n = s.len();
    if n < 3 {
        return Err(SpectralError::AsymmetricGrid);
    }
    for k in 0..n {
        let (a, b) = (s[k].0, s[n - 1 - k].0);
        if (a + b).abs() > 1e-12 * a.abs().max(1.0) {
            return Err(SpectralError::AsymmetricGrid);
        }
    }
    let mut product = Complex64::new(0.0, 0.0);
    let mut norm = 0.0;
    for k in 0..n - 1 {
        let h = s[k + 1].0 - s[k].0;
        let f0 = s[k].1.conj() * s[n - 1 - k].1;
        let f1 = s[k + 1].1.conj() * s[n - 2 - k].1;
        product += (f0 + f1) * (0.5 * h);
        norm += 0.5 * h * (s[k].1.norm_sqr() + s[k + 1].1.norm_sqr());
    }
    Ok(KreinDiagnostic {
        product,
        norm_squared: norm,
        neutrality: product.norm() / norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn p(nu: f64, b: f64) -> InterpParams {
        InterpParams::new(nu, b, 1.0).unwrap()
    }

    #[test]
    fn potential_examples() {
        assert!((potential(0.5, &p(0.0, 2.0)) - c(4.0, 0.0)).norm() < 1e-12);
        for y in [-0.9, -0.1, 0.0, 0.3, 1.0] {
            assert_eq!(potential(y, &p(-2.0, 2.0)), c(-4.0, 0.0));
        }
        assert_eq!(potential(0.0, &p(-1.0, 2.0)), c(0.0, 0.0));
    }

    #[test]
    fn rejects_out_of_range_parameters() {
        assert!(InterpParams::new(0.5, 1.0, 1.0).is_err());
        assert!(InterpParams::new(-1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn empty_box_determinant() {
        let params = InterpParams::new(-1.0, 2.0, 0.0).unwrap();
        for mu in [c(2.0, 0.0), c(5.0, 3.0), c(-4.0, 1.0)] {
            let s = mu.sqrt();
            let exact = (2.0 * s).sin() / s;
            assert!((shooting_determinant(mu, &params).unwrap() - exact).norm() < 1e-10);
        }
    }

    #[test]
    fn reflected_and_one_sided_determinants_agree() {
        for (nu, b, mu) in [
            (-0.5, 3.0, c(30.0, 4.0)),
            (-1.5, 4.0, c(-5.0, 12.0)),
            (-1.0, 2.0, c(7.0, 0.0)),
        ] {
            let params = p(nu, b);
            let a = shooting_determinant(mu, &params).unwrap();
            let o = shooting_determinant_one_sided(mu, &params, ShootingTolerances::FINE).unwrap();
            assert!(
                (a - o).norm() <= 1e-9 * a.norm().max(o.norm()),
                "{a} vs {o}"
            );
        }
    }

    #[test]
    fn analytic_jet_matches_finite_differences() {
        let params = p(-0.7, 3.0);
        let mu = c(25.0, 3.0);
        let jet = shooting_jet(mu, &params, 3, ShootingTolerances::FINE).unwrap();
        let f = |z: Complex64| shooting_jet(z, &params, 0, ShootingTolerances::FINE).unwrap()[0];
        let h = 1e-3;
        let d1 = (f(mu + h) - f(mu - h)) / (2.0 * h);
        let d2 = (f(mu + h) - 2.0 * f(mu) + f(mu - h)) / (h * h);
        assert!((jet[1] - d1).norm() < 1e-5 * jet[1].norm());
        assert!((jet[2] - d2).norm() < 1e-4 * jet[2].norm());
        let h = 1e-2;
        let d3 = (f(mu + 2.0 * h) - 2.0 * f(mu + h) + 2.0 * f(mu - h) - f(mu - 2.0 * h))
            / (2.0 * h * h * h);
        assert!((jet[3] - d3).norm() < 1e-3 * jet[3].norm());
    }

    #[test]
    fn constant_shift_at_nu_minus_two() {
        let params = p(-2.0, 2.0);
        let eigs = eigenvalues(&params, 4).unwrap();
        for (k, mu) in eigs.iter().enumerate() {
            let exact = ((k + 1) as f64 * FRAC_PI_2).powi(2) - 4.0;
            assert!((mu - c(exact, 0.0)).norm() < 1e-8, "{mu} vs {exact}");
        }
    }

    #[test]
    fn small_box_spectrum_is_real() {
        for nu in [-1.7, -1.0, -0.3] {
            let eigs = eigenvalues(&p(nu, 2.0), 6).unwrap();
            assert!(eigs.len() >= 6);
            assert!(eigs.iter().all(|z| z.im == 0.0), "{eigs:?}");
        }
    }

    #[test]
    fn harmonic_limit() {
        let params = p(0.0, 7.0);
        let eigs = eigenvalues(&params, 3).unwrap();
        for (k, mu) in eigs.iter().enumerate() {
            let e = params.energy_from_mu(*mu);
            assert!((e - c(2.0 * k as f64 + 1.0, 0.0)).norm() < 1e-4, "{e}");
        }
    }

    #[test]
    fn supremum_bound_table() {
        let cases = [
            (-0.5, 2.0, 4.08),
            (-0.5, 4.0, 51.4),
            (-0.5, 6.0, 213.0),
            (-0.5, 7.0, 367.0),
            (-1.5, 2.0, 1.79),
            (-1.5, 4.0, 12.5),
            (-1.5, 6.0, 35.2),
            (-1.5, 7.0, 52.1),
        ];
        for (nu, b, expected) in cases {
            let expected: f64 = expected;
            // Within one unit of the third significant digit.
            let ks = supremum_bound_ks(b, nu, 1.0);
            let unit = 10f64.powf(expected.log10().floor() - 2.0);
            assert!((ks - expected).abs() <= unit, "{nu} {b}: {ks}");
        }
    }

    #[test]
    fn critical_levels_small_boxes() {
        assert_eq!(critical_level_kc(&p(-0.5, 2.0)).unwrap(), 1);
        assert_eq!(critical_level_kc(&p(-0.5, 4.0)).unwrap(), 6);
        assert_eq!(critical_level_kc(&p(-1.5, 4.0)).unwrap(), 5);
    }

    #[test]
    fn krein_type_of_empty_box_modes() {
        let params = InterpParams::new(-1.0, 1.0, 0.0).unwrap();
        for (k, sign) in [(1usize, 1.0), (2, -1.0), (3, 1.0)] {
            let mu = ((k as f64) * FRAC_PI_2).powi(2);
            let psi = eigenfunction(&params, c(mu, 0.0), 400).unwrap();
            assert!(psi.samples.last().unwrap().1.norm() < 1e-10);
            let d = krein_inner_product_P(&psi).unwrap();
            assert!((d.product.re - sign * d.norm_squared).abs() < 1e-6 * d.norm_squared);
        }
    }

    #[test]
    fn coalescing_exceptional_points() {
        let ep = coalescence_point(1.0, Complex64::new(140.0, 0.0), -0.998, 6.36, 1e-7).unwrap();
        let b = ep.secondary_parameter.unwrap();
        assert!((ep.parameter + 0.9983).abs() < 3e-3, "{ep:?}");
        assert!((b - 6.36).abs() < 0.05, "{ep:?}");
        assert!(ep.parameter > -1.0 && ep.eigenvalue.im == 0.0);
    }

    #[test]
    fn asymmetric_grid_is_rejected() {
        let psi = Eigenfunction {
            samples: vec![(-1.0, c(0.0, 0.0)), (0.1, c(1.0, 0.0)), (1.0, c(0.0, 0.0))],
            eigenvalue: c(1.0, 0.0),
        };
        assert_eq!(
            krein_inner_product_P(&psi),
            Err(SpectralError::AsymmetricGrid)
        );
    }

    #[test]
    fn rescaling_identity_at_nu_minus_one() {
        let g: f64 = 2.7;
        let b = 2.5;
        let lhs = eigenvalues(&InterpParams::new(-1.0, b, g).unwrap(), 5).unwrap();
        let scaled = InterpParams::new(-1.0, g.cbrt() * b, 1.0).unwrap();
        let rhs = eigenvalues(&scaled, 5).unwrap();
        let bl = b * b;
        let br = scaled.b * scaled.b;
        for (l, r) in lhs.iter().zip(&rhs) {
            // Energies: E(b, g) = g^{2/3} E(g^{1/3} b, 1).
            let el = l / bl;
            let er = r / br * g.powf(2.0 / 3.0);
            assert!((el - er).norm() < 1e-8 * el.norm().max(1.0), "{el} {er}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn potential_is_pt_symmetric(y in -1.0..1.0f64, nu in -2.0..0.0f64, b in 0.5..8.0f64) {
            let params = p(nu, b);
            let a = potential(-y, &params);
            let bb = potential(y, &params).conj();
            prop_assert!((a - bb).norm() <= 1e-12 * a.norm().max(1.0));
        }

        #[test]
        fn determinant_is_conjugation_symmetric(
            nu in -2.0..0.0f64, b in 0.5..5.0f64, re in -20.0..80.0f64, im in -30.0..30.0f64,
        ) {
            let params = p(nu, b);
            let mu = c(re, im);
            let d = shooting_determinant(mu, &params).unwrap();
            let dc = shooting_determinant(mu.conj(), &params).unwrap();
            prop_assert!((d - dc.conj()).norm() <= 1e-14 * d.norm());
        }
    }
}
