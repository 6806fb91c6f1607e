//! Complex Airy function `Ai` and its derivative in double precision, plus
//! the negative real zeros.
//!
//! Regions:
//! * `|z| ≤ 2.5`: Maclaurin series.
//! * `|arg z| ≤ π/3`: modified Bessel representation through `K_{1/3}` and
//!   `K_{2/3}`, evaluated with Steed's continued fraction.
//! * `π/3 < |arg z| ≤ 2π/3`: Maclaurin series below `|z| = 7`, the
//!   asymptotic expansion above it.
//! * `|arg z| > 2π/3`: the three-sector connection formula, which maps the
//!   point into `|arg z| ≤ π/3` without cancellation.
//!
//! `Ai(z̄) = conj Ai(z)` holds exactly because the lower half-plane is
//! evaluated by conjugation.

use std::f64::consts::{FRAC_PI_3, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpectralError};

const AI0: f64 = 0.355_028_053_887_817_2;
const AIP0: f64 = 0.258_819_403_792_806_8;
const SERIES_RADIUS: f64 = 2.5;
const ASYMPTOTIC_RADIUS: f64 = 7.0;
const TARGET: f64 = 1e-10;

/// `q = e^{2πi/3}`.
pub const Q: Complex64 = Complex64::new(-0.5, 0.866_025_403_784_438_6);

/// Selects one of the rotated arguments `ξ`, `qξ`, `q²ξ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AiryRotation {
    Identity,
    Q,
    Q2,
}

impl AiryRotation {
    pub fn factor(self) -> Complex64 {
        match self {
            AiryRotation::Identity => Complex64::new(1.0, 0.0),
            AiryRotation::Q => Q,
            AiryRotation::Q2 => Q.conj(),
        }
    }

    /// `Ai(r z)` and `d/dz Ai(r z) = r Ai'(r z)`.
    pub fn eval(self, z: Complex64) -> Result<(Complex64, Complex64)> {
        let r = self.factor();
        let (a, d) = airy_pair(r * z)?;
        Ok((a, r * d))
    }
}

pub fn airy_ai(z: Complex64) -> Result<Complex64> {
    Ok(airy_pair(z)?.0)
}

pub fn airy_ai_prime(z: Complex64) -> Result<Complex64> {
    Ok(airy_pair(z)?.1)
}

/// `(Ai(z), Ai'(z))`.
pub fn airy_pair(z: Complex64) -> Result<(Complex64, Complex64)> {
    let s = airy_pair_scaled(z)?;
    let scale = (-s.zeta).exp();
    let (mut a, mut d) = (s.ai * scale, s.dai * scale);
    if z.im == 0.0 {
        a.im = 0.0;
        d.im = 0.0;
    }
    if !(a.re.is_finite() && a.im.is_finite() && d.re.is_finite() && d.im.is_finite()) {
        return Err(SpectralError::AccuracyLoss { z });
    }
    Ok((a, d))
}

/// `Ai` and `Ai'` with the exponential factor split off:
/// `Ai(z) = ai · e^{−ζ}`, `Ai'(z) = dai · e^{−ζ}`, `ζ = (2/3) z^{3/2}`
/// (principal branch, with the real axis taken from above).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledAiry {
    pub ai: Complex64,
    pub dai: Complex64,
    pub zeta: Complex64,
}

impl ScaledAiry {
    fn conj(self) -> Self {
        Self {
            ai: self.ai.conj(),
            dai: self.dai.conj(),
            zeta: self.zeta.conj(),
        }
    }
}

pub fn airy_pair_scaled(z: Complex64) -> Result<ScaledAiry> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(SpectralError::AccuracyLoss { z });
    }
    let s = if z.im < 0.0 {
        upper_scaled(z.conj())?.conj()
    } else {
        upper_scaled(z)?
    };
    if ![s.ai, s.dai, s.zeta]
        .iter()
        .all(|v| v.re.is_finite() && v.im.is_finite())
    {
        return Err(SpectralError::AccuracyLoss { z });
    }
    Ok(s)
}

/// `z` in the closed upper half-plane (a negative-zero imaginary part counts
/// as upper).
fn upper_scaled(z: Complex64) -> Result<ScaledAiry> {
    let r = z.norm();
    let th = z.im.abs().atan2(z.re);
    let zeta = Complex64::from_polar(2.0 / 3.0 * r.powf(1.5), 1.5 * th);
    let from_series = || {
        let (a, d) = series(z);
        let e = zeta.exp();
        ScaledAiry {
            ai: a * e,
            dai: d * e,
            zeta,
        }
    };
    if r <= SERIES_RADIUS {
        return Ok(from_series());
    }
    if th <= FRAC_PI_3 {
        let (ai, dai) = bessel_k_scaled(z, zeta)?;
        return Ok(ScaledAiry { ai, dai, zeta });
    }
    if th <= 2.0 * FRAC_PI_3 {
        if r < ASYMPTOTIC_RADIUS {
            return Ok(from_series());
        }
        let (ai, dai) = asymptotic_scaled(z, zeta)?;
        return Ok(ScaledAiry { ai, dai, zeta });
    }
    // Ai(z) = -q Ai(qz) - q² Ai(q²z); Ai'(z) = -q² Ai'(qz) - q Ai'(q²z).
    let q2 = Q.conj();
    let s1 = rotated_scaled(Q * z)?;
    let s2 = rotated_scaled(q2 * z)?;
    let (e1, e2) = ((zeta - s1.zeta).exp(), (zeta - s2.zeta).exp());
    Ok(ScaledAiry {
        ai: -Q * s1.ai * e1 - q2 * s2.ai * e2,
        dai: -q2 * s1.dai * e1 - Q * s2.dai * e2,
        zeta,
    })
}

fn rotated_scaled(z: Complex64) -> Result<ScaledAiry> {
    if z.im < 0.0 {
        Ok(upper_scaled(z.conj())?.conj())
    } else {
        upper_scaled(z)
    }
}

pub(crate) fn series(z: Complex64) -> (Complex64, Complex64) {
    let z3 = z * z * z;
    let one = Complex64::new(1.0, 0.0);
    let (mut f, mut g) = (one, z);
    let (mut t, mut u) = (one, z);
    let (mut fp, mut gp) = (z * z * 0.5, one);
    let (mut a, mut b) = (fp, one);
    for k in 1..400 {
        let kf = k as f64;
        t *= z3 / ((3.0 * kf - 1.0) * (3.0 * kf));
        u *= z3 / ((3.0 * kf) * (3.0 * kf + 1.0));
        f += t;
        g += u;
        if k >= 2 {
            a *= z3 / ((3.0 * kf - 1.0) * (3.0 * kf - 3.0));
            fp += a;
        }
        b *= z3 / ((3.0 * kf - 2.0) * (3.0 * kf));
        gp += b;
        let small = 1e-18;
        if t.norm() + u.norm() <= small * (f.norm() + g.norm())
            && a.norm() + b.norm() <= small * (fp.norm() + gp.norm())
        {
            break;
        }
    }
    (AI0 * f - AIP0 * g, AI0 * fp - AIP0 * gp)
}

/// `e^x K_{1/3}(x)` and `e^x K_{4/3}(x)` by Steed's algorithm for the second
/// continued fraction (Temme's normalization), valid for `Re x > 0` and
/// `|x| ≳ 2`.
fn k_third_scaled(x: Complex64) -> Result<(Complex64, Complex64)> {
    let xmu = 1.0 / 3.0;
    let a1 = 0.25 - xmu * xmu;
    let one = Complex64::new(1.0, 0.0);
    let mut b = 2.0 * (one + x);
    let mut d = one / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = Complex64::new(0.0, 0.0);
    let mut q2 = one;
    let mut q = Complex64::new(a1, 0.0);
    let mut c = Complex64::new(a1, 0.0);
    let mut a = -a1;
    let mut s = one + q * delh;
    let mut converged = false;
    for i in 1..10_000 {
        let fi = i as f64;
        a -= 2.0 * fi;
        c = -a * c / (fi + 1.0);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = one / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if dels.norm() < 1e-17 * s.norm() {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(SpectralError::AccuracyLoss { z: x });
    }
    h *= a1;
    let kmu = (PI / (2.0 * x)).sqrt() / s;
    let k1 = kmu * (xmu + x + 0.5 - h) / x;
    Ok((kmu, k1))
}

fn bessel_k_scaled(z: Complex64, zeta: Complex64) -> Result<(Complex64, Complex64)> {
    let (k13, k43) = k_third_scaled(zeta)?;
    let k23 = k43 - k13 * (2.0 / (3.0 * zeta));
    let ai = (z / 3.0).sqrt() * k13 / PI;
    let aip = -z * k23 / (PI * 3f64.sqrt());
    Ok((ai, aip))
}

pub(crate) fn asymptotic_scaled(z: Complex64, zeta: Complex64) -> Result<(Complex64, Complex64)> {
    let inv = 1.0 / zeta;
    let one = Complex64::new(1.0, 0.0);
    let (mut sa, mut sd) = (one, one);
    let mut u = 1.0;
    let mut pw = one;
    let mut last = f64::INFINITY;
    let mut tail = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        u *= (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0)
            / ((2.0 * kf - 1.0) * 216.0 * kf);
        let v = -(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * u;
        pw *= -inv;
        let ta = pw * u;
        let td = pw * v;
        let size = ta.norm().max(td.norm());
        if size > last {
            break;
        }
        sa += ta;
        sd += td;
        last = size;
        tail = size;
        if size < 1e-17 {
            break;
        }
    }
    if tail > TARGET {
        return Err(SpectralError::AccuracyLoss { z });
    }
    let pref = 1.0 / (2.0 * PI.sqrt());
    let z14 = z.powf(0.25);
    Ok((pref / z14 * sa, -pref * z14 * sd))
}

/// `-[3π(n − 1/4)/2]^{2/3}`, the leading asymptotic estimate of the `n`-th
/// zero of `Ai`.
pub fn airy_zero_asymptotic(n: usize) -> f64 {
    -(1.5 * PI * (n as f64 - 0.25)).powf(2.0 / 3.0)
}

fn zero_guess(n: usize) -> f64 {
    let t = 3.0 * PI * (4.0 * n as f64 - 1.0) / 8.0;
    let t2 = t.powi(-2);
    -t.powf(2.0 / 3.0) * (1.0 + t2 * (5.0 / 48.0 + t2 * (-5.0 / 36.0 + t2 * 77125.0 / 82944.0)))
}

/// The first `n` zeros `0 > s₁ > s₂ > …` of `Ai`.
pub fn airy_zeros(n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(SpectralError::InvalidParameter(
            "airy_zeros needs n ≥ 1".into(),
        ));
    }
    (1..=n).map(airy_zero).collect()
}

fn airy_zero(n: usize) -> Result<f64> {
    let mut x = zero_guess(n);
    for _ in 0..20 {
        let (a, d) = airy_pair(Complex64::new(x, 0.0))?;
        let step = a.re / d.re;
        x -= step;
        if step.abs() <= 4.0 * f64::EPSILON * x.abs() {
            break;
        }
    }
    Ok(x)
}
