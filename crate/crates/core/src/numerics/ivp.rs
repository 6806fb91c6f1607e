//! Adaptive Dormand–Prince 5(4) integration of complex-valued linear and
//! nonlinear first-order systems.
//!
//! Complex components are controlled by modulus: a component contributes
//! `|err| / (abs_tol + rel_tol * max(|y|, |y_new|))` to the RMS error norm.
//! Step control is the PI controller used by DOPRI5.

use num_complex::Complex64;

use crate::error::{Result, SpectralError};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Difference between the fifth- and fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

/// Default cap on accepted + rejected steps for a single integration.
pub const DEFAULT_MAX_STEPS: usize = 500_000;

/// An initial-value problem `y' = rhs(t, y)` over `span = (a, b)`.
///
/// The right-hand side writes the derivative into its third argument.
/// `b < a` integrates backwards.
pub struct IvpProblem<F> {
    pub rhs: F,
    pub span: (f64, f64),
    pub initial_state: Vec<Complex64>,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IvpOutcome {
    pub state: Vec<Complex64>,
    pub steps: usize,
    pub rejected: usize,
}

/// Integrates `problem` to the far end of its span.
pub fn integrate_ivp<F>(problem: IvpProblem<F>) -> Result<IvpOutcome>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
{
    let IvpProblem {
        rhs,
        span,
        initial_state,
        rel_tol,
        abs_tol,
    } = problem;
    if !(span.0.is_finite() && span.1.is_finite()) {
        return Err(SpectralError::InvalidProblem(
            "span endpoints must be finite".into(),
        ));
    }
    if span.0 == span.1 {
        return Err(SpectralError::InvalidProblem("empty span".into()));
    }
    let mut stepper = DormandPrince::new(rhs, span.0, initial_state, rel_tol, abs_tol)?;
    stepper.advance_to(span.1)?;
    Ok(IvpOutcome {
        steps: stepper.steps,
        rejected: stepper.rejected,
        state: stepper.y,
    })
}

/// A resumable Dormand–Prince stepper. `advance_to` may be called repeatedly
/// with monotone targets to sample the solution on a grid.
pub struct DormandPrince<F> {
    rhs: F,
    t: f64,
    y: Vec<Complex64>,
    h: f64,
    rel_tol: f64,
    abs_tol: f64,
    fac_old: f64,
    k: [Vec<Complex64>; 7],
    scratch: Vec<Complex64>,
    y_new: Vec<Complex64>,
    fsal_valid: bool,
    pub steps: usize,
    pub rejected: usize,
    pub max_steps: usize,
}

impl<F> DormandPrince<F>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
{
    pub fn new(rhs: F, t0: f64, y0: Vec<Complex64>, rel_tol: f64, abs_tol: f64) -> Result<Self> {
        if !(rel_tol > 0.0 && abs_tol > 0.0) {
            return Err(SpectralError::InvalidProblem(
                "tolerances must be strictly positive".into(),
            ));
        }
        if !t0.is_finite() {
            return Err(SpectralError::InvalidProblem("non-finite start".into()));
        }
        let n = y0.len();
        let zeros = || vec![Complex64::new(0.0, 0.0); n];
        Ok(Self {
            rhs,
            t: t0,
            y: y0,
            h: 0.0,
            rel_tol,
            abs_tol,
            fac_old: 1e-4,
            k: [
                zeros(),
                zeros(),
                zeros(),
                zeros(),
                zeros(),
                zeros(),
                zeros(),
            ],
            scratch: zeros(),
            y_new: zeros(),
            fsal_valid: false,
            steps: 0,
            rejected: 0,
            max_steps: DEFAULT_MAX_STEPS,
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> &[Complex64] {
        &self.y
    }

    fn rms(&self, v: &[Complex64], reference: &[Complex64]) -> f64 {
        let n = v.len().max(1) as f64;
        let s: f64 = v
            .iter()
            .zip(reference)
            .map(|(x, r)| {
                let sc = self.abs_tol + self.rel_tol * r.norm();
                (x.norm() / sc).powi(2)
            })
            .sum();
        (s / n).sqrt()
    }

    /// Hairer's starting step heuristic.
    fn initial_step(&mut self, dir: f64, remaining: f64) -> f64 {
        let n = self.y.len();
        (self.rhs)(self.t, &self.y, &mut self.k[0]);
        self.fsal_valid = true;
        let d0 = self.rms(&self.y, &self.y);
        let d1 = self.rms(&self.k[0], &self.y);
        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        h0 = h0.min(remaining);
        for i in 0..n {
            self.scratch[i] = self.y[i] + self.k[0][i] * (dir * h0);
        }
        (self.rhs)(self.t + dir * h0, &self.scratch, &mut self.k[1]);
        let diff: Vec<Complex64> = (0..n).map(|i| self.k[1][i] - self.k[0][i]).collect();
        let d2 = self.rms(&diff, &self.y) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(remaining)
    }

    /// Integrates from the current position to `t_end`.
    pub fn advance_to(&mut self, t_end: f64) -> Result<()> {
        if !t_end.is_finite() {
            return Err(SpectralError::InvalidProblem("non-finite target".into()));
        }
        if t_end == self.t {
            return Ok(());
        }
        let dir = (t_end - self.t).signum();
        let n = self.y.len();
        if self.h == 0.0 {
            self.h = self.initial_step(dir, (t_end - self.t).abs());
        }
        if !self.fsal_valid {
            (self.rhs)(self.t, &self.y, &mut self.k[0]);
            self.fsal_valid = true;
        }
        loop {
            let remaining = (t_end - self.t) * dir;
            if remaining <= 0.0 {
                return Ok(());
            }
            if self.steps + self.rejected >= self.max_steps {
                return Err(SpectralError::StepLimitExceeded {
                    t: self.t,
                    limit: self.max_steps,
                });
            }
            let mut h = self.h.min(remaining);
            let last = h >= remaining * (1.0 - 1e-12);
            if last {
                h = remaining;
            }
            if h < 16.0 * f64::EPSILON * self.t.abs().max(1e-300) {
                return Err(SpectralError::StepSizeUnderflow { t: self.t, h });
            }
            let hs = dir * h;
            let t = self.t;
            let y = &self.y;
            let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
            let tmp = &mut self.scratch;
            for i in 0..n {
                tmp[i] = y[i] + k1[i] * (hs * A21);
            }
            (self.rhs)(t + C2 * hs, tmp, k2);
            for i in 0..n {
                tmp[i] = y[i] + (k1[i] * A31 + k2[i] * A32) * hs;
            }
            (self.rhs)(t + C3 * hs, tmp, k3);
            for i in 0..n {
                tmp[i] = y[i] + (k1[i] * A41 + k2[i] * A42 + k3[i] * A43) * hs;
            }
            (self.rhs)(t + C4 * hs, tmp, k4);
            for i in 0..n {
                tmp[i] = y[i] + (k1[i] * A51 + k2[i] * A52 + k3[i] * A53 + k4[i] * A54) * hs;
            }
            (self.rhs)(t + C5 * hs, tmp, k5);
            for i in 0..n {
                tmp[i] = y[i]
                    + (k1[i] * A61 + k2[i] * A62 + k3[i] * A63 + k4[i] * A64 + k5[i] * A65) * hs;
            }
            let t_new = if last { t_end } else { t + hs };
            (self.rhs)(t_new, tmp, k6);
            let y_new = &mut self.y_new;
            for i in 0..n {
                y_new[i] = y[i]
                    + (k1[i] * A71 + k3[i] * A73 + k4[i] * A74 + k5[i] * A75 + k6[i] * A76) * hs;
            }
            (self.rhs)(t_new, y_new, k7);

            let mut err_sq = 0.0;
            let mut finite = true;
            for i in 0..n {
                let e =
                    (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7)
                        * hs;
                let sc = self.abs_tol + self.rel_tol * y[i].norm().max(y_new[i].norm());
                let r = e.norm() / sc;
                err_sq += r * r;
                finite &= y_new[i].re.is_finite() && y_new[i].im.is_finite();
            }
            if !finite {
                return Err(SpectralError::NonFiniteState { t });
            }
            let err = (err_sq / n.max(1) as f64).sqrt();

            // PI step-size controller (DOPRI5 constants).
            let expo1 = 0.2 - BETA * 0.75;
            let fac11 = err.max(1e-300).powf(expo1);
            if err <= 1.0 {
                let fac =
                    (fac11 / self.fac_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                self.fac_old = err.max(1e-4);
                self.t = t_new;
                std::mem::swap(&mut self.y, &mut self.y_new);
                self.k.swap(0, 6);
                self.steps += 1;
                let h_next = h / fac;
                if !last {
                    self.h = h_next;
                } else {
                    // a truncated final step says little about the next one
                    if h >= self.h {
                        self.h = h_next;
                    }
                    return Ok(());
                }
            } else {
                self.rejected += 1;
                let fac = (fac11 / SAFETY).min(1.0 / FAC_MIN);
                self.h = h / fac;
            }
        }
    }
}
