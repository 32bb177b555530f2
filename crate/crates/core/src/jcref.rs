//! Exact excited-state population of a two-level atom damped by a Lorentzian
//! reservoir at zero temperature (single-excitation Jaynes-Cummings sector).
//!
//! Times are dimensionless `gamma t`; `lambda` and `delta` enter through
//! `lambda / gamma` and `delta / gamma`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::elt::{PopulationSeries, Source};
use crate::error::{Error, Result};
use crate::integrate::rk4;
use crate::linalg::{c64, C64};

/// RK4 steps per unit of `gamma t`.
pub const STEPS_PER_UNIT: f64 = 1000.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JCParams {
    pub gamma: f64,
    pub lambda: f64,
    pub delta: f64,
}

impl JCParams {
    pub fn new(gamma: f64, lambda: f64, delta: f64) -> Result<Self> {
        let p = Self {
            gamma,
            lambda,
            delta,
        };
        p.validate()?;
        Ok(p)
    }

    /// Resonant strong coupling, `lambda = 0.2 gamma`.
    pub fn strong() -> Self {
        Self {
            gamma: 1.0,
            lambda: 0.2,
            delta: 0.0,
        }
    }

    /// Detuned coupling, `lambda = 0.3 gamma`, `delta = 2.4 gamma`.
    pub fn detuned() -> Self {
        Self {
            gamma: 1.0,
            lambda: 0.3,
            delta: 2.4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if !self.delta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "delta must be finite, got {}",
                self.delta
            )));
        }
        Ok(())
    }

    /// `(lambda / gamma, delta / gamma)`.
    fn scaled(&self) -> (f64, f64) {
        (self.lambda / self.gamma, self.delta / self.gamma)
    }
}

/// `J(x) = gamma lambda^2 / (2 pi ((delta + x)^2 + lambda^2))` with `x = omega - omega_0`.
pub fn spectral_density(p: &JCParams, x: f64) -> f64 {
    let shifted = p.delta + x;
    p.gamma * p.lambda * p.lambda / (2.0 * PI * (shifted * shifted + p.lambda * p.lambda))
}

/// Memory kernel `f(tau) = (l/2) exp(-(l - i d) tau)` in units of `gamma`.
pub fn memory_kernel(p: &JCParams, gamma_tau: f64) -> C64 {
    let (l, d) = p.scaled();
    (-(c64(l, -d)) * gamma_tau).exp() * (l / 2.0)
}

/// Excited amplitude `G` on an ascending grid, from the equivalent linear
/// system `G' = -(l/2) B`, `B' = G - (l - i d) B`.
pub fn amplitude_ode(p: &JCParams, grid: &[f64]) -> Result<Vec<C64>> {
    p.validate()?;
    check_grid(grid)?;
    let (l, d) = p.scaled();
    let mu = c64(l, -d);
    let rhs = move |_t: f64, y: &[C64]| vec![-(l / 2.0) * y[1], y[0] - mu * y[1]];
    let mut state = vec![c64(1.0, 0.0), c64(0.0, 0.0)];
    let mut t = 0.0;
    let mut out = Vec::with_capacity(grid.len());
    for &target in grid {
        let steps = ((target - t) * STEPS_PER_UNIT).ceil() as usize;
        state = rk4(rhs, &state, t, target, steps);
        t = target;
        out.push(state[0]);
    }
    Ok(out)
}

/// Closed-form amplitude `e^{-mu t/2} [cosh(k t/2) + (mu/k) sinh(k t/2)]`,
/// `mu = l - i d`, `k = sqrt(mu^2 - 2 l)`.
pub fn amplitude_closed_form(p: &JCParams, gamma_t: f64) -> C64 {
    let (l, d) = p.scaled();
    let mu = c64(l, -d);
    let k = (mu * mu - 2.0 * l).sqrt();
    let half = gamma_t / 2.0;
    if (k * half).norm() < 1e-6 {
        // cosh(z) + (mu/k) sinh(z) -> 1 + mu t/2 as k -> 0
        let z2 = (k * half) * (k * half);
        return (-mu * half).exp() * (1.0 + z2 / 2.0 + mu * half * (1.0 + z2 / 6.0));
    }
    // Written with decaying exponentials only, so large k t cannot overflow.
    let plus = (1.0 + mu / k) * ((k - mu) * half).exp();
    let minus = (1.0 - mu / k) * ((-k - mu) * half).exp();
    (plus + minus) / 2.0
}

fn check_grid(grid: &[f64]) -> Result<()> {
    let mut prev = 0.0;
    for &t in grid {
        if t.is_nan() || t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        if t < prev {
            return Err(Error::GridMismatch(format!(
                "grid must be ascending, {t} follows {prev}"
            )));
        }
        prev = t;
    }
    Ok(())
}

/// `rho_11(t) = |G(t)|^2 rho11_0` from the kernel equation.
pub fn exact_populations(p: &JCParams, grid: &[f64], rho11_0: f64) -> Result<PopulationSeries> {
    if !(0.0..=1.0).contains(&rho11_0) {
        return Err(Error::InvalidParameter(format!(
            "initial excited population {rho11_0} outside [0, 1]"
        )));
    }
    let g = amplitude_ode(p, grid)?;
    let excited: Vec<f64> = g.iter().map(|z| z.norm_sqr() * rho11_0).collect();
    let ground = excited.iter().map(|e| 1.0 - e).collect();
    PopulationSeries::new(grid.to_vec(), ground, excited, Source::Exact)
}
