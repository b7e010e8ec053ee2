//! The chi(k) Stein equation `x f'(x) + (k - x²) f(x) = h(x) - E h(K)` and
//! the constants it yields for the Rayleigh law.

use std::f64::consts::{FRAC_PI_2, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::distributions::{Chi, Law, ScaledBetaRoot};
use crate::error::{Error, Result};
use crate::quad::Integrator;
use crate::solve::bisect;
use crate::specfun::{erf, log_gamma};
use crate::stein_laplace::TestFunction;

/// Solution of the chi(k) Stein equation for one test function.
#[derive(Debug, Clone)]
pub struct ChiSteinSolution {
    pub k: f64,
    pub h: TestFunction,
    /// `E h(K)`.
    pub mean: f64,
    /// Crossover between the lower and upper integral forms.
    pub median: f64,
    chi: Chi,
    integrator: Integrator,
}

pub fn chi_stein_solve(h: TestFunction, k: f64) -> Result<ChiSteinSolution> {
    let chi = Chi::new(k)?;
    let (_, top) = chi.tail_bounds(1e-17);
    let mut breaks: Vec<f64> = h.kinks().into_iter().filter(|&t| t > 0.0 && t < top).collect();
    breaks.push(k.sqrt());
    let mean = Integrator::new(1e-14, 1e-13)
        .integrate(|t| h.value(t) * chi.density(t).unwrap_or(0.0), 0.0, top, &breaks)?
        .value;
    Ok(ChiSteinSolution {
        k,
        h,
        mean,
        median: chi.quantile(0.5),
        chi,
        integrator: Integrator::new(1e-13, 1e-12),
    })
}

impl ChiSteinSolution {
    pub fn h_tilde(&self, x: f64) -> f64 {
        self.h.value(x) - self.mean
    }

    /// `ρ(t)/ρ(x)`.
    fn weight(&self, t: f64, x: f64) -> f64 {
        ((self.k - 1.0) * (t / x).ln() + 0.5 * (x * x - t * t)).exp()
    }

    fn kinks_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        self.h.kinks().into_iter().filter(|&t| t > lo && t < hi).collect()
    }

    /// `(1/(xρ(x))) ∫_0^x h̃ ρ`.
    pub fn f_lower(&self, x: f64) -> Result<f64> {
        let r = self
            .integrator
            .integrate(|t| self.h_tilde(t) * self.weight(t, x), 0.0, x, &self.kinks_in(0.0, x))
            .map_err(|e| at(e, x))?;
        Ok(r.value / x)
    }

    /// `-(1/(xρ(x))) ∫_x^∞ h̃ ρ`, truncated where `ρ(t)/ρ(x) < e^{-45}`.
    pub fn f_upper(&self, x: f64) -> Result<f64> {
        let top = (x * x + 90.0).sqrt();
        let r = self
            .integrator
            .integrate(|t| self.h_tilde(t) * self.weight(t, x), x, top, &self.kinks_in(x, top))
            .map_err(|e| at(e, x))?;
        Ok(-r.value / x)
    }

    pub fn f(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::domain("chi_stein", format!("need x > 0, got {x}")));
        }
        if x <= self.median {
            self.f_lower(x)
        } else {
            self.f_upper(x)
        }
    }

    /// `f' = (h̃ - (k - x²) f) / x`.
    pub fn f1(&self, x: f64) -> Result<f64> {
        Ok((self.h_tilde(x) - (self.k - x * x) * self.f(x)?) / x)
    }

    /// `x f' + (k - x²) f - h̃` with `f'` from central differences of `f`.
    pub fn residual(&self, x: f64) -> Result<f64> {
        let step = 1e-4 * x.max(0.1);
        let fd = (self.f(x + step)? - self.f(x - step)?) / (2.0 * step);
        Ok(x * fd + (self.k - x * x) * self.f(x)? - self.h_tilde(x))
    }

    pub fn near_kink(&self, x: f64, margin: f64) -> bool {
        self.h.kinks().iter().any(|k| (x - k).abs() < margin)
    }

    pub fn law(&self) -> &Chi {
        &self.chi
    }
}

fn at(e: Error, x: f64) -> Error {
    match e {
        Error::Quadrature { error, .. } => Error::Quadrature { x, error },
        other => other,
    }
}

/// `Γ(k/2) e^{k/2} / (2 (k/2)^{k/2})`, the uniform bound on `‖f‖/‖h̃‖`.
pub fn chi_uniform_constant(k: f64) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::domain("chi_uniform_constant", format!("need k > 0, got {k}")));
    }
    let h = 0.5 * k;
    Ok((log_gamma(h)? + h - h * h.ln()).exp() / 2.0)
}

/// `M = max{F(m), 1 - F(m)} / (m ρ(m))` at the sign change `m = √k`.
pub fn schoutens_m(k: f64) -> Result<f64> {
    let chi = Chi::new(k)?;
    let m = k.sqrt();
    let f = chi.cdf(m);
    Ok(f.max(1.0 - f) / (m * chi.density(m).unwrap_or(f64::NAN)))
}

/// `ρ_R(x) = x e^{-x²/2}` (σ = 1).
pub fn rayleigh_density(x: f64) -> f64 {
    x * (-0.5 * x * x).exp()
}

/// `∫_0^x (√(π/2) + t) ρ_R(t) dt`.
pub fn rayleigh_i1(x: f64) -> f64 {
    let c = FRAC_PI_2.sqrt();
    let e = (-0.5 * x * x).exp();
    c * (1.0 - e) + c * erf(x / SQRT_2) - x * e
}

/// `∫_x^∞ (√(π/2) + t) ρ_R(t) dt`.
pub fn rayleigh_i2(x: f64) -> f64 {
    let c = FRAC_PI_2.sqrt();
    let e = (-0.5 * x * x).exp();
    c * (1.0 + e) - c * erf(x / SQRT_2) + x * e
}

/// Constants in the Lipschitz bounds for the unit Rayleigh Stein solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayleighConstants {
    /// Crossing of `I₁/ρ_R` and `I₂/ρ_R`.
    pub x_star: f64,
    /// `‖x f(x)‖ / ‖h'‖`.
    pub c_xf: f64,
    /// `‖f'‖ / ‖h'‖`.
    pub c_fprime: f64,
    /// `‖x f''(x)‖ / ‖h'‖`.
    pub c_xfpp: f64,
}

pub fn rayleigh_constants() -> Result<RayleighConstants> {
    let x_star = bisect(|x| rayleigh_i1(x) - rayleigh_i2(x), 0.5, 3.0, 1e-10)?;
    let c_xf = rayleigh_i1(x_star) / rayleigh_density(x_star);
    let chi3 = chi_uniform_constant(3.0)?;
    Ok(RayleighConstants {
        x_star,
        c_xf,
        c_fprime: chi3 * (1.0 + 2.0 * c_xf),
        c_xfpp: 2.0 * (1.0 + 2.0 * c_xf),
    })
}

/// Stein operators checked by [`operator_mean_zero_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SteinOperator {
    /// `σ² x f' + (2σ² - x²) f` for `Rayleigh(σ)`.
    Rayleigh { sigma: f64 },
    /// `x(1 - x²/n) f' + (2 - 2x²) f` for `U_n`.
    ScaledBeta { n: u32 },
}

/// `E[A f(X)]` by quadrature against the exact density of `X`.
pub fn operator_mean_zero_check<F, D>(op: SteinOperator, f: F, df: D) -> Result<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let q = Integrator::new(1e-11, 1e-11);
    match op {
        SteinOperator::Rayleigh { sigma } => {
            if !(sigma > 0.0) {
                return Err(Error::domain("operator_mean_zero_check", format!("need sigma > 0, got {sigma}")));
            }
            let s2 = sigma * sigma;
            let top = sigma * 80f64.sqrt();
            let r = q.integrate(
                |x| (s2 * x * df(x) + (2.0 * s2 - x * x) * f(x)) * x / s2 * (-0.5 * x * x / s2).exp(),
                0.0,
                top,
                &[],
            )?;
            Ok(r.value)
        }
        SteinOperator::ScaledBeta { n } => {
            let law = ScaledBetaRoot::new(n)?;
            let nf = f64::from(n);
            let r = q.integrate(
                |x| (x * (1.0 - x * x / nf) * df(x) + (2.0 - 2.0 * x * x) * f(x)) * law.density(x).unwrap_or(0.0),
                0.0,
                nf.sqrt(),
                &[],
            )?;
            Ok(r.value)
        }
    }
}
