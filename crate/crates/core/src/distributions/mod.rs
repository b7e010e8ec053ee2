//! Catalog of one-dimensional laws used by the limit theorems.
//!
//! Every law implements [`Law`]; a [`DistributionHandle`] is a shared,
//! immutable pointer to one. Optional capabilities (density, moments,
//! characteristic function, ...) return `None` when unavailable.

mod beta;
mod chi;
mod discrete;
mod geometric;
mod laplace;
mod normal;
mod summand;
mod uniform;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::RngCore;

pub use beta::{scaled_beta_root_moment, Beta1, ScaledBetaRoot};
pub use chi::{Chi, Rayleigh};
pub use discrete::{PointMass, Rademacher, ScaledRademacherSum, TwoPoint};
pub use geometric::Geometric;
pub use laplace::{Laplace, LaplaceParams};
pub use normal::{normal_quantile, Normal};
pub use summand::{summand_library, SummandConfig, SummandSpec};
pub use uniform::Uniform;

use crate::quad::Integrator;
use crate::rng::open01;

/// Capability interface of a one-dimensional law.
pub trait Law: Send + Sync + fmt::Debug {
    fn name(&self) -> String;

    /// Closure of the support; endpoints may be infinite.
    fn support(&self) -> (f64, f64);

    fn cdf(&self, x: f64) -> f64;

    /// Survival function `P(X > x)`; overridden where `1 - cdf` cancels.
    fn sf(&self, x: f64) -> f64 {
        1.0 - self.cdf(x)
    }

    /// Generalized inverse `inf{x : F(x) >= u}` for `u ∈ (0, 1)`.
    fn quantile(&self, u: f64) -> f64;

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        self.quantile(open01(rng))
    }

    /// Sum of `terms` independent draws.
    fn sample_sum(&self, terms: u64, rng: &mut dyn RngCore) -> f64 {
        (0..terms).map(|_| self.sample(rng)).sum()
    }

    fn density(&self, _x: f64) -> Option<f64> {
        None
    }

    /// `E[X^r]`.
    fn raw_moment(&self, _r: u32) -> Option<f64> {
        None
    }

    /// `E|X|^r`.
    fn abs_moment(&self, _r: f64) -> Option<f64> {
        None
    }

    /// Points where the cdf jumps or has a kink.
    fn atoms(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Points `(lo, hi)` with `P(X < lo) <= eps` and `P(X > hi) <= eps`.
    fn tail_bounds(&self, eps: f64) -> (f64, f64) {
        let (lo, hi) = self.support();
        let lo = if lo.is_finite() { lo } else { self.quantile(eps) };
        let hi = if hi.is_finite() { hi } else { self.quantile(1.0 - eps) };
        (lo, hi)
    }

    /// Characteristic function `E[e^{itX}]`.
    fn cf(&self, _t: f64) -> Option<Complex64> {
        None
    }

    /// A draw from the square-biased law `x² dF(x) / E[X²]`.
    fn sample_square_biased(&self, _rng: &mut dyn RngCore) -> Option<f64> {
        None
    }

    /// `E[(x - X)^+] = ∫_{-∞}^x F(t) dt`.
    fn lower_partial_mean(&self, x: f64) -> f64 {
        let (lo, _) = self.tail_bounds(1e-17);
        if x <= lo {
            return 0.0;
        }
        tail_integral(|t| self.cdf(t), lo, x, &self.atoms())
    }

    /// `E[(X - x)^+] = ∫_x^∞ (1 - F(t)) dt`.
    fn upper_partial_mean(&self, x: f64) -> f64 {
        let (_, hi) = self.tail_bounds(1e-17);
        if x >= hi {
            return 0.0;
        }
        tail_integral(|t| self.sf(t), x, hi, &self.atoms())
    }
}

fn tail_integral<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64]) -> f64 {
    Integrator::new(1e-13, 1e-12)
        .integrate(f, a, b, breaks)
        .map(|r| r.value)
        .unwrap_or(f64::NAN)
}

/// Shared handle to an immutable law.
pub type DistributionHandle = Arc<dyn Law>;

pub fn laplace_handle(params: LaplaceParams) -> crate::error::Result<DistributionHandle> {
    Ok(Arc::new(Laplace::from_params(params)?))
}

pub fn rayleigh_handle(sigma: f64) -> crate::error::Result<DistributionHandle> {
    Ok(Arc::new(Rayleigh::new(sigma)?))
}

pub fn chi_handle(k: f64) -> crate::error::Result<DistributionHandle> {
    Ok(Arc::new(Chi::new(k)?))
}

/// Which optional capabilities a law provides.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Capabilities {
    pub density: bool,
    pub raw_moments: bool,
    pub abs_moments: bool,
    pub cf: bool,
}

pub fn capabilities(law: &dyn Law) -> Capabilities {
    let (lo, hi) = law.tail_bounds(0.25);
    let probe = 0.5 * (lo + hi);
    Capabilities {
        density: law.density(probe).is_some(),
        raw_moments: law.raw_moment(2).is_some(),
        abs_moments: law.abs_moment(1.0).is_some(),
        cf: law.cf(1.0).is_some(),
    }
}
