use std::f64::consts::LN_2;

use rand::RngCore;

use super::Law;
use crate::error::{Error, Result};
use crate::rng::open01;
use crate::solve::newton_bracketed;
use crate::specfun::{gamma_p, gamma_q, log_gamma_unchecked};

/// Rayleigh(σ): density `x/σ² · e^{-x²/(2σ²)}` on `x > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rayleigh {
    sigma: f64,
}

impl Rayleigh {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::domain("rayleigh", format!("need sigma > 0, got {sigma}")));
        }
        Ok(Self { sigma })
    }

    /// The limit variable with density `2x e^{-x²}` (σ = 1/√2).
    pub fn unit_second_moment() -> Self {
        Self {
            sigma: std::f64::consts::FRAC_1_SQRT_2,
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl Law for Rayleigh {
    fn name(&self) -> String {
        format!("Rayleigh({})", self.sigma)
    }

    fn support(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        -(-0.5 * (x / self.sigma).powi(2)).exp_m1()
    }

    fn sf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        (-0.5 * (x / self.sigma).powi(2)).exp()
    }

    fn quantile(&self, u: f64) -> f64 {
        self.sigma * (-2.0 * (-u).ln_1p()).sqrt()
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        self.sigma * (-2.0 * open01(rng).ln()).sqrt()
    }

    fn density(&self, x: f64) -> Option<f64> {
        if x <= 0.0 {
            return Some(0.0);
        }
        let s2 = self.sigma * self.sigma;
        Some(x / s2 * (-0.5 * x * x / s2).exp())
    }

    fn raw_moment(&self, r: u32) -> Option<f64> {
        self.abs_moment(f64::from(r))
    }

    fn abs_moment(&self, r: f64) -> Option<f64> {
        if r <= -2.0 {
            return None;
        }
        // σ^r 2^{r/2} Γ(1 + r/2)
        Some(self.sigma.powf(r) * (0.5 * r * LN_2 + log_gamma_unchecked(1.0 + 0.5 * r)).exp())
    }

    fn tail_bounds(&self, eps: f64) -> (f64, f64) {
        (0.0, self.sigma * (-2.0 * eps.ln()).max(0.0).sqrt())
    }
}

/// Chi law with `k > 0` degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chi {
    k: f64,
    log_norm: f64,
}

impl Chi {
    pub fn new(k: f64) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::domain("chi", format!("need k > 0, got {k}")));
        }
        let log_norm = (0.5 * k - 1.0) * LN_2 + log_gamma_unchecked(0.5 * k);
        Ok(Self { k, log_norm })
    }

    pub fn dof(&self) -> f64 {
        self.k
    }

    /// Solves `sf(x) = q`, accurate for `q` far below machine epsilon.
    pub fn upper_quantile(&self, q: f64) -> f64 {
        if q >= 0.5 {
            return self.quantile(1.0 - q);
        }
        if q <= 0.0 {
            return f64::INFINITY;
        }
        let mut hi = self.k.sqrt() + 4.0;
        while self.sf(hi) > q {
            hi *= 2.0;
        }
        newton_bracketed(|x| q - self.sf(x), |x| self.density(x).unwrap_or(0.0), 0.0, hi, 1e-13 * hi)
    }

    /// `ln ρ(x)` for `x > 0`.
    pub fn log_density(&self, x: f64) -> f64 {
        (self.k - 1.0) * x.ln() - 0.5 * x * x - self.log_norm
    }
}

impl Law for Chi {
    fn name(&self) -> String {
        format!("Chi({})", self.k)
    }

    fn support(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        gamma_p(0.5 * self.k, 0.5 * x * x).expect("valid incomplete gamma arguments")
    }

    fn sf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        gamma_q(0.5 * self.k, 0.5 * x * x).expect("valid incomplete gamma arguments")
    }

    fn quantile(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return f64::INFINITY;
        }
        let mut hi = (self.k).sqrt() + 4.0;
        while self.cdf(hi) < u {
            hi *= 2.0;
        }
        newton_bracketed(
            |x| {
                if u > 0.5 {
                    (1.0 - u) - self.sf(x)
                } else {
                    self.cdf(x) - u
                }
            },
            |x| self.density(x).unwrap_or(0.0),
            0.0,
            hi,
            1e-13 * hi,
        )
    }

    fn density(&self, x: f64) -> Option<f64> {
        if x <= 0.0 {
            return Some(if x == 0.0 && self.k == 1.0 {
                (-self.log_norm).exp()
            } else {
                0.0
            });
        }
        Some(self.log_density(x).exp())
    }

    fn raw_moment(&self, r: u32) -> Option<f64> {
        self.abs_moment(f64::from(r))
    }

    fn abs_moment(&self, r: f64) -> Option<f64> {
        if r <= -self.k {
            return None;
        }
        // 2^{r/2} Γ((k+r)/2) / Γ(k/2)
        let log = 0.5 * r * LN_2 + log_gamma_unchecked(0.5 * (self.k + r)) - log_gamma_unchecked(0.5 * self.k);
        Some(log.exp())
    }

    fn tail_bounds(&self, eps: f64) -> (f64, f64) {
        (0.0, self.upper_quantile(eps))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::test_support::assert_quantile_inverts_cdf;
    use crate::quad::Integrator;

    #[test]
    fn rejects_bad_parameters() {
        assert!(Rayleigh::new(0.0).is_err());
        assert!(Chi::new(-1.0).is_err());
    }

    #[test]
    fn unit_rayleigh_density_cdf_mean() {
        let u = Rayleigh::unit_second_moment();
        for &x in &[0.1, 0.7, 1.5, 3.0] {
            assert!((u.density(x).unwrap() - 2.0 * x * (-x * x).exp()).abs() < 1e-15);
            assert!((u.cdf(x) - (1.0 - (-x * x).exp())).abs() < 1e-15);
        }
        assert!((u.raw_moment(1).unwrap() - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-14);
        assert!((u.raw_moment(2).unwrap() - 1.0).abs() < 1e-14);
        assert_quantile_inverts_cdf(&u, 1e-8);
    }

    #[test]
    fn chi_two_is_standard_rayleigh() {
        let c = Chi::new(2.0).unwrap();
        for &x in &[0.2, 1.0, 2.5] {
            assert!((c.density(x).unwrap() - x * (-0.5 * x * x).exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn chi_mode_and_mass() {
        let c = Chi::new(3.0).unwrap();
        let m = 2f64.sqrt();
        let d0 = c.log_density(m);
        assert!(c.log_density(m - 1e-4) < d0 && c.log_density(m + 1e-4) < d0);
        for &k in &[0.7, 1.0, 3.0, 10.0] {
            let c = Chi::new(k).unwrap();
            let mass = Integrator::new(1e-12, 1e-13)
                .integrate(|x| c.density(x).unwrap(), 0.0, 40.0, &[])
                .unwrap()
                .value;
            assert!((mass - 1.0).abs() < 1e-10, "k = {k}: {mass}");
        }
    }

    #[test]
    fn chi_cdf_matches_density_and_moments() {
        let c = Chi::new(5.0).unwrap();
        let q = Integrator::default().integrate(|x| c.density(x).unwrap(), 0.0, 1.7, &[]).unwrap();
        assert!((q.value - c.cdf(1.7)).abs() < 1e-12);
        assert!((c.raw_moment(2).unwrap() - 5.0).abs() < 1e-12);
        assert_quantile_inverts_cdf(&c, 1e-10);
    }

    #[test]
    fn deep_upper_quantile() {
        let c = Chi::new(2.0).unwrap();
        let x = c.upper_quantile(1e-17);
        assert!((x - (2.0 * 1e17f64.ln()).sqrt()).abs() < 1e-9);
        assert!(c.tail_bounds(1e-17).1.is_finite());
    }
}
