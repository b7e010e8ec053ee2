use num_complex::Complex64;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::Law;
use crate::error::{Error, Result};
use crate::rng::open01;
use crate::specfun::log_gamma_unchecked;

/// Location `a` and scale `b` of a Laplace law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceParams {
    pub a: f64,
    pub b: f64,
}

/// Laplace(a, b): density `e^{-|x-a|/b} / (2b)`, variance `2b²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Laplace {
    a: f64,
    b: f64,
}

impl Laplace {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(b > 0.0) || !b.is_finite() || !a.is_finite() {
            return Err(Error::domain("laplace", format!("need finite a and b > 0, got a = {a}, b = {b}")));
        }
        Ok(Self { a, b })
    }

    pub fn from_params(p: LaplaceParams) -> Result<Self> {
        Self::new(p.a, p.b)
    }

    /// Centered law with variance `sigma²`.
    pub fn with_sigma(sigma: f64) -> Result<Self> {
        Self::new(0.0, sigma / std::f64::consts::SQRT_2)
    }

    pub fn params(&self) -> LaplaceParams {
        LaplaceParams { a: self.a, b: self.b }
    }

    pub fn location(&self) -> f64 {
        self.a
    }

    pub fn scale(&self) -> f64 {
        self.b
    }

    pub fn variance(&self) -> f64 {
        2.0 * self.b * self.b
    }
}

/// `E[Y^k]` for standard Laplace `Y`: `k!` for even `k`, 0 otherwise.
fn standard_moment(k: u32) -> f64 {
    if k % 2 == 1 {
        0.0
    } else {
        (1..=k).map(f64::from).product()
    }
}

impl Law for Laplace {
    fn name(&self) -> String {
        format!("Laplace({}, {})", self.a, self.b)
    }

    fn support(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }

    fn cdf(&self, x: f64) -> f64 {
        let z = (x - self.a) / self.b;
        if z < 0.0 {
            0.5 * z.exp()
        } else {
            1.0 - 0.5 * (-z).exp()
        }
    }

    fn sf(&self, x: f64) -> f64 {
        let z = (x - self.a) / self.b;
        if z > 0.0 {
            0.5 * (-z).exp()
        } else {
            1.0 - 0.5 * z.exp()
        }
    }

    fn quantile(&self, u: f64) -> f64 {
        if u < 0.5 {
            self.a + self.b * (2.0 * u).ln()
        } else {
            self.a - self.b * (2.0 * (1.0 - u)).ln()
        }
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        // Exponential magnitude with an independent sign bit.
        let bits = rng.next_u64();
        let u = ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64);
        let e = -self.b * u.ln();
        if bits & 1 == 0 {
            self.a + e
        } else {
            self.a - e
        }
    }

    fn density(&self, x: f64) -> Option<f64> {
        Some((-(x - self.a).abs() / self.b).exp() / (2.0 * self.b))
    }

    fn raw_moment(&self, r: u32) -> Option<f64> {
        // E[(a + bY)^r] by the binomial expansion.
        let mut total = 0.0;
        let mut binom = 1.0;
        for k in 0..=r {
            if k > 0 {
                binom *= f64::from(r - k + 1) / f64::from(k);
            }
            total += binom * self.b.powi(k as i32) * standard_moment(k) * self.a.powi((r - k) as i32);
        }
        Some(total)
    }

    fn abs_moment(&self, r: f64) -> Option<f64> {
        if self.a != 0.0 || r <= -1.0 {
            return None;
        }
        Some(self.b.powf(r) * log_gamma_unchecked(r + 1.0).exp())
    }

    fn atoms(&self) -> Vec<f64> {
        vec![self.a]
    }

    fn tail_bounds(&self, eps: f64) -> (f64, f64) {
        let w = self.b * (0.5 / eps).ln().max(0.0);
        (self.a - w, self.a + w)
    }

    fn cf(&self, t: f64) -> Option<Complex64> {
        let bt = self.b * t;
        Some(Complex64::from_polar(1.0, t * self.a) / (1.0 + bt * bt))
    }

    fn sample_square_biased(&self, rng: &mut dyn RngCore) -> Option<f64> {
        if self.a != 0.0 {
            return None;
        }
        // |X| has Gamma(3, b) law under the x² tilt.
        let g = -self.b * (open01(rng) * open01(rng) * open01(rng)).ln();
        Some(if rng.next_u32() & 1 == 0 { g } else { -g })
    }

    fn lower_partial_mean(&self, x: f64) -> f64 {
        let z = (x - self.a) / self.b;
        if z < 0.0 {
            0.5 * self.b * z.exp()
        } else {
            (x - self.a) + 0.5 * self.b * (-z).exp()
        }
    }

    fn upper_partial_mean(&self, x: f64) -> f64 {
        let z = (x - self.a) / self.b;
        if z > 0.0 {
            0.5 * self.b * (-z).exp()
        } else {
            (self.a - x) + 0.5 * self.b * z.exp()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::test_support::assert_quantile_inverts_cdf;
    use crate::quad::Integrator;
    use crate::rng::stream_rng;

    #[test]
    fn rejects_bad_scale() {
        assert!(Laplace::new(0.0, 0.0).is_err());
        assert!(Laplace::new(0.0, -1.0).is_err());
        assert!(Laplace::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn peak_variance_and_mean_abs() {
        for &(a, b) in &[(0.0, 1.0), (1.5, 0.5), (-2.0, 3.0)] {
            let l = Laplace::new(a, b).unwrap();
            assert!((l.density(a).unwrap() - 1.0 / (2.0 * b)).abs() < 1e-15);
            let var = l.raw_moment(2).unwrap() - l.raw_moment(1).unwrap().powi(2);
            assert!((var - 2.0 * b * b).abs() < 1e-12 * (1.0 + b * b));
        }
        let l = Laplace::new(0.0, 2.5).unwrap();
        assert!((l.abs_moment(1.0).unwrap() - 2.5).abs() < 1e-12);
        assert!((Laplace::new(0.0, 1.0).unwrap().abs_moment(3.0).unwrap() - 6.0).abs() < 1e-10);
    }

    #[test]
    fn moments_match_quadrature() {
        let l = Laplace::new(0.7, 1.3).unwrap();
        for r in 0..=4u32 {
            let q = Integrator::new(1e-12, 1e-13)
                .integrate(|x| x.powi(r as i32) * l.density(x).unwrap(), -80.0, 80.0, &[0.7])
                .unwrap();
            let m = l.raw_moment(r).unwrap();
            assert!((q.value - m).abs() < 1e-9 * (1.0 + m.abs()), "r = {r}");
        }
    }

    #[test]
    fn partial_means_match_quadrature() {
        let l = Laplace::new(0.3, 0.8).unwrap();
        for &x in &[-2.0, 0.0, 0.3, 1.0, 4.0] {
            let lo = Integrator::default().integrate(|t| l.cdf(t), -60.0, x, &[0.3]).unwrap().value;
            let hi = Integrator::default().integrate(|t| l.sf(t), x, 60.0, &[0.3]).unwrap().value;
            assert!((l.lower_partial_mean(x) - lo).abs() < 1e-10);
            assert!((l.upper_partial_mean(x) - hi).abs() < 1e-10);
        }
    }

    #[test]
    fn quantile_round_trip() {
        assert_quantile_inverts_cdf(&Laplace::new(1.0, 2.0).unwrap(), 1e-10);
    }

    #[test]
    fn square_biased_second_moment() {
        // Under the x² tilt, E|X|^2 = E X^4 / E X^2 = 24 b^4 / (2 b^2) = 12 b^2.
        let l = Laplace::new(0.0, 0.5).unwrap();
        let mut rng = stream_rng(3, 0);
        let n = 200_000;
        let m: f64 = (0..n).map(|_| l.sample_square_biased(&mut rng).unwrap().powi(2)).sum::<f64>() / n as f64;
        assert!((m - 3.0).abs() < 0.05, "m = {m}");
    }
}
