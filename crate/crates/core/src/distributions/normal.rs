use std::f64::consts::PI;

use num_complex::Complex64;
use rand::RngCore;

use super::Law;
use crate::error::{Error, Result};
use crate::rng::open01;
use crate::specfun::{log_gamma_unchecked, normal_cdf};

const A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_690e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996,
    3.754_408_661_907_416,
];

/// Standard normal quantile: rational initial guess refined by one Halley
/// step against `normal_cdf`.
pub fn normal_quantile(u: f64) -> f64 {
    if u <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if u >= 1.0 {
        return f64::INFINITY;
    }
    if u > 0.5 {
        return -normal_quantile(1.0 - u);
    }
    let x = if u < 0.02425 {
        let q = (-2.0 * u.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = u - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    let e = normal_cdf(x) - u;
    let step = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    x - step / (1.0 + 0.5 * x * step)
}

/// Normal(mu, sigma²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normal {
    mu: f64,
    sigma: f64,
}

impl Normal {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() || !mu.is_finite() {
            return Err(Error::domain("normal", format!("need sigma > 0, got {sigma}")));
        }
        Ok(Self { mu, sigma })
    }

    pub fn standard() -> Self {
        Self { mu: 0.0, sigma: 1.0 }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// `E[Z^k]` for standard normal `Z`.
fn standard_moment(k: u32) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    (1..k).step_by(2).map(f64::from).product()
}

impl Law for Normal {
    fn name(&self) -> String {
        format!("Normal({}, {})", self.mu, self.sigma)
    }

    fn support(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }

    fn cdf(&self, x: f64) -> f64 {
        normal_cdf((x - self.mu) / self.sigma)
    }

    fn sf(&self, x: f64) -> f64 {
        normal_cdf((self.mu - x) / self.sigma)
    }

    fn quantile(&self, u: f64) -> f64 {
        self.mu + self.sigma * normal_quantile(u)
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        // Box-Muller, discarding the sine branch to keep draws stateless.
        let r = (-2.0 * open01(rng).ln()).sqrt();
        let theta = 2.0 * PI * open01(rng);
        self.mu + self.sigma * r * theta.cos()
    }

    fn density(&self, x: f64) -> Option<f64> {
        let z = (x - self.mu) / self.sigma;
        Some((-0.5 * z * z).exp() / (self.sigma * (2.0 * PI).sqrt()))
    }

    fn raw_moment(&self, r: u32) -> Option<f64> {
        let mut total = 0.0;
        let mut binom = 1.0;
        for k in 0..=r {
            if k > 0 {
                binom *= f64::from(r - k + 1) / f64::from(k);
            }
            total += binom * self.sigma.powi(k as i32) * standard_moment(k) * self.mu.powi((r - k) as i32);
        }
        Some(total)
    }

    fn abs_moment(&self, r: f64) -> Option<f64> {
        if self.mu != 0.0 || r <= -1.0 {
            return None;
        }
        let log = 0.5 * r * 2f64.ln() + log_gamma_unchecked(0.5 * (r + 1.0)) - 0.5 * PI.ln();
        Some(self.sigma.powf(r) * log.exp())
    }

    fn tail_bounds(&self, eps: f64) -> (f64, f64) {
        let w = -self.sigma * normal_quantile(eps.min(0.5));
        (self.mu - w, self.mu + w)
    }

    fn cf(&self, t: f64) -> Option<Complex64> {
        let st = self.sigma * t;
        Some(Complex64::from_polar((-0.5 * st * st).exp(), self.mu * t))
    }

    fn sample_square_biased(&self, rng: &mut dyn RngCore) -> Option<f64> {
        if self.mu != 0.0 {
            return None;
        }
        // |X|/sigma is chi with three degrees of freedom.
        let mut s = 0.0;
        for _ in 0..3 {
            let z = Normal::standard().sample(rng);
            s += z * z;
        }
        let v = self.sigma * s.sqrt();
        Some(if rng.next_u32() & 1 == 0 { v } else { -v })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::test_support::assert_quantile_inverts_cdf;

    #[test]
    fn quantile_known_values() {
        assert_eq!(normal_quantile(0.5), 0.0);
        assert!((normal_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-12);
        assert!((normal_quantile(1e-10) + 6.361_340_902_404_056).abs() < 1e-9);
    }

    #[test]
    fn quantile_round_trip() {
        assert_quantile_inverts_cdf(&Normal::new(0.5, 2.0).unwrap(), 1e-9);
    }

    #[test]
    fn moments() {
        let n = Normal::new(0.0, 2.0).unwrap();
        assert_eq!(n.raw_moment(4).unwrap(), 48.0);
        assert!((n.abs_moment(1.0).unwrap() - 2.0 * (2.0 / PI).sqrt()).abs() < 1e-13);
        let m = Normal::new(1.0, 1.0).unwrap();
        assert!((m.raw_moment(2).unwrap() - 2.0).abs() < 1e-15);
        assert!((m.raw_moment(3).unwrap() - 4.0).abs() < 1e-15);
    }
}
