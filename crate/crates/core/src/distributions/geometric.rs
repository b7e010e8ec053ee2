use num_complex::Complex64;
use rand::RngCore;

use super::Law;
use crate::error::{Error, Result};
use crate::rng::open01;

/// Geometric law on `{1, 2, ...}` with `P(N = k) = p(1-p)^{k-1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometric {
    p: f64,
    log_q: f64,
}

impl Geometric {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::domain("geometric", format!("need 0 < p < 1, got {p}")));
        }
        Ok(Self { p, log_q: (-p).ln_1p() })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Inverse-transform draw `⌈ln U / ln(1-p)⌉`.
    pub fn sample_count(&self, rng: &mut dyn RngCore) -> u64 {
        let k = (open01(rng).ln() / self.log_q).ceil();
        if k < 1.0 {
            1
        } else {
            k as u64
        }
    }

    pub fn pmf(&self, k: u64) -> f64 {
        if k == 0 {
            return 0.0;
        }
        self.p * ((k - 1) as f64 * self.log_q).exp()
    }

    /// `E[1/N] = p ln(1/p) / (1-p)`.
    pub fn mean_inverse(&self) -> f64 {
        -self.p * self.p.ln() / (1.0 - self.p)
    }

    /// `E[1/√N]` by direct summation of the series.
    pub fn mean_inverse_sqrt(&self) -> f64 {
        let mut total = 0.0;
        let mut k = 1u64;
        loop {
            let term = self.pmf(k) / (k as f64).sqrt();
            total += term;
            if term < 1e-18 * total && k > 10 {
                break;
            }
            k += 1;
        }
        total
    }
}

impl Law for Geometric {
    fn name(&self) -> String {
        format!("Geometric({})", self.p)
    }

    fn support(&self) -> (f64, f64) {
        (1.0, f64::INFINITY)
    }

    fn cdf(&self, x: f64) -> f64 {
        if x < 1.0 {
            0.0
        } else {
            -(x.floor() * self.log_q).exp_m1()
        }
    }

    fn sf(&self, x: f64) -> f64 {
        if x < 1.0 {
            1.0
        } else {
            (x.floor() * self.log_q).exp()
        }
    }

    fn quantile(&self, u: f64) -> f64 {
        let mut k = ((-u).ln_1p() / self.log_q).ceil().max(1.0);
        // The logarithm ratio can land one step off at exact cdf values.
        while k > 1.0 && self.cdf(k - 1.0) >= u {
            k -= 1.0;
        }
        while self.cdf(k) < u {
            k += 1.0;
        }
        k
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        self.sample_count(rng) as f64
    }

    fn raw_moment(&self, r: u32) -> Option<f64> {
        let p = self.p;
        match r {
            0 => Some(1.0),
            1 => Some(1.0 / p),
            2 => Some((2.0 - p) / (p * p)),
            _ => None,
        }
    }

    fn abs_moment(&self, r: f64) -> Option<f64> {
        if r == -1.0 {
            return Some(self.mean_inverse());
        }
        if r == -0.5 {
            return Some(self.mean_inverse_sqrt());
        }
        if r >= 0.0 && r.fract() == 0.0 && r <= 2.0 {
            return self.raw_moment(r as u32);
        }
        None
    }

    fn atoms(&self) -> Vec<f64> {
        let hi = self.quantile(1.0 - 1e-12).min(100_000.0) as u64;
        (1..=hi).map(|k| k as f64).collect()
    }

    fn tail_bounds(&self, eps: f64) -> (f64, f64) {
        (1.0, self.quantile(1.0 - eps))
    }

    fn cf(&self, t: f64) -> Option<Complex64> {
        let e = Complex64::from_polar(1.0, t);
        Some(self.p * e / (1.0 - (1.0 - self.p) * e))
    }
}
