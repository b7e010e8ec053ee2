use num_complex::Complex64;
use rand::RngCore;

use super::Law;
use crate::error::{Error, Result};
use crate::rng::open01;

/// Uniform law on `(-c, c)`, variance `c²/3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uniform {
    c: f64,
}

impl Uniform {
    pub fn new(c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::domain("uniform", format!("need half-width c > 0, got {c}")));
        }
        Ok(Self { c })
    }

    pub fn half_width(&self) -> f64 {
        self.c
    }
}

impl Law for Uniform {
    fn name(&self) -> String {
        format!("Uniform(-{0}, {0})", self.c)
    }

    fn support(&self) -> (f64, f64) {
        (-self.c, self.c)
    }

    fn cdf(&self, x: f64) -> f64 {
        ((x + self.c) / (2.0 * self.c)).clamp(0.0, 1.0)
    }

    fn sf(&self, x: f64) -> f64 {
        ((self.c - x) / (2.0 * self.c)).clamp(0.0, 1.0)
    }

    fn quantile(&self, u: f64) -> f64 {
        self.c * (2.0 * u - 1.0)
    }

    fn density(&self, x: f64) -> Option<f64> {
        Some(if x.abs() < self.c { 0.5 / self.c } else { 0.0 })
    }

    fn raw_moment(&self, r: u32) -> Option<f64> {
        Some(if r % 2 == 1 {
            0.0
        } else {
            self.c.powi(r as i32) / f64::from(r + 1)
        })
    }

    fn abs_moment(&self, r: f64) -> Option<f64> {
        if r <= -1.0 {
            return None;
        }
        Some(self.c.powf(r) / (r + 1.0))
    }

    fn atoms(&self) -> Vec<f64> {
        vec![-self.c, self.c]
    }

    fn cf(&self, t: f64) -> Option<Complex64> {
        let ct = self.c * t;
        Some(Complex64::new(if ct == 0.0 { 1.0 } else { ct.sin() / ct }, 0.0))
    }

    fn sample_square_biased(&self, rng: &mut dyn RngCore) -> Option<f64> {
        // |X| has density 3x²/c³ on (0, c).
        let v = self.c * open01(rng).cbrt();
        Some(if rng.next_u32() & 1 == 0 { v } else { -v })
    }

    fn lower_partial_mean(&self, x: f64) -> f64 {
        let c = self.c;
        if x <= -c {
            0.0
        } else if x >= c {
            x
        } else {
            (x + c).powi(2) / (4.0 * c)
        }
    }

    fn upper_partial_mean(&self, x: f64) -> f64 {
        let c = self.c;
        if x >= c {
            0.0
        } else if x <= -c {
            -x
        } else {
            (c - x).powi(2) / (4.0 * c)
        }
    }
}
