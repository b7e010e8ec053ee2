use rand::RngCore;

use super::Law;
use crate::error::{Error, Result};
use crate::rng::open01;
use crate::specfun::{log_gamma_ratio, log_gamma_unchecked};

/// Beta(1, m) on `[0, 1]`: cdf `1 - (1-x)^m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Beta1 {
    m: f64,
}

impl Beta1 {
    pub fn new(m: f64) -> Result<Self> {
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::domain("beta", format!("need m > 0, got {m}")));
        }
        Ok(Self { m })
    }
}

impl Law for Beta1 {
    fn name(&self) -> String {
        format!("Beta(1, {})", self.m)
    }

    fn support(&self) -> (f64, f64) {
        (0.0, 1.0)
    }

    fn cdf(&self, x: f64) -> f64 {
        1.0 - self.sf(x)
    }

    fn sf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            1.0
        } else if x >= 1.0 {
            0.0
        } else {
            (self.m * (-x).ln_1p()).exp()
        }
    }

    fn quantile(&self, u: f64) -> f64 {
        -((-u).ln_1p() / self.m).exp_m1()
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        // 1 - U^{1/m} with U uniform has the same law as 1 - (1-U)^{1/m}.
        -(open01(rng).ln() / self.m).exp_m1()
    }

    fn density(&self, x: f64) -> Option<f64> {
        if !(0.0..1.0).contains(&x) {
            return Some(0.0);
        }
        Some(self.m * ((self.m - 1.0) * (-x).ln_1p()).exp())
    }

    fn raw_moment(&self, r: u32) -> Option<f64> {
        self.abs_moment(f64::from(r))
    }

    fn abs_moment(&self, r: f64) -> Option<f64> {
        if r <= -1.0 {
            return None;
        }
        // Γ(r+1) Γ(m+1) / Γ(m+r+1)
        Some((log_gamma_unchecked(r + 1.0) + log_gamma_ratio(self.m + 1.0, self.m + r + 1.0)).exp())
    }
}

/// `U_n = √(n B)` with `B ~ Beta(1, n-1)`; cdf `1 - (1 - u²/n)^{n-1}` on `(0, √n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledBetaRoot {
    n: u32,
}

impl ScaledBetaRoot {
    pub fn new(n: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain("scaled_beta_root", format!("need n >= 2, got {n}")));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> u32 {
        self.n
    }
}

impl Law for ScaledBetaRoot {
    fn name(&self) -> String {
        format!("U_{}", self.n)
    }

    fn support(&self) -> (f64, f64) {
        (0.0, f64::from(self.n).sqrt())
    }

    fn cdf(&self, u: f64) -> f64 {
        1.0 - self.sf(u)
    }

    fn sf(&self, u: f64) -> f64 {
        let n = f64::from(self.n);
        if u <= 0.0 {
            1.0
        } else if u * u >= n {
            0.0
        } else {
            ((n - 1.0) * (-u * u / n).ln_1p()).exp()
        }
    }

    fn quantile(&self, p: f64) -> f64 {
        let n = f64::from(self.n);
        (n * -((-p).ln_1p() / (n - 1.0)).exp_m1()).sqrt()
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        let n = f64::from(self.n);
        (n * -(open01(rng).ln() / (n - 1.0)).exp_m1()).sqrt()
    }

    fn density(&self, u: f64) -> Option<f64> {
        let n = f64::from(self.n);
        if u <= 0.0 || u * u >= n {
            return Some(0.0);
        }
        Some(2.0 * u * (n - 1.0) / n * ((n - 2.0) * (-u * u / n).ln_1p()).exp())
    }

    fn raw_moment(&self, r: u32) -> Option<f64> {
        self.abs_moment(f64::from(r))
    }

    fn abs_moment(&self, r: f64) -> Option<f64> {
        if r <= -2.0 {
            return None;
        }
        Some(scaled_beta_root_moment_real(self.n, r))
    }
}

/// `E[U_n^r] = n^{r/2} Γ(r/2 + 1) Γ(n) / Γ(n + r/2)`.
fn scaled_beta_root_moment_real(n: u32, r: f64) -> f64 {
    let nf = f64::from(n);
    let h = 0.5 * r;
    (h * nf.ln() + log_gamma_unchecked(h + 1.0) + log_gamma_ratio(nf, nf + h)).exp()
}

/// Closed-form moment `E[U_n^r]`, `r ≤ 4`.
pub fn scaled_beta_root_moment(n: u32, r: u32) -> Result<f64> {
    if n < 2 {
        return Err(Error::domain("scaled_beta_root_moment", format!("need n >= 2, got {n}")));
    }
    match r {
        0 => Ok(1.0),
        2 => Ok(1.0),
        // E[B²] = 2/(n(n+1)) for B ~ Beta(1, n-1)
        4 => Ok(2.0 * f64::from(n) / (f64::from(n) + 1.0)),
        1 | 3 => Ok(scaled_beta_root_moment_real(n, f64::from(r))),
        _ => Err(Error::domain("scaled_beta_root_moment", format!("order r = {r} not supported (r <= 4)"))),
    }
}
