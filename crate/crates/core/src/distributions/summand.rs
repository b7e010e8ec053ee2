use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{DistributionHandle, Laplace, Normal, Rademacher, TwoPoint, Uniform};
use crate::error::{Error, Result};

/// JSON form of a summand law: `{"name": "...", "params": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", content = "params", rename_all = "snake_case")]
pub enum SummandConfig {
    Rademacher { sigma: f64 },
    Uniform { c: f64 },
    TwoPoint { q: f64, alpha: f64 },
    Laplace { b: f64 },
    Normal { sigma: f64 },
}

/// A mean-zero, finite-variance summand law with its moments.
#[derive(Debug, Clone)]
pub struct SummandSpec {
    pub name: String,
    pub config: SummandConfig,
    pub sigma2: f64,
    pub third_moment: f64,
    pub fourth_moment: f64,
    pub handle: DistributionHandle,
}

impl SummandSpec {
    pub fn from_config(config: &SummandConfig) -> Result<Self> {
        let handle: DistributionHandle = match *config {
            SummandConfig::Rademacher { sigma } => Arc::new(Rademacher::new(sigma)?),
            SummandConfig::Uniform { c } => Arc::new(Uniform::new(c)?),
            SummandConfig::TwoPoint { q, alpha } => Arc::new(TwoPoint::new(q, alpha)?),
            SummandConfig::Laplace { b } => Arc::new(Laplace::new(0.0, b)?),
            SummandConfig::Normal { sigma } => Arc::new(Normal::new(0.0, sigma)?),
        };
        let moment = |r: u32| {
            handle.raw_moment(r).ok_or_else(|| Error::MissingMoment {
                what: "summand",
                moment: format!("E X^{r}"),
            })
        };
        let mean = moment(1)?;
        let sigma2 = moment(2)?;
        if mean.abs() > 1e-12 * sigma2.sqrt() {
            return Err(Error::domain("summand", format!("mean {mean} is not zero")));
        }
        Ok(Self {
            name: handle.name(),
            config: config.clone(),
            sigma2,
            third_moment: moment(3)?,
            fourth_moment: moment(4)?,
            handle,
        })
    }

    pub fn rademacher(sigma: f64) -> Result<Self> {
        Self::from_config(&SummandConfig::Rademacher { sigma })
    }

    pub fn uniform(c: f64) -> Result<Self> {
        Self::from_config(&SummandConfig::Uniform { c })
    }

    pub fn two_point(q: f64, alpha: f64) -> Result<Self> {
        Self::from_config(&SummandConfig::TwoPoint { q, alpha })
    }

    pub fn laplace(b: f64) -> Result<Self> {
        Self::from_config(&SummandConfig::Laplace { b })
    }

    pub fn normal(sigma: f64) -> Result<Self> {
        Self::from_config(&SummandConfig::Normal { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    /// `ρ_k = E|X|^k`.
    pub fn abs_moment(&self, k: f64) -> Result<f64> {
        self.handle.abs_moment(k).ok_or_else(|| Error::MissingMoment {
            what: "summand",
            moment: format!("E|X|^{k}"),
        })
    }

    /// `E X^r` for integer `r`.
    pub fn raw_moment(&self, r: u32) -> Result<f64> {
        self.handle.raw_moment(r).ok_or_else(|| Error::MissingMoment {
            what: "summand",
            moment: format!("E X^{r}"),
        })
    }

    /// Whether the support is bounded on both sides.
    pub fn is_bounded(&self) -> bool {
        let (lo, hi) = self.handle.support();
        lo.is_finite() && hi.is_finite()
    }
}

/// Standard catalog: Rademacher(1), Uniform(-√3, √3), an asymmetric
/// two-point law with unit variance, and Laplace(0, 1).
pub fn summand_library() -> Vec<SummandSpec> {
    [
        SummandConfig::Rademacher { sigma: 1.0 },
        SummandConfig::Uniform { c: 3f64.sqrt() },
        SummandConfig::TwoPoint { q: 0.2, alpha: 2.0 },
        SummandConfig::Laplace { b: 1.0 },
    ]
    .iter()
    .map(|c| SummandSpec::from_config(c).expect("catalog parameters are valid"))
    .collect()
}
