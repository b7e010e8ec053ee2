//! Monte-Carlo estimates of the coupling statistics `Δ = S - S^L`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::CouplingStats;
use crate::distributions::SummandSpec;
use crate::equilibrium::sample_coupled_geometric;
use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// Equal-mass bins used for conditional means.
pub const CONDITIONAL_BINS: usize = 256;
/// Bootstrap resamples behind the conditional-mean error bars.
pub const BOOTSTRAP_RESAMPLES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    fn of_mean(values: impl Iterator<Item = f64> + Clone) -> Self {
        let (mut n, mut sum) = (0usize, 0.0);
        for v in values.clone() {
            n += 1;
            sum += v;
        }
        let m = sum / n as f64;
        let var = values.map(|v| (v - m).powi(2)).sum::<f64>() / (n as f64 - 1.0).max(1.0);
        Self {
            value: m,
            std_error: (var / n as f64).sqrt(),
        }
    }

    /// `|value - target| <= k` standard errors.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.std_error
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub beta: f64,
    pub probability: Estimate,
}

/// Estimated inputs of the coupling bounds at one `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingStatistics {
    pub p: f64,
    pub count: usize,
    /// `E|Δ|`.
    pub mean_abs: Estimate,
    /// `E Δ²`.
    pub mean_sq: Estimate,
    pub tails: Vec<TailEstimate>,
    /// `E|E[Δ|S]|` from binned conditional means of `Δ`.
    pub conditional_binned: Estimate,
    /// `E|E[Δ|S]|` from binned conditional means of `S/N - √p E X^L`.
    pub conditional_ratio: Estimate,
    /// Sample mean of `X_N^L`.
    pub mean_last_l: Estimate,
}

impl CouplingStatistics {
    /// Point estimates in the form taken by [`crate::bounds::coupling_bounds`],
    /// with the tail probability at the grid value closest to `beta`.
    pub fn bound_inputs(&self, beta: f64) -> CouplingStats {
        let tail = self
            .tails
            .iter()
            .min_by(|a, b| (a.beta - beta).abs().total_cmp(&(b.beta - beta).abs()))
            .map(|t| t.probability.value);
        CouplingStats {
            mean_abs: Some(self.mean_abs.value),
            mean_sq: Some(self.mean_sq.value),
            tail_prob: tail,
            mean_abs_conditional: Some(self.conditional_binned.value),
            abs_moment_k: Some((1, self.mean_abs.value)),
        }
    }
}

/// `Σ_b (n_b/n) |mean of values in bin b|`, bins of equal mass in the
/// ordering of `keys`, with a bootstrap standard error.
pub fn binned_abs_conditional_mean(keys: &[f64], values: &[f64], bins: usize, resamples: usize, seed: u64) -> Result<Estimate> {
    let n = keys.len();
    if n == 0 || values.len() != n {
        return Err(Error::EmptySample);
    }
    let bins = bins.clamp(1, n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]).then(a.cmp(&b)));
    let mut bin_of = vec![0usize; n];
    for (rank, &i) in order.iter().enumerate() {
        bin_of[i] = rank * bins / n;
    }
    let score = |sums: &[f64], counts: &[usize]| -> f64 {
        let total: usize = counts.iter().sum();
        sums.iter()
            .zip(counts)
            .filter(|(_, &c)| c > 0)
            .map(|(s, &c)| (c as f64 / total as f64) * (s / c as f64).abs())
            .sum()
    };
    let mut sums = vec![0.0; bins];
    let mut counts = vec![0usize; bins];
    for i in 0..n {
        sums[bin_of[i]] += values[i];
        counts[bin_of[i]] += 1;
    }
    let value = score(&sums, &counts);
    let boot: Vec<f64> = (0..resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed ^ 0x6b6f_6f74, r as u64);
            let mut sums = vec![0.0; bins];
            let mut counts = vec![0usize; bins];
            for _ in 0..n {
                let i = rng.random_range(0..n);
                sums[bin_of[i]] += values[i];
                counts[bin_of[i]] += 1;
            }
            score(&sums, &counts)
        })
        .collect();
    let std_error = if boot.len() > 1 {
        let m = boot.iter().sum::<f64>() / boot.len() as f64;
        (boot.iter().map(|b| (b - m).powi(2)).sum::<f64>() / (boot.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(Estimate { value, std_error })
}

/// Coupling statistics of a geometric sum with i.i.d. summands. `specs`
/// lists the summand law once, or once per index; differing entries are
/// rejected.
pub fn coupling_statistics(specs: &[SummandSpec], p: f64, count: usize, beta_grid: &[f64], seed: u64) -> Result<CouplingStatistics> {
    let spec = specs
        .first()
        .ok_or_else(|| Error::domain("coupling_statistics", "no summand given"))?;
    if specs.iter().any(|s| s.config != spec.config) {
        return Err(Error::domain("coupling_statistics", "summands must be identically distributed"));
    }
    if count < 2 {
        return Err(Error::domain("coupling_statistics", format!("need count >= 2, got {count}")));
    }
    if let Some(b) = beta_grid.iter().find(|b| !(**b > 0.0)) {
        return Err(Error::domain("coupling_statistics", format!("beta {b} must be positive")));
    }
    let sample = sample_coupled_geometric(spec, p, count, seed)?;
    let deltas = sample.deltas();
    let tails = beta_grid
        .iter()
        .map(|&beta| TailEstimate {
            beta,
            probability: Estimate::of_mean(deltas.iter().map(move |d| f64::from(u8::from(d.abs() > beta)))),
        })
        .collect();
    let shift = p.sqrt() * spec.third_moment / (3.0 * spec.sigma2);
    let ratios: Vec<f64> = sample
        .w
        .iter()
        .zip(&sample.counts)
        .map(|(w, &n)| w / n as f64 - shift)
        .collect();
    Ok(CouplingStatistics {
        p,
        count,
        mean_abs: Estimate::of_mean(deltas.iter().map(|d| d.abs())),
        mean_sq: Estimate::of_mean(deltas.iter().map(|d| d * d)),
        tails,
        conditional_binned: binned_abs_conditional_mean(&sample.w, &deltas, CONDITIONAL_BINS, BOOTSTRAP_RESAMPLES, seed)?,
        conditional_ratio: binned_abs_conditional_mean(&sample.w, &ratios, CONDITIONAL_BINS, BOOTSTRAP_RESAMPLES, seed)?,
        mean_last_l: Estimate::of_mean(sample.last_l.iter().copied()),
    })
}

/// Closed form of `E Δ²` for i.i.d. summands.
pub fn mean_square_gap(spec: &SummandSpec, p: f64) -> f64 {
    p * (spec.sigma2 + spec.fourth_moment / (6.0 * spec.sigma2))
}

/// Upper bound on `E|E[Δ|S]|` for i.i.d. summands with `E X³ = 0`.
pub fn conditional_gap_bound(spec: &SummandSpec, p: f64) -> Result<f64> {
    let sigma = spec.sigma();
    let rho3 = spec.abs_moment(3.0)?;
    Ok(std::f64::consts::SQRT_2 * sigma * p / (1.0 - p)
        + sigma * p.powf(1.5) * (1.0 / p).ln() / (1.0 - p) * (2.0 + rho3 / sigma.powi(3)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_mixed_summands() {
        let a = SummandSpec::rademacher(1.0).unwrap();
        let b = SummandSpec::uniform(3f64.sqrt()).unwrap();
        assert!(coupling_statistics(&[a.clone(), b], 0.1, 100, &[0.1], 1).is_err());
        assert!(coupling_statistics(&[a.clone(), a], 0.1, 100, &[0.1], 1).is_ok());
    }

    #[test]
    fn mean_square_matches_closed_form() {
        for spec in crate::distributions::summand_library() {
            let stats = coupling_statistics(std::slice::from_ref(&spec), 0.05, 100_000, &[0.1], 2).unwrap();
            let target = mean_square_gap(&spec, 0.05);
            assert!(stats.mean_sq.within(target, 3.0), "{}: {:?} vs {target}", spec.name, stats.mean_sq);
        }
    }

    #[test]
    fn symmetric_equilibrium_mean_vanishes() {
        let spec = SummandSpec::laplace(1.0).unwrap();
        let stats = coupling_statistics(std::slice::from_ref(&spec), 0.1, 100_000, &[], 8).unwrap();
        assert!(stats.mean_last_l.within(0.0, 3.0), "{:?}", stats.mean_last_l);
    }

    #[test]
    fn conditional_gap_within_bound() {
        let spec = SummandSpec::laplace(1.0 / 2f64.sqrt()).unwrap();
        for &p in &[0.1, 0.02] {
            let stats = coupling_statistics(std::slice::from_ref(&spec), p, 200_000, &[0.1], 4).unwrap();
            let bound = conditional_gap_bound(&spec, p).unwrap();
            for est in [stats.conditional_binned, stats.conditional_ratio] {
                assert!(est.value - 3.0 * est.std_error <= bound, "p={p}: {est:?} vs {bound}");
            }
        }
    }

    #[test]
    fn binning_recovers_a_known_conditional_mean() {
        // values = key + noise, so E|E[V|K]| = E|K| = 1/2 for K uniform(-1, 1).
        let mut rng = stream_rng(3, 0);
        let keys: Vec<f64> = (0..200_000).map(|_| rng.random_range(-1.0..1.0)).collect();
        let values: Vec<f64> = keys.iter().map(|k| k + rng.random_range(-0.1..0.1)).collect();
        let e = binned_abs_conditional_mean(&keys, &values, 256, 50, 1).unwrap();
        assert!((e.value - 0.5).abs() < 2e-3, "{e:?}");
        assert!(e.std_error > 0.0 && e.std_error < 5e-3);
    }
}
