//! Monte-Carlo samplers for geometric sums and randomly normalised sums.

use crate::distributions::{Beta1, Geometric, Law, SummandSpec};
use crate::error::{Error, Result};
use crate::rng::par_replicate;

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// `count` draws of `√p Σ_{i≤N} X_i` with `N ~ Geo(p)` on `{1, 2, …}`,
/// sorted ascending.
pub fn simulate_geometric_sum(spec: &SummandSpec, p: f64, count: usize, seed: u64) -> Result<Vec<f64>> {
    let geo = Geometric::new(p)?;
    let law = spec.handle.clone();
    let scale = p.sqrt();
    Ok(sorted(par_replicate(seed, count, |rng| {
        let n = geo.sample_count(rng);
        scale * law.sample_sum(n, rng)
    })))
}

/// `count` draws of `T_n = √B Σ_{i≤n} X_i`, `B ~ Beta(1, n-1)`, sorted.
pub fn simulate_tn(spec: &SummandSpec, n: u32, count: usize, seed: u64) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::domain("simulate_tn", format!("need n >= 2, got {n}")));
    }
    let beta = Beta1::new(f64::from(n - 1))?;
    let law = spec.handle.clone();
    Ok(sorted(par_replicate(seed, count, |rng| {
        let b = beta.sample(rng);
        b.sqrt() * law.sample_sum(u64::from(n), rng)
    })))
}

/// Sample mean of `x²` with its standard error.
pub fn second_moment(sample: &[f64]) -> (f64, f64) {
    let n = sample.len() as f64;
    let m = sample.iter().map(|x| x * x).sum::<f64>() / n;
    let v = sample.iter().map(|x| (x * x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}
