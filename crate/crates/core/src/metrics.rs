//! Distances between one-dimensional laws: exact and empirical Kolmogorov,
//! Wasserstein-1, and characteristic-function lower bounds for the smooth
//! metrics `d₂` and `d₁,₂`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::distributions::{Law, LaplaceParams, Laplace};
use crate::error::{Error, Result};
use crate::quad::Integrator;
use crate::rng::par_replicate;
use crate::solve::golden_max;

/// A distance value with a numerical or statistical error bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceEstimate {
    pub value: f64,
    pub error_bound: f64,
    pub method: String,
}

impl DistanceEstimate {
    pub fn new(value: f64, error_bound: f64, method: impl Into<String>) -> Self {
        Self {
            value: value.max(0.0),
            error_bound: error_bound.max(0.0),
            method: method.into(),
        }
    }

    pub fn lower(&self) -> f64 {
        (self.value - self.error_bound).max(0.0)
    }

    pub fn upper(&self) -> f64 {
        self.value + self.error_bound
    }
}

/// Two-sided DKW radius: `P(sup|F_n - F| > r) ≤ alpha`.
pub fn dkw_radius(n: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}

const GRID_CELLS: usize = 4096;

/// Range covering all but `eps` mass of both laws.
fn joint_range(a: &dyn Law, b: &dyn Law, eps: f64) -> (f64, f64) {
    let (alo, ahi) = a.tail_bounds(eps);
    let (blo, bhi) = b.tail_bounds(eps);
    (alo.min(blo), ahi.max(bhi))
}

/// `sup_z |F_a(z) - F_b(z)|`.
///
/// A 4096-cell grid (plus every atom and its left limit) is refined by
/// golden-section search around the five largest grid values. Because both
/// cdfs are monotone, on a cell `[x, y]` the gap never exceeds
/// `max(F_a(y) - F_b(x), F_b(y) - F_a(x))`; cells whose bound exceeds the
/// best value are bisected until the bound is within 1e-9, and the remaining
/// slack is reported as the error bound.
pub fn kolmogorov_exact(a: &dyn Law, b: &dyn Law) -> DistanceEstimate {
    let (lo, hi) = joint_range(a, b, 1e-13);
    let mut xs: Vec<f64> = (0..=GRID_CELLS)
        .map(|i| lo + (hi - lo) * i as f64 / GRID_CELLS as f64)
        .collect();
    for atom in a.atoms().into_iter().chain(b.atoms()) {
        if atom > lo && atom < hi {
            xs.push(atom);
            xs.push(atom - 1e-12 * (1.0 + atom.abs()));
        }
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();

    let gap = |x: f64| (a.cdf(x) - b.cdf(x)).abs();
    let fa: Vec<f64> = xs.iter().map(|&x| a.cdf(x)).collect();
    let fb: Vec<f64> = xs.iter().map(|&x| b.cdf(x)).collect();
    let mut best = 0.0f64;
    let mut gaps: Vec<(f64, usize)> = Vec::with_capacity(xs.len());
    for i in 0..xs.len() {
        let g = (fa[i] - fb[i]).abs();
        best = best.max(g);
        gaps.push((g, i));
    }
    // Outside the range both cdfs are within 1e-13 of 0 or 1.
    best = best.max(gap(lo)).max(gap(hi));

    gaps.sort_by(|x, y| y.0.total_cmp(&x.0));
    for &(_, i) in gaps.iter().take(5) {
        let l = xs[i.saturating_sub(1)];
        let r = xs[(i + 1).min(xs.len() - 1)];
        if r > l {
            let (_, v) = golden_max(gap, l, r, 1e-12 * (1.0 + r.abs()));
            best = best.max(v);
        }
    }

    // Branch and bound over monotone cells.
    let mut stack: Vec<(f64, f64, f64, f64, f64, f64)> = (0..xs.len() - 1)
        .map(|i| (xs[i], xs[i + 1], fa[i], fb[i], fa[i + 1], fb[i + 1]))
        .collect();
    let mut slack = 0.0f64;
    let mut evaluations = 0usize;
    while let Some((x, y, ax, bx, ay, by)) = stack.pop() {
        let cell = (ay - bx).max(by - ax);
        if cell <= best + 1e-9 {
            continue;
        }
        let mid = 0.5 * (x + y);
        if evaluations > 200_000 || mid <= x || mid >= y {
            slack = slack.max(cell - best);
            continue;
        }
        evaluations += 1;
        let (am, bm) = (a.cdf(mid), b.cdf(mid));
        best = best.max((am - bm).abs());
        stack.push((x, mid, ax, bx, am, bm));
        stack.push((mid, y, am, bm, ay, by));
    }
    DistanceEstimate::new(best, slack.max(1e-9) + 2e-13, "kolmogorov-exact")
}

/// One-sample Kolmogorov statistic of a sorted sample against `cdf`, with
/// the DKW 99% radius as error bound.
pub fn kolmogorov_empirical<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> Result<DistanceEstimate> {
    if sorted.is_empty() {
        return Err(Error::EmptySample);
    }
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(DistanceEstimate::new(d, dkw_radius(sorted.len(), 0.01), "kolmogorov-empirical"))
}

/// Two-sample Kolmogorov statistic; error bound is the sum of both DKW radii.
pub fn kolmogorov_two_sample(xs: &[f64], ys: &[f64]) -> Result<DistanceEstimate> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::EmptySample);
    }
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < xs.len() || j < ys.len() {
        let x = if i < xs.len() { xs[i] } else { f64::INFINITY };
        let y = if j < ys.len() { ys[j] } else { f64::INFINITY };
        let t = x.min(y);
        while i < xs.len() && xs[i] <= t {
            i += 1;
        }
        while j < ys.len() && ys[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(DistanceEstimate::new(
        d,
        dkw_radius(xs.len(), 0.005) + dkw_radius(ys.len(), 0.005),
        "kolmogorov-two-sample",
    ))
}

/// `∫ |F_a - F_b|` by adaptive quadrature, with tail remainders bounded by
/// the partial means beyond the truncation points.
pub fn wasserstein1(a: &dyn Law, b: &dyn Law) -> Result<DistanceEstimate> {
    let (lo, hi) = joint_range(a, b, 1e-14);
    let mut breaks: Vec<f64> = a.atoms().into_iter().chain(b.atoms()).collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let r = Integrator::new(1e-10, 1e-10).integrate(|x| (a.cdf(x) - b.cdf(x)).abs(), lo, hi, &breaks)?;
    let tails = a.lower_partial_mean(lo) + b.lower_partial_mean(lo) + a.upper_partial_mean(hi) + b.upper_partial_mean(hi);
    if !tails.is_finite() {
        return Err(Error::MissingMoment {
            what: "wasserstein1",
            moment: "finite first moment".into(),
        });
    }
    Ok(DistanceEstimate::new(r.value, r.error + tails, "wasserstein-quadrature"))
}

/// Exact `∫ |F_n - F|` between the empirical cdf of a sorted sample and a
/// continuous law, using `∫_s^t F = G(t) - G(s)` with `G` the lower partial
/// mean. Between order statistics the integral is split at the crossing
/// `F(c) = i/n`. The error bound is three times the standard deviation
/// proxy `n^{-1/2} ∫ √(F_n(1 - F_n))`.
pub fn wasserstein1_sample(sorted: &[f64], law: &dyn Law) -> Result<DistanceEstimate> {
    if sorted.is_empty() {
        return Err(Error::EmptySample);
    }
    let n = sorted.len();
    let nf = n as f64;
    let g = |x: f64| law.lower_partial_mean(x);
    let mut total = g(sorted[0]) + law.upper_partial_mean(sorted[n - 1]);
    let mut spread = 0.0;
    for i in 1..n {
        let (x, y) = (sorted[i - 1], sorted[i]);
        if y <= x {
            continue;
        }
        let level = i as f64 / nf;
        let c = law.quantile(level).clamp(x, y);
        let (gx, gc, gy) = (g(x), g(c), g(y));
        // ∫_x^c (level - F) + ∫_c^y (F - level)
        total += level * (c - x) - (gc - gx) + (gy - gc) - level * (y - c);
        spread += (y - x) * (level * (1.0 - level)).sqrt();
    }
    if !total.is_finite() {
        return Err(Error::MissingMoment {
            what: "wasserstein1_sample",
            moment: "finite first moment".into(),
        });
    }
    Ok(DistanceEstimate::new(total, 3.0 * spread / nf.sqrt() + 1e-12 * nf.sqrt(), "wasserstein-empirical"))
}

/// Exact `∫ |F_n - G_m|` between two sorted samples.
pub fn wasserstein1_two_sample(xs: &[f64], ys: &[f64]) -> Result<DistanceEstimate> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::EmptySample);
    }
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut prev = xs[0].min(ys[0]);
    let mut total = 0.0;
    let (mut sx, mut sy) = (0.0, 0.0);
    while i < xs.len() || j < ys.len() {
        let x = if i < xs.len() { xs[i] } else { f64::INFINITY };
        let y = if j < ys.len() { ys[j] } else { f64::INFINITY };
        let t = x.min(y);
        let (fx, fy) = (i as f64 / n, j as f64 / m);
        total += (t - prev) * (fx - fy).abs();
        sx += (t - prev) * (fx * (1.0 - fx)).sqrt();
        sy += (t - prev) * (fy * (1.0 - fy)).sqrt();
        prev = t;
        while i < xs.len() && xs[i] <= t {
            i += 1;
        }
        while j < ys.len() && ys[j] <= t {
            j += 1;
        }
    }
    Ok(DistanceEstimate::new(total, 3.0 * (sx / n.sqrt() + sy / m.sqrt()), "wasserstein-two-sample"))
}

/// Empirical characteristic function `n^{-1} Σ e^{itX_j}`.
pub fn empirical_cf(sample: &[f64], t: f64) -> Complex64 {
    let (mut re, mut im) = (0.0, 0.0);
    for &x in sample {
        let (s, c) = (t * x).sin_cos();
        re += c;
        im += s;
    }
    let n = sample.len() as f64;
    Complex64::new(re / n, im / n)
}

/// Characteristic function of `√p Σ_{i≤N} X_i` with `N ~ Geo(p)`.
pub fn geometric_sum_cf<F: Fn(f64) -> Complex64>(phi: F, p: f64, t: f64) -> Complex64 {
    let v = phi(p.sqrt() * t);
    p * v / (1.0 - (1.0 - p) * v)
}

/// Which smooth class a cf lower bound targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CfClass {
    /// `‖h'‖ ≤ 1`: `cos(ωx)/ω`, `sin(ωx)/ω`.
    Wasserstein,
    /// `‖h''‖ ≤ 1`: `cos(ωx)/ω²`, `sin(ωx)/ω²`.
    D2,
    /// `‖h'‖ ≤ 1` and `‖h''‖ ≤ 1`: divide by `max(ω, ω²)`.
    D12,
}

impl CfClass {
    fn scale(self, omega: f64) -> f64 {
        match self {
            CfClass::Wasserstein => 1.0 / omega,
            CfClass::D2 => 1.0 / (omega * omega),
            CfClass::D12 => (1.0 / omega).min(1.0 / (omega * omega)),
        }
    }
}

/// `sup_ω max(|Re Δφ(ω)|, |Im Δφ(ω)|) · scale(ω)` over the grid; each term is
/// `|E h(X) - E h(Y)|` for a trigonometric `h` in the class, so the result
/// is a valid lower bound on the distance.
pub fn cf_lower_bound<F, G>(phi1: F, phi2: G, omegas: &[f64], class: CfClass) -> Result<DistanceEstimate>
where
    F: Fn(f64) -> Complex64,
    G: Fn(f64) -> Complex64,
{
    let mut best = 0.0f64;
    for &w in omegas {
        if !(w > 0.0) || !w.is_finite() {
            return Err(Error::domain("cf_lower_bound", format!("frequency {w} must be positive")));
        }
        let d = phi1(w) - phi2(w);
        best = best.max(d.re.abs().max(d.im.abs()) * class.scale(w));
    }
    let tag = match class {
        CfClass::Wasserstein => "cf-lower-w",
        CfClass::D2 => "cf-lower-d2",
        CfClass::D12 => "cf-lower-d12",
    };
    Ok(DistanceEstimate::new(best, 0.0, tag))
}

pub fn d2_lower_bound_cf<F, G>(phi1: F, phi2: G, omegas: &[f64]) -> Result<DistanceEstimate>
where
    F: Fn(f64) -> Complex64,
    G: Fn(f64) -> Complex64,
{
    cf_lower_bound(phi1, phi2, omegas, CfClass::D2)
}

/// Log-spaced frequencies on `[lo, hi]`.
pub fn omega_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count.max(2) - 1) as f64).exp())
        .collect()
}

/// Outcome of the concentration inequality check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationCheck {
    pub probability: f64,
    pub bound: f64,
    pub slack: f64,
    pub pass: bool,
}

/// Checks `P(α ≤ W ≤ β) ≤ (β - α)/(2b) + 2 d_K(W, Z)` on a sorted sample.
/// `d_K` is measured from the sample; the Monte-Carlo slack is four DKW
/// radii (two for the probability, two for the doubled distance).
pub fn concentration_check(sorted: &[f64], laplace: LaplaceParams, alpha: f64, beta: f64) -> Result<ConcentrationCheck> {
    if alpha > beta {
        return Err(Error::domain("concentration_check", format!("need alpha <= beta, got [{alpha}, {beta}]")));
    }
    let z = Laplace::from_params(laplace)?;
    let dk = kolmogorov_empirical(sorted, |x| z.cdf(x))?;
    let n = sorted.len() as f64;
    let below = sorted.partition_point(|&x| x < alpha);
    let upto = sorted.partition_point(|&x| x <= beta);
    let probability = (upto - below) as f64 / n;
    let bound = (beta - alpha) / (2.0 * laplace.b) + 2.0 * dk.value;
    let slack = 4.0 * dk.error_bound;
    Ok(ConcentrationCheck {
        probability,
        bound,
        slack,
        pass: probability <= bound + slack,
    })
}

/// Metric for [`product_metric_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ProductMetric {
    Kolmogorov,
    Wasserstein,
    /// `d₁,₂`, with a caller-supplied upper bound on `d₂(Z₁, Z₂)`.
    D12 { d2_upper: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductMetricReport {
    pub metric: ProductMetric,
    pub lhs: DistanceEstimate,
    pub rhs: f64,
    pub pass: bool,
}

/// Checks `d(Y₁Z₁, Y₂Z₂) ≤ ...` for independent pairs. The left side is
/// estimated from `count` sampled products of each pair; the right side is
/// computed from exact one-dimensional distances.
pub fn product_metric_check(
    y1: &dyn Law,
    y2: &dyn Law,
    z1: &dyn Law,
    z2: &dyn Law,
    metric: ProductMetric,
    count: usize,
    seed: u64,
) -> Result<ProductMetricReport> {
    let draw = |y: &dyn Law, z: &dyn Law, s: u64| {
        let mut v = par_replicate(s, count, |rng| y.sample(rng) * z.sample(rng));
        v.sort_by(f64::total_cmp);
        v
    };
    let p1 = draw(y1, z1, seed);
    let p2 = draw(y2, z2, seed ^ 0x9e37_79b9_7f4a_7c15);
    let missing = |what: &'static str| Error::MissingMoment {
        what: "product_metric_check",
        moment: what.into(),
    };
    let (lhs, rhs) = match metric {
        ProductMetric::Kolmogorov => (
            kolmogorov_two_sample(&p1, &p2)?,
            kolmogorov_exact(y1, y2).upper() + kolmogorov_exact(z1, z2).upper(),
        ),
        ProductMetric::Wasserstein => {
            let ez1 = z1.abs_moment(1.0).ok_or_else(|| missing("E|Z1|"))?;
            let ey2 = y2.abs_moment(1.0).ok_or_else(|| missing("E|Y2|"))?;
            (
                wasserstein1_two_sample(&p1, &p2)?,
                ez1 * wasserstein1(y1, y2)?.upper() + ey2 * wasserstein1(z1, z2)?.upper(),
            )
        }
        ProductMetric::D12 { d2_upper } => {
            let ez1 = z1.abs_moment(1.0).ok_or_else(|| missing("E|Z1|"))?;
            let ey2sq = y2.raw_moment(2).ok_or_else(|| missing("E Y2^2"))?;
            let omegas = omega_grid(0.05, 20.0, 64);
            let mut lb = cf_lower_bound(|t| empirical_cf(&p1, t), |t| empirical_cf(&p2, t), &omegas, CfClass::D12)?;
            // Each empirical cf component has standard deviation ≤ n^{-1/2}.
            lb.error_bound = 2.0 * 4.0 / (count as f64).sqrt();
            (lb, ez1 * wasserstein1(y1, y2)?.upper() + ey2sq * d2_upper)
        }
    };
    let pass = lhs.lower() <= rhs;
    Ok(ProductMetricReport { metric, lhs, rhs, pass })
}
