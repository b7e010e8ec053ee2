use num_complex::Complex64;
use rand::RngCore;

use super::Law;
use crate::error::{Error, Result};
use crate::rng::open01;
use crate::specfun::log_gamma_unchecked;

/// Finite support with cumulative probabilities, shared by the discrete laws.
#[derive(Debug, Clone, PartialEq)]
struct Table {
    points: Vec<f64>,
    probs: Vec<f64>,
    cum: Vec<f64>,
}

impl Table {
    fn new(points: Vec<f64>, probs: Vec<f64>) -> Self {
        let mut cum = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for &p in &probs {
            acc += p;
            cum.push(acc);
        }
        let total = acc;
        for c in &mut cum {
            *c /= total;
        }
        Self { points, probs, cum }
    }

    fn cdf(&self, x: f64) -> f64 {
        let i = self.points.partition_point(|&p| p <= x);
        if i == 0 {
            0.0
        } else {
            self.cum[i - 1]
        }
    }

    fn sf(&self, x: f64) -> f64 {
        let i = self.points.partition_point(|&p| p <= x);
        self.probs[i..].iter().sum()
    }

    fn quantile(&self, u: f64) -> f64 {
        let i = self.cum.partition_point(|&c| c < u).min(self.points.len() - 1);
        self.points[i]
    }

    fn expect<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.points.iter().zip(&self.probs).map(|(&x, &p)| p * f(x)).sum()
    }

    fn support(&self) -> (f64, f64) {
        (self.points[0], *self.points.last().expect("nonempty"))
    }
}

/// Symmetric two-point law on `{-σ, +σ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rademacher {
    sigma: f64,
}

impl Rademacher {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::domain("rademacher", format!("need sigma > 0, got {sigma}")));
        }
        Ok(Self { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// Number of set bits among `terms` fresh random bits.
pub(crate) fn random_popcount(terms: u64, rng: &mut dyn RngCore) -> u64 {
    let mut ones = 0u64;
    let mut left = terms;
    while left >= 64 {
        ones += u64::from(rng.next_u64().count_ones());
        left -= 64;
    }
    if left > 0 {
        let mask = (1u64 << left) - 1;
        ones += u64::from((rng.next_u64() & mask).count_ones());
    }
    ones
}

impl Law for Rademacher {
    fn name(&self) -> String {
        format!("Rademacher({})", self.sigma)
    }

    fn support(&self) -> (f64, f64) {
        (-self.sigma, self.sigma)
    }

    fn cdf(&self, x: f64) -> f64 {
        if x < -self.sigma {
            0.0
        } else if x < self.sigma {
            0.5
        } else {
            1.0
        }
    }

    fn quantile(&self, u: f64) -> f64 {
        if u <= 0.5 {
            -self.sigma
        } else {
            self.sigma
        }
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        if rng.next_u32() & 1 == 0 {
            -self.sigma
        } else {
            self.sigma
        }
    }

    fn sample_sum(&self, terms: u64, rng: &mut dyn RngCore) -> f64 {
        let ones = random_popcount(terms, rng);
        self.sigma * (2.0 * ones as f64 - terms as f64)
    }

    fn raw_moment(&self, r: u32) -> Option<f64> {
        Some(if r % 2 == 1 { 0.0 } else { self.sigma.powi(r as i32) })
    }

    fn abs_moment(&self, r: f64) -> Option<f64> {
        Some(self.sigma.powf(r))
    }

    fn atoms(&self) -> Vec<f64> {
        vec![-self.sigma, self.sigma]
    }

    fn cf(&self, t: f64) -> Option<Complex64> {
        Some(Complex64::new((self.sigma * t).cos(), 0.0))
    }

    fn sample_square_biased(&self, rng: &mut dyn RngCore) -> Option<f64> {
        Some(self.sample(rng))
    }

    fn lower_partial_mean(&self, x: f64) -> f64 {
        let s = self.sigma;
        0.5 * ((x + s).max(0.0) + (x - s).max(0.0))
    }

    fn upper_partial_mean(&self, x: f64) -> f64 {
        let s = self.sigma;
        0.5 * ((-s - x).max(0.0) + (s - x).max(0.0))
    }
}

/// Mean-zero two-point law: mass `q` at `-α` and `1 - q` at `β = qα/(1-q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPoint {
    q: f64,
    alpha: f64,
    beta: f64,
    table: Table,
}

impl TwoPoint {
    pub fn new(q: f64, alpha: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::domain("two_point", format!("need 0 < q < 1, got {q}")));
        }
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::domain("two_point", format!("need alpha > 0, got {alpha}")));
        }
        let beta = q * alpha / (1.0 - q);
        Ok(Self {
            q,
            alpha,
            beta,
            table: Table::new(vec![-alpha, beta], vec![q, 1.0 - q]),
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

impl Law for TwoPoint {
    fn name(&self) -> String {
        format!("TwoPoint(q={}, alpha={})", self.q, self.alpha)
    }

    fn support(&self) -> (f64, f64) {
        (-self.alpha, self.beta)
    }

    fn cdf(&self, x: f64) -> f64 {
        self.table.cdf(x)
    }

    fn sf(&self, x: f64) -> f64 {
        self.table.sf(x)
    }

    fn quantile(&self, u: f64) -> f64 {
        self.table.quantile(u)
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        if open01(rng) < self.q {
            -self.alpha
        } else {
            self.beta
        }
    }

    fn raw_moment(&self, r: u32) -> Option<f64> {
        Some(self.table.expect(|x| x.powi(r as i32)))
    }

    fn abs_moment(&self, r: f64) -> Option<f64> {
        Some(self.table.expect(|x| x.abs().powf(r)))
    }

    fn atoms(&self) -> Vec<f64> {
        self.table.points.clone()
    }

    fn cf(&self, t: f64) -> Option<Complex64> {
        Some(self.q * Complex64::from_polar(1.0, -t * self.alpha) + (1.0 - self.q) * Complex64::from_polar(1.0, t * self.beta))
    }

    fn sample_square_biased(&self, rng: &mut dyn RngCore) -> Option<f64> {
        let wl = self.q * self.alpha * self.alpha;
        let wr = (1.0 - self.q) * self.beta * self.beta;
        Some(if open01(rng) * (wl + wr) < wl { -self.alpha } else { self.beta })
    }

    fn lower_partial_mean(&self, x: f64) -> f64 {
        self.table.expect(|t| (x - t).max(0.0))
    }

    fn upper_partial_mean(&self, x: f64) -> f64 {
        self.table.expect(|t| (t - x).max(0.0))
    }
}

/// `V_n = n^{-1/2} Σ_{i=1}^n ε_i` for independent signs `ε_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledRademacherSum {
    n: u32,
    table: Table,
}

impl ScaledRademacherSum {
    pub fn new(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("scaled_rademacher_sum", "need n >= 1"));
        }
        let nf = f64::from(n);
        let scale = nf.sqrt();
        let lnf = |k: f64| log_gamma_unchecked(k + 1.0);
        let mut points = Vec::with_capacity(n as usize + 1);
        let mut probs = Vec::with_capacity(n as usize + 1);
        for k in 0..=n {
            let kf = f64::from(k);
            points.push((2.0 * kf - nf) / scale);
            probs.push((lnf(nf) - lnf(kf) - lnf(nf - kf) - nf * std::f64::consts::LN_2).exp());
        }
        Ok(Self {
            n,
            table: Table::new(points, probs),
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }
}

impl Law for ScaledRademacherSum {
    fn name(&self) -> String {
        format!("V_{}", self.n)
    }

    fn support(&self) -> (f64, f64) {
        self.table.support()
    }

    fn cdf(&self, x: f64) -> f64 {
        self.table.cdf(x)
    }

    fn sf(&self, x: f64) -> f64 {
        self.table.sf(x)
    }

    fn quantile(&self, u: f64) -> f64 {
        self.table.quantile(u)
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        let n = u64::from(self.n);
        (2.0 * random_popcount(n, rng) as f64 - n as f64) / f64::from(self.n).sqrt()
    }

    fn raw_moment(&self, r: u32) -> Option<f64> {
        Some(self.table.expect(|x| x.powi(r as i32)))
    }

    fn abs_moment(&self, r: f64) -> Option<f64> {
        Some(self.table.expect(|x| x.abs().powf(r)))
    }

    fn atoms(&self) -> Vec<f64> {
        self.table.points.clone()
    }

    fn cf(&self, t: f64) -> Option<Complex64> {
        let n = f64::from(self.n);
        Some(Complex64::new((t / n.sqrt()).cos().powf(n), 0.0))
    }
}

/// Degenerate law at `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointMass {
    c: f64,
}

impl PointMass {
    pub fn new(c: f64) -> Self {
        Self { c }
    }
}

impl Law for PointMass {
    fn name(&self) -> String {
        format!("PointMass({})", self.c)
    }

    fn support(&self) -> (f64, f64) {
        (self.c, self.c)
    }

    fn cdf(&self, x: f64) -> f64 {
        if x < self.c {
            0.0
        } else {
            1.0
        }
    }

    fn quantile(&self, _u: f64) -> f64 {
        self.c
    }

    fn sample(&self, _rng: &mut dyn RngCore) -> f64 {
        self.c
    }

    fn raw_moment(&self, r: u32) -> Option<f64> {
        Some(self.c.powi(r as i32))
    }

    fn abs_moment(&self, r: f64) -> Option<f64> {
        Some(self.c.abs().powf(r))
    }

    fn atoms(&self) -> Vec<f64> {
        vec![self.c]
    }

    fn cf(&self, t: f64) -> Option<Complex64> {
        Some(Complex64::from_polar(1.0, t * self.c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn rademacher_moments_and_sum() {
        let r = Rademacher::new(1.0).unwrap();
        assert_eq!(r.raw_moment(2), Some(1.0));
        assert_eq!(r.raw_moment(3), Some(0.0));
        assert_eq!(r.raw_moment(4), Some(1.0));
        assert_eq!(r.abs_moment(3.0), Some(1.0));
        let mut rng = stream_rng(5, 0);
        for terms in [0u64, 1, 63, 64, 65, 1000] {
            let s = r.sample_sum(terms, &mut rng);
            assert_eq!((s + terms as f64) % 2.0, 0.0);
            assert!(s.abs() <= terms as f64);
        }
    }

    #[test]
    fn rademacher_sum_variance() {
        let r = Rademacher::new(1.0).unwrap();
        let mut rng = stream_rng(6, 0);
        let n = 100_000;
        let v: f64 = (0..n).map(|_| r.sample_sum(100, &mut rng).powi(2)).sum::<f64>() / n as f64;
        // Var of the mean-of-squares estimator is 2·100² / n, so SE ≈ 0.45.
        assert!((v - 100.0).abs() < 2.0, "v = {v}");
    }

    #[test]
    fn two_point_mean_zero() {
        let t = TwoPoint::new(0.2, 2.0).unwrap();
        assert!(t.raw_moment(1).unwrap().abs() < 1e-15);
        assert!((t.raw_moment(2).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(t.quantile(0.2), -2.0);
        assert_eq!(t.quantile(0.2000001), 0.5);
        assert_eq!(t.cdf(-2.0), 0.2);
        assert_eq!(t.cdf(-2.0 - 1e-12), 0.0);
    }

    #[test]
    fn scaled_sum_moments() {
        for n in [1, 2, 10, 50] {
            let v = ScaledRademacherSum::new(n).unwrap();
            let nf = f64::from(n);
            assert!((v.raw_moment(2).unwrap() - 1.0).abs() < 1e-12);
            assert!((v.raw_moment(4).unwrap() - (3.0 - 2.0 / nf)).abs() < 1e-12);
            assert!((v.cdf(100.0) - 1.0).abs() < 1e-14);
        }
    }
}
