//! The centered equilibrium transform `X ↦ X^L`, characterised by
//! `E f(X) - f(0) = b_X² E f''(X^L)` with `b_X² = E X² / 2`.
//!
//! Integrating that identity by parts twice gives the density
//! `m(x) / b_X²`, where `m(x) = E(X - x)⁺` for `x ≥ 0` and `E(x - X)⁺` for
//! `x < 0`. Both `m` and the cdf are computed here from tail integrals of
//! the base cdf; no closed form of the base law is consulted.

use rand::RngCore;

use crate::distributions::{Geometric, Law, SummandSpec};
use crate::error::{Error, Result};
use crate::quad::Integrator;
use crate::rng::{open01, par_replicate, stream_rng};
use crate::solve::newton_bracketed;

/// Tail mass below which the base law is truncated.
const TAIL_EPS: f64 = 1e-30;

/// Centered equilibrium law of a mean-zero summand.
#[derive(Debug, Clone)]
pub struct CenteredEquilibrium {
    base: SummandSpec,
    half_second_moment: f64,
    lo: f64,
    hi: f64,
    breaks: Vec<f64>,
    square_biased: bool,
}

fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64]) -> f64 {
    integrate_with(Integrator { abs_tol: 1e-15, rel_tol: 1e-13, max_panels: 4000 }, f, a, b, breaks)
}

/// Purely relative tolerance, for tail probabilities far below 1e-15.
fn integrate_tail<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64]) -> f64 {
    integrate_with(Integrator { abs_tol: 1e-300, rel_tol: 1e-12, max_panels: 4000 }, f, a, b, breaks)
}

fn integrate_with<F: Fn(f64) -> f64>(strict: Integrator, f: F, a: f64, b: f64, breaks: &[f64]) -> f64 {
    match strict.integrate(&f, a, b, breaks) {
        Ok(r) => r.value,
        Err(_) => Integrator::new(1e-12, 1e-10)
            .integrate(&f, a, b, breaks)
            .map(|r| r.value)
            .unwrap_or(f64::NAN),
    }
}

impl CenteredEquilibrium {
    pub fn new(base: &SummandSpec) -> Result<Self> {
        let law = &base.handle;
        let mean = base.raw_moment(1)?;
        if !(base.sigma2 > 0.0) || mean.abs() > 1e-12 * base.sigma() {
            return Err(Error::domain(
                "centered_equilibrium",
                format!("summand must have mean 0 and positive variance (mean {mean}, variance {})", base.sigma2),
            ));
        }
        let (lo, hi) = law.tail_bounds(TAIL_EPS);
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::domain("centered_equilibrium", "tail bounds of the summand are not finite"));
        }
        let mut breaks = law.atoms();
        breaks.push(0.0);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let square_biased = law.sample_square_biased(&mut stream_rng(0, 0)).is_some();
        Ok(Self {
            base: base.clone(),
            half_second_moment: 0.5 * base.sigma2,
            lo,
            hi,
            breaks,
            square_biased,
        })
    }

    pub fn base(&self) -> &SummandSpec {
        &self.base
    }

    /// `b_X² = E X² / 2`.
    pub fn half_second_moment(&self) -> f64 {
        self.half_second_moment
    }

    /// `m(x)`: `∫_x^∞ P(X > t) dt` for `x ≥ 0`, `∫_{-∞}^x P(X ≤ t) dt` for `x < 0`.
    pub fn tail_mean(&self, x: f64) -> f64 {
        let law = &self.base.handle;
        if x >= 0.0 {
            if x >= self.hi {
                return 0.0;
            }
            integrate_tail(|t| law.sf(t), x, self.hi, &self.breaks)
        } else {
            if x <= self.lo {
                return 0.0;
            }
            integrate_tail(|t| law.cdf(t), self.lo, x, &self.breaks)
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.tail_mean(x) / self.half_second_moment
    }

    /// `P(X^L ≤ x) = b⁻² ∫_{-∞}^x (x - t) F(t) dt` for `x < 0`.
    pub fn lower_cdf(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        let law = &self.base.handle;
        integrate_tail(|t| (x - t) * law.cdf(t), self.lo, x.min(0.0), &self.breaks) / self.half_second_moment
    }

    /// `P(X^L > x) = b⁻² ∫_x^∞ (t - x) P(X > t) dt` for `x ≥ 0`.
    pub fn upper_sf(&self, x: f64) -> f64 {
        if x >= self.hi {
            return 0.0;
        }
        let law = &self.base.handle;
        integrate_tail(|t| (t - x) * law.sf(t), x.max(0.0), self.hi, &self.breaks) / self.half_second_moment
    }

    /// `∫ x^r` against the constructed density, by nested quadrature.
    pub fn numeric_moment(&self, r: u32) -> f64 {
        integrate(|x| x.powi(r as i32) * self.pdf(x), self.lo, self.hi, &self.breaks)
    }

    /// `∫ |x|^r` against the constructed density.
    pub fn numeric_abs_moment(&self, r: f64) -> f64 {
        integrate(|x| x.abs().powf(r) * self.pdf(x), self.lo, self.hi, &self.breaks)
    }
}

impl Law for CenteredEquilibrium {
    fn name(&self) -> String {
        format!("Equilibrium[{}]", self.base.name)
    }

    fn support(&self) -> (f64, f64) {
        let (lo, hi) = self.base.handle.support();
        (lo.min(0.0), hi.max(0.0))
    }

    fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            self.lower_cdf(x)
        } else {
            1.0 - self.upper_sf(x)
        }
    }

    fn sf(&self, x: f64) -> f64 {
        if x < 0.0 {
            1.0 - self.lower_cdf(x)
        } else {
            self.upper_sf(x)
        }
    }

    fn quantile(&self, u: f64) -> f64 {
        let below_zero = self.lower_cdf(0.0);
        let tol = 1e-12 * (self.hi - self.lo);
        if u <= below_zero {
            newton_bracketed(|x| self.lower_cdf(x) - u, |x| self.pdf(x), self.lo, 0.0, tol)
        } else {
            let v = 1.0 - u;
            newton_bracketed(|x| v - self.upper_sf(x), |x| self.pdf(x), 0.0, self.hi, tol)
        }
    }

    /// Product representation `X^L = Y·V`, with `Y` square-biased and `V`
    /// of density `2(1 - v)` on `(0, 1)`; inverse transform otherwise.
    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        if self.square_biased {
            let y = self.base.handle.sample_square_biased(rng).expect("checked at construction");
            let v = 1.0 - open01(rng).sqrt();
            y * v
        } else {
            self.quantile(open01(rng))
        }
    }

    fn density(&self, x: f64) -> Option<f64> {
        Some(self.pdf(x))
    }

    fn raw_moment(&self, r: u32) -> Option<f64> {
        equilibrium_moment(&self.base, r).ok()
    }

    fn abs_moment(&self, r: f64) -> Option<f64> {
        equilibrium_abs_moment(&self.base, r).ok()
    }

    fn atoms(&self) -> Vec<f64> {
        self.breaks.clone()
    }

    fn tail_bounds(&self, eps: f64) -> (f64, f64) {
        if eps <= TAIL_EPS {
            return (self.lo, self.hi);
        }
        let (slo, shi) = self.support();
        let lo = if slo.is_finite() { slo } else { self.quantile(eps) };
        let hi = if shi.is_finite() { shi } else { self.quantile(1.0 - eps) };
        (lo, hi)
    }
}

pub fn centered_equilibrium(spec: &SummandSpec) -> Result<CenteredEquilibrium> {
    CenteredEquilibrium::new(spec)
}

/// `E[(X^L)^r] = E X^{r+2} / ((r+1)(r+2) b_X²)`.
pub fn equilibrium_moment(spec: &SummandSpec, r: u32) -> Result<f64> {
    let m = spec.raw_moment(r + 2)?;
    let rf = f64::from(r);
    Ok(m / ((rf + 1.0) * (rf + 2.0) * 0.5 * spec.sigma2))
}

/// `E|X^L|^r = E|X|^{r+2} / ((r+1)(r+2) b_X²)`.
pub fn equilibrium_abs_moment(spec: &SummandSpec, r: f64) -> Result<f64> {
    let m = spec.abs_moment(r + 2.0)?;
    Ok(m / ((r + 1.0) * (r + 2.0) * 0.5 * spec.sigma2))
}

/// `E|X - X^L|` for independent `X` and `X^L`, as
/// `∫ F_X(1 - F_L) + F_L(1 - F_X)`.
pub fn independent_gap_mean(spec: &SummandSpec) -> Result<f64> {
    let eq = CenteredEquilibrium::new(spec)?;
    let law = &spec.handle;
    let (alo, ahi) = law.tail_bounds(1e-17);
    let (elo, ehi) = eq.tail_bounds(1e-17);
    let (lo, hi) = (alo.min(elo), ahi.max(ehi));
    let mut breaks = eq.atoms();
    breaks.push(0.0);
    let v = integrate(|x| law.cdf(x) * eq.sf(x) + eq.cdf(x) * law.sf(x), lo, hi, &breaks);
    if !v.is_finite() {
        return Err(Error::Quadrature { x: 0.0, error: f64::NAN });
    }
    Ok(v)
}

/// Result of [`quantile_coupling_sup`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileGap {
    /// `sup_u |F_X^{-1}(u) - F_{X^L}^{-1}(u)|`; `+∞` when `unbounded`.
    pub sup: f64,
    /// Level `u` at which the largest gap was seen.
    pub argmax: f64,
    /// The gap grows without bound in a tail.
    pub unbounded: bool,
    /// Successive dyadic grids agreed to within 1e-4.
    pub converged: bool,
    /// Grid points used on the final level.
    pub grid_points: usize,
}

/// Supremum over `u ∈ (0,1)` of the gap between the quantile functions of a
/// summand and of its centered equilibrium law.
///
/// Dyadic grids of `2^10` to `2^20` cells are evaluated until successive
/// maxima agree within 1e-4. One-sided limits at every atom of the summand
/// are added exactly, and the tails are probed down to `u = 2^{-40}` to
/// detect an unbounded gap.
pub fn quantile_coupling_sup(spec: &SummandSpec) -> Result<QuantileGap> {
    let eq = CenteredEquilibrium::new(spec)?;
    let law = &spec.handle;
    let gap = |u: f64| (law.quantile(u) - eq.quantile(u)).abs();

    let mut best = (0.0f64, 0.5f64);
    let consider = |g: f64, u: f64, best: &mut (f64, f64)| {
        if g > best.0 {
            *best = (g, u);
        }
    };

    // Jumps of the summand quantile sit at the cdf values of its atoms.
    for &a in &law.atoms() {
        let u_hi = law.cdf(a);
        let u_lo = 1.0 - law.sf(a - 1e-12 * (1.0 + a.abs()));
        for &u in &[u_lo, u_hi] {
            if u > 0.0 && u < 1.0 {
                let qe = eq.quantile(u);
                consider((a - qe).abs(), u, &mut best);
                consider((law.quantile(u) - qe).abs(), u, &mut best);
            }
        }
    }

    // Tail probe: gaps at u = 2^{-j} and 1 - 2^{-j}.
    let mut tail = Vec::new();
    for j in (10..=40).step_by(5) {
        let u = 0.5f64.powi(j);
        let g = gap(u).max(gap(1.0 - u));
        consider(g, u, &mut best);
        tail.push(g);
    }
    let (slo, shi) = law.support();
    let bounded = slo.is_finite() && shi.is_finite();
    let growing = tail.windows(2).all(|w| w[1] > w[0] * 1.05) && tail[tail.len() - 1] > 1.0;
    if !bounded && growing {
        return Ok(QuantileGap {
            sup: f64::INFINITY,
            argmax: 0.0,
            unbounded: true,
            converged: true,
            grid_points: 0,
        });
    }

    let mut prev: Option<f64> = None;
    let mut converged = false;
    let mut grid_points = 0;
    for level in 10..=20 {
        let cells = 1usize << level;
        // Points of the previous level are reused; only odd indices are new.
        let step = if level == 10 { 1 } else { 2 };
        let mut i = 1;
        while i < cells {
            let u = i as f64 / cells as f64;
            consider(gap(u), u, &mut best);
            i += step;
        }
        grid_points = cells - 1;
        if let Some(p) = prev {
            if (best.0 - p).abs() < 1e-4 {
                converged = true;
                break;
            }
        }
        prev = Some(best.0);
    }
    Ok(QuantileGap {
        sup: best.0,
        argmax: best.1,
        unbounded: false,
        converged,
        grid_points,
    })
}

/// Paired draws `(S, S^L)` for a geometric sum and its equilibrium coupling.
#[derive(Debug, Clone, Default)]
pub struct CouplingSample {
    pub w: Vec<f64>,
    pub w_l: Vec<f64>,
    pub counts: Vec<u64>,
    pub last: Vec<f64>,
    pub last_l: Vec<f64>,
}

impl CouplingSample {
    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    /// `Δ = W - W^L`.
    pub fn deltas(&self) -> Vec<f64> {
        self.w.iter().zip(&self.w_l).map(|(a, b)| a - b).collect()
    }
}

/// Draws `count` pairs `S = √p Σ_{i≤N} X_i` and
/// `S^L = √p (Σ_{i<N} X_i + X_N^L)` sharing `X_1, …, X_{N-1}`, with `X_N^L`
/// independent of everything else.
pub fn sample_coupled_geometric(spec: &SummandSpec, p: f64, count: usize, seed: u64) -> Result<CouplingSample> {
    let geo = Geometric::new(p)?;
    let eq = CenteredEquilibrium::new(spec)?;
    let law = spec.handle.clone();
    let scale = p.sqrt();
    let draws = par_replicate(seed, count, |rng| {
        let n = geo.sample_count(rng);
        let head = law.sample_sum(n - 1, rng);
        let x = law.sample(rng);
        let xl = eq.sample(rng);
        (scale * (head + x), scale * (head + xl), n, x, xl)
    });
    let mut out = CouplingSample {
        w: Vec::with_capacity(count),
        w_l: Vec::with_capacity(count),
        counts: Vec::with_capacity(count),
        last: Vec::with_capacity(count),
        last_l: Vec::with_capacity(count),
    };
    for (w, wl, n, x, xl) in draws {
        out.w.push(w);
        out.w_l.push(wl);
        out.counts.push(n);
        out.last.push(x);
        out.last_l.push(xl);
    }
    Ok(out)
}
