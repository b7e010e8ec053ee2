//! Closed-form error bounds for Laplace approximation of geometric and
//! beta-normalised sums, together with the comparison bounds they build on.
//!
//! Every bound is returned as a [`BoundReport`] whose `name` is a short
//! equation tag; an empirical distance can be attached afterwards.

use std::collections::BTreeMap;
use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::distributions::{Geometric, SummandSpec};
use crate::error::{Error, Result};
use crate::metrics::DistanceEstimate;
use crate::specfun::{hyp2f1_terminating, log_gamma_ratio};
use crate::stein_chi::rayleigh_constants;

/// Constants as printed, used by every bound below.
pub mod printed {
    /// Berry-Esseen constant for independent summands.
    pub const BERRY_ESSEEN: f64 = 0.5600;
    /// Berry-Esseen constant for identically distributed summands.
    pub const BERRY_ESSEEN_IID: f64 = 0.4748;
    /// `(7/2 + √10) + 3(1 + √(2/5))`, rounded.
    pub const COUPLING_K: f64 = 11.56;
    /// Wasserstein rate constant for `U_n → U`.
    pub const UN_WASSERSTEIN: f64 = 11.49;
    /// `E|V| · 11.49 / σ`.
    pub const TN_WASSERSTEIN: f64 = 9.168;
    /// `‖f'‖` bound for the unit Rayleigh Stein solution.
    pub const RAYLEIGH_FPRIME_UNIT: f64 = 8.6408;
    pub const RAYLEIGH_XF: f64 = 2.325;
    pub const RAYLEIGH_FPRIME: f64 = 6.11;
    pub const RAYLEIGH_XFPP: f64 = 11.30;
}

/// `7/2 + √10`.
pub fn kolmogorov_smoothing_constant() -> f64 {
    3.5 + 10f64.sqrt()
}

/// `3(1 + √(2/5)) = (15 + 3√10)/5`.
pub fn kolmogorov_tail_constant() -> f64 {
    3.0 * (1.0 + 0.4f64.sqrt())
}

/// Distance a bound controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Kolmogorov,
    Wasserstein,
    BoundedWasserstein,
    D2,
    D12,
    /// Sup-norm of a Stein solution or one of its derivatives.
    SupNorm,
}

impl Metric {
    pub fn tag(self) -> &'static str {
        match self {
            Metric::Kolmogorov => "d_K",
            Metric::Wasserstein => "d_W",
            Metric::BoundedWasserstein => "d_BW",
            Metric::D2 => "d_2",
            Metric::D12 => "d_12",
            Metric::SupNorm => "sup",
        }
    }
}

/// One evaluated bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub metric: Metric,
    pub inputs: BTreeMap<String, Value>,
    pub bound: f64,
    pub empirical: Option<DistanceEstimate>,
    pub satisfied: Option<bool>,
}

impl BoundReport {
    pub fn new(name: impl Into<String>, metric: Metric, bound: f64) -> Self {
        Self {
            name: name.into(),
            metric,
            inputs: BTreeMap::new(),
            bound,
            empirical: None,
            satisfied: None,
        }
    }

    pub fn input(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.inputs.insert(key.to_string(), value.into());
        self
    }

    /// Attach an empirical distance; satisfied iff `value - error ≤ bound`.
    pub fn with_empirical(mut self, estimate: DistanceEstimate) -> Self {
        self.satisfied = Some(estimate.value - estimate.error_bound <= self.bound);
        self.empirical = Some(estimate);
        self
    }

    pub fn attach(&mut self, estimate: DistanceEstimate) {
        *self = self.clone().with_empirical(estimate);
    }
}

fn missing(bound: &'static str, moment: impl Into<String>) -> Error {
    Error::MissingMoment {
        what: bound,
        moment: moment.into(),
    }
}

fn abs_moment(spec: &SummandSpec, k: f64, bound: &'static str) -> Result<f64> {
    spec.handle
        .abs_moment(k)
        .filter(|v| v.is_finite())
        .ok_or_else(|| missing(bound, format!("E|X|^{k} for {}", spec.name)))
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain("bounds", format!("need 0 < p < 1, got {p}")));
    }
    Ok(())
}

/// `√2(7/2+√10)(√p/σ)Q`: Kolmogorov bound for geometric sums given the
/// quantile-coupling sup `Q = ‖F_X^{-1} - F_{X^L}^{-1}‖`.
pub fn wedfg(sigma: f64, p: f64, q: f64) -> f64 {
    SQRT_2 * kolmogorov_smoothing_constant() * p.sqrt() / sigma * q
}

/// `2σ√p(1 + ρ₃/(3σ³))`.
pub fn rwrwa(sigma: f64, p: f64, rho3: f64) -> f64 {
    2.0 * sigma * p.sqrt() * (1.0 + rho3 / (3.0 * sigma.powi(3)))
}

/// Kolmogorov bound from `k`-th and `(k+2)`-th absolute moments.
pub fn taubound(sigma: f64, p: f64, k: u32, rho_k: f64, rho_k2: f64) -> f64 {
    let kf = f64::from(k);
    let moments = rho_k / sigma.powf(kf) + 2.0 * rho_k2 / ((kf + 1.0) * (kf + 2.0) * sigma.powf(kf + 2.0));
    printed::COUPLING_K
        * 2f64.powf((kf - 1.0) / (kf + 1.0))
        * (2.0 * p).powf(kf / (2.0 * (kf + 1.0)))
        * moments.powf(1.0 / (kf + 1.0))
}

/// `d₂` bound for geometric sums with vanishing third moment.
pub fn on11(sigma: f64, p: f64, fourth: f64, rho3: f64) -> f64 {
    let s2 = sigma * sigma;
    s2 * p
        * ((2.0 - p) / (1.0 - p)
            + fourth / (6.0 * s2 * s2)
            + p.sqrt() * (1.0 / p).ln() / (SQRT_2 * (1.0 - p)) * (2.0 + rho3 / sigma.powi(3)))
}

/// Bounded-Wasserstein bound of the earlier Laplace Stein framework,
/// reported for comparison only.
pub fn pike_ren_bw(sigma: f64, p: f64, rho3: f64) -> f64 {
    sigma * p.sqrt() * (1.0 + 2.0 * SQRT_2 / sigma) * (1.0 + rho3 / (3.0 * sigma.powi(3)))
}

/// Bounds for `S_p = √p Σ_{i≤N} X_i`, `N ~ Geo(p)`, against
/// `Laplace(0, σ/√2)`. `q` is the quantile-coupling sup; `k` selects the
/// moment-based Kolmogorov bound.
pub fn thm1_bounds(spec: &SummandSpec, p: f64, q: f64, k: Option<u32>) -> Result<Vec<BoundReport>> {
    check_p(p)?;
    let sigma = spec.sigma();
    let base = |name: &str, metric: Metric, bound: f64| {
        BoundReport::new(name, metric, bound)
            .input("summand", spec.name.clone())
            .input("p", p)
            .input("sigma", sigma)
    };
    let mut out = Vec::new();
    if q.is_finite() {
        out.push(base("wedfg", Metric::Kolmogorov, wedfg(sigma, p, q)).input("Q", q));
    }
    let rho3 = abs_moment(spec, 3.0, "rwrwa")?;
    out.push(base("rwrwa", Metric::Wasserstein, rwrwa(sigma, p, rho3)).input("rho3", rho3));
    if let Some(k) = k {
        if k == 0 {
            return Err(Error::domain("taubound", "need k >= 1"));
        }
        let rk = abs_moment(spec, f64::from(k), "taubound")?;
        let rk2 = abs_moment(spec, f64::from(k + 2), "taubound")?;
        out.push(
            base("taubound", Metric::Kolmogorov, taubound(sigma, p, k, rk, rk2))
                .input("k", k)
                .input("rho_k", rk)
                .input("rho_k2", rk2),
        );
    }
    let third = spec.raw_moment(3).map_err(|_| missing("on11", "E X^3"))?;
    if third.abs() <= 1e-12 * sigma.powi(3) {
        let fourth = spec.raw_moment(4).map_err(|_| missing("on11", "E X^4"))?;
        out.push(
            base("on11", Metric::D2, on11(sigma, p, fourth, rho3))
                .input("fourth", fourth)
                .input("rho3", rho3),
        );
    }
    out.push(base("pike_bw", Metric::BoundedWasserstein, pike_ren_bw(sigma, p, rho3)).input("rho3", rho3));
    Ok(out)
}

/// Expand a summand list to exactly `n` entries (a single spec is i.i.d.)
/// and check the common variance.
fn expand<'a>(specs: &'a [SummandSpec], n: u32, what: &'static str) -> Result<Vec<&'a SummandSpec>> {
    if n < 2 {
        return Err(Error::domain(what, format!("need n >= 2, got {n}")));
    }
    let list: Vec<&SummandSpec> = match specs.len() {
        0 => return Err(Error::domain(what, "no summands given")),
        1 => vec![&specs[0]; n as usize],
        len if len == n as usize => specs.iter().collect(),
        len => return Err(Error::domain(what, format!("{len} summands given for n = {n}"))),
    };
    let s2 = list[0].sigma2;
    if list.iter().any(|s| (s.sigma2 - s2).abs() > 1e-12 * s2) {
        return Err(Error::domain(what, "summands must share a common variance"));
    }
    Ok(list)
}

fn zero_pow(base: f64, exp: f64) -> f64 {
    if exp == 0.0 {
        1.0
    } else {
        base.powf(exp)
    }
}

/// `(1/n)(1 + 2(1-2/n)^{n-2})`, with `0⁰ = 1`.
pub fn eskol(n: u32) -> f64 {
    let nf = f64::from(n);
    (1.0 + 2.0 * zero_pow(1.0 - 2.0 / nf, nf - 2.0)) / nf
}

/// Full Wasserstein bound for `U_n → U`, defined for `n ≥ 3`.
pub fn esw(n: u32) -> Result<f64> {
    if n < 3 {
        return Err(Error::domain("esw", format!("need n >= 3, got {n}")));
    }
    let nf = f64::from(n);
    let lead = -PI.sqrt() / (4.0 * nf.sqrt()) * log_gamma_ratio(nf, nf + 0.5).exp();
    let hyp = hyp2f1_terminating(-0.5, 3.0 - nf, 0.5, 2.0 / nf)?;
    // (n-2)^n n^{-n} computed as (1 - 2/n)^n.
    let q = (nf * (-2.0 / nf).ln_1p()).exp();
    let numer = q * nf * (40.0 + 11.0 * (nf - 4.0) * nf) + (nf - 2.0).powi(3) * hyp;
    let denom = (nf - 2.0).powi(2) * (2.0 * nf - 5.0) * (2.0 * nf - 3.0) * (2.0 * nf - 1.0);
    Ok(lead + 2.0 * SQRT_2 * (nf - 1.0) * numer / denom)
}

/// Bounds for `d(U_n, U)`.
pub fn un_bounds(n: u32) -> Result<Vec<BoundReport>> {
    if n < 2 {
        return Err(Error::domain("un_bounds", format!("need n >= 2, got {n}")));
    }
    let nf = f64::from(n);
    let mut out = vec![
        BoundReport::new("pl12", Metric::Kolmogorov, 2.0 / nf).input("n", n),
        BoundReport::new("pl14", Metric::Wasserstein, printed::UN_WASSERSTEIN / nf).input("n", n),
        BoundReport::new("eskol", Metric::Kolmogorov, eskol(n)).input("n", n),
    ];
    if n >= 3 {
        out.push(BoundReport::new("esw", Metric::Wasserstein, esw(n)?).input("n", n));
    }
    Ok(out)
}

/// Bounds for `d(V_n, V)`, `V_n = n^{-1/2} Σ X_i`, `V ~ N(0, σ²)`.
pub fn clt_bounds(specs: &[SummandSpec], n: u32) -> Result<Vec<BoundReport>> {
    let list = expand(specs, n, "clt_bounds")?;
    let nf = f64::from(n);
    let sigma = list[0].sigma();
    let mut rho3_sum = 0.0;
    let mut fourth_sum = 0.0;
    let mut third_zero = true;
    for s in &list {
        rho3_sum += abs_moment(s, 3.0, "thmapk")?;
        fourth_sum += s.raw_moment(4).map_err(|_| missing("thmap2d", "E X^4"))?;
        third_zero &= s.third_moment.abs() <= 1e-12 * sigma.powi(3);
    }
    let be = rho3_sum / (sigma.powi(3) * nf.powf(1.5));
    let iid = specs.len() == 1 || list.windows(2).all(|w| w[0].config == w[1].config);
    let mut out = vec![BoundReport::new("thmapk", Metric::Kolmogorov, printed::BERRY_ESSEEN * be).input("n", n)];
    if iid {
        out.push(BoundReport::new("thmapk_iid", Metric::Kolmogorov, printed::BERRY_ESSEEN_IID * be).input("n", n));
    }
    let w = sigma / nf.powf(1.5) * (2.0 * nf + rho3_sum / sigma.powi(3));
    out.push(BoundReport::new("thmapwd", Metric::Wasserstein, w).input("n", n));
    if third_zero {
        let s2 = sigma * sigma;
        let d2 = s2 / (nf * nf) * (nf + fourth_sum / (3.0 * s2 * s2));
        out.push(BoundReport::new("thmap2d", Metric::D2, d2).input("n", n));
    }
    for r in &mut out {
        r.inputs.insert("sigma".into(), sigma.into());
        r.inputs.insert("summand".into(), list[0].name.clone().into());
    }
    Ok(out)
}

/// Bounds for `T_n = U_n V_n` against `Laplace(0, σ/√2)`.
pub fn thm2_bounds(specs: &[SummandSpec], n: u32) -> Result<Vec<BoundReport>> {
    let list = expand(specs, n, "thm2_bounds")?;
    let nf = f64::from(n);
    let sigma = list[0].sigma();
    let s3 = sigma.powi(3);
    let mut rho3_sum = 0.0;
    for s in &list {
        rho3_sum += abs_moment(s, 3.0, "thm888_dk")?;
    }
    let dk = printed::BERRY_ESSEEN * rho3_sum / (s3 * nf.powf(1.5)) + eskol(n);
    let dw = 2.0 * SQRT_2 * sigma / (3.0 * nf.powf(1.5)) * (2.0 * nf + rho3_sum / s3) + printed::TN_WASSERSTEIN * sigma / nf;
    let mut out = vec![
        BoundReport::new("thm888_dk", Metric::Kolmogorov, dk),
        BoundReport::new("thm888_dw", Metric::Wasserstein, dw),
    ];
    if list.iter().all(|s| s.third_moment.abs() <= 1e-12 * s3) {
        let mut fourth_sum = 0.0;
        for s in &list {
            fourth_sum += s.raw_moment(4).map_err(|_| missing("thm888_d12", "E X^4"))?;
        }
        let s2 = sigma * sigma;
        let d12 = s2 / (nf * nf) * (nf + fourth_sum / (3.0 * s2 * s2)) + printed::TN_WASSERSTEIN * sigma / nf;
        out.push(BoundReport::new("thm888_d12", Metric::D12, d12));
    }
    Ok(out
        .into_iter()
        .map(|r| r.input("n", n).input("sigma", sigma).input("summand", list[0].name.clone()))
        .collect())
}

/// Statistics of `Δ = W - W^L` consumed by [`coupling_bounds`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CouplingStats {
    pub mean_abs: Option<f64>,
    pub mean_sq: Option<f64>,
    /// `P(|Δ| > β)` at the `beta` passed alongside.
    pub tail_prob: Option<f64>,
    /// `E|E[Δ | W]|`.
    pub mean_abs_conditional: Option<f64>,
    /// `(k, E|Δ|^k)`.
    pub abs_moment_k: Option<(u32, f64)>,
}

/// Bounds in terms of a coupling `(W, W^L)` with `Var W = 2b²`.
pub fn coupling_bounds(stats: &CouplingStats, b: f64, beta: f64) -> Result<Vec<BoundReport>> {
    if !(beta > 0.0) {
        return Err(Error::domain("coupling_bounds", format!("need beta > 0, got {beta}")));
    }
    if !(b > 0.0) {
        return Err(Error::domain("coupling_bounds", format!("need b > 0, got {b}")));
    }
    let mut out = Vec::new();
    if let Some(tail) = stats.tail_prob {
        out.push(
            BoundReport::new("dfgh1", Metric::Kolmogorov, kolmogorov_smoothing_constant() * beta / b + kolmogorov_tail_constant() * tail)
                .input("tail_prob", tail),
        );
        out.push(BoundReport::new("dk76", Metric::Kolmogorov, beta / b + 2.0 * tail).input("tail_prob", tail));
    }
    if let Some(m) = stats.mean_abs {
        out.push(BoundReport::new("zezozr", Metric::Wasserstein, 2.0 * m).input("mean_abs", m));
        out.push(BoundReport::new("zezozr1", Metric::Wasserstein, m).input("mean_abs", m));
        out.push(BoundReport::new("zezozr2", Metric::Kolmogorov, m / b).input("mean_abs", m));
    }
    if let (Some(c), Some(sq)) = (stats.mean_abs_conditional, stats.mean_sq) {
        out.push(
            BoundReport::new("ordern", Metric::D2, b * c + sq)
                .input("mean_abs_conditional", c)
                .input("mean_sq", sq),
        );
    }
    if let Some((k, mk)) = stats.abs_moment_k {
        if k == 0 {
            return Err(Error::domain("ghjk2", "need k >= 1"));
        }
        let kf = f64::from(k);
        out.push(
            BoundReport::new("ghjk2", Metric::Kolmogorov, printed::COUPLING_K * (mk / b.powf(kf)).powf(1.0 / (kf + 1.0)))
                .input("k", k)
                .input("abs_moment_k", mk),
        );
    }
    Ok(out
        .into_iter()
        .map(|r| r.input("b", b).input("beta", beta))
        .collect())
}

/// Inputs for the general random-sum bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomSumInputs {
    /// `μ = E N`.
    pub mu: f64,
    /// `σ² = μ^{-1} E Σ_{i≤N} σ_i²`.
    pub sigma: f64,
    /// `sup_i σ_i`.
    pub sup_sigma: f64,
    /// `E|X_M - X_M^L|` with independent `X_M`, `X_M^L`.
    pub equilibrium_gap: f64,
    /// `E|N - M|^{1/2}`.
    pub mean_sqrt_gap: f64,
    /// Quantile-coupling sup over the summands.
    pub q: f64,
    /// `|X_i| ≤ C`; `None` when unbounded.
    pub support_bound: Option<f64>,
    /// `|N - M| ≤ K`.
    pub k: f64,
}

impl RandomSumInputs {
    /// Geometric case: `μ = 1/p`, `M = N`, so `K = 0`.
    pub fn geometric(spec: &SummandSpec, p: f64, q: f64) -> Result<Self> {
        check_p(p)?;
        Geometric::new(p)?;
        let sigma = spec.sigma();
        let support_bound = spec.is_bounded().then(|| {
            let (lo, hi) = spec.handle.support();
            lo.abs().max(hi.abs())
        });
        Ok(Self {
            mu: 1.0 / p,
            sigma,
            sup_sigma: sigma,
            equilibrium_gap: crate::equilibrium::independent_gap_mean(spec)?,
            mean_sqrt_gap: 0.0,
            q,
            support_bound,
            k: 0.0,
        })
    }
}

pub fn random_sum_bounds(inputs: &RandomSumInputs) -> Result<Vec<BoundReport>> {
    let RandomSumInputs {
        mu,
        sigma,
        sup_sigma,
        equilibrium_gap,
        mean_sqrt_gap,
        q,
        support_bound,
        k,
    } = *inputs;
    if !(mu >= 1.0) || !(sigma > 0.0) {
        return Err(Error::domain("random_sum_bounds", format!("need mu >= 1 and sigma > 0, got {mu}, {sigma}")));
    }
    let wedf = 2.0 / mu.sqrt() * (equilibrium_gap + sup_sigma * mean_sqrt_gap);
    let ck = match (support_bound, k) {
        (_, 0.0) => 0.0,
        (Some(c), k) => c * k,
        (None, _) => {
            return Err(Error::domain("wdv", "K > 0 requires bounded summands"));
        }
    };
    let wdv = SQRT_2 * kolmogorov_smoothing_constant() * (q + ck) / (sigma * mu.sqrt());
    let tag = |r: BoundReport| r.input("mu", mu).input("sigma", sigma).input("K", k);
    Ok(vec![
        tag(BoundReport::new("wedf", Metric::Wasserstein, wedf).input("equilibrium_gap", equilibrium_gap)),
        tag(BoundReport::new("wdv", Metric::Kolmogorov, wdv).input("Q", q)),
    ])
}

/// A printed constant next to the value recomputed from its definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantCheck {
    pub name: String,
    pub printed: f64,
    pub recomputed: f64,
    /// Printed value is at least the recomputed one (the bound stays valid).
    pub conservative: bool,
}

impl ConstantCheck {
    fn new(name: &str, printed: f64, recomputed: f64) -> Self {
        Self {
            name: name.to_string(),
            printed,
            recomputed,
            conservative: printed >= recomputed,
        }
    }

    pub fn relative_gap(&self) -> f64 {
        (self.printed - self.recomputed).abs() / self.recomputed.abs()
    }
}

/// Recompute every rounded constant that has a closed-form definition.
pub fn constants_audit() -> Result<Vec<ConstantCheck>> {
    let rc = rayleigh_constants()?;
    // ‖f'‖ for the σ = 1/√2 solution: c_f' / σ³ times the 1/2 scaling.
    let fprime_unit = rc.c_fprime * 2f64.powf(1.5) / 2.0;
    let eu3 = 3.0 * PI.sqrt() / 4.0;
    let un_w = fprime_unit * eu3;
    let e_abs_v = (2.0 / PI).sqrt();
    Ok(vec![
        ConstantCheck::new("coupling_k", printed::COUPLING_K, kolmogorov_smoothing_constant() + kolmogorov_tail_constant()),
        ConstantCheck::new("rayleigh_xf", printed::RAYLEIGH_XF, rc.c_xf),
        ConstantCheck::new("rayleigh_fprime", printed::RAYLEIGH_FPRIME, rc.c_fprime),
        ConstantCheck::new("rayleigh_xfpp", printed::RAYLEIGH_XFPP, rc.c_xfpp),
        ConstantCheck::new("rayleigh_fprime_unit", printed::RAYLEIGH_FPRIME_UNIT, fprime_unit),
        ConstantCheck::new("un_wasserstein", printed::UN_WASSERSTEIN, un_w),
        ConstantCheck::new("tn_wasserstein", printed::TN_WASSERSTEIN, e_abs_v * un_w),
    ])
}
