//! Monte-Carlo convergence studies for geometric sums `S_p` and randomly
//! normalised sums `T_n`, with log-log rate fits.

mod coupling;
mod simulate;

use std::fs::{self, File};
use std::io::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use coupling::{
    binned_abs_conditional_mean, conditional_gap_bound, coupling_statistics, mean_square_gap, CouplingStatistics, Estimate,
    TailEstimate, BOOTSTRAP_RESAMPLES, CONDITIONAL_BINS,
};
pub use simulate::{second_moment, simulate_geometric_sum, simulate_tn};

use crate::bounds::{thm1_bounds, thm2_bounds, BoundReport, Metric};
use crate::distributions::{Beta1, Laplace, Law, SummandConfig, SummandSpec};
use crate::equilibrium::quantile_coupling_sup;
use crate::error::{Error, Result};
use crate::metrics::{cf_lower_bound, geometric_sum_cf, kolmogorov_empirical, omega_grid, wasserstein1_sample, CfClass, DistanceEstimate};
use crate::quad::Integrator;

pub const MIN_REPLICATIONS: usize = 10_000;
pub const DEFAULT_REPLICATIONS: usize = 1_000_000;
/// Rate fits ignore points whose empirical distance exceeds this, and
/// points not resolved above their error bar.
pub const PRE_ASYMPTOTIC: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    /// `S_p`; the grid holds values of `p`.
    Geometric,
    /// `T_n`; the grid holds values of `n`.
    Tn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StudyMetric {
    #[serde(rename = "K")]
    Kolmogorov,
    #[serde(rename = "W")]
    Wasserstein,
    #[serde(rename = "cf-lower")]
    CfLower,
}

impl StudyMetric {
    pub fn tag(self) -> &'static str {
        match self {
            StudyMetric::Kolmogorov => "K",
            StudyMetric::Wasserstein => "W",
            StudyMetric::CfLower => "cf-lower",
        }
    }
}

fn default_replications() -> usize {
    DEFAULT_REPLICATIONS
}

/// A convergence study read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default = "default_replications")]
    pub replications: usize,
    pub summand: SummandConfig,
    pub kind: StudyKind,
    pub grid: Vec<f64>,
    pub metrics: Vec<StudyMetric>,
    pub output_path: String,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications < MIN_REPLICATIONS {
            return Err(Error::config(
                "replications",
                format!("need at least {MIN_REPLICATIONS}, got {}", self.replications),
            ));
        }
        if self.grid.is_empty() {
            return Err(Error::config("grid", "must not be empty"));
        }
        for (i, &g) in self.grid.iter().enumerate() {
            let ok = match self.kind {
                StudyKind::Geometric => g > 0.0 && g < 1.0,
                StudyKind::Tn => g >= 2.0 && g.fract() == 0.0 && g <= f64::from(u32::MAX),
            };
            if !ok {
                let want = match self.kind {
                    StudyKind::Geometric => "p must lie in (0, 1)",
                    StudyKind::Tn => "n must be an integer >= 2",
                };
                return Err(Error::config(format!("grid[{i}]"), format!("{want}, got {g}")));
            }
        }
        if self.metrics.is_empty() {
            return Err(Error::config("metrics", "must not be empty"));
        }
        if self.output_path.trim().is_empty() {
            return Err(Error::config("output_path", "must not be empty"));
        }
        SummandSpec::from_config(&self.summand).map_err(|e| Error::config("summand", e.to_string()))?;
        Ok(())
    }

    /// Path of the JSON sidecar written next to the CSV table.
    pub fn sidecar_path(&self) -> PathBuf {
        PathBuf::from(format!("{}.json", self.output_path))
    }
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

impl RateFit {
    pub fn fit(xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::domain("RateFit", "length mismatch"));
        }
        if xs.len() < 4 {
            return Err(Error::domain("RateFit", format!("need at least 4 points, got {}", xs.len())));
        }
        if xs.iter().chain(ys).any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::domain("RateFit", "values must be positive and finite"));
        }
        let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
        let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
        let n = lx.len() as f64;
        let mx = lx.iter().sum::<f64>() / n;
        let my = ly.iter().sum::<f64>() / n;
        let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
        let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
        let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
        if sxx == 0.0 {
            return Err(Error::domain("RateFit", "all x values coincide"));
        }
        let slope = sxy / sxx;
        let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
        Ok(Self {
            slope,
            intercept: my - slope * mx,
            r_squared,
            points: lx.len(),
        })
    }
}

/// One line of the study table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub param: f64,
    pub metric: String,
    pub empirical: f64,
    pub error: f64,
    pub bound_tag: String,
    pub bound: f64,
    pub satisfied: bool,
}

/// A rate fit of one series (`empirical` or a bound tag) of one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesFit {
    pub metric: String,
    pub series: String,
    pub fit: RateFit,
}

/// Sample second moment against `σ²` at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub param: f64,
    pub second_moment: Estimate,
    pub target: f64,
    pub within_4se: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyOutcome {
    pub rows: Vec<StudyRow>,
    pub fits: Vec<SeriesFit>,
    pub moments: Vec<MomentCheck>,
}

impl StudyOutcome {
    pub fn all_satisfied(&self) -> bool {
        self.rows.iter().all(|r| r.satisfied)
    }

    pub fn violations(&self) -> impl Iterator<Item = &StudyRow> {
        self.rows.iter().filter(|r| !r.satisfied)
    }

    pub fn fit(&self, metric: &str, series: &str) -> Option<&RateFit> {
        self.fits
            .iter()
            .find(|f| f.metric == metric && f.series == series)
            .map(|f| &f.fit)
    }
}

fn point_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Characteristic function of `T_n`, averaging `φ_X(√B t)^n` over
/// `B ~ Beta(1, n-1)` in the quantile scale.
pub fn tn_cf(spec: &SummandSpec, n: u32, t: f64) -> Result<Complex64> {
    let beta = Beta1::new(f64::from(n.max(2) - 1))?;
    let phi = |u: f64| -> Result<Complex64> {
        let b = beta.quantile(u);
        let v = spec.handle.cf(b.sqrt() * t).ok_or_else(|| Error::MissingMoment {
            what: "tn_cf",
            moment: "characteristic function".into(),
        })?;
        Ok(v.powu(n))
    };
    phi(0.5)?;
    let quad = Integrator::new(1e-12, 1e-10);
    let re = quad.integrate(|u| phi(u).map(|c| c.re).unwrap_or(f64::NAN), 0.0, 1.0, &[])?;
    let im = quad.integrate(|u| phi(u).map(|c| c.im).unwrap_or(f64::NAN), 0.0, 1.0, &[])?;
    Ok(Complex64::new(re.value, im.value))
}

fn cf_lower(spec: &SummandSpec, kind: StudyKind, param: f64, target: &Laplace) -> Result<DistanceEstimate> {
    let omegas = omega_grid(0.1, 10.0, 300);
    let b = target.scale();
    let laplace = |t: f64| Complex64::new(1.0 / (1.0 + b * b * t * t), 0.0);
    match kind {
        StudyKind::Geometric => {
            if spec.handle.cf(1.0).is_none() {
                return Err(Error::MissingMoment {
                    what: "cf-lower",
                    moment: "characteristic function".into(),
                });
            }
            let phi = |t: f64| spec.handle.cf(t).unwrap_or_default();
            cf_lower_bound(|t| geometric_sum_cf(phi, param, t), laplace, &omegas, CfClass::D2)
        }
        StudyKind::Tn => {
            let n = param as u32;
            let values = omegas.iter().map(|&w| tn_cf(spec, n, w)).collect::<Result<Vec<_>>>()?;
            let lookup = |w: f64| {
                let i = omegas.iter().position(|&o| o == w).unwrap_or(0);
                values[i]
            };
            cf_lower_bound(lookup, laplace, &omegas, CfClass::D12)
        }
    }
}

fn push_rows(rows: &mut Vec<StudyRow>, param: f64, metric: StudyMetric, est: &DistanceEstimate, bounds: &[BoundReport], wanted: Metric) {
    let mut any = false;
    for report in bounds.iter().filter(|r| r.metric == wanted) {
        any = true;
        let mut r = report.clone();
        r.attach(est.clone());
        rows.push(StudyRow {
            param,
            metric: metric.tag().into(),
            empirical: est.value,
            error: est.error_bound,
            bound_tag: r.name.clone(),
            bound: r.bound,
            satisfied: r.satisfied.unwrap_or(true),
        });
    }
    if !any {
        rows.push(StudyRow {
            param,
            metric: metric.tag().into(),
            empirical: est.value,
            error: est.error_bound,
            bound_tag: "none".into(),
            bound: f64::NAN,
            satisfied: true,
        });
    }
}

fn rate_fits(rows: &[StudyRow]) -> Vec<SeriesFit> {
    let mut keys: Vec<(String, String)> = Vec::new();
    for r in rows {
        for series in ["empirical".to_string(), r.bound_tag.clone()] {
            let k = (r.metric.clone(), series);
            if k.1 != "none" && !keys.contains(&k) {
                keys.push(k);
            }
        }
    }
    let mut out = Vec::new();
    for (metric, series) in keys {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut seen = Vec::new();
        for r in rows.iter().filter(|r| r.metric == metric) {
            if series == "empirical" {
                let unresolved = r.empirical <= r.error;
                if seen.contains(&r.param.to_bits()) || unresolved || r.empirical > PRE_ASYMPTOTIC {
                    continue;
                }
                seen.push(r.param.to_bits());
                xs.push(r.param);
                ys.push(r.empirical);
            } else if r.bound_tag == series && r.bound > 0.0 && r.bound.is_finite() {
                xs.push(r.param);
                ys.push(r.bound);
            }
        }
        if let Ok(fit) = RateFit::fit(&xs, &ys) {
            out.push(SeriesFit { metric, series, fit });
        }
    }
    out
}

/// Runs the study without writing any files.
pub fn run_study(config: &ExperimentConfig) -> Result<StudyOutcome> {
    config.validate()?;
    let spec = SummandSpec::from_config(&config.summand)?;
    let target = Laplace::with_sigma(spec.sigma())?;
    let q = match config.kind {
        StudyKind::Geometric => quantile_coupling_sup(&spec)?.sup,
        StudyKind::Tn => f64::NAN,
    };
    let mut rows = Vec::new();
    let mut moments = Vec::new();
    for (i, &param) in config.grid.iter().enumerate() {
        let seed = point_seed(config.seed, i);
        let (sample, bounds) = match config.kind {
            StudyKind::Geometric => (
                simulate_geometric_sum(&spec, param, config.replications, seed)?,
                thm1_bounds(&spec, param, q, Some(1))?,
            ),
            StudyKind::Tn => {
                let n = param as u32;
                (
                    simulate_tn(&spec, n, config.replications, seed)?,
                    thm2_bounds(std::slice::from_ref(&spec), n)?,
                )
            }
        };
        let (m, se) = second_moment(&sample);
        let est = Estimate { value: m, std_error: se };
        moments.push(MomentCheck {
            param,
            second_moment: est,
            target: spec.sigma2,
            within_4se: est.within(spec.sigma2, 4.0),
        });
        for &metric in &config.metrics {
            match metric {
                StudyMetric::Kolmogorov => {
                    let d = kolmogorov_empirical(&sample, |x| target.cdf(x))?;
                    push_rows(&mut rows, param, metric, &d, &bounds, Metric::Kolmogorov);
                }
                StudyMetric::Wasserstein => {
                    let d = wasserstein1_sample(&sample, &target)?;
                    push_rows(&mut rows, param, metric, &d, &bounds, Metric::Wasserstein);
                }
                StudyMetric::CfLower => {
                    let d = cf_lower(&spec, config.kind, param, &target)?;
                    let wanted = match config.kind {
                        StudyKind::Geometric => Metric::D2,
                        StudyKind::Tn => Metric::D12,
                    };
                    push_rows(&mut rows, param, metric, &d, &bounds, wanted);
                }
            }
        }
    }
    let fits = rate_fits(&rows);
    Ok(StudyOutcome { rows, fits, moments })
}

#[derive(Serialize)]
struct Sidecar<'a> {
    version: &'static str,
    config: &'a ExperimentConfig,
    fits: &'a [SeriesFit],
    second_moments: &'a [MomentCheck],
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes the CSV table to `output_path` and the JSON sidecar next to it.
pub fn write_outputs(config: &ExperimentConfig, outcome: &StudyOutcome) -> Result<()> {
    let csv_path = PathBuf::from(&config.output_path);
    if let Some(dir) = csv_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let file = File::create(&csv_path).map_err(io_err(&csv_path))?;
    let mut w = csv::Writer::from_writer(file);
    for row in &outcome.rows {
        w.serialize(row)?;
    }
    w.flush().map_err(io_err(&csv_path))?;

    let side = config.sidecar_path();
    let body = serde_json::to_string_pretty(&Sidecar {
        version: env!("CARGO_PKG_VERSION"),
        config,
        fits: &outcome.fits,
        second_moments: &outcome.moments,
    })?;
    let mut f = File::create(&side).map_err(io_err(&side))?;
    writeln!(f, "{body}").map_err(io_err(&side))?;
    Ok(())
}

/// Runs the study and writes its table and sidecar.
pub fn run_convergence_study(config: &ExperimentConfig) -> Result<StudyOutcome> {
    let outcome = run_study(config)?;
    write_outputs(config, &outcome)?;
    Ok(outcome)
}
