//! `stein`: command-line front end for the laplace-stein toolkit.

use std::fs::File;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use laplace_stein::bounds::{constants_audit, thm1_bounds, thm2_bounds, un_bounds, BoundReport};
use laplace_stein::distributions::{Laplace, Law, Rayleigh, ScaledBetaRoot, SummandConfig, SummandSpec};
use laplace_stein::equilibrium::quantile_coupling_sup;
use laplace_stein::experiments::{run_convergence_study, simulate_geometric_sum, simulate_tn, ExperimentConfig, MIN_REPLICATIONS};
use laplace_stein::metrics::{kolmogorov_empirical, kolmogorov_exact, wasserstein1, wasserstein1_sample, DistanceEstimate};
use laplace_stein::stein_chi::{chi_uniform_constant, rayleigh_constants};
use laplace_stein::stein_laplace::{default_grid, verify_solution_bounds, Family};
use laplace_stein::Error;
use serde_json::{json, Value};

const EXIT_VIOLATION: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "stein", version, about = "Laplace approximation via Stein's method: bounds, constants and Monte-Carlo studies")]
struct Cli {
    /// Study configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Output path for tables; overrides the config output path.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a convergence study from --config and write its CSV table.
    Study,
    /// Recompute the numerical constants used by the bounds.
    Constants,
    /// Check the sup-norm bounds on Laplace Stein solutions for a family of test functions.
    SteinCheck(SteinCheckArgs),
    /// Evaluate the closed-form bounds at one parameter value.
    Bounds(BoundsArgs),
    /// Compute distances to the limit law, exactly or by simulation.
    Metrics(MetricsArgs),
}

#[derive(Args, Debug)]
struct SteinCheckArgs {
    #[arg(long, value_enum, default_value = "indicator")]
    class: FamilyArg,
    /// Laplace scale parameter.
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    /// Grid points on [-10b, 10b].
    #[arg(long, default_value_t = 200)]
    points: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FamilyArg {
    Indicator,
    Lipschitz,
    Smooth,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Indicator => Family::Indicator,
            FamilyArg::Lipschitz => Family::Lipschitz,
            FamilyArg::Smooth => Family::Smooth,
        }
    }
}

#[derive(Args, Debug)]
struct SummandArg {
    /// Summand law as JSON, e.g. '{"name":"uniform","params":{"c":1.0}}'.
    /// Defaults to the --config summand, else Rademacher with sigma 1.
    #[arg(long)]
    summand: Option<String>,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct Target {
    /// Geometric sum S_p.
    #[arg(long)]
    p: Option<f64>,
    /// Randomly normalised sum T_n.
    #[arg(long)]
    n: Option<u32>,
    /// Mixing variable U_n against the Rayleigh limit.
    #[arg(long)]
    un: Option<u32>,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    #[command(flatten)]
    target: Target,
    #[command(flatten)]
    summand: SummandArg,
}

#[derive(Args, Debug)]
struct MetricsArgs {
    #[command(flatten)]
    target: Target,
    #[command(flatten)]
    summand: SummandArg,
    /// Monte-Carlo replications for --p and --n.
    #[arg(long, default_value_t = 100_000)]
    replications: usize,
}

/// Failure of a command, mapped to an exit code.
enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } | Error::Json(_) => Failure::Config(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

type Outcome = Result<u8, Failure>;
type Curve = Vec<(f64, f64)>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = std::env::var("STEIN_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let result = match &cli.command {
        Command::Study => cmd_study(&cli),
        Command::Constants => cmd_constants(&cli),
        Command::SteinCheck(a) => cmd_stein_check(&cli, a),
        Command::Bounds(a) => cmd_bounds(&cli, a),
        Command::Metrics(a) => cmd_metrics(&cli, a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).unwrap_or_default());
}

fn load_config(cli: &Cli) -> Result<Option<ExperimentConfig>, Failure> {
    let Some(path) = &cli.config else {
        return Ok(None);
    };
    let mut c = ExperimentConfig::load(path).map_err(|e| match e {
        Error::Io { .. } => Failure::Config(e.to_string()),
        Error::Json(j) => Failure::Config(format!("{}: {j}", path.display())),
        other => other.into(),
    })?;
    if let Some(seed) = cli.seed {
        c.seed = seed;
    }
    if let Some(out) = &cli.out {
        c.output_path = out.display().to_string();
    }
    Ok(Some(c))
}

fn cmd_study(cli: &Cli) -> Outcome {
    let config = load_config(cli)?.ok_or_else(|| Failure::Config("study needs --config <path>".into()))?;
    config.validate()?;
    let outcome = run_convergence_study(&config)?;
    if cli.json {
        print_json(&json!({
            "output_path": config.output_path,
            "rows": outcome.rows,
            "fits": outcome.fits,
            "second_moments": outcome.moments,
            "all_satisfied": outcome.all_satisfied(),
        }));
    } else {
        println!("{:>10} {:>9} {:>12} {:>10} {:>12} {:>12} satisfied", "param", "metric", "empirical", "error", "bound_tag", "bound");
        for r in &outcome.rows {
            println!(
                "{:>10} {:>9} {:>12.6} {:>10.2e} {:>12} {:>12.6} {}",
                r.param, r.metric, r.empirical, r.error, r.bound_tag, r.bound, r.satisfied
            );
        }
        for f in &outcome.fits {
            println!("fit {}/{}: slope={:.4} r2={:.4} points={}", f.metric, f.series, f.fit.slope, f.fit.r_squared, f.fit.points);
        }
        println!("wrote {} and {}", config.output_path, config.sidecar_path().display());
    }
    let mut code = 0;
    for r in outcome.violations() {
        eprintln!(
            "violation: param={} metric={} empirical={} error={} bound_tag={} bound={}",
            r.param, r.metric, r.empirical, r.error, r.bound_tag, r.bound
        );
        code = EXIT_VIOLATION;
    }
    Ok(code)
}

fn cmd_constants(cli: &Cli) -> Outcome {
    let r = rayleigh_constants()?;
    let audit = constants_audit()?;
    let uniform2 = chi_uniform_constant(2.0)?;
    let printed = |name: &str| audit.iter().find(|c| c.name == name);
    let mut lines: Vec<(String, f64, Option<f64>, &str)> = vec![("x_star".into(), r.x_star, None, "propapp3")];
    for (key, name) in [
        ("c_xf", "rayleigh_xf"),
        ("c_fprime", "rayleigh_fprime"),
        ("c_xfpp", "rayleigh_xfpp"),
        ("c_fprime_unit", "rayleigh_fprime_unit"),
        ("coupling_k", "coupling_k"),
        ("un_wasserstein", "un_wasserstein"),
        ("tn_wasserstein", "tn_wasserstein"),
    ] {
        if let Some(c) = printed(name) {
            lines.push((key.into(), c.printed, Some(c.recomputed), name));
        }
    }
    lines.push(("chi2_uniform".into(), uniform2, None, "e/2"));
    if cli.json {
        let items: Vec<Value> = lines
            .iter()
            .map(|(k, v, rec, tag)| json!({"name": k, "value": v, "recomputed": rec, "tag": tag}))
            .collect();
        print_json(&json!({"constants": items, "audit": audit}));
    } else {
        for (k, v, rec, tag) in &lines {
            match rec {
                None => println!("{k}={v:.6} [{tag}]"),
                Some(x) => println!("{k}={v} recomputed={x:.6} [{tag}]"),
            }
        }
    }
    Ok(0)
}

fn cmd_stein_check(cli: &Cli, a: &SteinCheckArgs) -> Outcome {
    if a.points == 0 {
        return Err(Failure::Config("invalid config field `points`: must be at least 1".into()));
    }
    if !a.b.is_finite() || a.b <= 0.0 {
        return Err(Failure::Config(format!("invalid config field `b`: need b > 0, got {}", a.b)));
    }
    let grid = default_grid(a.b, a.points);
    let mut worst: Vec<(String, f64)> = Vec::new();
    let mut ok = true;
    for h in Family::from(a.class).members() {
        for r in verify_solution_bounds(h, a.b, &grid)? {
            let used = r.empirical.as_ref().map_or(0.0, |e| e.value);
            let ratio = if r.bound > 0.0 {
                used / r.bound
            } else if used <= 1e-9 {
                0.0
            } else {
                f64::INFINITY
            };
            ok &= ratio <= 1.0 + 1e-6 && r.satisfied.unwrap_or(true);
            match worst.iter_mut().find(|(n, _)| *n == r.name) {
                Some(entry) => entry.1 = entry.1.max(ratio),
                None => worst.push((r.name.clone(), ratio)),
            }
        }
    }
    if cli.json {
        let m: serde_json::Map<String, Value> = worst.iter().map(|(n, v)| (n.clone(), json!(v))).collect();
        print_json(&json!({"b": a.b, "points": a.points, "max_ratio": m, "pass": ok}));
    } else {
        for (n, v) in &worst {
            println!("{n:<16} max used/available = {v:.6}");
        }
        println!("{}", if ok { "PASS" } else { "FAIL" });
    }
    Ok(if ok { 0 } else { EXIT_VIOLATION })
}

fn summand(cli: &Cli, arg: &SummandArg) -> Result<SummandSpec, Failure> {
    let config: SummandConfig = match &arg.summand {
        Some(text) => serde_json::from_str(text).map_err(|e| Failure::Config(format!("invalid config field `summand`: {e}")))?,
        None => match load_config(cli)? {
            Some(c) => c.summand,
            None => SummandConfig::Rademacher { sigma: 1.0 },
        },
    };
    SummandSpec::from_config(&config).map_err(|e| Failure::Config(format!("invalid config field `summand`: {e}")))
}

fn check_p(p: f64) -> Result<(), Failure> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Failure::Config(format!("invalid config field `p`: must lie in (0, 1), got {p}")))
    }
}

fn check_n(n: u32, field: &str) -> Result<(), Failure> {
    if n >= 2 {
        Ok(())
    } else {
        Err(Failure::Config(format!("invalid config field `{field}`: need n >= 2, got {n}")))
    }
}

fn print_reports(cli: &Cli, reports: &[BoundReport]) {
    if cli.json {
        print_json(&json!({ "bounds": reports }));
    } else {
        for r in reports {
            println!("{:<12} {:<5} {:.6}", r.name, r.metric.tag(), r.bound);
        }
    }
}

fn cmd_bounds(cli: &Cli, a: &BoundsArgs) -> Outcome {
    let reports = if let Some(p) = a.target.p {
        check_p(p)?;
        let spec = summand(cli, &a.summand)?;
        let q = quantile_coupling_sup(&spec)?.sup;
        thm1_bounds(&spec, p, q, Some(1))?
    } else if let Some(n) = a.target.n {
        check_n(n, "n")?;
        let spec = summand(cli, &a.summand)?;
        thm2_bounds(std::slice::from_ref(&spec), n)?
    } else {
        let n = a.target.un.unwrap_or(0);
        check_n(n, "un")?;
        un_bounds(n)?
    };
    print_reports(cli, &reports);
    Ok(0)
}

fn write_plot_data(path: &Path, series: &[(&str, Curve)]) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::Runtime(format!("I/O error on {}: {e}", path.display()));
    let mut f = File::create(path).map_err(io)?;
    writeln!(f, "x,series,cdf").map_err(io)?;
    for (name, pts) in series {
        for (x, y) in pts {
            writeln!(f, "{x},{name},{y}").map_err(io)?;
        }
    }
    Ok(())
}

fn curve(law: &dyn Law, lo: f64, hi: f64) -> Curve {
    (0..=400).map(|i| lo + (hi - lo) * f64::from(i) / 400.0).map(|x| (x, law.cdf(x))).collect()
}

fn empirical_curve(sorted: &[f64], lo: f64, hi: f64) -> Curve {
    let n = sorted.len() as f64;
    (0..=400)
        .map(|i| lo + (hi - lo) * f64::from(i) / 400.0)
        .map(|x| (x, sorted.partition_point(|v| *v <= x) as f64 / n))
        .collect()
}

fn cmd_metrics(cli: &Cli, a: &MetricsArgs) -> Outcome {
    let seed = cli.seed.unwrap_or(0);
    let (label, dk, dw, plot): (String, DistanceEstimate, DistanceEstimate, Vec<(&str, Curve)>) =
        if let Some(n) = a.target.un {
            check_n(n, "un")?;
            let un = ScaledBetaRoot::new(n)?;
            let u = Rayleigh::unit_second_moment();
            let plot = vec![("U_n", curve(&un, 0.0, 3.5)), ("U", curve(&u, 0.0, 3.5))];
            (format!("U_{n} vs U"), kolmogorov_exact(&un, &u), wasserstein1(&un, &u)?, plot)
        } else {
            if a.replications < MIN_REPLICATIONS {
                return Err(Failure::Config(format!(
                    "invalid config field `replications`: need at least {MIN_REPLICATIONS}, got {}",
                    a.replications
                )));
            }
            let spec = summand(cli, &a.summand)?;
            let (label, sample) = if let Some(p) = a.target.p {
                check_p(p)?;
                (format!("S_p (p={p}) vs Laplace"), simulate_geometric_sum(&spec, p, a.replications, seed)?)
            } else {
                let n = a.target.n.unwrap_or(0);
                check_n(n, "n")?;
                (format!("T_n (n={n}) vs Laplace"), simulate_tn(&spec, n, a.replications, seed)?)
            };
            let target = Laplace::with_sigma(spec.sigma())?;
            let span = 6.0 * target.scale();
            let dk = kolmogorov_empirical(&sample, |x| target.cdf(x))?;
            let dw = wasserstein1_sample(&sample, &target)?;
            let plot = vec![("empirical", empirical_curve(&sample, -span, span)), ("laplace", curve(&target, -span, span))];
            (label, dk, dw, plot)
        };
    if let Some(out) = &cli.out {
        write_plot_data(out, &plot)?;
    }
    if cli.json {
        print_json(&json!({"target": label, "d_K": dk, "d_W": dw}));
    } else {
        println!("{label}");
        println!("d_K = {:.6} ± {:.2e} ({})", dk.value, dk.error_bound, dk.method);
        println!("d_W = {:.6} ± {:.2e} ({})", dw.value, dw.error_bound, dw.method);
    }
    Ok(0)
}
