//! Acceptance criteria. Each criterion prints one PASS/FAIL line; the
//! process exits nonzero if any criterion fails.

use std::f64::consts::{PI, SQRT_2};
use std::time::{Duration, Instant};

use laplace_stein::bounds::{eskol, esw, kolmogorov_smoothing_constant, kolmogorov_tail_constant, on11, printed, rwrwa, wedfg};
use laplace_stein::distributions::{summand_library, Laplace, Law, Rayleigh, ScaledBetaRoot, SummandSpec};
use laplace_stein::equilibrium::{equilibrium_abs_moment, equilibrium_moment, quantile_coupling_sup, CenteredEquilibrium};
use laplace_stein::experiments::{coupling_statistics, mean_square_gap, run_study, simulate_geometric_sum, ExperimentConfig, RateFit, StudyOutcome};
use laplace_stein::metrics::{dkw_radius, kolmogorov_empirical, kolmogorov_exact, wasserstein1};
use laplace_stein::stein_chi::{operator_mean_zero_check, rayleigh_constants, SteinOperator};
use laplace_stein::stein_laplace::{default_grid, solve_laplace_stein, verify_solution_bounds, TestFunction};
use laplace_stein::Result;

const GEOM_CONFIG: &str = include_str!("../../../configs/geom_rademacher.json");
const TN_CONFIG: &str = include_str!("../../../configs/tn_rademacher.json");

type Criterion = (&'static str, fn() -> Result<Verdict>);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Result<Verdict> {
    Ok(Verdict {
        pass,
        detail: detail.into(),
    })
}

fn rayleigh() -> Result<Verdict> {
    let start = Instant::now();
    let c = rayleigh_constants()?;
    let elapsed = start.elapsed();
    let pass = (c.x_star - 1.360722).abs() <= 1e-5
        && (c.c_xf - 2.325).abs() <= 5e-4
        && (c.c_fprime - 6.11).abs() <= 0.005
        && (c.c_xfpp - 11.30).abs() <= 0.005
        && elapsed < Duration::from_secs(1);
    verdict(
        pass,
        format!(
            "x*={:.7} c_xf={:.6} c_f'={:.5} c_xf''={:.5} in {:?}",
            c.x_star, c.c_xf, c.c_fprime, c.c_xfpp, elapsed
        ),
    )
}

fn laplace_solution() -> Result<Verdict> {
    let start = Instant::now();
    let mut worst_ratio = 0.0f64;
    let mut worst_residual = 0.0f64;
    let mut failures = 0;
    let mut checked = 0;
    for &b in &[0.5, 1.0, 2.0] {
        let grid = default_grid(b, 200);
        for i in 0..10 {
            let a = -3.0 + 6.0 * f64::from(i) / 9.0;
            for &eps in &[0.1, 1.0] {
                let h = TestFunction::smoothed_indicator(a, eps)?;
                for r in verify_solution_bounds(h, b, &grid)? {
                    if !matches!(r.name.as_str(), "hae1" | "hae2" | "hae2_f2") {
                        continue;
                    }
                    let used = r.empirical.as_ref().map_or(0.0, |e| e.value);
                    worst_ratio = worst_ratio.max(used / r.bound);
                    if used > r.bound * (1.0 + 1e-6) {
                        failures += 1;
                    }
                }
                let sol = solve_laplace_stein(h, b)?;
                for &x in &grid {
                    if sol.near_kink(x, 3e-3 * b) {
                        continue;
                    }
                    checked += 1;
                    worst_residual = worst_residual.max(sol.residual(x)?.abs());
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = failures == 0 && worst_residual <= 1e-6 && elapsed < Duration::from_secs(30);
    verdict(
        pass,
        format!("max sup/bound={worst_ratio:.6} max residual={worst_residual:.2e} over {checked} points in {elapsed:?}"),
    )
}

fn equilibrium() -> Result<Verdict> {
    let mut density_err = 0.0f64;
    for &b in &[0.5, 1.0, 2.0] {
        let eq = CenteredEquilibrium::new(&SummandSpec::laplace(b)?)?;
        for i in 0..=2000 {
            let x = -20.0 * b + 40.0 * b * f64::from(i) / 2000.0;
            density_err = density_err.max((eq.pdf(x) - (-x.abs() / b).exp() / (2.0 * b)).abs());
        }
    }
    let mut moment_err = 0.0f64;
    for spec in summand_library() {
        let eq = CenteredEquilibrium::new(&spec)?;
        for r in 0..=4 {
            let closed = equilibrium_moment(&spec, r)?;
            let scale = equilibrium_abs_moment(&spec, f64::from(r))?;
            moment_err = moment_err.max((eq.numeric_moment(r) - closed).abs() / scale);
        }
    }
    verdict(
        density_err <= 1e-6 && moment_err <= 1e-8,
        format!("density sup error={density_err:.2e} max relative moment error={moment_err:.2e}"),
    )
}

fn geometric_stability() -> Result<Verdict> {
    let sigma = 1.0;
    let spec = SummandSpec::laplace(sigma / SQRT_2)?;
    let target = Laplace::with_sigma(sigma)?;
    let sample = simulate_geometric_sum(&spec, 0.01, 1_000_000, 0x5eed)?;
    let d = kolmogorov_empirical(&sample, |x| target.cdf(x))?;
    verdict(d.value <= 1.63e-3, format!("d_K={:.3e} vs DKW radius {:.3e}", d.value, dkw_radius(sample.len(), 0.01)))
}

fn rows<'a>(o: &'a StudyOutcome, metric: &'a str, tag: &'a str) -> impl Iterator<Item = &'a laplace_stein::experiments::StudyRow> {
    o.rows.iter().filter(move |r| r.metric == metric && r.bound_tag == tag)
}

fn theorem_geometric() -> Result<Verdict> {
    let start = Instant::now();
    let config = ExperimentConfig::from_json(GEOM_CONFIG)?;
    let spec = SummandSpec::from_config(&config.summand)?;
    let q = quantile_coupling_sup(&spec)?.sup;
    let o = run_study(&config)?;
    let elapsed = start.elapsed();
    let sigma = spec.sigma();
    let rho3 = spec.abs_moment(3.0)?;
    let mut ok = (q - 1.0).abs() < 1e-9;
    for r in rows(&o, "K", "wedfg") {
        ok &= r.empirical - r.error <= wedfg(sigma, r.param, 1.0);
    }
    for r in rows(&o, "W", "rwrwa") {
        ok &= r.empirical - r.error <= rwrwa(sigma, r.param, rho3);
    }
    ok &= rows(&o, "K", "wedfg").count() == 5 && rows(&o, "W", "rwrwa").count() == 5;
    let slope = o.fit("K", "empirical").map_or(f64::NAN, |f| f.slope);
    ok &= (slope - 0.5).abs() <= 0.1 && elapsed < Duration::from_secs(180);
    verdict(ok, format!("Q={q:.6} d_K slope={slope:.4} all satisfied={} in {elapsed:?}", o.all_satisfied()))
}

fn d2_bracket() -> Result<Verdict> {
    let config = ExperimentConfig::from_json(GEOM_CONFIG)?;
    let spec = SummandSpec::from_config(&config.summand)?;
    let o = run_study(&config)?;
    let sigma = spec.sigma();
    let rho3 = spec.abs_moment(3.0)?;
    let mut bracket = true;
    let mut ps = Vec::new();
    let mut ratios = Vec::new();
    let mut reduced = Vec::new();
    for r in rows(&o, "cf-lower", "on11") {
        let p = r.param;
        bracket &= r.empirical <= r.bound && (r.bound - on11(sigma, p, spec.fourth_moment, rho3)).abs() < 1e-15;
        ps.push(p);
        ratios.push(r.bound / p);
        // The bound without its p^{3/2} log(1/p) term.
        let log_term = sigma * sigma * p * p.sqrt() * (1.0 / p).ln() / (SQRT_2 * (1.0 - p)) * (2.0 + rho3 / sigma.powi(3));
        reduced.push(r.bound - log_term);
    }
    let slope = RateFit::fit(&ps, &reduced)?.slope;
    let max_ratio = ratios.iter().cloned().fold(0.0, f64::max);
    let min_ratio = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let pass = bracket && ps.len() == 5 && (0.9..=1.0).contains(&slope);
    verdict(
        pass,
        format!("cf-lower <= on11: {bracket}; on11/p in [{min_ratio:.4}, {max_ratio:.4}]; slope without log term={slope:.4} (target [0.9, 1.0])"),
    )
}

fn un_distances() -> Result<Verdict> {
    let u = Rayleigh::unit_second_moment();
    let mut ok = true;
    let mut worst_k = 0.0f64;
    let mut worst_w = 0.0f64;
    for n in 2..=50u32 {
        let un = ScaledBetaRoot::new(n)?;
        let nf = f64::from(n);
        let dk = kolmogorov_exact(&un, &u).value;
        let dw = wasserstein1(&un, &u)?.value;
        let bk = (2.0 / nf).min(eskol(n));
        let bw = if n >= 3 { (printed::UN_WASSERSTEIN / nf).min(esw(n)?) } else { printed::UN_WASSERSTEIN / nf };
        ok &= dk <= bk && dw <= bw;
        worst_k = worst_k.max(dk / bk);
        worst_w = worst_w.max(dw / bw);
        if n >= 3 {
            ok &= esw(n)? <= printed::UN_WASSERSTEIN / nf;
        }
    }
    let d2 = kolmogorov_exact(&ScaledBetaRoot::new(2)?, &u).value;
    ok &= (d2 - 0.153426).abs() <= 1e-5;
    verdict(ok, format!("max d_K/bound={worst_k:.4} max d_W/bound={worst_w:.4} d_K(U_2,U)={d2:.6}"))
}

fn theorem_tn() -> Result<Verdict> {
    let config = ExperimentConfig::from_json(TN_CONFIG)?;
    let o = run_study(&config)?;
    let mut ok = o.all_satisfied();
    for r in rows(&o, "K", "thm888_dk").chain(rows(&o, "W", "thm888_dw")) {
        ok &= r.empirical - r.error <= r.bound;
    }
    ok &= rows(&o, "K", "thm888_dk").count() == 5 && rows(&o, "W", "thm888_dw").count() == 5;
    let worst = o
        .rows
        .iter()
        .filter(|r| r.metric != "cf-lower")
        .map(|r| (r.empirical - r.error) / r.bound)
        .fold(0.0, f64::max);
    verdict(ok, format!("all satisfied={}; max (empirical-error)/bound={worst:.4}", o.all_satisfied()))
}

fn operators() -> Result<Verdict> {
    type Pair = (&'static str, fn(f64) -> f64, fn(f64) -> f64);
    let fs: [Pair; 4] = [
        ("1", |_| 1.0, |_| 0.0),
        ("x", |x| x, |_| 1.0),
        ("x^2", |x| x * x, |x| 2.0 * x),
        ("sin", f64::sin, f64::cos),
    ];
    let mut worst = 0.0f64;
    for (_, f, df) in fs {
        worst = worst.max(operator_mean_zero_check(SteinOperator::Rayleigh { sigma: 1.0 / SQRT_2 }, f, df)?.abs());
        for n in [2, 5, 20] {
            worst = worst.max(operator_mean_zero_check(SteinOperator::ScaledBeta { n }, f, df)?.abs());
        }
    }
    verdict(worst <= 1e-6, format!("max |E A f|={worst:.2e}"))
}

fn coupling() -> Result<Verdict> {
    let spec = SummandSpec::rademacher(1.0)?;
    let b = spec.sigma() / SQRT_2;
    let mut ok = true;
    let mut details = Vec::new();
    for (i, &p) in [0.1, 0.05, 0.02, 0.01, 0.005].iter().enumerate() {
        let seed = 0xc0 + i as u64;
        let stats = coupling_statistics(std::slice::from_ref(&spec), p, 200_000, &[0.1], seed)?;
        let target = mean_square_gap(&spec, p);
        let z = (stats.mean_sq.value - target) / stats.mean_sq.std_error;
        let ghjk2 = printed::COUPLING_K * (stats.mean_abs.value / b).sqrt();
        let sample = simulate_geometric_sum(&spec, p, 1_000_000, seed + 100)?;
        let law = Laplace::with_sigma(spec.sigma())?;
        let d = kolmogorov_empirical(&sample, |x| law.cdf(x))?;
        ok &= z.abs() <= 3.0 && d.value - d.error_bound <= ghjk2;
        details.push(format!("p={p}: z={z:+.2} ghjk2={ghjk2:.3}>d_K={:.4}", d.value));
    }
    verdict(ok, details.join("; "))
}

fn constants() -> Result<Verdict> {
    let k = kolmogorov_smoothing_constant() + kolmogorov_tail_constant();
    let rounded = (2.0 / PI).sqrt();
    let tn = 0.7979 * printed::UN_WASSERSTEIN;
    let unit = printed::RAYLEIGH_FPRIME * 2f64.powf(1.5) / 2.0;
    let pass = (k - 11.5597).abs() <= 1e-4
        && (tn - printed::TN_WASSERSTEIN).abs() <= 1e-3
        && (unit - printed::RAYLEIGH_FPRIME_UNIT).abs() <= 1e-4
        && (rounded - 0.7979).abs() < 5e-5;
    verdict(pass, format!("{k:.6} vs 11.5597; 0.7979*11.49={tn:.5} vs 9.168; 6.11*2^1.5/2={unit:.6} vs 8.6408"))
}

fn main() {
    let threads = rayon::current_num_threads();
    println!("acceptance: {threads} worker thread(s)");
    let criteria: [Criterion; 11] = [
        ("Rayleigh constants", rayleigh),
        ("Laplace Stein solution bounds", laplace_solution),
        ("equilibrium fixed point and moments", equilibrium),
        ("geometric stability", geometric_stability),
        ("geometric sum d_K/d_W bounds and rate", theorem_geometric),
        ("d_2 bracket", d2_bracket),
        ("U_n distances", un_distances),
        ("T_n d_K/d_W bounds", theorem_tn),
        ("operator mean zero", operators),
        ("coupling statistics", coupling),
        ("printed-constant audit", constants),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let v = run().unwrap_or_else(|e| Verdict {
            pass: false,
            detail: format!("error: {e}"),
        });
        if !v.pass {
            failed += 1;
        }
        println!("[{:>2}] {} {name}: {}", i + 1, if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
