use std::f64::consts::SQRT_2;

use laplace_stein::bounds::{eskol, on11, rwrwa, wedfg};
use laplace_stein::distributions::{Laplace, Law, SummandSpec, Uniform};
use laplace_stein::equilibrium::{equilibrium_moment, quantile_coupling_sup, CenteredEquilibrium};
use laplace_stein::experiments::{simulate_geometric_sum, RateFit};
use laplace_stein::metrics::{geometric_sum_cf, kolmogorov_exact, kolmogorov_two_sample, wasserstein1};
use laplace_stein::specfun::{erf, erfc, gamma_p, gamma_q, log_gamma};
use laplace_stein::stein_laplace::{solve_laplace_stein, TestFunction};
use num_complex::Complex64;
use proptest::prelude::*;

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig::with_cases(n)
}

proptest! {
    #![proptest_config(cases(64))]

    #[test]
    fn erf_and_erfc_are_complementary(x in -6.0f64..6.0) {
        prop_assert!((erf(x) + erfc(x) - 1.0).abs() < 1e-15);
        prop_assert!((erf(-x) + erf(x)).abs() < 1e-15);
    }

    #[test]
    fn incomplete_gamma_partitions_unity(a in 0.1f64..20.0, x in 0.0f64..40.0) {
        let s = gamma_p(a, x).unwrap() + gamma_q(a, x).unwrap();
        prop_assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_gamma_recurrence(x in 0.1f64..50.0) {
        let lhs = log_gamma(x + 1.0).unwrap();
        let rhs = log_gamma(x).unwrap() + x.ln();
        prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn laplace_quantile_inverts_cdf(a in -5.0f64..5.0, b in 0.05f64..10.0, u in 1e-9f64..(1.0 - 1e-9)) {
        let law = Laplace::new(a, b).unwrap();
        prop_assert!((law.cdf(law.quantile(u)) - u).abs() < 1e-12);
    }

    #[test]
    fn laplace_is_geometrically_stable(b in 0.1f64..3.0, p in 0.001f64..0.999, t in -20.0f64..20.0) {
        // √p times a geometric sum of Laplace(0, b) summands is again Laplace(0, b).
        let law = Laplace::new(0.0, b).unwrap();
        let lhs = geometric_sum_cf(|s| law.cf(s).unwrap(), p, t);
        let rhs: Complex64 = law.cf(t).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn kolmogorov_is_a_symmetric_metric(b1 in 0.2f64..3.0, b2 in 0.2f64..3.0, shift in -1.0f64..1.0) {
        let x = Laplace::new(0.0, b1).unwrap();
        let y = Laplace::new(shift, b2).unwrap();
        let d1 = kolmogorov_exact(&x, &y);
        let d2 = kolmogorov_exact(&y, &x);
        prop_assert!((d1.value - d2.value).abs() <= d1.error_bound + d2.error_bound);
        prop_assert!((0.0..=1.0).contains(&d1.value));
        prop_assert!(kolmogorov_exact(&x, &x).value <= 1e-12);
    }

    #[test]
    fn wasserstein_scales_linearly(b1 in 0.2f64..2.0, b2 in 0.2f64..2.0, c in 0.1f64..5.0) {
        let d = wasserstein1(&Laplace::new(0.0, b1).unwrap(), &Laplace::new(0.0, b2).unwrap()).unwrap();
        let dc = wasserstein1(&Laplace::new(0.0, c * b1).unwrap(), &Laplace::new(0.0, c * b2).unwrap()).unwrap();
        prop_assert!((dc.value - c * d.value).abs() <= dc.error_bound + c * d.error_bound + 1e-9);
        // Centered Laplace laws are stochastically ordered in |X|: d_W = E|X| gap.
        prop_assert!((d.value - (b1 - b2).abs()).abs() < 1e-7);
    }

    #[test]
    fn kolmogorov_two_sample_is_invariant_under_monotone_maps(seed in 0u64..1000) {
        let spec = SummandSpec::uniform(1.0).unwrap();
        let xs = simulate_geometric_sum(&spec, 0.3, 2000, seed).unwrap();
        let ys = simulate_geometric_sum(&spec, 0.1, 2000, seed + 1).unwrap();
        let cube = |v: &[f64]| v.iter().map(|x| x * x * x).collect::<Vec<_>>();
        let a = kolmogorov_two_sample(&xs, &ys).unwrap().value;
        let b = kolmogorov_two_sample(&cube(&xs), &cube(&ys)).unwrap().value;
        prop_assert_eq!(a, b);
    }

    #[test]
    fn equilibrium_moments_follow_the_closed_form(c in 0.2f64..4.0, r in 0u32..5) {
        let spec = SummandSpec::uniform(c).unwrap();
        let eq = CenteredEquilibrium::new(&spec).unwrap();
        let closed = equilibrium_moment(&spec, r).unwrap();
        let scale = c.powi(r as i32);
        prop_assert!((eq.numeric_moment(r) - closed).abs() < 1e-9 * scale);
        let law = Uniform::new(c).unwrap();
        let direct = law.raw_moment(r + 2).unwrap() * 2.0 / ((f64::from(r) + 1.0) * (f64::from(r) + 2.0) * spec.sigma2);
        prop_assert!((closed - direct).abs() < 1e-12 * scale.max(1.0));
    }

    #[test]
    fn quantile_gap_scales_with_the_summand(c in 0.2f64..5.0) {
        let q = quantile_coupling_sup(&SummandSpec::uniform(c).unwrap()).unwrap();
        let q1 = quantile_coupling_sup(&SummandSpec::uniform(1.0).unwrap()).unwrap();
        prop_assert!((q.sup - c * q1.sup).abs() < 1e-6 * c);
    }

    #[test]
    fn geometric_bounds_grow_with_p(sigma in 0.2f64..4.0, p1 in 0.001f64..0.5, dp in 0.001f64..0.4) {
        let p2 = p1 + dp;
        let rho3 = sigma.powi(3);
        prop_assert!(wedfg(sigma, p1, sigma) < wedfg(sigma, p2, sigma));
        prop_assert!(rwrwa(sigma, p1, rho3) < rwrwa(sigma, p2, rho3));
        prop_assert!(on11(sigma, p1, sigma.powi(4), rho3) < on11(sigma, p2, sigma.powi(4), rho3));
        // Rademacher: Q = σ, so the Kolmogorov bound does not depend on σ.
        prop_assert!((wedfg(sigma, p1, sigma) - wedfg(1.0, p1, 1.0)).abs() < 1e-12);
    }

    #[test]
    fn eskol_improves_on_two_over_n(n in 3u32..5000) {
        prop_assert!(eskol(n) < 2.0 / f64::from(n));
    }

    #[test]
    fn rate_fit_recovers_power_laws(slope in -2.0f64..2.0, scale in 0.01f64..100.0) {
        let xs = [0.1, 0.05, 0.02, 0.01, 0.005];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| scale * x.powf(slope)).collect();
        let f = RateFit::fit(&xs, &ys).unwrap();
        prop_assert!((f.slope - slope).abs() < 1e-10);
        prop_assert!((0.0..=1.0).contains(&f.r_squared));
    }
}

proptest! {
    #![proptest_config(cases(24))]

    #[test]
    fn stein_solution_solves_the_equation(a in -3.0f64..3.0, eps in 0.05f64..2.0, b in 0.3f64..3.0, x in -5.0f64..5.0) {
        let h = TestFunction::smoothed_indicator(a, eps).unwrap();
        let sol = solve_laplace_stein(h, b).unwrap();
        prop_assert!(sol.f(0.0).unwrap().abs() < 1e-9);
        let xb = x * b;
        prop_assume!(!sol.near_kink(xb, 3e-3 * b));
        prop_assert!(sol.residual(xb).unwrap().abs() < 1e-6);
        prop_assert!(sol.f(xb).unwrap().abs() <= 1.0 + 1e-9);
        prop_assert!(sol.f1(xb).unwrap().abs() <= 1.0 / b + 1e-9);
    }

    #[test]
    fn sample_sums_have_the_target_variance(p in 0.02f64..0.9, seed in 0u64..1_000) {
        let spec = SummandSpec::laplace(1.0 / SQRT_2).unwrap();
        let s = simulate_geometric_sum(&spec, p, 40_000, seed).unwrap();
        let n = s.len() as f64;
        let m2 = s.iter().map(|x| x * x).sum::<f64>() / n;
        let v = s.iter().map(|x| (x * x - m2).powi(2)).sum::<f64>() / (n - 1.0);
        prop_assert!((m2 - 1.0).abs() < 5.0 * (v / n).sqrt());
    }
}
