use proptest::prelude::*;

use swbi::ghdist::bivariate::Point;
use swbi::ghdist::{GhParams, Variant};
use swbi::numeric::stats;
use swbi::stress::{bootstrap_se, run_stress, stress_measures, StressOptions};
use swbi::Error;

/// Conditional q-quantile of Y given X <= Phi^-1(q) for a standard bivariate
/// normal with rho = 0.5 at q = 0.05, from one-dimensional quadrature (scipy).
const BVN_COVAR_05: f64 = -2.4914849830000123;

fn bivariate_normal(n: usize, rho: f64, seed: u64) -> Vec<Point> {
    let mut rng = swbi::rng::stream(seed, "stress-test-pairs", 0);
    (0..n)
        .map(|_| {
            let z1: f64 = rand::Rng::sample(&mut rng, rand_distr::StandardNormal);
            let z2: f64 = rand::Rng::sample(&mut rng, rand_distr::StandardNormal);
            [z1, rho * z1 + (1.0 - rho * rho).sqrt() * z2]
        })
        .collect()
}

#[test]
fn independence_consistency() {
    let joint = bivariate_normal(1_000_000, 0.0, 1);
    let levels = [0.01, 0.05, 0.10];
    let se = bootstrap_se(&joint, &levels, 40, 2);
    let ys: Vec<f64> = joint.iter().map(|p| p[1]).collect();
    let mut rows = Vec::new();
    for (k, &q) in levels.iter().enumerate() {
        let m = stress_measures(&joint, q).unwrap();
        let var = stats::lower_quantile(&ys, q).unwrap();
        assert!((m.covar - var).abs() < 3.0 * se[k][0], "q = {q}: {} vs {var}, se {}", m.covar, se[k][0]);
        // Binomial 4 sigma on the conditioning set; ties aside it is exactly ceil(qN).
        let n = joint.len() as f64;
        assert!((m.conditioning_size as f64 - q * n).abs() <= 4.0 * (n * q * (1.0 - q)).sqrt());
        assert!(m.coes <= m.covar);
        rows.push(m);
    }
    assert!(swbi::stress::is_monotone(&rows));
}

#[test]
fn bivariate_normal_covar_matches_quadrature() {
    let data = bivariate_normal(20_000, 0.5, 3);
    let x: Vec<f64> = data.iter().map(|p| p[0]).collect();
    let y: Vec<f64> = data.iter().map(|p| p[1]).collect();
    let opts = StressOptions { variant: Variant::Nig, draws: 1_000_000, seed: 4, bootstrap: 0 };
    let report = run_stress(&y, &x, "bvn", &[0.05], &opts).unwrap();
    let covar = report.rows[0].measures.covar;
    assert!((covar - BVN_COVAR_05).abs() < 0.05, "{covar}");
    assert!(!report.degenerate && (report.correlation - 0.5).abs() < 0.02);
}

#[test]
fn self_stress_is_degenerate_and_strongly_negative() {
    let index = GhParams::nig(2.0, 0.3, 0.1, 0.02).unwrap().sample(60, 5);
    let opts = StressOptions { variant: Variant::Nig, draws: 1_000_000, seed: 6, bootstrap: 20 };
    let report = run_stress(&index, &index, "index", &[0.01, 0.05, 0.10], &opts).unwrap();
    assert!(report.degenerate && report.monotone);
    let sd = stats::sample_sd(&index);
    for row in &report.rows {
        let m = row.measures;
        // Comonotone: conditioning on the bottom q of X is conditioning on the bottom q of Y.
        assert_eq!(m.joint_tail_size, m.conditioning_size);
        assert!(m.covar < stats::mean(&index) - 2.0 * sd, "q = {}: {}", m.level, m.covar);
        assert!(row.covar_se.is_finite() && row.covar_se > 0.0);
    }
}

#[test]
fn run_stress_preconditions() {
    let x = vec![0.1; 30];
    let opts = StressOptions { draws: 5_000, ..StressOptions::default() };
    assert!(matches!(run_stress(&x, &x, "s", &[0.1], &opts), Err(Error::TooFewObservations { .. })));
    let opts = StressOptions { draws: 100_000, ..StressOptions::default() };
    assert!(matches!(run_stress(&x, &x, "s", &[0.01], &opts), Err(Error::TooFewObservations { needed: 1_000_000, .. })));
    assert!(matches!(run_stress(&x, &x[..29], "s", &[0.1], &opts), Err(Error::Input(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn translation_and_scale_equivariance(seed in any::<u64>(), rho in -0.5f64..0.9, shift in -5.0f64..5.0, scale in 0.1f64..10.0) {
        let joint = bivariate_normal(10_000, rho, seed);
        let base = stress_measures(&joint, 0.1).unwrap();
        prop_assert!(base.coes <= base.covar);
        let moved: Vec<Point> = joint.iter().map(|p| [p[0], scale * p[1] + shift]).collect();
        let m = stress_measures(&moved, 0.1).unwrap();
        let tol = 1e-12 * (scale + shift.abs()) * 10.0;
        prop_assert!((m.covar - (scale * base.covar + shift)).abs() < tol);
        prop_assert!((m.coes - (scale * base.coes + shift)).abs() < tol);
        prop_assert!((m.coetl - (scale * base.coetl + shift)).abs() < tol);
        prop_assert_eq!(m.conditioning_size, base.conditioning_size);
    }
}
