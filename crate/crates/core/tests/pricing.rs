use proptest::prelude::*;

use swbi::econometrics::{GarchModel, Innovation};
use swbi::ghdist::gof::goodness_of_fit_with;
use swbi::ghdist::GhParams;
use swbi::numeric::norm_cdf;
use swbi::pricing::{
    black_scholes_call, price_options, simulate_riskneutral, simulate_riskneutral_multi, solve_esscher_with, EsscherProblem, OptionGrid,
};

const OMEGA: f64 = 0.04;
const RF: f64 = 0.01;

fn bs_model(innovation: Innovation) -> GarchModel {
    GarchModel::new(0.0, 0.0, OMEGA, 0.0, 0.0, innovation).unwrap().with_premium(0.05, RF)
}

#[test]
fn log_terminal_price_is_gaussian_in_the_constant_variance_limit() {
    let t = 3;
    let s = simulate_riskneutral(&bs_model(Innovation::Normal), t, 50_000, 1.0, 7).unwrap();
    let logs: Vec<f64> = s.draws.iter().map(|v| v.ln()).collect();
    let (mean, sd) = ((RF - 0.5 * OMEGA) * t as f64, (OMEGA * t as f64).sqrt());
    let gof = goodness_of_fit_with(&logs, |x| norm_cdf((x - mean) / sd)).unwrap();
    assert!(gof.ks_p_value > 0.01, "KS p = {}", gof.ks_p_value);
}

#[test]
fn price_shapes_in_strike_and_maturity() {
    let maturities = [1, 2, 3, 4, 5];
    let strikes: Vec<f64> = (0..9).map(|k| 0.8 + 0.05 * k as f64).collect();
    let paths = simulate_riskneutral_multi(&bs_model(Innovation::Normal), &maturities, 100_000, 1.0, 3).unwrap();
    let grid = OptionGrid::build(&paths, &maturities, &strikes, 1.0, RF, 0).unwrap();
    for t in maturities {
        let q: Vec<_> = grid.quotes.iter().filter(|q| q.maturity == t).collect();
        for w in q.windows(2) {
            assert!(w[1].call <= w[0].call + 2.0 * w[0].call_se.max(w[1].call_se));
            assert!(w[1].put >= w[0].put - 2.0 * w[0].put_se.max(w[1].put_se));
        }
        for w in q.windows(3) {
            let second = w[0].call - 2.0 * w[1].call + w[2].call;
            assert!(second >= -2.0 * (w[0].call_se + 2.0 * w[1].call_se + w[2].call_se), "convexity at T = {t}");
        }
    }
    for k in &strikes {
        let q: Vec<_> = grid.quotes.iter().filter(|q| q.strike == *k).collect();
        for w in q.windows(2) {
            assert!(w[1].call >= w[0].call - 2.0 * w[1].call_se, "call falls in T at K = {k}");
        }
    }
    for q in &grid.quotes {
        let bs = black_scholes_call(1.0, q.strike, q.maturity as f64, RF, OMEGA.sqrt());
        assert!((q.call - bs).abs() < 4.0 * q.call_se, "T = {} K = {}", q.maturity, q.strike);
    }
}

#[test]
fn near_gaussian_nig_matches_normal_prices() {
    // Unit-variance symmetric NIG with a large alpha is close to N(0, 1).
    let nig = GhParams::nig(400.0, 0.0, 400.0, 0.0).unwrap();
    let strikes = [0.8, 0.9, 1.0, 1.1, 1.2];
    let price = |innovation| {
        let model = GarchModel::new(0.0, 0.0, 0.002, 0.85, 0.1, innovation).unwrap().with_premium(0.05, RF);
        let s = simulate_riskneutral(&model, 5, 100_000, 1.0, 11).unwrap();
        price_options(&s.draws, &strikes, 5, 0, RF).unwrap()
    };
    for (n, g) in price(Innovation::Normal).iter().zip(price(Innovation::Gh(nig))) {
        let se = n.call_se.hypot(g.call_se);
        assert!((n.call - g.call).abs() < 3.0 * se, "K = {}: {} vs {}", n.strike, n.call, g.call);
    }
}

#[test]
fn common_paths_across_maturities() {
    let model = bs_model(Innovation::Normal);
    let multi = simulate_riskneutral_multi(&model, &[2, 4], 5_000, 1.0, 1).unwrap();
    assert_eq!(simulate_riskneutral(&model, 4, 5_000, 1.0, 1).unwrap().draws, multi[1].draws);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn esscher_residual_vanishes(h in 1e-4f64..0.2, lambda0 in -0.5f64..0.5, a in 1.0f64..5.0, b in -0.6f64..0.6, l in 0.5f64..3.0) {
        let law = GhParams::vg(l, a, b * a, 0.0).unwrap();
        let sd = law.variance().sqrt();
        let unit = law.affine(1.0 / sd, -law.mean() / sd).unwrap();
        let sol = solve_esscher_with(&Innovation::Gh(unit), &EsscherProblem { h, lambda0, riskfree: RF, convexity: true });
        if let Ok(sol) = sol {
            prop_assert!(sol.residual.abs() < 1e-12);
            prop_assert!(sol.bracket.0 < sol.theta && sol.theta < sol.bracket.1);
        }
    }

    #[test]
    fn prices_non_negative_with_parity(terminal in prop::collection::vec(0.01f64..5.0, 1..200), k in 0.0f64..3.0, t in 1usize..6) {
        let q = price_options(&terminal, &[0.0, k], t, 0, RF).unwrap();
        let disc = (-RF * t as f64).exp();
        let forward = terminal.iter().sum::<f64>() / terminal.len() as f64;
        for p in &q {
            prop_assert!(p.call >= 0.0 && p.put >= 0.0);
            prop_assert!((p.call - p.put - disc * (forward - p.strike)).abs() < 1e-12 * forward.max(1.0));
        }
        prop_assert!((q[0].call - disc * forward).abs() < 1e-12 * forward && q[0].put == 0.0);
    }
}
