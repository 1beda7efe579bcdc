use proptest::prelude::*;

use swbi::index::{build_index, build_index_from_returns, pca, IndexOptions};
use swbi::panel::{to_log_returns, FactorPanel, ReturnPanel};

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("f{i}")).collect()
}

fn panel_from_levels(levels: Vec<Vec<f64>>, reversed: Vec<bool>) -> FactorPanel {
    let years = (1986..1986 + levels[0].len() as i32).collect();
    FactorPanel::new(names(levels.len()), years, levels, reversed).unwrap()
}

fn return_panel(returns: Vec<Vec<f64>>) -> ReturnPanel {
    let n = returns.len();
    let years = (2000..2000 + returns[0].len() as i32).collect();
    ReturnPanel::new(names(n), years, returns, vec![false; n]).unwrap()
}

/// Factor-major returns with a zero base year and `t` further years.
fn returns_strategy(max_factors: usize, t: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-0.5f64..0.5, t), 2..=max_factors).prop_map(|rows| {
        rows.into_iter()
            .map(|r| {
                let mut v = vec![0.0];
                v.extend(r);
                v
            })
            .collect()
    })
}

fn levels_strategy() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<bool>)> {
    (1usize..5, 2usize..12).prop_flat_map(|(n, t)| {
        (prop::collection::vec(prop::collection::vec(0.01f64..1e4, t), n), prop::collection::vec(any::<bool>(), n))
    })
}

#[test]
fn thirteen_factor_panel_shape() {
    let levels: Vec<Vec<f64>> = (0..13).map(|i| (0..31).map(|t| 10.0 + i as f64 + (t as f64 * 0.3).sin()).collect()).collect();
    let r = to_log_returns(&panel_from_levels(levels, vec![false; 13])).unwrap();
    assert_eq!((r.n_factors(), r.n_years()), (13, 31));
    assert_eq!(r.years.first(), Some(&1986));
    assert_eq!(r.years.last(), Some(&2016));
}

#[test]
fn iid_factors_split_variance_evenly() {
    let n = 5;
    let t = 100_000;
    let mut rng = swbi::rng::stream(11, "pca-iid", 0);
    let returns: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let mut v = vec![0.0];
            v.extend((0..t).map(|_| rand::Rng::sample::<f64, _>(&mut rng, rand_distr::StandardNormal)));
            v
        })
        .collect();
    let s = pca(&return_panel(returns)).unwrap();
    for p in &s.proportions {
        assert!((p - 0.2).abs() < 0.02, "{p}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn levels_round_trip((levels, reversed) in levels_strategy()) {
        let p = panel_from_levels(levels.clone(), reversed);
        let r = to_log_returns(&p).unwrap();
        let base: Vec<f64> = levels.iter().map(|row| row[0]).collect();
        for (got, want) in r.to_levels(&base).iter().zip(&levels) {
            for (g, w) in got.iter().zip(want) {
                prop_assert!((g / w - 1.0).abs() < 1e-12);
            }
        }
        prop_assert!(r.returns.iter().all(|row| row[0] == 0.0));
    }

    #[test]
    fn reversal_is_an_involution((levels, reversed) in levels_strategy(), pick in any::<prop::sample::Index>()) {
        let r = to_log_returns(&panel_from_levels(levels, reversed)).unwrap();
        let i = pick.index(r.n_factors());
        prop_assert_eq!(r.toggle_reversal(i).toggle_reversal(i), r);
    }

    #[test]
    fn index_invariants(returns in returns_strategy(6, 12)) {
        let p = return_panel(returns);
        let idx = build_index(&p).unwrap();
        prop_assert_eq!(idx.len(), p.n_years());
        let n = idx.factor_means.len() as f64;
        prop_assert!((idx.m - idx.factor_means.iter().sum::<f64>() / n).abs() < 1e-15);
        prop_assert!((idx.s - idx.factor_scales.iter().sum::<f64>() / n).abs() < 1e-15);
        for (v, r) in idx.values.iter().zip(&idx.standardized) {
            prop_assert!((v - (idx.m + idx.s * r)).abs() < 1e-12);
        }
    }

    #[test]
    fn shift_and_scale_act_only_through_m_and_s(returns in returns_strategy(5, 10), shift in -1.0f64..1.0, scale in 0.1f64..10.0) {
        let base = build_index_from_returns(&names(returns.len()), &(0..11).collect::<Vec<_>>(), &returns, IndexOptions::default()).unwrap();
        let mut moved = returns.clone();
        moved[0].iter_mut().for_each(|v| *v = *v * scale + shift);
        let other = build_index_from_returns(&names(moved.len()), &(0..11).collect::<Vec<_>>(), &moved, IndexOptions::default()).unwrap();
        for (a, b) in base.standardized.iter().zip(&other.standardized) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        let n = returns.len() as f64;
        let m0 = base.factor_means[0];
        let s0 = base.factor_scales[0];
        prop_assert!((other.m - (base.m + (m0 * scale + shift - m0) / n)).abs() < 1e-12);
        prop_assert!((other.s - (base.s + (s0 * scale - s0) / n)).abs() < 1e-12);
    }

    #[test]
    fn factor_order_is_irrelevant(returns in returns_strategy(6, 10), seed in any::<u64>()) {
        let base = build_index(&return_panel(returns.clone())).unwrap();
        let mut order: Vec<usize> = (0..returns.len()).collect();
        let mut rng = swbi::rng::stream(seed, "perm", 0);
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
        let permuted: Vec<Vec<f64>> = order.iter().map(|&i| returns[i].clone()).collect();
        let other = build_index(&return_panel(permuted)).unwrap();
        for (a, b) in base.values.iter().zip(&other.values) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn pca_proportions_and_reconstruction(returns in returns_strategy(6, 15)) {
        let p = return_panel(returns.clone());
        let s = pca(&p).unwrap();
        prop_assert!((s.proportions.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        prop_assert!(s.eigenvalues.windows(2).all(|w| w[0] >= w[1]) && s.eigenvalues.iter().all(|e| *e >= 0.0));
        let cov = swbi::numeric::stats::covariance_matrix(&returns);
        let n = returns.len();
        for i in 0..n {
            for j in 0..n {
                let corr = cov[(i, j)] / (cov[(i, i)] * cov[(j, j)]).sqrt();
                let rebuilt: f64 = (0..n).map(|k| s.eigenvalues[k] * s.loadings[k][i] * s.loadings[k][j]).sum();
                prop_assert!((corr - rebuilt).abs() < 1e-8);
            }
        }
    }
}
