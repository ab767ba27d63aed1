//! Exact values computed outside this crate (rational arithmetic, Shapley
//! by enumerating all arrival orders) and frozen here.

use statcost_core::estimators::{exact_dd_shapley_all, exact_dd_shapley};
use statcost_core::oracles::{
    closed_form_profile, exact_expected_cost, exact_expected_marginal, exact_shapley, exact_shapley_sizes,
};
use statcost_core::{Game, SetDistribution};

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * (1.0 + b.abs())
}

fn assert_values(got: &[f64], want: &[f64]) {
    assert_eq!(got.len(), want.len());
    for (i, (g, w)) in got.iter().zip(want).enumerate() {
        assert!(close(*g, *w), "player {i}: got {g}, want {w}");
    }
}

fn coverage() -> Game {
    Game::coverage(&[vec![0, 1], vec![1, 2], vec![2, 3, 4], vec![0, 4]], 5).unwrap()
}

#[test]
fn coverage_game_shapley() {
    assert_values(&exact_shapley(&coverage()).unwrap(), &[1.0, 1.0, 2.0, 1.0]);
}

#[test]
fn table_game_shapley() {
    let costs = [
        0.0, 61.0, 24.0, 94.0, 75.0, 39.0, 26.0, 93.0, 53.0, 97.0, 92.0, 98.0, 34.0, 69.0, 32.0, 82.0,
    ];
    let g = Game::table(4, costs.to_vec()).unwrap();
    let want = [173.0 / 4.0, 187.0 / 12.0, 49.0 / 12.0, 229.0 / 12.0];
    assert_values(&exact_shapley(&g).unwrap(), &want);
    for (i, w) in want.iter().enumerate() {
        assert!(close(exact_shapley_sizes(&g, i).unwrap(), *w));
    }
}

#[test]
fn curvature_pair_shapley() {
    let first = Game::curvature_first(8, 0.5, 0.25).unwrap();
    assert_values(&exact_shapley(&first).unwrap(), &[11.0 / 16.0; 8]);
    let second = Game::curvature_second(8, 0.5, 0.25).unwrap();
    let mut want = vec![467.0 / 672.0; 8];
    want[0] = 15.0 / 32.0;
    assert_values(&exact_shapley(&second).unwrap(), &want);
    // The analytic profiles must agree with the same numbers.
    for (g, w) in [(&first, 11.0 / 16.0), (&second, 15.0 / 32.0)] {
        let profile = closed_form_profile(g, 0).expect("closed form exists");
        assert!(close(profile.shapley(), w));
    }
    let other = closed_form_profile(&second, 3).unwrap();
    assert!(close(other.shapley(), 467.0 / 672.0));
}

#[test]
fn partition_hard_shapley() {
    let g = Game::partition_hard(8, 0.5, 1).unwrap();
    assert_values(&exact_shapley(&g).unwrap(), &[1.0, 1.0, 1.0, 1.0, 0.75, 0.75, 0.75, 0.75]);
}

#[test]
fn data_dependent_shapley_under_a_product_law() {
    let g = Game::table(3, vec![0.0, 4.0, 7.0, 9.0, 2.0, 5.0, 8.0, 12.0]).unwrap();
    let d = SetDistribution::product(vec![0.3, 0.5, 0.6]).unwrap();
    let want = [1.095, 2.45, 1.845];
    assert_values(&exact_dd_shapley_all(&g, &d).unwrap(), &want);
    assert!(close(exact_dd_shapley(&g, &d, 1).unwrap(), 2.45));
    assert!(close(exact_expected_cost(&g, &d).unwrap(), 5.39));
}

#[test]
fn expected_marginal_under_a_product_law() {
    let d = SetDistribution::product(vec![0.25, 0.5, 0.75, 1.0 / 3.0]).unwrap();
    assert!(close(exact_expected_marginal(&coverage(), &d, 0).unwrap(), 7.0 / 6.0));
}
