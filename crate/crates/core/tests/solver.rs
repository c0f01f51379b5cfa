mod common;

use ndarray::Array2;
use rand::Rng;

use common::*;
use lltboost::sparse_logreg::{
    fit_for_sparsity, fit_weighted_l1, lambda_max, SparsityPath, WeightedBinaryProblem,
};

#[test]
fn two_feature_problem_matches_grid_search() {
    let mut rng = rng(21);
    let n = 50;
    let x = gaussian_matrix(&mut rng, n, 2);
    let z: Vec<bool> = x
        .rows()
        .into_iter()
        .map(|r| 0.8 * r[0] + 0.4 * r[1] + normal(&mut rng) >= 0.0)
        .collect();
    let omega = vec![1.0; n];
    let problem = WeightedBinaryProblem::new(x.clone(), z.clone(), omega.clone()).unwrap();
    let sol = fit_weighted_l1(&problem, 0.1);
    let solver = l1_logistic_objective(&x, &z, &omega, &sol.weights, sol.intercept, 0.1);
    let (grid, w1, w2, b) = grid_minimum(&x, &z, &omega, 0.1);
    assert!(solver <= grid + 1e-9, "solver {solver} grid {grid}");
    assert!(grid - solver <= 1e-3, "solver {solver} grid {grid}");
    assert!(
        (sol.weights[0] - w1).abs() < 0.05
            && (sol.weights[1] - w2).abs() < 0.05
            && (sol.intercept - b).abs() < 0.05
    );
}

#[test]
fn lambda_max_bounds_the_support() {
    let mut rng = rng(22);
    let mut nonempty = 0;
    for _ in 0..100 {
        let n = rng.random_range(20..100);
        let d = rng.random_range(1..6);
        let x = gaussian_matrix(&mut rng, n, d);
        let z: Vec<bool> = (0..n)
            .map(|i| x[[i, 0]] + normal(&mut rng) >= 0.0)
            .collect();
        if z.iter().all(|v| *v == z[0]) {
            continue;
        }
        let omega: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..3.0)).collect();
        let problem = WeightedBinaryProblem::new(x, z, omega).unwrap();
        let lmax = lambda_max(&problem);
        assert_eq!(fit_weighted_l1(&problem, 1.001 * lmax).nnz, 0);
        if fit_weighted_l1(&problem, 0.9 * lmax).nnz >= 1 {
            nonempty += 1;
        }
    }
    assert!(nonempty >= 95, "{nonempty}");
}

#[test]
fn single_nonzero_picks_the_signal_feature() {
    let mut hits = 0;
    for seed in 0..100 {
        let mut rng = rng(1000 + seed);
        let n = 80;
        let x = gaussian_matrix(&mut rng, n, 2);
        let z: Vec<bool> = (0..n)
            .map(|i| x[[i, 0]] + 0.3 * normal(&mut rng) >= 0.0)
            .collect();
        let omega: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
        let problem = WeightedBinaryProblem::new(x, z, omega).unwrap();
        let sol = fit_for_sparsity(&problem, 1).unwrap();
        if sol.nnz == 1 && sol.weights[0] != 0.0 {
            hits += 1;
        }
    }
    assert!(hits >= 95, "{hits}");
}

#[test]
fn sparsity_levels_follow_the_lambda_grid() {
    let mut rng = rng(23);
    let n = 150;
    let x = gaussian_matrix(&mut rng, n, 5);
    let z: Vec<bool> = x
        .rows()
        .into_iter()
        .map(|r| 2.0 * r[0] - r[1] + 0.5 * r[2] + 0.2 * r[3] + normal(&mut rng) >= 0.0)
        .collect();
    let problem = WeightedBinaryProblem::new(x, z, vec![1.0; n]).unwrap();
    let mut path = SparsityPath::new(&problem);
    let (lo, hi) = (path.lambda_min(), path.lambda_max());
    let ratio = (hi / lo).powf(1.0 / 399.0);
    let grid: Vec<f64> = (0..400).map(|i| lo * ratio.powi(i)).collect();
    let nnz: Vec<usize> = grid
        .iter()
        .map(|&l| fit_weighted_l1(&problem, l).nnz)
        .collect();
    let mut previous = 0;
    for s in 1..=3 {
        let sol = path.solution_for(s).unwrap();
        assert!(sol.nnz <= s && sol.nnz >= previous);
        previous = sol.nnz;
        let idx = (0..400).rev().take_while(|&i| nnz[i] <= s).last().unwrap();
        assert!(idx > 0);
        assert!(
            sol.lambda >= grid[idx - 1] && sol.lambda <= grid[idx + 1],
            "s={s}"
        );
    }
}

#[test]
fn sparsity_search_rejects_bad_levels() {
    let x =
        Array2::from_shape_vec((4, 2), vec![1.0, 0.0, -1.0, 0.5, 0.3, -0.2, -0.7, 1.0]).unwrap();
    let problem =
        WeightedBinaryProblem::new(x, vec![true, false, true, false], vec![1.0; 4]).unwrap();
    assert!(fit_for_sparsity(&problem, 0).is_err());
    assert!(fit_for_sparsity(&problem, 3).is_err());
}

#[test]
fn kkt_conditions_hold_across_the_path() {
    let mut rng = rng(24);
    for _ in 0..30 {
        let n = rng.random_range(30..120);
        let d = rng.random_range(2..7);
        let x = gaussian_matrix(&mut rng, n, d);
        let z: Vec<bool> = (0..n)
            .map(|i| x[[i, 0]] - x[[i, 1]] + normal(&mut rng) >= 0.0)
            .collect();
        let omega = mean_one((0..n).map(|_| rng.random_range(0.1..2.0)).collect());
        let problem = WeightedBinaryProblem::new(x.clone(), z.clone(), omega.clone()).unwrap();
        let lmax = lambda_max(&problem);
        for f in [0.5, 0.1, 0.01] {
            let sol = fit_weighted_l1(&problem, f * lmax);
            assert!(problem.kkt_residual(&sol.weights, sol.intercept, f * lmax) <= 1e-4);
            let direct =
                l1_logistic_objective(&x, &z, &omega, &sol.weights, sol.intercept, f * lmax);
            assert!((direct - sol.objective_value).abs() <= 1e-9 * direct.max(1.0));
        }
    }
}
