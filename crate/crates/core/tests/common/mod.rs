//! Reference computations shared by the integration tests. Everything here
//! is written from the definitions, independently of the library code.
#![allow(dead_code)]

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, d), |_| rng.sample::<f64, _>(StandardNormal))
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// `log(1 + e^s)` without overflow.
pub fn softplus(s: f64) -> f64 {
    if s > 0.0 {
        s + (-s).exp().ln_1p()
    } else {
        s.exp().ln_1p()
    }
}

/// `Σ ωᵢ (log(1 + e^ηᵢ) − zᵢ ηᵢ) + λ‖w‖₁` with `ηᵢ = xᵢ·w + b`.
pub fn l1_logistic_objective(
    x: &Array2<f64>,
    z: &[bool],
    omega: &[f64],
    w: &[f64],
    b: f64,
    lambda: f64,
) -> f64 {
    let mut total = 0.0;
    for (i, row) in x.rows().into_iter().enumerate() {
        let eta: f64 = b + row.iter().zip(w).map(|(a, c)| a * c).sum::<f64>();
        total += omega[i] * (softplus(eta) - if z[i] { eta } else { 0.0 });
    }
    total + lambda * w.iter().map(|v| v.abs()).sum::<f64>()
}

/// Weights rescaled to mean one.
pub fn mean_one(mut w: Vec<f64>) -> Vec<f64> {
    let m = w.iter().sum::<f64>() / w.len() as f64;
    w.iter_mut().for_each(|v| *v /= m);
    w
}

/// Minimum of the two-feature objective over the cube `[−3, 3]³`: a
/// 0.1-step scan of the whole cube, then a 0.01-step scan of a ±0.3 box
/// around the best coarse point. Returns `(value, w₁, w₂, b)`.
pub fn grid_minimum(
    x: &Array2<f64>,
    z: &[bool],
    omega: &[f64],
    lambda: f64,
) -> (f64, f64, f64, f64) {
    let scan = |centre: [f64; 3], half: i32, step: f64| {
        let mut best = (f64::INFINITY, 0.0, 0.0, 0.0);
        for a in -half..=half {
            for c in -half..=half {
                let w1 = centre[0] + f64::from(a) * step;
                let w2 = centre[1] + f64::from(c) * step;
                if w1.abs() > 3.0 + 1e-9 || w2.abs() > 3.0 + 1e-9 {
                    continue;
                }
                for e in -half..=half {
                    let b = centre[2] + f64::from(e) * step;
                    if b.abs() > 3.0 + 1e-9 {
                        continue;
                    }
                    let v = l1_logistic_objective(x, z, omega, &[w1, w2], b, lambda);
                    if v < best.0 {
                        best = (v, w1, w2, b);
                    }
                }
            }
        }
        best
    };
    let coarse = scan([0.0, 0.0, 0.0], 30, 0.1);
    scan([coarse.1, coarse.2, coarse.3], 30, 0.01)
}

/// Gaussian elimination with partial pivoting.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for k in col..n {
                a[r][k] -= f * a[col][k];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// `argmin_β ½‖y − Dβ‖² + ε‖β₁..‖²` via the normal equations.
pub fn ridge_least_squares(design: &Array2<f64>, y: &[f64], eps: f64) -> Vec<f64> {
    let p = design.ncols();
    let mut a = vec![vec![0.0; p]; p];
    let mut rhs = vec![0.0; p];
    for (i, row) in design.rows().into_iter().enumerate() {
        for r in 0..p {
            rhs[r] += row[r] * y[i];
            for c in 0..p {
                a[r][c] += row[r] * row[c];
            }
        }
    }
    for (r, row) in a.iter_mut().enumerate().skip(1) {
        row[r] += 2.0 * eps;
    }
    solve_dense(a, rhs)
}

/// Exhaustive single-feature threshold search. Candidates are visited by
/// feature, then increasing threshold, then `≥` before `≤`; a later
/// candidate replaces the incumbent only with a strictly larger score.
/// Returns `(score, cover)` where cover is indexed like `active`.
pub fn brute_force_axis(
    active: &[usize],
    x: &Array2<f64>,
    g: &[f64],
    reg: Option<f64>,
) -> Option<(f64, Vec<bool>)> {
    let score = |cover: &[bool]| {
        let mut sum = 0.0;
        let mut count = 0usize;
        for (k, &i) in active.iter().enumerate() {
            if cover[k] {
                sum += g[i];
                count += 1;
            }
        }
        match reg {
            None => sum.abs(),
            Some(l) => sum.abs() / (l + count as f64).sqrt(),
        }
    };
    let mut best: Option<(f64, Vec<bool>)> = None;
    for j in 0..x.ncols() {
        let mut values: Vec<f64> = active.iter().map(|&i| x[[i, j]]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for pair in values.windows(2) {
            let cut = (pair[0] + pair[1]) / 2.0;
            let above: Vec<bool> = active.iter().map(|&i| x[[i, j]] > cut).collect();
            let below: Vec<bool> = above.iter().map(|a| !a).collect();
            for cover in [above, below] {
                let s = score(&cover);
                if best.as_ref().is_none_or(|(b, _)| s > *b) {
                    best = Some((s, cover));
                }
            }
        }
    }
    best
}

pub fn is_nonincreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] <= w[0])
}
