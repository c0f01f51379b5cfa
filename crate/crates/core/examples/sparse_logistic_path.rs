//! Weighted L1 logistic regression: the λ at which each sparsity level is
//! first reached, and the resulting half-spaces.
//!
//! cargo run --example sparse_logistic_path

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use lltboost::sparse_logreg::{SparsityPath, WeightedBinaryProblem};

fn main() -> lltboost::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (n, d) = (300, 5);
    let x = Array2::from_shape_fn((n, d), |_| rng.sample::<f64, _>(StandardNormal));
    // label depends on three features with decreasing strength
    let labels: Vec<bool> = x
        .rows()
        .into_iter()
        .map(|r| {
            2.0 * r[0] - 1.0 * r[2] + 0.5 * r[4] + 0.3 * rng.sample::<f64, _>(StandardNormal) >= 0.0
        })
        .collect();
    let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
    let problem = WeightedBinaryProblem::new(x, labels, weights)?;

    let mut path = SparsityPath::new(&problem);
    println!("λ_max = {:.4}", path.lambda_max());
    for s in 1..=d {
        let sol = path.solution_for(s)?;
        let terms: Vec<String> = sol
            .weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w != 0.0)
            .map(|(j, w)| format!("{w:+.3}·x{}", j + 1))
            .collect();
        println!(
            "s={s}  λ={:.5}  nnz={}  {} ≥ {:.3}",
            sol.lambda,
            sol.nnz,
            terms.join(" "),
            sol.threshold()
        );
    }
    println!("{} regularised problems solved", path.evaluated().len());
    Ok(())
}
