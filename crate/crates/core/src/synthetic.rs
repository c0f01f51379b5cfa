//! Seeded synthetic datasets.

use std::str::FromStr;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::Error;
use crate::rules::Task;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SyntheticKind {
    /// `y = 1{x₁ + x₂ ≥ 0}`, Gaussian features.
    ObliqueHalfspace,
    /// `y = 1` inside a 45°-rotated rectangle, uniform features.
    RotatedBox,
    /// Regression `y = Σ_{j<3} 1{x_j ≥ 0}` plus Gaussian noise.
    AxisStaircase,
}

impl FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "oblique" | "oblique-halfspace" => Ok(SyntheticKind::ObliqueHalfspace),
            "rotated-box" | "box" => Ok(SyntheticKind::RotatedBox),
            "staircase" | "axis-staircase" => Ok(SyntheticKind::AxisStaircase),
            other => Err(Error::InvalidArgument(format!(
                "unknown synthetic kind {other:?}"
            ))),
        }
    }
}

/// `noise` is the label-flip probability for classification kinds and the
/// Gaussian noise standard deviation for the staircase.
pub fn generate(kind: SyntheticKind, n: usize, d: usize, noise: f64, seed: u64) -> Dataset {
    match kind {
        SyntheticKind::ObliqueHalfspace => oblique_halfspace(n, d, noise, seed),
        SyntheticKind::RotatedBox => rotated_box(n, d, noise, seed),
        SyntheticKind::AxisStaircase => axis_staircase(n, d, noise, seed),
    }
}

fn flip(rng: &mut ChaCha8Rng, label: bool, noise: f64) -> f64 {
    let flipped = if rng.random::<f64>() < noise {
        !label
    } else {
        label
    };
    f64::from(u8::from(flipped))
}

pub fn oblique_halfspace(n: usize, d: usize, noise: f64, seed: u64) -> Dataset {
    assert!(d >= 2, "oblique half-space needs two features");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Array2::from_shape_fn((n, d), |_| rng.sample::<f64, _>(StandardNormal));
    let y = (0..n)
        .map(|i| flip(&mut rng, x[[i, 0]] + x[[i, 1]] >= 0.0, noise))
        .collect();
    Dataset::from_parts("oblique-halfspace", x, y, Task::Classification).expect("binary labels")
}

pub fn rotated_box(n: usize, d: usize, noise: f64, seed: u64) -> Dataset {
    assert!(d >= 2, "rotated box needs two features");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Array2::from_shape_fn((n, d), |_| rng.random_range(-2.0..2.0));
    let y = (0..n)
        .map(|i| {
            let u = (x[[i, 0]] + x[[i, 1]]) / std::f64::consts::SQRT_2;
            let v = (x[[i, 0]] - x[[i, 1]]) / std::f64::consts::SQRT_2;
            flip(&mut rng, u.abs() <= 1.0 && v.abs() <= 0.5, noise)
        })
        .collect();
    Dataset::from_parts("rotated-box", x, y, Task::Classification).expect("binary labels")
}

pub fn axis_staircase(n: usize, d: usize, noise: f64, seed: u64) -> Dataset {
    assert!(d >= 1, "staircase needs a feature");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Array2::from_shape_fn((n, d), |_| rng.random_range(-1.0..1.0));
    let y = (0..n)
        .map(|i| {
            let steps = (0..d.min(3)).filter(|&j| x[[i, j]] >= 0.0).count() as f64;
            steps + noise * rng.sample::<f64, _>(StandardNormal)
        })
        .collect();
    Dataset::from_parts("axis-staircase", x, y, Task::Regression).expect("regression")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_labels_follow_rule() {
        let d = oblique_halfspace(200, 4, 0.0, 3);
        for i in 0..200 {
            assert_eq!(d.y[i] == 1.0, d.x[[i, 0]] + d.x[[i, 1]] >= 0.0);
        }
        let b = rotated_box(300, 2, 0.0, 3);
        let frac = b.y.iter().sum::<f64>() / 300.0;
        assert!(frac > 0.05 && frac < 0.3, "{frac}");
    }

    #[test]
    fn noise_rate_is_roughly_honoured() {
        let clean = oblique_halfspace(5000, 2, 0.0, 9);
        let noisy = oblique_halfspace(5000, 2, 0.05, 9);
        let flips = (0..5000)
            .filter(|&i| (noisy.y[i] == 1.0) != (noisy.x[[i, 0]] + noisy.x[[i, 1]] >= 0.0))
            .count();
        assert!((150..350).contains(&flips), "{flips}");
        assert_eq!(clean.n(), 5000);
    }

    #[test]
    fn seeded_and_parsable() {
        assert_eq!(axis_staircase(50, 3, 0.1, 1), axis_staircase(50, 3, 0.1, 1));
        assert_eq!(
            "oblique".parse::<SyntheticKind>().unwrap(),
            SyntheticKind::ObliqueHalfspace
        );
        assert!("spiral".parse::<SyntheticKind>().is_err());
    }
}
