//! Pointwise losses on raw scores `f(x)`, their gradients, and the optimal
//! constant model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// `(y - f)² / 2`
    Squared,
    /// Negative Bernoulli log-likelihood with `μ = sigmoid(f)`.
    Logistic,
    /// `1{step(f) ≠ y}`; evaluation only.
    ZeroOne,
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
#[inline]
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn check_binary(y: f64) -> Result<()> {
    if y == 0.0 || y == 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidLabel(y))
    }
}

impl LossKind {
    pub fn loss(self, y: f64, score: f64) -> Result<f64> {
        match self {
            LossKind::Squared => Ok(self.loss_unchecked(y, score)),
            LossKind::Logistic | LossKind::ZeroOne => {
                check_binary(y)?;
                Ok(self.loss_unchecked(y, score))
            }
        }
    }

    #[inline]
    pub(crate) fn loss_unchecked(self, y: f64, score: f64) -> f64 {
        match self {
            LossKind::Squared => 0.5 * (y - score) * (y - score),
            LossKind::Logistic => softplus(score) - y * score,
            LossKind::ZeroOne => f64::from(u8::from((score >= 0.0) != (y == 1.0))),
        }
    }

    /// `∂ℓ(y, f) / ∂f`.
    pub fn gradient(self, y: f64, score: f64) -> Result<f64> {
        match self {
            LossKind::Squared => Ok(score - y),
            LossKind::Logistic => Ok(sigmoid(score) - y),
            LossKind::ZeroOne => Err(Error::UnsupportedLoss(self)),
        }
    }

    /// `∂²ℓ(y, f) / ∂f²`.
    pub(crate) fn curvature(self, score: f64) -> f64 {
        match self {
            LossKind::Squared => 1.0,
            LossKind::Logistic => {
                let mu = sigmoid(score);
                mu * (1.0 - mu)
            }
            LossKind::ZeroOne => 0.0,
        }
    }

    /// The constant score minimising the summed loss over `y`.
    pub fn init_intercept(self, y: &[f64]) -> Result<f64> {
        if y.is_empty() {
            return Err(Error::InvalidArgument("empty target vector".into()));
        }
        match self {
            LossKind::Squared => Ok(mean(y)),
            LossKind::Logistic => {
                for v in y {
                    check_binary(*v)?;
                }
                let p = mean(y);
                if p == 0.0 || p == 1.0 {
                    return Err(Error::DegenerateLabels);
                }
                Ok((p / (1.0 - p)).ln())
            }
            LossKind::ZeroOne => Err(Error::UnsupportedLoss(self)),
        }
    }

    /// Like [`init_intercept`](Self::init_intercept), but a single-class
    /// logistic target uses `p̄` clamped to `[1/(2n), 1 - 1/(2n)]`.
    pub fn init_intercept_clamped(self, y: &[f64]) -> Result<f64> {
        match self.init_intercept(y) {
            Err(Error::DegenerateLabels) => {
                let half = 0.5 / y.len() as f64;
                let p = mean(y).clamp(half, 1.0 - half);
                Ok((p / (1.0 - p)).ln())
            }
            other => other,
        }
    }

    /// Mean loss of `scores` against `y`.
    pub fn risk(self, y: &[f64], scores: &[f64]) -> Result<f64> {
        if y.len() != scores.len() {
            return Err(Error::DimensionMismatch {
                expected: y.len(),
                got: scores.len(),
            });
        }
        if y.is_empty() {
            return Ok(0.0);
        }
        let mut total = 0.0;
        for (yi, si) in y.iter().zip(scores) {
            total += self.loss(*yi, *si)?;
        }
        Ok(total / y.len() as f64)
    }
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}
