//! Classic rule boosting with single-variable threshold propositions
//! `x_j ≥ t` / `x_j ≤ t`, under the same gradient objective and the same
//! fully-corrective weight refit as [`crate::boost`].

use std::time::Instant;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::boost::{boost_rounds, check_inputs, row, FitTrace};
use crate::error::{Error, Result};
use crate::loss::LossKind;
use crate::rules::SparseProposition;
use crate::standardize::Standardizer;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TgbConfig {
    pub max_rules: usize,
    pub max_propositions: usize,
    pub loss: LossKind,
    /// `λ` in the score `|⟨g, q⟩| / sqrt(λ + ⟨q, q⟩)`.
    pub reg_strength: f64,
    /// When false the score is the plain `|⟨g, q⟩|` and `reg_strength` is unused.
    pub normalized: bool,
    pub seed: u64,
}

impl Default for TgbConfig {
    fn default() -> Self {
        TgbConfig {
            max_rules: 10,
            max_propositions: 5,
            loss: LossKind::Squared,
            reg_strength: 1.0,
            normalized: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisScore {
    Plain,
    Normalized { reg: f64 },
}

impl AxisScore {
    #[inline]
    pub fn score(self, sum: f64, count: usize) -> f64 {
        match self {
            AxisScore::Plain => sum.abs(),
            AxisScore::Normalized { reg } => sum.abs() / (reg + count as f64).sqrt(),
        }
    }
}

impl TgbConfig {
    pub fn score(&self) -> AxisScore {
        if self.normalized {
            AxisScore::Normalized {
                reg: self.reg_strength,
            }
        } else {
            AxisScore::Plain
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    AtLeast,
    AtMost,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxisCandidate {
    pub feature: usize,
    pub direction: Direction,
    pub threshold: f64,
    pub score: f64,
}

impl AxisCandidate {
    pub fn proposition(&self) -> SparseProposition {
        match self.direction {
            Direction::AtLeast => SparseProposition::at_least(self.feature, self.threshold),
            Direction::AtMost => SparseProposition::at_most(self.feature, self.threshold),
        }
    }
}

/// Exhaustive search over features, midpoint thresholds between consecutive
/// distinct values of the active rows, and both directions.
///
/// Ties go to the lower feature, then the smaller threshold, then `≥`.
/// `None` if every feature is constant over `active`.
pub fn best_axis_proposition(
    active: &[usize],
    x: ArrayView2<'_, f64>,
    g: &[f64],
    score: AxisScore,
) -> Option<AxisCandidate> {
    let mut best: Option<AxisCandidate> = None;
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(active.len());
    for j in 0..x.ncols() {
        pairs.clear();
        pairs.extend(active.iter().map(|&i| (x[[i, j]], g[i])));
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        let mut below = 0.0;
        let mut count_below = 0;
        for k in 0..pairs.len().saturating_sub(1) {
            below += pairs[k].1;
            count_below += 1;
            let (lo, hi) = (pairs[k].0, pairs[k + 1].0);
            if lo == hi {
                continue;
            }
            let mid = lo + 0.5 * (hi - lo);
            // adjacent floats: keep each cover exact
            let (t_ge, t_le) = if mid > lo && mid < hi {
                (mid, mid)
            } else {
                (hi, lo)
            };
            let ge = score.score(total - below, active.len() - count_below);
            let le = score.score(below, count_below);
            for (direction, t, s) in [
                (Direction::AtLeast, t_ge, ge),
                (Direction::AtMost, t_le, le),
            ] {
                if best.as_ref().is_none_or(|b| s > b.score) {
                    best = Some(AxisCandidate {
                        feature: j,
                        direction,
                        threshold: t,
                        score: s,
                    });
                }
            }
        }
    }
    // report the winner's score by direct summation over its cover
    best.map(|mut b| {
        let p = b.proposition();
        let (mut sum, mut count) = (0.0, 0);
        for &i in active {
            if p.holds(row(&x, i)) {
                sum += g[i];
                count += 1;
            }
        }
        b.score = score.score(sum, count);
        b
    })
}

fn fit_axis_conjunction(
    x: ArrayView2<'_, f64>,
    g: &[f64],
    cfg: &TgbConfig,
    train: &[usize],
) -> Option<Vec<SparseProposition>> {
    let mut active = train.to_vec();
    let mut body = Vec::new();
    let mut current = 0.0;
    while body.len() < cfg.max_propositions && active.len() > 1 {
        let Some(cand) = best_axis_proposition(&active, x, g, cfg.score()) else {
            break;
        };
        if cand.score <= current + 1e-12 {
            break;
        }
        let p = cand.proposition();
        active.retain(|&i| p.holds(row(&x, i)));
        current = cand.score;
        body.push(p);
    }
    (!body.is_empty()).then_some(body)
}

/// Boosts up to `cfg.max_rules` axis-parallel rules on all rows.
pub fn fit_tgb(x_raw: ArrayView2<'_, f64>, y: &[f64], cfg: &TgbConfig) -> Result<FitTrace> {
    let started = Instant::now();
    if cfg.max_rules == 0 || cfg.max_propositions == 0 {
        return Err(Error::InvalidArgument(
            "max_rules and max_propositions must be at least 1".into(),
        ));
    }
    if !(cfg.reg_strength >= 0.0) {
        return Err(Error::InvalidArgument(
            "reg_strength must be nonnegative".into(),
        ));
    }
    check_inputs(x_raw, y, cfg.loss)?;
    let standardizer = Standardizer::fit(x_raw);
    let x = standardizer.transform(x_raw)?;
    let x = x.view();
    let train: Vec<usize> = (0..x.nrows()).collect();
    let stages = boost_rounds(x, y, cfg.loss, standardizer, cfg.max_rules, &train, |g| {
        Ok(fit_axis_conjunction(x, g, cfg, &train))
    })?;
    Ok(FitTrace {
        stages,
        validation_rows: Vec::new(),
        wall_time_seconds: started.elapsed().as_secs_f64(),
    })
}
