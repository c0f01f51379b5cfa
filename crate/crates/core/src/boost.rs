//! Fully-corrective gradient boosting of conjunctions of sparse
//! linear-threshold propositions.
//!
//! Each round computes loss gradients `g` under the current ensemble and grows
//! one conjunction greedily. A proposition is chosen by turning
//! `max |⟨g, q⟩|` into two weighted binary problems (one per gradient sign)
//! whose labels are the gradient signs and whose sample weights are `|g|`.
//! These are solved by L1 logistic regression at increasing sparsity levels,
//! and a denser weight vector is only kept if it lowers the `|g|`-weighted
//! 0/1 error on a held-out validation part of the training rows.

use std::time::Instant;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::LossKind;
use crate::rules::{Rule, RuleEnsemble, SparseProposition, Task};
use crate::sparse_logreg::{
    corrective_refit, predictor, refit_on_support, summed_loss, SparsityPath, WeightedBinaryProblem,
};
use crate::standardize::Standardizer;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LltConfig {
    pub max_rules: usize,
    pub max_propositions: usize,
    /// Cap on nonzero weights per proposition; clamped to the feature count.
    pub max_nonzeros: usize,
    pub loss: LossKind,
    pub validation_fraction: f64,
    /// Minimum relative reduction of validation risk to accept one more
    /// nonzero weight.
    pub sparsity_accept_delta: f64,
    pub objective_tolerance: f64,
    pub seed: u64,
    /// Refit the weights on the selected support without the L1 penalty.
    pub refit_support: bool,
    /// Skip validation and accept every sparsity level up to this one.
    pub forced_sparsity: Option<usize>,
    /// Keep the logistic-regression direction `w` but replace `t = -b` by the
    /// threshold that exactly minimises the weighted 0/1 training error.
    pub threshold_search: bool,
}

impl Default for LltConfig {
    fn default() -> Self {
        LltConfig {
            max_rules: 10,
            max_propositions: 5,
            max_nonzeros: 5,
            loss: LossKind::Squared,
            validation_fraction: 0.25,
            sparsity_accept_delta: 0.01,
            objective_tolerance: 1e-9,
            seed: 0,
            refit_support: false,
            forced_sparsity: None,
            threshold_search: false,
        }
    }
}

impl LltConfig {
    fn validate(&self) -> Result<()> {
        if self.max_rules == 0 || self.max_propositions == 0 || self.max_nonzeros == 0 {
            return Err(Error::InvalidArgument(
                "max_rules, max_propositions and max_nonzeros must be at least 1".into(),
            ));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::InvalidArgument(
                "validation_fraction must lie in (0, 1)".into(),
            ));
        }
        if !(self.sparsity_accept_delta >= 0.0) || !(self.objective_tolerance >= 0.0) {
            return Err(Error::InvalidArgument(
                "tolerances must be nonnegative".into(),
            ));
        }
        if self.forced_sparsity == Some(0) {
            return Err(Error::InvalidArgument(
                "forced_sparsity must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// The ensemble after `m` boosting rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub ensemble: RuleEnsemble,
    /// Mean training loss over the rows used to fit rule weights.
    pub train_risk: f64,
    pub complexity: usize,
}

/// The nested sequence `f⁽⁰⁾, f⁽¹⁾, …` produced by one boosting run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitTrace {
    pub stages: Vec<Stage>,
    /// Rows held out for sparsity decisions (empty for the baseline).
    pub validation_rows: Vec<usize>,
    pub wall_time_seconds: f64,
}

impl FitTrace {
    pub fn final_ensemble(&self) -> &RuleEnsemble {
        &self.stages.last().expect("trace has stage 0").ensemble
    }

    /// Number of rules in the last stage.
    pub fn rules_fitted(&self) -> usize {
        self.stages.len() - 1
    }

    /// Stages with the same content, ignoring wall time.
    pub fn same_fit(&self, other: &FitTrace) -> bool {
        self.stages == other.stages && self.validation_rows == other.validation_rows
    }
}

/// `|⟨g, q⟩|`.
pub fn objective(g: &[f64], q: &[bool]) -> Result<f64> {
    if g.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: g.len(),
            got: q.len(),
        });
    }
    Ok(g.iter()
        .zip(q)
        .filter(|(_, q)| **q)
        .map(|(g, _)| g)
        .sum::<f64>()
        .abs())
}

/// `|Σ_{i ∈ rows, q(xᵢ)} gᵢ|`.
pub(crate) fn cover_objective(
    x: ArrayView2<'_, f64>,
    g: &[f64],
    rows: &[usize],
    p: &SparseProposition,
) -> (f64, usize) {
    let mut sum = 0.0;
    let mut covered = 0;
    for &i in rows {
        if p.holds(row(&x, i)) {
            sum += g[i];
            covered += 1;
        }
    }
    (sum.abs(), covered)
}

#[inline]
pub(crate) fn row<'a>(x: &'a ArrayView2<'_, f64>, i: usize) -> &'a [f64] {
    x.row(i).to_slice().expect("standard layout")
}

#[derive(Debug, Clone)]
struct Candidate {
    proposition: SparseProposition,
    sign: i8,
    sparsity: usize,
    objective: f64,
}

impl Candidate {
    /// Larger objective, then fewer nonzeros, then positive sign, then lower s.
    fn beats(&self, other: &Candidate) -> bool {
        if self.objective != other.objective {
            return self.objective > other.objective;
        }
        let (a, b) = (self.proposition.nnz(), other.proposition.nnz());
        if a != b {
            return a < b;
        }
        if self.sign != other.sign {
            return self.sign > other.sign;
        }
        self.sparsity < other.sparsity
    }
}

/// `Σᵢ |gᵢ| 1{zᵢ ≠ q(xᵢ)}` with `zᵢ = 1{ς gᵢ ≥ 0}`.
pub fn weighted_zero_one_risk(
    x: ArrayView2<'_, f64>,
    g: &[f64],
    rows: &[usize],
    sign: f64,
    p: &SparseProposition,
) -> f64 {
    rows.iter()
        .filter(|&&i| (sign * g[i] >= 0.0) != p.holds(row(&x, i)))
        .map(|&i| g[i].abs())
        .sum()
}

/// Threshold `t` maximising `ς Σ_{i ∈ rows, x·w ≥ t} gᵢ` over midpoints of
/// consecutive distinct projections (proper, nonempty covers only).
pub(crate) fn best_threshold(
    x: ArrayView2<'_, f64>,
    g: &[f64],
    rows: &[usize],
    sign: f64,
    p: &SparseProposition,
) -> Option<f64> {
    let mut proj: Vec<(f64, f64)> = rows
        .iter()
        .map(|&i| (p.project(row(&x, i)), sign * g[i]))
        .collect();
    proj.sort_by(|a, b| a.0.total_cmp(&b.0));
    // suffix sums: covering everything from position k upward
    let mut suffix = 0.0;
    let mut best: Option<(f64, f64)> = None;
    for k in (1..proj.len()).rev() {
        suffix += proj[k].1;
        let (lo, hi) = (proj[k - 1].0, proj[k].0);
        if lo == hi {
            continue;
        }
        let mid = lo + 0.5 * (hi - lo);
        let t = if mid > lo { mid } else { hi };
        if best.is_none_or(|(v, _)| suffix > v) {
            best = Some((suffix, t));
        }
    }
    best.map(|(_, t)| t)
}

/// Best single proposition to add to a conjunction whose cover, restricted
/// to training rows, is `active` (and to validation rows, `validation`).
///
/// `x` is the standardised matrix over all rows; `g` is indexed by row.
pub fn fit_proposition(
    active: &[usize],
    x: ArrayView2<'_, f64>,
    g: &[f64],
    cfg: &LltConfig,
    validation: &[usize],
) -> Result<Option<SparseProposition>> {
    if active.is_empty() {
        return Err(Error::InvalidArgument("empty active set".into()));
    }
    if g.len() != x.nrows() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            got: g.len(),
        });
    }
    if active.iter().all(|&i| g[i] == 0.0) {
        return Ok(None);
    }
    let max_s = cfg.max_nonzeros.min(x.ncols());
    let features = x.select(Axis(0), active).as_standard_layout().into_owned();
    let weights: Vec<f64> = active.iter().map(|&i| g[i].abs()).collect();

    let mut best: Option<Candidate> = None;
    for sign in [1i8, -1] {
        let sf = f64::from(sign);
        let labels: Vec<bool> = active.iter().map(|&i| sf * g[i] >= 0.0).collect();
        if labels.iter().all(|z| *z == labels[0]) {
            // one-signed: covering every active row is optimal for the sign
            // whose labels are all positive, and covering none for the other
            if labels[0] {
                let t = active
                    .iter()
                    .map(|&i| x[[i, 0]])
                    .fold(f64::INFINITY, f64::min);
                let proposition = SparseProposition::at_least(0, t);
                let (objective, _) = cover_objective(x, g, active, &proposition);
                let cand = Candidate {
                    proposition,
                    sign,
                    sparsity: 1,
                    objective,
                };
                if best.as_ref().is_none_or(|b| cand.beats(b)) {
                    best = Some(cand);
                }
            }
            continue;
        }
        let problem = WeightedBinaryProblem::new(features.clone(), labels, weights.clone())?;
        let mut path = SparsityPath::new(&problem);
        let mut last: Option<(usize, f64)> = None;
        for s in 1..=max_s {
            if let Some(forced) = cfg.forced_sparsity {
                if s > forced {
                    break;
                }
            }
            let mut sol = path.solution_for(s)?;
            if sol.nnz == 0 || last.is_some_and(|(nnz, _)| sol.nnz <= nnz) {
                continue;
            }
            if cfg.refit_support {
                sol = refit_on_support(&problem, &sol);
            }
            let Some(mut proposition) = sol.to_proposition() else {
                continue;
            };
            if cfg.threshold_search {
                if let Some(t) = best_threshold(x, g, active, sf, &proposition) {
                    proposition = SparseProposition::new(proposition.terms(), t)?;
                }
            }
            let val_risk = weighted_zero_one_risk(x, g, validation, sf, &proposition);
            if cfg.forced_sparsity.is_none() {
                if let Some((_, prev)) = last {
                    let improves =
                        prev > 0.0 && (prev - val_risk) / prev > cfg.sparsity_accept_delta;
                    if !improves {
                        break;
                    }
                }
            }
            last = Some((sol.nnz, val_risk));
            let (objective, _) = cover_objective(x, g, active, &proposition);
            let cand = Candidate {
                proposition,
                sign,
                sparsity: s,
                objective,
            };
            if best.as_ref().is_none_or(|b| cand.beats(b)) {
                best = Some(cand);
            }
        }
    }
    Ok(best.and_then(|b| {
        let (_, covered) = cover_objective(x, g, active, &b.proposition);
        (b.objective > cfg.objective_tolerance && covered > 0).then_some(b.proposition)
    }))
}

/// Grows one conjunction greedily, shrinking the selectable rows after each
/// accepted proposition. `None` when not even one proposition helps.
pub fn fit_conjunction(
    x: ArrayView2<'_, f64>,
    g: &[f64],
    cfg: &LltConfig,
    train: &[usize],
    validation: &[usize],
) -> Result<Option<Vec<SparseProposition>>> {
    let mut active = train.to_vec();
    let mut val_active = validation.to_vec();
    let mut body = Vec::new();
    let mut current = 0.0;
    while body.len() < cfg.max_propositions && !active.is_empty() {
        let Some(p) = fit_proposition(&active, x, g, cfg, &val_active)? else {
            break;
        };
        let (obj, covered) = cover_objective(x, g, &active, &p);
        if covered == 0 || obj <= current + cfg.objective_tolerance {
            break;
        }
        active.retain(|&i| p.holds(row(&x, i)));
        val_active.retain(|&i| p.holds(row(&x, i)));
        current = obj;
        body.push(p);
    }
    Ok((!body.is_empty()).then_some(body))
}

pub(crate) fn task_of(loss: LossKind) -> Result<Task> {
    match loss {
        LossKind::Squared => Ok(Task::Regression),
        LossKind::Logistic => Ok(Task::Classification),
        LossKind::ZeroOne => Err(Error::UnsupportedLoss(loss)),
    }
}

pub(crate) fn check_inputs(x: ArrayView2<'_, f64>, y: &[f64], loss: LossKind) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            got: y.len(),
        });
    }
    if x.nrows() < 2 {
        return Err(Error::DatasetTooSmall(x.nrows()));
    }
    if x.ncols() == 0 {
        return Err(Error::InvalidArgument("no features".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite input value".into()));
    }
    if loss == LossKind::Logistic {
        if let Some(v) = y.iter().find(|v| **v != 0.0 && **v != 1.0) {
            return Err(Error::InvalidLabel(*v));
        }
    }
    Ok(())
}

/// Shared fully-corrective boosting loop. `grow` receives the gradient over
/// all rows and returns the next rule body.
pub(crate) fn boost_rounds<F>(
    x: ArrayView2<'_, f64>,
    y: &[f64],
    loss: LossKind,
    standardizer: Standardizer,
    max_rules: usize,
    train: &[usize],
    mut grow: F,
) -> Result<Vec<Stage>>
where
    F: FnMut(&[f64]) -> Result<Option<Vec<SparseProposition>>>,
{
    let task = task_of(loss)?;
    let n = x.nrows();
    let y_train: Vec<f64> = train.iter().map(|&i| y[i]).collect();
    let intercept = loss.init_intercept_clamped(&y_train)?;

    let mut bodies: Vec<Vec<SparseProposition>> = Vec::new();
    let mut covers: Vec<Vec<bool>> = Vec::new();
    let mut beta = vec![intercept];
    let stage0_scores = vec![intercept; train.len()];
    let mut loss_sum = summed_loss(loss, &y_train, &stage0_scores);
    let make_stage =
        |beta: &[f64], bodies: &[Vec<SparseProposition>], loss_sum: f64| -> Result<Stage> {
            let rules = bodies
                .iter()
                .zip(&beta[1..])
                .map(|(b, w)| Rule::new(b.clone(), *w))
                .collect::<Result<Vec<_>>>()?;
            let ensemble = RuleEnsemble::new(beta[0], rules, task, standardizer.clone())?;
            Ok(Stage {
                complexity: ensemble.complexity(),
                train_risk: loss_sum / train.len() as f64,
                ensemble,
            })
        };
    let mut stages = vec![make_stage(&beta, &bodies, loss_sum)?];

    let mut scores = vec![intercept; n];
    for _ in 0..max_rules {
        let g = (0..n)
            .map(|i| loss.gradient(y[i], scores[i]))
            .collect::<Result<Vec<_>>>()?;
        let Some(body) = grow(&g)? else { break };
        let cover: Vec<bool> = (0..n)
            .map(|i| body.iter().all(|p| p.holds(row(&x, i))))
            .collect();
        bodies.push(body);
        covers.push(cover);

        let m = bodies.len();
        let design = Array2::from_shape_fn((train.len(), m + 1), |(r, c)| {
            if c == 0 {
                1.0
            } else {
                f64::from(u8::from(covers[c - 1][train[r]]))
            }
        });
        let mut warm = beta.clone();
        warm.push(0.0);
        let refit = corrective_refit(design.view(), &y_train, loss, &warm)?;
        debug_assert!(refit.loss <= loss_sum);
        beta = refit.beta;
        loss_sum = refit.loss;

        let full = Array2::from_shape_fn((n, m + 1), |(i, c)| {
            if c == 0 {
                1.0
            } else {
                f64::from(u8::from(covers[c - 1][i]))
            }
        });
        scores = predictor(&full.view(), &beta);
        stages.push(make_stage(&beta, &bodies, loss_sum)?);
    }
    Ok(stages)
}

/// Carves the validation rows: a seeded `fraction` of the rows, stratified by
/// label when `stratify` is set. Returns `(train, validation)`, both sorted.
pub fn validation_split(
    y: &[f64],
    fraction: f64,
    stratify: bool,
    seed: u64,
) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let groups: Vec<Vec<usize>> = if stratify {
        vec![
            (0..y.len()).filter(|&i| y[i] == 0.0).collect(),
            (0..y.len()).filter(|&i| y[i] != 0.0).collect(),
        ]
    } else {
        vec![(0..y.len()).collect()]
    };
    let mut validation = Vec::new();
    for mut group in groups {
        group.shuffle(&mut rng);
        let take = (fraction * group.len() as f64).floor() as usize;
        validation.extend_from_slice(&group[..take]);
    }
    validation.sort_unstable();
    let mut is_val = vec![false; y.len()];
    for &i in &validation {
        is_val[i] = true;
    }
    let train = (0..y.len()).filter(|&i| !is_val[i]).collect();
    (train, validation)
}

/// Standardises `x_raw`, holds out validation rows, and boosts up to
/// `cfg.max_rules` rules.
pub fn fit(x_raw: ArrayView2<'_, f64>, y: &[f64], cfg: &LltConfig) -> Result<FitTrace> {
    let started = Instant::now();
    cfg.validate()?;
    check_inputs(x_raw, y, cfg.loss)?;
    let standardizer = Standardizer::fit(x_raw);
    let x = standardizer.transform(x_raw)?;
    let x = x.view();
    let (train, validation) = validation_split(
        y,
        cfg.validation_fraction,
        cfg.loss == LossKind::Logistic,
        cfg.seed,
    );
    if train.is_empty() {
        return Err(Error::DatasetTooSmall(0));
    }
    let stages = boost_rounds(x, y, cfg.loss, standardizer, cfg.max_rules, &train, |g| {
        fit_conjunction(x, g, cfg, &train, &validation)
    })?;
    Ok(FitTrace {
        stages,
        validation_rows: validation,
        wall_time_seconds: started.elapsed().as_secs_f64(),
    })
}
