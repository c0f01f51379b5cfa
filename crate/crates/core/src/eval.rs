//! Bootstrap / out-of-bag benchmarking of rule learners by risk and
//! complexity.
//!
//! Each repetition trains on `min(n, 500)` rows drawn with replacement and
//! tests on the rows never drawn. Every boosting stage `m = 1..r` of a fit
//! becomes one point of a risk-vs-complexity curve. Curves are summarised by
//!
//! * the minimum complexity reaching a risk target `R_T` (the mean test risk
//!   of the baseline), as a median over repetitions with the 4th/7th order
//!   statistics as interval, and
//! * the risk of the most complex ensemble within a complexity target `C_T`
//!   (the baseline's median minimum complexity), with the 3rd/8th order
//!   statistics.
//!
//! A repetition that never meets a target contributes `inf`.

use std::cmp::Ordering;
use std::fmt;
use std::path::Path;

use ndarray::ArrayView2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use crate::boost::{self, FitTrace, LltConfig};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::loss::LossKind;
use crate::rules::Task;
use crate::standardize::Standardizer;
use crate::tgb::{self, TgbConfig};

/// A real number or `∞`; `∞` is greater than every finite value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedValue {
    Finite(f64),
    Inf,
}

impl ExtendedValue {
    pub fn is_inf(self) -> bool {
        matches!(self, ExtendedValue::Inf)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedValue::Finite(v) => Some(v),
            ExtendedValue::Inf => None,
        }
    }

    fn midpoint(a: Self, b: Self) -> Self {
        match (a, b) {
            (ExtendedValue::Finite(a), ExtendedValue::Finite(b)) => {
                ExtendedValue::Finite(0.5 * (a + b))
            }
            _ => ExtendedValue::Inf,
        }
    }
}

impl Eq for ExtendedValue {}

impl Ord for ExtendedValue {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtendedValue::Finite(a), ExtendedValue::Finite(b)) => a.total_cmp(b),
            (ExtendedValue::Finite(_), ExtendedValue::Inf) => Ordering::Less,
            (ExtendedValue::Inf, ExtendedValue::Finite(_)) => Ordering::Greater,
            (ExtendedValue::Inf, ExtendedValue::Inf) => Ordering::Equal,
        }
    }
}

impl PartialOrd for ExtendedValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ExtendedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedValue::Finite(v) => write!(f, "{v}"),
            ExtendedValue::Inf => f.write_str("inf"),
        }
    }
}

impl Serialize for ExtendedValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtendedValue::Finite(v) => s.serialize_f64(*v),
            ExtendedValue::Inf => s.serialize_str("inf"),
        }
    }
}

/// Which risk a curve point is scored by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Mean training loss on the test rows (squared/2 or logistic).
    Risk,
    /// Mean 0/1 loss (classification only).
    ZeroOne,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Risk => "risk",
            Metric::ZeroOne => "zero_one",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub rules: usize,
    pub complexity: usize,
    pub train_risk: f64,
    pub test_risk: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_zero_one: Option<f64>,
}

impl CurvePoint {
    pub fn metric(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::Risk => Some(self.test_risk),
            Metric::ZeroOne => self.test_zero_one,
        }
    }
}

/// Risk/complexity points of one fit (one method, hyperparameter and
/// repetition). Early-stopped stages are simply absent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodCurve {
    pub method: String,
    pub hyper: String,
    pub repetition: usize,
    pub points: Vec<CurvePoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip)]
    pub wall_time_seconds: f64,
}

impl MethodCurve {
    /// Curve from `(complexity, test_risk)` pairs; handy for tests and examples.
    pub fn from_pairs(pairs: &[(usize, f64)]) -> Self {
        MethodCurve {
            method: String::new(),
            hyper: String::new(),
            repetition: 0,
            points: pairs
                .iter()
                .enumerate()
                .map(|(k, (c, r))| CurvePoint {
                    rules: k + 1,
                    complexity: *c,
                    train_risk: *r,
                    test_risk: *r,
                    test_zero_one: None,
                })
                .collect(),
            error: None,
            wall_time_seconds: 0.0,
        }
    }
}

/// Smallest complexity whose test risk is at most `target`.
pub fn min_complexity_to_risk_target(
    curve: &MethodCurve,
    metric: Metric,
    target: f64,
) -> ExtendedValue {
    curve
        .points
        .iter()
        .filter(|p| p.metric(metric).is_some_and(|r| r <= target))
        .map(|p| p.complexity)
        .min()
        .map_or(ExtendedValue::Inf, |c| ExtendedValue::Finite(c as f64))
}

/// Test risk of the most complex point with complexity at most `target`
/// (lowest risk among equally complex points).
pub fn risk_at_complexity_target(
    curve: &MethodCurve,
    metric: Metric,
    target: f64,
) -> ExtendedValue {
    curve
        .points
        .iter()
        .filter(|p| p.complexity as f64 <= target)
        .filter_map(|p| p.metric(metric).map(|r| (p.complexity, r)))
        .max_by(|a, b| a.0.cmp(&b.0).then(b.1.total_cmp(&a.1)))
        .map_or(ExtendedValue::Inf, |(_, r)| ExtendedValue::Finite(r))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiKind {
    /// 4th and 7th order statistics of 10.
    Ranks4_7,
    /// 3rd and 8th order statistics of 10.
    Ranks3_8,
    /// Sample minimum and maximum (used when there are not exactly 10 values).
    Range,
}

impl CiKind {
    fn ranks(self) -> Option<(usize, usize)> {
        match self {
            CiKind::Ranks4_7 => Some((4, 7)),
            CiKind::Ranks3_8 => Some((3, 8)),
            CiKind::Range => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AggregateRow {
    pub median: ExtendedValue,
    pub ci_low: ExtendedValue,
    pub ci_high: ExtendedValue,
    pub ci_kind: CiKind,
    pub n_reps: usize,
}

/// Median as the midpoint of the two middle order statistics (`inf` if
/// either is `inf`).
pub fn sample_median(values: &[ExtendedValue]) -> Option<ExtendedValue> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort();
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        ExtendedValue::midpoint(v[n / 2 - 1], v[n / 2])
    })
}

/// Median of exactly ten values with a rank-based interval.
pub fn median_with_ci(values: &[ExtendedValue], kind: CiKind) -> Result<AggregateRow> {
    let Some((lo, hi)) = kind.ranks() else {
        return Err(Error::InvalidArgument(
            "median_with_ci needs a rank interval".into(),
        ));
    };
    if values.len() != 10 {
        return Err(Error::InvalidArgument(format!(
            "rank intervals are defined for 10 repetitions, got {}",
            values.len()
        )));
    }
    let mut v = values.to_vec();
    v.sort();
    Ok(AggregateRow {
        median: ExtendedValue::midpoint(v[4], v[5]),
        ci_low: v[lo - 1],
        ci_high: v[hi - 1],
        ci_kind: kind,
        n_reps: 10,
    })
}

/// [`median_with_ci`] for ten values; otherwise median with the sample range.
pub fn aggregate(values: &[ExtendedValue], kind: CiKind) -> Option<AggregateRow> {
    if values.len() == 10 && kind != CiKind::Range {
        return median_with_ci(values, kind).ok();
    }
    let median = sample_median(values)?;
    Some(AggregateRow {
        median,
        ci_low: *values.iter().min()?,
        ci_high: *values.iter().max()?,
        ci_kind: CiKind::Range,
        n_reps: values.len(),
    })
}

/// Probability that the interval between order statistics `lo < hi` of `n`
/// iid continuous draws contains the population median:
/// `Σ_{k=lo}^{hi-1} C(n, k) / 2ⁿ`.
///
/// For `n = 10` this is 672/1024 for ranks (4, 7) and 912/1024 for (3, 8).
pub fn order_statistic_coverage(n: usize, lo: usize, hi: usize) -> f64 {
    assert!(lo >= 1 && lo < hi && hi <= n);
    let mut binom = 1.0f64;
    let mut total = 0.0;
    for k in 0..hi {
        if k >= lo {
            total += binom;
        }
        binom = binom * (n - k) as f64 / (k + 1) as f64;
    }
    total / 2f64.powi(n as i32)
}

/// Training indices (with repetition) and out-of-bag test indices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapSplit {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// Number of times the draw was repeated because the out-of-bag set was empty.
    pub redraws: u32,
}

pub const BOOTSTRAP_CAP: usize = 500;

pub fn bootstrap_split(n: usize, seed: u64) -> Result<BootstrapSplit> {
    bootstrap_split_capped(n, BOOTSTRAP_CAP, seed)
}

/// `min(n, cap)` draws with replacement; the rest is the test set.
pub fn bootstrap_split_capped(n: usize, cap: usize, seed: u64) -> Result<BootstrapSplit> {
    if n < 2 {
        return Err(Error::DatasetTooSmall(n));
    }
    let size = n.min(cap);
    for redraws in 0..64u32 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(u64::from(redraws)));
        let train: Vec<usize> = (0..size).map(|_| rng.random_range(0..n)).collect();
        let mut drawn = vec![false; n];
        for &i in &train {
            drawn[i] = true;
        }
        let test: Vec<usize> = (0..n).filter(|&i| !drawn[i]).collect();
        if !test.is_empty() {
            return Ok(BootstrapSplit {
                train,
                test,
                redraws,
            });
        }
    }
    Err(Error::Fit(
        "bootstrap produced no out-of-bag rows in 64 draws".into(),
    ))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-task seed: `h ← splitmix64(h ⊕ splitmix64(part))` over `parts`,
/// starting from the master seed.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(master), |h, p| splitmix64(h ^ splitmix64(*p)))
}

/// Mean of `metric` over all points of all curves, `None` if there are none.
fn pooled_mean(curves: &[&MethodCurve], metric: Metric) -> Option<f64> {
    let values: Vec<f64> = curves
        .iter()
        .flat_map(|c| c.points.iter().filter_map(|p| p.metric(metric)))
        .collect();
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Oracle choice: the hyperparameter with the lowest pooled mean test metric
/// (first in grid order on ties). Returns the index into `groups`.
fn oracle_hyper(groups: &[(String, Vec<&MethodCurve>)], metric: Metric) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, (_, curves)) in groups.iter().enumerate() {
        if let Some(m) = pooled_mean(curves, metric) {
            if best.is_none_or(|(_, b)| m < b) {
                best = Some((k, m));
            }
        }
    }
    best.map(|(k, _)| k)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Targets {
    pub metric: Metric,
    /// Baseline hyperparameter chosen by the oracle rule.
    pub selected_hyper: String,
    /// Pooled mean test metric per baseline hyperparameter.
    pub mean_by_hyper: Vec<(String, Option<f64>)>,
    /// Pooled mean over every hyperparameter (before oracle selection).
    pub mean_all_hypers: Option<f64>,
    pub risk_target: f64,
    pub complexity_target: ExtendedValue,
}

/// Groups curves by hyperparameter, keeping first-seen order.
fn group_by_hyper<'a>(
    curves: impl IntoIterator<Item = &'a MethodCurve>,
) -> Vec<(String, Vec<&'a MethodCurve>)> {
    let mut groups: Vec<(String, Vec<&MethodCurve>)> = Vec::new();
    for c in curves {
        match groups.iter_mut().find(|(h, _)| *h == c.hyper) {
            Some((_, v)) => v.push(c),
            None => groups.push((c.hyper.clone(), vec![c])),
        }
    }
    groups
}

/// Targets from the baseline's curves (all repetitions, all hyperparameters):
/// `R_T` is the pooled mean test metric of the oracle-best hyperparameter,
/// `C_T` the median over repetitions of its minimum complexity reaching `R_T`.
pub fn derive_targets(baseline: &[MethodCurve], metric: Metric) -> Result<Targets> {
    let groups = group_by_hyper(baseline);
    let best = oracle_hyper(&groups, metric)
        .ok_or_else(|| Error::InvalidArgument("baseline curves have no points".into()))?;
    let (hyper, curves) = &groups[best];
    let risk_target = pooled_mean(curves, metric).expect("oracle group has points");
    let per_rep: Vec<ExtendedValue> = curves
        .iter()
        .map(|c| min_complexity_to_risk_target(c, metric, risk_target))
        .collect();
    let all: Vec<&MethodCurve> = baseline.iter().collect();
    Ok(Targets {
        metric,
        selected_hyper: hyper.clone(),
        mean_by_hyper: groups
            .iter()
            .map(|(h, c)| (h.clone(), pooled_mean(c, metric)))
            .collect(),
        mean_all_hypers: pooled_mean(&all, metric),
        risk_target,
        complexity_target: sample_median(&per_rep).expect("nonempty"),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodKind {
    Lltboost,
    Tgb,
}

impl MethodKind {
    pub fn name(self) -> &'static str {
        match self {
            MethodKind::Lltboost => "lltboost",
            MethodKind::Tgb => "tgb",
        }
    }
}

/// Benchmark protocol; defaults are the reference protocol constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProtocolConfig {
    pub master_seed: u64,
    pub repetitions: usize,
    pub bootstrap_cap: usize,
    pub max_rules: usize,
    pub methods: Vec<MethodKind>,
    /// Loss, rule cap and seed are set per dataset and repetition.
    pub lltboost: LltConfig,
    /// Loss, rule cap, strength and seed are set per run.
    pub tgb: TgbConfig,
    pub tgb_lambdas: Vec<f64>,
    /// Standardise regression targets with the training transform.
    pub standardize_target: bool,
    /// Worker threads for repetitions; 1 runs serially. Not written to
    /// reports, which do not depend on it.
    #[serde(skip_serializing)]
    pub jobs: usize,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            master_seed: 0,
            repetitions: 10,
            bootstrap_cap: BOOTSTRAP_CAP,
            max_rules: 10,
            methods: vec![MethodKind::Lltboost, MethodKind::Tgb],
            lltboost: LltConfig::default(),
            tgb: TgbConfig::default(),
            tgb_lambdas: vec![0.0001, 0.001, 0.01, 0.1, 1.0, 10.0, 100.0],
            standardize_target: true,
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitInfo {
    pub repetition: usize,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub redraws: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub method: String,
    /// Hyperparameter used for this row (oracle-selected for grids).
    pub hyper: String,
    pub per_repetition: Vec<ExtendedValue>,
    pub aggregate: AggregateRow,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub metric: Metric,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub targets: Option<Targets>,
    /// Minimum complexity reaching `R_T`.
    pub complexity_table: Vec<TableRow>,
    /// Risk at `C_T`.
    pub risk_table: Vec<TableRow>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingRow {
    pub dataset: String,
    pub method: String,
    pub fits: usize,
    pub mean_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetReport {
    pub name: String,
    pub task: Task,
    pub n: usize,
    pub d: usize,
    pub splits: Vec<SplitInfo>,
    pub curves: Vec<MethodCurve>,
    pub metrics: Vec<MetricReport>,
}

/// Everything a benchmark produced. Timings are kept out of the serialized
/// report so that the report is a pure function of data, config and seed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkReport {
    pub format_version: u32,
    pub library_version: String,
    pub protocol: ProtocolConfig,
    pub tgb_objective: String,
    pub risk_definition: String,
    pub datasets: Vec<DatasetReport>,
    #[serde(skip)]
    pub timings: Vec<TimingRow>,
}

fn evaluate_trace(
    trace: &FitTrace,
    x_test: ArrayView2<'_, f64>,
    y_test: &[f64],
    loss: LossKind,
    task: Task,
) -> Result<Vec<CurvePoint>> {
    let mut points = Vec::new();
    for stage in trace.stages.iter().skip(1) {
        let mut scores = Vec::with_capacity(y_test.len());
        for row in x_test.rows() {
            scores.push(
                stage
                    .ensemble
                    .predict_score(row.as_slice().expect("standard layout"))?,
            );
        }
        let test_risk = loss.risk(y_test, &scores)?;
        let test_zero_one = match task {
            Task::Classification => Some(LossKind::ZeroOne.risk(y_test, &scores)?),
            Task::Regression => None,
        };
        points.push(CurvePoint {
            rules: stage.ensemble.rules.len(),
            complexity: stage.complexity,
            train_risk: stage.train_risk,
            test_risk,
            test_zero_one,
        });
    }
    Ok(points)
}

fn tgb_hyper(lambda: f64) -> String {
    format!("lambda={lambda}")
}

fn run_repetition(
    dataset: &Dataset,
    dataset_index: usize,
    repetition: usize,
    protocol: &ProtocolConfig,
) -> Result<(SplitInfo, Vec<MethodCurve>)> {
    let seed = derive_seed(
        protocol.master_seed,
        &[dataset_index as u64, repetition as u64],
    );
    let split = bootstrap_split_capped(dataset.n(), protocol.bootstrap_cap, seed)?;
    let train = dataset.subset(&split.train);
    let test = dataset.subset(&split.test);

    let standardizer = Standardizer::fit(train.x.view());
    let x_train = standardizer.transform(train.x.view())?;
    let x_test = standardizer.transform(test.x.view())?;
    let (mut y_train, mut y_test) = (train.y.clone(), test.y.clone());
    if dataset.task == Task::Regression && protocol.standardize_target {
        let ys = Standardizer::fit_column(&y_train);
        y_train.iter_mut().for_each(|v| *v = ys.apply(0, *v));
        y_test.iter_mut().for_each(|v| *v = ys.apply(0, *v));
    }
    let loss = match dataset.task {
        Task::Regression => LossKind::Squared,
        Task::Classification => LossKind::Logistic,
    };

    let mut curves = Vec::new();
    let mut record = |method: MethodKind, hyper: String, fit: Result<FitTrace>| {
        let (points, error, wall) = match fit.and_then(|t| {
            let wall = t.wall_time_seconds;
            evaluate_trace(&t, x_test.view(), &y_test, loss, dataset.task).map(|p| (p, wall))
        }) {
            Ok((points, wall)) => (points, None, wall),
            Err(e) => (Vec::new(), Some(e.to_string()), 0.0),
        };
        curves.push(MethodCurve {
            method: method.name().to_string(),
            hyper,
            repetition,
            points,
            error,
            wall_time_seconds: wall,
        });
    };

    for (k, method) in protocol.methods.iter().enumerate() {
        let fit_seed = derive_seed(seed, &[k as u64]);
        match method {
            MethodKind::Lltboost => {
                let cfg = LltConfig {
                    loss,
                    max_rules: protocol.max_rules,
                    seed: fit_seed,
                    ..protocol.lltboost.clone()
                };
                record(
                    *method,
                    "default".into(),
                    boost::fit(x_train.view(), &y_train, &cfg),
                );
            }
            MethodKind::Tgb => {
                for &lambda in &protocol.tgb_lambdas {
                    let cfg = TgbConfig {
                        loss,
                        max_rules: protocol.max_rules,
                        reg_strength: lambda,
                        seed: fit_seed,
                        ..protocol.tgb.clone()
                    };
                    record(
                        *method,
                        tgb_hyper(lambda),
                        tgb::fit_tgb(x_train.view(), &y_train, &cfg),
                    );
                }
            }
        }
    }
    let info = SplitInfo {
        repetition,
        seed,
        n_train: split.train.len(),
        n_test: split.test.len(),
        redraws: split.redraws,
    };
    Ok((info, curves))
}

fn method_rows(
    curves: &[MethodCurve],
    methods: &[MethodKind],
    metric: Metric,
    kind: CiKind,
    value: impl Fn(&MethodCurve) -> ExtendedValue,
) -> Vec<TableRow> {
    let mut rows = Vec::new();
    for method in methods {
        let groups = group_by_hyper(curves.iter().filter(|c| c.method == method.name()));
        if groups.is_empty() {
            continue;
        }
        let chosen = oracle_hyper(&groups, metric).unwrap_or(0);
        let (hyper, group) = &groups[chosen];
        let per_repetition: Vec<ExtendedValue> = group.iter().map(|c| value(c)).collect();
        if let Some(aggregate) = aggregate(&per_repetition, kind) {
            rows.push(TableRow {
                method: method.name().to_string(),
                hyper: hyper.clone(),
                per_repetition,
                aggregate,
            });
        }
    }
    rows
}

fn summarise(curves: &[MethodCurve], task: Task, protocol: &ProtocolConfig) -> Vec<MetricReport> {
    let metrics: &[Metric] = match task {
        Task::Regression => &[Metric::Risk],
        Task::Classification => &[Metric::Risk, Metric::ZeroOne],
    };
    metrics
        .iter()
        .map(|&metric| {
            let mut notes = Vec::new();
            let baseline: Vec<MethodCurve> = curves
                .iter()
                .filter(|c| c.method == "tgb")
                .cloned()
                .collect();
            let targets = if baseline.is_empty() {
                notes.push("no baseline curves: targets undefined, tables skipped".into());
                None
            } else {
                match derive_targets(&baseline, metric) {
                    Ok(t) => Some(t),
                    Err(e) => {
                        notes.push(format!("targets undefined: {e}"));
                        None
                    }
                }
            };
            let mut complexity_table = Vec::new();
            let mut risk_table = Vec::new();
            if let Some(t) = &targets {
                complexity_table =
                    method_rows(curves, &protocol.methods, metric, CiKind::Ranks4_7, |c| {
                        min_complexity_to_risk_target(c, metric, t.risk_target)
                    });
                match t.complexity_target {
                    ExtendedValue::Finite(ct) => {
                        risk_table =
                            method_rows(curves, &protocol.methods, metric, CiKind::Ranks3_8, |c| {
                                risk_at_complexity_target(c, metric, ct)
                            });
                    }
                    ExtendedValue::Inf => notes.push(
                        "baseline median complexity is inf: risk-at-complexity table skipped"
                            .into(),
                    ),
                }
            }
            MetricReport {
                metric,
                targets,
                complexity_table,
                risk_table,
                notes,
            }
        })
        .collect()
}

/// Runs every dataset × repetition × method (× hyperparameter) fit and
/// aggregates the tables. Fit failures become empty curves (`inf` entries).
pub fn run_benchmark(datasets: &[Dataset], protocol: &ProtocolConfig) -> Result<BenchmarkReport> {
    if protocol.repetitions == 0 || protocol.max_rules == 0 || protocol.bootstrap_cap < 2 {
        return Err(Error::InvalidArgument(
            "repetitions and max_rules must be positive, bootstrap_cap at least 2".into(),
        ));
    }
    if protocol.methods.contains(&MethodKind::Tgb) && protocol.tgb_lambdas.is_empty() {
        return Err(Error::InvalidArgument(
            "empty baseline regularisation grid".into(),
        ));
    }
    let tasks: Vec<(usize, usize)> = (0..datasets.len())
        .flat_map(|d| (0..protocol.repetitions).map(move |r| (d, r)))
        .collect();
    let run = |&(d, r): &(usize, usize)| run_repetition(&datasets[d], d, r, protocol);
    let results: Vec<Result<(SplitInfo, Vec<MethodCurve>)>> = if protocol.jobs <= 1 {
        tasks.iter().map(run).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(protocol.jobs)
            .build()
            .map_err(|e| Error::Fit(e.to_string()))?;
        pool.install(|| tasks.par_iter().map(run).collect())
    };

    let mut reports = Vec::new();
    let mut timings = Vec::new();
    let mut results = results.into_iter();
    for dataset in datasets {
        let mut splits = Vec::new();
        let mut curves = Vec::new();
        for _ in 0..protocol.repetitions {
            let (info, c) = results.next().expect("one result per task")?;
            splits.push(info);
            curves.extend(c);
        }
        for method in &protocol.methods {
            let times: Vec<f64> = curves
                .iter()
                .filter(|c| c.method == method.name() && c.error.is_none())
                .map(|c| c.wall_time_seconds)
                .collect();
            timings.push(TimingRow {
                dataset: dataset.name.clone(),
                method: method.name().to_string(),
                fits: times.len(),
                mean_seconds: if times.is_empty() {
                    0.0
                } else {
                    times.iter().sum::<f64>() / times.len() as f64
                },
            });
        }
        let metrics = summarise(&curves, dataset.task, protocol);
        reports.push(DatasetReport {
            name: dataset.name.clone(),
            task: dataset.task,
            n: dataset.n(),
            d: dataset.dim(),
            splits,
            curves,
            metrics,
        });
    }
    Ok(BenchmarkReport {
        format_version: 1,
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        protocol: protocol.clone(),
        tgb_objective: if protocol.tgb.normalized {
            "|<g,q>| / sqrt(lambda + <q,q>)".into()
        } else {
            "|<g,q>| (plain; lambda unused)".into()
        },
        risk_definition: "regression: mean (y - f)^2 / 2 on standardised targets; \
                          classification: mean logistic loss and mean 0/1 loss"
            .into(),
        datasets: reports,
        timings,
    })
}

fn table_csv(report: &BenchmarkReport, risk_table: bool) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "dataset", "metric", "method", "hyper", "target", "median", "ci_low", "ci_high", "ci_kind",
        "n_reps",
    ])?;
    for d in &report.datasets {
        for m in &d.metrics {
            let Some(t) = &m.targets else { continue };
            let (rows, target) = if risk_table {
                (&m.risk_table, t.complexity_target.to_string())
            } else {
                (&m.complexity_table, t.risk_target.to_string())
            };
            for row in rows {
                let a = &row.aggregate;
                let kind = serde_json::to_value(a.ci_kind)?;
                w.write_record([
                    d.name.clone(),
                    m.metric.name().to_string(),
                    row.method.clone(),
                    row.hyper.clone(),
                    target.clone(),
                    a.median.to_string(),
                    a.ci_low.to_string(),
                    a.ci_high.to_string(),
                    kind.as_str().unwrap_or_default().to_string(),
                    a.n_reps.to_string(),
                ])?;
            }
        }
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?).expect("utf-8"))
}

fn curves_csv(report: &BenchmarkReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "dataset",
        "method",
        "hyper",
        "repetition",
        "rules",
        "complexity",
        "train_risk",
        "test_risk",
        "test_zero_one",
    ])?;
    for d in &report.datasets {
        for c in &d.curves {
            for p in &c.points {
                w.write_record([
                    d.name.clone(),
                    c.method.clone(),
                    c.hyper.clone(),
                    c.repetition.to_string(),
                    p.rules.to_string(),
                    p.complexity.to_string(),
                    p.train_risk.to_string(),
                    p.test_risk.to_string(),
                    p.test_zero_one.map(|v| v.to_string()).unwrap_or_default(),
                ])?;
            }
        }
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?).expect("utf-8"))
}

fn timing_csv(report: &BenchmarkReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["dataset", "method", "fits", "mean_seconds"])?;
    for t in &report.timings {
        w.write_record([
            t.dataset.clone(),
            t.method.clone(),
            t.fits.to_string(),
            format!("{:.6}", t.mean_seconds),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?).expect("utf-8"))
}

/// File names written by [`write_report`]; all but `timing.csv` are
/// deterministic for a fixed master seed.
pub const REPORT_FILES: [&str; 5] = [
    "report.json",
    "table_complexity.csv",
    "table_risk.csv",
    "curves.csv",
    "timing.csv",
];

pub fn write_report(report: &BenchmarkReport, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    std::fs::write(
        dir.join("report.json"),
        serde_json::to_string_pretty(report)? + "\n",
    )?;
    std::fs::write(dir.join("table_complexity.csv"), table_csv(report, false)?)?;
    std::fs::write(dir.join("table_risk.csv"), table_csv(report, true)?)?;
    std::fs::write(dir.join("curves.csv"), curves_csv(report)?)?;
    std::fs::write(dir.join("timing.csv"), timing_csv(report)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    use ExtendedValue::{Finite, Inf};

    fn curve() -> MethodCurve {
        MethodCurve::from_pairs(&[(3, 0.5), (5, 0.3), (9, 0.1)])
    }

    #[test]
    fn min_complexity_examples() {
        assert_eq!(
            min_complexity_to_risk_target(&curve(), Metric::Risk, 0.25),
            Finite(9.0)
        );
        assert_eq!(
            min_complexity_to_risk_target(&curve(), Metric::Risk, 0.05),
            Inf
        );
        assert_eq!(
            min_complexity_to_risk_target(&curve(), Metric::Risk, 0.5),
            Finite(3.0)
        );
        assert_eq!(
            min_complexity_to_risk_target(&curve(), Metric::ZeroOne, 0.5),
            Inf
        );
    }

    #[test]
    fn risk_at_complexity_examples() {
        assert_eq!(
            risk_at_complexity_target(&curve(), Metric::Risk, 6.0),
            Finite(0.3)
        );
        assert_eq!(risk_at_complexity_target(&curve(), Metric::Risk, 2.0), Inf);
        assert_eq!(
            risk_at_complexity_target(&curve(), Metric::Risk, 9.0),
            Finite(0.1)
        );
    }

    #[test]
    fn median_examples() {
        let v: Vec<_> = (1..=10).map(|k| Finite(k as f64)).collect();
        let a = median_with_ci(&v, CiKind::Ranks4_7).unwrap();
        assert_eq!(
            (a.median, a.ci_low, a.ci_high),
            (Finite(5.5), Finite(4.0), Finite(7.0))
        );
        let b = median_with_ci(&v, CiKind::Ranks3_8).unwrap();
        assert_eq!((b.ci_low, b.ci_high), (Finite(3.0), Finite(8.0)));
        let mut w = v.clone();
        for x in w.iter_mut().take(6) {
            *x = Inf;
        }
        assert_eq!(median_with_ci(&w, CiKind::Ranks4_7).unwrap().median, Inf);
        let mut five = v.clone();
        for x in five.iter_mut().take(5) {
            *x = Inf;
        }
        // 5th finite, 6th inf
        assert_eq!(median_with_ci(&five, CiKind::Ranks4_7).unwrap().median, Inf);
        assert!(median_with_ci(&v[..9], CiKind::Ranks4_7).is_err());
    }

    #[test]
    fn coverage_of_rank_intervals() {
        assert_eq!(order_statistic_coverage(10, 4, 7), 672.0 / 1024.0);
        assert_eq!(order_statistic_coverage(10, 3, 8), 912.0 / 1024.0);
    }

    #[test]
    fn bootstrap_examples() {
        let s = bootstrap_split(1200, 4).unwrap();
        assert_eq!(s.train.len(), 500);
        let s = bootstrap_split(80, 4).unwrap();
        assert_eq!(s.train.len(), 80);
        let mut drawn = s.train.clone();
        drawn.sort_unstable();
        drawn.dedup();
        assert!(s.test.iter().all(|i| drawn.binary_search(i).is_err()));
        assert_eq!(drawn.len() + s.test.len(), 80);
        assert_eq!(bootstrap_split(80, 4).unwrap(), s);
        assert!(bootstrap_split(1, 4).is_err());
    }

    #[test]
    fn targets_examples() {
        let c = MethodCurve::from_pairs(&[(3, 0.4), (5, 0.2)]);
        let t = derive_targets(std::slice::from_ref(&c), Metric::Risk).unwrap();
        assert!((t.risk_target - 0.3).abs() < 1e-15);
        assert_eq!(t.complexity_target, Finite(5.0));
        let ten: Vec<MethodCurve> = (0..10)
            .map(|r| MethodCurve {
                repetition: r,
                ..c.clone()
            })
            .collect();
        assert_eq!(
            derive_targets(&ten, Metric::Risk)
                .unwrap()
                .complexity_target,
            Finite(5.0)
        );
    }

    #[test]
    fn oracle_picks_lowest_mean() {
        let mk = |h: &str, r: f64| MethodCurve {
            hyper: h.into(),
            ..MethodCurve::from_pairs(&[(3, r), (6, r / 2.0)])
        };
        let curves = vec![
            mk("a", 0.4),
            mk("b", 0.2),
            mk("c", 0.3),
            mk("a", 0.4),
            mk("b", 0.2),
        ];
        let t = derive_targets(&curves, Metric::Risk).unwrap();
        assert_eq!(t.selected_hyper, "b");
        assert!((t.risk_target - 0.15).abs() < 1e-15);
    }

    #[test]
    fn extended_values_serialize() {
        assert_eq!(
            serde_json::to_string(&vec![Finite(1.5), Inf]).unwrap(),
            r#"[1.5,"inf"]"#
        );
    }

    fn ext() -> impl Strategy<Value = ExtendedValue> {
        prop_oneof![4 => (0.0f64..100.0).prop_map(Finite), 1 => Just(Inf)]
    }

    fn arb_curve() -> impl Strategy<Value = MethodCurve> {
        proptest::collection::vec((0usize..40, 0.0f64..1.0), 1..12)
            .prop_map(|v| MethodCurve::from_pairs(&v))
    }

    proptest! {
        #[test]
        fn ci_brackets_median(v in proptest::collection::vec(ext(), 10)) {
            for kind in [CiKind::Ranks4_7, CiKind::Ranks3_8] {
                let a = median_with_ci(&v, kind).unwrap();
                prop_assert!(a.ci_low <= a.median && a.median <= a.ci_high);
            }
        }

        #[test]
        fn min_complexity_monotone_in_target(c in arb_curve(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(min_complexity_to_risk_target(&c, Metric::Risk, hi)
                <= min_complexity_to_risk_target(&c, Metric::Risk, lo));
        }

        #[test]
        fn selected_complexity_monotone_in_target(c in arb_curve(), a in 0.0f64..40.0, b in 0.0f64..40.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let pick = |t: f64| c.points.iter().filter(|p| p.complexity as f64 <= t).map(|p| p.complexity).max();
            prop_assert!(pick(lo) <= pick(hi));
            // and the reported risk belongs to that complexity
            if let Some(k) = pick(hi) {
                let r = risk_at_complexity_target(&c, Metric::Risk, hi).finite().unwrap();
                prop_assert!(c.points.iter().any(|p| p.complexity == k && p.test_risk == r));
            } else {
                prop_assert_eq!(risk_at_complexity_target(&c, Metric::Risk, hi), Inf);
            }
        }

        #[test]
        fn ordering_is_total(a in ext(), b in ext()) {
            prop_assert_eq!(a.cmp(&b), b.cmp(&a).reverse());
            prop_assert!(Inf >= a);
        }
    }
}
