//! Weighted L1-regularised logistic regression, the λ search for an exact
//! number of nonzero weights, and the fully-corrective refit of rule weights.
//!
//! The L1 problem
//!
//! ```text
//! minimise  Σᵢ ωᵢ ℓ_log(zᵢ, xᵢ·w + b) + λ‖w‖₁        (b unpenalised)
//! ```
//!
//! is solved by a proximal Newton method: each outer step minimises the
//! quadratic model of the smooth part plus the L1 term by cyclic coordinate
//! descent (soft-thresholding, so zeros are exact), followed by a backtracking
//! line search on the true objective.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::linalg::solve_spd_jittered;
use crate::loss::{sigmoid, softplus, LossKind};
use crate::rules::SparseProposition;

/// Weights with magnitude below this are stored as exact zeros.
const ZERO_CUTOFF: f64 = 1e-12;

/// Binary problem over the currently selectable examples.
#[derive(Debug, Clone)]
pub struct WeightedBinaryProblem {
    features: Array2<f64>,
    labels: Vec<bool>,
    weights: Vec<f64>,
}

impl WeightedBinaryProblem {
    /// Sample weights are rescaled to mean 1.
    pub fn new(features: Array2<f64>, labels: Vec<bool>, weights: Vec<f64>) -> Result<Self> {
        let n = features.nrows();
        if labels.len() != n || weights.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: if labels.len() != n {
                    labels.len()
                } else {
                    weights.len()
                },
            });
        }
        if n == 0 || features.ncols() == 0 {
            return Err(Error::InvalidArgument("empty weighted problem".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument(
                "sample weights must be finite and nonnegative".into(),
            ));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite feature value".into()));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidArgument("sample weights sum to zero".into()));
        }
        let scale = n as f64 / total;
        let weights = weights.into_iter().map(|w| w * scale).collect();
        Ok(WeightedBinaryProblem {
            features: features.as_standard_layout().into_owned(),
            labels,
            weights,
        })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn row(&self, i: usize) -> &[f64] {
        self.features.row(i).to_slice().expect("standard layout")
    }

    /// Weighted fraction of positive labels.
    pub fn positive_rate(&self) -> f64 {
        let total: f64 = self.weights.iter().sum();
        let pos: f64 = self
            .labels
            .iter()
            .zip(&self.weights)
            .filter(|(z, _)| **z)
            .map(|(_, w)| w)
            .sum();
        pos / total
    }

    fn linear_predictor(&self, w: &[f64], b: f64) -> Vec<f64> {
        (0..self.n())
            .map(|i| b + self.row(i).iter().zip(w).map(|(x, wj)| x * wj).sum::<f64>())
            .collect()
    }

    fn smooth_loss(&self, eta: &[f64]) -> f64 {
        eta.iter()
            .zip(&self.labels)
            .zip(&self.weights)
            .map(|((e, z), w)| w * (softplus(*e) - if *z { *e } else { 0.0 }))
            .sum()
    }

    /// `Σ ωᵢ ℓ_log(zᵢ, xᵢ·w + b) + λ‖w‖₁`.
    pub fn objective(&self, w: &[f64], b: f64, lambda: f64) -> f64 {
        self.smooth_loss(&self.linear_predictor(w, b)) + lambda * l1(w)
    }

    /// Gradient of the smooth part: `(∂_w, ∂_b)`.
    pub fn gradient(&self, w: &[f64], b: f64) -> (Vec<f64>, f64) {
        let eta = self.linear_predictor(w, b);
        self.gradient_at(&eta)
    }

    fn gradient_at(&self, eta: &[f64]) -> (Vec<f64>, f64) {
        let mut gw = vec![0.0; self.dim()];
        let mut gb = 0.0;
        for (i, e) in eta.iter().enumerate() {
            let r = self.weights[i] * (sigmoid(*e) - f64::from(u8::from(self.labels[i])));
            gb += r;
            for (g, x) in gw.iter_mut().zip(self.row(i)) {
                *g += r * x;
            }
        }
        (gw, gb)
    }

    /// Largest violation of the optimality conditions at `(w, b)`.
    pub fn kkt_residual(&self, w: &[f64], b: f64, lambda: f64) -> f64 {
        let (gw, gb) = self.gradient(w, b);
        kkt_from_gradient(&gw, gb, w, lambda)
    }
}

fn l1(w: &[f64]) -> f64 {
    w.iter().map(|v| v.abs()).sum()
}

fn kkt_from_gradient(gw: &[f64], gb: f64, w: &[f64], lambda: f64) -> f64 {
    let mut worst = gb.abs();
    for (g, wj) in gw.iter().zip(w) {
        let v = if *wj == 0.0 {
            (g.abs() - lambda).max(0.0)
        } else {
            (g + lambda * wj.signum()).abs()
        };
        worst = worst.max(v);
    }
    worst
}

#[inline]
fn soft_threshold(v: f64, lambda: f64) -> f64 {
    if v > lambda {
        v - lambda
    } else if v < -lambda {
        v + lambda
    } else {
        0.0
    }
}

fn log_odds(p: f64) -> f64 {
    let p = p.clamp(1e-12, 1.0 - 1e-12);
    (p / (1.0 - p)).ln()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Target KKT residual per unit of total sample weight.
    pub kkt_tolerance: f64,
    /// Stop when an accepted step changes the objective by less than this
    /// relative amount.
    pub relative_tolerance: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iterations: 1000,
            kkt_tolerance: 1e-9,
            relative_tolerance: 1e-14,
        }
    }
}

/// Solution `(w, b)` of one L1 fit. As a proposition this reads `x·w ≥ -b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSolution {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub objective_value: f64,
    pub nnz: usize,
    pub lambda: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl LinearSolution {
    pub fn threshold(&self) -> f64 {
        -self.intercept
    }

    /// `None` when all weights are zero.
    pub fn to_proposition(&self) -> Option<SparseProposition> {
        SparseProposition::from_dense(&self.weights, self.threshold()).ok()
    }
}

/// `maxⱼ |Σᵢ ωᵢ (zᵢ - p̂) xᵢⱼ|`: the smallest λ for which `w = 0` is optimal.
pub fn lambda_max(problem: &WeightedBinaryProblem) -> f64 {
    let p = problem.positive_rate();
    let mut g = vec![0.0; problem.dim()];
    for i in 0..problem.n() {
        let r = problem.weights[i] * (f64::from(u8::from(problem.labels[i])) - p);
        for (gj, x) in g.iter_mut().zip(problem.row(i)) {
            *gj += r * x;
        }
    }
    g.into_iter().map(f64::abs).fold(0.0, f64::max)
}

pub fn fit_weighted_l1(problem: &WeightedBinaryProblem, lambda: f64) -> LinearSolution {
    fit_weighted_l1_with(problem, lambda, &SolverOptions::default(), None)
}

/// L1 fit with explicit options and an optional warm start `(w, b)`.
pub fn fit_weighted_l1_with(
    problem: &WeightedBinaryProblem,
    lambda: f64,
    opts: &SolverOptions,
    start: Option<(&[f64], f64)>,
) -> LinearSolution {
    assert!(lambda >= 0.0, "lambda must be nonnegative");
    let n = problem.n();
    let d = problem.dim();
    let (mut w, mut b) = match start {
        Some((w0, b0)) => (w0.to_vec(), b0),
        None => (vec![0.0; d], log_odds(problem.positive_rate())),
    };
    let target = opts.kkt_tolerance * n as f64;
    let mut eta = problem.linear_predictor(&w, b);
    let mut obj = problem.smooth_loss(&eta) + lambda * l1(&w);

    let mut mu = vec![0.0; n];
    let mut h = vec![0.0; n];
    let mut diag = vec![0.0; d];
    let mut u = vec![0.0; n];
    let mut dw = vec![0.0; d];
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        let (gw, gb) = problem.gradient_at(&eta);
        if kkt_from_gradient(&gw, gb, &w, lambda) <= target {
            break;
        }
        iterations += 1;

        for i in 0..n {
            mu[i] = sigmoid(eta[i]);
            h[i] = problem.weights[i] * (mu[i] * (1.0 - mu[i])).max(1e-10);
        }
        diag.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            for (dj, x) in diag.iter_mut().zip(problem.row(i)) {
                *dj += h[i] * x * x;
            }
        }
        let diag_b: f64 = h.iter().sum();

        // coordinate descent on the quadratic model around (w, b)
        u.iter_mut().for_each(|v| *v = 0.0);
        dw.iter_mut().for_each(|v| *v = 0.0);
        let mut db = 0.0;
        for _sweep in 0..100 {
            let mut max_change: f64 = 0.0;

            let gq_b = gb + h.iter().zip(&u).map(|(hi, ui)| hi * ui).sum::<f64>();
            let step = -gq_b / diag_b;
            db += step;
            u.iter_mut().for_each(|v| *v += step);
            max_change = max_change.max(step.abs() * diag_b.sqrt());

            for j in 0..d {
                if diag[j] <= 0.0 {
                    continue;
                }
                let mut gq = gw[j];
                for i in 0..n {
                    gq += h[i] * problem.features[[i, j]] * u[i];
                }
                let cur = w[j] + dw[j];
                let new = soft_threshold(cur * diag[j] - gq, lambda) / diag[j];
                let delta = new - cur;
                if delta != 0.0 {
                    dw[j] += delta;
                    for i in 0..n {
                        u[i] += delta * problem.features[[i, j]];
                    }
                    max_change = max_change.max(delta.abs() * diag[j].sqrt());
                }
            }
            if max_change <= 1e-12 * (n as f64).sqrt() {
                break;
            }
        }

        // backtracking line search on the true objective
        let l1_now = l1(&w);
        let l1_full: f64 = w.iter().zip(&dw).map(|(a, b)| (a + b).abs()).sum();
        let decrease = gw.iter().zip(&dw).map(|(g, v)| g * v).sum::<f64>()
            + gb * db
            + lambda * (l1_full - l1_now);
        if !(decrease < 0.0) {
            break;
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let w_new: Vec<f64> = w.iter().zip(&dw).map(|(a, v)| a + t * v).collect();
            let eta_new: Vec<f64> = eta.iter().zip(&u).map(|(e, v)| e + t * v).collect();
            let obj_new = problem.smooth_loss(&eta_new) + lambda * l1(&w_new);
            if obj_new <= obj + 1e-4 * t * decrease {
                accepted = Some((w_new, eta_new, obj_new, t));
                break;
            }
            t *= 0.5;
        }
        let Some((w_new, eta_new, obj_new, t)) = accepted else {
            break;
        };
        debug_assert!(obj_new <= obj, "objective increased: {obj} -> {obj_new}");
        let rel = (obj - obj_new) / obj.abs().max(1.0);
        w = w_new;
        b += t * db;
        eta = eta_new;
        obj = obj_new;
        if rel < opts.relative_tolerance {
            break;
        }
    }

    for v in w.iter_mut() {
        if v.abs() < ZERO_CUTOFF {
            *v = 0.0;
        }
    }
    let eta = problem.linear_predictor(&w, b);
    let objective_value = problem.smooth_loss(&eta) + lambda * l1(&w);
    let (gw, gb) = problem.gradient_at(&eta);
    let residual = kkt_from_gradient(&gw, gb, &w, lambda);
    LinearSolution {
        nnz: w.iter().filter(|v| **v != 0.0).count(),
        weights: w,
        intercept: b,
        objective_value,
        lambda,
        converged: residual <= target.max(1e-6 * n as f64),
        iterations,
    }
}

/// Smallest-λ search for solutions with a prescribed number of nonzeros.
///
/// Every solved λ is cached, so asking for `s = 1, 2, …` in turn reuses the
/// brackets found earlier and warm-starts from the nearest solved λ.
#[derive(Debug)]
pub struct SparsityPath<'a> {
    problem: &'a WeightedBinaryProblem,
    lambda_max: f64,
    lambda_min: f64,
    max_steps: usize,
    solved: Vec<LinearSolution>,
}

impl<'a> SparsityPath<'a> {
    /// Bisection range `[1e-6·λ_max, λ_max]`, at most 40 steps.
    pub fn new(problem: &'a WeightedBinaryProblem) -> Self {
        let lambda_max = lambda_max(problem);
        SparsityPath {
            problem,
            lambda_max,
            lambda_min: 1e-6 * lambda_max,
            max_steps: 40,
            solved: Vec::new(),
        }
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    /// Solutions evaluated so far, in increasing λ.
    pub fn evaluated(&self) -> &[LinearSolution] {
        &self.solved
    }

    fn solve(&mut self, lambda: f64) -> usize {
        if let Ok(k) = self
            .solved
            .binary_search_by(|s| s.lambda.total_cmp(&lambda))
        {
            return self.solved[k].nnz;
        }
        let nearest = self.solved.iter().min_by(|a, b| {
            (a.lambda.ln() - lambda.ln())
                .abs()
                .total_cmp(&(b.lambda.ln() - lambda.ln()).abs())
        });
        let start = nearest.map(|s| (s.weights.clone(), s.intercept));
        let sol = fit_weighted_l1_with(
            self.problem,
            lambda,
            &SolverOptions::default(),
            start.as_ref().map(|(w, b)| (w.as_slice(), *b)),
        );
        let nnz = sol.nnz;
        let pos = self.solved.partition_point(|s| s.lambda < lambda);
        self.solved.insert(pos, sol);
        nnz
    }

    /// The solution at the smallest λ found with exactly `s` nonzeros; if no
    /// such λ turns up, the one with the most nonzeros below `s`.
    pub fn solution_for(&mut self, s: usize) -> Result<LinearSolution> {
        if s == 0 || s > self.problem.dim() {
            return Err(Error::InvalidArgument(format!(
                "sparsity {s} outside 1..={}",
                self.problem.dim()
            )));
        }
        if !(self.lambda_max > 0.0) {
            // single-class problem: w = 0 is optimal for every λ
            self.solve(0.0);
            return Ok(self.pick(s));
        }
        self.solve(self.lambda_max);
        if self.solve(self.lambda_min) <= s {
            return Ok(self.pick(s));
        }
        // bracket: nnz(lo) > s, nnz(hi) ≤ s
        let mut lo = self
            .solved
            .iter()
            .filter(|x| x.nnz > s)
            .map(|x| x.lambda)
            .fold(self.lambda_min, f64::max);
        let mut hi = self
            .solved
            .iter()
            .filter(|x| x.nnz <= s && x.lambda > lo)
            .map(|x| x.lambda)
            .fold(self.lambda_max, f64::min);
        for _ in 0..self.max_steps {
            if hi / lo - 1.0 < 1e-6 {
                break;
            }
            let mid = (lo * hi).sqrt();
            if self.solve(mid) > s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(self.pick(s))
    }

    fn pick(&self, s: usize) -> LinearSolution {
        let exact = self.solved.iter().find(|x| x.nnz == s);
        let chosen = exact.or_else(|| {
            let best = self
                .solved
                .iter()
                .filter(|x| x.nnz <= s)
                .map(|x| x.nnz)
                .max()?;
            self.solved.iter().find(|x| x.nnz == best)
        });
        chosen.cloned().expect("λ_max solution has no nonzeros")
    }
}

/// Smallest-λ solution with exactly `s` nonzero weights (see [`SparsityPath`]).
pub fn fit_for_sparsity(problem: &WeightedBinaryProblem, s: usize) -> Result<LinearSolution> {
    SparsityPath::new(problem).solution_for(s)
}

/// Refits `(w, b)` on the support of `solution` with the path's floor λ only
/// (a debiasing step).
pub fn refit_on_support(
    problem: &WeightedBinaryProblem,
    solution: &LinearSolution,
) -> LinearSolution {
    let support: Vec<usize> = (0..problem.dim())
        .filter(|j| solution.weights[*j] != 0.0)
        .collect();
    if support.is_empty() {
        return solution.clone();
    }
    let sub = problem
        .features
        .select(ndarray::Axis(1), &support)
        .as_standard_layout()
        .into_owned();
    let sub = WeightedBinaryProblem {
        features: sub,
        labels: problem.labels.clone(),
        weights: problem.weights.clone(),
    };
    let floor = 1e-6 * lambda_max(problem);
    let start: Vec<f64> = support.iter().map(|j| solution.weights[*j]).collect();
    let fit = fit_weighted_l1_with(
        &sub,
        floor,
        &SolverOptions::default(),
        Some((&start, solution.intercept)),
    );
    let mut weights = vec![0.0; problem.dim()];
    for (k, j) in support.iter().enumerate() {
        weights[*j] = fit.weights[k];
    }
    LinearSolution {
        nnz: weights.iter().filter(|v| **v != 0.0).count(),
        weights,
        ..fit
    }
}

/// Ridge strength on the rule weights in [`corrective_refit`].
pub const REFIT_RIDGE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Refit {
    pub beta: Vec<f64>,
    /// Summed (unregularised) loss at `beta`.
    pub loss: f64,
    pub converged: bool,
}

pub(crate) fn summed_loss(kind: LossKind, y: &[f64], eta: &[f64]) -> f64 {
    y.iter()
        .zip(eta)
        .map(|(yi, e)| kind.loss_unchecked(*yi, *e))
        .sum()
}

pub(crate) fn predictor(design: &ArrayView2<'_, f64>, beta: &[f64]) -> Vec<f64> {
    design
        .rows()
        .into_iter()
        .map(|row| row.iter().zip(beta).map(|(d, b)| d * b).sum())
        .collect()
}

/// Refits all rule weights jointly:
/// `argmin_β Σᵢ ℓ(yᵢ, ⟨dᵢ, β⟩) + ε‖β₁..ₘ‖²` by damped Newton from `warm_start`.
///
/// `design` is `[1, q₁(x), …, q_m(x)]` per row. The returned loss never
/// exceeds the warm start's loss.
pub fn corrective_refit(
    design: ArrayView2<'_, f64>,
    y: &[f64],
    kind: LossKind,
    warm_start: &[f64],
) -> Result<Refit> {
    let (n, p) = design.dim();
    if kind == LossKind::ZeroOne {
        return Err(Error::UnsupportedLoss(kind));
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    if warm_start.len() != p || p == 0 {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: warm_start.len(),
        });
    }
    if design.column(0).iter().any(|v| *v != 1.0) {
        return Err(Error::InvalidArgument(
            "first design column must be all ones".into(),
        ));
    }

    let penalty = |beta: &[f64]| REFIT_RIDGE * beta[1..].iter().map(|b| b * b).sum::<f64>();
    let mut beta = warm_start.to_vec();
    let mut eta = predictor(&design, &beta);
    let warm_loss = summed_loss(kind, y, &eta);
    let mut obj = warm_loss + penalty(&beta);
    let mut converged = false;

    for _ in 0..100 {
        let mut grad = vec![0.0; p];
        let mut hess = vec![0.0; p * p];
        for (i, row) in design.rows().into_iter().enumerate() {
            let r = kind.gradient(y[i], eta[i])?;
            let c = kind.curvature(eta[i]);
            for a in 0..p {
                let da = row[a];
                if da == 0.0 {
                    continue;
                }
                grad[a] += r * da;
                for b in 0..=a {
                    hess[a * p + b] += c * da * row[b];
                }
            }
        }
        for a in 1..p {
            grad[a] += 2.0 * REFIT_RIDGE * beta[a];
            hess[a * p + a] += 2.0 * REFIT_RIDGE;
        }
        for a in 0..p {
            for b in 0..a {
                hess[b * p + a] = hess[a * p + b];
            }
        }
        let gnorm = grad.iter().map(|g| g.abs()).fold(0.0, f64::max);
        if gnorm <= 1e-10 * (n as f64).max(1.0) {
            converged = true;
            break;
        }
        let Some(step) = solve_spd_jittered(&hess, &grad) else {
            break;
        };
        let slope: f64 = -grad.iter().zip(&step).map(|(g, s)| g * s).sum::<f64>();
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let cand: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b - t * s).collect();
            let cand_eta = predictor(&design, &cand);
            let cand_obj = summed_loss(kind, y, &cand_eta) + penalty(&cand);
            if cand_obj <= obj + 1e-4 * t * slope.min(0.0) {
                let rel = (obj - cand_obj) / obj.abs().max(1.0);
                beta = cand;
                eta = cand_eta;
                obj = cand_obj;
                moved = rel > 1e-15;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            converged = true;
            break;
        }
    }

    let loss = summed_loss(kind, y, &eta);
    if loss > warm_loss {
        return Ok(Refit {
            beta: warm_start.to_vec(),
            loss: warm_loss,
            converged,
        });
    }
    Ok(Refit {
        beta,
        loss,
        converged,
    })
}
