//! Propositions, conjunctions and additive rule ensembles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::standardize::Standardizer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Regression,
    Classification,
}

/// A half-space test `x·w ≥ t` with a sparse weight vector.
///
/// Only nonzero weights are stored, with strictly increasing feature indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseProposition {
    indices: Vec<usize>,
    weights: Vec<f64>,
    threshold: f64,
}

impl SparseProposition {
    /// Builds a proposition from `(feature, weight)` terms. Zero weights are
    /// dropped; at least one nonzero term must remain.
    pub fn new(terms: impl IntoIterator<Item = (usize, f64)>, threshold: f64) -> Result<Self> {
        let mut terms: Vec<(usize, f64)> = terms.into_iter().filter(|(_, w)| *w != 0.0).collect();
        if terms.is_empty() {
            return Err(Error::InvalidArgument(
                "proposition needs at least one nonzero weight".into(),
            ));
        }
        if terms.iter().any(|(_, w)| !w.is_finite()) || !threshold.is_finite() {
            return Err(Error::InvalidArgument(
                "non-finite proposition parameter".into(),
            ));
        }
        terms.sort_by_key(|(j, _)| *j);
        if terms.windows(2).any(|p| p[0].0 == p[1].0) {
            return Err(Error::InvalidArgument(
                "duplicate feature index in proposition".into(),
            ));
        }
        let (indices, weights) = terms.into_iter().unzip();
        Ok(SparseProposition {
            indices,
            weights,
            threshold,
        })
    }

    /// Builds a proposition from a dense weight vector, keeping its nonzeros.
    pub fn from_dense(weights: &[f64], threshold: f64) -> Result<Self> {
        Self::new(weights.iter().copied().enumerate(), threshold)
    }

    /// `x_j ≥ t`.
    pub fn at_least(feature: usize, threshold: f64) -> Self {
        SparseProposition {
            indices: vec![feature],
            weights: vec![1.0],
            threshold,
        }
    }

    /// `x_j ≤ t`, stored as `-x_j ≥ -t`.
    pub fn at_most(feature: usize, threshold: f64) -> Self {
        SparseProposition {
            indices: vec![feature],
            weights: vec![-1.0],
            threshold: -threshold,
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices
            .iter()
            .copied()
            .zip(self.weights.iter().copied())
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Number of nonzero weights.
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn max_index(&self) -> usize {
        *self.indices.last().expect("nonempty proposition")
    }

    #[inline]
    pub(crate) fn project(&self, x: &[f64]) -> f64 {
        self.terms().map(|(j, w)| w * x[j]).sum()
    }

    /// Evaluation without the bounds check; `x` must cover every index.
    #[inline]
    pub(crate) fn holds(&self, x: &[f64]) -> bool {
        self.project(x) >= self.threshold
    }

    /// Returns whether `x·w ≥ t`. Ties count as satisfied.
    pub fn eval(&self, x: &[f64]) -> Result<bool> {
        if self.max_index() >= x.len() {
            return Err(Error::DimensionMismatch {
                expected: self.max_index() + 1,
                got: x.len(),
            });
        }
        Ok(self.holds(x))
    }
}

/// A conjunction of propositions with a consequent weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    propositions: Vec<SparseProposition>,
    pub weight: f64,
}

impl Rule {
    pub fn new(propositions: Vec<SparseProposition>, weight: f64) -> Result<Self> {
        if propositions.is_empty() {
            return Err(Error::InvalidArgument(
                "rule needs at least one proposition".into(),
            ));
        }
        Ok(Rule {
            propositions,
            weight,
        })
    }

    pub fn propositions(&self) -> &[SparseProposition] {
        &self.propositions
    }

    /// Number of propositions `k`.
    pub fn len(&self) -> usize {
        self.propositions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.propositions.is_empty()
    }

    #[inline]
    pub(crate) fn covers(&self, x: &[f64]) -> bool {
        self.propositions.iter().all(|p| p.holds(x))
    }

    /// Logical AND of all propositions.
    pub fn eval(&self, x: &[f64]) -> Result<bool> {
        let mut all = true;
        for p in &self.propositions {
            all &= p.eval(x)?;
        }
        Ok(all)
    }

    /// `k + Σ ‖w_j‖₀`. For single-variable propositions this is `2k`.
    pub fn complexity(&self) -> usize {
        self.len()
            + self
                .propositions
                .iter()
                .map(SparseProposition::nnz)
                .sum::<usize>()
    }
}

/// `f(x) = β₀ + Σ βᵢ qᵢ(x̃)` where `x̃` is `x` after the stored standardizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleEnsemble {
    pub intercept: f64,
    pub rules: Vec<Rule>,
    pub task: Task,
    pub standardizer: Standardizer,
}

impl RuleEnsemble {
    pub fn new(
        intercept: f64,
        rules: Vec<Rule>,
        task: Task,
        standardizer: Standardizer,
    ) -> Result<Self> {
        standardizer.validate()?;
        let dim = standardizer.dim();
        for rule in &rules {
            for p in rule.propositions() {
                if p.max_index() >= dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: p.max_index() + 1,
                    });
                }
            }
        }
        Ok(RuleEnsemble {
            intercept,
            rules,
            task,
            standardizer,
        })
    }

    pub fn dim(&self) -> usize {
        self.standardizer.dim()
    }

    /// Score of an already standardised input.
    #[inline]
    pub fn score_standardized(&self, x: &[f64]) -> f64 {
        let mut score = self.intercept;
        for rule in &self.rules {
            if rule.covers(x) {
                score += rule.weight;
            }
        }
        score
    }

    /// Score of a raw input.
    pub fn predict_score(&self, x: &[f64]) -> Result<f64> {
        let z = self.standardizer.transform_row(x)?;
        Ok(self.score_standardized(&z))
    }

    /// Class label for classification (score ≥ 0 ⇒ 1), the score itself otherwise.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        let score = self.predict_score(x)?;
        Ok(match self.task {
            Task::Classification => f64::from(u8::from(score >= 0.0)),
            Task::Regression => score,
        })
    }

    /// `r + Σ c(qᵢ)`.
    pub fn complexity(&self) -> usize {
        self.rules.len() + self.rules.iter().map(Rule::complexity).sum::<usize>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn prop(terms: &[(usize, f64)], t: f64) -> SparseProposition {
        SparseProposition::new(terms.iter().copied(), t).unwrap()
    }

    #[test]
    fn proposition_examples() {
        assert!(prop(&[(0, 1.0), (2, -1.0)], 0.5)
            .eval(&[2.0, 9.0, 1.0])
            .unwrap());
        assert!(prop(&[(0, 1.0)], 0.0).eval(&[0.0, 3.0]).unwrap());
        assert!(!prop(&[(1, -2.0)], 1.0).eval(&[0.0, 1.0]).unwrap());
    }

    #[test]
    fn proposition_out_of_range() {
        let p = prop(&[(3, 1.0)], 0.0);
        assert!(matches!(
            p.eval(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn proposition_invariants() {
        assert!(SparseProposition::new([(0, 0.0)], 1.0).is_err());
        assert!(SparseProposition::new([(1, 1.0), (1, 2.0)], 1.0).is_err());
        let p = prop(&[(4, 1.0), (0, 0.0), (2, 3.0)], 0.0);
        assert_eq!(p.indices(), &[2, 4]);
        assert_eq!(p.weights(), &[3.0, 1.0]);
    }

    #[test]
    fn at_most_is_inclusive() {
        let p = SparseProposition::at_most(0, 1.5);
        assert!(p.eval(&[1.5]).unwrap());
        assert!(p.eval(&[1.0]).unwrap());
        assert!(!p.eval(&[1.6]).unwrap());
    }

    #[test]
    fn conjunction_examples() {
        let a = prop(&[(0, 1.0)], 0.0);
        let b = prop(&[(1, 1.0)], 0.0);
        let rule = Rule::new(vec![a, b], 1.0).unwrap();
        assert!(rule.eval(&[1.0, 1.0]).unwrap());
        assert!(!rule.eval(&[1.0, -1.0]).unwrap());
        assert!(Rule::new(vec![], 1.0).is_err());
    }

    #[test]
    fn complexity_examples() {
        let r = Rule::new(
            vec![prop(&[(0, 1.0), (1, 2.0)], 0.0), prop(&[(2, 1.0)], 0.0)],
            1.0,
        )
        .unwrap();
        assert_eq!(r.complexity(), 5);
        let r1 = Rule::new(
            vec![prop(&[(0, 1.), (1, 1.), (2, 1.), (3, 1.), (4, 1.)], 0.0)],
            1.0,
        )
        .unwrap();
        assert_eq!(r1.complexity(), 6);
        let axis = |k: usize| {
            Rule::new(
                (0..k)
                    .map(|j| SparseProposition::at_least(j, 0.0))
                    .collect(),
                1.0,
            )
            .unwrap()
        };
        assert_eq!(axis(3).complexity(), 6);

        let empty =
            RuleEnsemble::new(0.0, vec![], Task::Regression, Standardizer::identity(5)).unwrap();
        assert_eq!(empty.complexity(), 0);
        let one =
            RuleEnsemble::new(0.0, vec![r], Task::Regression, Standardizer::identity(5)).unwrap();
        assert_eq!(one.complexity(), 6);
        let three = RuleEnsemble::new(
            0.0,
            vec![axis(1), axis(2), axis(2)],
            Task::Regression,
            Standardizer::identity(5),
        )
        .unwrap();
        assert_eq!(three.complexity(), 13);
    }

    #[test]
    fn predict_examples() {
        let f =
            RuleEnsemble::new(0.1, vec![], Task::Regression, Standardizer::identity(2)).unwrap();
        assert_eq!(f.predict_score(&[5.0, -3.0]).unwrap(), 0.1);
        let rule = Rule::new(vec![SparseProposition::at_least(0, 0.0)], 2.0).unwrap();
        let f = RuleEnsemble::new(
            0.1,
            vec![rule],
            Task::Classification,
            Standardizer::identity(2),
        )
        .unwrap();
        assert_eq!(f.predict_score(&[1.0, 0.0]).unwrap(), 2.1);
        assert_eq!(f.predict(&[1.0, 0.0]).unwrap(), 1.0);
        assert!(f.predict_score(&[1.0]).is_err());
        let neg = RuleEnsemble {
            intercept: -0.5,
            ..f
        };
        assert_eq!(neg.predict(&[-1.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn ensemble_rejects_out_of_range_rule() {
        let rule = Rule::new(vec![SparseProposition::at_least(3, 0.0)], 1.0).unwrap();
        assert!(
            RuleEnsemble::new(0.0, vec![rule], Task::Regression, Standardizer::identity(2))
                .is_err()
        );
    }

    fn arb_prop(d: usize) -> impl Strategy<Value = SparseProposition> {
        (
            proptest::collection::btree_map(0..d, -3.0f64..3.0, 1..=d),
            -2.0f64..2.0,
        )
            .prop_filter_map("nonzero", |(m, t)| {
                SparseProposition::new(m.into_iter(), t).ok()
            })
    }

    fn arb_ensemble(d: usize) -> impl Strategy<Value = RuleEnsemble> {
        let rule = (proptest::collection::vec(arb_prop(d), 1..4), -2.0f64..2.0)
            .prop_map(|(ps, w)| Rule::new(ps, w).unwrap());
        (-1.0f64..1.0, proptest::collection::vec(rule, 0..6)).prop_map(move |(b, rules)| {
            RuleEnsemble::new(b, rules, Task::Regression, Standardizer::identity(d)).unwrap()
        })
    }

    proptest! {
        #[test]
        fn conjunction_is_product_of_propositions(
            ps in proptest::collection::vec(arb_prop(4), 1..5),
            x in proptest::collection::vec(-2.0f64..2.0, 4),
        ) {
            let rule = Rule::new(ps.clone(), 1.0).unwrap();
            let product: u8 = ps.iter().map(|p| u8::from(p.eval(&x).unwrap())).product();
            prop_assert_eq!(u8::from(rule.eval(&x).unwrap()), product);
        }

        #[test]
        fn score_is_linear_in_weights(
            f in arb_ensemble(3),
            alpha in -4.0f64..4.0,
            x in proptest::collection::vec(-2.0f64..2.0, 3),
        ) {
            let mut g = f.clone();
            g.intercept *= alpha;
            for r in &mut g.rules { r.weight *= alpha; }
            let lhs = g.predict_score(&x).unwrap();
            let rhs = alpha * f.predict_score(&x).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        }

        #[test]
        fn axis_only_complexity_is_classic(ks in proptest::collection::vec(1usize..5, 0..6)) {
            let rules: Vec<Rule> = ks.iter().map(|&k| {
                Rule::new((0..k).map(|j| SparseProposition::at_most(j, 0.5)).collect(), 1.0).unwrap()
            }).collect();
            let f = RuleEnsemble::new(0.0, rules, Task::Regression, Standardizer::identity(5)).unwrap();
            prop_assert_eq!(f.complexity(), ks.len() + ks.iter().map(|k| 2 * k).sum::<usize>());
        }
    }
}
