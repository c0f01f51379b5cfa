//! Additive rule ensembles whose rule conditions are conjunctions of sparse
//! linear-threshold propositions `x·w ≥ t`.
//!
//! The main learner ([`boost::fit`]) grows one conjunction per boosting round,
//! one proposition at a time, by solving weighted L1-regularised logistic
//! regressions on the signs of the current loss gradients. After every round
//! all rule weights are refitted (fully-corrective boosting). A classic
//! single-variable threshold learner ([`tgb::fit_tgb`]) is included as a
//! baseline, and [`eval`] implements the bootstrap / out-of-bag protocol used
//! to compare learners by risk and model complexity.
//!
//! ```
//! use lltboost::{boost, synthetic, LossKind};
//!
//! let data = synthetic::oblique_halfspace(300, 4, 0.05, 1);
//! let cfg = boost::LltConfig { loss: LossKind::Logistic, max_rules: 3, ..Default::default() };
//! let trace = boost::fit(data.x.view(), &data.y, &cfg).unwrap();
//! for stage in &trace.stages {
//!     println!("{} rules: risk {:.3}, complexity {}", stage.ensemble.rules.len(),
//!              stage.train_risk, stage.complexity);
//! }
//! ```

pub mod boost;
pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
mod linalg;
pub mod loss;
pub mod model_file;
pub mod rules;
pub mod sparse_logreg;
pub mod standardize;
pub mod synthetic;
pub mod tgb;

pub use error::{Error, Result};
pub use loss::LossKind;
pub use rules::{Rule, RuleEnsemble, SparseProposition, Task};
pub use standardize::Standardizer;
