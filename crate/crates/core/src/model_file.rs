//! JSON persistence and text rendering of fitted ensembles.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rules::{Rule, RuleEnsemble, SparseProposition, Task};
use crate::standardize::Standardizer;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub feature: usize,
    pub name: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropositionRecord {
    pub terms: Vec<Term>,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleRecord {
    pub weight: f64,
    pub propositions: Vec<PropositionRecord>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FitMetadata {
    pub method: String,
    pub seed: u64,
    pub library_version: String,
    /// Learner configuration as it was used.
    pub config: serde_json::Value,
}

/// On-disk model. Weights and thresholds refer to standardised features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub task: Task,
    pub feature_names: Vec<String>,
    pub target_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_labels: Option<[String; 2]>,
    pub standardizer: Standardizer,
    pub intercept: f64,
    pub rules: Vec<RuleRecord>,
    pub complexity: usize,
    pub metadata: FitMetadata,
}

impl ModelFile {
    pub fn from_ensemble(
        ensemble: &RuleEnsemble,
        feature_names: &[String],
        target_name: &str,
        class_labels: Option<[String; 2]>,
        metadata: FitMetadata,
    ) -> Result<Self> {
        if feature_names.len() != ensemble.dim() {
            return Err(Error::DimensionMismatch {
                expected: ensemble.dim(),
                got: feature_names.len(),
            });
        }
        let rules = ensemble
            .rules
            .iter()
            .map(|rule| RuleRecord {
                weight: rule.weight,
                propositions: rule
                    .propositions()
                    .iter()
                    .map(|p| PropositionRecord {
                        terms: p
                            .terms()
                            .map(|(j, w)| Term {
                                feature: j,
                                name: feature_names[j].clone(),
                                weight: w,
                            })
                            .collect(),
                        threshold: p.threshold(),
                    })
                    .collect(),
            })
            .collect();
        Ok(ModelFile {
            format_version: FORMAT_VERSION,
            task: ensemble.task,
            feature_names: feature_names.to_vec(),
            target_name: target_name.to_string(),
            class_labels,
            standardizer: ensemble.standardizer.clone(),
            intercept: ensemble.intercept,
            rules,
            complexity: ensemble.complexity(),
            metadata,
        })
    }

    /// Rebuilds the ensemble; term names must agree with `feature_names`.
    pub fn to_ensemble(&self) -> Result<RuleEnsemble> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::InvalidArgument(format!(
                "unsupported model format version {}",
                self.format_version
            )));
        }
        if self.feature_names.len() != self.standardizer.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.standardizer.dim(),
                got: self.feature_names.len(),
            });
        }
        let mut rules = Vec::with_capacity(self.rules.len());
        for r in &self.rules {
            let mut props = Vec::with_capacity(r.propositions.len());
            for p in &r.propositions {
                for t in &p.terms {
                    match self.feature_names.get(t.feature) {
                        Some(name) if *name == t.name => {}
                        _ => {
                            return Err(Error::InvalidArgument(format!(
                                "term refers to feature {} ({:?}) which does not match the header",
                                t.feature, t.name
                            )))
                        }
                    }
                }
                props.push(SparseProposition::new(
                    p.terms.iter().map(|t| (t.feature, t.weight)),
                    p.threshold,
                )?);
            }
            rules.push(Rule::new(props, r.weight)?);
        }
        let ensemble =
            RuleEnsemble::new(self.intercept, rules, self.task, self.standardizer.clone())?;
        if ensemble.complexity() != self.complexity {
            return Err(Error::InvalidArgument(format!(
                "stored complexity {} differs from recomputed {}",
                self.complexity,
                ensemble.complexity()
            )));
        }
        Ok(ensemble)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

fn signed(v: f64, precision: usize) -> String {
    let s = format!("{:.*}", precision, v.abs());
    if v < 0.0 && s.bytes().any(|b| b.is_ascii_digit() && b != b'0') {
        format!("\u{2212}{s}")
    } else {
        format!("+{s}")
    }
}

fn unsigned(v: f64, precision: usize) -> String {
    let s = signed(v, precision);
    s.strip_prefix('+').map(str::to_string).unwrap_or(s)
}

fn linear_form(terms: &[(f64, &str)], precision: usize) -> String {
    let mut out = String::new();
    for (k, (w, name)) in terms.iter().enumerate() {
        let magnitude = format!("{:.*}", precision, w.abs());
        if k == 0 {
            if *w < 0.0 {
                out.push('\u{2212}');
            }
        } else {
            out.push_str(if *w < 0.0 { " \u{2212} " } else { " + " });
        }
        let _ = write!(out, "{magnitude}·{name}");
    }
    out
}

/// Rule listing with weights in standardised feature units:
///
/// ```text
/// score = +0.25
/// +1.50 if 0.30·x1 − 0.20·x4 ≥ 1.20
/// complexity: 3
/// ```
pub fn print_rules(model: &ModelFile, precision: usize) -> String {
    render(model, precision, false)
}

/// Same as [`print_rules`] with each proposition rewritten over the raw
/// feature values (`w/σ` weights, threshold shifted by `Σ w·μ/σ`).
pub fn print_rules_raw(model: &ModelFile, precision: usize) -> String {
    render(model, precision, true)
}

fn render(model: &ModelFile, precision: usize, raw: bool) -> String {
    let mut out = format!("score = {}\n", signed(model.intercept, precision));
    for rule in &model.rules {
        let conditions: Vec<String> = rule
            .propositions
            .iter()
            .map(|p| {
                let mut threshold = p.threshold;
                let terms: Vec<(f64, &str)> = p
                    .terms
                    .iter()
                    .filter(|t| t.weight != 0.0)
                    .map(|t| {
                        if raw {
                            let (m, s) = (
                                model.standardizer.means[t.feature],
                                model.standardizer.stds[t.feature],
                            );
                            threshold += t.weight * m / s;
                            (t.weight / s, t.name.as_str())
                        } else {
                            (t.weight, t.name.as_str())
                        }
                    })
                    .collect();
                format!(
                    "{} ≥ {}",
                    linear_form(&terms, precision),
                    unsigned(threshold, precision)
                )
            })
            .collect();
        let _ = writeln!(
            out,
            "{} if {}",
            signed(rule.weight, precision),
            conditions.join(" & ")
        );
    }
    let _ = writeln!(out, "complexity: {}", model.complexity);
    out
}
