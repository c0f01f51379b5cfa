//! Fits LLTBoost to a noisy oblique half-space `x1 + x2 ≥ 0` and prints the
//! stage table and the final rules.
//!
//! cargo run --example oblique_halfspace

use lltboost::boost::{self, LltConfig};
use lltboost::model_file::{print_rules, FitMetadata, ModelFile};
use lltboost::{synthetic, LossKind};

fn main() -> lltboost::Result<()> {
    let data = synthetic::oblique_halfspace(1000, 6, 0.05, 11);
    let cfg = LltConfig {
        loss: LossKind::Logistic,
        max_rules: 5,
        seed: 3,
        ..Default::default()
    };
    let trace = boost::fit(data.x.view(), &data.y, &cfg)?;

    println!("rules  complexity  train risk");
    for stage in &trace.stages {
        println!(
            "{:>5}  {:>10}  {:.4}",
            stage.ensemble.rules.len(),
            stage.complexity,
            stage.train_risk
        );
    }

    let ensemble = trace.final_ensemble();
    let errors = data
        .x
        .rows()
        .into_iter()
        .zip(&data.y)
        .filter(|(x, y)| ensemble.predict(x.as_slice().unwrap()).unwrap() != **y)
        .count();
    println!(
        "\ntraining error rate {:.3}\n",
        errors as f64 / data.n() as f64
    );

    let model = ModelFile::from_ensemble(
        ensemble,
        &data.feature_names,
        "y",
        None,
        FitMetadata::default(),
    )?;
    print!("{}", print_rules(&model, 2));
    Ok(())
}
