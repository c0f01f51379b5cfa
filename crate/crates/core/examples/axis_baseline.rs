//! The single-feature threshold baseline on a regression staircase, with
//! and without the normalised gradient-sum score.
//!
//! cargo run --example axis_baseline

use lltboost::model_file::{print_rules_raw, FitMetadata, ModelFile};
use lltboost::synthetic;
use lltboost::tgb::{fit_tgb, TgbConfig};

fn main() -> lltboost::Result<()> {
    let data = synthetic::axis_staircase(400, 5, 0.1, 2);

    for (label, normalized, lambda) in [
        ("plain", false, 0.0),
        ("normalised λ=1", true, 1.0),
        ("normalised λ=100", true, 100.0),
    ] {
        let cfg = TgbConfig {
            max_rules: 4,
            normalized,
            reg_strength: lambda,
            ..Default::default()
        };
        let trace = fit_tgb(data.x.view(), &data.y, &cfg)?;
        let last = trace.stages.last().unwrap();
        println!(
            "{label:>18}: risk {:.4}, complexity {}",
            last.train_risk, last.complexity
        );
    }

    let trace = fit_tgb(
        data.x.view(),
        &data.y,
        &TgbConfig {
            max_rules: 3,
            ..Default::default()
        },
    )?;
    let model = ModelFile::from_ensemble(
        trace.final_ensemble(),
        &data.feature_names,
        "y",
        None,
        FitMetadata::default(),
    )?;
    println!("\nthree rules on the raw feature scale:");
    print!("{}", print_rules_raw(&model, 3));
    Ok(())
}
