//! Saves a fitted ensemble as JSON, reloads it and checks the scores agree
//! bit for bit.
//!
//! cargo run --example model_roundtrip

use lltboost::boost::{self, LltConfig};
use lltboost::model_file::{FitMetadata, ModelFile};
use lltboost::{synthetic, LossKind};

fn main() -> lltboost::Result<()> {
    let data = synthetic::rotated_box(500, 4, 0.0, 9);
    let cfg = LltConfig {
        loss: LossKind::Logistic,
        max_rules: 4,
        ..Default::default()
    };
    let trace = boost::fit(data.x.view(), &data.y, &cfg)?;
    let metadata = FitMetadata {
        method: "lltboost".into(),
        seed: cfg.seed,
        library_version: env!("CARGO_PKG_VERSION").into(),
        config: serde_json::to_value(&cfg)?,
    };
    let model = ModelFile::from_ensemble(
        trace.final_ensemble(),
        &data.feature_names,
        "y",
        None,
        metadata,
    )?;

    let path = std::env::temp_dir().join("lltboost-roundtrip.json");
    model.save(&path)?;
    let restored = ModelFile::load(&path)?.to_ensemble()?;

    let original = trace.final_ensemble();
    let mismatches = data
        .x
        .rows()
        .into_iter()
        .filter(|x| {
            let x = x.as_slice().unwrap();
            original.predict_score(x).unwrap().to_bits()
                != restored.predict_score(x).unwrap().to_bits()
        })
        .count();
    println!(
        "{} bytes written to {}",
        std::fs::metadata(&path)?.len(),
        path.display()
    );
    println!("score mismatches after reload: {mismatches}");
    Ok(())
}
