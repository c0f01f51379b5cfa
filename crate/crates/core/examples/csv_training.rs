//! CSV in, model out: writes a dataset with string class labels, loads it,
//! trains both learners and compares their held-out error.
//!
//! cargo run --example csv_training

use lltboost::boost::{self, LltConfig};
use lltboost::data::{load_csv, write_csv};
use lltboost::eval::bootstrap_split;
use lltboost::tgb::{fit_tgb, TgbConfig};
use lltboost::{synthetic, LossKind, RuleEnsemble, Task};

fn error_rate(model: &RuleEnsemble, data: &lltboost::data::Dataset) -> f64 {
    let wrong = data
        .x
        .rows()
        .into_iter()
        .zip(&data.y)
        .filter(|(x, y)| model.predict(x.as_slice().unwrap()).unwrap() != **y)
        .count();
    wrong as f64 / data.n() as f64
}

fn main() -> lltboost::Result<()> {
    let mut data = synthetic::oblique_halfspace(800, 5, 0.05, 21);
    data.class_labels = Some(["negative".into(), "positive".into()]);
    let path = std::env::temp_dir().join("lltboost-example.csv");
    write_csv(&data, &path)?;

    let (data, summary) = load_csv(&path, "y", Task::Classification)?;
    println!(
        "{} rows, {} skipped, labels {:?}",
        summary.rows, summary.skipped_rows, data.class_labels
    );

    let split = bootstrap_split(data.n(), 0)?;
    let (train, test) = (data.subset(&split.train), data.subset(&split.test));

    let llt = boost::fit(
        train.x.view(),
        &train.y,
        &LltConfig {
            loss: LossKind::Logistic,
            max_rules: 3,
            ..Default::default()
        },
    )?;
    let tgb = fit_tgb(
        train.x.view(),
        &train.y,
        &TgbConfig {
            loss: LossKind::Logistic,
            max_rules: 3,
            ..Default::default()
        },
    )?;
    for (name, trace) in [("lltboost", &llt), ("tgb", &tgb)] {
        let model = trace.final_ensemble();
        println!(
            "{name:>8}: complexity {:>3}, test error {:.3}",
            model.complexity(),
            error_rate(model, &test)
        );
    }
    Ok(())
}
