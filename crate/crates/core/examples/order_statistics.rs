//! Medians with order-statistic intervals, and the curve summaries used by
//! the benchmark.
//!
//! cargo run --example order_statistics

use lltboost::eval::{
    median_with_ci, min_complexity_to_risk_target, order_statistic_coverage,
    risk_at_complexity_target, CiKind, ExtendedValue, MethodCurve, Metric,
};

fn main() -> lltboost::Result<()> {
    for (lo, hi) in [(4, 7), (3, 8)] {
        println!(
            "ranks ({lo}, {hi}) of 10 cover the median with probability {:.4}",
            order_statistic_coverage(10, lo, hi)
        );
    }

    let curve = MethodCurve::from_pairs(&[(3, 0.5), (5, 0.3), (9, 0.1)]);
    for target in [0.5, 0.25, 0.05] {
        println!(
            "risk ≤ {target}: min complexity {}",
            min_complexity_to_risk_target(&curve, Metric::Risk, target)
        );
    }
    for target in [2.0, 6.0, 9.0] {
        println!(
            "complexity ≤ {target}: risk {}",
            risk_at_complexity_target(&curve, Metric::Risk, target)
        );
    }

    let mut values: Vec<ExtendedValue> =
        (1..=10).map(|k| ExtendedValue::Finite(k as f64)).collect();
    let row = median_with_ci(&values, CiKind::Ranks4_7)?;
    println!(
        "1..10: median {} [{}, {}]",
        row.median, row.ci_low, row.ci_high
    );
    values[..6].fill(ExtendedValue::Inf);
    let row = median_with_ci(&values, CiKind::Ranks3_8)?;
    println!(
        "six unreached: median {} [{}, {}]",
        row.median, row.ci_low, row.ci_high
    );
    Ok(())
}
