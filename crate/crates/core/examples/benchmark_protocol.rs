//! A reduced bootstrap benchmark (3 repetitions, 5 rules) on two synthetic
//! datasets. Writes the report files to a temporary directory.
//!
//! cargo run --release --example benchmark_protocol

use lltboost::eval::{run_benchmark, write_report, ProtocolConfig};
use lltboost::synthetic::{generate, SyntheticKind};

fn main() -> lltboost::Result<()> {
    let datasets = vec![
        generate(SyntheticKind::ObliqueHalfspace, 600, 6, 0.05, 1),
        generate(SyntheticKind::AxisStaircase, 600, 4, 0.2, 2),
    ];
    let protocol = ProtocolConfig {
        repetitions: 3,
        max_rules: 5,
        tgb_lambdas: vec![0.1, 10.0],
        jobs: 2,
        ..Default::default()
    };
    let report = run_benchmark(&datasets, &protocol)?;

    for d in &report.datasets {
        for m in &d.metrics {
            let t = m.targets.as_ref().unwrap();
            println!(
                "{} / {}: R_T = {:.4}, C_T = {}",
                d.name,
                m.metric.name(),
                t.risk_target,
                t.complexity_target
            );
            for row in &m.complexity_table {
                println!(
                    "    {:<9} min complexity {:?}",
                    row.method,
                    row.per_repetition
                        .iter()
                        .map(ToString::to_string)
                        .collect::<Vec<_>>()
                );
            }
        }
    }
    for t in &report.timings {
        println!("{} {}: {:.3}s per fit", t.dataset, t.method, t.mean_seconds);
    }

    let dir = std::env::temp_dir().join("lltboost-benchmark-example");
    write_report(&report, &dir)?;
    println!("report in {}", dir.display());
    Ok(())
}
