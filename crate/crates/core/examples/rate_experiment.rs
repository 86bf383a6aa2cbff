//! A replicated rate experiment through the harness, with the rate table.

use aol::harness::{run_experiment, table1_report, ExperimentConfig};

fn main() -> aol::Result<()> {
    let cfg = ExperimentConfig::from_json(
        r#"{
            "world": {"kind": "hypercube-risk", "p": 1},
            "estimators": [
                {"kind": "aol", "epsilon": {"rule": "poly", "p": 1}, "target": {"setting": "risk-poly", "p": 1}},
                {"kind": "skeleton", "epsilon": {"rule": "poly", "p": 1}, "target": {"setting": "skeleton-poly", "p": 1}},
                {"kind": "erm", "grid": {"rule": "poly", "p": 1}}
            ],
            "n_grid": [128, 256, 512, 1024, 2048],
            "replications": 40,
            "base_seed": 1
        }"#,
    )?;
    let report = run_experiment(&cfg)?;
    for e in &report.summary.estimators {
        println!(
            "{:<10} slope {:+.3} ± {:.3}",
            e.estimator,
            e.slope.unwrap_or(f64::NAN),
            e.slope_stderr.unwrap_or(f64::NAN)
        );
    }
    print!("{}", table1_report(&[report.summary.clone()]).to_text());
    if let Some(dir) = std::env::args().nth(1) {
        aol::harness::write_outputs(&report, std::path::Path::new(&dir), true)?;
        println!("wrote {dir}/rows.csv, summary.json, rates.svg");
    }
    Ok(())
}
