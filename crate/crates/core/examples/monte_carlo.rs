//! A small Monte-Carlo study of all three estimators, written as CSV to stdout.

use l2calib::cli::{run_simulation, ExampleKind, RunConfig};

fn main() -> l2calib::Result<()> {
    let cfg = RunConfig {
        example: ExampleKind::Example1,
        sigma2: vec![0.01],
        replications: 40,
        seed: 1,
        ..RunConfig::default()
    };
    let report = run_simulation(&cfg)?;
    print!("{}", report.to_csv_string());
    for r in &report.rows {
        eprintln!("{}: {} failures, {:.2} s", r.method, r.failures, r.seconds);
    }
    Ok(())
}
