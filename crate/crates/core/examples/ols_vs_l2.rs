//! Compares the L2 and OLS estimators over repeated noisy datasets.

use l2calib::cli::{run_simulation, ExampleKind, RunConfig};
use l2calib::Method;

fn main() -> l2calib::Result<()> {
    let cfg = RunConfig {
        example: ExampleKind::Example2,
        methods: vec![Method::L2, Method::OLS],
        sigma2: vec![0.01, 1.0],
        replications: 100,
        seed: 3,
        ..RunConfig::default()
    };
    let report = run_simulation(&cfg)?;
    println!("{:<4} {:>7} {:>10} {:>10} {:>10}", "", "sigma2", "mean", "sd", "mse");
    for r in &report.rows {
        println!(
            "{:<4} {:>7} {:>10.5} {:>10.3e} {:>10.3e}",
            r.method.as_str(),
            r.sigma2,
            r.mean,
            r.sd,
            r.mse
        );
    }
    Ok(())
}
