//! L2 calibration of an imperfect simulator from one noisy dataset.

use l2calib::numerics::gauss_legendre;
use l2calib::testbed::{omega, Design, Example, SyntheticSystem};
use l2calib::{l2_calibrate, OptimizerConfig, SmootherConfig};

fn main() -> l2calib::Result<()> {
    let system = SyntheticSystem::new(Example::Example2, 0.1, Design::FixedGrid);
    let data = system.generate(7, 1)?;
    let model = system.model();
    let rule = gauss_legendre(&omega(), 256)?;

    let est = l2_calibrate(
        &data,
        &SmootherConfig::default(),
        model.as_ref(),
        &rule,
        &OptimizerConfig::default(),
    )?;
    println!("theta_hat      = {:.6}", est.theta_hat[0]);
    println!("theta_star     = {:.6}", system.theta_star());
    println!("L2 distance    = {:.6}", est.objective_value);
    println!("lambda, phi    = {:.3e}, {:.4}", est.meta.lambda.unwrap(), est.meta.phi.unwrap());
    println!("on boundary    = {}", est.meta.on_boundary);
    Ok(())
}
