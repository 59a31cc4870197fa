//! Calibrates against a kernel emulator built from simulator runs instead of the simulator.

use l2calib::numerics::gauss_legendre;
use l2calib::rkhs::interpolate_emulator;
use l2calib::testbed::{default_theta_domain, omega, Design, Example, Example2, SyntheticSystem, TWO_PI};
use l2calib::{l2_calibrate, ComputerModel, KernelSpec, OptimizerConfig, SmootherConfig};

fn main() -> l2calib::Result<()> {
    let simulator = Example2::new(default_theta_domain());
    let m = 40;
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    for i in 0..m {
        for j in 0..m {
            let x = TWO_PI * i as f64 / (m - 1) as f64;
            let t = -2.0 + 4.0 * j as f64 / (m - 1) as f64;
            inputs.push(vec![x, t]);
            outputs.push(simulator.eval(&[x], &[t]));
        }
    }
    let emulator = interpolate_emulator(
        &inputs,
        &outputs,
        1,
        KernelSpec::gaussian(5.0)?,
        default_theta_domain(),
        1e-12,
    )?;
    println!(
        "emulator vs simulator at (1.0, -0.2): {:.6} vs {:.6}",
        emulator.eval(&[1.0], &[-0.2]),
        simulator.eval(&[1.0], &[-0.2])
    );

    let system = SyntheticSystem::new(Example::Example2, 0.01, Design::FixedGrid);
    let data = system.generate(9, 1)?;
    let rule = gauss_legendre(&omega(), 256)?;
    let opt = OptimizerConfig::default();
    let smoother = SmootherConfig::default();
    let with_emulator = l2_calibrate(&data, &smoother, &emulator, &rule, &opt)?;
    let with_simulator = l2_calibrate(&data, &smoother, &simulator, &rule, &opt)?;
    println!("theta_hat with emulator  = {:.5}", with_emulator.theta_hat[0]);
    println!("theta_hat with simulator = {:.5}", with_simulator.theta_hat[0]);
    Ok(())
}
