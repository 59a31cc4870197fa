//! Plug-in standard errors for the L2 and OLS estimators, and the population values.

use l2calib::inference::{sandwich, sandwich_on, MomentPoints};
use l2calib::numerics::gauss_legendre;
use l2calib::testbed::{omega, zeta_true, Design, Example, SyntheticSystem};
use l2calib::{fit_smoother, l2_calibrate_fitted, OptimizerConfig, SmootherConfig};

fn main() -> l2calib::Result<()> {
    let n = 201;
    let sigma2 = 0.1;
    let system = SyntheticSystem::new(Example::Example2, sigma2, Design::UniformRandom { n });
    let model = system.model();
    let rule = gauss_legendre(&omega(), 256)?;

    let data = system.generate(5, 1)?;
    let zeta_hat = fit_smoother(&data, &SmootherConfig::default())?;
    let est = l2_calibrate_fitted(&zeta_hat, model.as_ref(), &rule, &OptimizerConfig::default())?;
    let plug_in = sandwich(&zeta_hat, model.as_ref(), &est.theta_hat)?;
    println!("theta_hat = {:.5}", est.theta_hat[0]);
    println!("sigma2_hat = {:.4}", plug_in.sigma2_hat);
    println!("plug-in SE: L2 {:.4e}, OLS {:.4e}", plug_in.se_l2()[0], plug_in.se_ols()[0]);

    let theta_star = system.theta_star();
    let population = sandwich_on(
        |x| zeta_true(x[0]),
        model.as_ref(),
        &[theta_star],
        sigma2,
        &MomentPoints::uniform(&rule),
        n,
    )?;
    println!(
        "population SE: L2 {:.4e}, OLS {:.4e}",
        population.se_l2()[0],
        population.se_ols()[0]
    );
    let gap = population.gap()?;
    println!(
        "Sigma2 - Sigma1 = {:.4e} (psd: {})",
        gap.gap[(0, 0)],
        gap.is_psd
    );
    Ok(())
}
