//! Maximum-likelihood Kennedy–O'Hagan calibration, next to L2, on an imperfect model.

use l2calib::numerics::gauss_legendre;
use l2calib::testbed::{omega, Design, Example, SyntheticSystem};
use l2calib::{
    fit_smoother, ko_calibrate, l2_calibrate_fitted, KoConfig, OptimizerConfig, PhiRule,
    SmootherConfig,
};

fn main() -> l2calib::Result<()> {
    let system = SyntheticSystem::new(Example::Example2, 0.01, Design::FixedGrid);
    let model = system.model();
    let rule = gauss_legendre(&omega(), 256)?;
    let opt = OptimizerConfig::default();

    println!("theta_star = {:.4}", system.theta_star());
    println!("{:>4} {:>10} {:>10} {:>10} {:>10}", "rep", "L2", "KO", "tau2", "eta");
    for r in 1..=5 {
        let data = system.generate(11, r)?;
        let smoother = fit_smoother(&data, &SmootherConfig::default())?;
        let l2 = l2_calibrate_fitted(&smoother, model.as_ref(), &rule, &opt)?;
        let ko_cfg = KoConfig {
            phi_rule: PhiRule::Fixed(smoother.kernel().phi()),
            seed: r,
            ..KoConfig::default()
        };
        let ko = ko_calibrate(&data, model.as_ref(), &ko_cfg, &opt)?;
        println!(
            "{r:>4} {:>10.4} {:>10.4} {:>10.3e} {:>10.3e}",
            l2.theta_hat[0],
            ko.theta_hat[0],
            ko.meta.tau2.unwrap_or(f64::NAN),
            ko.meta.eta.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
