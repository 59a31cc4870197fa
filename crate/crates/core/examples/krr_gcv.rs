//! Kernel ridge regression on noisy data with λ chosen by GCV and φ by leave-one-out.

use l2calib::calibrate::default_phi_grid;
use l2calib::rkhs::{default_lambda_grid, gcv_select, loo_cv_phi, DEFAULT_JITTER};
use l2calib::testbed::{zeta_true, Design, Example, SyntheticSystem, TWO_PI};
use l2calib::{fit_smoother, KernelFamily, KernelSpec, LambdaRule, SmootherConfig};

fn main() -> l2calib::Result<()> {
    let data = SyntheticSystem::new(Example::Example2, 0.1, Design::FixedGrid).generate(42, 1)?;

    let kernel = KernelSpec::gaussian(1.0)?;
    let gcv = gcv_select(&data.points, &data.responses, kernel, &default_lambda_grid())?;
    let best = gcv
        .scores
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    println!("phi = 1: GCV picks lambda = {:.3e} (score {best:.4})", gcv.lambda);

    let phi = loo_cv_phi(
        &data.points,
        &data.responses,
        KernelFamily::Gaussian,
        &default_phi_grid(),
        &LambdaRule::Gcv(default_lambda_grid()),
        DEFAULT_JITTER,
    )?;
    println!("LOO picks phi = {:.4} with lambda = {:.3e}", phi.phi, phi.lambda);

    let fit = fit_smoother(&data, &SmootherConfig::default())?;
    println!("effective degrees of freedom tr A = {:.2}", fit.hat_trace());
    println!("{:>8} {:>10} {:>10}", "x", "fit", "truth");
    for i in 0..=8 {
        let x = TWO_PI * i as f64 / 8.0;
        println!("{x:>8.4} {:>10.4} {:>10.4}", fit.predict(&[x]), zeta_true(x));
    }
    Ok(())
}
