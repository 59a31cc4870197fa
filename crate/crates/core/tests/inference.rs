use l2calib::inference::{
    efficiency_gap, estimate_sigma2, estimate_sigma2_matrix, estimate_v, estimate_w,
    estimate_w_on, l2_cov, ols_cov, sandwich, sandwich_on, MomentPoints,
};
use l2calib::numerics::{fd_hess, gauss_legendre};
use l2calib::rkhs::fit;
use l2calib::testbed::{
    default_theta_domain, omega, zeta_true, Design, Example, Example2, SyntheticSystem, TWO_PI,
};
use l2calib::{fit_smoother, BoxDomain, ComputerModel, FnModel, KernelSpec, SmootherConfig};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn theta_star() -> f64 {
    SyntheticSystem::new(Example::Example2, 0.1, Design::FixedGrid).theta_star()
}

fn grid(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| vec![TWO_PI * i as f64 / (n - 1) as f64]).collect()
}

#[test]
fn w_on_201_points_matches_quadrature() {
    let model = Example2::new(default_theta_domain());
    let t = [theta_star()];
    let rule = gauss_legendre(&omega(), 512).unwrap();
    let oracle = rule.integrate(|x| model.grad_theta(x, &t)[0].powi(2)) / TWO_PI;
    let w = estimate_w(&model, &t, &grid(201)).unwrap()[(0, 0)];
    assert!((w - oracle).abs() <= 0.02 * oracle, "{w} vs {oracle}");
}

#[test]
fn v_matches_curvature_of_empirical_objective() {
    let sys = SyntheticSystem::new(Example::Example2, 0.1, Design::FixedGrid);
    let data = sys.generate(8, 1).unwrap();
    let zeta_hat = fit_smoother(&data, &SmootherConfig::default()).unwrap();
    let model = Example2::new(default_theta_domain());
    let theta = [-0.18];
    let v = estimate_v(&model, |x| zeta_hat.predict(x), &theta, &data.points).unwrap()[(0, 0)];
    let n = data.len() as f64;
    let objective = |t: &[f64]| {
        data.points
            .iter()
            .map(|x| (zeta_hat.predict(x) - model.eval(x, t)).powi(2))
            .sum::<f64>()
            / n
    };
    let fd = fd_hess(objective, &theta, Some(1e-4))[(0, 0)];
    assert!((v - fd).abs() <= 1e-3 * fd.abs(), "{v} vs {fd}");
}

#[test]
fn population_v_is_positive_and_ols_is_less_efficient() {
    let model = Example2::new(default_theta_domain());
    let rule = gauss_legendre(&omega(), 256).unwrap();
    let at = MomentPoints::uniform(&rule);
    let s = sandwich_on(|x| zeta_true(x[0]), &model, &[theta_star()], 0.1, &at, 51).unwrap();
    assert!(s.v_hat[(0, 0)] > 0.0);
    assert!(s.cov_ols[(0, 0)] > s.cov_l2[(0, 0)]);
    let gap = s.gap().unwrap();
    assert!(gap.gap[(0, 0)] > 0.0 && gap.is_psd);
}

#[test]
fn perfect_model_has_equal_covariances() {
    // y^s(x, θ) = ζ(x) + (θ - 0.3) x + (θ - 0.3)^2 cos x is exact at θ = 0.3
    let model = FnModel::new(
        |x: &[f64], t: &[f64]| zeta_true(x[0]) + (t[0] - 0.3) * x[0] + (t[0] - 0.3).powi(2) * x[0].cos(),
        BoxDomain::interval(-1.0, 1.0).unwrap(),
    );
    let pts = grid(60);
    let at = MomentPoints::empirical(&pts);
    let s = sandwich_on(|x| zeta_true(x[0]), &model, &[0.3], 0.25, &at, 60).unwrap();
    let four_w = &s.w_hat * (4.0 * 0.25);
    assert!((&s.sigma2_matrix - &four_w).amax() <= 1e-12 * four_w.amax());
    assert!((&s.cov_l2 - &s.cov_ols).amax() <= 1e-10 * s.cov_l2.amax());
    assert!((&s.v_hat - &s.w_hat * 2.0).amax() <= 1e-6 * s.v_hat.amax());
    assert!(s.gap().unwrap().gap.amax() <= 1e-12);
}

#[test]
fn convention_switch_rescales_by_volume() {
    let model = Example2::new(default_theta_domain());
    let rule = gauss_legendre(&omega(), 256).unwrap();
    let t = [theta_star()];
    let uniform = sandwich_on(|x| zeta_true(x[0]), &model, &t, 0.1, &MomentPoints::uniform(&rule), 100)
        .unwrap();
    let raw = sandwich_on(
        |x| zeta_true(x[0]),
        &model,
        &t,
        0.1,
        &MomentPoints::unnormalized(&rule),
        100,
    )
    .unwrap();
    let vol = TWO_PI;
    for (a, b) in [
        (&uniform.w_hat, &raw.w_hat),
        (&uniform.v_hat, &raw.v_hat),
        (&uniform.sigma2_matrix, &raw.sigma2_matrix),
    ] {
        assert!((a * vol - b).amax() <= 1e-12 * b.amax());
    }
    // V⁻¹ M V⁻¹ picks up one inverse factor of Vol: the convention does not cancel
    assert!((&raw.cov_l2 * vol - &uniform.cov_l2).amax() <= 1e-12 * uniform.cov_l2.amax());
    assert!((&raw.cov_ols * vol - &uniform.cov_ols).amax() <= 1e-12 * uniform.cov_ols.amax());

    // empirical means over a fine grid estimate the uniform-convention moments
    let pts = grid(4001);
    let emp = sandwich_on(|x| zeta_true(x[0]), &model, &t, 0.1, &MomentPoints::empirical(&pts), 100)
        .unwrap();
    assert!((emp.cov_l2[(0, 0)] - uniform.cov_l2[(0, 0)]).abs() <= 1e-3 * uniform.cov_l2[(0, 0)]);
    assert!((emp.cov_ols[(0, 0)] - uniform.cov_ols[(0, 0)]).abs() <= 1e-3 * uniform.cov_ols[(0, 0)]);
}

#[test]
fn two_parameter_covariances_are_symmetric_psd() {
    let model = FnModel::new(
        |x: &[f64], t: &[f64]| t[0] * x[0].sin() + (t[1] * x[0]).cos(),
        BoxDomain::new(vec![-2.0, -2.0], vec![2.0, 2.0]).unwrap(),
    );
    let pts = grid(80);
    let at = MomentPoints::empirical(&pts);
    let s = sandwich_on(|x| zeta_true(x[0]), &model, &[0.6, 0.4], 0.3, &at, 80).unwrap();
    for c in [&s.cov_l2, &s.cov_ols] {
        assert!((c - c.transpose()).amax() <= 1e-12 * c.amax());
        assert!(c.clone().symmetric_eigenvalues().min() >= -1e-8 * c.amax());
    }
    let extra = &s.sigma2_matrix - s.sigma1();
    assert!(extra.symmetric_eigenvalues().min() >= -1e-8);
}

#[test]
fn linear_model_w_does_not_depend_on_theta() {
    let model = FnModel::new(
        |x: &[f64], t: &[f64]| t[0] * x[0] + t[1] * x[0] * x[0],
        BoxDomain::new(vec![-5.0, -5.0], vec![5.0, 5.0]).unwrap(),
    );
    let pts = grid(30);
    let mut oracle = DMatrix::zeros(2, 2);
    for p in &pts {
        let h = DVector::from_vec(vec![p[0], p[0] * p[0]]);
        oracle += &h * h.transpose() / 30.0;
    }
    for t in [[0.0, 0.0], [1.5, -2.0], [-3.0, 4.0]] {
        let w = estimate_w(&model, &t, &pts).unwrap();
        assert!((&w - &oracle).amax() <= 1e-6 * oracle.amax());
    }
}

#[test]
fn sigma2_estimates_cover_the_truth() {
    let sys = SyntheticSystem::new(Example::Example2, 0.1, Design::FixedGrid);
    let mut inside = 0;
    for r in 1..=100 {
        let data = sys.generate(31, r).unwrap();
        let zeta_hat = fit_smoother(&data, &SmootherConfig::default()).unwrap();
        let s2 = estimate_sigma2(&zeta_hat).unwrap();
        if (0.05..=0.2).contains(&s2) {
            inside += 1;
        }
    }
    assert!(inside >= 95, "{inside} of 100");
}

#[test]
fn sigma2_limits() {
    let pts = grid(30);
    let y: Vec<f64> = pts.iter().map(|p| zeta_true(p[0])).collect();
    let interp = fit(&pts, &y, KernelSpec::gaussian(1.0).unwrap(), 1e-12).unwrap();
    assert!(estimate_sigma2(&interp).unwrap() < 1e-6);

    let noise: Vec<f64> = (0..30).map(|i| ((i * 7919) % 13) as f64 / 13.0 - 0.5).collect();
    let flat = fit(&pts, &noise, KernelSpec::gaussian(1.0).unwrap(), 1e8).unwrap();
    let mean_sq = noise.iter().map(|v| v * v).sum::<f64>() / 30.0;
    let s2 = estimate_sigma2(&flat).unwrap();
    assert!((s2 - mean_sq).abs() <= 1e-6 * mean_sq, "{s2} vs {mean_sq}");
}

#[test]
fn covariance_homogeneity() {
    let v = DMatrix::from_row_slice(2, 2, &[3.0, 0.5, 0.5, 2.0]);
    let w = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.7]);
    let a = l2_cov(&v, &w, 0.4, 50).unwrap();
    let b = l2_cov(&v, &w, 0.4, 100).unwrap();
    assert!((&a * 0.5 - &b).amax() <= 1e-15);
    let c = ols_cov(&v, &w, 50).unwrap();
    let d = ols_cov(&v, &w, 100).unwrap();
    assert!((&c * 0.5 - &d).amax() <= 1e-15);
}

#[test]
fn plug_in_sandwich_from_data() {
    let sys = SyntheticSystem::new(Example::Example2, 0.1, Design::FixedGrid);
    let data = sys.generate(3, 1).unwrap();
    let zeta_hat = fit_smoother(&data, &SmootherConfig::default()).unwrap();
    let model = Example2::new(default_theta_domain());
    let s = sandwich(&zeta_hat, &model, &[-0.18]).unwrap();
    assert_eq!(s.n, 51);
    assert!(s.se_l2()[0] > 0.0 && s.se_l2()[0] < 0.05);
    assert!(s.se_ols()[0] >= s.se_l2()[0] * (1.0 - 1e-9) || s.gap().unwrap().is_psd);
    let w_uniform = estimate_w_on(&model, &[-0.18], &MomentPoints::empirical(&data.points)).unwrap();
    assert_eq!(w_uniform, s.w_hat);
    let sm = estimate_sigma2_matrix(
        &model,
        |x| zeta_hat.predict(x),
        &[-0.18],
        s.sigma2_hat,
        &MomentPoints::empirical(&data.points),
    )
    .unwrap();
    assert_eq!(sm, s.sigma2_matrix);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gap_of_rank_one_increase_is_psd(
        a in prop::collection::vec(-2.0f64..2.0, 9),
        c in prop::collection::vec(-2.0f64..2.0, 3),
    ) {
        let b = DMatrix::from_row_slice(3, 3, &a);
        let sigma = &b * b.transpose();
        let cv = DVector::from_vec(c);
        let bigger = &sigma + &cv * cv.transpose();
        let gap = efficiency_gap(&sigma, &bigger).unwrap();
        prop_assert!(gap.is_psd, "min eigenvalue {}", gap.min_eigenvalue);
        let same = efficiency_gap(&sigma, &sigma).unwrap();
        prop_assert!(same.gap.amax() == 0.0);
    }
}
