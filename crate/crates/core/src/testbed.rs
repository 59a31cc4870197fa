//! Synthetic calibration problems on `Ω = (0, 2π)` with a scalar parameter.
//!
//! The true process is `ζ(x) = exp(x/10) sin x`. Example 1 is a perfect model
//! (`θ* = -1`) that is not differentiable in `θ` at `θ*`; Example 2 is smooth but
//! imperfect, with `θ* ≈ -0.1789`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ComputerModel, Dataset};
use crate::numerics::{minimize, BoxDomain, OptimizerConfig};

pub const TWO_PI: f64 = 2.0 * PI;

/// `(0, 2π)`.
pub fn omega() -> BoxDomain {
    BoxDomain::interval(0.0, TWO_PI).expect("valid interval")
}

/// `[-2, 2]`.
pub fn default_theta_domain() -> BoxDomain {
    BoxDomain::interval(-2.0, 2.0).expect("valid interval")
}

pub fn zeta_true(x: f64) -> f64 {
    (x / 10.0).exp() * x.sin()
}

/// `∫_0^{2π} (sin θx + cos θx)^2 dx = 2π - (cos 4πθ - 1) / (2θ)`.
fn trig_mass(theta: f64) -> f64 {
    let tail = if theta.abs() < 1e-6 {
        -4.0 * PI * PI * theta
    } else {
        // cos a - 1 = -2 sin^2(a/2) avoids cancellation near zero
        -(TWO_PI * theta).sin().powi(2) / theta
    };
    TWO_PI - tail
}

/// `||ζ - y^s(·, θ)||^2_{L2(0, 2π)}` for Example 2.
pub fn discrepancy_closed_form(theta: f64) -> f64 {
    (theta * theta - theta + 1.0) * trig_mass(theta)
}

/// `||ζ - y^s(·, θ)||^2_{L2(0, 2π)}` for Example 1.
pub fn example1_discrepancy_closed_form(theta: f64) -> f64 {
    (theta + 1.0).powi(2) * trig_mass(theta)
}

/// `y^s(x, θ) = ζ(x) - |θ + 1| (sin θx + cos θx)`.
#[derive(Debug, Clone)]
pub struct Example1 {
    theta_domain: BoxDomain,
}

impl Example1 {
    pub fn new(theta_domain: BoxDomain) -> Self {
        Self { theta_domain }
    }
}

impl Default for Example1 {
    fn default() -> Self {
        Self::new(default_theta_domain())
    }
}

impl ComputerModel for Example1 {
    fn eval(&self, x: &[f64], theta: &[f64]) -> f64 {
        let (x, t) = (x[0], theta[0]);
        zeta_true(x) - (t + 1.0).abs() * ((t * x).sin() + (t * x).cos())
    }

    fn theta_domain(&self) -> &BoxDomain {
        &self.theta_domain
    }

    fn smooth_in_theta(&self) -> bool {
        false
    }
}

/// `y^s(x, θ) = ζ(x) - sqrt(θ² - θ + 1) (sin θx + cos θx)`.
#[derive(Debug, Clone)]
pub struct Example2 {
    theta_domain: BoxDomain,
}

impl Example2 {
    pub fn new(theta_domain: BoxDomain) -> Self {
        Self { theta_domain }
    }
}

impl Default for Example2 {
    fn default() -> Self {
        Self::new(default_theta_domain())
    }
}

impl ComputerModel for Example2 {
    fn eval(&self, x: &[f64], theta: &[f64]) -> f64 {
        let (x, t) = (x[0], theta[0]);
        zeta_true(x) - (t * t - t + 1.0).sqrt() * ((t * x).sin() + (t * x).cos())
    }

    fn theta_domain(&self) -> &BoxDomain {
        &self.theta_domain
    }

    fn grad_theta(&self, x: &[f64], theta: &[f64]) -> Vec<f64> {
        let (x, t) = (x[0], theta[0]);
        let s = (t * t - t + 1.0).sqrt();
        let ds = (2.0 * t - 1.0) / (2.0 * s);
        let (sn, cs) = (t * x).sin_cos();
        let c = sn + cs;
        let dc = x * (cs - sn);
        vec![-(ds * c + s * dc)]
    }

    fn hess_theta(&self, x: &[f64], theta: &[f64]) -> DMatrix<f64> {
        let (x, t) = (x[0], theta[0]);
        let q = t * t - t + 1.0;
        let s = q.sqrt();
        let ds = (2.0 * t - 1.0) / (2.0 * s);
        let d2s = 3.0 / (4.0 * q * s);
        let (sn, cs) = (t * x).sin_cos();
        let c = sn + cs;
        let dc = x * (cs - sn);
        let d2c = -x * x * c;
        DMatrix::from_element(1, 1, -(d2s * c + 2.0 * ds * dc + s * d2c))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Example {
    Example1,
    Example2,
}

/// Physical design on `Ω`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Design {
    /// `x_i = 2πi/50`, `i = 0..=50`.
    FixedGrid,
    /// `n` i.i.d. draws from `U(0, 2π)`.
    UniformRandom { n: usize },
}

impl Design {
    pub fn size(&self) -> usize {
        match self {
            Design::FixedGrid => 51,
            Design::UniformRandom { n } => *n,
        }
    }
}

/// `(seed, stream)`-addressed generator; each replication owns one ChaCha stream.
pub fn replication_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone)]
pub struct SyntheticSystem {
    pub example: Example,
    pub noise_sigma2: f64,
    pub design: Design,
    pub theta_domain: BoxDomain,
}

impl SyntheticSystem {
    pub fn new(example: Example, noise_sigma2: f64, design: Design) -> Self {
        Self {
            example,
            noise_sigma2,
            design,
            theta_domain: default_theta_domain(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_sigma2.is_finite() && self.noise_sigma2 >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "noise variance must be >= 0, got {}",
                self.noise_sigma2
            )));
        }
        if self.design.size() == 0 {
            return Err(Error::InvalidArgument("design must have n >= 1".into()));
        }
        Ok(())
    }

    pub fn model(&self) -> Box<dyn ComputerModel> {
        match self.example {
            Example::Example1 => Box::new(Example1::new(self.theta_domain.clone())),
            Example::Example2 => Box::new(Example2::new(self.theta_domain.clone())),
        }
    }

    /// The L2 projection `θ*` over this system's Θ.
    pub fn theta_star(&self) -> f64 {
        let lo = self.theta_domain.lower()[0];
        let hi = self.theta_domain.upper()[0];
        let f: fn(f64) -> f64 = match self.example {
            Example::Example1 if (lo..=hi).contains(&-1.0) => return -1.0,
            Example::Example1 => example1_discrepancy_closed_form,
            Example::Example2 => discrepancy_closed_form,
        };
        let cfg = OptimizerConfig {
            grid_points: 4001,
            tolerance: 1e-10,
            max_iterations: 200,
        };
        minimize(|t| f(t[0]), &self.theta_domain, &cfg)
            .expect("closed-form discrepancy is finite")
            .argmin[0]
    }

    /// Draws the design (when random) and then `y_i = ζ(x_i) + e_i`, `e_i ~ N(0, σ²)`,
    /// from the stream addressed by `(seed, replication_index)`.
    pub fn generate(&self, seed: u64, replication_index: u64) -> Result<Dataset> {
        self.validate()?;
        let mut rng = replication_rng(seed, replication_index);
        let x: Vec<f64> = match self.design {
            Design::FixedGrid => (0..=50).map(|i| TWO_PI * i as f64 / 50.0).collect(),
            Design::UniformRandom { n } => (0..n).map(|_| rng.random::<f64>() * TWO_PI).collect(),
        };
        let sigma = self.noise_sigma2.sqrt();
        let y: Vec<f64> = x
            .iter()
            .map(|&xi| {
                let e: f64 = rng.sample(StandardNormal);
                zeta_true(xi) + sigma * e
            })
            .collect();
        Dataset::from_1d(&x, &y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{fd_grad, fd_hess};
    use approx::assert_relative_eq;

    #[test]
    fn zeta_values() {
        assert!(zeta_true(PI).abs() < 1e-15);
        assert_relative_eq!(zeta_true(PI / 2.0), (PI / 20.0).exp(), max_relative = 1e-15);
        assert_relative_eq!(zeta_true(PI / 2.0), 1.170_088_787_496_421_9, max_relative = 1e-14);
        for k in 1..100 {
            let x = TWO_PI * k as f64 / 100.0;
            if (x - PI).abs() > 1e-9 {
                assert_eq!(zeta_true(x).signum(), x.sin().signum());
            }
        }
    }

    #[test]
    fn example1_perfect_at_minus_one() {
        let m = Example1::default();
        for k in 0..50 {
            let x = 0.1 + 0.12 * k as f64;
            assert_eq!(m.eval(&[x], &[-1.0]), zeta_true(x));
            assert_relative_eq!(m.eval(&[x], &[0.0]), zeta_true(x) - 1.0, max_relative = 1e-14);
        }
        assert!(!m.smooth_in_theta());
    }

    #[test]
    fn example2_values_and_derivatives() {
        let m = Example2::default();
        let x = 1.3;
        assert_relative_eq!(
            m.eval(&[x], &[1.0]),
            zeta_true(x) - (x.sin() + x.cos()),
            max_relative = 1e-14
        );
        for t in [-1.5, 0.0, 0.7, 0.5] {
            for x in [0.2, 1.0, 3.3, 6.1] {
                let g = m.grad_theta(&[x], &[t])[0];
                let fd = fd_grad(|th| m.eval(&[x], th), &[t], None)[0];
                assert_relative_eq!(g, fd, max_relative = 1e-6);
                let h = m.hess_theta(&[x], &[t])[(0, 0)];
                let fdh = fd_hess(|th| m.eval(&[x], th), &[t], Some(1e-4))[(0, 0)];
                assert!((h - fdh).abs() <= 1e-4 * (1.0 + h.abs()), "{h} vs {fdh}");
            }
        }
    }

    #[test]
    fn closed_form_special_values() {
        assert_relative_eq!(discrepancy_closed_form(1.0), TWO_PI, max_relative = 1e-14);
        assert_eq!(discrepancy_closed_form(0.0), TWO_PI);
        // series branch joins the exact branch continuously
        for t in [0.99e-6, -0.5e-6, 1.01e-6] {
            let direct = (t * t - t + 1.0) * (TWO_PI + (TWO_PI * t).sin().powi(2) / t);
            assert_relative_eq!(discrepancy_closed_form(t), direct, max_relative = 1e-12);
        }
        assert_eq!(example1_discrepancy_closed_form(-1.0), 0.0);
    }

    #[test]
    fn theta_star_example2() {
        let sys = SyntheticSystem::new(Example::Example2, 0.1, Design::FixedGrid);
        let t = sys.theta_star();
        assert!((t + 0.1789).abs() < 5e-4, "{t}");
        let sys1 = SyntheticSystem::new(Example::Example1, 0.1, Design::FixedGrid);
        assert_eq!(sys1.theta_star(), -1.0);
    }

    #[test]
    fn generate_is_deterministic_and_exact_without_noise() {
        let sys = SyntheticSystem::new(Example::Example2, 0.1, Design::FixedGrid);
        let a = sys.generate(7, 3).unwrap();
        let b = sys.generate(7, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sys.generate(7, 4).unwrap());
        assert_eq!(a.len(), 51);
        assert_eq!(a.points[0][0], 0.0);
        assert_relative_eq!(a.points[50][0], TWO_PI, max_relative = 1e-15);

        let quiet = SyntheticSystem::new(Example::Example1, 0.0, Design::UniformRandom { n: 30 });
        let d = quiet.generate(1, 1).unwrap();
        assert_eq!(d.len(), 30);
        for (p, y) in d.points.iter().zip(&d.responses) {
            assert!(p[0] >= 0.0 && p[0] < TWO_PI);
            assert_eq!(*y, zeta_true(p[0]));
        }
    }
}
