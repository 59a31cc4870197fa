//! Computer-model abstraction and physical datasets.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::numerics::{fd_grad, fd_hess, BoxDomain};

/// A deterministic simulator `y^s(x, θ)` over control inputs `x` and calibration
/// parameters `θ ∈ Θ`.
///
/// Gradients and Hessians in `θ` default to central differences; models with
/// closed forms should override them.
pub trait ComputerModel: Send + Sync {
    fn eval(&self, x: &[f64], theta: &[f64]) -> f64;

    fn theta_domain(&self) -> &BoxDomain;

    /// Whether `θ ↦ y^s(x, θ)` is twice differentiable everywhere on Θ.
    fn smooth_in_theta(&self) -> bool {
        true
    }

    fn grad_theta(&self, x: &[f64], theta: &[f64]) -> Vec<f64> {
        fd_grad(|t| self.eval(x, t), theta, None)
    }

    fn hess_theta(&self, x: &[f64], theta: &[f64]) -> DMatrix<f64> {
        fd_hess(|t| self.eval(x, t), theta, None)
    }
}

impl<M: ComputerModel + ?Sized> ComputerModel for &M {
    fn eval(&self, x: &[f64], theta: &[f64]) -> f64 {
        (**self).eval(x, theta)
    }
    fn theta_domain(&self) -> &BoxDomain {
        (**self).theta_domain()
    }
    fn smooth_in_theta(&self) -> bool {
        (**self).smooth_in_theta()
    }
    fn grad_theta(&self, x: &[f64], theta: &[f64]) -> Vec<f64> {
        (**self).grad_theta(x, theta)
    }
    fn hess_theta(&self, x: &[f64], theta: &[f64]) -> DMatrix<f64> {
        (**self).hess_theta(x, theta)
    }
}

/// Closure-backed [`ComputerModel`] with finite-difference derivatives.
pub struct FnModel<F> {
    f: F,
    theta_domain: BoxDomain,
    smooth: bool,
}

impl<F> FnModel<F>
where
    F: Fn(&[f64], &[f64]) -> f64 + Send + Sync,
{
    pub fn new(f: F, theta_domain: BoxDomain) -> Self {
        Self {
            f,
            theta_domain,
            smooth: true,
        }
    }

    pub fn non_smooth(mut self) -> Self {
        self.smooth = false;
        self
    }
}

impl<F> ComputerModel for FnModel<F>
where
    F: Fn(&[f64], &[f64]) -> f64 + Send + Sync,
{
    fn eval(&self, x: &[f64], theta: &[f64]) -> f64 {
        (self.f)(x, theta)
    }
    fn theta_domain(&self) -> &BoxDomain {
        &self.theta_domain
    }
    fn smooth_in_theta(&self) -> bool {
        self.smooth
    }
}

/// Physical observations `{(x_i, y_i)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub points: Vec<Vec<f64>>,
    pub responses: Vec<f64>,
}

impl Dataset {
    pub fn new(points: Vec<Vec<f64>>, responses: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("dataset is empty".into()));
        }
        if points.len() != responses.len() {
            return Err(Error::InvalidArgument(format!(
                "{} points but {} responses",
                points.len(),
                responses.len()
            )));
        }
        let d = points[0].len();
        if d == 0 || points.iter().any(|p| p.len() != d) {
            return Err(Error::InvalidArgument("points must share a nonzero dimension".into()));
        }
        if let Some(i) = points.iter().position(|p| p.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite(format!("point {i}")));
        }
        if let Some(i) = responses.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("response {i}")));
        }
        Ok(Self { points, responses })
    }

    /// One-dimensional convenience constructor.
    pub fn from_1d(x: &[f64], y: &[f64]) -> Result<Self> {
        Self::new(x.iter().map(|v| vec![*v]).collect(), y.to_vec())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }
}
