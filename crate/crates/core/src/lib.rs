//! Calibration of imperfect computer models.
//!
//! A physical system is observed as `y_i = ζ(x_i) + e_i`. Given a simulator
//! `y^s(x, θ)`, the target is the L2 projection
//! `θ* = argmin_θ ||ζ - y^s(·, θ)||_{L2(Ω)}`. This crate provides:
//!
//! * [`kernels`]: Gaussian and Matérn correlation kernels.
//! * [`rkhs`]: kernel ridge regression with GCV / leave-one-out tuning, and
//!   kernel-interpolation emulators.
//! * [`numerics`]: tensor Gauss–Legendre rules, bounded minimization, finite differences.
//! * [`calibrate`]: the L2, OLS and maximum-likelihood Kennedy–O'Hagan estimators.
//! * [`inference`]: sandwich covariances for the L2 and OLS estimators.
//! * [`testbed`]: two synthetic problems with known `θ*`.
//! * [`cli`]: the replication engine, file formats and command implementations
//!   behind the `l2calib` binary.

pub mod calibrate;
pub mod cli;
pub mod error;
pub mod inference;
pub mod kernels;
pub mod model;
pub mod numerics;
pub mod rkhs;
pub mod testbed;

pub use calibrate::{
    fit_smoother, ko_calibrate, l2_calibrate, l2_calibrate_fitted, l2_calibrate_with,
    ols_calibrate, CalibrationEstimate, KoConfig, Method, PhiRule, SmootherConfig,
};
pub use error::{Error, Result};
pub use kernels::{KernelFamily, KernelSpec};
pub use model::{ComputerModel, Dataset, FnModel};
pub use numerics::{BoxDomain, OptimizerConfig, QuadratureRule};
pub use rkhs::{KrrConfig, KrrModel, LambdaRule};
