//! Quadrature, bounded derivative-free minimization and finite differences.

mod diff;
mod domain;
mod optimize;
mod quadrature;

pub use diff::{default_step, fd_grad, fd_hess};
pub use domain::BoxDomain;
pub use optimize::{golden_section, minimize, nelder_mead, Minimum, OptimizerConfig};
pub use quadrature::{gauss_legendre, gauss_legendre_1d, l2_distance_sq, QuadratureRule};
