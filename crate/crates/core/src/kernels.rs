//! Stationary correlation kernels and Gram matrices.
//!
//! Kernels here have unit variance: `eval(x, x) == 1`. A process variance, when
//! needed, is carried by the caller.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Matérn smoothness restricted to the half-integer orders with closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum MaternNu {
    #[serde(rename = "3/2")]
    ThreeHalves,
    #[serde(rename = "5/2")]
    FiveHalves,
}

impl MaternNu {
    pub fn value(self) -> f64 {
        match self {
            MaternNu::ThreeHalves => 1.5,
            MaternNu::FiveHalves => 2.5,
        }
    }
}

/// Kernel family without its scale parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    Gaussian,
    Matern(MaternNu),
}

/// A validated correlation kernel: family plus inverse lengthscale `phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    phi: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, phi: f64) -> Result<Self> {
        if !(phi.is_finite() && phi > 0.0) {
            return Err(Error::InvalidKernel(format!("phi must be finite and > 0, got {phi}")));
        }
        Ok(Self { family, phi })
    }

    /// `exp(-phi * |s - t|^2)`
    pub fn gaussian(phi: f64) -> Result<Self> {
        Self::new(KernelFamily::Gaussian, phi)
    }

    /// Matérn kernel; only `nu` in {3/2, 5/2} is accepted.
    pub fn matern(nu: f64, phi: f64) -> Result<Self> {
        let nu = if nu == 1.5 {
            MaternNu::ThreeHalves
        } else if nu == 2.5 {
            MaternNu::FiveHalves
        } else {
            return Err(Error::InvalidKernel(format!(
                "unsupported Matérn smoothness {nu}; expected 1.5 or 2.5"
            )));
        };
        Self::new(KernelFamily::Matern(nu), phi)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn with_phi(&self, phi: f64) -> Result<Self> {
        Self::new(self.family, phi)
    }

    /// Correlation between `s` and `t`.
    pub fn eval(&self, s: &[f64], t: &[f64]) -> f64 {
        debug_assert_eq!(s.len(), t.len());
        let r2: f64 = s.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum();
        self.eval_sq_dist(r2)
    }

    /// Correlation as a function of the squared distance.
    pub fn eval_sq_dist(&self, r2: f64) -> f64 {
        if r2 == 0.0 {
            return 1.0;
        }
        match self.family {
            KernelFamily::Gaussian => (-self.phi * r2).exp(),
            KernelFamily::Matern(nu) => {
                let a = 2.0 * nu.value().sqrt() * self.phi * r2.sqrt();
                match nu {
                    MaternNu::ThreeHalves => (1.0 + a) * (-a).exp(),
                    MaternNu::FiveHalves => (1.0 + a + a * a / 3.0) * (-a).exp(),
                }
            }
        }
    }

    /// Gram matrix `(Φ(x_i, x_j))_{ij}`.
    pub fn gram(&self, points: &[Vec<f64>]) -> DMatrix<f64> {
        let n = points.len();
        let mut k = DMatrix::identity(n, n);
        for i in 0..n {
            for j in 0..i {
                let v = self.eval(&points[i], &points[j]);
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        k
    }

    /// Cross-correlation matrix with rows indexed by `a` and columns by `b`.
    pub fn cross(&self, a: &[Vec<f64>], b: &[Vec<f64>]) -> DMatrix<f64> {
        DMatrix::from_fn(a.len(), b.len(), |i, j| self.eval(&a[i], &b[j]))
    }
}
