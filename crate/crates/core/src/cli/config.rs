use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::calibrate::{default_phi_grid, KoConfig, Method, PhiRule, SmootherConfig};
use crate::error::{Error, Result};
use crate::kernels::{KernelFamily, KernelSpec};
use crate::model::ComputerModel;
use crate::numerics::{gauss_legendre, BoxDomain, OptimizerConfig, QuadratureRule};
use crate::rkhs::{self, default_lambda_grid, KrrConfig, LambdaRule, DEFAULT_JITTER};
use crate::testbed::{self, Design, Example, Example1, Example2, SyntheticSystem};

use super::io::read_simulator_runs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExampleKind {
    Example1,
    Example2,
    /// Simulator given by runs in `simulator_data`, emulated by kernel interpolation.
    Custom,
}

/// A run configuration, read from a single JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub example: ExampleKind,
    pub methods: Vec<Method>,
    pub sigma2: Vec<f64>,
    pub replications: usize,
    pub seed: u64,
    pub design: Design,
    pub kernel: KernelFamily,
    /// GCV grid for λ.
    pub lambda_grid: Vec<f64>,
    /// Leave-one-out grid for φ; a single value fixes φ.
    pub phi_grid: Vec<f64>,
    pub jitter: f64,
    pub quadrature_m: usize,
    pub optimizer: OptimizerConfig,
    pub ko_multistarts: usize,
    pub theta_domain: BoxDomain,
    /// Control-variable region; defaults to `(0, 2π)` for the bundled examples.
    pub omega: Option<BoxDomain>,
    pub simulator_data: Option<PathBuf>,
    pub emulator_phi: f64,
    pub workers: Option<usize>,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            example: ExampleKind::Example2,
            methods: vec![Method::L2, Method::OLS, Method::KO],
            sigma2: vec![0.1],
            replications: 1000,
            seed: 0,
            design: Design::FixedGrid,
            kernel: KernelFamily::Gaussian,
            lambda_grid: default_lambda_grid(),
            phi_grid: default_phi_grid(),
            jitter: DEFAULT_JITTER,
            quadrature_m: 256,
            optimizer: OptimizerConfig::default(),
            ko_multistarts: 5,
            theta_domain: testbed::default_theta_domain(),
            omega: None,
            simulator_data: None,
            emulator_phi: 1.0,
            workers: None,
            output: None,
        }
    }
}

fn check_grid(grid: &[f64], what: &str) -> Result<()> {
    if grid.is_empty()
        || grid.iter().any(|v| !(v.is_finite() && *v > 0.0))
        || grid.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(Error::Config(format!(
            "{what} must be a non-empty, strictly increasing list of positive values"
        )));
    }
    Ok(())
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line() as u64,
            column: e.column(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Config("replications must be >= 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("methods must be non-empty".into()));
        }
        if self.sigma2.is_empty() || self.sigma2.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::Config("sigma2 must be a non-empty list of values >= 0".into()));
        }
        check_grid(&self.lambda_grid, "lambda_grid")?;
        check_grid(&self.phi_grid, "phi_grid")?;
        if !(self.jitter.is_finite() && self.jitter >= 0.0) {
            return Err(Error::Config("jitter must be >= 0".into()));
        }
        if self.quadrature_m == 0 {
            return Err(Error::Config("quadrature_m must be >= 1".into()));
        }
        if !(self.emulator_phi.is_finite() && self.emulator_phi > 0.0) {
            return Err(Error::Config("emulator_phi must be > 0".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be >= 1".into()));
        }
        if let Design::UniformRandom { n } = self.design {
            if n < 3 {
                return Err(Error::Config("uniform_random design needs n >= 3".into()));
            }
        }
        self.optimizer
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if self.example == ExampleKind::Custom {
            if self.simulator_data.is_none() {
                return Err(Error::Config("example 'custom' needs simulator_data".into()));
            }
            if self.omega.is_none() {
                return Err(Error::Config("example 'custom' needs omega".into()));
            }
        }
        Ok(())
    }

    pub fn smoother(&self) -> SmootherConfig {
        SmootherConfig {
            family: self.kernel,
            phi_rule: if self.phi_grid.len() == 1 {
                PhiRule::Fixed(self.phi_grid[0])
            } else {
                PhiRule::LooCv(self.phi_grid.clone())
            },
            krr: KrrConfig {
                lambda_rule: LambdaRule::Gcv(self.lambda_grid.clone()),
                jitter: self.jitter,
            },
        }
    }

    pub fn ko(&self, phi: f64, seed: u64) -> KoConfig {
        KoConfig {
            family: self.kernel,
            phi_rule: PhiRule::Fixed(phi),
            krr: self.smoother().krr,
            multistarts: self.ko_multistarts,
            seed,
            ..KoConfig::default()
        }
    }

    pub fn omega(&self) -> BoxDomain {
        self.omega.clone().unwrap_or_else(testbed::omega)
    }

    pub fn quadrature(&self) -> Result<QuadratureRule> {
        gauss_legendre(&self.omega(), self.quadrature_m)
    }

    pub fn system(&self, sigma2: f64) -> Result<SyntheticSystem> {
        let example = match self.example {
            ExampleKind::Example1 => Example::Example1,
            ExampleKind::Example2 => Example::Example2,
            ExampleKind::Custom => {
                return Err(Error::Config(
                    "simulation needs a known true process (example1 or example2)".into(),
                ))
            }
        };
        Ok(SyntheticSystem {
            example,
            noise_sigma2: sigma2,
            design: self.design,
            theta_domain: self.theta_domain.clone(),
        })
    }

    /// The computer model named by `example`.
    pub fn model(&self) -> Result<Box<dyn ComputerModel>> {
        Ok(match self.example {
            ExampleKind::Example1 => Box::new(Example1::new(self.theta_domain.clone())),
            ExampleKind::Example2 => Box::new(Example2::new(self.theta_domain.clone())),
            ExampleKind::Custom => {
                let path = self.simulator_data.as_ref().expect("validated");
                let (inputs, outputs) = read_simulator_runs(path, self.omega().dim())?;
                let q = inputs[0].len() - self.omega().dim();
                if q != self.theta_domain.dim() {
                    return Err(Error::Config(format!(
                        "simulator_data has {q} parameter columns but theta_domain has {}",
                        self.theta_domain.dim()
                    )));
                }
                Box::new(rkhs::interpolate_emulator(
                    &inputs,
                    &outputs,
                    self.omega().dim(),
                    KernelSpec::new(self.kernel, self.emulator_phi)?,
                    self.theta_domain.clone(),
                    self.jitter,
                )?)
            }
        })
    }
}
