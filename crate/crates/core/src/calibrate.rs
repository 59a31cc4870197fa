//! L2-projection, ordinary-least-squares and Kennedy–O'Hagan (maximum likelihood)
//! calibration.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{KernelFamily, KernelSpec};
use crate::model::{ComputerModel, Dataset};
use crate::numerics::{minimize, nelder_mead, BoxDomain, OptimizerConfig, QuadratureRule};
use crate::rkhs::{self, log_grid, KrrConfig, KrrModel};
use crate::testbed::replication_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    L2,
    OLS,
    KO,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::L2 => "L2",
            Method::OLS => "OLS",
            Method::KO => "KO",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EstimateMeta {
    pub lambda: Option<f64>,
    pub phi: Option<f64>,
    /// KO noise-to-signal ratio `σ²/τ²`.
    pub eta: Option<f64>,
    /// KO discrepancy variance.
    pub tau2: Option<f64>,
    pub evaluations: usize,
    pub iterations: usize,
    /// The estimate sits on a face of Θ; the asymptotic theory assumes an interior point.
    pub on_boundary: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationEstimate {
    pub theta_hat: Vec<f64>,
    pub method: Method,
    /// L2: the achieved distance `||ζ̂ - y^s(·, θ̂)||`. OLS: residual sum of squares.
    /// KO: the minimized negative concentrated log-likelihood (up to constants).
    pub objective_value: f64,
    pub covariance: Option<DMatrix<f64>>,
    pub meta: EstimateMeta,
}

/// How the kernel scale φ is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiRule {
    Fixed(f64),
    LooCv(Vec<f64>),
}

/// 25 log-spaced values over `[0.01, 10]`.
pub fn default_phi_grid() -> Vec<f64> {
    log_grid(0.01, 10.0, 25)
}

impl Default for PhiRule {
    fn default() -> Self {
        PhiRule::LooCv(default_phi_grid())
    }
}

/// Kernel family plus the φ and λ selection rules for the nonparametric fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmootherConfig {
    pub family: KernelFamily,
    pub phi_rule: PhiRule,
    pub krr: KrrConfig,
}

impl Default for SmootherConfig {
    fn default() -> Self {
        Self {
            family: KernelFamily::Gaussian,
            phi_rule: PhiRule::default(),
            krr: KrrConfig::default(),
        }
    }
}

/// Selects φ (and, through it, λ) and fits `ζ̂` to the physical data.
pub fn fit_smoother(data: &Dataset, cfg: &SmootherConfig) -> Result<KrrModel> {
    let phi = select_phi(data, cfg)?;
    rkhs::fit_with_config(
        &data.points,
        &data.responses,
        KernelSpec::new(cfg.family, phi)?,
        &cfg.krr,
    )
}

fn select_phi(data: &Dataset, cfg: &SmootherConfig) -> Result<f64> {
    match &cfg.phi_rule {
        PhiRule::Fixed(phi) => Ok(*phi),
        PhiRule::LooCv(grid) => Ok(rkhs::loo_cv_phi(
            &data.points,
            &data.responses,
            cfg.family,
            grid,
            &cfg.krr.lambda_rule,
            cfg.krr.jitter,
        )?
        .phi),
    }
}

fn boundary_flag(domain: &BoxDomain, theta: &[f64]) -> bool {
    let tol = (0..domain.dim())
        .map(|j| 1e-6 * domain.width(j))
        .fold(f64::INFINITY, f64::min);
    domain.near_boundary(theta, tol)
}

/// `argmin_θ ||ζ̂ - y^s(·, θ)||_{L2(Ω)}` with `ζ̂` fitted from `data`.
pub fn l2_calibrate<M: ComputerModel + ?Sized>(
    data: &Dataset,
    cfg: &SmootherConfig,
    model: &M,
    rule: &QuadratureRule,
    opt: &OptimizerConfig,
) -> Result<CalibrationEstimate> {
    let zeta_hat = fit_smoother(data, cfg)?;
    l2_calibrate_fitted(&zeta_hat, model, rule, opt)
}

/// L2 calibration against an already fitted `ζ̂`.
pub fn l2_calibrate_fitted<M: ComputerModel + ?Sized>(
    zeta_hat: &KrrModel,
    model: &M,
    rule: &QuadratureRule,
    opt: &OptimizerConfig,
) -> Result<CalibrationEstimate> {
    let mut est = l2_calibrate_with(|z| zeta_hat.predict(z), model, rule, opt)?;
    est.meta.lambda = Some(zeta_hat.lambda());
    est.meta.phi = Some(zeta_hat.kernel().phi());
    Ok(est)
}

/// L2 calibration against an arbitrary estimate (or the exact form) of the true process.
pub fn l2_calibrate_with<F, M>(
    zeta: F,
    model: &M,
    rule: &QuadratureRule,
    opt: &OptimizerConfig,
) -> Result<CalibrationEstimate>
where
    F: Fn(&[f64]) -> f64,
    M: ComputerModel + ?Sized,
{
    let zeta_at_nodes: Vec<f64> = rule.nodes.iter().map(|z| zeta(z)).collect();
    if let Some(k) = zeta_at_nodes.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!(
            "process estimate at node {:?}",
            rule.nodes[k]
        )));
    }
    let objective = |theta: &[f64]| -> f64 {
        rule.nodes
            .iter()
            .zip(&rule.weights)
            .zip(&zeta_at_nodes)
            .map(|((z, w), zv)| {
                let d = zv - model.eval(z, theta);
                w * d * d
            })
            .sum()
    };
    let domain = model.theta_domain();
    let best = minimize(objective, domain, opt)?;
    let value = best.value.max(0.0).sqrt();
    Ok(finish(Method::L2, value, best, domain))
}

/// `argmin_θ Σ (y_i - y^s(x_i, θ))^2`.
pub fn ols_calibrate<M: ComputerModel + ?Sized>(
    data: &Dataset,
    model: &M,
    opt: &OptimizerConfig,
) -> Result<CalibrationEstimate> {
    let objective = |theta: &[f64]| -> f64 {
        data.points
            .iter()
            .zip(&data.responses)
            .map(|(x, y)| (y - model.eval(x, theta)).powi(2))
            .sum()
    };
    let domain = model.theta_domain();
    let best = minimize(objective, domain, opt)?;
    Ok(finish(Method::OLS, best.value, best, domain))
}

fn finish(
    method: Method,
    objective_value: f64,
    best: crate::numerics::Minimum,
    domain: &BoxDomain,
) -> CalibrationEstimate {
    let on_boundary = boundary_flag(domain, &best.argmin);
    CalibrationEstimate {
        theta_hat: best.argmin,
        method,
        objective_value,
        covariance: None,
        meta: EstimateMeta {
            evaluations: best.evaluations,
            iterations: best.iterations,
            on_boundary,
            ..Default::default()
        },
    }
}

/// Settings for the maximum-likelihood Kennedy–O'Hagan calibrator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KoConfig {
    pub family: KernelFamily,
    /// φ of the discrepancy process; cross-validation runs on the physical data.
    pub phi_rule: PhiRule,
    /// λ rule used while cross-validating φ.
    pub krr: KrrConfig,
    /// Search bounds for `η = σ²/τ²`.
    pub eta_bounds: (f64, f64),
    /// Random starts over `(θ, ln η)` in addition to the profiled grid optimum.
    pub multistarts: usize,
    pub seed: u64,
}

impl Default for KoConfig {
    fn default() -> Self {
        Self {
            family: KernelFamily::Gaussian,
            phi_rule: PhiRule::default(),
            krr: KrrConfig::default(),
            eta_bounds: (1e-8, 1e8),
            multistarts: 5,
            seed: 0,
        }
    }
}

/// Concentrated Gaussian likelihood of `Y ~ N(y^s(X, θ), τ²(R_φ + ηI))`.
///
/// With `r = Y - y^s(X, θ)`, `τ̂² = rᵀ(R + ηI)⁻¹r / n` and the objective is
/// `(n/2) ln τ̂² + (1/2) ln det(R + ηI)`.
pub struct KoLikelihood<'a, M: ComputerModel + ?Sized> {
    data: &'a Dataset,
    model: &'a M,
    q: DMatrix<f64>,
    s: DVector<f64>,
}

impl<'a, M: ComputerModel + ?Sized> KoLikelihood<'a, M> {
    pub fn new(data: &'a Dataset, model: &'a M, kernel: KernelSpec) -> Result<Self> {
        let n = data.len();
        let gram = kernel.gram(&data.points);
        let (q, s) = rkhs::spectral_parts(&gram);
        let raw_min = gram.symmetric_eigenvalues().min();
        if raw_min < -1e-8 * n as f64 {
            return Err(Error::NotPositiveDefinite(format!(
                "correlation matrix has eigenvalue {raw_min:e}"
            )));
        }
        Ok(Self { data, model, q, s })
    }

    /// `Qᵀ r(θ)` in the eigenbasis of `R`.
    pub fn rotated_residual(&self, theta: &[f64]) -> DVector<f64> {
        let r = DVector::from_iterator(
            self.data.len(),
            self.data
                .points
                .iter()
                .zip(&self.data.responses)
                .map(|(x, y)| y - self.model.eval(x, theta)),
        );
        self.q.tr_mul(&r)
    }

    /// `(objective, τ̂²)` at a rotated residual and `η`.
    pub fn profile(&self, z: &DVector<f64>, eta: f64) -> (f64, f64) {
        let n = self.s.len() as f64;
        let mut quad = 0.0;
        let mut logdet = 0.0;
        for (zk, sk) in z.iter().zip(self.s.iter()) {
            let v = sk + eta;
            quad += zk * zk / v;
            logdet += v.ln();
        }
        let tau2 = (quad / n).max(f64::MIN_POSITIVE);
        (0.5 * n * tau2.ln() + 0.5 * logdet, tau2)
    }

    pub fn objective(&self, theta: &[f64], eta: f64) -> f64 {
        self.profile(&self.rotated_residual(theta), eta).0
    }
}

/// Frequentist Kennedy–O'Hagan calibration: maximizes the GP marginal likelihood
/// over `(θ, η)` with `τ²` profiled out and φ fixed beforehand.
pub fn ko_calibrate<M: ComputerModel + ?Sized>(
    data: &Dataset,
    model: &M,
    cfg: &KoConfig,
    opt: &OptimizerConfig,
) -> Result<CalibrationEstimate> {
    opt.validate()?;
    if data.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "KO calibration needs n >= 3, got {}",
            data.len()
        )));
    }
    let (eta_lo, eta_hi) = cfg.eta_bounds;
    if !(eta_lo > 0.0 && eta_hi > eta_lo && eta_hi.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "invalid η bounds ({eta_lo}, {eta_hi})"
        )));
    }
    let phi = select_phi(
        data,
        &SmootherConfig {
            family: cfg.family,
            phi_rule: cfg.phi_rule.clone(),
            krr: cfg.krr.clone(),
        },
    )?;
    let kernel = KernelSpec::new(cfg.family, phi)?;
    let lik = KoLikelihood::new(data, model, kernel)?;

    let theta_domain = model.theta_domain();
    let q = theta_domain.dim();
    let (ln_lo, ln_hi) = (eta_lo.ln(), eta_hi.ln());
    let eta_domain = BoxDomain::interval(ln_lo, ln_hi)?;
    let eta_opt = OptimizerConfig {
        grid_points: 33,
        tolerance: 1e-6,
        max_iterations: 200,
    };
    let mut evaluations = 0usize;

    // profiled scan: for each θ on the grid, minimize over ln η
    let profiled = |theta: &[f64], evals: &mut usize| -> (f64, f64) {
        let z = lik.rotated_residual(theta);
        match minimize(|le| lik.profile(&z, le[0].exp()).0, &eta_domain, &eta_opt) {
            Ok(m) => {
                *evals += m.evaluations;
                (m.value, m.argmin[0])
            }
            Err(_) => (f64::INFINITY, 0.0),
        }
    };
    let mut scan_evals = 0usize;
    let grid = minimize(
        |theta| profiled(theta, &mut scan_evals).0,
        theta_domain,
        opt,
    )?;
    evaluations += grid.evaluations + scan_evals;
    let (_, grid_ln_eta) = profiled(&grid.argmin, &mut evaluations);

    // joint refinement over (θ, ln η) from the scan optimum and random starts
    let mut lower = theta_domain.lower().to_vec();
    let mut upper = theta_domain.upper().to_vec();
    lower.push(ln_lo);
    upper.push(ln_hi);
    let joint = BoxDomain::new(lower, upper)?;
    let step: Vec<f64> = (0..=q).map(|j| 0.05 * joint.width(j)).collect();
    let joint_obj = |p: &[f64]| lik.objective(&p[..q], p[q].exp());

    let mut starts = Vec::with_capacity(cfg.multistarts + 1);
    let mut first = grid.argmin.clone();
    first.push(grid_ln_eta);
    starts.push(first);
    let mut rng = replication_rng(cfg.seed, 0x4b4f);
    for _ in 0..cfg.multistarts {
        starts.push(
            (0..=q)
                .map(|j| joint.lower()[j] + rng.random::<f64>() * joint.width(j))
                .collect(),
        );
    }

    let mut best: Option<crate::numerics::Minimum> = None;
    let mut iterations = 0;
    for (k, x0) in starts.iter().enumerate() {
        let mut local_step = step.clone();
        if k == 0 {
            // the scan optimum is already accurate to one grid cell in θ
            for (j, s) in local_step.iter_mut().enumerate().take(q) {
                *s = theta_domain.width(j) / (opt.grid_points - 1) as f64;
            }
        }
        let m = nelder_mead(
            joint_obj,
            x0,
            &local_step,
            &joint,
            opt.tolerance,
            opt.max_iterations,
        );
        evaluations += m.evaluations;
        iterations += m.iterations;
        if best.as_ref().is_none_or(|b| m.value < b.value) {
            best = Some(m);
        }
    }
    let mut best = best.expect("at least one start");
    if grid.value < best.value {
        best.argmin = grid.argmin.clone();
        best.argmin.push(grid_ln_eta);
        best.value = grid.value;
    }

    let theta_hat = best.argmin[..q].to_vec();
    let eta = best.argmin[q].exp().clamp(eta_lo, eta_hi);
    let (value, tau2) = lik.profile(&lik.rotated_residual(&theta_hat), eta);
    let on_boundary = boundary_flag(theta_domain, &theta_hat);
    Ok(CalibrationEstimate {
        theta_hat,
        method: Method::KO,
        objective_value: value,
        covariance: None,
        meta: EstimateMeta {
            lambda: None,
            phi: Some(phi),
            eta: Some(eta),
            tau2: Some(tau2),
            evaluations,
            iterations,
            on_boundary,
        },
    })
}
