//! Penalized least squares in the native space of a kernel (kernel ridge
//! regression), its tuning-parameter selectors, and kernel-interpolation
//! emulators.
//!
//! The estimator minimizes `(1/n) Σ (y_i - f(x_i))^2 + λ ||f||^2` over the RKHS.
//! By the representer theorem `f(x) = Σ u_i Φ(x_i, x)` with `(K + nλI) u = Y`,
//! which is the GP predictive mean under a nugget `σ² = nλ`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{KernelFamily, KernelSpec};
use crate::model::ComputerModel;
use crate::numerics::BoxDomain;

/// Diagonal regularizer added to every Gram matrix before factorization.
pub const DEFAULT_JITTER: f64 = 1e-10;

/// Relative tolerance under which two selection scores count as tied.
const TIE_RTOL: f64 = 1e-10;

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && n >= 1);
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

/// 33 values, four per decade, over `[1e-8, 1]`.
pub fn default_lambda_grid() -> Vec<f64> {
    log_grid(1e-8, 1.0, 33)
}

/// How λ is chosen for a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaRule {
    Fixed(f64),
    Gcv(Vec<f64>),
    /// `λ = c n^{-2μ/(2μ+d)}`.
    RateDefault { mu: f64, c: f64 },
}

impl Default for LambdaRule {
    fn default() -> Self {
        LambdaRule::Gcv(default_lambda_grid())
    }
}

impl LambdaRule {
    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            LambdaRule::Fixed(l) if !(l.is_finite() && *l > 0.0) => {
                Err(Error::InvalidArgument(format!("fixed λ must be > 0, got {l}")))
            }
            LambdaRule::Gcv(grid) => validate_grid(grid, "λ"),
            LambdaRule::RateDefault { mu, c } => {
                if !(*mu > d as f64 / 2.0) || !(c.is_finite() && *c > 0.0) {
                    Err(Error::InvalidArgument(format!(
                        "rate default needs mu > d/2 = {} and c > 0, got mu={mu}, c={c}",
                        d as f64 / 2.0
                    )))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

fn validate_grid(grid: &[f64], what: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument(format!("{what} grid is empty")));
    }
    if grid.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidArgument(format!("{what} grid values must be > 0")));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(format!(
            "{what} grid must be strictly increasing"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KrrConfig {
    pub lambda_rule: LambdaRule,
    pub jitter: f64,
}

impl Default for KrrConfig {
    fn default() -> Self {
        Self {
            lambda_rule: LambdaRule::default(),
            jitter: DEFAULT_JITTER,
        }
    }
}

/// `λ = c n^{-2μ/(2μ+d)}`, the rate-optimal order for a native space embedded in `H^μ`.
pub fn default_lambda(n: usize, mu: f64, d: usize, c: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    LambdaRule::RateDefault { mu, c }.validate(d)?;
    let df = d as f64;
    Ok(c * (n as f64).powf(-2.0 * mu / (2.0 * mu + df)))
}

/// A fitted penalized regressor `ζ̂(x) = Σ u_i Φ(x_i, x)`.
#[derive(Debug, Clone)]
pub struct KrrModel {
    kernel: KernelSpec,
    design: Vec<Vec<f64>>,
    responses: DVector<f64>,
    coeffs: DVector<f64>,
    lambda: f64,
    jitter: f64,
    fitted: DVector<f64>,
    hat_trace: f64,
    gram: DMatrix<f64>,
}

impl KrrModel {
    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }
    pub fn design(&self) -> &[Vec<f64>] {
        &self.design
    }
    pub fn responses(&self) -> &DVector<f64> {
        &self.responses
    }
    pub fn coeffs(&self) -> &DVector<f64> {
        &self.coeffs
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn jitter(&self) -> f64 {
        self.jitter
    }
    pub fn fitted(&self) -> &DVector<f64> {
        &self.fitted
    }
    /// `tr A(λ)`, the effective degrees of freedom of the smoother.
    pub fn hat_trace(&self) -> f64 {
        self.hat_trace
    }
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }
    pub fn len(&self) -> usize {
        self.design.len()
    }
    pub fn is_empty(&self) -> bool {
        self.design.is_empty()
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.design
            .iter()
            .zip(self.coeffs.iter())
            .map(|(xi, ui)| ui * self.kernel.eval(xi, x))
            .sum()
    }

    /// `||ζ̂||^2 = uᵀ K u`.
    pub fn rkhs_norm_sq(&self) -> f64 {
        self.coeffs.dot(&(&self.gram * &self.coeffs)).max(0.0)
    }

    pub fn residuals(&self) -> DVector<f64> {
        &self.responses - &self.fitted
    }
}

fn check_inputs(points: &[Vec<f64>], y: &[f64]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("need at least one design point".into()));
    }
    if points.len() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "{} points but {} responses",
            points.len(),
            y.len()
        )));
    }
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("response {i} is {}", y[i])));
    }
    if let Some(i) = points.iter().position(|p| p.iter().any(|v| !v.is_finite())) {
        return Err(Error::NonFinite(format!("design point {i}")));
    }
    Ok(())
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.symmetric_eigenvalues().min()
}

fn fit_with_gram(
    points: &[Vec<f64>],
    y: &[f64],
    kernel: KernelSpec,
    gram: DMatrix<f64>,
    lambda: f64,
    jitter: f64,
) -> Result<KrrModel> {
    let n = points.len();
    let nugget = jitter + n as f64 * lambda;
    let mut system = gram.clone();
    for i in 0..n {
        system[(i, i)] += nugget;
    }
    let chol = Cholesky::new(system.clone()).ok_or_else(|| Error::Singular {
        min_eigenvalue: min_eigenvalue(&system),
    })?;
    let yv = DVector::from_column_slice(y);
    let coeffs = chol.solve(&yv);
    if coeffs.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular {
            min_eigenvalue: min_eigenvalue(&system),
        });
    }
    let fitted = &gram * &coeffs;
    // tr(K (K + cI)^{-1}) = n - c tr((K + cI)^{-1}) = n - c ||L^{-1}||_F^2
    let l_inv = chol
        .l()
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or(Error::Singular {
            min_eigenvalue: f64::NAN,
        })?;
    let hat_trace = (n as f64 - nugget * l_inv.norm_squared()).max(0.0);
    Ok(KrrModel {
        kernel,
        design: points.to_vec(),
        responses: yv,
        coeffs,
        lambda,
        jitter,
        fitted,
        hat_trace,
        gram,
    })
}

/// Fits the penalized regressor at a fixed `λ > 0` with the default jitter.
pub fn fit(points: &[Vec<f64>], y: &[f64], kernel: KernelSpec, lambda: f64) -> Result<KrrModel> {
    fit_with_jitter(points, y, kernel, lambda, DEFAULT_JITTER)
}

/// Solves `(K + (jitter + nλ) I) u = Y`. `λ = 0` is allowed when `jitter > 0`.
pub fn fit_with_jitter(
    points: &[Vec<f64>],
    y: &[f64],
    kernel: KernelSpec,
    lambda: f64,
    jitter: f64,
) -> Result<KrrModel> {
    check_inputs(points, y)?;
    if !(lambda.is_finite() && lambda >= 0.0) || !(jitter.is_finite() && jitter >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need λ >= 0 and jitter >= 0, got λ={lambda}, jitter={jitter}"
        )));
    }
    if lambda == 0.0 && jitter == 0.0 {
        return Err(Error::InvalidArgument("λ and jitter cannot both be zero".into()));
    }
    fit_with_gram(points, y, kernel, kernel.gram(points), lambda, jitter)
}

/// Fits with λ chosen by `config.lambda_rule`.
pub fn fit_with_config(
    points: &[Vec<f64>],
    y: &[f64],
    kernel: KernelSpec,
    config: &KrrConfig,
) -> Result<KrrModel> {
    check_inputs(points, y)?;
    config.lambda_rule.validate(points[0].len())?;
    let gram = kernel.gram(points);
    let lambda = match &config.lambda_rule {
        LambdaRule::Fixed(l) => *l,
        LambdaRule::RateDefault { mu, c } => default_lambda(points.len(), *mu, points[0].len(), *c)?,
        LambdaRule::Gcv(grid) => {
            let spec = Spectral::new(&gram, y, config.jitter);
            spec.gcv_select(grid, y)?.lambda
        }
    };
    fit_with_gram(points, y, kernel, gram, lambda, config.jitter)
}

/// Eigendecomposition `K = Q S Qᵀ` shared by every λ in a sweep.
struct Spectral {
    q: DMatrix<f64>,
    s: DVector<f64>,
    qty: DVector<f64>,
    jitter: f64,
}

impl Spectral {
    fn new(gram: &DMatrix<f64>, y: &[f64], jitter: f64) -> Self {
        let eig = SymmetricEigen::new(gram.clone());
        let s = eig.eigenvalues.map(|v| v.max(0.0));
        let qty = eig.eigenvectors.tr_mul(&DVector::from_column_slice(y));
        Self {
            q: eig.eigenvectors,
            s,
            qty,
            jitter,
        }
    }

    fn n(&self) -> usize {
        self.s.len()
    }

    /// Eigenvalues of `I - A(λ)`.
    fn residual_factors(&self, lambda: f64) -> DVector<f64> {
        let c = self.jitter + self.n() as f64 * lambda;
        self.s.map(|s| c / (s + c))
    }

    fn gcv(&self, lambda: f64) -> f64 {
        let n = self.n() as f64;
        let f = self.residual_factors(lambda);
        let rss: f64 = f.iter().zip(self.qty.iter()).map(|(f, z)| (f * z).powi(2)).sum();
        let tr = f.sum();
        (rss / n) / (tr / n).powi(2)
    }

    fn gcv_select(&self, grid: &[f64], y: &[f64]) -> Result<GcvSelection> {
        validate_grid(grid, "λ")?;
        let scores: Vec<f64> = grid.iter().map(|&l| self.gcv(l)).collect();
        let k = pick(&scores, y, true).ok_or(Error::NoFiniteObjective)?;
        Ok(GcvSelection {
            lambda: grid[k],
            grid: grid.to_vec(),
            scores,
        })
    }

    fn residuals(&self, lambda: f64) -> DVector<f64> {
        let f = self.residual_factors(lambda);
        &self.q * self.qty.component_mul(&f)
    }

    /// Diagonal of `A(λ)`.
    fn leverages(&self, lambda: f64) -> DVector<f64> {
        let c = self.jitter + self.n() as f64 * lambda;
        let a = self.s.map(|s| s / (s + c));
        DVector::from_fn(self.n(), |i, _| {
            self.q
                .row(i)
                .iter()
                .zip(a.iter())
                .map(|(qik, ak)| qik * qik * ak)
                .sum()
        })
    }
}

/// Index of the minimal finite score. Scores within a small relative band of the
/// minimum are tied and resolved toward the end (`prefer_last`) or the start.
fn pick(scores: &[f64], y: &[f64], prefer_last: bool) -> Option<usize> {
    let best = scores
        .iter()
        .copied()
        .filter(|s| s.is_finite())
        .min_by(f64::total_cmp)?;
    let scale = y.iter().map(|v| v * v).sum::<f64>() / y.len() as f64;
    let band = best + TIE_RTOL * scale.max(best.abs());
    let mut tied = scores.iter().enumerate().filter(|(_, s)| **s <= band);
    if prefer_last {
        tied.next_back().map(|(k, _)| k)
    } else {
        tied.next().map(|(k, _)| k)
    }
}

/// λ chosen by generalized cross-validation together with the whole score curve.
#[derive(Debug, Clone)]
pub struct GcvSelection {
    pub lambda: f64,
    pub grid: Vec<f64>,
    pub scores: Vec<f64>,
}

/// Minimizes `GCV(λ) = (1/n)||(I-A)Y||^2 / [(1/n) tr(I-A)]^2` over `grid`,
/// breaking ties toward the larger λ.
pub fn gcv_select(
    points: &[Vec<f64>],
    y: &[f64],
    kernel: KernelSpec,
    grid: &[f64],
) -> Result<GcvSelection> {
    gcv_select_with_jitter(points, y, kernel, grid, DEFAULT_JITTER)
}

pub fn gcv_select_with_jitter(
    points: &[Vec<f64>],
    y: &[f64],
    kernel: KernelSpec,
    grid: &[f64],
    jitter: f64,
) -> Result<GcvSelection> {
    check_inputs(points, y)?;
    Spectral::new(&kernel.gram(points), y, jitter).gcv_select(grid, y)
}

/// φ chosen by leave-one-out cross-validation.
#[derive(Debug, Clone)]
pub struct PhiSelection {
    pub phi: f64,
    /// λ selected for the winning φ.
    pub lambda: f64,
    pub grid: Vec<f64>,
    pub scores: Vec<f64>,
}

/// Leave-one-out residuals `e_i / (1 - A_ii)` for a fixed kernel and λ.
///
/// Each equals the residual of a refit without point `i` that keeps the same
/// nugget `jitter + nλ`.
pub fn loo_residuals(
    points: &[Vec<f64>],
    y: &[f64],
    kernel: KernelSpec,
    lambda: f64,
    jitter: f64,
) -> Result<Vec<f64>> {
    check_inputs(points, y)?;
    let spec = Spectral::new(&kernel.gram(points), y, jitter);
    Ok(loo_from_spectral(&spec, lambda))
}

fn loo_from_spectral(spec: &Spectral, lambda: f64) -> Vec<f64> {
    let e = spec.residuals(lambda);
    let a = spec.leverages(lambda);
    e.iter()
        .zip(a.iter())
        .map(|(e, a)| {
            if *a >= 1.0 - 1e-12 {
                f64::INFINITY
            } else {
                e / (1.0 - a)
            }
        })
        .collect()
}

/// For each candidate φ, picks λ by `lambda_rule` and scores the mean squared
/// leave-one-out residual. Ties resolve toward the smaller φ.
pub fn loo_cv_phi(
    points: &[Vec<f64>],
    y: &[f64],
    family: KernelFamily,
    phi_grid: &[f64],
    lambda_rule: &LambdaRule,
    jitter: f64,
) -> Result<PhiSelection> {
    check_inputs(points, y)?;
    validate_grid(phi_grid, "φ")?;
    lambda_rule.validate(points[0].len())?;
    let n = points.len();
    let mut lambdas = Vec::with_capacity(phi_grid.len());
    let mut scores = Vec::with_capacity(phi_grid.len());
    for &phi in phi_grid {
        let kernel = KernelSpec::new(family, phi)?;
        let spec = Spectral::new(&kernel.gram(points), y, jitter);
        let lambda = match lambda_rule {
            LambdaRule::Fixed(l) => *l,
            LambdaRule::RateDefault { mu, c } => default_lambda(n, *mu, points[0].len(), *c)?,
            LambdaRule::Gcv(grid) => match spec.gcv_select(grid, y) {
                Ok(sel) => sel.lambda,
                Err(_) => {
                    lambdas.push(f64::NAN);
                    scores.push(f64::INFINITY);
                    continue;
                }
            },
        };
        let loo = loo_from_spectral(&spec, lambda);
        let score = loo.iter().map(|r| r * r).sum::<f64>() / n as f64;
        lambdas.push(lambda);
        scores.push(if score.is_finite() { score } else { f64::INFINITY });
    }
    let k = if phi_grid.len() == 1 {
        0
    } else {
        pick(&scores, y, false).ok_or(Error::NoFiniteObjective)?
    };
    let lambda = if lambdas[k].is_finite() {
        lambdas[k]
    } else {
        return Err(Error::NoFiniteObjective);
    };
    Ok(PhiSelection {
        phi: phi_grid[k],
        lambda,
        grid: phi_grid.to_vec(),
        scores,
    })
}

/// Kernel interpolant of simulator runs over `Ω × Θ`, usable as a computer model.
#[derive(Debug, Clone)]
pub struct KernelEmulator {
    model: KrrModel,
    control_dim: usize,
    theta_domain: BoxDomain,
}

impl KernelEmulator {
    pub fn surface(&self) -> &KrrModel {
        &self.model
    }
}

impl ComputerModel for KernelEmulator {
    fn eval(&self, x: &[f64], theta: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.control_dim);
        let mut z = Vec::with_capacity(x.len() + theta.len());
        z.extend_from_slice(x);
        z.extend_from_slice(theta);
        self.model.predict(&z)
    }

    fn theta_domain(&self) -> &BoxDomain {
        &self.theta_domain
    }
}

/// Interpolates simulator outputs at `inputs` (each `x` followed by `θ`) with
/// λ = 0 plus jitter.
pub fn interpolate_emulator(
    inputs: &[Vec<f64>],
    outputs: &[f64],
    control_dim: usize,
    kernel: KernelSpec,
    theta_domain: BoxDomain,
    jitter: f64,
) -> Result<KernelEmulator> {
    check_inputs(inputs, outputs)?;
    let dim = control_dim + theta_domain.dim();
    if let Some(i) = inputs.iter().position(|p| p.len() != dim) {
        return Err(Error::InvalidArgument(format!(
            "sample {i} has {} coordinates, expected {dim}",
            inputs[i].len()
        )));
    }
    for i in 0..inputs.len() {
        for j in 0..i {
            if inputs[i] == inputs[j] {
                return Err(Error::DuplicateSamples(j, i));
            }
        }
    }
    let jitter = if jitter > 0.0 { jitter } else { DEFAULT_JITTER };
    let model = fit_with_jitter(inputs, outputs, kernel, 0.0, jitter)?;
    Ok(KernelEmulator {
        model,
        control_dim,
        theta_domain,
    })
}

/// Eigenvectors and zero-clamped eigenvalues of a Gram matrix.
pub(crate) fn spectral_parts(gram: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let eig: SymmetricEigen<f64, Dyn> = SymmetricEigen::new(gram.clone());
    (eig.eigenvectors, eig.eigenvalues.map(|v| v.max(0.0)))
}
