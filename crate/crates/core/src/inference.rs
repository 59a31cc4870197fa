//! Plug-in sandwich covariances for the L2 and OLS calibrators.
//!
//! With `g = ∂y^s/∂θ` and `H = ∂²y^s/∂θ∂θᵀ` at `θ̂`, all moments are averages
//! under `x ~ U(Ω)`:
//!
//! * `W  = E[g gᵀ]`
//! * `V  = E[2 (g gᵀ - (ζ - y^s) H)]`
//! * `Σ₂ = 4σ² W + 4 E[(ζ - y^s)² g gᵀ]`
//!
//! and `Cov(θ̂_L2) ≈ (4σ²/n) V⁻¹ W V⁻¹`, `Cov(θ̂_OLS) ≈ (1/n) V⁻¹ Σ₂ V⁻¹`.
//! Empirical averages over the design and quadrature averages with density
//! `1/Vol(Ω)` estimate the same quantities.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::ComputerModel;
use crate::numerics::QuadratureRule;
use crate::rkhs::KrrModel;

/// Points with averaging weights for the moment estimates.
#[derive(Debug, Clone)]
pub struct MomentPoints<'a> {
    pub points: &'a [Vec<f64>],
    pub weights: Vec<f64>,
}

impl<'a> MomentPoints<'a> {
    /// Equal weights `1/n`.
    pub fn empirical(points: &'a [Vec<f64>]) -> Self {
        let w = 1.0 / points.len() as f64;
        Self {
            points,
            weights: vec![w; points.len()],
        }
    }

    /// Quadrature weights divided by `Vol(Ω)`: expectations under `U(Ω)`.
    pub fn uniform(rule: &'a QuadratureRule) -> Self {
        let vol = rule.domain().volume();
        Self {
            points: &rule.nodes,
            weights: rule.weights.iter().map(|w| w / vol).collect(),
        }
    }

    /// Raw quadrature weights: integrals with respect to `dz`.
    pub fn unnormalized(rule: &'a QuadratureRule) -> Self {
        Self {
            points: &rule.nodes,
            weights: rule.weights.clone(),
        }
    }

    fn iter(&self) -> impl Iterator<Item = (&Vec<f64>, f64)> {
        self.points.iter().zip(self.weights.iter().copied())
    }
}

fn require_smooth<M: ComputerModel + ?Sized>(model: &M) -> Result<()> {
    if model.smooth_in_theta() {
        Ok(())
    } else {
        Err(Error::NonSmoothModel)
    }
}

fn gradient<M: ComputerModel + ?Sized>(model: &M, x: &[f64], theta: &[f64]) -> Result<Vec<f64>> {
    let g = model.grad_theta(x, theta);
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("θ-gradient at x = {x:?}")));
    }
    Ok(g)
}

fn add_outer(acc: &mut DMatrix<f64>, g: &[f64], scale: f64) {
    let q = g.len();
    for j in 0..q {
        for k in 0..q {
            acc[(j, k)] += scale * g[j] * g[k];
        }
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// `σ̂² = ||(I - A)Y||² / (n - tr A)`.
pub fn estimate_sigma2(zeta_hat: &KrrModel) -> Result<f64> {
    let dof = zeta_hat.len() as f64 - zeta_hat.hat_trace();
    if !(dof > 1e-8) {
        return Err(Error::DegenerateDof(dof));
    }
    Ok(zeta_hat.residuals().norm_squared() / dof)
}

/// `Ŵ = (1/n) Σ g(x_i) g(x_i)ᵀ`.
pub fn estimate_w<M: ComputerModel + ?Sized>(
    model: &M,
    theta: &[f64],
    points: &[Vec<f64>],
) -> Result<DMatrix<f64>> {
    estimate_w_on(model, theta, &MomentPoints::empirical(points))
}

pub fn estimate_w_on<M: ComputerModel + ?Sized>(
    model: &M,
    theta: &[f64],
    at: &MomentPoints<'_>,
) -> Result<DMatrix<f64>> {
    require_smooth(model)?;
    if at.points.is_empty() {
        return Err(Error::InvalidArgument("no points for moment estimate".into()));
    }
    let q = theta.len();
    let mut w = DMatrix::zeros(q, q);
    for (x, wt) in at.iter() {
        add_outer(&mut w, &gradient(model, x, theta)?, wt);
    }
    Ok(symmetrize(w))
}

/// `V̂ = (1/n) Σ 2 [g gᵀ - (ζ̂(x_i) - y^s(x_i, θ)) H(x_i)]`.
pub fn estimate_v<M, F>(
    model: &M,
    zeta: F,
    theta: &[f64],
    points: &[Vec<f64>],
) -> Result<DMatrix<f64>>
where
    M: ComputerModel + ?Sized,
    F: Fn(&[f64]) -> f64,
{
    estimate_v_on(model, zeta, theta, &MomentPoints::empirical(points))
}

pub fn estimate_v_on<M, F>(
    model: &M,
    zeta: F,
    theta: &[f64],
    at: &MomentPoints<'_>,
) -> Result<DMatrix<f64>>
where
    M: ComputerModel + ?Sized,
    F: Fn(&[f64]) -> f64,
{
    require_smooth(model)?;
    if at.points.is_empty() {
        return Err(Error::InvalidArgument("no points for moment estimate".into()));
    }
    let q = theta.len();
    let mut v = DMatrix::zeros(q, q);
    for (x, wt) in at.iter() {
        let g = gradient(model, x, theta)?;
        let h = model.hess_theta(x, theta);
        if h.iter().any(|e| !e.is_finite()) {
            return Err(Error::NonFinite(format!("θ-Hessian at x = {x:?}")));
        }
        let resid = zeta(x) - model.eval(x, theta);
        add_outer(&mut v, &g, 2.0 * wt);
        v -= h * (2.0 * wt * resid);
    }
    Ok(symmetrize(v))
}

/// `Σ̂₂ = 4σ̂² Ŵ + 4 avg[(ζ̂ - y^s)² g gᵀ]`.
pub fn estimate_sigma2_matrix<M, F>(
    model: &M,
    zeta: F,
    theta: &[f64],
    sigma2: f64,
    at: &MomentPoints<'_>,
) -> Result<DMatrix<f64>>
where
    M: ComputerModel + ?Sized,
    F: Fn(&[f64]) -> f64,
{
    let w = estimate_w_on(model, theta, at)?;
    let q = theta.len();
    let mut extra = DMatrix::zeros(q, q);
    for (x, wt) in at.iter() {
        let g = gradient(model, x, theta)?;
        let d = zeta(x) - model.eval(x, theta);
        add_outer(&mut extra, &g, 4.0 * wt * d * d);
    }
    Ok(symmetrize(w * (4.0 * sigma2) + extra))
}

fn checked_inverse(v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = v.clone().symmetric_eigenvalues();
    let max = eig.amax();
    let min_abs = eig.iter().map(|e| e.abs()).fold(f64::INFINITY, f64::min);
    if !(max > 0.0) || min_abs <= 1e-12 * max {
        return Err(Error::SingularCurvature(format!("eigenvalues {:?}", eig.as_slice())));
    }
    v.clone()
        .try_inverse()
        .ok_or_else(|| Error::SingularCurvature("inversion failed".into()))
}

fn sandwich_product(v: &DMatrix<f64>, meat: &DMatrix<f64>, scale: f64) -> Result<DMatrix<f64>> {
    if v.shape() != meat.shape() || !v.is_square() {
        return Err(Error::InvalidArgument(format!(
            "shape mismatch {:?} vs {:?}",
            v.shape(),
            meat.shape()
        )));
    }
    let vi = checked_inverse(v)?;
    Ok(symmetrize(&vi * meat * &vi * scale))
}

/// `(4σ²/n) V⁻¹ W V⁻¹`.
pub fn l2_cov(v: &DMatrix<f64>, w: &DMatrix<f64>, sigma2: f64, n: usize) -> Result<DMatrix<f64>> {
    sandwich_product(v, w, 4.0 * sigma2 / n as f64)
}

/// `(1/n) V⁻¹ Σ₂ V⁻¹`.
pub fn ols_cov(v: &DMatrix<f64>, sigma2_matrix: &DMatrix<f64>, n: usize) -> Result<DMatrix<f64>> {
    sandwich_product(v, sigma2_matrix, 1.0 / n as f64)
}

/// `Σ₂ - Σ₁`, which is PSD whenever both come from the same moments.
#[derive(Debug, Clone)]
pub struct EfficiencyGap {
    pub gap: DMatrix<f64>,
    pub min_eigenvalue: f64,
    pub is_psd: bool,
}

pub fn efficiency_gap(sigma1: &DMatrix<f64>, sigma2: &DMatrix<f64>) -> Result<EfficiencyGap> {
    if sigma1.shape() != sigma2.shape() || !sigma1.is_square() {
        return Err(Error::InvalidArgument(format!(
            "shape mismatch {:?} vs {:?}",
            sigma1.shape(),
            sigma2.shape()
        )));
    }
    let gap = symmetrize(sigma2 - sigma1);
    let min_eigenvalue = gap.clone().symmetric_eigenvalues().min();
    let scale = sigma1.amax().max(sigma2.amax()).max(1.0);
    Ok(EfficiencyGap {
        is_psd: min_eigenvalue >= -1e-8 * scale,
        min_eigenvalue,
        gap,
    })
}

/// All plug-in quantities at one estimate.
#[derive(Debug, Clone)]
pub struct SandwichEstimate {
    pub v_hat: DMatrix<f64>,
    pub w_hat: DMatrix<f64>,
    pub sigma2_hat: f64,
    /// `Σ̂₂`.
    pub sigma2_matrix: DMatrix<f64>,
    pub cov_l2: DMatrix<f64>,
    pub cov_ols: DMatrix<f64>,
    pub n: usize,
}

impl SandwichEstimate {
    /// `Σ̂₁ = 4σ̂² Ŵ`.
    pub fn sigma1(&self) -> DMatrix<f64> {
        &self.w_hat * (4.0 * self.sigma2_hat)
    }

    pub fn gap(&self) -> Result<EfficiencyGap> {
        efficiency_gap(&self.sigma1(), &self.sigma2_matrix)
    }

    pub fn se_l2(&self) -> Vec<f64> {
        self.cov_l2.diagonal().iter().map(|v| v.max(0.0).sqrt()).collect()
    }

    pub fn se_ols(&self) -> Vec<f64> {
        self.cov_ols.diagonal().iter().map(|v| v.max(0.0).sqrt()).collect()
    }
}

/// Plug-in sandwich from a fitted `ζ̂`: empirical moments over its design points and
/// `σ̂²` from its residuals.
pub fn sandwich<M: ComputerModel + ?Sized>(
    zeta_hat: &KrrModel,
    model: &M,
    theta_hat: &[f64],
) -> Result<SandwichEstimate> {
    let sigma2 = estimate_sigma2(zeta_hat)?;
    let at = MomentPoints::empirical(zeta_hat.design());
    sandwich_on(|x| zeta_hat.predict(x), model, theta_hat, sigma2, &at, zeta_hat.len())
}

/// Sandwich with caller-supplied `ζ`, `σ²` and averaging points; with the exact
/// process and a [`MomentPoints::uniform`] rule this gives the population values.
pub fn sandwich_on<M, F>(
    zeta: F,
    model: &M,
    theta: &[f64],
    sigma2: f64,
    at: &MomentPoints<'_>,
    n: usize,
) -> Result<SandwichEstimate>
where
    M: ComputerModel + ?Sized,
    F: Fn(&[f64]) -> f64,
{
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    let w_hat = estimate_w_on(model, theta, at)?;
    let v_hat = estimate_v_on(model, &zeta, theta, at)?;
    let sigma2_matrix = estimate_sigma2_matrix(model, &zeta, theta, sigma2, at)?;
    let cov_l2 = l2_cov(&v_hat, &w_hat, sigma2, n)?;
    let cov_ols = ols_cov(&v_hat, &sigma2_matrix, n)?;
    Ok(SandwichEstimate {
        v_hat,
        w_hat,
        sigma2_hat: sigma2,
        sigma2_matrix,
        cov_l2,
        cov_ols,
        n,
    })
}
