//! Convergence predictors for RFF-KLMS on data from a Gaussian kernel
//! expansion: the feature correlation matrix `R_zz`, step-size bounds from its
//! largest eigenvalue, the optimal weights `Z_C a`, and the steady-state MSE
//! of the weight-error covariance recursion.
//!
//! The finite-`D` approximation residual of the kernel expansion is treated
//! as zero throughout, so the optimal MSE is `σ_η²`.

mod correlation;
mod steady_state;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use correlation::{rzz_closed_form, rzz_monte_carlo, CorrelationModel};

use crate::error::{check_dim, Error, Result};
use crate::kernel::RandomFeatureMap;

pub const DEFAULT_EIGEN_TOL: f64 = 1e-13;
pub const DEFAULT_EIGEN_MAX_ITERS: usize = 100_000;
pub const DEFAULT_RECURSION_TOL: f64 = 1e-10;
/// Cap on the number of recursion steps the fixed-point search may span.
pub const DEFAULT_RECURSION_MAX_ITERS: u64 = 1 << 62;

/// Largest eigenvalue of the (positive semi-definite) correlation matrix by
/// power iteration with a Rayleigh-quotient stopping rule
/// `|λ_{k+1} - λ_k| < tol · |λ_k|`.
pub fn max_eigenvalue(model: &CorrelationModel, tol: f64, max_iters: usize) -> Result<f64> {
    let dim = model.dim();
    // A fixed, non-symmetric start keeps the iteration deterministic and away
    // from structured orthogonal subspaces.
    let mut x: Vec<f64> = (0..dim)
        .map(|i| 1.0 + ((i as f64 + 1.0) * 0.618_033_988_749_895).fract())
        .collect();
    normalize(&mut x);
    let mut y = vec![0.0; dim];
    let mut lambda = f64::NAN;
    for _ in 0..max_iters {
        model.matvec(&x, &mut y);
        let next = crate::kernel::dot(&x, &y);
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Ok(0.0);
        }
        if (next - lambda).abs() < tol * lambda.abs() {
            return Ok(next);
        }
        lambda = next;
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / norm;
        }
    }
    Err(Error::NonConvergence {
        what: "power iteration",
        max_iters: max_iters as u64,
    })
}

fn normalize(x: &mut [f64]) {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    x.iter_mut().for_each(|v| *v /= norm);
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepSizeBound {
    pub lambda_max: f64,
    /// `2 / λ_max`: convergence in the mean.
    pub mu_max: f64,
    /// `1 / λ_max`: convergence of the weight-error covariance.
    pub mu_max_variance: f64,
}

pub fn step_size_bound(model: &CorrelationModel) -> Result<StepSizeBound> {
    let lambda_max = max_eigenvalue(model, DEFAULT_EIGEN_TOL, DEFAULT_EIGEN_MAX_ITERS)?;
    if !(lambda_max > 0.0) {
        return Err(Error::NumericalBreakdown(format!(
            "correlation matrix has no positive eigenvalue (λ_max = {lambda_max})"
        )));
    }
    Ok(StepSizeBound {
        lambda_max,
        mu_max: 2.0 / lambda_max,
        mu_max_variance: 1.0 / lambda_max,
    })
}

/// `θ_opt = Σ_m a_m z(c_m)`.
pub fn optimal_theta(
    map: &RandomFeatureMap,
    centers: &[Vec<f64>],
    coeffs: &[f64],
) -> Result<Vec<f64>> {
    check_dim(centers.len(), coeffs.len())?;
    let mut theta = vec![0.0; map.feature_dim()];
    let mut z = vec![0.0; map.feature_dim()];
    for (c, a) in centers.iter().zip(coeffs) {
        map.transform_into(c, &mut z)?;
        for (t, z) in theta.iter_mut().zip(&z) {
            *t += a * z;
        }
    }
    Ok(theta)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub steady_state_mse: f64,
    pub excess_mse: f64,
    /// Recursion steps spanned before the stopping test passed.
    pub iterations: u64,
}

/// Steady-state MSE `tr(R A_∞) + σ_η²` from the recursion started at
/// `A_0 = θ_opt θ_optᵀ` (zero-initialized filter). Refuses step sizes outside
/// `(0, 1/λ_max)`.
pub fn steady_state_mse(
    model: &CorrelationModel,
    theta_opt: &[f64],
    mu: f64,
    sigma_eta: f64,
    tol: f64,
    max_iters: u64,
) -> Result<SteadyState> {
    let bound = step_size_bound(model)?;
    steady_state_with_bound(model, &bound, theta_opt, mu, sigma_eta, tol, max_iters)
}

fn check_mu(bound: &StepSizeBound, mu: f64) -> Result<()> {
    if mu > 0.0 && mu < bound.mu_max_variance {
        Ok(())
    } else {
        Err(Error::BoundViolation {
            mu,
            mu_max: bound.mu_max,
            mu_max_variance: bound.mu_max_variance,
        })
    }
}

fn steady_state_with_bound(
    model: &CorrelationModel,
    bound: &StepSizeBound,
    theta_opt: &[f64],
    mu: f64,
    sigma_eta: f64,
    tol: f64,
    max_iters: u64,
) -> Result<SteadyState> {
    check_mu(bound, mu)?;
    check_dim(model.dim(), theta_opt.len())?;
    if !(sigma_eta >= 0.0) {
        return Err(Error::invalid(format!("sigma_eta must be >= 0, got {sigma_eta}")));
    }
    let eigen = steady_state::symmetric_eigen(model)?;
    let out =
        steady_state::iterate_to_fixed_point(model, &eigen, theta_opt, mu, sigma_eta, tol, max_iters)?;
    Ok(SteadyState {
        steady_state_mse: out.excess_mse + sigma_eta * sigma_eta,
        excess_mse: out.excess_mse,
        iterations: out.steps,
    })
}

/// Transient excess MSE `tr(R A_n)`, `n = 0..=steps`, of the same recursion.
pub fn excess_trajectory(
    model: &CorrelationModel,
    theta_opt: &[f64],
    mu: f64,
    sigma_eta: f64,
    steps: usize,
) -> Result<Vec<f64>> {
    check_mu(&step_size_bound(model)?, mu)?;
    check_dim(model.dim(), theta_opt.len())?;
    let eigen = steady_state::symmetric_eigen(model)?;
    Ok(steady_state::excess_trajectory(&eigen, theta_opt, mu, sigma_eta, steps))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePrediction {
    pub lambda_max: f64,
    pub mu_max: f64,
    pub mu_max_variance: f64,
    /// Optimal MSE, `σ_η²` under the large-`D` approximation.
    pub j_opt: f64,
    pub steady_state_mse: f64,
    pub excess_mse: f64,
    pub theta_opt: Vec<f64>,
}

/// Everything the analysis predicts for RFF-KLMS with step `mu` on data
/// `y = Σ a_m κ(c_m, x) + η`, `x ~ N(0, σ_x² I)`.
pub fn predict_convergence(
    map: &Arc<RandomFeatureMap>,
    sigma_x: f64,
    centers: &[Vec<f64>],
    coeffs: &[f64],
    mu: f64,
    sigma_eta: f64,
) -> Result<ConvergencePrediction> {
    let model = rzz_closed_form(map, sigma_x)?;
    let theta_opt = optimal_theta(map, centers, coeffs)?;
    let bound = step_size_bound(&model)?;
    let ss = steady_state_with_bound(
        &model,
        &bound,
        &theta_opt,
        mu,
        sigma_eta,
        DEFAULT_RECURSION_TOL,
        DEFAULT_RECURSION_MAX_ITERS,
    )?;
    Ok(ConvergencePrediction {
        lambda_max: bound.lambda_max,
        mu_max: bound.mu_max,
        mu_max_variance: bound.mu_max_variance,
        j_opt: sigma_eta * sigma_eta,
        steady_state_mse: ss.steady_state_mse,
        excess_mse: ss.excess_mse,
        theta_opt,
    })
}

/// JSON report emitted by the `theory` command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub mu_max: f64,
    pub mu_max_variance: f64,
    pub j_opt: f64,
    pub steady_state_mse: f64,
    pub excess_mse: f64,
    pub lambda_max: f64,
    #[serde(rename = "D")]
    pub feature_dim: usize,
    pub sigma: f64,
    pub sigma_x: f64,
    pub seed: u64,
    pub mu: f64,
    pub sigma_eta: f64,
}

impl TheoryReport {
    pub fn new(map: &RandomFeatureMap, sigma_x: f64, mu: f64, sigma_eta: f64, p: &ConvergencePrediction) -> Self {
        Self {
            mu_max: p.mu_max,
            mu_max_variance: p.mu_max_variance,
            j_opt: p.j_opt,
            steady_state_mse: p.steady_state_mse,
            excess_mse: p.excess_mse,
            lambda_max: p.lambda_max,
            feature_dim: map.feature_dim(),
            sigma: map.sigma(),
            sigma_x,
            seed: map.seed(),
            mu,
            sigma_eta,
        }
    }
}
