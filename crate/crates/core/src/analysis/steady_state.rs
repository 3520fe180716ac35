//! Evaluation of the weight-error covariance recursion
//! `A_{n+1} = A_n - μ (R A_n + A_n R) + μ² σ_η² R`.
//!
//! With `R = Q Λ Qᵀ` and `B_n = Qᵀ A_n Q` the recursion is elementwise:
//! `B_{n+1,ij} = ρ_ij B_{n,ij} + μ² σ_η² λ_i δ_ij`, `ρ_ij = 1 - μ (λ_i + λ_j)`,
//! so `B_n = B* + ρ^n ∘ (B_0 - B*)` with fixed point `B* = (μ σ_η² / 2) I`.
//! Checkpoints `n = 1, 2, 4, …` are reached by squaring `ρ^n`, which lets
//! slowly decaying modes (tiny `λ_i`) settle without millions of steps.
//! Frobenius norms are invariant under `Q`, so the stopping test on `B` is the
//! stopping test on `A`.

use faer::{Mat, Side};

use crate::error::{check_dim, Error, Result};

use super::CorrelationModel;

pub(crate) struct Eigen {
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector of `values[k]`.
    pub vectors: Mat<f64>,
}

pub(crate) fn symmetric_eigen(model: &CorrelationModel) -> Result<Eigen> {
    let dim = model.dim();
    let m = Mat::<f64>::from_fn(dim, dim, |i, j| model.get(i, j));
    let eig = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::NumericalBreakdown(format!("eigendecomposition failed: {e:?}")))?;
    let values = (0..dim).map(|k| eig.S().column_vector()[k]).collect();
    Ok(Eigen {
        values,
        vectors: eig.U().to_owned(),
    })
}

pub(crate) struct RecursionOutcome {
    pub excess_mse: f64,
    pub steps: u64,
}

/// Packed upper triangle index.
#[inline]
fn packed(i: usize, j: usize, dim: usize) -> usize {
    i * dim - i * (i + 1) / 2 + j
}

pub(crate) fn iterate_to_fixed_point(
    model: &CorrelationModel,
    eigen: &Eigen,
    theta_opt: &[f64],
    mu: f64,
    sigma_eta: f64,
    tol: f64,
    max_iters: u64,
) -> Result<RecursionOutcome> {
    let dim = model.dim();
    check_dim(dim, theta_opt.len())?;
    // R is positive semi-definite; negative eigenvalues are round-off.
    let lambda: Vec<f64> = eigen.values.iter().map(|l| l.max(0.0)).collect();
    let t = project(eigen, theta_opt);
    let fixed = 0.5 * mu * sigma_eta * sigma_eta;
    // deviation of B_0 = t tᵀ from the fixed point
    let dev = |i: usize, j: usize| t[i] * t[j] - if i == j { fixed } else { 0.0 };

    let mut rho_n = vec![0.0; dim * (dim + 1) / 2];
    for i in 0..dim {
        for j in i..dim {
            rho_n[packed(i, j, dim)] = 1.0 - mu * (lambda[i] + lambda[j]);
        }
    }
    let mut steps: u64 = 1;
    loop {
        if steps > max_iters / 2 {
            return Err(Error::NonConvergence {
                what: "weight-error covariance recursion",
                max_iters,
            });
        }
        // compare checkpoints n and 2n
        let (mut diff_sq, mut norm_sq) = (0.0, 0.0);
        for i in 0..dim {
            for j in i..dim {
                let k = packed(i, j, dim);
                let r = rho_n[k];
                let r2 = r * r;
                let w = if i == j { 1.0 } else { 2.0 };
                let dv = dev(i, j);
                let b2 = if i == j { fixed } else { 0.0 } + r2 * dv;
                diff_sq += w * ((r2 - r) * dv).powi(2);
                norm_sq += w * b2 * b2;
                rho_n[k] = r2;
            }
        }
        steps *= 2;
        if diff_sq.sqrt() <= tol * norm_sq.sqrt() || diff_sq <= f64::MIN_POSITIVE {
            break;
        }
    }
    let excess_mse = (0..dim)
        .map(|i| lambda[i] * (fixed + rho_n[packed(i, i, dim)] * dev(i, i)))
        .sum();
    Ok(RecursionOutcome { excess_mse, steps })
}

/// `tr(R A_n)` for `n = 0..=steps`, stepping the diagonal of `B` one
/// recursion step at a time.
pub(crate) fn excess_trajectory(
    eigen: &Eigen,
    theta_opt: &[f64],
    mu: f64,
    sigma_eta: f64,
    steps: usize,
) -> Vec<f64> {
    let lambda: Vec<f64> = eigen.values.iter().map(|l| l.max(0.0)).collect();
    let mut diag: Vec<f64> = project(eigen, theta_opt).iter().map(|t| t * t).collect();
    let drive = mu * mu * sigma_eta * sigma_eta;
    let mut out = Vec::with_capacity(steps + 1);
    for n in 0..=steps {
        out.push(lambda.iter().zip(&diag).map(|(l, b)| l * b).sum());
        if n < steps {
            for (b, l) in diag.iter_mut().zip(&lambda) {
                *b = (1.0 - 2.0 * mu * l) * *b + drive * l;
            }
        }
    }
    out
}

fn project(eigen: &Eigen, v: &[f64]) -> Vec<f64> {
    let q = &eigen.vectors;
    (0..q.ncols())
        .map(|k| (0..q.nrows()).map(|i| q[(i, k)] * v[i]).sum())
        .collect()
}
