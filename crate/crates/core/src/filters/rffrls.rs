use std::sync::Arc;

use crate::error::{check_dim, check_finite, Error, Result};
use crate::kernel::{dot, RandomFeatureMap};

use super::{AdaptiveFilter, Step};

/// Exponentially weighted RLS on random Fourier features.
///
/// `P` starts at `I / reg_lambda`. Each step computes `g = P z`,
/// `k = g / (β + zᵀg)`, `θ += k e` and `P ← (P - k gᵀ) / β` followed by
/// `(P + Pᵀ) / 2`.
#[derive(Clone, Debug)]
pub struct RffRls {
    theta: Vec<f64>,
    /// Row-major `D × D`.
    p: Vec<f64>,
    reg_lambda: f64,
    beta: f64,
    map: Arc<RandomFeatureMap>,
    z: Vec<f64>,
    g: Vec<f64>,
}

impl RffRls {
    pub fn new(map: Arc<RandomFeatureMap>, reg_lambda: f64, beta: f64) -> Result<Self> {
        if !(reg_lambda > 0.0 && reg_lambda.is_finite()) {
            return Err(Error::invalid(format!("regularization must be > 0, got {reg_lambda}")));
        }
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::invalid(format!("forgetting factor must be in (0, 1], got {beta}")));
        }
        let dim = map.feature_dim();
        let mut p = vec![0.0; dim * dim];
        for i in 0..dim {
            p[i * dim + i] = 1.0 / reg_lambda;
        }
        Ok(Self {
            theta: vec![0.0; dim],
            p,
            reg_lambda,
            beta,
            map,
            z: vec![0.0; dim],
            g: vec![0.0; dim],
        })
    }

    pub(crate) fn from_parts(
        map: Arc<RandomFeatureMap>,
        reg_lambda: f64,
        beta: f64,
        theta: Vec<f64>,
        p_rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let mut f = Self::new(map, reg_lambda, beta)?;
        let dim = f.theta.len();
        check_dim(dim, theta.len())?;
        check_dim(dim, p_rows.len())?;
        for (i, row) in p_rows.iter().enumerate() {
            check_dim(dim, row.len())?;
            f.p[i * dim..(i + 1) * dim].copy_from_slice(row);
        }
        f.theta = theta;
        Ok(f)
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn feature_dim(&self) -> usize {
        self.theta.len()
    }

    /// Entry `(i, j)` of the inverse-correlation estimate.
    pub fn p(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.theta.len() + j]
    }

    pub fn p_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.p.chunks_exact(self.theta.len())
    }

    pub fn reg_lambda(&self) -> f64 {
        self.reg_lambda
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn map(&self) -> &Arc<RandomFeatureMap> {
        &self.map
    }

    /// Relative Frobenius asymmetry `‖P - Pᵀ‖ / ‖P‖`.
    pub fn asymmetry(&self) -> f64 {
        let dim = self.theta.len();
        let (mut diff, mut norm) = (0.0, 0.0);
        for i in 0..dim {
            for j in 0..dim {
                let a = self.p[i * dim + j];
                diff += (a - self.p[j * dim + i]).powi(2);
                norm += a * a;
            }
        }
        (diff / norm).sqrt()
    }
}

impl AdaptiveFilter for RffRls {
    fn input_dim(&self) -> usize {
        self.map.input_dim()
    }

    fn predict(&self, x: &[f64]) -> Result<f64> {
        Ok(dot(&self.theta, &self.map.transform(x)?))
    }

    fn step(&mut self, x: &[f64], y: f64) -> Result<Step> {
        check_dim(self.map.input_dim(), x.len())?;
        check_finite(x, y)?;
        self.map.transform_into(x, &mut self.z)?;
        let dim = self.theta.len();
        let prediction = dot(&self.theta, &self.z);
        let error = y - prediction;

        for (g, row) in self.g.iter_mut().zip(self.p.chunks_exact(dim)) {
            *g = dot(row, &self.z);
        }
        let denom = self.beta + dot(&self.z, &self.g);
        if !(denom > 0.0 && denom.is_finite()) {
            return Err(Error::NumericalBreakdown(format!(
                "RLS denominator beta + z'Pz = {denom} (P lost positive definiteness)"
            )));
        }
        let inv_denom = 1.0 / denom;
        for (t, g) in self.theta.iter_mut().zip(&self.g) {
            *t += g * inv_denom * error;
        }
        // P is exactly symmetric on entry, so (P - k gᵀ + (P - k gᵀ)ᵀ) / 2
        // only needs the upper triangle.
        let half_inv_beta = 0.5 / self.beta;
        for i in 0..dim {
            let ki = self.g[i] * inv_denom;
            let gi = self.g[i];
            for j in i..dim {
                let kj = self.g[j] * inv_denom;
                let v = (2.0 * self.p[i * dim + j] - ki * self.g[j] - kj * gi) * half_inv_beta;
                self.p[i * dim + j] = v;
                self.p[j * dim + i] = v;
            }
        }
        Ok(Step { prediction, error })
    }
}
