use crate::error::{check_dim, check_finite, Error, Result};
use crate::kernel::{squared_distance, GaussianKernel};

use super::{AdaptiveFilter, Step};

/// Quantized kernel LMS: a growing Gaussian-kernel expansion whose centers are
/// at pairwise squared distance `>= epsilon`.
#[derive(Clone, Debug)]
pub struct Qklms {
    input_dim: usize,
    /// Row-major `M × input_dim`.
    centers: Vec<f64>,
    coeffs: Vec<f64>,
    epsilon: f64,
    mu: f64,
    kernel: GaussianKernel,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QklmsStep {
    pub prediction: f64,
    pub error: f64,
    pub dict_size: usize,
}

impl Qklms {
    /// `epsilon` is a threshold on the *squared* distance to the nearest
    /// center; `epsilon = 0` never merges and gives the unsparsified KLMS.
    pub fn new(input_dim: usize, kernel: GaussianKernel, mu: f64, epsilon: f64) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::invalid("input_dim must be >= 1"));
        }
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::invalid(format!("step size must be >= 0, got {mu}")));
        }
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::invalid(format!("quantization size must be >= 0, got {epsilon}")));
        }
        Ok(Self {
            input_dim,
            centers: Vec::new(),
            coeffs: Vec::new(),
            epsilon,
            mu,
            kernel,
        })
    }

    pub(crate) fn from_parts(
        input_dim: usize,
        kernel: GaussianKernel,
        mu: f64,
        epsilon: f64,
        centers: Vec<Vec<f64>>,
        coeffs: Vec<f64>,
    ) -> Result<Self> {
        check_dim(centers.len(), coeffs.len())?;
        let mut f = Self::new(input_dim, kernel, mu, epsilon)?;
        for c in &centers {
            check_dim(input_dim, c.len())?;
            f.centers.extend_from_slice(c);
        }
        f.coeffs = coeffs;
        Ok(f)
    }

    pub fn dict_size(&self) -> usize {
        self.coeffs.len()
    }

    pub fn centers(&self) -> impl Iterator<Item = &[f64]> {
        self.centers.chunks_exact(self.input_dim)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn kernel(&self) -> GaussianKernel {
        self.kernel
    }

    /// One predict / update cycle. The squared distances computed for the
    /// prediction are reused for the nearest-center search (linear scan,
    /// lowest index wins ties).
    pub fn step_qklms(&mut self, x: &[f64], y: f64) -> Result<QklmsStep> {
        check_dim(self.input_dim, x.len())?;
        check_finite(x, y)?;
        let mut prediction = 0.0;
        let mut nearest: Option<(usize, f64)> = None;
        for (k, (c, a)) in self.centers.chunks_exact(self.input_dim).zip(&self.coeffs).enumerate() {
            let d = squared_distance(x, c);
            prediction += a * self.kernel.eval_sq_dist(d);
            if nearest.map_or(true, |(_, best)| d < best) {
                nearest = Some((k, d));
            }
        }
        let error = y - prediction;
        match nearest {
            Some((k, d)) if d < self.epsilon => self.coeffs[k] += self.mu * error,
            _ => {
                self.centers.extend_from_slice(x);
                self.coeffs.push(self.mu * error);
            }
        }
        Ok(QklmsStep {
            prediction,
            error,
            dict_size: self.coeffs.len(),
        })
    }
}

impl AdaptiveFilter for Qklms {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn predict(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.input_dim, x.len())?;
        Ok(self
            .centers()
            .zip(&self.coeffs)
            .map(|(c, a)| a * self.kernel.eval_sq_dist(squared_distance(x, c)))
            .sum())
    }

    fn step(&mut self, x: &[f64], y: f64) -> Result<Step> {
        let s = self.step_qklms(x, y)?;
        Ok(Step {
            prediction: s.prediction,
            error: s.error,
        })
    }

    fn dictionary_size(&self) -> Option<usize> {
        Some(self.dict_size())
    }
}
