use std::sync::Arc;

use crate::error::{check_dim, check_finite, Error, Result};
use crate::kernel::{dot, RandomFeatureMap};

use super::{AdaptiveFilter, Step};

/// Kernel LMS on random Fourier features: a plain LMS on `z(x)` with a
/// fixed-size weight vector.
#[derive(Clone, Debug)]
pub struct RffKlms {
    theta: Vec<f64>,
    mu: f64,
    map: Arc<RandomFeatureMap>,
    z: Vec<f64>,
}

impl RffKlms {
    pub fn new(map: Arc<RandomFeatureMap>, mu: f64) -> Result<Self> {
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::invalid(format!("step size must be >= 0, got {mu}")));
        }
        let dim = map.feature_dim();
        Ok(Self {
            theta: vec![0.0; dim],
            mu,
            map,
            z: vec![0.0; dim],
        })
    }

    pub(crate) fn from_parts(map: Arc<RandomFeatureMap>, mu: f64, theta: Vec<f64>) -> Result<Self> {
        check_dim(map.feature_dim(), theta.len())?;
        let mut f = Self::new(map, mu)?;
        f.theta = theta;
        Ok(f)
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn map(&self) -> &Arc<RandomFeatureMap> {
        &self.map
    }
}

impl AdaptiveFilter for RffKlms {
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
        let prediction = dot(&self.theta, &self.z);
        let error = y - prediction;
        let gain = self.mu * error;
        for (t, z) in self.theta.iter_mut().zip(&self.z) {
            *t += gain * z;
        }
        Ok(Step { prediction, error })
    }
}
