//! Gaussian kernel and its random Fourier feature approximation.
//!
//! A [`RandomFeatureMap`] holds `D` frequency vectors `ω_i ~ N(0, σ⁻² I_d)`
//! and phases `b_i ~ U[0, 2π)`. It lifts `x ∈ R^d` to
//! `z(x)_i = sqrt(2/D) · cos(ω_i·x + b_i)`, and `z(u)·z(v)` is an unbiased
//! estimate of `exp(-‖u - v‖² / (2σ²))`.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::rng::{self, StreamRole};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianKernel {
    sigma: f64,
}

impl GaussianKernel {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(format!("kernel sigma must be positive, got {sigma}")));
        }
        Ok(Self { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `exp(-‖u - v‖² / (2σ²))`.
    pub fn eval(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        check_dim(u.len(), v.len())?;
        Ok(self.eval_sq_dist(squared_distance(u, v)))
    }

    #[inline]
    pub fn eval_sq_dist(&self, sq_dist: f64) -> f64 {
        (-sq_dist / (2.0 * self.sigma * self.sigma)).exp()
    }
}

pub fn kernel_exact(kernel: &GaussianKernel, u: &[f64], v: &[f64]) -> Result<f64> {
    kernel.eval(u, v)
}

#[inline]
pub fn squared_distance(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum()
}

#[inline]
pub(crate) fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Frozen sample of random Fourier features for the Gaussian kernel.
///
/// Immutable after construction; filters hold it behind an `Arc`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FeatureMapDoc", into = "FeatureMapDoc")]
pub struct RandomFeatureMap {
    sigma: f64,
    input_dim: usize,
    feature_dim: usize,
    seed: u64,
    /// Row-major `feature_dim × input_dim`.
    omegas: Vec<f64>,
    phases: Vec<f64>,
    scale: f64,
}

impl RandomFeatureMap {
    /// Draws `feature_dim` frequencies (row by row, `input_dim` standard
    /// normals each, scaled by `1/σ`) and then `feature_dim` phases, all from
    /// the feature-map sub-stream of `seed`.
    pub fn sample(input_dim: usize, feature_dim: usize, sigma: f64, seed: u64) -> Result<Self> {
        validate_dims(input_dim, feature_dim)?;
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(format!("feature map sigma must be positive, got {sigma}")));
        }
        let mut rng = rng::stream(seed, StreamRole::FeatureMap);
        let inv_sigma = 1.0 / sigma;
        let omegas = (0..feature_dim * input_dim)
            .map(|_| rng::standard_normal(&mut rng) * inv_sigma)
            .collect();
        let phases = (0..feature_dim).map(|_| rng::uniform_phase(&mut rng)).collect();
        Ok(Self::assemble(sigma, input_dim, feature_dim, seed, omegas, phases))
    }

    /// Builds a map from explicit frequencies and phases, e.g. to replay a
    /// recorded map or to construct degenerate cases.
    pub fn from_parts(
        omegas: Vec<Vec<f64>>,
        phases: Vec<f64>,
        sigma: f64,
        seed: u64,
    ) -> Result<Self> {
        let feature_dim = omegas.len();
        let input_dim = omegas.first().map_or(0, Vec::len);
        validate_dims(input_dim, feature_dim)?;
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(format!("feature map sigma must be positive, got {sigma}")));
        }
        check_dim(feature_dim, phases.len())?;
        let mut flat = Vec::with_capacity(feature_dim * input_dim);
        for row in &omegas {
            check_dim(input_dim, row.len())?;
            if row.iter().any(|w| !w.is_finite()) {
                return Err(Error::invalid("non-finite frequency"));
            }
            flat.extend_from_slice(row);
        }
        if let Some(b) = phases.iter().find(|b| !(0.0..std::f64::consts::TAU).contains(*b)) {
            return Err(Error::invalid(format!("phase {b} outside [0, 2π)")));
        }
        Ok(Self::assemble(sigma, input_dim, feature_dim, seed, flat, phases))
    }

    fn assemble(
        sigma: f64,
        input_dim: usize,
        feature_dim: usize,
        seed: u64,
        omegas: Vec<f64>,
        phases: Vec<f64>,
    ) -> Self {
        Self {
            sigma,
            input_dim,
            feature_dim,
            seed,
            omegas,
            phases,
            scale: (2.0 / feature_dim as f64).sqrt(),
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn omega(&self, i: usize) -> &[f64] {
        &self.omegas[i * self.input_dim..(i + 1) * self.input_dim]
    }

    pub fn omegas(&self) -> impl Iterator<Item = &[f64]> {
        self.omegas.chunks_exact(self.input_dim)
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// Writes `z(x)` into `out` without allocating.
    pub fn transform_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_dim(self.input_dim, x.len())?;
        check_dim(self.feature_dim, out.len())?;
        for ((o, w), b) in out.iter_mut().zip(self.omegas()).zip(&self.phases) {
            *o = self.scale * (dot(w, x) + b).cos();
        }
        Ok(())
    }

    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.feature_dim];
        self.transform_into(x, &mut out)?;
        Ok(out)
    }

    /// `z(u)·z(v)`, the random-feature estimate of the Gaussian kernel.
    pub fn kernel_approx(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        check_dim(u.len(), v.len())?;
        let zu = self.transform(u)?;
        let zv = self.transform(v)?;
        Ok(dot(&zu, &zv))
    }
}

pub fn sample_feature_map(
    input_dim: usize,
    feature_dim: usize,
    sigma: f64,
    seed: u64,
) -> Result<RandomFeatureMap> {
    RandomFeatureMap::sample(input_dim, feature_dim, sigma, seed)
}

fn validate_dims(input_dim: usize, feature_dim: usize) -> Result<()> {
    if input_dim == 0 || feature_dim == 0 {
        return Err(Error::invalid(format!(
            "feature map needs input_dim >= 1 and feature_dim >= 1 (got {input_dim}, {feature_dim})"
        )));
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct FeatureMapDoc {
    sigma: f64,
    input_dim: usize,
    feature_dim: usize,
    seed: u64,
    omegas: Vec<Vec<f64>>,
    phases: Vec<f64>,
}

impl From<RandomFeatureMap> for FeatureMapDoc {
    fn from(m: RandomFeatureMap) -> Self {
        Self {
            sigma: m.sigma,
            input_dim: m.input_dim,
            feature_dim: m.feature_dim,
            seed: m.seed,
            omegas: m.omegas().map(<[f64]>::to_vec).collect(),
            phases: m.phases,
        }
    }
}

impl TryFrom<FeatureMapDoc> for RandomFeatureMap {
    type Error = Error;

    fn try_from(doc: FeatureMapDoc) -> Result<Self> {
        let map = RandomFeatureMap::from_parts(doc.omegas, doc.phases, doc.sigma, doc.seed)?;
        check_dim(doc.input_dim, map.input_dim)?;
        check_dim(doc.feature_dim, map.feature_dim)?;
        Ok(map)
    }
}

/// One row of an approximation-quality sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ApproxErrorRow {
    pub feature_dim: usize,
    pub rms_error: f64,
    pub max_error: f64,
}

/// Measures `|z(u)·z(v) - κ(u, v)|` over `n_pairs` pairs with
/// `u, v ~ N(0, I_d)`. The same pairs are used at every feature dimension.
/// Every pair is scored under its own map draw, seeded from `(seed, D, pair)`,
/// so the RMS averages over map randomness too; with a single map the errors
/// of all pairs are correlated and one unlucky draw can break the `1/√D` trend.
pub fn approximation_sweep(
    sigma: f64,
    input_dim: usize,
    feature_dims: &[usize],
    n_pairs: usize,
    seed: u64,
) -> Result<Vec<ApproxErrorRow>> {
    if feature_dims.is_empty() {
        return Err(Error::invalid("feature dimension list is empty"));
    }
    if n_pairs == 0 {
        return Err(Error::invalid("n_pairs must be >= 1"));
    }
    let kernel = GaussianKernel::new(sigma)?;
    let mut rng = rng::stream(seed, StreamRole::Pairs);
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..n_pairs)
        .map(|_| {
            let u = (0..input_dim).map(|_| rng::standard_normal(&mut rng)).collect();
            let v = (0..input_dim).map(|_| rng::standard_normal(&mut rng)).collect();
            (u, v)
        })
        .collect();
    feature_dims
        .iter()
        .map(|&feature_dim| {
            let level_seed = rng::child_seed(seed, feature_dim as u64);
            let mut sum_sq = 0.0;
            let mut max_error: f64 = 0.0;
            for (k, (u, v)) in pairs.iter().enumerate() {
                let map_seed = rng::child_seed(level_seed, k as u64);
                let map = RandomFeatureMap::sample(input_dim, feature_dim, sigma, map_seed)?;
                let err = (map.kernel_approx(u, v)? - kernel.eval(u, v)?).abs();
                sum_sq += err * err;
                max_error = max_error.max(err);
            }
            Ok(ApproxErrorRow {
                feature_dim,
                rms_error: (sum_sq / n_pairs as f64).sqrt(),
                max_error,
            })
        })
        .collect()
}
