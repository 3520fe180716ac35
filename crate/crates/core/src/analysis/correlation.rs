use std::sync::Arc;

use crate::error::{check_dim, Error, Result};
use crate::kernel::{squared_distance, RandomFeatureMap};
use crate::rng::{self, StreamRole};

/// `R_zz = E[z(x) z(x)ᵀ]` for inputs `x ~ N(0, σ_x² I)`.
#[derive(Clone, Debug)]
pub struct CorrelationModel {
    dim: usize,
    /// Row-major, exactly symmetric.
    r: Vec<f64>,
    sigma_x: f64,
    map: Option<Arc<RandomFeatureMap>>,
}

impl CorrelationModel {
    /// Wraps an explicit symmetric matrix (e.g. for synthetic checks).
    pub fn from_rows(rows: &[Vec<f64>], sigma_x: f64) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::invalid("empty correlation matrix"));
        }
        let mut r = Vec::with_capacity(dim * dim);
        for row in rows {
            check_dim(dim, row.len())?;
            r.extend_from_slice(row);
        }
        for i in 0..dim {
            for j in 0..i {
                if r[i * dim + j] != r[j * dim + i] {
                    return Err(Error::invalid(format!("matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self {
            dim,
            r,
            sigma_x,
            map: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sigma_x(&self) -> f64 {
        self.sigma_x
    }

    pub fn map(&self) -> Option<&Arc<RandomFeatureMap>> {
        self.map.as_ref()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.r[i * self.dim + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.r.chunks_exact(self.dim)
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub(crate) fn matvec(&self, x: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(self.rows()) {
            *o = crate::kernel::dot(row, x);
        }
    }

    /// Relative Frobenius distance `‖self - other‖ / ‖other‖`.
    pub fn relative_frobenius_distance(&self, other: &CorrelationModel) -> Result<f64> {
        check_dim(other.dim, self.dim)?;
        let (mut diff, mut norm) = (0.0, 0.0);
        for (a, b) in self.r.iter().zip(&other.r) {
            diff += (a - b) * (a - b);
            norm += b * b;
        }
        Ok((diff / norm).sqrt())
    }
}

fn check_sigma_x(sigma_x: f64) -> Result<()> {
    if sigma_x > 0.0 && sigma_x.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("sigma_x must be positive, got {sigma_x}")))
    }
}

/// Closed-form `R_zz`:
///
/// `r_ij = (2/D) · [½ exp(-‖ω_i - ω_j‖² σ_x² / 2) cos(b_i - b_j)
///                 + ½ exp(-‖ω_i + ω_j‖² σ_x² / 2) cos(b_i + b_j)]`.
///
/// The `2/D` factor comes from the `sqrt(2/D)` scaling of `z`.
pub fn rzz_closed_form(map: &Arc<RandomFeatureMap>, sigma_x: f64) -> Result<CorrelationModel> {
    check_sigma_x(sigma_x)?;
    let dim = map.feature_dim();
    let d = map.input_dim();
    let scale = 1.0 / dim as f64;
    let half_var = 0.5 * sigma_x * sigma_x;
    let phases = map.phases();
    let mut r = vec![0.0; dim * dim];
    let mut sum = vec![0.0; d];
    for i in 0..dim {
        let wi = map.omega(i);
        for j in i..dim {
            let wj = map.omega(j);
            for ((s, a), b) in sum.iter_mut().zip(wi).zip(wj) {
                *s = a + b;
            }
            let minus = squared_distance(wi, wj);
            let plus: f64 = sum.iter().map(|s| s * s).sum();
            let v = scale
                * ((-minus * half_var).exp() * (phases[i] - phases[j]).cos()
                    + (-plus * half_var).exp() * (phases[i] + phases[j]).cos());
            r[i * dim + j] = v;
            r[j * dim + i] = v;
        }
    }
    Ok(CorrelationModel {
        dim,
        r,
        sigma_x,
        map: Some(map.clone()),
    })
}

/// Sample average of `z(x) z(x)ᵀ` over `n_samples` draws `x ~ N(0, σ_x² I)`
/// taken from the input sub-stream of `seed`.
pub fn rzz_monte_carlo(
    map: &Arc<RandomFeatureMap>,
    sigma_x: f64,
    n_samples: usize,
    seed: u64,
) -> Result<CorrelationModel> {
    check_sigma_x(sigma_x)?;
    if n_samples == 0 {
        return Err(Error::invalid("n_samples must be >= 1"));
    }
    let dim = map.feature_dim();
    let mut rng = rng::stream(seed, StreamRole::Input);
    let mut x = vec![0.0; map.input_dim()];
    let mut z = vec![0.0; dim];
    let mut acc = vec![0.0; dim * dim];
    for _ in 0..n_samples {
        for v in x.iter_mut() {
            *v = sigma_x * rng::standard_normal(&mut rng);
        }
        map.transform_into(&x, &mut z)?;
        for i in 0..dim {
            let zi = z[i];
            for j in i..dim {
                acc[i * dim + j] += zi * z[j];
            }
        }
    }
    let inv_n = 1.0 / n_samples as f64;
    for i in 0..dim {
        for j in i..dim {
            let v = acc[i * dim + j] * inv_n;
            acc[i * dim + j] = v;
            acc[j * dim + i] = v;
        }
    }
    Ok(CorrelationModel {
        dim,
        r: acc,
        sigma_x,
        map: Some(map.clone()),
    })
}
