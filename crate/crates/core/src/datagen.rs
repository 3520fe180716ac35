//! Seeded generators for the synthetic systems used in the experiments.
//!
//! Inputs, auxiliary inputs and observation noise come from separate
//! sub-streams of the spec seed, so changing a noise level never moves the
//! input trajectory.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::kernel::GaussianKernel;
use crate::rng::{self, StreamRng, StreamRole};

/// A fully specified data model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Model {
    /// `y = Σ a_m κ_σ(c_m, x) + η`, `x ~ N(0, σ_x² I)`.
    KernelExpansion {
        input_dim: usize,
        centers: Vec<Vec<f64>>,
        coeffs: Vec<f64>,
        sigma: f64,
        sigma_x: f64,
        sigma_eta: f64,
    },
    /// `y = w0·x + 0.1 (w1·x)² + η`, `x ~ N(0, I)`.
    Quadratic {
        w0: Vec<f64>,
        w1: Vec<f64>,
        sigma_eta: f64,
    },
    /// `d_n = d_{n-1} / (1 + d_{n-1}²) + u_{n-1}³`, `y_n = d_n + η_n`.
    /// Regressor `x_n = (y_{n-1})`.
    ChaoticA {
        sigma_u: f64,
        sigma_eta: f64,
        d_init: f64,
    },
    /// `d_n = u_n + 0.5 v_n - 0.2 d_{n-1} + 0.35 d_{n-2}`, `y_n = φ(d_n) + η_n`,
    /// `u_n = 0.5 v_n + η̂_n`. Regressor `x_n = (u_n, u_{n-1})`.
    ChaoticB {
        sigma_v_sq: f64,
        sigma_hat_sq: f64,
        sigma_eta: f64,
        d_init: [f64; 2],
    },
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::KernelExpansion { .. } => "kernel_expansion",
            Model::Quadratic { .. } => "quadratic",
            Model::ChaoticA { .. } => "chaotic_a",
            Model::ChaoticB { .. } => "chaotic_b",
        }
    }

    /// Dimension of the regressor `x_n`.
    pub fn input_dim(&self) -> usize {
        match self {
            Model::KernelExpansion { input_dim, .. } => *input_dim,
            Model::Quadratic { w0, .. } => w0.len(),
            Model::ChaoticA { .. } => 1,
            Model::ChaoticB { .. } => 2,
        }
    }

    pub fn sigma_eta(&self) -> f64 {
        match self {
            Model::KernelExpansion { sigma_eta, .. }
            | Model::Quadratic { sigma_eta, .. }
            | Model::ChaoticA { sigma_eta, .. }
            | Model::ChaoticB { sigma_eta, .. } => *sigma_eta,
        }
    }

    /// Noise-free output for the memoryless models; `None` for the
    /// recursive ones.
    pub fn response(&self, x: &[f64]) -> Result<Option<f64>> {
        check_dim(self.input_dim(), x.len())?;
        Ok(match self {
            Model::KernelExpansion {
                centers,
                coeffs,
                sigma,
                ..
            } => {
                let k = GaussianKernel::new(*sigma)?;
                let mut y = 0.0;
                for (c, a) in centers.iter().zip(coeffs) {
                    y += a * k.eval(c, x)?;
                }
                Some(y)
            }
            Model::Quadratic { w0, w1, .. } => {
                let l = crate::kernel::dot(w0, x);
                let q = crate::kernel::dot(w1, x);
                Some(l + 0.1 * q * q)
            }
            _ => None,
        })
    }

    fn validate(&self) -> Result<()> {
        let nonneg = |name: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be finite and >= 0, got {v}")))
            }
        };
        nonneg("sigma_eta", self.sigma_eta())?;
        match self {
            Model::KernelExpansion {
                input_dim,
                centers,
                coeffs,
                sigma,
                sigma_x,
                ..
            } => {
                if *input_dim == 0 {
                    return Err(Error::invalid("input_dim must be >= 1"));
                }
                check_dim(centers.len(), coeffs.len())?;
                for c in centers {
                    check_dim(*input_dim, c.len())?;
                }
                GaussianKernel::new(*sigma)?;
                nonneg("sigma_x", *sigma_x)?;
            }
            Model::Quadratic { w0, w1, .. } => {
                if w0.is_empty() {
                    return Err(Error::invalid("w0 must not be empty"));
                }
                check_dim(w0.len(), w1.len())?;
            }
            Model::ChaoticA { sigma_u, .. } => nonneg("sigma_u", *sigma_u)?,
            Model::ChaoticB {
                sigma_v_sq,
                sigma_hat_sq,
                ..
            } => {
                nonneg("sigma_v_sq", *sigma_v_sq)?;
                nonneg("sigma_hat_sq", *sigma_hat_sq)?;
            }
        }
        Ok(())
    }
}

/// Model plus stream seed and length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub model: Model,
    pub seed: u64,
    pub n_samples: usize,
}

/// Two-branch nonlinearity of the second chaotic system.
pub fn phi(d: f64) -> f64 {
    if d >= 0.0 {
        d / (3.0 * (0.1 + 0.9 * d * d).sqrt())
    } else {
        -d * d * (1.0 - (0.7 * d).exp()) / 3.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub x: Vec<f64>,
    pub y: f64,
}

#[derive(Debug)]
enum State {
    Static,
    ChaoticA { d: f64, y_prev: f64 },
    ChaoticB { d: [f64; 2], u_prev: f64, aux: StreamRng },
}

/// Finite stream of `(x_n, y_n)`, `n = 1..=n_samples`.
#[derive(Debug)]
pub struct Generator {
    model: Model,
    remaining: usize,
    index: usize,
    input: StreamRng,
    noise: StreamRng,
    state: State,
}

impl Generator {
    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn input_dim(&self) -> usize {
        self.model.input_dim()
    }

    fn noise(&mut self) -> f64 {
        self.model.sigma_eta() * rng::standard_normal(&mut self.noise)
    }

    fn next_sample(&mut self) -> Sample {
        self.index += 1;
        let n = self.index;
        match (&self.model, &mut self.state) {
            (Model::KernelExpansion { input_dim, sigma_x, .. }, _) => {
                let x: Vec<f64> = (0..*input_dim)
                    .map(|_| sigma_x * rng::standard_normal(&mut self.input))
                    .collect();
                let clean = self.model.response(&x).ok().flatten().unwrap_or(f64::NAN);
                let y = clean + self.noise();
                Sample { x, y }
            }
            (Model::Quadratic { w0, .. }, _) => {
                let x: Vec<f64> = (0..w0.len())
                    .map(|_| rng::standard_normal(&mut self.input))
                    .collect();
                let clean = self.model.response(&x).ok().flatten().unwrap_or(f64::NAN);
                let y = clean + self.noise();
                Sample { x, y }
            }
            (Model::ChaoticA { sigma_u, .. }, State::ChaoticA { d, y_prev }) => {
                let x = vec![*y_prev];
                let dn = *d;
                let u = sigma_u * rng::standard_normal(&mut self.input);
                *d = dn / (1.0 + dn * dn) + u * u * u;
                let y = dn + self.model.sigma_eta() * rng::standard_normal(&mut self.noise);
                *y_prev = y;
                Sample { x, y }
            }
            (
                Model::ChaoticB {
                    sigma_v_sq,
                    sigma_hat_sq,
                    sigma_eta,
                    ..
                },
                State::ChaoticB { d, u_prev, aux },
            ) => {
                let v = sigma_v_sq.sqrt() * rng::standard_normal(&mut self.input);
                let u = 0.5 * v + sigma_hat_sq.sqrt() * rng::standard_normal(aux);
                let dn = if n <= 2 {
                    d[n - 1]
                } else {
                    let dn = u + 0.5 * v - 0.2 * d[1] + 0.35 * d[0];
                    *d = [d[1], dn];
                    dn
                };
                let x = vec![u, *u_prev];
                *u_prev = u;
                let y = phi(dn) + sigma_eta * rng::standard_normal(&mut self.noise);
                Sample { x, y }
            }
            _ => unreachable!("generator state matches its model"),
        }
    }
}

impl Iterator for Generator {
    type Item = Sample;

    fn next(&mut self) -> Option<Sample> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        Some(self.next_sample())
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

impl ExactSizeIterator for Generator {}

/// Stream for any model variant.
pub fn generate(spec: &ModelSpec) -> Result<Generator> {
    spec.model.validate()?;
    if spec.n_samples == 0 {
        return Err(Error::invalid("n_samples must be >= 1"));
    }
    let state = match &spec.model {
        Model::KernelExpansion { .. } | Model::Quadratic { .. } => State::Static,
        Model::ChaoticA { d_init, .. } => State::ChaoticA {
            d: *d_init,
            y_prev: 0.0,
        },
        Model::ChaoticB { d_init, .. } => State::ChaoticB {
            d: *d_init,
            u_prev: 0.0,
            aux: rng::stream(spec.seed, StreamRole::AuxInput),
        },
    };
    Ok(Generator {
        model: spec.model.clone(),
        remaining: spec.n_samples,
        index: 0,
        input: rng::stream(spec.seed, StreamRole::Input),
        noise: rng::stream(spec.seed, StreamRole::Noise),
        state,
    })
}

fn expect(spec: &ModelSpec, expected: &'static str) -> Result<Generator> {
    if spec.model.name() != expected {
        return Err(Error::WrongVariant {
            expected,
            got: spec.model.name(),
        });
    }
    generate(spec)
}

pub fn gen_kernel_expansion(spec: &ModelSpec) -> Result<Generator> {
    expect(spec, "kernel_expansion")
}

pub fn gen_quadratic(spec: &ModelSpec) -> Result<Generator> {
    expect(spec, "quadratic")
}

pub fn gen_chaotic_a(spec: &ModelSpec) -> Result<Generator> {
    expect(spec, "chaotic_a")
}

pub fn gen_chaotic_b(spec: &ModelSpec) -> Result<Generator> {
    expect(spec, "chaotic_b")
}

/// A materialized stream.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub input_dim: usize,
    /// Row-major `n × d`.
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl Dataset {
    pub fn collect(spec: &ModelSpec) -> Result<Self> {
        let gen = generate(spec)?;
        let input_dim = gen.input_dim();
        let mut xs = Vec::with_capacity(spec.n_samples * input_dim);
        let mut ys = Vec::with_capacity(spec.n_samples);
        for s in gen {
            xs.extend_from_slice(&s.x);
            ys.push(s.y);
        }
        Ok(Self { input_dim, xs, ys })
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    pub fn x(&self, n: usize) -> &[f64] {
        &self.xs[n * self.input_dim..(n + 1) * self.input_dim]
    }

    /// CSV with header `n,x_1..x_d,y`, `n` starting at 1, shortest
    /// round-trip float formatting.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "n")?;
        for j in 1..=self.input_dim {
            write!(out, ",x_{j}")?;
        }
        writeln!(out, ",y")?;
        for n in 0..self.len() {
            write!(out, "{}", n + 1)?;
            for v in self.x(n) {
                write!(out, ",{v:e}")?;
            }
            writeln!(out, ",{:e}", self.ys[n])?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_csv(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }
}

fn default_one() -> f64 {
    1.0
}

fn default_five() -> f64 {
    5.0
}

fn default_quadratic_dim() -> usize {
    5
}

/// Model template. Parameters left unset are drawn per seed from the model
/// sub-stream, so each Monte Carlo run sees a fresh system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    KernelExpansion {
        input_dim: usize,
        /// Number of centers `M` when they are drawn.
        #[serde(default)]
        n_centers: usize,
        /// Centers are drawn from `N(0, center_std² I)`.
        #[serde(default = "default_one")]
        center_std: f64,
        /// Coefficients are drawn from `N(0, coeff_std²)`.
        #[serde(default = "default_five")]
        coeff_std: f64,
        #[serde(default)]
        centers: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        coeffs: Option<Vec<f64>>,
        sigma: f64,
        #[serde(default = "default_one")]
        sigma_x: f64,
        sigma_eta: f64,
    },
    Quadratic {
        #[serde(default = "default_quadratic_dim")]
        input_dim: usize,
        #[serde(default)]
        w0: Option<Vec<f64>>,
        #[serde(default)]
        w1: Option<Vec<f64>>,
        sigma_eta: f64,
    },
    ChaoticA {
        sigma_u: f64,
        sigma_eta: f64,
        #[serde(default = "default_one")]
        d_init: f64,
    },
    ChaoticB {
        sigma_v_sq: f64,
        sigma_hat_sq: f64,
        sigma_eta: f64,
        #[serde(default = "default_d_init_b")]
        d_init: [f64; 2],
    },
}

fn default_d_init_b() -> [f64; 2] {
    [1.0, 1.0]
}

fn normals(rng: &mut impl Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| scale * rng::standard_normal(rng)).collect()
}

impl ModelConfig {
    pub fn input_dim(&self) -> usize {
        match self {
            ModelConfig::KernelExpansion { input_dim, .. } | ModelConfig::Quadratic { input_dim, .. } => {
                *input_dim
            }
            ModelConfig::ChaoticA { .. } => 1,
            ModelConfig::ChaoticB { .. } => 2,
        }
    }

    /// Concrete spec for one realization.
    pub fn instantiate(&self, seed: u64, n_samples: usize) -> Result<ModelSpec> {
        let mut rng = rng::stream(seed, StreamRole::Model);
        let model = match self.clone() {
            ModelConfig::KernelExpansion {
                input_dim,
                n_centers,
                center_std,
                coeff_std,
                centers,
                coeffs,
                sigma,
                sigma_x,
                sigma_eta,
            } => {
                let centers = match centers {
                    Some(c) => c,
                    None => (0..n_centers)
                        .map(|_| normals(&mut rng, input_dim, center_std))
                        .collect(),
                };
                let coeffs = match coeffs {
                    Some(a) => a,
                    None => normals(&mut rng, centers.len(), coeff_std),
                };
                Model::KernelExpansion {
                    input_dim,
                    centers,
                    coeffs,
                    sigma,
                    sigma_x,
                    sigma_eta,
                }
            }
            ModelConfig::Quadratic {
                input_dim,
                w0,
                w1,
                sigma_eta,
            } => {
                let w0 = w0.unwrap_or_else(|| normals(&mut rng, input_dim, 1.0));
                let w1 = w1.unwrap_or_else(|| normals(&mut rng, input_dim, 1.0));
                check_dim(input_dim, w0.len())?;
                Model::Quadratic { w0, w1, sigma_eta }
            }
            ModelConfig::ChaoticA {
                sigma_u,
                sigma_eta,
                d_init,
            } => Model::ChaoticA {
                sigma_u,
                sigma_eta,
                d_init,
            },
            ModelConfig::ChaoticB {
                sigma_v_sq,
                sigma_hat_sq,
                sigma_eta,
                d_init,
            } => Model::ChaoticB {
                sigma_v_sq,
                sigma_hat_sq,
                sigma_eta,
                d_init,
            },
        };
        model.validate()?;
        Ok(ModelSpec {
            model,
            seed,
            n_samples,
        })
    }
}
