//! Seeded Monte Carlo experiments: averaged learning curves, steady-state
//! summaries and serial timing benchmarks.
//!
//! Realization `i` uses seed `run_seed(base_seed, i)`. Its data stream, the
//! model parameters drawn from a template and (unless shared) each filter's
//! feature map are all derived from that seed, so any single run can be
//! replayed in isolation. Curves are reduced over run index with a fixed
//! binary tree, which makes them independent of thread scheduling.

mod config;
mod curve;
pub mod presets;

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use config::{ExperimentConfig, FilterConfig};
pub use curve::{
    convergence_step, first_reach, read_curve_csv, to_db, write_curve_csv, CurveTable,
    LearningCurve, Timing,
};

use crate::analysis::{predict_convergence, TheoryReport};
use crate::datagen::{Dataset, Model, ModelSpec};
use crate::error::{Error, Result};
use crate::filters::{AdaptiveFilter, Filter, Qklms, RffKlms, RffRls};
use crate::kernel::{GaussianKernel, RandomFeatureMap};
use crate::rng::{self, StreamRole};

/// Squared prior errors of one filter over one realization.
#[derive(Clone, Debug, PartialEq)]
pub struct RunTrace {
    pub seed: u64,
    pub sq_errors: Vec<f64>,
    /// Dictionary size after each step (QKLMS only).
    pub dict_sizes: Option<Vec<usize>>,
    /// Wall-clock seconds spent in the training loop.
    pub seconds: f64,
}

impl RunTrace {
    pub fn final_dict_size(&self) -> Option<usize> {
        self.dict_sizes.as_ref().and_then(|d| d.last().copied())
    }
}

/// Data spec of realization `run_index`.
pub fn model_spec(config: &ExperimentConfig, run_index: u64) -> Result<ModelSpec> {
    config
        .model
        .instantiate(rng::run_seed(config.base_seed, run_index), config.n_samples)
}

/// Feature map of filter `filter_index` in realization `run_index`; `None`
/// for QKLMS.
pub fn feature_map(
    config: &ExperimentConfig,
    filter_index: usize,
    run_index: u64,
) -> Result<Option<Arc<RandomFeatureMap>>> {
    let filter = filter_config(config, filter_index)?;
    let Some(feature_dim) = filter.feature_dim() else {
        return Ok(None);
    };
    let root = if config.share_feature_map {
        config.base_seed
    } else {
        rng::run_seed(config.base_seed, run_index)
    };
    let seed = rng::child_seed(rng::split(root, StreamRole::FeatureMap), filter_index as u64);
    let map = RandomFeatureMap::sample(config.model.input_dim(), feature_dim, filter.sigma(), seed)?;
    Ok(Some(Arc::new(map)))
}

fn filter_config(config: &ExperimentConfig, filter_index: usize) -> Result<&FilterConfig> {
    config.filters.get(filter_index).ok_or_else(|| {
        Error::invalid(format!(
            "filter index {filter_index} out of range ({} filters)",
            config.filters.len()
        ))
    })
}

/// Fresh zero-initialized filter for realization `run_index`.
pub fn build_filter(config: &ExperimentConfig, filter_index: usize, run_index: u64) -> Result<Filter> {
    let map = feature_map(config, filter_index, run_index)?;
    Ok(match (filter_config(config, filter_index)?, map) {
        (FilterConfig::Rffklms { mu, .. }, Some(map)) => Filter::RffKlms(RffKlms::new(map, *mu)?),
        (FilterConfig::Rffrls { reg_lambda, beta, .. }, Some(map)) => {
            Filter::RffRls(RffRls::new(map, *reg_lambda, *beta)?)
        }
        (
            FilterConfig::Qklms {
                mu, sigma, epsilon, ..
            },
            _,
        ) => Filter::Qklms(Qklms::new(
            config.model.input_dim(),
            GaussianKernel::new(*sigma)?,
            *mu,
            *epsilon,
        )?),
        _ => unreachable!("RFF filters always get a map"),
    })
}

fn train(mut filter: Filter, data: &Dataset, seed: u64) -> Result<RunTrace> {
    let n = data.len();
    let mut sq_errors = Vec::with_capacity(n);
    let mut dict_sizes = matches!(filter, Filter::Qklms(_)).then(|| Vec::with_capacity(n));
    let start = Instant::now();
    for (k, y) in data.ys.iter().enumerate() {
        let step = filter.step(data.x(k), *y)?;
        if !step.error.is_finite() {
            return Err(Error::NumericalBreakdown(format!(
                "non-finite prediction error at step {}",
                k + 1
            )));
        }
        sq_errors.push(step.error * step.error);
        if let Some(d) = dict_sizes.as_mut() {
            d.push(filter.dictionary_size().unwrap_or(0));
        }
    }
    let seconds = start.elapsed().as_secs_f64();
    Ok(RunTrace {
        seed,
        sq_errors,
        dict_sizes,
        seconds,
    })
}

fn run_context(config: &ExperimentConfig, filter_index: usize, run_index: u64, e: Error) -> Error {
    let filter = config
        .filters
        .get(filter_index)
        .map(FilterConfig::label)
        .unwrap_or_else(|| "<data>".into());
    Error::Run {
        filter,
        run_index,
        seed: rng::run_seed(config.base_seed, run_index),
        source: Box::new(e),
    }
}

/// One realization of one filter: fresh data, fresh state, prior errors.
pub fn run_realization(config: &ExperimentConfig, filter_index: usize, run_index: u64) -> Result<RunTrace> {
    filter_config(config, filter_index)?;
    let seed = rng::run_seed(config.base_seed, run_index);
    (|| {
        let data = Dataset::collect(&model_spec(config, run_index)?)?;
        train(build_filter(config, filter_index, run_index)?, &data, seed)
    })()
    .map_err(|e| run_context(config, filter_index, run_index, e))
}

/// All filters of one realization on a shared data stream.
fn run_all(config: &ExperimentConfig, run_index: u64) -> Result<Vec<RunTrace>> {
    let seed = rng::run_seed(config.base_seed, run_index);
    let data = Dataset::collect(&model_spec(config, run_index)?)
        .map_err(|e| run_context(config, usize::MAX, run_index, e))?;
    (0..config.filters.len())
        .map(|i| {
            build_filter(config, i, run_index)
                .and_then(|f| train(f, &data, seed))
                .map_err(|e| run_context(config, i, run_index, e))
        })
        .collect()
}

/// Per-filter partial sums over a contiguous block of runs.
struct Partial {
    sq_sum: Vec<Vec<f64>>,
    dict_sum: Vec<Option<Vec<f64>>>,
    /// Per filter, per run in index order.
    seconds: Vec<Vec<f64>>,
    final_dict: Vec<Vec<usize>>,
}

impl Partial {
    fn leaf(traces: Vec<RunTrace>) -> Self {
        let mut p = Partial {
            sq_sum: Vec::new(),
            dict_sum: Vec::new(),
            seconds: Vec::new(),
            final_dict: Vec::new(),
        };
        for t in traces {
            p.seconds.push(vec![t.seconds]);
            p.final_dict.push(t.final_dict_size().into_iter().collect());
            p.dict_sum
                .push(t.dict_sizes.map(|d| d.into_iter().map(|v| v as f64).collect()));
            p.sq_sum.push(t.sq_errors);
        }
        p
    }

    fn merge(mut self, other: Partial) -> Self {
        for (a, b) in self.sq_sum.iter_mut().zip(other.sq_sum) {
            a.iter_mut().zip(b).for_each(|(a, b)| *a += b);
        }
        for (a, b) in self.dict_sum.iter_mut().zip(other.dict_sum) {
            if let (Some(a), Some(b)) = (a.as_mut(), b) {
                a.iter_mut().zip(b).for_each(|(a, b)| *a += b);
            }
        }
        for (a, b) in self.seconds.iter_mut().zip(other.seconds) {
            a.extend(b);
        }
        for (a, b) in self.final_dict.iter_mut().zip(other.final_dict) {
            a.extend(b);
        }
        self
    }
}

/// Sum over runs `lo..hi`, split at the largest power of two below the
/// block length. Blocks of `2^k` runs are therefore summed identically
/// whether they stand alone or sit inside a larger experiment.
fn reduce(config: &ExperimentConfig, lo: u64, hi: u64) -> Result<Partial> {
    let len = hi - lo;
    if len == 1 {
        return run_all(config, lo).map(Partial::leaf);
    }
    let half = if len.is_power_of_two() {
        len / 2
    } else {
        1 << (63 - len.leading_zeros())
    };
    let (left, right) = rayon::join(
        || reduce(config, lo, lo + half),
        || reduce(config, lo + half, hi),
    );
    Ok(left?.merge(right?))
}

/// Averaged learning curve for every filter in the config.
pub fn monte_carlo(config: &ExperimentConfig) -> Result<Vec<LearningCurve>> {
    config.validate()?;
    if config.filters.is_empty() {
        return Ok(Vec::new());
    }
    let lo = config.first_run;
    let hi = lo
        .checked_add(config.n_runs)
        .ok_or_else(|| Error::Config("run index range overflows".into()))?;
    let total = reduce(config, lo, hi)?;
    let runs = config.n_runs as f64;
    let window = config.window();
    let mut curves = Vec::with_capacity(config.filters.len());
    for (i, f) in config.filters.iter().enumerate() {
        let mse: Vec<f64> = total.sq_sum[i].iter().map(|s| s / runs).collect();
        let dict = total.dict_sum[i]
            .as_ref()
            .map(|d| d.iter().map(|s| s / runs).collect());
        let finals = &total.final_dict[i];
        let mean_final = (!finals.is_empty())
            .then(|| finals.iter().map(|&m| m as f64).sum::<f64>() / finals.len() as f64);
        curves.push(LearningCurve::new(
            f.label(),
            f.algorithm(),
            config.n_runs,
            mse,
            window,
            dict,
            mean_final,
            Timing::from_samples(&total.seconds[i]),
        ));
    }
    Ok(curves)
}

/// Serial timing of full training passes; data generation and feature-map
/// sampling are excluded.
pub fn bench_timing(config: &ExperimentConfig) -> Result<Vec<(String, Timing)>> {
    if config.n_samples == 0 {
        return Err(Error::invalid("n_samples = 0: nothing to time"));
    }
    config.validate()?;
    let mut seconds = vec![Vec::new(); config.filters.len()];
    for run in config.first_run..config.first_run + config.n_runs {
        for (i, t) in run_all(config, run)?.into_iter().enumerate() {
            seconds[i].push(t.seconds);
        }
    }
    Ok(config
        .filters
        .iter()
        .zip(seconds)
        .map(|(f, s)| (f.label(), Timing::from_samples(&s)))
        .collect())
}

/// Analytical prediction for filter `filter_index` using the first
/// realization's model and map. `None` when it does not apply (not RFF-KLMS,
/// or data not from a kernel expansion).
pub fn theory_for(config: &ExperimentConfig, filter_index: usize) -> Option<Result<TheoryReport>> {
    let FilterConfig::Rffklms { mu, .. } = config.filters.get(filter_index)? else {
        return None;
    };
    let spec = match model_spec(config, config.first_run) {
        Ok(s) => s,
        Err(e) => return Some(Err(e)),
    };
    let Model::KernelExpansion {
        centers,
        coeffs,
        sigma_x,
        sigma_eta,
        ..
    } = &spec.model
    else {
        return None;
    };
    Some((|| {
        let map = feature_map(config, filter_index, config.first_run)?.expect("RFF filter has a map");
        let p = predict_convergence(&map, *sigma_x, centers, coeffs, *mu, *sigma_eta)?;
        Ok(TheoryReport::new(&map, *sigma_x, *mu, *sigma_eta, &p))
    })())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FilterSummary {
    pub label: String,
    pub algorithm: String,
    pub steady_state_mse: f64,
    pub steady_state_db: f64,
    pub window: usize,
    pub mean_dict_size: Option<f64>,
    pub timing: Timing,
    pub theory: Option<TheoryReport>,
    pub theory_error: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Summary {
    pub name: String,
    /// SHA-256 of the config's canonical JSON.
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub filters: Vec<FilterSummary>,
}

pub fn config_hash(config: &ExperimentConfig) -> String {
    use sha2::{Digest, Sha256};
    let canonical = serde_json::to_vec(config).expect("config serializes");
    hex::encode(Sha256::digest(&canonical))
}

pub fn summarize(config: &ExperimentConfig, curves: &[LearningCurve]) -> Summary {
    let filters = curves
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let (theory, theory_error) = match config.theory.then(|| theory_for(config, i)).flatten() {
                Some(Ok(t)) => (Some(t), None),
                Some(Err(e)) => (None, Some(e.to_string())),
                None => (None, None),
            };
            FilterSummary {
                label: c.label.clone(),
                algorithm: c.algorithm.clone(),
                steady_state_mse: c.steady_state,
                steady_state_db: to_db(c.steady_state),
                window: c.window,
                mean_dict_size: c.mean_final_dict_size,
                timing: c.timing,
                theory,
                theory_error,
            }
        })
        .collect();
    Summary {
        name: config.name.clone(),
        config_hash: config_hash(config),
        config: config.clone(),
        filters,
    }
}

pub fn write_summary_json(summary: &Summary, path: impl AsRef<std::path::Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(summary)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Runs an experiment and writes `<label>.csv` per filter plus
/// `summary.json` into `out_dir`.
pub fn run_experiment(config: &ExperimentConfig, out_dir: impl AsRef<std::path::Path>) -> Result<Summary> {
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let curves = monte_carlo(config)?;
    for c in &curves {
        write_curve_csv(c, out_dir.join(format!("{}.csv", file_stem(&c.label))))?;
    }
    let summary = summarize(config, &curves);
    write_summary_json(&summary, out_dir.join("summary.json"))?;
    Ok(summary)
}

fn file_stem(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect()
}
