use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use rffkaf::analysis::{predict_convergence, TheoryReport};
use rffkaf::datagen::{Dataset, Model, ModelConfig};
use rffkaf::harness::{self, presets, ExperimentConfig};
use rffkaf::kernel::{approximation_sweep, RandomFeatureMap};
use rffkaf::Error;

/// Kernel adaptive filtering with random Fourier features.
#[derive(Debug, Parser)]
#[command(name = "rffkaf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a Monte Carlo experiment; writes one curve CSV per filter and summary.json.
    Run {
        #[command(flatten)]
        source: ConfigSource,
        /// Output directory.
        #[arg(long, short)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Predicted step-size bounds and steady-state MSE of RFF-KLMS on kernel-expansion data.
    Theory(TheoryArgs),
    /// Serial timing of full training passes.
    Bench {
        #[command(flatten)]
        source: ConfigSource,
        /// JSON output file (stdout if omitted).
        #[arg(long, short)]
        out: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// RMS and max kernel approximation error against the exact Gaussian kernel.
    Approx {
        /// Kernel width.
        #[arg(long)]
        sigma: f64,
        /// Input dimension d.
        #[arg(long = "input-dim")]
        input_dim: usize,
        /// Comma-separated feature counts, e.g. 100,400,1600.
        #[arg(long = "feature-dims", value_delimiter = ',', required = true)]
        feature_dims: Vec<usize>,
        /// Number of random input pairs.
        #[arg(long, default_value_t = 1000)]
        pairs: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// CSV output file (stdout if omitted).
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Write a generated data stream as CSV (n,x_1..x_d,y).
    Dump {
        #[command(flatten)]
        source: ConfigSource,
        /// Number of samples.
        #[arg(long, short)]
        n: usize,
        /// Stream seed.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// CSV output file (stdout if omitted).
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct ConfigSource {
    /// Experiment config (TOML).
    config: Option<PathBuf>,
    /// Use a bundled preset instead of a config file.
    #[arg(long)]
    preset: Option<String>,
}

impl ConfigSource {
    fn load(&self) -> rffkaf::Result<ExperimentConfig> {
        match (&self.config, &self.preset) {
            (Some(path), _) => ExperimentConfig::load(path),
            (None, Some(name)) => presets::load(name),
            (None, None) => unreachable!("clap enforces one source"),
        }
    }
}

#[derive(Debug, Args)]
struct Overrides {
    /// Override the number of runs.
    #[arg(long)]
    runs: Option<u64>,
    /// Override the base seed.
    #[arg(long = "base-seed")]
    base_seed: Option<u64>,
}

impl Overrides {
    fn apply(&self, mut cfg: ExperimentConfig) -> ExperimentConfig {
        if let Some(r) = self.runs {
            cfg.n_runs = r;
        }
        if let Some(s) = self.base_seed {
            cfg.base_seed = s;
        }
        cfg
    }
}

#[derive(Debug, Args)]
struct TheoryArgs {
    /// Take model, map and step size from the first RFF-KLMS filter of this config.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Same as --config with a bundled preset.
    #[arg(long)]
    preset: Option<String>,
    /// Number of random features D (inline mode).
    #[arg(long = "feature-dim", short = 'D', required_unless_present_any = ["config", "preset"])]
    feature_dim: Option<usize>,
    /// Kernel width.
    #[arg(long, default_value_t = 5.0)]
    sigma: f64,
    /// Input scale: x ~ N(0, sigma_x² I).
    #[arg(long = "sigma-x", default_value_t = 1.0)]
    sigma_x: f64,
    /// Step size.
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    /// Observation noise standard deviation.
    #[arg(long = "sigma-eta", default_value_t = 0.1)]
    sigma_eta: f64,
    /// Seed of the feature map and the expansion parameters.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Input dimension d.
    #[arg(long = "input-dim", default_value_t = 5)]
    input_dim: usize,
    /// Number of expansion centers M, drawn from N(0, I).
    #[arg(long, default_value_t = 10)]
    centers: usize,
    /// Expansion coefficients are drawn from N(0, coeff_std²).
    #[arg(long = "coeff-std", default_value_t = 5.0)]
    coeff_std: f64,
    /// JSON output file (stdout if omitted).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

fn output(path: Option<&Path>) -> rffkaf::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| io_err(p, e))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn io_err(path: &Path, source: io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn finish(mut w: Box<dyn Write>, path: Option<&Path>) -> rffkaf::Result<()> {
    w.flush()
        .map_err(|e| io_err(path.unwrap_or(Path::new("<stdout>")), e))
}

fn write_json(value: &serde_json::Value, path: Option<&Path>) -> rffkaf::Result<()> {
    let mut w = output(path)?;
    let text = serde_json::to_string_pretty(value)?;
    writeln!(w, "{text}").map_err(|e| io_err(path.unwrap_or(Path::new("<stdout>")), e))?;
    finish(w, path)
}

fn theory(args: &TheoryArgs) -> rffkaf::Result<TheoryReport> {
    let cfg = match (&args.config, &args.preset) {
        (Some(p), _) => Some(ExperimentConfig::load(p)?),
        (None, Some(name)) => Some(presets::load(name)?),
        _ => None,
    };
    if let Some(cfg) = cfg {
        let index = cfg
            .filters
            .iter()
            .position(|f| f.algorithm() == "rffklms")
            .ok_or_else(|| Error::Config("config has no rffklms filter".into()))?;
        return harness::theory_for(&cfg, index)
            .unwrap_or_else(|| Err(Error::Config("theory needs kernel_expansion data".into())));
    }
    let feature_dim = args.feature_dim.expect("clap requires D in inline mode");
    let template = ModelConfig::KernelExpansion {
        input_dim: args.input_dim,
        n_centers: args.centers,
        center_std: 1.0,
        coeff_std: args.coeff_std,
        centers: None,
        coeffs: None,
        sigma: args.sigma,
        sigma_x: args.sigma_x,
        sigma_eta: args.sigma_eta,
    };
    let Model::KernelExpansion { centers, coeffs, .. } = template.instantiate(args.seed, 1)?.model else {
        unreachable!()
    };
    let map = Arc::new(RandomFeatureMap::sample(args.input_dim, feature_dim, args.sigma, args.seed)?);
    let p = predict_convergence(&map, args.sigma_x, &centers, &coeffs, args.mu, args.sigma_eta)?;
    Ok(TheoryReport::new(&map, args.sigma_x, args.mu, args.sigma_eta, &p))
}

fn run(cli: Cli) -> rffkaf::Result<()> {
    match cli.command {
        Command::Run {
            source,
            out,
            overrides,
        } => {
            let cfg = overrides.apply(source.load()?);
            let summary = harness::run_experiment(&cfg, &out)?;
            for f in &summary.filters {
                let dict = f
                    .mean_dict_size
                    .map(|m| format!("  mean dictionary size {m:.2}"))
                    .unwrap_or_default();
                let theory = f
                    .theory
                    .as_ref()
                    .map(|t| format!("  predicted {:.4e}", t.steady_state_mse))
                    .unwrap_or_default();
                eprintln!(
                    "{}: steady-state MSE {:.4e} ({:.2} dB){dict}{theory}",
                    f.label, f.steady_state_mse, f.steady_state_db
                );
            }
            Ok(())
        }
        Command::Theory(args) => {
            let report = theory(&args)?;
            write_json(&serde_json::to_value(&report)?, args.out.as_deref())
        }
        Command::Bench {
            source,
            out,
            overrides,
        } => {
            let cfg = overrides.apply(source.load()?);
            let timings = harness::bench_timing(&cfg)?;
            let doc: Vec<serde_json::Value> = timings
                .iter()
                .map(|(label, t)| {
                    serde_json::json!({
                        "label": label,
                        "mean_s": t.mean,
                        "min_s": t.min,
                        "max_s": t.max,
                        "runs": t.runs,
                    })
                })
                .collect();
            write_json(&serde_json::Value::Array(doc), out.as_deref())
        }
        Command::Approx {
            sigma,
            input_dim,
            feature_dims,
            pairs,
            seed,
            out,
        } => {
            let rows = approximation_sweep(sigma, input_dim, &feature_dims, pairs, seed)?;
            let path = out.as_deref();
            let mut w = output(path)?;
            let werr = |e| io_err(path.unwrap_or(Path::new("<stdout>")), e);
            writeln!(w, "D,rms_error,max_error").map_err(werr)?;
            for r in rows {
                writeln!(w, "{},{:e},{:e}", r.feature_dim, r.rms_error, r.max_error).map_err(werr)?;
            }
            finish(w, path)
        }
        Command::Dump {
            source,
            n,
            seed,
            out,
        } => {
            let cfg = source.load()?;
            let data = Dataset::collect(&cfg.model.instantiate(seed, n)?)?;
            let path = out.as_deref();
            let mut w = output(path)?;
            data.write_csv(&mut w)
                .map_err(|e| io_err(path.unwrap_or(Path::new("<stdout>")), e))?;
            finish(w, path)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
