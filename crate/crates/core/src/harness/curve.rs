use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub runs: usize,
}

impl Timing {
    pub fn from_samples(seconds: &[f64]) -> Self {
        if seconds.is_empty() {
            return Timing {
                mean: 0.0,
                min: 0.0,
                max: 0.0,
                runs: 0,
            };
        }
        Timing {
            mean: seconds.iter().sum::<f64>() / seconds.len() as f64,
            min: seconds.iter().cloned().fold(f64::INFINITY, f64::min),
            max: seconds.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            runs: seconds.len(),
        }
    }
}

/// Run-averaged squared prior error per step.
#[derive(Clone, Debug, PartialEq)]
pub struct LearningCurve {
    pub label: String,
    pub algorithm: String,
    pub n_runs: u64,
    pub per_step_mse: Vec<f64>,
    pub per_step_mse_db: Vec<f64>,
    pub window: usize,
    /// Mean of `per_step_mse` over the final `window` steps.
    pub steady_state: f64,
    /// Run-averaged dictionary size per step (QKLMS only).
    pub dict_size: Option<Vec<f64>>,
    pub mean_final_dict_size: Option<f64>,
    pub timing: Timing,
}

impl LearningCurve {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        label: String,
        algorithm: &str,
        n_runs: u64,
        per_step_mse: Vec<f64>,
        window: usize,
        dict_size: Option<Vec<f64>>,
        mean_final_dict_size: Option<f64>,
        timing: Timing,
    ) -> Self {
        let window = window.clamp(1, per_step_mse.len().max(1));
        let steady_state = tail_mean(&per_step_mse, window);
        Self {
            label,
            algorithm: algorithm.to_string(),
            n_runs,
            per_step_mse_db: per_step_mse.iter().map(|&m| to_db(m)).collect(),
            per_step_mse,
            window,
            steady_state,
            dict_size,
            mean_final_dict_size,
            timing,
        }
    }

    pub fn steady_state_db(&self) -> f64 {
        to_db(self.steady_state)
    }
}

fn tail_mean(v: &[f64], window: usize) -> f64 {
    let tail = &v[v.len().saturating_sub(window)..];
    tail.iter().sum::<f64>() / tail.len() as f64
}

fn trailing_means(mse: &[f64], trailing: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
    let mut sum = 0.0;
    (0..mse.len()).filter_map(move |k| {
        sum += mse[k];
        if k >= trailing {
            sum -= mse[k - trailing];
        }
        (k + 1 >= trailing).then(|| (k + 1, sum / trailing as f64))
    })
}

/// First step `n` (1-based) at which the mean over steps `n - trailing + 1..=n`
/// is within `rel_tol` of `target`.
pub fn convergence_step(mse: &[f64], trailing: usize, target: f64, rel_tol: f64) -> Option<usize> {
    trailing_means(mse, trailing)
        .find(|(_, m)| (m - target).abs() <= rel_tol * target)
        .map(|(n, _)| n)
}

/// First step `n` at which the trailing mean drops to `level` or below.
pub fn first_reach(mse: &[f64], trailing: usize, level: f64) -> Option<usize> {
    trailing_means(mse, trailing).find(|(_, m)| *m <= level).map(|(n, _)| n)
}

/// Columns of a curve CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveTable {
    pub n: Vec<usize>,
    pub mse: Vec<f64>,
    pub mse_db: Vec<f64>,
    pub dict_size: Option<Vec<f64>>,
}

/// CSV `n,mse,mse_db[,dict_size]` with 17 significant digits.
pub fn write_curve_csv(curve: &LearningCurve, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(std::fs::File::create(path).map_err(io)?);
    let header = if curve.dict_size.is_some() {
        "n,mse,mse_db,dict_size"
    } else {
        "n,mse,mse_db"
    };
    writeln!(w, "{header}").map_err(io)?;
    for (k, (m, db)) in curve.per_step_mse.iter().zip(&curve.per_step_mse_db).enumerate() {
        write!(w, "{},{m:.16e},{db:.16e}", k + 1).map_err(io)?;
        if let Some(d) = &curve.dict_size {
            write!(w, ",{:.16e}", d[k]).map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_curve_csv(path: impl AsRef<Path>) -> Result<CurveTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let bad = |line: usize, msg: &str| Error::Config(format!("{}:{line}: {msg}", path.display()));
    let header = lines
        .next()
        .ok_or_else(|| bad(1, "empty file"))?
        .map_err(|e| Error::io(path, e))?;
    let with_dict = match header.trim() {
        "n,mse,mse_db" => false,
        "n,mse,mse_db,dict_size" => true,
        _ => return Err(bad(1, "unexpected header")),
    };
    let mut t = CurveTable {
        n: Vec::new(),
        mse: Vec::new(),
        mse_db: Vec::new(),
        dict_size: with_dict.then(Vec::new),
    };
    for (k, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 + with_dict as usize {
            return Err(bad(k + 2, "wrong number of fields"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(k + 2, "bad number"));
        t.n.push(fields[0].parse().map_err(|_| bad(k + 2, "bad step index"))?);
        t.mse.push(num(fields[1])?);
        t.mse_db.push(num(fields[2])?);
        if let Some(d) = t.dict_size.as_mut() {
            d.push(num(fields[3])?);
        }
    }
    Ok(t)
}
