//! Parameter sweeps: one trace per grid point plus a summary with fitted
//! log-log rates.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{QoptError, Result};
use crate::harness::config::{seed_from_env, Algorithm, ExperimentConfig};
use crate::harness::run::run_experiment;
use crate::parallel::{map_indices, Execution};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRun {
    pub index: usize,
    pub overrides: Map<String, Value>,
    pub path: String,
    pub algorithm: String,
    pub epsilon: Option<f64>,
    #[serde(rename = "T")]
    pub iterations: Option<usize>,
    pub final_gap: Option<f64>,
    pub oracle_calls: u64,
    pub failure: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSummary {
    pub runs: Vec<SweepRun>,
    pub fits: BTreeMap<String, Fit>,
}

/// Cartesian product of a `{key: [values...]}` grid, keys in sorted order.
pub fn expand_grid(grid: &Value) -> Result<Vec<Map<String, Value>>> {
    let obj = grid
        .as_object()
        .ok_or_else(|| QoptError::config("grid", "expected an object of value lists"))?;
    if obj.is_empty() {
        return Err(QoptError::config("grid", "grid is empty"));
    }
    let mut points = vec![Map::new()];
    for (key, values) in obj {
        let values = values
            .as_array()
            .filter(|v| !v.is_empty())
            .ok_or_else(|| QoptError::config(format!("grid.{key}"), "expected a nonempty list"))?;
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.insert(key.clone(), v.clone());
                    q
                })
            })
            .collect();
    }
    Ok(points)
}

/// Least-squares line through `(x, y)`.
pub fn fit_line(points: &[(f64, f64)]) -> Option<Fit> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some(Fit {
        slope,
        intercept: my - slope * mx,
    })
}

/// Run every grid point (concurrently under `Execution::Parallel`), writing
/// `run_###.csv` files and `summary.json` into `out_dir`.
pub fn sweep(base: &Value, grid: &Value, out_dir: &Path, exec: Execution) -> Result<SweepSummary> {
    let points = expand_grid(grid)?;
    let base = base
        .as_object()
        .ok_or_else(|| QoptError::config("config", "expected a JSON object"))?;
    let seed = seed_from_env()?;
    std::fs::create_dir_all(out_dir)?;

    let mut configs = Vec::with_capacity(points.len());
    for (i, overrides) in points.iter().enumerate() {
        let mut v = base.clone();
        for (k, val) in overrides {
            v.insert(k.clone(), val.clone());
        }
        // A grid over one of epsilon/T replaces the other for baselines.
        if overrides.contains_key("T") && !overrides.contains_key("epsilon") {
            v.remove("epsilon");
        }
        if overrides.contains_key("epsilon") && !overrides.contains_key("T") {
            v.remove("T");
        }
        let path = out_dir.join(format!("run_{i:03}.csv"));
        v.insert("output_path".into(), Value::String(path.to_string_lossy().into()));
        configs.push((ExperimentConfig::from_value(&Value::Object(v), seed)?, path));
    }

    let results = map_indices(exec, configs.len(), |i| {
        let (cfg, path) = &configs[i];
        (run_experiment(cfg), path.clone())
    });

    let mut runs = Vec::with_capacity(results.len());
    let mut samples: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for (i, (outcome, path)) in results.into_iter().enumerate() {
        let cfg = &configs[i].0;
        let run = summarize(i, &points[i], cfg, outcome, path);
        if run.failure.is_none() {
            let xy = match cfg.algorithm {
                Algorithm::Accelerated => cfg
                    .epsilon
                    .map(|e| (e.ln(), (run.oracle_calls as f64).ln())),
                _ => match (run.iterations, run.final_gap) {
                    (Some(t), Some(g)) if g > 0.0 && t > 0 => Some(((t as f64).ln(), g.ln())),
                    _ => None,
                },
            };
            if let Some(p) = xy {
                samples.entry(run.algorithm.clone()).or_default().push(p);
            }
        }
        runs.push(run);
    }
    let fits = samples
        .into_iter()
        .filter_map(|(alg, pts)| fit_line(&pts).map(|f| (alg, f)))
        .collect();
    let summary = SweepSummary { runs, fits };
    let text = serde_json::to_string_pretty(&summary).map_err(|e| QoptError::Io(e.to_string()))?;
    std::fs::write(out_dir.join("summary.json"), text + "\n")?;
    Ok(summary)
}

fn summarize(
    index: usize,
    overrides: &Map<String, Value>,
    cfg: &ExperimentConfig,
    outcome: Result<crate::trace::Trace>,
    path: PathBuf,
) -> SweepRun {
    let (final_gap, oracle_calls, failure) = match outcome {
        Ok(t) => (t.final_gap, t.oracle_calls, None),
        Err(e) => (None, 0, Some(e.to_string())),
    };
    SweepRun {
        index,
        overrides: overrides.clone(),
        path: path.to_string_lossy().into(),
        algorithm: cfg.algorithm.as_str().into(),
        epsilon: cfg.epsilon,
        iterations: cfg.iterations,
        final_gap,
        oracle_calls,
        failure,
    }
}
