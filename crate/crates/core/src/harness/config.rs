//! Experiment configuration: parsing, defaults and validation. Every error
//! names the offending field.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::baselines::{frank_wolfe_bound, pgd_bound};
use crate::error::{QoptError, Result};
use crate::objectives::{make_catalogue_objective, FirstOrderOracle, Objective, CATALOGUE};
use crate::sets::MEMBERSHIP_TOL;

pub const SEED_ENV: &str = "QOPT_SEED";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Accelerated,
    Pgd,
    FrankWolfe,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Accelerated => "accelerated",
            Algorithm::Pgd => "pgd",
            Algorithm::FrankWolfe => "frank_wolfe",
        }
    }

    fn parse(name: &str) -> Result<Self> {
        match name {
            "accelerated" => Ok(Algorithm::Accelerated),
            "pgd" => Ok(Algorithm::Pgd),
            "frank_wolfe" => Ok(Algorithm::FrankWolfe),
            other => Err(QoptError::config(
                "algorithm",
                format!("unknown algorithm `{other}` (expected accelerated, pgd or frank_wolfe)"),
            )),
        }
    }
}

/// The raw file layout. All fields are optional here so that missing ones
/// are reported by name during validation.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    algorithm: Option<String>,
    objective: Option<String>,
    dim: Option<usize>,
    set: Option<Value>,
    params: Option<Map<String, Value>>,
    x0: Option<Value>,
    epsilon: Option<f64>,
    #[serde(rename = "T")]
    iterations: Option<usize>,
    seed: Option<u64>,
    output_path: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StartRule {
    /// The set's canonical vertex.
    Vertex,
    /// The set's geometric center.
    Center,
    Point(Vec<f64>),
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub objective: Objective,
    /// Catalogue parameters, with top-level `dim` and `set` folded in.
    pub objective_params: Map<String, Value>,
    pub x0: Vec<f64>,
    pub epsilon: Option<f64>,
    /// Iteration count for the baselines (given, or derived from epsilon).
    pub iterations: Option<usize>,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
    /// The validated input, echoed into trace headers.
    pub echo: Value,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| QoptError::config("config", format!("{}: {e}", path.display())))?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| QoptError::config("config", format!("invalid JSON: {e}")))?;
        Self::from_value(&value, seed_from_env()?)
    }

    /// Validate a JSON config; `seed_override` (from the environment) wins
    /// over the file's seed.
    pub fn from_value(value: &Value, seed_override: Option<u64>) -> Result<Self> {
        let raw: RawConfig = serde_json::from_value(value.clone()).map_err(|e| {
            let msg = e.to_string();
            let field = msg
                .split('`')
                .nth(1)
                .filter(|_| msg.starts_with("unknown field"))
                .unwrap_or("config")
                .to_string();
            QoptError::config(field, msg)
        })?;

        let algorithm = Algorithm::parse(
            raw.algorithm
                .as_deref()
                .ok_or_else(|| QoptError::config("algorithm", "missing"))?,
        )?;
        let name = raw
            .objective
            .clone()
            .ok_or_else(|| QoptError::config("objective", "missing"))?;
        if !CATALOGUE.contains(&name.as_str()) {
            return Err(QoptError::config(
                "objective",
                format!("unknown objective `{name}` (expected one of {})", CATALOGUE.join(", ")),
            ));
        }
        let mut objective_params = raw.params.clone().unwrap_or_default();
        if let Some(d) = raw.dim {
            objective_params.insert("dim".into(), Value::from(d));
        }
        if let Some(s) = &raw.set {
            objective_params.insert("set".into(), s.clone());
        }
        let objective = make_catalogue_objective(&name, &objective_params).map_err(|e| match e {
            QoptError::Config { .. } => e,
            other => QoptError::config("params", other.to_string()),
        })?;

        let set = objective.feasible_set();
        let rule = match &raw.x0 {
            None => StartRule::Vertex,
            Some(Value::String(s)) if s == "vertex" => StartRule::Vertex,
            Some(Value::String(s)) if s == "center" => StartRule::Center,
            Some(v @ Value::Array(_)) => StartRule::Point(
                serde_json::from_value(v.clone())
                    .map_err(|_| QoptError::config("x0", "expected an array of numbers"))?,
            ),
            Some(_) => {
                return Err(QoptError::config(
                    "x0",
                    "expected \"vertex\", \"center\" or an explicit point",
                ))
            }
        };
        let x0 = match rule {
            StartRule::Vertex => set.canonical_vertex(),
            StartRule::Center => set.center_point(),
            StartRule::Point(p) => {
                if p.len() != set.dimension() {
                    return Err(QoptError::config(
                        "x0",
                        format!("expected {} coordinates, got {}", set.dimension(), p.len()),
                    ));
                }
                if !p.iter().all(|v| v.is_finite()) || !set.contains_unchecked(&p, MEMBERSHIP_TOL) {
                    return Err(QoptError::config("x0", "initial point must be feasible"));
                }
                p
            }
        };

        if let Some(e) = raw.epsilon {
            if !(e.is_finite() && e > 0.0) {
                return Err(QoptError::config("epsilon", "must be positive"));
            }
        }
        let iterations = match algorithm {
            Algorithm::Accelerated => {
                if raw.iterations.is_some() {
                    return Err(QoptError::config(
                        "T",
                        "the accelerated method derives T from epsilon; give epsilon only",
                    ));
                }
                if raw.epsilon.is_none() {
                    return Err(QoptError::config("epsilon", "required for the accelerated method"));
                }
                None
            }
            Algorithm::Pgd | Algorithm::FrankWolfe => match (raw.epsilon, raw.iterations) {
                (Some(_), Some(_)) | (None, None) => {
                    return Err(QoptError::config("T", "give exactly one of epsilon and T"));
                }
                (None, Some(t)) => Some(t),
                (Some(eps), None) => Some(iterations_for_epsilon(algorithm, &objective, eps)),
            },
        };

        let seed = seed_override.or(raw.seed).unwrap_or(0);
        let mut echo = value.clone();
        if let Value::Object(m) = &mut echo {
            m.insert("seed".into(), Value::from(seed));
            m.remove("output_path");
        }
        Ok(ExperimentConfig {
            algorithm,
            objective,
            objective_params,
            x0,
            epsilon: raw.epsilon,
            iterations,
            seed,
            output_path: raw.output_path.map(PathBuf::from),
            echo,
        })
    }
}

pub fn seed_from_env() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| QoptError::config(SEED_ENV, format!("not an unsigned integer: `{s}`"))),
        Err(_) => Ok(None),
    }
}

/// Smallest `T ≥ 1` whose rate envelope (with `D = diam(X)`) is at most ε.
pub fn iterations_for_epsilon(algorithm: Algorithm, obj: &Objective, epsilon: f64) -> usize {
    let (l, d, g) = (obj.smoothness(), obj.feasible_set().diameter(), obj.quasar_gamma());
    let at_zero = match algorithm {
        Algorithm::FrankWolfe => frank_wolfe_bound(l, d, g, 0),
        _ => pgd_bound(l, d, g, 0),
    };
    // bound(t) = bound(0)/(t+1)
    ((at_zero / epsilon).ceil() as usize).saturating_sub(1).max(1)
}
