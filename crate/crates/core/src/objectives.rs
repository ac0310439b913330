//! First-order oracles with call accounting, the catalogue of test problems,
//! and sampled certificates of quasar convexity and smoothness.

use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{QoptError, Result};
use crate::linalg;
use crate::parallel::map_slice;
use crate::sampling::{grid, Sampling};
use crate::sets::{FeasibleSet, SetSpec, MEMBERSHIP_TOL};

/// Maps a point to `(f(x), ∇f(x))`.
pub type Evaluator = Arc<dyn Fn(&[f64]) -> (f64, Vec<f64>) + Send + Sync>;

/// Number of first-order oracle queries made during one run.
///
/// A counter belongs to exactly one run; concurrent runs each own their own.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OracleCounter {
    calls: u64,
}

impl OracleCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn calls(&self) -> u64 {
        self.calls
    }

    pub fn reset(&mut self) {
        self.calls = 0;
    }

    fn record(&mut self) {
        self.calls += 1;
    }
}

/// The part of an objective that solvers are allowed to see. It carries no
/// quasar-convexity constant, so anything generic over this trait is
/// necessarily γ-free.
pub trait FirstOrderOracle: Sync {
    fn name(&self) -> &str;
    fn feasible_set(&self) -> &FeasibleSet;
    fn smoothness(&self) -> f64;
    /// `f(x*)` when known; used only to report gaps.
    fn optimal_value(&self) -> Option<f64>;
    fn eval(&self, x: &[f64], counter: &mut OracleCounter) -> Result<(f64, Vec<f64>)>;

    fn dimension(&self) -> usize {
        self.feasible_set().dimension()
    }
}

/// A smooth objective over a compact convex set, tagged with its smoothness
/// constant `L`, quasar-convexity constant `γ` and (optionally) a known
/// minimizer.
#[derive(Clone)]
pub struct Objective {
    name: String,
    evaluator: Evaluator,
    smoothness: f64,
    quasar_gamma: f64,
    center: Option<Vec<f64>>,
    optimal_value: Option<f64>,
    set: FeasibleSet,
}

impl fmt::Debug for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Objective")
            .field("name", &self.name)
            .field("smoothness", &self.smoothness)
            .field("quasar_gamma", &self.quasar_gamma)
            .field("center", &self.center)
            .field("optimal_value", &self.optimal_value)
            .field("set", &self.set)
            .finish()
    }
}

impl Objective {
    pub fn new(
        name: impl Into<String>,
        set: FeasibleSet,
        smoothness: f64,
        quasar_gamma: f64,
        evaluator: Evaluator,
    ) -> Result<Self> {
        if !(smoothness.is_finite() && smoothness > 0.0) {
            return Err(QoptError::invalid("smoothness constant L must be positive"));
        }
        if !(quasar_gamma > 0.0 && quasar_gamma <= 1.0) {
            return Err(QoptError::invalid("quasar-convexity constant must lie in (0, 1]"));
        }
        Ok(Objective {
            name: name.into(),
            evaluator,
            smoothness,
            quasar_gamma,
            center: None,
            optimal_value: None,
            set,
        })
    }

    /// Attach a known minimizer. Its value is computed with one uncounted
    /// evaluation.
    pub fn with_center(mut self, center: Vec<f64>) -> Result<Self> {
        if center.len() != self.set.dimension() {
            return Err(QoptError::invalid("center dimension does not match the set"));
        }
        if !self.set.contains_unchecked(&center, MEMBERSHIP_TOL) {
            return Err(QoptError::invalid("center must lie in the feasible set"));
        }
        self.optimal_value = Some((self.evaluator)(&center).0);
        self.center = Some(center);
        Ok(self)
    }

    pub fn quasar_gamma(&self) -> f64 {
        self.quasar_gamma
    }

    pub fn center(&self) -> Option<&[f64]> {
        self.center.as_deref()
    }

    pub fn evaluator(&self) -> Evaluator {
        Arc::clone(&self.evaluator)
    }

    /// Same objective with a different declared γ (used for measured γ and
    /// for γ-independence tests).
    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(QoptError::invalid("quasar-convexity constant must lie in (0, 1]"));
        }
        self.quasar_gamma = gamma;
        Ok(self)
    }

    /// Replace the evaluator with a wrapper around the current one.
    pub fn wrap_evaluator(&self, wrap: impl FnOnce(Evaluator) -> Evaluator) -> Objective {
        let mut out = self.clone();
        out.evaluator = wrap(self.evaluator());
        out
    }

    fn require_center(&self) -> Result<(&[f64], f64)> {
        match (&self.center, self.optimal_value) {
            (Some(c), Some(v)) => Ok((c, v)),
            _ => Err(QoptError::precondition(format!(
                "objective `{}` has no known center",
                self.name
            ))),
        }
    }
}

impl FirstOrderOracle for Objective {
    fn name(&self) -> &str {
        &self.name
    }

    fn feasible_set(&self) -> &FeasibleSet {
        &self.set
    }

    fn smoothness(&self) -> f64 {
        self.smoothness
    }

    fn optimal_value(&self) -> Option<f64> {
        self.optimal_value
    }

    fn eval(&self, x: &[f64], counter: &mut OracleCounter) -> Result<(f64, Vec<f64>)> {
        if x.len() != self.set.dimension() {
            return Err(QoptError::invalid(format!(
                "query point has dimension {}, objective `{}` expects {}",
                x.len(),
                self.name,
                self.set.dimension()
            )));
        }
        if !linalg::all_finite(x) {
            return Err(QoptError::invalid("query point must be finite"));
        }
        counter.record();
        Ok((self.evaluator)(x))
    }
}

// ---------------------------------------------------------------------------
// Catalogue
// ---------------------------------------------------------------------------

pub const CATALOGUE: [&str; 5] = [
    "quadratic",
    "affine_plus_quadratic",
    "example1",
    "fig1_counterexample",
    "glm_sigmoid",
];

/// max |f''| of `(x² + 1/8)^{1/6}` on [-5, 5], attained at x = 0 where it
/// equals 8^{5/6}/3.
pub const EXAMPLE1_SMOOTHNESS: f64 = 1.885_618_083_164_127;

/// Regularization parameter of the counterexample's proximal subproblem.
pub const FIG1_LAMBDA: f64 = 50.0;

pub fn example1_value(x: f64) -> f64 {
    (x * x + 0.125).powf(1.0 / 6.0)
}

pub fn example1_derivative(x: f64) -> f64 {
    x * (x * x + 0.125).powf(-5.0 / 6.0) / 3.0
}

/// Anchor `x₀` making `x = -2` a critical point of `f(x) + (x - x₀)²/(2λ)`.
pub fn fig1_anchor() -> f64 {
    -2.0 + FIG1_LAMBDA * example1_derivative(-2.0)
}

/// Build a catalogue objective. `params` may carry `dim`, `set` and the
/// per-objective keys documented in the README.
pub fn make_catalogue_objective(name: &str, params: &Map<String, Value>) -> Result<Objective> {
    match name {
        "quadratic" => quadratic(params),
        "affine_plus_quadratic" => affine_plus_quadratic(params),
        "example1" => example1(params),
        "fig1_counterexample" => fig1_counterexample(params),
        "glm_sigmoid" => glm_sigmoid(params),
        other => Err(QoptError::invalid(format!(
            "unknown catalogue objective `{other}` (expected one of {})",
            CATALOGUE.join(", ")
        ))),
    }
}

fn param_err(key: &str, msg: impl Into<String>) -> QoptError {
    QoptError::config(format!("params.{key}"), msg)
}

fn get_f64(params: &Map<String, Value>, key: &str) -> Result<Option<f64>> {
    match params.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => v
            .as_f64()
            .map(Some)
            .ok_or_else(|| param_err(key, "expected a number")),
    }
}

fn get_vec(params: &Map<String, Value>, key: &str) -> Result<Option<Vec<f64>>> {
    match params.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => serde_json::from_value::<Vec<f64>>(v.clone())
            .map(Some)
            .map_err(|_| param_err(key, "expected an array of numbers")),
    }
}

fn get_usize(params: &Map<String, Value>, key: &str) -> Result<Option<usize>> {
    match params.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => v
            .as_u64()
            .map(|n| Some(n as usize))
            .ok_or_else(|| param_err(key, "expected a nonnegative integer")),
    }
}

fn get_set(params: &Map<String, Value>) -> Result<Option<FeasibleSet>> {
    match params.get("set") {
        None | Some(Value::Null) => Ok(None),
        Some(v) => {
            let spec: SetSpec = serde_json::from_value(v.clone())
                .map_err(|e| QoptError::config("set", e.to_string()))?;
            FeasibleSet::try_from(spec)
                .map(Some)
                .map_err(|e| QoptError::config("set", e.to_string()))
        }
    }
}

/// Resolve `(dim, set)` from params, defaulting to `[-1, 1]^dim`.
fn dim_and_set(
    params: &Map<String, Value>,
    fallback_dim: usize,
) -> Result<(usize, FeasibleSet)> {
    let dim = get_usize(params, "dim")?;
    match get_set(params)? {
        Some(set) => {
            if let Some(d) = dim {
                if d != set.dimension() {
                    return Err(QoptError::config(
                        "dim",
                        format!("dim {d} disagrees with set dimension {}", set.dimension()),
                    ));
                }
            }
            Ok((set.dimension(), set))
        }
        None => {
            let d = dim.unwrap_or(fallback_dim);
            if d == 0 {
                return Err(QoptError::config("dim", "dimension must be positive"));
            }
            Ok((d, FeasibleSet::cube(d, -1.0, 1.0)?))
        }
    }
}

/// `½ Σ dᵢ (xᵢ - cᵢ)²`.
fn quadratic(params: &Map<String, Value>) -> Result<Objective> {
    let hint = get_vec(params, "diag")?
        .map(|d| d.len())
        .or(get_vec(params, "target")?.map(|t| t.len()))
        .unwrap_or(2);
    let (dim, set) = dim_and_set(params, hint)?;

    let diag = if let Some(d) = get_vec(params, "diag")? {
        d
    } else if let Some(range) = get_vec(params, "log_spectrum")? {
        if range.len() != 2 || !(range[0] > 0.0 && range[1] >= range[0]) {
            return Err(param_err("log_spectrum", "expected [min, max] with 0 < min <= max"));
        }
        log_spaced(range[0], range[1], dim)
    } else {
        vec![get_f64(params, "curvature")?.unwrap_or(1.0); dim]
    };
    if diag.len() != dim {
        return Err(param_err("diag", format!("expected {dim} entries")));
    }
    if diag.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
        return Err(param_err("diag", "curvatures must be positive"));
    }
    let target = get_vec(params, "target")?.unwrap_or_else(|| vec![0.0; dim]);
    if target.len() != dim {
        return Err(param_err("target", format!("expected {dim} entries")));
    }

    let smoothness = diag.iter().cloned().fold(0.0, f64::max);
    let isotropic = diag.iter().all(|d| *d == diag[0]);
    let center = if isotropic {
        set.project(&target)?
    } else if set.contains_unchecked(&target, MEMBERSHIP_TOL) {
        target.clone()
    } else {
        return Err(param_err(
            "target",
            "an anisotropic quadratic needs a feasible target (its constrained minimizer is then the target)",
        ));
    };

    let evaluator: Evaluator = Arc::new(move |x: &[f64]| {
        let mut value = 0.0;
        let grad = x
            .iter()
            .zip(&target)
            .zip(&diag)
            .map(|((xi, ci), di)| {
                let r = xi - ci;
                value += 0.5 * di * r * r;
                di * r
            })
            .collect();
        (value, grad)
    });
    Objective::new("quadratic", set, smoothness, 1.0, evaluator)?.with_center(center)
}

fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![hi];
    }
    let ratio = (hi / lo).ln();
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo * (ratio * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// `⟨a, x⟩ + (s/2)‖x‖²`; with `s = 0` this is the affine objective.
fn affine_plus_quadratic(params: &Map<String, Value>) -> Result<Objective> {
    let hint = get_vec(params, "linear")?.map(|a| a.len()).unwrap_or(2);
    let (dim, set) = dim_and_set(params, hint)?;
    let linear = get_vec(params, "linear")?
        .unwrap_or_else(|| (0..dim).map(|i| 1.0 / (i + 1) as f64).collect());
    if linear.len() != dim {
        return Err(param_err("linear", format!("expected {dim} entries")));
    }
    let curvature = get_f64(params, "curvature")?.unwrap_or(1.0);
    if !(curvature.is_finite() && curvature >= 0.0) {
        return Err(param_err("curvature", "must be nonnegative"));
    }
    let smoothness = match get_f64(params, "smoothness")? {
        Some(l) if l >= curvature && l > 0.0 => l,
        Some(_) => return Err(param_err("smoothness", "must be positive and >= curvature")),
        None if curvature > 0.0 => curvature,
        None => 1.0,
    };
    let center = if curvature > 0.0 {
        set.project(&linalg::scale(&linear, -1.0 / curvature))?
    } else {
        set.lmo(&linear)?
    };
    let evaluator: Evaluator = Arc::new(move |x: &[f64]| {
        let value = linalg::dot(&linear, x) + 0.5 * curvature * linalg::dot(x, x);
        let grad = linalg::add_scaled(&linear, curvature, x);
        (value, grad)
    });
    Objective::new("affine_plus_quadratic", set, smoothness, 1.0, evaluator)?.with_center(center)
}

fn example1_set(params: &Map<String, Value>, name: &str) -> Result<FeasibleSet> {
    let canonical = FeasibleSet::cube(1, -5.0, 5.0)?;
    match get_set(params)? {
        Some(s) if s != canonical => Err(QoptError::config(
            "set",
            format!("{name} is defined on [-5, 5] only"),
        )),
        _ => Ok(canonical),
    }
}

/// `(x² + 1/8)^{1/6}` on [-5, 5]: ½-quasar convex with center 0.
fn example1(params: &Map<String, Value>) -> Result<Objective> {
    let set = example1_set(params, "example1")?;
    let evaluator: Evaluator =
        Arc::new(|x: &[f64]| (example1_value(x[0]), vec![example1_derivative(x[0])]));
    Objective::new("example1", set, EXAMPLE1_SMOOTHNESS, 0.5, evaluator)?.with_center(vec![0.0])
}

/// example1 plus `(x - x₀)²/(2λ)` with λ = 50: smooth but with a local
/// maximizer at -2, hence not quasar convex on [-5, 5] for any γ.
fn fig1_counterexample(params: &Map<String, Value>) -> Result<Objective> {
    let set = example1_set(params, "fig1_counterexample")?;
    let gamma = get_f64(params, "gamma")?.unwrap_or(1.0);
    let anchor = fig1_anchor();
    let value = move |x: f64| example1_value(x) + (x - anchor).powi(2) / (2.0 * FIG1_LAMBDA);
    let derivative = move |x: f64| example1_derivative(x) + (x - anchor) / FIG1_LAMBDA;
    let center = minimize_on_interval(value, derivative, -5.0, 5.0);
    let evaluator: Evaluator = Arc::new(move |x: &[f64]| (value(x[0]), vec![derivative(x[0])]));
    Objective::new(
        "fig1_counterexample",
        set,
        EXAMPLE1_SMOOTHNESS + 1.0 / FIG1_LAMBDA,
        gamma,
        evaluator,
    )?
    .with_center(vec![center])
}

/// Global minimizer of a smooth scalar function on `[lo, hi]`: dense grid,
/// then bisection on the derivative inside the bracketing cell.
fn minimize_on_interval(
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
) -> f64 {
    let pts = grid(lo, hi, 100_001);
    let h = (hi - lo) / 100_000.0;
    let best = pts
        .iter()
        .cloned()
        .min_by(|a, b| f(*a).total_cmp(&f(*b)))
        .unwrap_or(lo);
    let (mut a, mut b) = ((best - h).max(lo), (best + h).min(hi));
    if df(a) < 0.0 && df(b) > 0.0 {
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if df(m) > 0.0 {
                b = m;
            } else {
                a = m;
            }
        }
        0.5 * (a + b)
    } else {
        best
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Bound on |d²/dz² (σ(z) - y)²| for y ∈ [0, 1]: 2·(1/4)² + 2·√3/18.
const GLM_CURVATURE_BOUND: f64 = 0.3175;

/// Realizable sigmoid regression `w ↦ Σ (σ(⟨w, xᵢ⟩) - yᵢ)²` on a small
/// synthetic dataset. γ is measured on a dense sample, not assumed.
fn glm_sigmoid(params: &Map<String, Value>) -> Result<Objective> {
    let hint = get_vec(params, "w_star")?.map(|w| w.len()).unwrap_or(2);
    let dim = get_usize(params, "dim")?.or(get_set(params)?.map(|s| s.dimension())).unwrap_or(hint);
    let set = match get_set(params)? {
        Some(s) => s,
        None => FeasibleSet::cube(dim, -2.0, 2.0)?,
    };
    if set.dimension() != dim {
        return Err(QoptError::config("dim", "dim disagrees with set dimension"));
    }
    let w_star = get_vec(params, "w_star")?
        .unwrap_or_else(|| (0..dim).map(|i| (-0.5f64).powi(i as i32)).collect());
    if w_star.len() != dim || !set.contains_unchecked(&w_star, MEMBERSHIP_TOL) {
        return Err(param_err("w_star", "must be a feasible point of the set's dimension"));
    }
    let n = get_usize(params, "samples")?.unwrap_or(24);
    if n == 0 {
        return Err(param_err("samples", "need at least one data point"));
    }
    let data_seed = get_usize(params, "data_seed")?.unwrap_or(7) as u64;

    let mut rng = ChaCha8Rng::seed_from_u64(data_seed);
    let features: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    let labels: Vec<f64> = features
        .iter()
        .map(|x| sigmoid(linalg::dot(&w_star, x)))
        .collect();

    // ‖XᵀX‖_F bounds its largest eigenvalue.
    let mut gram_sq = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let gij: f64 = features.iter().map(|x| x[i] * x[j]).sum();
            gram_sq += gij * gij;
        }
    }
    let smoothness = GLM_CURVATURE_BOUND * gram_sq.sqrt();

    let evaluator: Evaluator = Arc::new(move |w: &[f64]| {
        let mut value = 0.0;
        let mut grad = vec![0.0; w.len()];
        for (x, y) in features.iter().zip(&labels) {
            let s = sigmoid(linalg::dot(w, x));
            let r = s - y;
            value += r * r;
            linalg::axpy(&mut grad, 2.0 * r * s * (1.0 - s), x);
        }
        (value, grad)
    });
    let provisional =
        Objective::new("glm_sigmoid", set, smoothness, 1.0, evaluator)?.with_center(w_star)?;
    let measured = estimate_quasar_gamma(&provisional, &Sampling::new(20_000).with_seed(data_seed))?;
    if measured <= 0.0 {
        return Err(QoptError::invalid(
            "glm_sigmoid instance is not quasar convex on the sampled set",
        ));
    }
    provisional.with_gamma((0.9 * measured).min(1.0))
}

/// Largest γ consistent with the quasar-convexity inequality on a sample:
/// `min ⟨∇f(x), x - x*⟩ / (f(x) - f*)` over points with `f(x) > f*`.
pub fn estimate_quasar_gamma(obj: &Objective, sampling: &Sampling) -> Result<f64> {
    let (center, fstar) = obj.require_center()?;
    let points = sampling.points(&obj.set);
    let ratios = map_slice(sampling.execution, &points, |x| {
        let (fx, g) = (obj.evaluator)(x);
        let excess = fx - fstar;
        if excess > 1e-12 {
            linalg::dot(&g, &linalg::sub(x, center)) / excess
        } else {
            f64::INFINITY
        }
    });
    Ok(ratios.into_iter().fold(1.0, f64::min))
}

// ---------------------------------------------------------------------------
// Checks
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuasarReport {
    pub max_violation: f64,
    pub argmax: Vec<f64>,
    pub samples: usize,
}

/// Max over sampled feasible x of `f(x) + (1/γ)⟨∇f(x), x* - x⟩ - f(x*)`.
/// Nonpositive (up to rounding) certifies γ-quasar convexity on the sample.
pub fn check_quasar_convexity(obj: &Objective, sampling: &Sampling) -> Result<QuasarReport> {
    let (center, fstar) = obj.require_center()?;
    let points = sampling.points(&obj.set);
    let inv_gamma = 1.0 / obj.quasar_gamma;
    let violations = map_slice(sampling.execution, &points, |x| {
        let mut counter = OracleCounter::new();
        let (fx, g) = obj.eval(x, &mut counter)?;
        Ok(fx + inv_gamma * linalg::dot(&g, &linalg::sub(center, x)) - fstar)
    });
    let (idx, max_violation) = argmax(violations)?;
    Ok(QuasarReport {
        max_violation,
        argmax: points.get(idx).cloned().unwrap_or_default(),
        samples: points.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmoothnessReport {
    pub max_secant_ratio: f64,
    pub samples: usize,
}

/// Max over sampled feasible pairs of `‖∇f(x) - ∇f(y)‖ / ‖x - y‖`.
pub fn check_smoothness(obj: &Objective, sampling: &Sampling) -> Result<SmoothnessReport> {
    if sampling.samples < 2 {
        return Err(QoptError::invalid("smoothness check needs at least 2 samples"));
    }
    let pairs = sampling.pairs(&obj.set);
    let ratios = map_slice(sampling.execution, &pairs, |(x, y)| {
        let mut counter = OracleCounter::new();
        let (_, gx) = obj.eval(x, &mut counter)?;
        let (_, gy) = obj.eval(y, &mut counter)?;
        Ok(linalg::dist(&gx, &gy) / linalg::dist(x, y))
    });
    let (_, max_secant_ratio) = argmax(ratios)?;
    Ok(SmoothnessReport {
        max_secant_ratio,
        samples: pairs.len(),
    })
}

/// Central-difference gradient with step `h`.
pub fn finite_diff_gradient(obj: &Objective, x: &[f64], h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(QoptError::invalid("finite-difference step must be positive"));
    }
    let mut counter = OracleCounter::new();
    let mut probe = x.to_vec();
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = obj.eval(&probe, &mut counter)?.0;
        probe[i] = x[i] - h;
        let down = obj.eval(&probe, &mut counter)?.0;
        probe[i] = x[i];
        out.push((up - down) / (2.0 * h));
    }
    Ok(out)
}

/// Largest `‖fd(x) - ∇f(x)‖` over sampled points.
pub fn check_gradient(obj: &Objective, sampling: &Sampling, h: f64) -> Result<f64> {
    let points = sampling.points(&obj.set);
    let errors = map_slice(sampling.execution, &points, |x| {
        let fd = finite_diff_gradient(obj, x, h)?;
        let (_, g) = obj.eval(x, &mut OracleCounter::new())?;
        Ok(linalg::dist(&fd, &g))
    });
    Ok(argmax(errors)?.1)
}

/// Index and value of the largest entry (first on ties); propagates the
/// first error.
pub(crate) fn argmax(values: Vec<Result<f64>>) -> Result<(usize, f64)> {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.into_iter().enumerate() {
        let v = v?;
        if v > best.1 || v.is_nan() {
            best = (i, v);
        }
    }
    Ok(best)
}
