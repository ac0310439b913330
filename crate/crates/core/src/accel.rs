//! Accelerated inexact proximal-point method: a noisy binary line search
//! couples the proximal iterates `y` with FTRL iterates `z`.

use serde::Serialize;
use serde_json::json;

use crate::error::{QoptError, Result};
use crate::linalg;
use crate::objectives::{FirstOrderOracle, Objective, OracleCounter};
use crate::prox::{prox_lambda, solve_prox_subproblem, ProxResult};
use crate::sets::{FeasibleSet, MEMBERSHIP_TOL};
use crate::trace::{Trace, TraceHeader, TraceRow};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AccelParams {
    pub epsilon: f64,
    pub gamma: f64,
    pub smoothness: f64,
    pub diameter: f64,
    pub lambda: f64,
    /// Outer iteration count `T = ⌈(4/γ)√(LD²/ε)⌉`.
    pub iterations: usize,
    /// Inner tolerance `δ = LD²/(10T⁶)`.
    pub delta: f64,
}

impl AccelParams {
    /// `a_t = γ²t/(8L)`, with `a_0 = 0`.
    pub fn weight(&self, t: usize) -> f64 {
        self.gamma * self.gamma * t as f64 / (8.0 * self.smoothness)
    }

    /// `A_t = γ²t(t+1)/(16L)`.
    pub fn cumulative_weight(&self, t: usize) -> f64 {
        let t = t as f64;
        self.gamma * self.gamma * t * (t + 1.0) / (16.0 * self.smoothness)
    }

    /// Line-search target constant `c = A_{t-1}γ/a_t = γ(t-1)/2` for `t ≥ 1`.
    pub fn coupling_constant(&self, t: usize) -> f64 {
        self.cumulative_weight(t - 1) * self.gamma / self.weight(t)
    }

    /// Leading term `8LD²/(γ²t²)` of the convergence guarantee.
    pub fn envelope(&self, t: usize) -> f64 {
        8.0 * self.smoothness * self.diameter * self.diameter
            / (self.gamma * self.gamma * (t * t) as f64)
    }
}

pub fn compute_schedule(gamma: f64, smoothness: f64, diameter: f64, epsilon: f64) -> Result<AccelParams> {
    for (name, v) in [
        ("gamma", gamma),
        ("smoothness", smoothness),
        ("diameter", diameter),
        ("epsilon", epsilon),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(QoptError::invalid(format!("{name} must be positive, got {v}")));
        }
    }
    if gamma > 1.0 {
        return Err(QoptError::invalid("gamma must not exceed 1"));
    }
    let ld2 = smoothness * diameter * diameter;
    let iterations = ((4.0 / gamma) * (ld2 / epsilon).sqrt()).ceil().max(1.0) as usize;
    let delta = ld2 / (10.0 * (iterations as f64).powi(6));
    Ok(AccelParams {
        epsilon,
        gamma,
        smoothness,
        diameter,
        lambda: prox_lambda(smoothness),
        iterations,
        delta,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LineSearchParams {
    pub c: f64,
    /// Envelope value error `δ₁ = δ`.
    pub delta1: f64,
    /// Envelope derivative error `δ₂ = √(8Lδ)·D`.
    pub delta2: f64,
    /// `ε̃ = δ₂ + (9 + 5c)δ₁`.
    pub epsilon_tilde: f64,
    pub smoothness: f64,
    pub diameter: f64,
}

impl LineSearchParams {
    pub fn new(c: f64, delta: f64, smoothness: f64, diameter: f64) -> Result<Self> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(QoptError::invalid("line-search constant c must be nonnegative"));
        }
        if !(delta > 0.0 && smoothness > 0.0 && diameter > 0.0) {
            return Err(QoptError::invalid("line-search tolerances must be positive"));
        }
        let delta2 = (8.0 * smoothness * delta).sqrt() * diameter;
        Ok(LineSearchParams {
            c,
            delta1: delta,
            delta2,
            epsilon_tilde: delta2 + (9.0 + 5.0 * c) * delta,
            smoothness,
            diameter,
        })
    }

    /// `Δ = 8δ₁/L̂` with `L̂ = 2L‖y - z‖²`; infinite when `y = z`.
    pub fn interval_floor(&self, y: &[f64], z: &[f64]) -> f64 {
        let l_hat = 2.0 * self.smoothness * linalg::dist(y, z).powi(2);
        8.0 * self.delta1 / l_hat
    }

    /// `⌈log₂(8LD²/δ₁)⌉`: the guaranteed number of bisection steps.
    pub fn loop_bound(&self) -> usize {
        (8.0 * self.smoothness * self.diameter * self.diameter / self.delta1)
            .log2()
            .ceil()
            .max(0.0) as usize
    }

    /// Hard cap: exceeding it means the declared constants are wrong.
    pub fn loop_cap(&self) -> usize {
        self.loop_bound() + 2
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LineSearchExit {
    /// `ĥ(1) ≤ ε̃`.
    AtY,
    /// `h(1) - h(0) ≥ -δ₁`.
    AtZ,
    Bisection,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LineSearchOutcome {
    pub alpha: f64,
    pub x: Vec<f64>,
    pub loop_iterations: usize,
    pub exit: LineSearchExit,
    /// The δ-prox at `x` computed while searching.
    pub prox: ProxResult,
}

/// Bisection on `α ∈ [0, 1]` for `v_α = αy + (1-α)z` until
/// `αĥ(α) ≤ c(h(1) - h(α)) + ε̃`, with `h = M̃(v_α)` and
/// `ĥ = ⟨∇M̃(v_α), y - z⟩` evaluated through δ-prox calls.
pub fn binary_line_search<O: FirstOrderOracle + ?Sized>(
    obj: &O,
    y: &[f64],
    z: &[f64],
    params: &LineSearchParams,
    counter: &mut OracleCounter,
) -> Result<LineSearchOutcome> {
    let set = obj.feasible_set();
    if !set.contains(y, MEMBERSHIP_TOL)? || !set.contains(z, MEMBERSHIP_TOL)? {
        return Err(QoptError::precondition("line-search endpoints must be feasible"));
    }
    let lambda = prox_lambda(obj.smoothness());
    let delta = params.delta1;
    let direction = linalg::sub(y, z);
    let prox = |point: &[f64], counter: &mut OracleCounter| {
        solve_prox_subproblem(obj, point, lambda, delta, counter)
    };
    let slope = |r: &ProxResult| linalg::dot(&r.envelope_gradient, &direction);

    let at_y = prox(y, counter)?;
    if slope(&at_y) <= params.epsilon_tilde {
        return Ok(LineSearchOutcome {
            alpha: 1.0,
            x: y.to_vec(),
            loop_iterations: 0,
            exit: LineSearchExit::AtY,
            prox: at_y,
        });
    }
    debug_assert!(params.interval_floor(y, z).is_finite());
    let h1 = at_y.envelope_value;
    let at_z = prox(z, counter)?;
    if h1 - at_z.envelope_value >= -params.delta1 {
        return Ok(LineSearchOutcome {
            alpha: 0.0,
            x: z.to_vec(),
            loop_iterations: 0,
            exit: LineSearchExit::AtZ,
            prox: at_z,
        });
    }

    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let cap = params.loop_cap();
    for k in 0..=cap {
        let alpha = 0.5 * (lo + hi);
        let x = linalg::lerp(y, z, alpha);
        let r = prox(&x, counter)?;
        let h = r.envelope_value;
        if alpha * slope(&r) <= params.c * (h1 - h) + params.epsilon_tilde {
            return Ok(LineSearchOutcome {
                alpha,
                x,
                loop_iterations: k,
                exit: LineSearchExit::Bisection,
                prox: r,
            });
        }
        if k == cap {
            break;
        }
        if h >= h1 - params.delta1 {
            lo = alpha;
        } else {
            hi = alpha;
        }
    }
    Err(QoptError::numerical(
        format!(
            "binary line search exceeded {cap} bisections (bracket [{lo:e}, {hi:e}], last alpha {:e}); \
             the declared L or gamma is likely invalid",
            0.5 * (lo + hi)
        ),
        &linalg::lerp(y, z, 0.5 * (lo + hi)),
    ))
}

/// `argmin_{z ∈ X} ⟨s, z⟩ + ‖z - x₀‖²/2 = Proj_X(x₀ - s)`.
pub fn ftrl_step(set: &FeasibleSet, x0: &[f64], accumulated: &[f64]) -> Result<Vec<f64>> {
    if x0.len() != accumulated.len() {
        return Err(QoptError::invalid("accumulated gradient has the wrong dimension"));
    }
    set.project(&linalg::sub(x0, accumulated))
}

/// What happened at outer iteration `t`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AccelStep {
    pub t: usize,
    pub c: f64,
    pub alpha: f64,
    pub loop_iterations: usize,
    pub loop_bound: usize,
    pub exit: LineSearchExit,
    pub x: Vec<f64>,
    pub y_prev: Vec<f64>,
    pub z_prev: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AccelRun {
    pub schedule: AccelParams,
    pub steps: Vec<AccelStep>,
    pub trace: Trace,
    /// The returned point `ŷ_T`, a δ-prox of `y_T`.
    pub output: Option<ProxResult>,
}

pub fn accel_header(obj: &Objective, schedule: &AccelParams) -> TraceHeader {
    TraceHeader {
        algorithm: "accelerated".into(),
        objective: obj.name().into(),
        set: obj.feasible_set().spec().clone(),
        params: json!({
            "epsilon": schedule.epsilon,
            "gamma": schedule.gamma,
            "L": schedule.smoothness,
            "D": schedule.diameter,
            "T": schedule.iterations,
            "delta": schedule.delta,
        }),
        seed: None,
    }
}

/// Run the method to accuracy `epsilon` from a feasible `x0`. Row `t` of the
/// trace reports `f(y_t)`; row 0 reports `f(x0)`.
pub fn run_accelerated(
    obj: &Objective,
    x0: &[f64],
    epsilon: f64,
    counter: &mut OracleCounter,
) -> Result<AccelRun> {
    let schedule = compute_schedule(
        obj.quasar_gamma(),
        obj.smoothness(),
        obj.feasible_set().diameter(),
        epsilon,
    )?;
    let mut run = AccelRun {
        trace: Trace::new(accel_header(obj, &schedule)),
        schedule,
        steps: Vec::new(),
        output: None,
    };
    match run_accelerated_into(obj, x0, counter, &mut run) {
        Ok(()) => Ok(run),
        Err(e) => Err(e),
    }
}

/// As [`run_accelerated`], filling a caller-owned record so that a partial
/// trace survives a failure.
pub fn run_accelerated_into(
    obj: &Objective,
    x0: &[f64],
    counter: &mut OracleCounter,
    run: &mut AccelRun,
) -> Result<()> {
    let set = obj.feasible_set();
    if !set.contains(x0, MEMBERSHIP_TOL)? {
        return Err(QoptError::precondition("x0 must be feasible"));
    }
    let s = run.schedule.clone();
    let fstar = obj.optimal_value();
    let row = |t: usize, f: f64, point: &[f64], calls: u64, bound: Option<f64>| TraceRow {
        iter: t,
        oracle_calls: calls,
        f_value: f,
        gap: fstar.map(|v| f - v),
        bound,
        iterate_norm: linalg::norm(point),
    };

    let (f0, _) = obj.eval(x0, counter)?;
    run.trace.push(row(0, f0, x0, counter.calls(), None));

    let mut y = x0.to_vec();
    let mut z = x0.to_vec();
    let mut accumulated = vec![0.0; x0.len()];
    for t in 1..=s.iterations {
        let c = s.coupling_constant(t);
        let params = LineSearchParams::new(c, s.delta, s.smoothness, s.diameter)?;
        let ls = binary_line_search(obj, &y, &z, &params, counter)?;
        if !set.contains_unchecked(&ls.x, MEMBERSHIP_TOL) {
            return Err(QoptError::numerical("coupling point left the feasible set", &ls.x));
        }
        let scale = s.weight(t) / s.gamma;
        linalg::axpy(&mut accumulated, scale, &ls.prox.envelope_gradient);
        let z_next = ftrl_step(set, x0, &accumulated)?;
        run.steps.push(AccelStep {
            t,
            c,
            alpha: ls.alpha,
            loop_iterations: ls.loop_iterations,
            loop_bound: params.loop_bound(),
            exit: ls.exit,
            x: ls.x,
            y_prev: std::mem::take(&mut y),
            z_prev: std::mem::replace(&mut z, z_next),
        });
        y = ls.prox.y;
        run.trace.push(row(
            t,
            ls.prox.objective_value,
            &y,
            counter.calls(),
            Some(2.0 * s.envelope(t)),
        ));
    }

    let out = solve_prox_subproblem(obj, &y, s.lambda, s.delta, counter)?;
    let value = out.objective_value;
    run.trace.finish(out.y.clone(), value, fstar.map(|v| value - v), counter.calls());
    run.output = Some(out);
    Ok(())
}

/// Post-hoc slack of the line-search guarantee at one step using fresh
/// prox calls at tolerance `reference_delta`:
/// `⟨∇M(x_t), x_t - z⟩ - c(M(y) - M(x_t)) - (√(8LD²δ) + (9 + 5c)δ)`.
pub fn line_search_excess(
    obj: &Objective,
    schedule: &AccelParams,
    step: &AccelStep,
    reference_delta: f64,
) -> Result<f64> {
    let mut counter = OracleCounter::new();
    let at_x = solve_prox_subproblem(obj, &step.x, schedule.lambda, reference_delta, &mut counter)?;
    let at_y =
        solve_prox_subproblem(obj, &step.y_prev, schedule.lambda, reference_delta, &mut counter)?;
    let lhs = linalg::dot(&at_x.envelope_gradient, &linalg::sub(&step.x, &step.z_prev))
        - step.c * (at_y.envelope_value - at_x.envelope_value);
    let d = schedule.diameter;
    let allowance = (8.0 * schedule.smoothness * d * d * schedule.delta).sqrt()
        + (9.0 + 5.0 * step.c) * schedule.delta;
    Ok(lhs - allowance)
}
