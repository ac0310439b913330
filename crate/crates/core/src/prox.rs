//! δ-approximate proximal points of `f + ι_X` with `λ = 1/(2L)`, computed by
//! projected gradient descent on the L-strongly convex, 3L-smooth
//! subproblem `F(y) = f(y) + L‖y - x‖²`, and the resulting approximate
//! Moreau envelope.

use serde::Serialize;

use crate::error::{QoptError, Result};
use crate::linalg;
use crate::objectives::{argmax, FirstOrderOracle, Objective, OracleCounter, QuasarReport};
use crate::parallel::map_slice;
use crate::sampling::Sampling;
use crate::sets::MEMBERSHIP_TOL;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProxResult {
    pub y: Vec<f64>,
    /// `M̃(x) = f(y) + ‖y - x‖²/(2λ)`.
    pub envelope_value: f64,
    /// `∇M̃(x) = (x - y)/λ`.
    pub envelope_gradient: Vec<f64>,
    pub objective_value: f64,
    pub objective_gradient: Vec<f64>,
    pub inner_iterations: usize,
    /// Upper bound on `F(y) - min F` implied by the final gradient mapping.
    pub certified_delta: f64,
}

/// The only admissible regularization parameter for smoothness `L`.
pub fn prox_lambda(smoothness: f64) -> f64 {
    1.0 / (2.0 * smoothness)
}

/// `100·⌈log₂(LD²/δ)⌉₊ + 100`.
pub fn iteration_cap(smoothness: f64, diameter: f64, delta: f64) -> usize {
    let logs = (smoothness * diameter * diameter / delta).log2().ceil().max(0.0);
    100 * logs as usize + 100
}

fn check_lambda(smoothness: f64, lambda: f64) -> Result<()> {
    if ((2.0 * smoothness * lambda) - 1.0).abs() > 1e-12 {
        return Err(QoptError::invalid(format!(
            "prox requires lambda = 1/(2L) = {}, got {lambda}",
            prox_lambda(smoothness)
        )));
    }
    Ok(())
}

/// Projected gradient descent with step `1/(3L)` from `x`, stopped as soon
/// as the gradient-mapping norm `‖G‖` is at most `√(2Lδ)`; the point one
/// step further then satisfies `F(y⁺) - min F ≤ ‖G‖²/(2L) ≤ δ`.
pub fn solve_prox_subproblem<O: FirstOrderOracle + ?Sized>(
    obj: &O,
    x: &[f64],
    lambda: f64,
    delta: f64,
    counter: &mut OracleCounter,
) -> Result<ProxResult> {
    let l = obj.smoothness();
    check_lambda(l, lambda)?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(QoptError::invalid("prox tolerance delta must be positive"));
    }
    let set = obj.feasible_set();
    if !set.contains(x, MEMBERSHIP_TOL)? {
        return Err(QoptError::precondition("prox query point must be feasible"));
    }

    let threshold = (2.0 * l * delta).sqrt();
    let cap = iteration_cap(l, set.diameter(), delta);
    let step = 1.0 / (3.0 * l);

    let mut y = x.to_vec();
    let (mut fy, mut gy) = obj.eval(&y, counter)?;
    for k in 1..=cap {
        // ∇F(y) = ∇f(y) + 2L(y - x)
        let grad_f: Vec<f64> = gy
            .iter()
            .zip(y.iter().zip(x))
            .map(|(g, (yi, xi))| g + 2.0 * l * (yi - xi))
            .collect();
        let next = set.project_unchecked(&linalg::add_scaled(&y, -step, &grad_f));
        let mapping_norm = linalg::dist(&y, &next) / step;
        let (f_next, g_next) = if next == y {
            (fy, gy)
        } else {
            obj.eval(&next, counter)?
        };
        if !(f_next.is_finite() && linalg::all_finite(&g_next)) {
            return Err(QoptError::numerical(
                "objective returned a non-finite value inside the prox solver",
                &next,
            ));
        }
        y = next;
        fy = f_next;
        gy = g_next;
        if mapping_norm <= threshold {
            let sq = linalg::dist(&y, x).powi(2);
            return Ok(ProxResult {
                envelope_value: fy + l * sq,
                envelope_gradient: linalg::scale(&linalg::sub(x, &y), 2.0 * l),
                objective_value: fy,
                objective_gradient: gy,
                inner_iterations: k,
                certified_delta: mapping_norm * mapping_norm / (2.0 * l),
                y,
            });
        }
    }
    Err(QoptError::numerical(
        format!("prox solver exceeded its iteration cap of {cap}"),
        &y,
    ))
}

pub fn moreau_value<O: FirstOrderOracle + ?Sized>(
    obj: &O,
    x: &[f64],
    lambda: f64,
    delta: f64,
    counter: &mut OracleCounter,
) -> Result<f64> {
    Ok(solve_prox_subproblem(obj, x, lambda, delta, counter)?.envelope_value)
}

pub fn moreau_gradient<O: FirstOrderOracle + ?Sized>(
    obj: &O,
    x: &[f64],
    lambda: f64,
    delta: f64,
    counter: &mut OracleCounter,
) -> Result<Vec<f64>> {
    Ok(solve_prox_subproblem(obj, x, lambda, delta, counter)?.envelope_gradient)
}

fn prox_at<O: FirstOrderOracle + ?Sized>(obj: &O, x: &[f64], delta: f64) -> Result<ProxResult> {
    solve_prox_subproblem(
        obj,
        x,
        prox_lambda(obj.smoothness()),
        delta,
        &mut OracleCounter::new(),
    )
}

// ---------------------------------------------------------------------------
// Checks
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditioningReport {
    /// Smallest `⟨∇F(u) - ∇F(v), u - v⟩ / (L‖u - v‖²)`; must be ≥ 1.
    pub min_ratio: f64,
    /// Largest such ratio; must be ≤ 3.
    pub max_ratio: f64,
    /// `max(1 - min_ratio, max_ratio/3 - 1)`, relative.
    pub max_violation: f64,
    pub samples: usize,
}

/// Secant curvature of the prox subproblem on sampled pairs.
pub fn check_prox_conditioning(obj: &Objective, sampling: &Sampling) -> Result<ConditioningReport> {
    let l = obj.smoothness();
    let pairs = sampling.pairs(obj.feasible_set());
    let ratios = map_slice(sampling.execution, &pairs, |(u, v)| {
        let mut counter = OracleCounter::new();
        let (_, gu) = obj.eval(u, &mut counter)?;
        let (_, gv) = obj.eval(v, &mut counter)?;
        let d = linalg::sub(u, v);
        // The regularizer contributes exactly 2L‖u - v‖² whatever the anchor.
        let secant = linalg::dot(&linalg::sub(&gu, &gv), &d) + 2.0 * l * linalg::dot(&d, &d);
        Ok::<f64, QoptError>(secant / (l * linalg::dot(&d, &d)))
    });
    let ratios = ratios.into_iter().collect::<Result<Vec<f64>>>()?;
    let min_ratio = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_ratio = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(ConditioningReport {
        min_ratio,
        max_ratio,
        max_violation: (1.0 - min_ratio).max(max_ratio / 3.0 - 1.0),
        samples: ratios.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnvelopeSmoothnessReport {
    pub max_secant_ratio: f64,
    /// `max_secant_ratio / 2L`; must be ≤ 1 + 1e-6.
    pub relative_to_2l: f64,
    pub samples: usize,
}

/// Secant ratios of `∇M̃` at tolerance `delta`. In more than one dimension
/// pairs closer than 1e-3·diam are rejected so that prox error does not
/// dominate the quotient.
pub fn check_envelope_smoothness(
    obj: &Objective,
    sampling: &Sampling,
    delta: f64,
) -> Result<EnvelopeSmoothnessReport> {
    let set = obj.feasible_set();
    let pairs = if set.dimension() == 1 {
        sampling.pairs(set)
    } else {
        sampling.separated_pairs(set, 1e-3)
    };
    let ratios = map_slice(sampling.execution, &pairs, |(u, v)| {
        let gu = prox_at(obj, u, delta)?.envelope_gradient;
        let gv = prox_at(obj, v, delta)?.envelope_gradient;
        Ok(linalg::dist(&gu, &gv) / linalg::dist(u, v))
    });
    let (_, max_secant_ratio) = argmax(ratios)?;
    Ok(EnvelopeSmoothnessReport {
        max_secant_ratio,
        relative_to_2l: max_secant_ratio / (2.0 * obj.smoothness()),
        samples: pairs.len(),
    })
}

/// Max over sampled x of `M̃(x) + (1/γ)⟨∇M̃(x), x* - x⟩ - M(x*)` with
/// `M(x*) = f(x*)`.
pub fn check_moreau_quasar(obj: &Objective, sampling: &Sampling, delta: f64) -> Result<QuasarReport> {
    let center = obj
        .center()
        .ok_or_else(|| QoptError::precondition("envelope quasar check needs a known center"))?
        .to_vec();
    let fstar = obj.optimal_value().unwrap_or(f64::NAN);
    let inv_gamma = 1.0 / obj.quasar_gamma();
    let points = sampling.points(obj.feasible_set());
    let violations = map_slice(sampling.execution, &points, |x| {
        let r = prox_at(obj, x, delta)?;
        Ok(r.envelope_value
            + inv_gamma * linalg::dot(&r.envelope_gradient, &linalg::sub(&center, x))
            - fstar)
    });
    let (idx, max_violation) = argmax(violations)?;
    Ok(QuasarReport {
        max_violation,
        argmax: points.get(idx).cloned().unwrap_or_default(),
        samples: points.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DescentReport {
    /// `M̃(y) - M̃(x)`.
    pub lhs: f64,
    /// `-‖∇M̃(x)‖²/(8L) + δ`.
    pub rhs: f64,
    pub holds: bool,
}

/// One inexact proximal step `y = prox(x)` followed by a fresh prox at `y`.
pub fn check_descent_lemma(
    obj: &Objective,
    x: &[f64],
    lambda: f64,
    delta: f64,
    counter: &mut OracleCounter,
) -> Result<DescentReport> {
    let l = obj.smoothness();
    let at_x = solve_prox_subproblem(obj, x, lambda, delta, counter)?;
    let at_y = solve_prox_subproblem(obj, &at_x.y, lambda, delta, counter)?;
    let lhs = at_y.envelope_value - at_x.envelope_value;
    let g = linalg::norm(&at_x.envelope_gradient);
    let rhs = -g * g / (8.0 * l) + delta;
    Ok(DescentReport {
        lhs,
        rhs,
        holds: lhs <= rhs,
    })
}

/// Worst `lhs - rhs` of the descent inequality over sampled points.
pub fn check_descent_sampled(obj: &Objective, sampling: &Sampling, delta: f64) -> Result<f64> {
    let lambda = prox_lambda(obj.smoothness());
    let points = sampling.points(obj.feasible_set());
    let excess = map_slice(sampling.execution, &points, |x| {
        let r = check_descent_lemma(obj, x, lambda, delta, &mut OracleCounter::new())?;
        Ok(r.lhs - r.rhs)
    });
    Ok(argmax(excess)?.1)
}

/// Largest `‖∇M̃_δ(x) - ∇M̃_ref(x)‖ / √(8Lδ)` over sampled x; must be ≤ 1.
pub fn check_gradient_error(
    obj: &Objective,
    sampling: &Sampling,
    delta: f64,
    reference_delta: f64,
) -> Result<f64> {
    let bound = (8.0 * obj.smoothness() * delta).sqrt();
    let points = sampling.points(obj.feasible_set());
    let errors = map_slice(sampling.execution, &points, |x| {
        let coarse = prox_at(obj, x, delta)?.envelope_gradient;
        let fine = prox_at(obj, x, reference_delta)?.envelope_gradient;
        Ok(linalg::dist(&coarse, &fine) / bound)
    });
    Ok(argmax(errors)?.1)
}

/// Largest `(F(y_δ) - F(y_{δ/100})) / δ` over sampled x; must be ≤ 1.
pub fn check_stopping_soundness(obj: &Objective, sampling: &Sampling, delta: f64) -> Result<f64> {
    let points = sampling.points(obj.feasible_set());
    let ratios = map_slice(sampling.execution, &points, |x| {
        let coarse = prox_at(obj, x, delta)?.envelope_value;
        let fine = prox_at(obj, x, delta / 100.0)?.envelope_value;
        Ok((coarse - fine) / delta)
    });
    Ok(argmax(ratios)?.1)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationFit {
    /// Fitted `C` in `iterations ≤ C·log₂(LD²/δ)`.
    pub constant: f64,
    pub max_iterations: usize,
    pub max_cap: usize,
}

/// Inner iteration counts over sampled x and several tolerances.
pub fn fit_inner_iterations(obj: &Objective, sampling: &Sampling, deltas: &[f64]) -> Result<IterationFit> {
    let l = obj.smoothness();
    let d = obj.feasible_set().diameter();
    let points = sampling.points(obj.feasible_set());
    let mut fit = IterationFit {
        constant: 0.0,
        max_iterations: 0,
        max_cap: 0,
    };
    for &delta in deltas {
        let logs = (l * d * d / delta).log2().max(1.0);
        let iters = map_slice(sampling.execution, &points, |x| {
            prox_at(obj, x, delta).map(|r| r.inner_iterations)
        });
        for it in iters {
            let it = it?;
            fit.constant = fit.constant.max(it as f64 / logs);
            fit.max_iterations = fit.max_iterations.max(it);
        }
        fit.max_cap = fit.max_cap.max(iteration_cap(l, d, delta));
    }
    Ok(fit)
}
