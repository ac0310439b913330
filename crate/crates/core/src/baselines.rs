//! Projected gradient descent with step `1/L` and open-loop Frank-Wolfe.
//! Both are generic over [`FirstOrderOracle`], which exposes no
//! quasar-convexity constant: neither method can depend on γ.

use serde_json::json;

use crate::error::{QoptError, Result};
use crate::linalg;
use crate::objectives::{argmax, FirstOrderOracle, Objective, OracleCounter};
use crate::parallel::map_slice;
use crate::sampling::Sampling;
use crate::sets::MEMBERSHIP_TOL;
use crate::trace::{Trace, TraceHeader, TraceRow};

/// `20LD²/((t+1)γ²)`.
pub fn pgd_bound(smoothness: f64, diameter: f64, gamma: f64, t: usize) -> f64 {
    20.0 * smoothness * diameter * diameter / ((t + 1) as f64 * gamma * gamma)
}

/// `6LD²/((t+1)γ²)`.
pub fn frank_wolfe_bound(smoothness: f64, diameter: f64, gamma: f64, t: usize) -> f64 {
    6.0 * smoothness * diameter * diameter / ((t + 1) as f64 * gamma * gamma)
}

fn require_feasible<O: FirstOrderOracle + ?Sized>(obj: &O, x: &[f64], what: &str) -> Result<()> {
    if obj.feasible_set().contains(x, MEMBERSHIP_TOL)? {
        Ok(())
    } else {
        Err(QoptError::precondition(format!("{what} must be feasible")))
    }
}

fn pgd_step(obj: &(impl FirstOrderOracle + ?Sized), x: &[f64], grad: &[f64], eta: f64) -> Vec<f64> {
    obj.feasible_set()
        .project_unchecked(&linalg::add_scaled(x, -eta, grad))
}

/// `(x - Proj(x - η∇f(x)))/η`.
pub fn gradient_mapping<O: FirstOrderOracle + ?Sized>(
    obj: &O,
    x: &[f64],
    eta: f64,
    counter: &mut OracleCounter,
) -> Result<Vec<f64>> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(QoptError::invalid("step size must be positive"));
    }
    require_feasible(obj, x, "gradient-mapping point")?;
    let (_, g) = obj.eval(x, counter)?;
    let next = pgd_step(obj, x, &g, eta);
    Ok(linalg::scale(&linalg::sub(x, &next), 1.0 / eta))
}

pub fn baseline_header<O: FirstOrderOracle + ?Sized>(obj: &O, algorithm: &str, iterations: usize) -> TraceHeader {
    TraceHeader {
        algorithm: algorithm.into(),
        objective: obj.name().into(),
        set: obj.feasible_set().spec().clone(),
        params: json!({ "T": iterations, "L": obj.smoothness() }),
        seed: None,
    }
}

fn row<O: FirstOrderOracle + ?Sized>(obj: &O, t: usize, f: f64, x: &[f64], calls: u64) -> TraceRow {
    TraceRow {
        iter: t,
        oracle_calls: calls,
        f_value: f,
        gap: obj.optimal_value().map(|v| f - v),
        bound: None,
        iterate_norm: linalg::norm(x),
    }
}

/// `T` steps of `x ← Proj(x - ∇f(x)/L)`; rows `t = 0..=T` report `f(x_t)`.
pub fn run_pgd<O: FirstOrderOracle + ?Sized>(
    obj: &O,
    x0: &[f64],
    iterations: usize,
    counter: &mut OracleCounter,
) -> Result<Trace> {
    let mut trace = Trace::new(baseline_header(obj, "pgd", iterations));
    run_pgd_into(obj, x0, iterations, counter, &mut trace)?;
    Ok(trace)
}

pub fn run_pgd_into<O: FirstOrderOracle + ?Sized>(
    obj: &O,
    x0: &[f64],
    iterations: usize,
    counter: &mut OracleCounter,
    trace: &mut Trace,
) -> Result<()> {
    require_feasible(obj, x0, "x0")?;
    let eta = 1.0 / obj.smoothness();
    let mut x = x0.to_vec();
    for t in 0..=iterations {
        let (f, g) = obj.eval(&x, counter)?;
        if !f.is_finite() {
            return Err(QoptError::numerical("objective value is not finite", &x));
        }
        trace.push(row(obj, t, f, &x, counter.calls()));
        if t == iterations {
            trace.finish(x, f, obj.optimal_value().map(|v| f - v), counter.calls());
            break;
        }
        x = pgd_step(obj, &x, &g, eta);
    }
    Ok(())
}

/// `x_{t+1} = (t/(t+2))x_t + (2/(t+2))·lmo(∇f(x_t))`; rows `t = 0..=T`.
pub fn run_frank_wolfe<O: FirstOrderOracle + ?Sized>(
    obj: &O,
    x0: &[f64],
    iterations: usize,
    counter: &mut OracleCounter,
) -> Result<Trace> {
    let mut trace = Trace::new(baseline_header(obj, "frank_wolfe", iterations));
    run_frank_wolfe_into(obj, x0, iterations, counter, &mut trace)?;
    Ok(trace)
}

pub fn run_frank_wolfe_into<O: FirstOrderOracle + ?Sized>(
    obj: &O,
    x0: &[f64],
    iterations: usize,
    counter: &mut OracleCounter,
    trace: &mut Trace,
) -> Result<()> {
    require_feasible(obj, x0, "x0")?;
    let set = obj.feasible_set();
    let mut x = x0.to_vec();
    for t in 0..=iterations {
        let (f, g) = obj.eval(&x, counter)?;
        if !f.is_finite() {
            return Err(QoptError::numerical("objective value is not finite", &x));
        }
        trace.push(row(obj, t, f, &x, counter.calls()));
        if t == iterations {
            trace.finish(x, f, obj.optimal_value().map(|v| f - v), counter.calls());
            break;
        }
        let v = set.lmo_unchecked(&g);
        let tf = t as f64;
        x = linalg::lerp(&x, &v, tf / (tf + 2.0));
        if !set.contains_unchecked(&x, MEMBERSHIP_TOL) {
            return Err(QoptError::numerical("Frank-Wolfe iterate left the feasible set", &x));
        }
    }
    Ok(())
}

/// Diameter of the sampled sublevel set `{x : f(x) ≤ f(x0)}` (x0 included),
/// capped by the set diameter.
pub fn level_set_diameter_estimate(obj: &Objective, x0: &[f64], sampling: &Sampling) -> Result<f64> {
    require_feasible(obj, x0, "x0")?;
    let (f0, _) = obj.eval(x0, &mut OracleCounter::new())?;
    let points = sampling.points(obj.feasible_set());
    let keep = map_slice(sampling.execution, &points, |x| {
        obj.eval(x, &mut OracleCounter::new()).map(|(f, _)| f <= f0)
    });
    let mut level = vec![x0.to_vec()];
    for (p, k) in points.into_iter().zip(keep) {
        if k? {
            level.push(p);
        }
    }
    let widest = map_slice(sampling.execution, &level, |u| {
        level.iter().map(|v| linalg::dist(u, v)).fold(0.0, f64::max)
    });
    let estimate = widest.into_iter().fold(0.0, f64::max);
    Ok(estimate.min(obj.feasible_set().diameter()))
}

/// Worst `⟨∇f(x) - G(x), x⁺ - y⟩` over sampled feasible pairs, with `G` the
/// gradient mapping at step `1/L`. Nonpositive up to rounding.
pub fn check_gradient_mapping_inequality(obj: &Objective, sampling: &Sampling) -> Result<f64> {
    let eta = 1.0 / obj.smoothness();
    let pairs = sampling.pairs(obj.feasible_set());
    let excess = map_slice(sampling.execution, &pairs, |(x, y)| {
        let (_, g) = obj.eval(x, &mut OracleCounter::new())?;
        let next = pgd_step(obj, x, &g, eta);
        let mapping = linalg::scale(&linalg::sub(x, &next), 1.0 / eta);
        Ok(linalg::dot(&linalg::sub(&g, &mapping), &linalg::sub(&next, y)))
    });
    Ok(argmax(excess)?.1)
}

/// Worst `f(x⁺) - f(x) + ‖G(x)‖²/(2L)` over sampled feasible x.
pub fn check_sufficient_decrease(obj: &Objective, sampling: &Sampling) -> Result<f64> {
    let l = obj.smoothness();
    let points = sampling.points(obj.feasible_set());
    let excess = map_slice(sampling.execution, &points, |x| {
        let mut c = OracleCounter::new();
        let (f, g) = obj.eval(x, &mut c)?;
        let next = pgd_step(obj, x, &g, 1.0 / l);
        let (f_next, _) = obj.eval(&next, &mut c)?;
        let mapping_sq = (l * linalg::dist(x, &next)).powi(2);
        Ok(f_next - f + mapping_sq / (2.0 * l))
    });
    Ok(argmax(excess)?.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::make_catalogue_objective;
    use serde_json::{json, Map, Value};

    fn params(v: Value) -> Map<String, Value> {
        v.as_object().cloned().unwrap_or_default()
    }

    fn simplex_quadratic() -> Objective {
        make_catalogue_objective(
            "quadratic",
            &params(json!({"set": {"kind": "simplex", "dimension": 3}})),
        )
        .unwrap()
    }

    #[test]
    fn gradient_mapping_examples() {
        let q = make_catalogue_objective("quadratic", &params(json!({"dim": 1}))).unwrap();
        let m = gradient_mapping(&q, &[0.6], 1.0, &mut OracleCounter::new()).unwrap();
        assert!((m[0] - 0.6).abs() < 1e-15);
        let q2 = make_catalogue_objective(
            "quadratic",
            &params(json!({"set": {"kind": "box", "lower": [0.5], "upper": [1.0]}})),
        )
        .unwrap();
        let m = gradient_mapping(&q2, &[0.6], 1.0, &mut OracleCounter::new()).unwrap();
        assert!((m[0] - 0.1).abs() < 1e-15);
        let m = gradient_mapping(&q2, &[0.5], 1.0, &mut OracleCounter::new()).unwrap();
        assert!(m[0].abs() <= 1e-10);
        assert!(matches!(
            gradient_mapping(&q2, &[0.0], 1.0, &mut OracleCounter::new()),
            Err(QoptError::Precondition(_))
        ));
    }

    #[test]
    fn pgd_on_simplex_hits_barycenter_in_one_step() {
        let q = simplex_quadratic();
        let mut c = OracleCounter::new();
        let tr = run_pgd(&q, &[1.0, 0.0, 0.0], 5, &mut c).unwrap();
        assert_eq!(tr.rows.len(), 6);
        assert!(tr.rows[1].gap.unwrap().abs() < 1e-15);
        assert_eq!(c.calls(), 6);
        assert_eq!(tr.oracle_calls, 6);
        assert!(tr.calls_strictly_increasing());
    }

    #[test]
    fn pgd_from_center_stays() {
        let q = simplex_quadratic();
        let tr = run_pgd(&q, &[1.0 / 3.0; 3], 4, &mut OracleCounter::new()).unwrap();
        for w in tr.final_point.iter() {
            assert!((w - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn frank_wolfe_two_step_trace() {
        let q = simplex_quadratic();
        let tr = run_frank_wolfe(&q, &[1.0, 0.0, 0.0], 2, &mut OracleCounter::new()).unwrap();
        assert_eq!(tr.rows[1].f_value, 0.5);
        // brute-force: x₂ = (2/3, 1/3, 0)
        let x2 = [2.0 / 3.0, 1.0 / 3.0, 0.0];
        assert!(linalg::dist(&tr.final_point, &x2) < 1e-15);
        assert!((tr.final_value - 5.0 / 18.0).abs() < 1e-15);
    }

    #[test]
    fn frank_wolfe_weight_identity() {
        // A_t = (t+1)(t+2), a_t = 2t+2
        for t in 1..200usize {
            let (tf, a_prev, a_t) = (t as f64, (t * (t + 1)) as f64, (2 * t + 2) as f64);
            let a_cum = ((t + 1) * (t + 2)) as f64;
            assert_eq!(a_prev + a_t, a_cum);
            let (x, v) = (0.37, -1.2);
            let weighted = (a_prev * x + a_t * v) / a_cum;
            let open_loop = tf / (tf + 2.0) * x + 2.0 / (tf + 2.0) * v;
            assert!((weighted - open_loop).abs() < 1e-12);
        }
    }

    #[test]
    fn baselines_reject_infeasible_start() {
        let q = simplex_quadratic();
        assert!(run_pgd(&q, &[1.0, 1.0, 0.0], 3, &mut OracleCounter::new()).is_err());
        assert!(run_frank_wolfe(&q, &[0.5, 0.0, 0.0], 3, &mut OracleCounter::new()).is_err());
    }

    #[test]
    fn level_set_examples() {
        let q = make_catalogue_objective("quadratic", &Map::new()).unwrap();
        let d = level_set_diameter_estimate(&q, &[1.0, 1.0], &Sampling::new(400)).unwrap();
        assert!(d > 2.0 && d <= 8f64.sqrt());
        let e = make_catalogue_objective("example1", &Map::new()).unwrap();
        let d = level_set_diameter_estimate(&e, &[5.0], &Sampling::new(1001)).unwrap();
        assert!((d - 10.0).abs() < 1e-12);
        let d = level_set_diameter_estimate(&e, &[0.0], &Sampling::new(1001)).unwrap();
        assert!(d < 1e-12);
    }

    #[test]
    fn gradient_mapping_inequalities_hold() {
        for name in ["quadratic", "example1", "glm_sigmoid", "affine_plus_quadratic"] {
            let obj = make_catalogue_objective(name, &Map::new()).unwrap();
            let s = Sampling::new(500).with_seed(3);
            assert!(check_gradient_mapping_inequality(&obj, &s).unwrap() <= 1e-10, "{name}");
            assert!(check_sufficient_decrease(&obj, &s).unwrap() <= 1e-10, "{name}");
        }
    }
}
