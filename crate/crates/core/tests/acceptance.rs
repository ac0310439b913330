//! Acceptance suite. Runs every criterion at its stated tolerance, prints one
//! PASS/FAIL line per criterion and exits nonzero if any fails.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use serde_json::{json, Map, Value};

use qopt::accel::{line_search_excess, run_accelerated};
use qopt::baselines::{frank_wolfe_bound, pgd_bound, run_frank_wolfe, run_pgd};
use qopt::harness::{catalogue_instance, sweep};
use qopt::objectives::{check_quasar_convexity, fig1_anchor, CATALOGUE};
use qopt::prox::{
    check_descent_sampled, check_envelope_smoothness, check_prox_conditioning, prox_lambda,
    solve_prox_subproblem,
};
use qopt::sampling::grid;
use qopt::{
    make_catalogue_objective, Execution, FirstOrderOracle, Objective, OracleCounter, Sampling,
    SetSpec, Trace,
};

type Outcome = Result<(bool, String), String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn instance(label: &str) -> Result<Objective, String> {
    catalogue_instance(label).map_err(err)
}

fn value_grad(obj: &Objective, x: &[f64]) -> Result<(f64, Vec<f64>), String> {
    obj.eval(x, &mut OracleCounter::new()).map_err(err)
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn example1_quasar() -> Outcome {
    let start = Instant::now();
    let obj = instance("example1")?;
    let gamma = obj.quasar_gamma();
    let (f_star, _) = value_grad(&obj, &[0.0])?;
    let mut worst = f64::NEG_INFINITY;
    for x in grid(-5.0, 5.0, 10_000) {
        let (f, g) = value_grad(&obj, &[x])?;
        worst = worst.max(f + g[0] * (0.0 - x) / gamma - f_star);
    }
    let elapsed = secs(start.elapsed());
    Ok((
        worst <= 1e-9 && elapsed < 1.0,
        format!("max violation {worst:.3e} (tol 1e-9), gamma {gamma}, {elapsed:.3} s (limit 1 s)"),
    ))
}

fn fig1_counterexample() -> Outcome {
    let x0 = fig1_anchor();
    let obj = instance("fig1_counterexample")?;
    let value = |x: f64| value_grad(&obj, &[x]).map(|r| r.0);
    let (_, d) = value_grad(&obj, &[-2.0])?;
    let h = 1e-3;
    let second = (value(-2.0 + h)? - 2.0 * value(-2.0)? + value(-2.0 - h)?) / (h * h);
    let quasar = check_quasar_convexity(&obj, &Sampling::new(10_000)).map_err(err)?;
    let rounded = format!("{x0:.2}");
    Ok((
        rounded == "-12.23" && d[0].abs() <= 1e-8 && second < 0.0 && quasar.max_violation > 0.0,
        format!(
            "x0 = {x0:.6}, g'(-2) = {:.2e}, g''(-2) = {second:.4}, quasar violation {:.3e}",
            d[0], quasar.max_violation
        ),
    ))
}

fn prox_conditioning() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for label in ["quadratic", "example1"] {
        let obj = instance(label)?;
        let cond = check_prox_conditioning(&obj, &Sampling::new(10_000)).map_err(err)?;
        let env = check_envelope_smoothness(&obj, &Sampling::new(2_000), 1e-20).map_err(err)?;
        ok &= cond.samples == 10_000 && cond.max_violation <= 1e-8;
        ok &= env.relative_to_2l <= 1.0 + 1e-6;
        parts.push(format!(
            "{label}: secant/L in [{:.6}, {:.6}] over {} pairs, envelope secant/2L {:.8}",
            cond.min_ratio, cond.max_ratio, cond.samples, env.relative_to_2l
        ));
    }
    Ok((ok, parts.join("; ")))
}

/// At least `n` grid points covering a one- or two-dimensional box.
fn box_grid(obj: &Objective, n: usize) -> Result<Vec<Vec<f64>>, String> {
    let SetSpec::Box { lower, upper } = obj.feasible_set().spec() else {
        return Err("expected a box".into());
    };
    match lower.len() {
        1 => Ok(grid(lower[0], upper[0], n).into_iter().map(|x| vec![x]).collect()),
        2 => {
            let side = (n as f64).sqrt().ceil() as usize;
            let xs = grid(lower[0], upper[0], side);
            let ys = grid(lower[1], upper[1], side);
            Ok(xs.iter().flat_map(|&x| ys.iter().map(move |&y| vec![x, y])).collect())
        }
        d => Err(format!("no grid for dimension {d}")),
    }
}

fn moreau_quasar() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for label in ["example1", "quadratic"] {
        let obj = instance(label)?;
        let center = obj.center().ok_or("missing center")?.to_vec();
        let f_star = obj.optimal_value().ok_or("missing optimal value")?;
        let lambda = prox_lambda(obj.smoothness());
        let points = box_grid(&obj, 2_000)?;
        let mut worst = f64::NEG_INFINITY;
        for x in &points {
            let r = solve_prox_subproblem(&obj, x, lambda, 1e-12, &mut OracleCounter::new())
                .map_err(err)?;
            let inner: f64 = r
                .envelope_gradient
                .iter()
                .zip(center.iter().zip(x))
                .map(|(g, (c, xi))| g * (c - xi))
                .sum();
            worst = worst.max(r.envelope_value + inner / obj.quasar_gamma() - f_star);
        }
        ok &= points.len() >= 2_000 && worst <= 1e-6;
        parts.push(format!(
            "{label} (gamma {}): max violation {worst:.3e} over {} points",
            obj.quasar_gamma(),
            points.len()
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn descent_lemma() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in CATALOGUE {
        let obj = make_catalogue_objective(name, &Map::new()).map_err(err)?;
        let worst = check_descent_sampled(&obj, &Sampling::new(64), 1e-10).map_err(err)?;
        ok &= worst <= 0.0;
        parts.push(format!("{name} {worst:.2e}"));
    }
    Ok((ok, format!("worst lhs - rhs over 64 points each: {}", parts.join(", "))))
}

fn start_point(obj: &Objective) -> Vec<f64> {
    match obj.feasible_set().interval() {
        Some((_, hi)) => vec![hi],
        None => obj.feasible_set().canonical_vertex(),
    }
}

fn line_search() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for label in ["quadratic", "quadratic_simplex", "example1", "glm_sigmoid"] {
        let obj = instance(label)?;
        let run = run_accelerated(&obj, &start_point(&obj), 1e-3, &mut OracleCounter::new())
            .map_err(err)?;
        let reference = run.schedule.delta / 1e4;
        let mut worst = f64::NEG_INFINITY;
        let mut loops_ok = true;
        let mut max_loops = 0;
        for step in &run.steps {
            worst = worst.max(line_search_excess(&obj, &run.schedule, step, reference).map_err(err)?);
            loops_ok &= step.loop_iterations <= step.loop_bound;
            max_loops = max_loops.max(step.loop_iterations);
        }
        ok &= run.steps.len() == run.schedule.iterations && worst <= 1e-9 && loops_ok;
        parts.push(format!(
            "{label}: {} steps, worst excess {worst:.2e}, max loops {max_loops}",
            run.steps.len()
        ));
    }
    Ok((ok, parts.join("; ")))
}

/// Worst `gap(t) - bound(t)` over `t ≥ 1` and whether `f` never increased.
fn envelope_excess(trace: &Trace, bound: impl Fn(usize) -> f64) -> (f64, bool) {
    let mut worst = f64::NEG_INFINITY;
    for row in trace.rows.iter().filter(|r| r.iter >= 1) {
        worst = worst.max(row.gap.unwrap_or(f64::NAN) - bound(row.iter));
    }
    let monotone = trace.rows.windows(2).all(|w| w[1].f_value <= w[0].f_value);
    (worst, monotone)
}

fn baseline_envelope(frank_wolfe: bool) -> Outcome {
    const T: usize = 10_000;
    let mut ok = true;
    let mut parts = Vec::new();
    for label in ["example1", "quadratic_simplex"] {
        let obj = instance(label)?;
        let x0 = start_point(&obj);
        let (l, d, g) = (obj.smoothness(), obj.feasible_set().diameter(), obj.quasar_gamma());
        let start = Instant::now();
        let mut counter = OracleCounter::new();
        let trace = if frank_wolfe {
            run_frank_wolfe(&obj, &x0, T, &mut counter)
        } else {
            run_pgd(&obj, &x0, T, &mut counter)
        }
        .map_err(err)?;
        let elapsed = secs(start.elapsed());
        let (worst, monotone) = envelope_excess(&trace, |t| {
            if frank_wolfe {
                frank_wolfe_bound(l, d, g, t)
            } else {
                pgd_bound(l, d, g, t)
            }
        });
        ok &= trace.rows.len() == T + 1 && worst <= 0.0 && elapsed < 10.0;
        if !frank_wolfe {
            ok &= monotone;
        }
        parts.push(format!(
            "{label} (x0 {x0:?}, D {d:.4}, gamma {g}): worst gap - bound {worst:.3e}, final gap {:.2e}{}, {elapsed:.2} s",
            trace.final_gap.unwrap_or(f64::NAN),
            if frank_wolfe { String::new() } else { format!(", monotone {monotone}") }
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn end_to_end() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (label, epsilon, expected_t) in [("quadratic", 1e-3, Some(358)), ("example1", 1e-4, None)] {
        let obj = instance(label)?;
        let start = Instant::now();
        let mut counter = OracleCounter::new();
        let run = run_accelerated(&obj, &start_point(&obj), epsilon, &mut counter).map_err(err)?;
        let elapsed = secs(start.elapsed());
        let s = &run.schedule;
        let gap = run.trace.final_gap.unwrap_or(f64::NAN);
        let log_term = (s.smoothness * s.diameter * s.diameter / s.delta).log2();
        let constant = counter.calls() as f64 / (s.iterations as f64 * log_term);
        ok &= expected_t.is_none_or(|t| t == s.iterations);
        ok &= gap <= epsilon && constant <= 50.0 && elapsed < 60.0;
        parts.push(format!(
            "{label}: eps {epsilon:e}, T {}, gap {gap:.2e}, {} calls (constant {constant:.4}), {elapsed:.2} s",
            s.iterations,
            counter.calls()
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn sweep_slope(base: Value, grid: Value, alg: &str, range: (f64, f64)) -> Result<(bool, String), String> {
    let dir = tempfile::tempdir().map_err(err)?;
    let summary = sweep(&base, &grid, dir.path(), Execution::Parallel).map_err(err)?;
    if let Some(r) = summary.runs.iter().find(|r| r.failure.is_some()) {
        return Err(format!("{alg} run {} failed: {:?}", r.index, r.failure));
    }
    let slope = summary.fits.get(alg).ok_or(format!("no fit for {alg}"))?.slope;
    Ok((
        range.0 <= slope && slope <= range.1,
        format!("{alg} slope {slope:.4} in [{}, {}]", range.0, range.1),
    ))
}

fn scaling() -> Outcome {
    let checks = [
        sweep_slope(
            json!({"algorithm": "accelerated", "objective": "quadratic", "dim": 2,
                   "x0": [1.0, 1.0], "epsilon": 1e-2}),
            json!({"epsilon": [1e-2, 1e-3, 1e-4]}),
            "accelerated",
            (-0.75, -0.45),
        )?,
        sweep_slope(
            json!({"algorithm": "pgd", "objective": "quadratic", "dim": 61,
                   "params": {"log_spectrum": [1e-6, 1.0]}, "x0": "vertex", "T": 100}),
            json!({"T": [100, 1000, 10000]}),
            "pgd",
            (-1.3, -0.8),
        )?,
        sweep_slope(
            json!({"algorithm": "frank_wolfe", "objective": "quadratic",
                   "set": {"kind": "simplex", "dimension": 100_000}, "x0": "vertex", "T": 100}),
            json!({"T": [100, 1000, 10000]}),
            "frank_wolfe",
            (-1.3, -0.8),
        )?,
    ];
    let ok = checks.iter().all(|c| c.0);
    Ok((ok, checks.map(|c| c.1).join("; ")))
}

fn run_cli(config: &Path, seed_env: Option<&str>) -> Result<Vec<u8>, String> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qopt"));
    cmd.arg("run").arg(config).env_remove("QOPT_SEED");
    if let Some(seed) = seed_env {
        cmd.env("QOPT_SEED", seed);
    }
    let out = cmd.output().map_err(err)?;
    if !out.status.success() {
        return Err(format!("qopt run failed: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out.stdout)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(err)?;
    let mut ok = true;
    let mut compared = 0;
    let configs = [
        json!({"algorithm": "pgd", "objective": "glm_sigmoid", "T": 300, "seed": 11}),
        json!({"algorithm": "accelerated", "objective": "example1", "epsilon": 1e-2, "seed": 3}),
        json!({"algorithm": "frank_wolfe", "objective": "quadratic",
               "set": {"kind": "simplex", "dimension": 50}, "epsilon": 1e-2}),
    ];
    for (i, cfg) in configs.iter().enumerate() {
        // Once through an output file, once through stdout.
        let mut with_file = cfg.clone();
        let csv = dir.path().join(format!("trace_{i}.csv"));
        with_file["output_path"] = json!(csv);
        let file_cfg = dir.path().join(format!("file_{i}.json"));
        let stdout_cfg = dir.path().join(format!("stdout_{i}.json"));
        std::fs::write(&file_cfg, with_file.to_string()).map_err(err)?;
        std::fs::write(&stdout_cfg, cfg.to_string()).map_err(err)?;

        run_cli(&file_cfg, None)?;
        let first = std::fs::read(&csv).map_err(err)?;
        run_cli(&file_cfg, None)?;
        let second = std::fs::read(&csv).map_err(err)?;
        let out_a = run_cli(&stdout_cfg, Some("42"))?;
        let out_b = run_cli(&stdout_cfg, Some("42"))?;
        ok &= !first.is_empty() && first == second && out_a == out_b && first != out_a;
        compared += 2;
    }
    Ok((ok, format!("{compared} repeated runs compared byte for byte")))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("example1 quasar certificate", example1_quasar),
        ("fig1 counterexample", fig1_counterexample),
        ("prox conditioning", prox_conditioning),
        ("envelope quasar convexity", moreau_quasar),
        ("envelope descent", descent_lemma),
        ("line search inequality", line_search),
        ("frank-wolfe envelope", || baseline_envelope(true)),
        ("pgd envelope", || baseline_envelope(false)),
        ("accelerated end to end", end_to_end),
        ("scaling fits", scaling),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = check().unwrap_or_else(|e| (false, format!("error: {e}")));
        if !pass {
            failures += 1;
        }
        println!(
            "{} {:>2} {name}: {detail} [{:.2} s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            secs(start.elapsed())
        );
    }
    println!("acceptance: {} of {} passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
