use std::path::Path;
use std::process::{Command, Output};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use proptest::prelude::*;
use serde_json::{json, Map, Value};

use qopt::accel::{compute_schedule, run_accelerated};
use qopt::baselines::{run_frank_wolfe, run_pgd};
use qopt::harness::{self, catalogue_instance, exit_code, ExperimentConfig};
use qopt::objectives::check_quasar_convexity;
use qopt::prox::check_prox_conditioning;
use qopt::{Execution, FirstOrderOracle, Objective, OracleCounter, QoptError, Sampling, Trace};

fn qopt(args: &[&str], seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qopt"));
    cmd.args(args).env_remove("QOPT_SEED");
    if let Some(s) = seed {
        cmd.env("QOPT_SEED", s);
    }
    cmd.output().expect("qopt binary runs")
}

fn write_config(dir: &Path, name: &str, cfg: &Value) -> String {
    let path = dir.join(name);
    std::fs::write(&path, cfg.to_string()).unwrap();
    path.to_string_lossy().into_owned()
}

/// Wrap the evaluator with an independent call counter.
fn audited(obj: &Objective) -> (Objective, Arc<AtomicU64>) {
    let hits = Arc::new(AtomicU64::new(0));
    let h = hits.clone();
    let wrapped = obj.wrap_evaluator(move |inner| {
        Arc::new(move |x: &[f64]| {
            h.fetch_add(1, Ordering::Relaxed);
            inner(x)
        })
    });
    (wrapped, hits)
}

#[test]
fn oracle_counter_matches_evaluator_calls() {
    for label in ["quadratic_simplex", "example1", "glm_sigmoid"] {
        let (obj, hits) = audited(&catalogue_instance(label).unwrap());
        let x0 = obj.feasible_set().canonical_vertex();
        let x0 = if obj.dimension() == 1 { vec![5.0] } else { x0 };

        let mut counter = OracleCounter::new();
        let before = hits.load(Ordering::Relaxed);
        let pgd = run_pgd(&obj, &x0, 50, &mut counter).unwrap();
        assert_eq!(counter.calls(), hits.load(Ordering::Relaxed) - before, "{label} pgd");
        assert_eq!(pgd.oracle_calls, counter.calls());

        let mut counter = OracleCounter::new();
        let before = hits.load(Ordering::Relaxed);
        let fw = run_frank_wolfe(&obj, &x0, 50, &mut counter).unwrap();
        assert_eq!(counter.calls(), hits.load(Ordering::Relaxed) - before, "{label} fw");
        assert_eq!(fw.oracle_calls, counter.calls());

        let mut counter = OracleCounter::new();
        let before = hits.load(Ordering::Relaxed);
        let run = run_accelerated(&obj, &x0, 1e-2, &mut counter).unwrap();
        assert_eq!(counter.calls(), hits.load(Ordering::Relaxed) - before, "{label} accel");
        assert_eq!(run.trace.oracle_calls, counter.calls());
        assert!(run.trace.calls_strictly_increasing());
    }
}

#[test]
fn baselines_ignore_gamma() {
    let obj = catalogue_instance("glm_sigmoid").unwrap();
    let other = obj.clone().with_gamma(0.05).unwrap();
    let x0 = obj.feasible_set().canonical_vertex();
    let rows = |o: &Objective, fw: bool| -> Trace {
        let mut c = OracleCounter::new();
        if fw {
            run_frank_wolfe(o, &x0, 100, &mut c).unwrap()
        } else {
            run_pgd(o, &x0, 100, &mut c).unwrap()
        }
    };
    for fw in [false, true] {
        assert_eq!(rows(&obj, fw).rows, rows(&other, fw).rows);
    }
}

#[test]
fn bound_columns_dominate_gaps() {
    let configs = [
        json!({"algorithm": "pgd", "objective": "quadratic", "set": {"kind": "simplex", "dimension": 3}, "T": 200}),
        json!({"algorithm": "frank_wolfe", "objective": "example1", "x0": [5.0], "T": 500}),
        json!({"algorithm": "frank_wolfe", "objective": "glm_sigmoid", "epsilon": 1e-1}),
        json!({"algorithm": "accelerated", "objective": "quadratic", "epsilon": 1e-2}),
        json!({"algorithm": "accelerated", "objective": "example1", "x0": [-5.0], "epsilon": 1e-2}),
    ];
    for cfg in configs {
        let cfg = ExperimentConfig::from_value(&cfg, None).unwrap();
        let (trace, outcome) = harness::execute(&cfg);
        outcome.unwrap();
        let excess = trace.worst_bound_excess().expect("bound rows present");
        assert!(excess <= 1e-9, "{}: {excess}", cfg.echo);
        assert!(trace.rows[0].bound.is_none());
    }
}

#[test]
fn pgd_on_simplex_hits_the_center_in_one_step() {
    let cfg = json!({"algorithm": "pgd", "objective": "quadratic",
                     "set": {"kind": "simplex", "dimension": 3}, "x0": [1.0, 0.0, 0.0], "T": 5});
    let (trace, outcome) = harness::execute(&ExperimentConfig::from_value(&cfg, None).unwrap());
    outcome.unwrap();
    let csv = trace.to_csv_string();
    let row1: Vec<&str> = csv.lines().nth(3).unwrap().split(',').collect();
    assert_eq!(row1[0], "1");
    assert_eq!(row1[3].parse::<f64>().unwrap(), 0.0);
    assert_eq!(trace.rows.len(), 6);
}

#[test]
fn cli_run_writes_trace_and_honours_seed_env() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "pgd.json",
        &json!({"algorithm": "pgd", "objective": "quadratic", "T": 3, "seed": 5}),
    );
    let plain = qopt(&["run", &cfg], None);
    assert!(plain.status.success());
    let text = String::from_utf8(plain.stdout).unwrap();
    assert!(text.starts_with("# config: "));
    assert!(text.contains("\"seed\":5"));
    assert!(text.lines().nth(1) == Some("iter,oracle_calls,f,gap,bound"));
    assert!(text.trim_end().lines().last().unwrap().starts_with("# result: "));

    let seeded = qopt(&["run", &cfg], Some("99"));
    assert!(seeded.status.success());
    let text = String::from_utf8(seeded.stdout).unwrap();
    assert!(text.contains("\"seed\":99") && !text.contains("\"seed\":5"));

    let bad = qopt(&["run", &cfg], Some("minus one"));
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn cli_config_errors_exit_2_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (json!({"objective": "quadratic", "T": 3}), "algorithm"),
        (json!({"algorithm": "newton", "objective": "quadratic", "T": 3}), "algorithm"),
        (json!({"algorithm": "pgd", "objective": "rosenbrock", "T": 3}), "objective"),
        (json!({"algorithm": "pgd", "objective": "quadratic", "T": 3, "epsilon": 0.1}), "T"),
        (json!({"algorithm": "accelerated", "objective": "quadratic"}), "epsilon"),
        (json!({"algorithm": "pgd", "objective": "quadratic", "T": 3, "x0": [5.0, 5.0]}), "x0"),
        (json!({"algorithm": "pgd", "objective": "quadratic", "T": 3, "colour": 1}), "colour"),
    ];
    for (i, (cfg, field)) in cases.iter().enumerate() {
        let path = write_config(dir.path(), &format!("bad_{i}.json"), cfg);
        let out = qopt(&["run", &path], None);
        assert_eq!(out.status.code(), Some(2), "{cfg}");
        let stderr = String::from_utf8_lossy(&out.stderr);
        assert!(stderr.contains(field), "{cfg}: {stderr}");
    }
    let missing = qopt(&["run", "/nonexistent/config.json"], None);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn exit_codes_by_error_kind() {
    assert_eq!(exit_code(&QoptError::config("T", "bad")), 2);
    assert_eq!(exit_code(&QoptError::invalid("bad")), 2);
    assert_eq!(exit_code(&QoptError::numerical("diverged", &[1.0])), 3);
    assert_eq!(exit_code(&QoptError::precondition("infeasible")), 3);
}

#[test]
fn cli_verify_suites() {
    let ok = qopt(&["verify", "--suite", "fig1_local_max,quasar:fig1_counterexample"], None);
    assert_eq!(ok.status.code(), Some(0));
    let table = String::from_utf8(ok.stdout).unwrap();
    assert!(table.contains("fig1_local_max") && table.contains("overall: pass"));

    let unknown = qopt(&["verify", "--suite", "no_such_check"], None);
    assert_eq!(unknown.status.code(), Some(2));

    let json_out = qopt(&["--sequential", "verify", "--suite", "example1_quasar", "--json"], None);
    let report: Value = serde_json::from_slice(&json_out.stdout).unwrap();
    assert_eq!(report["pass"], json!(true));
    assert_eq!(report["checks"][0]["samples"], json!(10_000));
}

#[test]
fn expected_failure_semantics() {
    let report = harness::verify(&["quasar:fig1_counterexample".into()], Execution::Parallel).unwrap();
    let check = &report.checks[0];
    assert!(check.expect_failure && check.max_violation > 0.0 && check.pass);
    assert!(report.pass);
}

#[test]
fn sweep_writes_traces_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let base = json!({"algorithm": "frank_wolfe", "objective": "example1", "x0": [5.0], "T": 10});
    let summary = harness::sweep(&base, &json!({"T": [10, 100, 1000]}), dir.path(), Execution::Parallel)
        .unwrap();
    assert_eq!(summary.runs.len(), 3);
    for run in &summary.runs {
        assert!(Path::new(&run.path).exists());
    }
    let on_disk: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert!(on_disk["fits"]["frank_wolfe"]["slope"].is_number());
    assert_eq!(on_disk["runs"].as_array().unwrap().len(), 3);

    let empty = harness::sweep(&base, &json!({}), dir.path(), Execution::Parallel);
    assert!(matches!(empty, Err(QoptError::Config { .. })));
}

#[test]
fn sweep_of_epsilon_replaces_t() {
    let dir = tempfile::tempdir().unwrap();
    let base = json!({"algorithm": "pgd", "objective": "quadratic", "T": 10});
    let summary =
        harness::sweep(&base, &json!({"epsilon": [1.0, 0.1]}), dir.path(), Execution::Sequential).unwrap();
    assert!(summary.runs.iter().all(|r| r.failure.is_none() && r.iterations.is_some()));
    assert!(summary.runs[1].iterations > summary.runs[0].iterations);
}

#[test]
fn parallel_and_sequential_checks_agree() {
    for label in ["quadratic", "glm_sigmoid"] {
        let obj = catalogue_instance(label).unwrap();
        let par = Sampling::new(500).with_execution(Execution::Parallel);
        let seq = Sampling::new(500).with_execution(Execution::Sequential);
        assert_eq!(
            check_quasar_convexity(&obj, &par).unwrap(),
            check_quasar_convexity(&obj, &seq).unwrap()
        );
        assert_eq!(
            check_prox_conditioning(&obj, &par).unwrap(),
            check_prox_conditioning(&obj, &seq).unwrap()
        );
    }
}

#[test]
fn partial_trace_survives_failure() {
    // An evaluator that goes non-finite after a few calls.
    let obj = catalogue_instance("quadratic").unwrap();
    let hits = Arc::new(AtomicU64::new(0));
    let h = hits.clone();
    let broken = obj.wrap_evaluator(move |inner| {
        Arc::new(move |x: &[f64]| {
            let (f, g) = inner(x);
            if h.fetch_add(1, Ordering::Relaxed) >= 4 {
                (f64::NAN, g)
            } else {
                (f, g)
            }
        })
    });
    let mut counter = OracleCounter::new();
    let mut trace = Trace::new(qopt::baselines::baseline_header(&broken, "pgd", 10));
    let err = qopt::baselines::run_pgd_into(&broken, &[1.0, 1.0], 10, &mut counter, &mut trace)
        .unwrap_err();
    assert_eq!(exit_code(&err), 3);
    assert_eq!(trace.rows.len(), 4);
    trace.failure = Some(err.to_string());
    assert!(trace.to_csv_string().contains("# failure: "));
}

fn params(v: Value) -> Map<String, Value> {
    v.as_object().cloned().unwrap_or_default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn accumulated_weights_follow_the_recurrence(
        gamma in 0.05f64..=1.0,
        l in 0.1f64..10.0,
        d in 0.1f64..10.0,
        log_eps in -4.0f64..0.0,
    ) {
        let s = compute_schedule(gamma, l, d, 10f64.powf(log_eps)).unwrap();
        let mut sum = 0.0;
        for t in 1..=s.iterations.min(2_000) {
            sum += s.weight(t);
            let closed = gamma * gamma * (t * (t + 1)) as f64 / (16.0 * l);
            prop_assert!((s.cumulative_weight(t) - s.cumulative_weight(t - 1) - s.weight(t)).abs()
                <= 1e-12 * s.cumulative_weight(t));
            prop_assert!((s.cumulative_weight(t) - closed).abs() <= 1e-12 * closed);
            prop_assert!((sum - closed).abs() <= 1e-9 * closed);
        }
        prop_assert!(s.envelope(s.iterations) <= s.epsilon);
    }

    #[test]
    fn accelerated_iterates_stay_feasible(
        a in -1.0f64..1.0,
        b in -1.0f64..1.0,
        cx in -1.0f64..1.0,
        cy in -1.0f64..1.0,
    ) {
        let obj = qopt::make_catalogue_objective(
            "quadratic",
            &params(json!({"dim": 2, "target": [cx, cy]})),
        ).unwrap();
        let run = run_accelerated(&obj, &[a, b], 0.05, &mut OracleCounter::new()).unwrap();
        for step in &run.steps {
            prop_assert!(obj.feasible_set().contains(&step.x, 1e-10).unwrap());
            prop_assert!(step.loop_iterations <= step.loop_bound);
        }
        prop_assert!(run.trace.final_gap.unwrap() <= 0.05);
    }
}
