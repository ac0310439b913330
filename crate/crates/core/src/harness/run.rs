//! Single experiment runs and their trace files.

use std::fs::File;
use std::io::BufWriter;

use crate::accel::{accel_header, compute_schedule, run_accelerated_into, AccelRun};
use crate::baselines::{
    baseline_header, frank_wolfe_bound, pgd_bound, run_frank_wolfe_into, run_pgd_into,
};
use crate::error::{QoptError, Result};
use crate::harness::config::{Algorithm, ExperimentConfig};
use crate::objectives::{FirstOrderOracle, Objective, OracleCounter};
use crate::trace::Trace;

/// Fill the bound column of a baseline trace from its rate envelope, with
/// `D = diam(X)` standing in for the level-set diameter. Rows `t ≥ 1` only.
pub fn attach_bounds(trace: &mut Trace, algorithm: Algorithm, obj: &Objective) {
    let (l, d, g) = (obj.smoothness(), obj.feasible_set().diameter(), obj.quasar_gamma());
    let bound = match algorithm {
        Algorithm::Pgd => pgd_bound,
        Algorithm::FrankWolfe => frank_wolfe_bound,
        // Accelerated rows carry their own envelope.
        Algorithm::Accelerated => return,
    };
    for row in trace.rows.iter_mut().filter(|r| r.iter >= 1) {
        row.bound = Some(bound(l, d, g, row.iter));
    }
}

/// Run one configured experiment. The trace is written to `output_path`
/// when set, including a partial trace with a failure marker if the solver
/// fails; the solver's error is then returned.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Trace> {
    let (trace, outcome) = execute(config);
    if let Some(path) = &config.output_path {
        if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        trace.write_csv(BufWriter::new(File::create(path)?))?;
    }
    outcome.map(|()| trace)
}

/// Run without touching the filesystem; the trace is returned even on
/// failure.
pub fn execute(config: &ExperimentConfig) -> (Trace, Result<()>) {
    let obj = &config.objective;
    let mut counter = OracleCounter::new();
    let (mut trace, outcome) = match config.algorithm {
        Algorithm::Accelerated => {
            let epsilon = config.epsilon.unwrap_or(f64::NAN);
            match compute_schedule(
                obj.quasar_gamma(),
                obj.smoothness(),
                obj.feasible_set().diameter(),
                epsilon,
            ) {
                Ok(schedule) => {
                    let mut run = AccelRun {
                        trace: Trace::new(accel_header(obj, &schedule)),
                        schedule,
                        steps: Vec::new(),
                        output: None,
                    };
                    let out = run_accelerated_into(obj, &config.x0, &mut counter, &mut run);
                    (run.trace, out)
                }
                Err(e) => (Trace::new(baseline_header(obj, "accelerated", 0)), Err(e)),
            }
        }
        Algorithm::Pgd | Algorithm::FrankWolfe => {
            let t = config.iterations.unwrap_or(0);
            let mut trace = Trace::new(baseline_header(obj, config.algorithm.as_str(), t));
            let out = if config.algorithm == Algorithm::Pgd {
                run_pgd_into(obj, &config.x0, t, &mut counter, &mut trace)
            } else {
                run_frank_wolfe_into(obj, &config.x0, t, &mut counter, &mut trace)
            };
            attach_bounds(&mut trace, config.algorithm, obj);
            (trace, out)
        }
    };
    let solver_params = std::mem::take(&mut trace.header.params);
    trace.header.params = serde_json::json!({ "config": config.echo, "solver": solver_params });
    trace.header.seed = Some(config.seed);
    if let Err(e) = &outcome {
        trace.failure = Some(e.to_string());
        trace.oracle_calls = counter.calls();
    }
    debug_assert!(outcome.is_err() || trace.oracle_calls == counter.calls());
    (trace, outcome)
}

/// Process exit code for an error.
pub fn exit_code(err: &QoptError) -> i32 {
    match err {
        QoptError::Config { .. } | QoptError::InvalidArgument(_) | QoptError::Io(_) => 2,
        QoptError::NumericalFailure { .. } | QoptError::Precondition(_) => 3,
    }
}
