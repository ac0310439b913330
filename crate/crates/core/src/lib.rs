//! Constrained optimization of smooth quasar-convex functions: an
//! accelerated inexact proximal-point method with a noisy binary line
//! search, projected gradient descent and Frank-Wolfe baselines, and a
//! harness that checks the supporting inequalities numerically.

pub mod accel;
pub mod baselines;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod objectives;
pub mod parallel;
pub mod prox;
pub mod sampling;
pub mod sets;
pub mod trace;

pub use error::{QoptError, Result};
pub use objectives::{make_catalogue_objective, FirstOrderOracle, Objective, OracleCounter};
pub use parallel::Execution;
pub use sampling::Sampling;
pub use sets::{FeasibleSet, SetSpec};
pub use trace::{Trace, TraceHeader, TraceRow};
