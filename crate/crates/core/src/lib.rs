//! Estimation-of-distribution algorithms on pseudo-Boolean benchmarks, with
//! the tooling to measure them: a run driver with per-sample hitting times,
//! drift-theorem bounds and empirical drift estimates, parameter sweeps and
//! the statistics used to summarize them.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod drift;
pub mod edas;
pub mod error;
pub mod experiments;
pub mod fitness;
pub mod model;
pub mod runner;
pub mod stats;

pub use edas::{Algorithm, Eda, EdaConfig, EdaState, Scheme};
pub use error::{Error, Result};
pub use fitness::{Benchmark, Evaluator, FitnessFunction, FitnessSpec, NoiseKind, Objective};
pub use model::{BitString, Fitness, FrequencyVector, Margin};
pub use runner::{run, RunResult, StopCondition};
pub use stats::RngStream;
