//! Full optimization runs with per-sample hitting times and instrumentation.
//!
//! A run owns two streams derived from its seed: `derive(seed, [0])` drives
//! sampling and selection, `derive(seed, [1])` drives fitness noise. Probing
//! reads state only, so traced and untraced runs consume identical draws.

use crate::edas::{Eda, EdaConfig};
use crate::error::{config, Result};
use crate::fitness::{wrap_noise, Evaluator, FitnessFunction, NoiseKind, Objective};
use crate::model::FrequencyVector;
use crate::stats::RngStream;

/// Evaluation budget. Optimality is always judged on the noise-free function.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StopCondition {
    pub max_evaluations: u64,
}

impl StopCondition {
    pub fn evaluations(max_evaluations: u64) -> Self {
        StopCondition { max_evaluations }
    }

    /// `ceil(5000 * n * ln(n + 1) * lambda)`.
    pub fn default_for(cfg: &EdaConfig) -> Self {
        let n = cfg.n as f64;
        let budget = (5000.0 * n * (n + 1.0).ln() * cfg.lambda() as f64).ceil();
        StopCondition {
            max_evaluations: budget as u64,
        }
    }

    pub fn validate(&self, cfg: &EdaConfig) -> Result<()> {
        if self.max_evaluations < cfg.lambda() as u64 {
            return config(format!(
                "max_evaluations ({}) must be at least lambda ({})",
                self.max_evaluations,
                cfg.lambda()
            ));
        }
        Ok(())
    }
}

/// The function being optimized and the noise its evaluations carry.
#[derive(Clone, Debug, PartialEq)]
pub struct Problem {
    pub function: FitnessFunction,
    pub noise: NoiseKind,
}

impl Problem {
    pub fn new(function: FitnessFunction, noise: NoiseKind) -> Self {
        Problem { function, noise }
    }

    pub fn noiseless(function: FitnessFunction) -> Self {
        Self::new(function, NoiseKind::None)
    }
}

impl From<FitnessFunction> for Problem {
    fn from(function: FitnessFunction) -> Self {
        Problem::noiseless(function)
    }
}

/// Frequency snapshot taken after generation `t` (t = 0 is the initial state).
#[derive(Clone, Debug, PartialEq)]
pub struct Probe {
    pub t: u64,
    pub p: Vec<f64>,
}

impl Probe {
    /// `P_t`, the sum of all frequencies.
    pub fn potential(&self) -> f64 {
        self.p.iter().sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub hit: bool,
    /// Samples evaluated up to and including the first optimal one.
    pub evaluations_to_hit: Option<u64>,
    /// All samples evaluated.
    pub evaluations: u64,
    /// Generations in which at least one offspring was sampled.
    pub generations: u64,
    /// Transitions of a frequency from above the lower border onto it.
    pub lower_border_hits: u64,
    /// Borderless runs only: transitions of a frequency from above 0 to 0.
    pub zero_absorptions: u64,
    pub final_frequencies: FrequencyVector,
    pub trajectory: Option<Vec<Probe>>,
    pub potential_trace: Option<Vec<(u64, f64)>>,
}

/// Runs until an optimal offspring is sampled or the budget is spent.
pub fn run(
    cfg: &EdaConfig,
    problem: &Problem,
    stop: &StopCondition,
    seed: u64,
) -> Result<RunResult> {
    drive(cfg, problem, stop, seed, None)
}

/// As [`run`], additionally recording frequencies and `P_t` at t = 0 and
/// after every `probe_every`-th generation.
pub fn trace(
    cfg: &EdaConfig,
    problem: &Problem,
    stop: &StopCondition,
    seed: u64,
    probe_every: u64,
) -> Result<RunResult> {
    if probe_every == 0 {
        return config("probe_every must be at least 1");
    }
    drive(cfg, problem, stop, seed, Some(probe_every))
}

fn drive(
    cfg: &EdaConfig,
    problem: &Problem,
    stop: &StopCondition,
    seed: u64,
    probe_every: Option<u64>,
) -> Result<RunResult> {
    cfg.validate()?;
    stop.validate(cfg)?;
    if problem.function.n() != cfg.n {
        return config(format!(
            "fitness length {} does not match n = {}",
            problem.function.n(),
            cfg.n
        ));
    }
    let mut rng = RngStream::derive(seed, &[0]);
    let mut evaluator = if problem.noise.is_none() {
        Evaluator::noise_free(&problem.function)
    } else {
        wrap_noise(
            &problem.function,
            problem.noise,
            RngStream::derive(seed, &[1]),
        )?
    };
    let mut eda = Eda::new(*cfg)?;
    let lambda = cfg.lambda() as u64;

    let mut trajectory = probe_every.map(|_| Vec::new());
    let record = |trajectory: &mut Option<Vec<Probe>>, eda: &Eda| {
        if let Some(tr) = trajectory.as_mut() {
            tr.push(Probe {
                t: eda.generation(),
                p: eda.frequencies().as_slice().to_vec(),
            });
        }
    };
    record(&mut trajectory, &eda);

    let lower = cfg.margin.map(|m| m.lower());
    let mut lower_border_hits = 0;
    let mut zero_absorptions = 0;
    let mut generations = 0;
    let mut evaluations_to_hit = None;
    let mut previous: Vec<f64> = eda.frequencies().as_slice().to_vec();

    loop {
        let remaining = stop.max_evaluations - evaluator.evaluations();
        if remaining == 0 {
            break;
        }
        let want = remaining.min(lambda) as usize;
        let outcome = eda.sample_offspring(&mut evaluator, &mut rng, want, true);
        generations += 1;
        if outcome.hit.is_some() {
            evaluations_to_hit = Some(evaluator.evaluations());
            break;
        }
        if (outcome.sampled as u64) < lambda {
            break;
        }
        eda.update(&mut rng);
        if eda.last_update_changed() {
            let now = eda.frequencies().as_slice();
            match lower {
                Some(m) => {
                    lower_border_hits += previous
                        .iter()
                        .zip(now)
                        .filter(|(&a, &b)| a > m && b == m)
                        .count() as u64;
                }
                None => {
                    zero_absorptions += previous
                        .iter()
                        .zip(now)
                        .filter(|(&a, &b)| a > 0.0 && b == 0.0)
                        .count() as u64;
                }
            }
            previous.copy_from_slice(now);
        }
        if let Some(every) = probe_every {
            if eda.generation() % every == 0 {
                record(&mut trajectory, &eda);
            }
        }
    }

    let potential_trace = trajectory
        .as_ref()
        .map(|tr| tr.iter().map(|pr| (pr.t, pr.potential())).collect());
    Ok(RunResult {
        hit: evaluations_to_hit.is_some(),
        evaluations_to_hit,
        evaluations: evaluator.evaluations(),
        generations,
        lower_border_hits,
        zero_absorptions,
        final_frequencies: eda.frequencies().clone(),
        trajectory,
        potential_trace,
    })
}
