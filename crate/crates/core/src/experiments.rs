//! Batch protocols: parameter sweeps, phase-transition location, scaling
//! fits, algorithm comparisons, the (1+1) EA baseline and noise studies.
//!
//! Replicate `r` of grid point `g` runs with seed
//! `derive_seed(master, [g, r])`. Runs execute on a rayon pool and are
//! collected in index order, so tables do not depend on the thread count.

use rayon::prelude::*;

use crate::edas::{Algorithm, EdaConfig};
use crate::error::{config, Error, Result};
use crate::fitness::{Evaluator, FitnessFunction, FitnessSpec, NoiseKind, Objective};
use crate::model::{BitString, Margin};
use crate::runner::{run, Problem, RunResult, StopCondition};
use crate::stats::{derive_seed, loglog_slope, LinearFit, RngStream, Summary};

/// How μ follows λ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MuRule {
    Fixed(usize),
    /// `max(1, floor(f λ))`
    Fraction(f64),
    /// `max(1, floor(λ / d))`, exact in integers.
    Divisor(usize),
}

impl MuRule {
    pub fn apply(self, lambda: usize) -> usize {
        match self {
            MuRule::Fixed(mu) => mu,
            MuRule::Fraction(f) => ((f * lambda as f64).floor() as usize).max(1),
            MuRule::Divisor(d) => (lambda / d.max(1)).max(1),
        }
    }
}

/// Evaluation budget per run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BudgetRule {
    /// `ceil(5000 n ln(n + 1) λ)`
    Default,
    /// `ceil(c n ln(n + 1) λ)`
    Factor(f64),
    Fixed(u64),
}

impl BudgetRule {
    pub fn stop_for(self, cfg: &EdaConfig) -> StopCondition {
        match self {
            BudgetRule::Default => StopCondition::default_for(cfg),
            BudgetRule::Factor(c) => {
                let n = cfg.n as f64;
                StopCondition::evaluations(
                    (c * n * (n + 1.0).ln() * cfg.lambda() as f64).ceil() as u64
                )
            }
            BudgetRule::Fixed(b) => StopCondition::evaluations(b),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MarginRule {
    OneOverN,
    Fixed(f64),
    Borderless,
}

impl MarginRule {
    fn apply(self, cfg: EdaConfig) -> Result<EdaConfig> {
        Ok(match self {
            MarginRule::OneOverN => cfg,
            MarginRule::Fixed(m) => cfg.with_margin(Some(Margin::new(m)?)),
            MarginRule::Borderless => cfg.borderless(),
        })
    }
}

/// A grid of configurations run with `replicates` seeds each.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepProtocol {
    pub algorithm: Algorithm,
    pub n: Vec<usize>,
    pub lambda: Vec<usize>,
    pub mu: MuRule,
    pub rho: Vec<f64>,
    pub k: Vec<f64>,
    pub epsilon: Vec<f64>,
    pub margin: MarginRule,
    pub fitness: FitnessSpec,
    pub replicates: usize,
    pub master_seed: u64,
    pub budget: BudgetRule,
}

impl SweepProtocol {
    /// UMDA on OneMax at n = 2000 with μ = λ/2 over λ = 14, 14 + step, ..., ≤ 350.
    pub fn lambda_sweep(step: usize, replicates: usize, master_seed: u64) -> Self {
        SweepProtocol {
            algorithm: Algorithm::Umda,
            n: vec![2000],
            lambda: (14..=350).step_by(step.max(1)).collect(),
            mu: MuRule::Divisor(2),
            rho: vec![],
            k: vec![],
            epsilon: vec![],
            margin: MarginRule::OneOverN,
            fitness: FitnessSpec::plain(crate::fitness::Benchmark::OneMax),
            replicates,
            master_seed,
            budget: BudgetRule::Default,
        }
    }

    /// Expands the grid in the order n, then λ, then ρ, K or ε. Lists that the
    /// algorithm does not use must be empty.
    pub fn grid(&self) -> Result<Vec<GridPoint>> {
        if self.replicates == 0 {
            return config("replicates must be at least 1");
        }
        if self.n.is_empty() {
            return config("the n grid is empty");
        }
        self.fitness.validate()?;
        let alg = self.algorithm;
        let uses = |name: &str, list_len: usize, used: bool| -> Result<()> {
            match (used, list_len) {
                (true, 0) => config(format!("{} needs a non-empty {name} grid", alg.name())),
                (false, l) if l > 0 => {
                    config(format!("{name} is not a parameter of {}", alg.name()))
                }
                _ => Ok(()),
            }
        };
        let with_lambda = matches!(alg, Algorithm::Umda | Algorithm::Pbil | Algorithm::MmasIb);
        uses("lambda", self.lambda.len(), with_lambda)?;
        uses(
            "rho",
            self.rho.len(),
            matches!(alg, Algorithm::Pbil | Algorithm::MmasIb),
        )?;
        uses("K", self.k.len(), alg == Algorithm::Cga)?;
        uses("epsilon", self.epsilon.len(), alg == Algorithm::SigCga)?;

        let mut configs = Vec::new();
        for &n in &self.n {
            match alg {
                Algorithm::Umda => {
                    for &l in &self.lambda {
                        configs.push(EdaConfig::umda(n, l, self.mu.apply(l)));
                    }
                }
                Algorithm::Pbil => {
                    for &l in &self.lambda {
                        for &rho in &self.rho {
                            configs.push(EdaConfig::pbil(n, l, self.mu.apply(l), rho));
                        }
                    }
                }
                Algorithm::MmasIb => {
                    for &l in &self.lambda {
                        for &rho in &self.rho {
                            configs.push(EdaConfig::mmas_ib(n, l, rho));
                        }
                    }
                }
                Algorithm::Cga => configs.extend(self.k.iter().map(|&k| EdaConfig::cga(n, k))),
                Algorithm::SigCga => {
                    configs.extend(self.epsilon.iter().map(|&e| EdaConfig::sig_cga(n, e)))
                }
            }
        }
        configs
            .into_iter()
            .map(|c| {
                let cfg = self.margin.apply(c)?;
                cfg.validate()?;
                let stop = self.budget.stop_for(&cfg);
                stop.validate(&cfg)?;
                Ok(GridPoint {
                    cfg,
                    fitness: self.fitness.clone(),
                    stop,
                })
            })
            .collect()
    }
}

/// One fully resolved configuration of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPoint {
    pub cfg: EdaConfig,
    pub fitness: FitnessSpec,
    pub stop: StopCondition,
}

/// The parts of a [`RunResult`] that tables aggregate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Replicate {
    pub hit: bool,
    pub evaluations_to_hit: Option<u64>,
    pub evaluations: u64,
    pub lower_border_hits: u64,
}

impl From<&RunResult> for Replicate {
    fn from(r: &RunResult) -> Self {
        Replicate {
            hit: r.hit,
            evaluations_to_hit: r.evaluations_to_hit,
            evaluations: r.evaluations,
            lower_border_hits: r.lower_border_hits,
        }
    }
}

/// Aggregates over replicates. Runtime statistics use successful runs only.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub runs: usize,
    pub successes: usize,
    pub evals: Option<Summary>,
    pub mean_border_hits: f64,
}

impl Outcome {
    pub fn of(reps: &[Replicate]) -> Outcome {
        let hits = hit_times(reps);
        let border: Vec<f64> = reps.iter().map(|r| r.lower_border_hits as f64).collect();
        Outcome {
            runs: reps.len(),
            successes: hits.len(),
            evals: Summary::of(&hits),
            mean_border_hits: Summary::of(&border).map_or(0.0, |s| s.mean),
        }
    }

    pub fn success_rate(&self) -> f64 {
        if self.runs == 0 {
            0.0
        } else {
            self.successes as f64 / self.runs as f64
        }
    }
}

/// Evaluations to hit of the successful replicates, in replicate order.
pub fn hit_times(reps: &[Replicate]) -> Vec<f64> {
    reps.iter()
        .filter_map(|r| r.evaluations_to_hit.map(|e| e as f64))
        .collect()
}

/// Seed of replicate `r` of grid point `g`.
pub fn replicate_seed(master: u64, g: usize, r: usize) -> u64 {
    derive_seed(master, &[g as u64, r as u64])
}

/// One run of `point` with `seed`; random instances come from the
/// sub-stream `[2]` of the seed.
pub fn run_point(point: &GridPoint, seed: u64) -> Result<RunResult> {
    let mut inst = RngStream::derive(seed, &[2]);
    let function = point.fitness.instantiate(point.cfg.n, &mut inst)?;
    run(
        &point.cfg,
        &Problem::new(function, point.fitness.noise),
        &point.stop,
        seed,
    )
}

/// Runs `f` on a pool of `threads` workers, or on the global pool for `None`.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(0) => config("threads must be at least 1"),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| Error::Config(format!("cannot start {t} worker threads: {e}"))),
    }
}

/// All replicates of all points, grouped by point in grid order.
pub fn run_grid(
    points: &[GridPoint],
    replicates: usize,
    master: u64,
    threads: Option<usize>,
) -> Result<Vec<Vec<Replicate>>> {
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|g| (0..replicates).map(move |r| (g, r)))
        .collect();
    let flat: Vec<Replicate> = with_threads(threads, || {
        jobs.par_iter()
            .map(|&(g, r)| {
                run_point(&points[g], replicate_seed(master, g, r)).map(|res| Replicate::from(&res))
            })
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(flat.chunks(replicates.max(1)).map(<[_]>::to_vec).collect())
}

/// Header of sweep tables.
pub const SWEEP_HEADER: [&str; 16] = [
    "algo",
    "fitness",
    "n",
    "lambda",
    "mu",
    "rho",
    "K",
    "epsilon",
    "margin",
    "runs",
    "success_rate",
    "mean_evals",
    "median_evals",
    "std_evals",
    "mean_border_hits",
    "master_seed",
];

/// One aggregated grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub point: GridPoint,
    pub outcome: Outcome,
    pub replicates: Vec<Replicate>,
}

impl SweepRow {
    /// Fields in [`SWEEP_HEADER`] order; absent values are empty and numbers
    /// use the shortest decimal that round-trips.
    pub fn fields(&self, master_seed: u64) -> Vec<String> {
        let c = &self.point.cfg;
        let opt_u = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
        let opt_f = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let s = self.outcome.evals.as_ref();
        vec![
            c.algorithm().name().to_string(),
            self.point.fitness.to_string(),
            c.n.to_string(),
            c.lambda().to_string(),
            opt_u(matches!(c.algorithm(), Algorithm::Umda | Algorithm::Pbil).then(|| c.mu())),
            opt_f(c.rho()),
            opt_f(c.k()),
            opt_f(c.epsilon()),
            opt_f(c.margin.map(Margin::value)),
            self.outcome.runs.to_string(),
            self.outcome.success_rate().to_string(),
            opt_f(s.map(|s| s.mean)),
            opt_f(s.map(|s| s.median)),
            opt_f(s.and_then(|s| s.std_dev)),
            self.outcome.mean_border_hits.to_string(),
            master_seed.to_string(),
        ]
    }
}

/// Runs every grid point of `protocol`.
pub fn sweep(protocol: &SweepProtocol, threads: Option<usize>) -> Result<Vec<SweepRow>> {
    let points = protocol.grid()?;
    let reps = run_grid(&points, protocol.replicates, protocol.master_seed, threads)?;
    Ok(points
        .into_iter()
        .zip(reps)
        .map(|(point, replicates)| SweepRow {
            outcome: Outcome::of(&replicates),
            point,
            replicates,
        })
        .collect())
}

/// Where mean border hits first fall to a threshold along a λ grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PhaseTransition {
    /// `lambda` is the smallest grid value at or below the threshold;
    /// `previous` is the grid value before it, if any.
    Reached {
        lambda: usize,
        previous: Option<usize>,
    },
    NotReached,
}

/// `points` are `(λ, mean border hits)` in increasing λ.
pub fn phase_transition(points: &[(usize, f64)], threshold: f64) -> Result<PhaseTransition> {
    if points.is_empty() {
        return Err(Error::InsufficientData("empty λ grid".into()));
    }
    if points.windows(2).any(|w| w[0].0 >= w[1].0) {
        return config("the λ grid must be strictly increasing");
    }
    Ok(points
        .iter()
        .position(|&(_, h)| h <= threshold)
        .map_or(PhaseTransition::NotReached, |i| PhaseTransition::Reached {
            lambda: points[i].0,
            previous: i.checked_sub(1).map(|j| points[j].0),
        }))
}

/// `(λ, mean border hits)` of a sweep's rows.
pub fn border_hit_curve(rows: &[SweepRow]) -> Vec<(usize, f64)> {
    rows.iter()
        .map(|r| (r.point.cfg.lambda(), r.outcome.mean_border_hits))
        .collect()
}

/// Maps `n` to a configuration.
pub type ParamRule<'a> = dyn Fn(usize) -> Result<EdaConfig> + Sync + 'a;

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingRow {
    pub n: usize,
    pub outcome: Outcome,
    pub replicates: Vec<Replicate>,
}

impl ScalingRow {
    pub fn median(&self) -> Option<f64> {
        self.outcome.evals.as_ref().map(|s| s.median)
    }
}

/// Fitted growth of median runtime in `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingReport {
    pub label: String,
    pub fitness: String,
    pub rows: Vec<ScalingRow>,
    /// Present with at least 4 distinct `n` that all have successes.
    pub fit: Option<LinearFit>,
    /// Percentile bootstrap interval of the slope (replicates resampled per `n`).
    pub slope_ci: Option<(f64, f64)>,
    /// Some `n` had success rate below 0.95.
    pub budget_limited: bool,
}

/// OLS slope of `ln median` on `ln n`; needs 4 distinct `n`.
pub fn fit_scaling(points: &[(usize, f64)]) -> Result<LinearFit> {
    let mut ns: Vec<usize> = points.iter().map(|p| p.0).collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "a scaling fit needs at least 4 distinct n, got {}",
            ns.len()
        )));
    }
    let pts: Vec<(f64, f64)> = points.iter().map(|&(n, y)| (n as f64, y)).collect();
    loglog_slope(&pts)
}

const BOOTSTRAP_RESAMPLES: usize = 2000;

/// Percentile bootstrap interval for the scaling slope: each resample draws
/// every row's runtimes with replacement and refits the medians.
pub fn bootstrap_slope_ci(rows: &[(usize, Vec<f64>)], level: f64, seed: u64) -> Result<(f64, f64)> {
    if rows.iter().any(|r| r.1.is_empty()) {
        return Err(Error::InsufficientData("a row without runtimes".into()));
    }
    let mut rng = RngStream::derive(seed, &[u64::MAX]);
    let mut slopes = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    let mut buf = Vec::new();
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let pts: Vec<(usize, f64)> = rows
            .iter()
            .map(|(n, v)| {
                buf.clear();
                buf.extend((0..v.len()).map(|_| v[rng.below(v.len() as u64) as usize]));
                (*n, Summary::of(&buf).expect("non-empty").median)
            })
            .collect();
        slopes.push(fit_scaling(&pts)?.slope);
    }
    slopes.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    let at =
        |q: f64| slopes[((q * (slopes.len() - 1) as f64).round() as usize).min(slopes.len() - 1)];
    Ok((at(tail), at(1.0 - tail)))
}

/// Runs `rule(n)` on `fitness` for each `n` with `replicates` seeds
/// (`derive_seed(master, [i, r])` for the `i`-th `n`) and fits the slope of
/// the median runtimes.
#[allow(clippy::too_many_arguments)]
pub fn scaling_fit(
    label: &str,
    rule: &ParamRule<'_>,
    fitness: &FitnessSpec,
    ns: &[usize],
    replicates: usize,
    budget: BudgetRule,
    master: u64,
    threads: Option<usize>,
) -> Result<ScalingReport> {
    if replicates == 0 {
        return config("replicates must be at least 1");
    }
    let points = ns
        .iter()
        .map(|&n| {
            let cfg = rule(n)?;
            cfg.validate()?;
            let stop = budget.stop_for(&cfg);
            stop.validate(&cfg)?;
            Ok(GridPoint {
                cfg,
                fitness: fitness.clone(),
                stop,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let reps = run_grid(&points, replicates, master, threads)?;
    let rows: Vec<ScalingRow> = ns
        .iter()
        .zip(reps)
        .map(|(&n, replicates)| ScalingRow {
            n,
            outcome: Outcome::of(&replicates),
            replicates,
        })
        .collect();
    let budget_limited = rows.iter().any(|r| r.outcome.success_rate() < 0.95);
    let medians: Option<Vec<(usize, f64)>> =
        rows.iter().map(|r| r.median().map(|m| (r.n, m))).collect();
    let fit = medians.and_then(|m| fit_scaling(&m).ok());
    let slope_ci = if fit.is_some() {
        let samples: Vec<(usize, Vec<f64>)> = rows
            .iter()
            .map(|r| (r.n, hit_times(&r.replicates)))
            .collect();
        Some(bootstrap_slope_ci(&samples, 0.95, master)?)
    } else {
        None
    };
    Ok(ScalingReport {
        label: label.to_string(),
        fitness: fitness.to_string(),
        rows,
        fit,
        slope_ci,
        budget_limited,
    })
}

/// Header of scaling and comparison tables: one row per (algorithm, fitness, n).
pub const SCALING_HEADER: [&str; 12] = [
    "algo",
    "fitness",
    "n",
    "runs",
    "success_rate",
    "median_evals",
    "mean_evals",
    "slope",
    "slope_stderr",
    "slope_ci_low",
    "slope_ci_high",
    "budget_limited",
];

impl ScalingReport {
    pub fn rows_fields(&self) -> Vec<Vec<String>> {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        self.rows
            .iter()
            .map(|r| {
                vec![
                    self.label.clone(),
                    self.fitness.clone(),
                    r.n.to_string(),
                    r.outcome.runs.to_string(),
                    r.outcome.success_rate().to_string(),
                    opt(r.median()),
                    opt(r.outcome.evals.as_ref().map(|s| s.mean)),
                    opt(self.fit.as_ref().map(|f| f.slope)),
                    opt(self.fit.as_ref().map(|f| f.slope_stderr)),
                    opt(self.slope_ci.map(|c| c.0)),
                    opt(self.slope_ci.map(|c| c.1)),
                    self.budget_limited.to_string(),
                ]
            })
            .collect()
    }
}

/// An algorithm with its parameter rule in a comparison.
pub struct CompareEntry<'a> {
    pub label: String,
    pub rule: Box<ParamRule<'a>>,
}

/// Scaling reports for every (entry, fitness) pair; pair `(e, f)` uses the
/// master seed `derive_seed(master, [e, f])`.
pub fn compare(
    entries: &[CompareEntry<'_>],
    fitnesses: &[FitnessSpec],
    ns: &[usize],
    replicates: usize,
    budget: BudgetRule,
    master: u64,
    threads: Option<usize>,
) -> Result<Vec<ScalingReport>> {
    let mut out = Vec::new();
    for (e, entry) in entries.iter().enumerate() {
        for (f, fitness) in fitnesses.iter().enumerate() {
            out.push(scaling_fit(
                &entry.label,
                entry.rule.as_ref(),
                fitness,
                ns,
                replicates,
                budget,
                derive_seed(master, &[e as u64, f as u64]),
                threads,
            )?);
        }
    }
    Ok(out)
}

/// Flips each bit independently with probability `q`, skipping geometric gaps.
fn mutate(x: &mut BitString, q: f64, rng: &mut RngStream) {
    let n = x.len();
    if q <= 0.0 {
        return;
    }
    if q >= 1.0 {
        (0..n).for_each(|i| x.flip(i));
        return;
    }
    let ln_keep = (1.0 - q).ln();
    let mut i = 0usize;
    loop {
        let u = 1.0 - rng.unit();
        let gap = (u.ln() / ln_keep).floor();
        if gap >= (n - i) as f64 {
            return;
        }
        i += gap as usize;
        x.flip(i);
        i += 1;
        if i >= n {
            return;
        }
    }
}

/// One run of the (1+1) EA with standard bit mutation at rate `c / n`.
///
/// Under noise the parent is re-evaluated in every iteration, after the
/// offspring. Hits are detected on the noise-free function at the offspring's
/// evaluation.
pub fn ea_run(
    function: &FitnessFunction,
    noise: NoiseKind,
    c: f64,
    max_evaluations: u64,
    seed: u64,
) -> Result<Replicate> {
    if !(c > 0.0) || !c.is_finite() {
        return config(format!("mutation constant c must be positive, got {c}"));
    }
    if max_evaluations == 0 {
        return config("the budget must allow at least one evaluation");
    }
    let n = function.n();
    let mut rng = RngStream::derive(seed, &[0]);
    let mut eval = if noise.is_none() {
        Evaluator::noise_free(function)
    } else {
        crate::fitness::wrap_noise(function, noise, RngStream::derive(seed, &[1]))?
    };
    let noisy = !noise.is_none();
    let q = c / n as f64;
    let done = |e: &Evaluator<'_>, hit: bool| Replicate {
        hit,
        evaluations_to_hit: hit.then(|| e.evaluations()),
        evaluations: e.evaluations(),
        lower_border_hits: 0,
    };

    let mut x = BitString::random(n, &mut rng);
    let mut fx = eval.evaluate(&x);
    if function.is_optimum(&x) {
        return Ok(done(&eval, true));
    }
    let mut y = x.clone();
    while eval.evaluations() < max_evaluations {
        y.clone_from(&x);
        mutate(&mut y, q, &mut rng);
        let fy = eval.evaluate(&y);
        if function.is_optimum(&y) {
            return Ok(done(&eval, true));
        }
        if noisy {
            if eval.evaluations() >= max_evaluations {
                break;
            }
            fx = eval.evaluate(&x);
        }
        if fy.total_cmp(&fx).is_ge() {
            std::mem::swap(&mut x, &mut y);
            fx = fy;
        }
    }
    Ok(done(&eval, false))
}

/// `replicates` (1+1) EA runs on instances of `fitness`; replicate `r` uses
/// `derive_seed(master, [r])`.
pub fn ea_baseline(
    fitness: &FitnessSpec,
    n: usize,
    c: f64,
    max_evaluations: u64,
    replicates: usize,
    master: u64,
    threads: Option<usize>,
) -> Result<Vec<Replicate>> {
    fitness.validate()?;
    with_threads(threads, || {
        (0..replicates)
            .into_par_iter()
            .map(|r| {
                let seed = derive_seed(master, &[r as u64]);
                let f = fitness.instantiate(n, &mut RngStream::derive(seed, &[2]))?;
                ea_run(&f, fitness.noise, c, max_evaluations, seed)
            })
            .collect()
    })?
}

/// Maps `(n, noise)` to a configuration.
pub type NoiseRule<'a> = dyn Fn(usize, NoiseKind) -> Result<EdaConfig> + Sync + 'a;

#[derive(Clone, Debug, PartialEq)]
pub struct NoiseRow {
    pub noise: NoiseKind,
    pub eda_cfg: EdaConfig,
    pub eda: Vec<Replicate>,
    pub ea: Option<Vec<Replicate>>,
}

/// Header of noise-study tables.
pub const NOISE_HEADER: [&str; 9] = [
    "noise",
    "algo",
    "n",
    "runs",
    "eda_success_rate",
    "eda_median_evals",
    "ea_success_rate",
    "ea_median_evals",
    "budget",
];

/// The EDA chosen by `rule` and, with `ea_c`, the (1+1) EA on `fitness` under
/// each noise level. Replicate `r` uses the same seeds at every level, so a
/// noiseless level reproduces noiseless runs exactly.
#[allow(clippy::too_many_arguments)]
pub fn noise_study(
    rule: &NoiseRule<'_>,
    fitness: &FitnessSpec,
    levels: &[NoiseKind],
    n: usize,
    replicates: usize,
    max_evaluations: u64,
    ea_c: Option<f64>,
    master: u64,
    threads: Option<usize>,
) -> Result<Vec<NoiseRow>> {
    if levels.is_empty() {
        return config("no noise levels given");
    }
    if fitness.noise != NoiseKind::None {
        return config("give noise through the levels, not the fitness spec");
    }
    let eda_master = derive_seed(master, &[0]);
    let ea_master = derive_seed(master, &[1]);
    levels
        .iter()
        .map(|&noise| {
            let cfg = rule(n, noise)?;
            let spec = fitness.clone().with_noise(noise);
            let point = GridPoint {
                cfg,
                fitness: spec.clone(),
                stop: StopCondition::evaluations(max_evaluations),
            };
            cfg.validate()?;
            point.stop.validate(&cfg)?;
            let eda = with_threads(threads, || {
                (0..replicates)
                    .into_par_iter()
                    .map(|r| {
                        run_point(&point, replicate_seed(eda_master, 0, r))
                            .map(|res| Replicate::from(&res))
                    })
                    .collect::<Result<Vec<_>>>()
            })??;
            let ea = ea_c
                .map(|c| ea_baseline(&spec, n, c, max_evaluations, replicates, ea_master, threads))
                .transpose()?;
            Ok(NoiseRow {
                noise,
                eda_cfg: cfg,
                eda,
                ea,
            })
        })
        .collect()
}

impl NoiseRow {
    pub fn fields(&self, budget: u64) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let eda = Outcome::of(&self.eda);
        let ea = self.ea.as_deref().map(Outcome::of);
        vec![
            self.noise.to_string(),
            self.eda_cfg.algorithm().name().to_string(),
            self.eda_cfg.n.to_string(),
            eda.runs.to_string(),
            eda.success_rate().to_string(),
            opt(eda.evals.as_ref().map(|s| s.median)),
            opt(ea.as_ref().map(Outcome::success_rate)),
            opt(ea.as_ref().and_then(|o| o.evals.as_ref().map(|s| s.median))),
            budget.to_string(),
        ]
    }
}
