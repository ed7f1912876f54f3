//! Drift-theorem bounds and empirical drift estimation.
//!
//! Sign convention: drift is `E[X_t - X_{t+1} | X_t]`, so positive drift is
//! progress toward the target 0.

use std::fmt;
use std::str::FromStr;

use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::runner::Probe;
use crate::stats::{pearson, z_value, RngStream, Summary};

/// Which inequality of the additive drift theorem a bound stands for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundKind {
    /// Drift at least δ everywhere: `E[T] <= X0 / δ`.
    Upper,
    /// Drift at most δ everywhere: `E[T] >= X0 / δ`.
    Lower,
}

/// Additive drift bound `X0 / δ`. Both kinds share the formula.
pub fn additive_bound(x0: f64, delta: f64, _kind: BoundKind) -> Result<f64> {
    if !(delta > 0.0) || !delta.is_finite() {
        return domain(format!("additive drift needs delta > 0, got {delta}"));
    }
    if !(x0 >= 0.0) || !x0.is_finite() {
        return domain(format!("additive drift needs X0 >= 0, got {x0}"));
    }
    Ok(x0 / delta)
}

/// Multiplicative drift bound `(1 + ln X0) / δ`.
pub fn multiplicative_bound(x0: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0) || !delta.is_finite() {
        return domain(format!("multiplicative drift needs delta > 0, got {delta}"));
    }
    if !(x0 >= 1.0) || !x0.is_finite() {
        return domain(format!(
            "multiplicative drift needs X0 >= 1 (the process is already below the target), got {x0}"
        ));
    }
    Ok((1.0 + x0.ln()) / delta)
}

/// Value of a variable drift bound together with the quadrature error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VariableBound {
    pub value: f64,
    pub error_estimate: f64,
}

/// Variable drift bound `1/h(1) + ∫_1^X0 dx / h(x)` by adaptive Simpson
/// quadrature to absolute tolerance `tol`.
///
/// Every node at which `h` is evaluated must give a finite positive value.
pub fn variable_bound(x0: f64, h: impl Fn(f64) -> f64, tol: f64) -> Result<VariableBound> {
    if !(x0 >= 1.0) || !x0.is_finite() {
        return domain(format!("variable drift needs X0 >= 1, got {x0}"));
    }
    if !(tol > 0.0) {
        return domain(format!("quadrature tolerance must be positive, got {tol}"));
    }
    let inv = |x: f64| -> Result<f64> {
        let v = h(x);
        if v > 0.0 && v.is_finite() {
            Ok(1.0 / v)
        } else {
            domain(format!("h must be positive on [1, X0]; h({x}) = {v}"))
        }
    };
    let head = inv(1.0)?;
    if x0 == 1.0 {
        return Ok(VariableBound {
            value: head,
            error_estimate: 0.0,
        });
    }
    let (integral, err) = adaptive_simpson(&inv, 1.0, x0, tol)?;
    Ok(VariableBound {
        value: head + integral,
        error_estimate: err,
    })
}

const MAX_DEPTH: u32 = 48;

struct Segment {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive_simpson(
    f: &impl Fn(f64) -> Result<f64>,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    let (fa, fb) = (f(a)?, f(b)?);
    let fm = f(0.5 * (a + b))?;
    let mut stack = vec![Segment {
        a,
        b,
        fa,
        fm,
        fb,
        whole: simpson(a, b, fa, fm, fb),
        tol,
        depth: 0,
    }];
    let (mut total, mut err) = (0.0, 0.0);
    while let Some(s) = stack.pop() {
        let m = 0.5 * (s.a + s.b);
        let (lm, rm) = (0.5 * (s.a + m), 0.5 * (m + s.b));
        let (flm, frm) = (f(lm)?, f(rm)?);
        let left = simpson(s.a, m, s.fa, flm, s.fm);
        let right = simpson(m, s.b, s.fm, frm, s.fb);
        let delta = left + right - s.whole;
        if delta.abs() <= 15.0 * s.tol || s.depth >= MAX_DEPTH {
            if s.depth >= MAX_DEPTH && delta.abs() > 15.0 * s.tol {
                return Err(Error::Domain(format!(
                    "quadrature did not reach tolerance {tol} near x = {m}"
                )));
            }
            total += left + right + delta / 15.0;
            err += delta.abs() / 15.0;
        } else {
            let depth = s.depth + 1;
            let half = 0.5 * s.tol;
            stack.push(Segment {
                a: m,
                b: s.b,
                fa: s.fm,
                fm: frm,
                fb: s.fb,
                whole: right,
                tol: half,
                depth,
            });
            stack.push(Segment {
                a: s.a,
                b: m,
                fa: s.fa,
                fm: flm,
                fb: s.fm,
                whole: left,
                tol: half,
                depth,
            });
        }
    }
    Ok((total, err))
}

/// Named drift functions `h` for the command line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DriftShape {
    /// `h(x) = c`
    Constant,
    /// `h(x) = c x`
    Linear,
    /// `h(x) = c sqrt(x)`
    Sqrt,
    /// `h(x) = c x^alpha`
    Power(f64),
}

impl DriftShape {
    pub fn eval(self, x: f64, c: f64) -> f64 {
        match self {
            DriftShape::Constant => c,
            DriftShape::Linear => c * x,
            DriftShape::Sqrt => c * x.sqrt(),
            DriftShape::Power(alpha) => c * x.powf(alpha),
        }
    }
}

impl FromStr for DriftShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "constant" => Ok(DriftShape::Constant),
            "linear" => Ok(DriftShape::Linear),
            "sqrt" => Ok(DriftShape::Sqrt),
            other => match other.strip_prefix("power:") {
                Some(a) => {
                    let alpha: f64 = a.trim().parse().map_err(|_| {
                        Error::Parse(format!("power exponent must be a number, got {a:?}"))
                    })?;
                    if alpha.is_finite() && alpha >= 0.0 {
                        Ok(DriftShape::Power(alpha))
                    } else {
                        Err(Error::Parse(format!(
                            "power exponent must be finite and non-negative (h increasing), got {alpha}"
                        )))
                    }
                }
                None => Err(Error::Parse(format!(
                    "unknown drift function {other:?}; expected constant, linear, sqrt or power:<alpha>"
                ))),
            },
        }
    }
}

impl fmt::Display for DriftShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DriftShape::Constant => f.write_str("constant"),
            DriftShape::Linear => f.write_str("linear"),
            DriftShape::Sqrt => f.write_str("sqrt"),
            DriftShape::Power(a) => write!(f, "power:{a}"),
        }
    }
}

/// One bin of an empirical drift estimate over `[lo, hi)`; the last bin is
/// closed on the right.
#[derive(Clone, Debug, PartialEq)]
pub struct DriftBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// `None` below the minimum sample count.
    pub mean: Option<f64>,
    pub std_error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DriftEstimate {
    pub bins: Vec<DriftBin>,
    pub min_count: usize,
}

impl DriftEstimate {
    /// Bins that carry an estimate.
    pub fn estimated(&self) -> impl Iterator<Item = &DriftBin> {
        self.bins.iter().filter(|b| b.mean.is_some())
    }
}

fn check_edges(edges: &[f64]) -> Result<()> {
    if edges.len() < 2 {
        return domain("need at least two bin edges");
    }
    if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[0] >= w[1]) {
        return domain("bin edges must be finite and strictly increasing");
    }
    Ok(())
}

fn bin_of(edges: &[f64], x: f64) -> Option<usize> {
    let last = edges.len() - 1;
    if !(x >= edges[0] && x <= edges[last]) {
        return None;
    }
    let k = edges.partition_point(|&e| e <= x);
    Some(k.saturating_sub(1).min(last - 1))
}

fn summarize_bins(edges: &[f64], samples: Vec<Vec<f64>>, min_count: usize) -> DriftEstimate {
    let bins = samples
        .into_iter()
        .enumerate()
        .map(|(k, v)| {
            let count = v.len();
            let s = (count >= min_count.max(1))
                .then(|| Summary::of(&v))
                .flatten();
            DriftBin {
                lo: edges[k],
                hi: edges[k + 1],
                count,
                mean: s.as_ref().map(|s| s.mean),
                std_error: s.as_ref().map(Summary::std_error),
            }
        })
        .collect();
    DriftEstimate { bins, min_count }
}

/// Bins the one-step decreases `X_t - X_{t+1}` of each trace by `X_t`.
///
/// Consecutive entries of a trace count as one step whatever their time
/// stamps. Every `X_t` that has a successor must lie inside the edges.
pub fn empirical_drift(
    traces: &[Vec<(u64, f64)>],
    bin_edges: &[f64],
    min_count: usize,
) -> Result<DriftEstimate> {
    if traces.is_empty() {
        return Err(Error::InsufficientData("need at least one trace".into()));
    }
    check_edges(bin_edges)?;
    let mut samples = vec![Vec::new(); bin_edges.len() - 1];
    for trace in traces {
        for w in trace.windows(2) {
            let (x, next) = (w[0].1, w[1].1);
            let k = bin_of(bin_edges, x).ok_or_else(|| {
                Error::Domain(format!(
                    "value {x} at t = {} lies outside the bin edges",
                    w[0].0
                ))
            })?;
            samples[k].push(x - next);
        }
    }
    Ok(summarize_bins(bin_edges, samples, min_count))
}

/// Bins the per-position frequency gains `p_i(t+1) - p_i(t)` of probed
/// trajectories by `p_i(t)`.
pub fn frequency_gain(
    trajectories: &[Vec<Probe>],
    bin_edges: &[f64],
    min_count: usize,
) -> Result<DriftEstimate> {
    if trajectories.is_empty() {
        return Err(Error::InsufficientData(
            "need at least one trajectory".into(),
        ));
    }
    check_edges(bin_edges)?;
    let mut samples = vec![Vec::new(); bin_edges.len() - 1];
    for tr in trajectories {
        for w in tr.windows(2) {
            if w[0].p.len() != w[1].p.len() {
                return domain("probes of one trajectory differ in length");
            }
            for (&p, &q) in w[0].p.iter().zip(&w[1].p) {
                let k = bin_of(bin_edges, p)
                    .ok_or_else(|| Error::Domain(format!("frequency {p} outside the bin edges")))?;
                samples[k].push(q - p);
            }
        }
    }
    Ok(summarize_bins(bin_edges, samples, min_count))
}

/// Fit of binned frequency gains to `(I / sqrt(n)) sqrt(p (1 - p))`.
#[derive(Clone, Debug, PartialEq)]
pub struct IntensityFit {
    /// Least-squares `I` through the origin.
    pub intensity: f64,
    /// Pearson correlation between bin means and `sqrt(p (1 - p))`.
    pub correlation: f64,
    pub bins_used: usize,
}

/// Regresses estimated bin means on `sqrt(p(1-p))` at the bin centres.
pub fn fit_selection_intensity(gain: &DriftEstimate, n: usize) -> Result<IntensityFit> {
    let pairs: Vec<(f64, f64)> = gain
        .estimated()
        .map(|b| {
            let c = 0.5 * (b.lo + b.hi);
            ((c * (1.0 - c)).max(0.0).sqrt(), b.mean.expect("estimated"))
        })
        .collect();
    if pairs.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "intensity fit needs at least 3 estimated bins, got {}",
            pairs.len()
        )));
    }
    let correlation = pearson(&pairs)
        .ok_or_else(|| Error::InsufficientData("bin means have zero variance".into()))?;
    let sxx: f64 = pairs.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pairs.iter().map(|p| p.0 * p.1).sum();
    Ok(IntensityFit {
        intensity: sxy / sxx * (n as f64).sqrt(),
        correlation,
        bins_used: pairs.len(),
    })
}

/// Outcome of a Monte Carlo check of a drift bound on a synthetic chain.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainCheck {
    pub name: &'static str,
    pub kind: BoundKind,
    pub bound: f64,
    pub runs: usize,
    pub mean: f64,
    pub std_error: f64,
    /// One-sided confidence level of the test.
    pub confidence: f64,
    pub pass: bool,
}

impl ChainCheck {
    fn judge(
        name: &'static str,
        kind: BoundKind,
        bound: f64,
        times: &[f64],
        confidence: f64,
    ) -> Result<Self> {
        let s = Summary::of(times)
            .ok_or_else(|| Error::InsufficientData("no Monte Carlo runs".into()))?;
        // One-sided quantile: the two-sided level 2c - 1 has upper tail 1 - c.
        let z = z_value(2.0 * confidence - 1.0)?;
        let se = s.std_error();
        let pass = match kind {
            BoundKind::Upper => s.mean - z * se <= bound,
            BoundKind::Lower => s.mean + z * se >= bound,
        };
        Ok(ChainCheck {
            name,
            kind,
            bound,
            runs: times.len(),
            mean: s.mean,
            std_error: se,
            confidence,
            pass,
        })
    }
}

impl fmt::Display for ChainCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rel = match self.kind {
            BoundKind::Upper => "<=",
            BoundKind::Lower => ">=",
        };
        write!(
            f,
            "{}: mean hitting time {:.4} (se {:.4}, {} runs) {rel} bound {:.4} at {}% one-sided: {}",
            self.name,
            self.mean,
            self.std_error,
            self.runs,
            self.bound,
            self.confidence * 100.0,
            if self.pass { "PASS" } else { "FAIL" }
        )
    }
}

fn hitting_times(
    seed: u64,
    chain: u64,
    runs: usize,
    step: impl Fn(&mut RngStream) -> u64 + Sync,
) -> Vec<f64> {
    (0..runs as u64)
        .into_par_iter()
        .map(|r| step(&mut RngStream::derive(seed, &[chain, r])) as f64)
        .collect()
}

/// Walk on `{0..=20}` from 10: down w.p. 3/4, up w.p. 1/4, truncated at 20.
/// Drift is at least 1/2 everywhere, so the mean time to 0 is at most 20.
pub fn biased_walk_check(seed: u64, runs: usize, confidence: f64) -> Result<ChainCheck> {
    let bound = additive_bound(10.0, 0.5, BoundKind::Upper)?;
    let times = hitting_times(seed, 0, runs, |rng| {
        let (mut x, mut t) = (10u32, 0u64);
        while x > 0 {
            t += 1;
            if rng.unit() < 0.75 {
                x -= 1;
            } else {
                x = (x + 1).min(20);
            }
        }
        t
    });
    ChainCheck::judge(
        "biased walk (additive)",
        BoundKind::Upper,
        bound,
        &times,
        confidence,
    )
}

/// `X_{t+1} ~ Bin(X_t, 0.9)` from 64 until 0; drift is exactly `0.1 X_t`.
pub fn binomial_thinning_check(seed: u64, runs: usize, confidence: f64) -> Result<ChainCheck> {
    let bound = multiplicative_bound(64.0, 0.1)?;
    let times = hitting_times(seed, 1, runs, |rng| {
        let (mut x, mut t) = (64u64, 0u64);
        while x > 0 {
            t += 1;
            x = Binomial::new(x, 0.9).expect("valid binomial").sample(rng);
        }
        t
    });
    ChainCheck::judge(
        "binomial thinning (multiplicative)",
        BoundKind::Upper,
        bound,
        &times,
        confidence,
    )
}

/// From `x >= 1`, w.p. 1/2 move to `x - sqrt(x)` (to 0 if that is below 1),
/// else stay. Drift is at least `sqrt(x) / 2`, an increasing function.
pub fn sqrt_jump_check(seed: u64, runs: usize, confidence: f64) -> Result<ChainCheck> {
    let bound = variable_bound(100.0, |x| 0.5 * x.sqrt(), 1e-9)?.value;
    let times = hitting_times(seed, 2, runs, |rng| {
        let (mut x, mut t) = (100.0f64, 0u64);
        while x > 0.0 {
            t += 1;
            if rng.unit() < 0.5 {
                let y = x - x.sqrt();
                x = if y < 1.0 { 0.0 } else { y };
            }
        }
        t
    });
    ChainCheck::judge(
        "sqrt jump (variable)",
        BoundKind::Upper,
        bound,
        &times,
        confidence,
    )
}

/// The three synthetic-chain checks with `runs` replicates each.
pub fn validate_chains(seed: u64, runs: usize, confidence: f64) -> Result<Vec<ChainCheck>> {
    Ok(vec![
        biased_walk_check(seed, runs, confidence)?,
        binomial_thinning_check(seed, runs, confidence)?,
        sqrt_jump_check(seed, runs, confidence)?,
    ])
}

/// Differences between `variable_bound` and the closed-form additive and
/// multiplicative bounds it reduces to, for constant and linear `h`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Reductions {
    pub additive_gap: f64,
    pub multiplicative_gap: f64,
}

pub fn reduction_gaps(x0: f64, delta: f64, tol: f64) -> Result<Reductions> {
    let constant = variable_bound(x0, |_| delta, tol)?.value;
    let linear = variable_bound(x0, |x| delta * x, tol)?.value;
    Ok(Reductions {
        additive_gap: (constant - additive_bound(x0, delta, BoundKind::Upper)?).abs(),
        multiplicative_gap: (linear - multiplicative_bound(x0, delta)?).abs(),
    })
}
