//! Search points, frequency vectors, sampling and truncation selection.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use crate::error::{config, domain, Error, Result};
use crate::stats::RngStream;

/// A fixed-length binary search point.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BitString(Vec<u8>);

impl BitString {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.is_empty() {
            return domain("bit strings must have length n >= 1");
        }
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return domain(format!("bit {pos} is {}, not 0 or 1", bits[pos]));
        }
        Ok(BitString(bits))
    }

    pub fn zeros(n: usize) -> Self {
        BitString(vec![0; n])
    }

    pub fn ones(n: usize) -> Self {
        BitString(vec![1; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> u8 {
        self.0[i]
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().map(|&b| b as usize).sum()
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i] ^= 1;
    }

    pub(crate) fn bits_mut(&mut self) -> &mut [u8] {
        &mut self.0
    }

    /// Uniformly random string; consumes `n` draws like [`sample`] at `p = 1/2`.
    pub fn random(n: usize, rng: &mut RngStream) -> Self {
        BitString((0..n).map(|_| u8::from(rng.unit() < 0.5)).collect())
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::Parse(format!("'{other}' is not a bit"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        BitString::new(bits)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Frequency margin `m` in `(0, 1/2]`; frequencies are kept in `[m, 1 - m]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Margin(f64);

impl Margin {
    pub fn new(m: f64) -> Result<Self> {
        if m > 0.0 && m <= 0.5 {
            Ok(Margin(m))
        } else {
            domain(format!("margin must lie in (0, 1/2], got {m}"))
        }
    }

    /// The customary margin `1/n`.
    pub fn one_over(n: usize) -> Self {
        Margin(1.0 / n.max(2) as f64)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn lower(self) -> f64 {
        self.0
    }

    pub fn upper(self) -> f64 {
        1.0 - self.0
    }
}

/// Distance below which an updated frequency is moved onto a border, so that
/// rounding residue from repeated `±1/K` steps does not keep it off the border.
pub const BORDER_SNAP: f64 = 1e-12;

#[inline]
fn settle(v: f64, lo: f64, hi: f64) -> f64 {
    if v < lo + BORDER_SNAP {
        lo
    } else if v > hi - BORDER_SNAP {
        hi
    } else {
        v
    }
}

/// `max{m, min{1 - m, v}}`, with values within [`BORDER_SNAP`] of a border
/// moved onto it.
#[inline]
pub fn clamp(v: f64, m: Margin) -> f64 {
    settle(v, m.lower(), m.upper())
}

/// The univariate model: per-position probability of sampling a 1.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyVector {
    p: Vec<f64>,
    margin: Option<Margin>,
}

impl FrequencyVector {
    pub fn new(p: Vec<f64>, margin: Option<Margin>) -> Result<Self> {
        if p.is_empty() {
            return domain("frequency vectors must have length n >= 1");
        }
        let (lo, hi) = margin.map_or((0.0, 1.0), |m| (m.lower(), m.upper()));
        if let Some(i) = p.iter().position(|&v| !(lo..=hi).contains(&v)) {
            return domain(format!("frequency {i} = {} outside [{lo}, {hi}]", p[i]));
        }
        Ok(FrequencyVector { p, margin })
    }

    /// All frequencies at `1/2`.
    pub fn uniform(n: usize, margin: Option<Margin>) -> Self {
        FrequencyVector {
            p: vec![0.5; n],
            margin,
        }
    }

    /// Builds a vector from raw update output, applying the margin clamp if set.
    /// Raw values must already lie in `[0, 1]`.
    pub(crate) fn from_update(mut p: Vec<f64>, margin: Option<Margin>) -> Self {
        let (lo, hi) = margin.map_or((0.0, 1.0), |m| (m.lower(), m.upper()));
        for v in &mut p {
            *v = settle(*v, lo, hi);
        }
        debug_assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
        FrequencyVector { p, margin }
    }

    /// In place `p_i <- p_i + (a_i - b_i) / k` where the bits differ, clamped
    /// and settled exactly as [`FrequencyVector::from_update`] would.
    pub(crate) fn step_towards(&mut self, a: &[u8], b: &[u8], k: f64) {
        let (lo, hi) = self.margin.map_or((0.0, 1.0), |m| (m.lower(), m.upper()));
        for ((v, &x), &y) in self.p.iter_mut().zip(a).zip(b) {
            if x != y {
                let raw = (*v + (f64::from(x) - f64::from(y)) / k).clamp(0.0, 1.0);
                *v = settle(raw, lo, hi);
            }
        }
    }

    /// In-place access for updates that keep values inside the margin.
    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.p
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.p[i]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    pub fn margin(&self) -> Option<Margin> {
        self.margin
    }

    /// Potential `sum_i p_i`.
    pub fn potential(&self) -> f64 {
        self.p.iter().sum()
    }
}

/// Draws one search point: bit `i` is 1 iff the `i`-th unit draw is below `p_i`.
/// Consumes exactly `n` draws, in index order.
pub fn sample(p: &FrequencyVector, rng: &mut RngStream) -> BitString {
    let mut x = BitString::zeros(p.len());
    sample_into(p, rng, &mut x);
    x
}

/// [`sample`] into an existing buffer of the same length.
#[inline]
pub fn sample_into(p: &FrequencyVector, rng: &mut RngStream, out: &mut BitString) {
    debug_assert_eq!(p.len(), out.len());
    for (bit, &pi) in out.bits_mut().iter_mut().zip(&p.p) {
        *bit = u8::from(rng.unit() < pi);
    }
}

/// A fitness value. Noise-free benchmarks are integer valued; BinVal beyond
/// 63 bits uses arbitrary precision; noisy evaluations are reals.
#[derive(Clone, Debug, PartialEq)]
pub enum Fitness {
    Exact(u64),
    Wide(BigUint),
    Real(f64),
}

impl Fitness {
    pub fn to_f64(&self) -> f64 {
        match self {
            Fitness::Exact(v) => *v as f64,
            Fitness::Wide(v) => v.to_f64().unwrap_or(f64::INFINITY),
            Fitness::Real(v) => *v,
        }
    }

    /// Total order; values of the same kind compare exactly.
    pub fn total_cmp(&self, other: &Fitness) -> Ordering {
        match (self, other) {
            (Fitness::Exact(a), Fitness::Exact(b)) => a.cmp(b),
            (Fitness::Wide(a), Fitness::Wide(b)) => a.cmp(b),
            (Fitness::Real(a), Fitness::Real(b)) => a.total_cmp(b),
            (Fitness::Exact(a), Fitness::Wide(b)) => BigUint::from(*a).cmp(b),
            (Fitness::Wide(a), Fitness::Exact(b)) => a.cmp(&BigUint::from(*b)),
            (a, b) => a.to_f64().total_cmp(&b.to_f64()),
        }
    }
}

impl fmt::Display for Fitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fitness::Exact(v) => write!(f, "{v}"),
            Fitness::Wide(v) => write!(f, "{v}"),
            Fitness::Real(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scored {
    pub x: BitString,
    pub fitness: Fitness,
}

/// The multiset `D` of one generation's offspring with their fitness.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScoredPopulation {
    pub members: Vec<Scored>,
}

impl ScoredPopulation {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Indices of the `mu` best members, best first. Ties are ordered by a
/// uniformly random permutation: a Fisher-Yates shuffle of `0..lambda`
/// (`lambda - 1` draws from `rng`) followed by a stable sort on fitness.
pub fn select_best_indices(
    pop: &ScoredPopulation,
    mu: usize,
    rng: &mut RngStream,
) -> Result<Vec<usize>> {
    if mu == 0 || mu > pop.len() {
        return config(format!(
            "selection requires 1 <= mu <= lambda, got mu = {mu}, lambda = {}",
            pop.len()
        ));
    }
    let mut order: Vec<usize> = (0..pop.len()).collect();
    rng.shuffle(&mut order);
    order.sort_by(|&a, &b| pop.members[b].fitness.total_cmp(&pop.members[a].fitness));
    order.truncate(mu);
    Ok(order)
}

/// The `mu` best members by fitness, best first (`x^(1), ..., x^(mu)`).
pub fn select_best<'a>(
    pop: &'a ScoredPopulation,
    mu: usize,
    rng: &mut RngStream,
) -> Result<Vec<&'a Scored>> {
    Ok(select_best_indices(pop, mu, rng)?
        .into_iter()
        .map(|i| &pop.members[i])
        .collect())
}
