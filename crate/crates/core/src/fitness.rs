//! Pseudo-Boolean benchmark functions, their target/permutation
//! generalizations, and noisy evaluation.
//!
//! Textual specs, as accepted by the CLI and written to CSV, look like
//! `onemax`, `leadingones;target=random;perm=random` or
//! `onemax;noise=gauss:2`. Modifiers are separated by `;`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;

use crate::error::{config, domain, Error, Result};
use crate::model::{BitString, Fitness};
use crate::stats::RngStream;

/// Number of ones.
pub fn onemax(x: &BitString) -> u64 {
    x.count_ones() as u64
}

/// Length of the longest all-ones prefix.
pub fn leadingones(x: &BitString) -> u64 {
    const ONES: u64 = u64::from_le_bytes([1; 8]);
    let bits = x.as_slice();
    let mut chunks = bits.chunks_exact(8);
    let mut full = 0;
    for c in &mut chunks {
        let w = u64::from_le_bytes(c.try_into().expect("8 bytes"));
        if w != ONES {
            // Bytes are 0 or 1, so the first zero byte is the lowest set bit of w ^ ONES.
            return (full + ((w ^ ONES).trailing_zeros() / 8) as usize) as u64;
        }
        full += 8;
    }
    (full + chunks.remainder().iter().take_while(|&&b| b == 1).count()) as u64
}

/// `sum_i 2^(n-i) x_i` (1-based `i`) in 64-bit arithmetic; rejects `n > 63`.
pub fn binval_u64(x: &BitString) -> Result<u64> {
    if x.len() > 63 {
        return config(format!(
            "BinVal on n = {} exceeds the 63-bit exact path",
            x.len()
        ));
    }
    Ok(x.as_slice()
        .iter()
        .fold(0u64, |acc, &b| (acc << 1) | u64::from(b)))
}

/// BinVal with arbitrary precision.
pub fn binval_wide(x: &BitString) -> BigUint {
    // Packs eight 0/1 bytes per multiply: byte j of the product's top byte
    // collects input byte j.
    const GATHER: u64 = 0x0102_0408_1020_4080;
    let bytes = x.as_slice();
    let head = bytes.len() % 8;
    let body = &bytes[head..];
    let m = body.len() / 8;
    let mut digits = vec![0u32; bytes.len().div_ceil(32)];
    for (c, chunk) in body.chunks_exact(8).enumerate() {
        let w = u64::from_be_bytes(chunk.try_into().expect("eight bytes"));
        let byte = (w.wrapping_mul(GATHER) >> 56) as u32;
        let k = m - 1 - c;
        digits[k / 4] |= byte << (8 * (k % 4));
    }
    if head > 0 {
        let top = bytes[..head]
            .iter()
            .fold(0u32, |acc, &b| (acc << 1) | u32::from(b));
        digits[(8 * m) / 32] |= top << ((8 * m) % 32);
    }
    BigUint::new(digits)
}

/// Indicator of `x == target`.
pub fn needle(x: &BitString, target: &BitString) -> u64 {
    u64::from(x == target)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Benchmark {
    OneMax,
    LeadingOnes,
    BinVal,
    /// Indicator of a single target point (all-ones unless configured).
    Needle,
    /// Flat function; carries no fitness signal and has no designated optimum.
    Constant,
}

impl Benchmark {
    pub fn name(self) -> &'static str {
        match self {
            Benchmark::OneMax => "onemax",
            Benchmark::LeadingOnes => "leadingones",
            Benchmark::BinVal => "binval",
            Benchmark::Needle => "needle",
            Benchmark::Constant => "constant",
        }
    }
}

impl FromStr for Benchmark {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "onemax" => Ok(Benchmark::OneMax),
            "leadingones" => Ok(Benchmark::LeadingOnes),
            "binval" => Ok(Benchmark::BinVal),
            "needle" => Ok(Benchmark::Needle),
            "constant" => Ok(Benchmark::Constant),
            other => Err(Error::Parse(format!(
                "unknown fitness function '{other}' (expected onemax, leadingones, binval, needle or constant)"
            ))),
        }
    }
}

/// A noise-free fitness function on `{0,1}^n`.
///
/// With a target `a` and permutation `pi`, the function is evaluated on the
/// agreement vector `y_i = [x_{pi(i)} = a_{pi(i)}]`; its unique optimum is `a`.
#[derive(Clone, Debug, PartialEq)]
pub struct FitnessFunction {
    benchmark: Benchmark,
    n: usize,
    target: Option<BitString>,
    perm: Option<Vec<usize>>,
}

impl FitnessFunction {
    pub fn new(benchmark: Benchmark, n: usize) -> Result<Self> {
        if n == 0 {
            return domain("problem size must be at least 1");
        }
        Ok(FitnessFunction {
            benchmark,
            n,
            target: None,
            perm: None,
        })
    }

    pub fn onemax(n: usize) -> Self {
        Self::new(Benchmark::OneMax, n).expect("n >= 1")
    }

    pub fn leadingones(n: usize) -> Self {
        Self::new(Benchmark::LeadingOnes, n).expect("n >= 1")
    }

    pub fn binval(n: usize) -> Self {
        Self::new(Benchmark::BinVal, n).expect("n >= 1")
    }

    pub fn constant(n: usize) -> Self {
        Self::new(Benchmark::Constant, n).expect("n >= 1")
    }

    /// Needle at `target`.
    pub fn needle(target: BitString) -> Self {
        FitnessFunction {
            benchmark: Benchmark::Needle,
            n: target.len(),
            target: Some(target),
            perm: None,
        }
    }

    /// Generalized OneMax / BinVal / LeadingOnes with target `a` and
    /// permutation `perm` (0-based). Only LeadingOnes accepts a non-identity
    /// permutation.
    pub fn generalize(
        benchmark: Benchmark,
        target: BitString,
        perm: Option<Vec<usize>>,
    ) -> Result<Self> {
        let n = target.len();
        match benchmark {
            Benchmark::OneMax | Benchmark::BinVal | Benchmark::LeadingOnes => {}
            other => return config(format!("{} has no generalized form", other.name())),
        }
        let perm = match perm {
            None => None,
            Some(p) => {
                if p.len() != n {
                    return domain(format!("permutation has length {}, expected {n}", p.len()));
                }
                let mut seen = vec![false; n];
                for &v in &p {
                    if v >= n || std::mem::replace(&mut seen[v], true) {
                        return domain("permutation is not a bijection on 0..n");
                    }
                }
                let identity = p.iter().enumerate().all(|(i, &v)| i == v);
                if !identity && benchmark != Benchmark::LeadingOnes {
                    return config(format!(
                        "{} is generalized by target only; a non-identity permutation is not allowed",
                        benchmark.name()
                    ));
                }
                (!identity).then_some(p)
            }
        };
        Ok(FitnessFunction {
            benchmark,
            n,
            target: Some(target),
            perm,
        })
    }

    pub fn benchmark(&self) -> Benchmark {
        self.benchmark
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn target(&self) -> Option<&BitString> {
        self.target.as_ref()
    }

    pub fn permutation(&self) -> Option<&[usize]> {
        self.perm.as_deref()
    }

    #[inline]
    fn agrees(&self, x: &BitString, i: usize) -> bool {
        match &self.target {
            Some(a) => x.get(i) == a.get(i),
            None => x.get(i) == 1,
        }
    }

    pub fn evaluate(&self, x: &BitString) -> Fitness {
        debug_assert_eq!(x.len(), self.n);
        match self.benchmark {
            Benchmark::OneMax => match &self.target {
                None => Fitness::Exact(onemax(x)),
                Some(a) => Fitness::Exact(
                    x.as_slice()
                        .iter()
                        .zip(a.as_slice())
                        .filter(|(u, v)| u == v)
                        .count() as u64,
                ),
            },
            Benchmark::LeadingOnes => {
                let lo = match (&self.perm, &self.target) {
                    (None, None) => leadingones(x),
                    (None, Some(_)) => {
                        (0..self.n).take_while(|&i| self.agrees(x, i)).count() as u64
                    }
                    (Some(p), _) => p.iter().take_while(|&&i| self.agrees(x, i)).count() as u64,
                };
                Fitness::Exact(lo)
            }
            Benchmark::BinVal => {
                if self.n <= 63 {
                    let v =
                        (0..self.n).fold(0u64, |acc, i| (acc << 1) | u64::from(self.agrees(x, i)));
                    Fitness::Exact(v)
                } else {
                    match &self.target {
                        None => Fitness::Wide(binval_wide(x)),
                        Some(_) => {
                            let y: Vec<u8> =
                                (0..self.n).map(|i| u8::from(self.agrees(x, i))).collect();
                            Fitness::Wide(binval_wide(&BitString::new(y).expect("non-empty")))
                        }
                    }
                }
            }
            Benchmark::Needle => {
                let hit = match &self.target {
                    Some(t) => x == t,
                    None => x.as_slice().iter().all(|&b| b == 1),
                };
                Fitness::Exact(u64::from(hit))
            }
            Benchmark::Constant => Fitness::Exact(0),
        }
    }

    /// Whether `x` is the optimum. The constant function has none.
    pub fn is_optimum(&self, x: &BitString) -> bool {
        match self.benchmark {
            Benchmark::Constant => false,
            _ => match &self.target {
                Some(a) => x == a,
                None => x.as_slice().iter().all(|&b| b == 1),
            },
        }
    }

    /// The unique optimum, if any.
    pub fn optimum(&self) -> Option<BitString> {
        match self.benchmark {
            Benchmark::Constant => None,
            _ => Some(
                self.target
                    .clone()
                    .unwrap_or_else(|| BitString::ones(self.n)),
            ),
        }
    }
}

/// Noise model applied on top of a noise-free function.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum NoiseKind {
    #[default]
    None,
    /// Posterior noise: `f(x) + N(0, sigma^2)`.
    Gaussian { sigma: f64 },
    /// Prior noise: with probability `q`, one uniformly random bit of a copy
    /// of `x` is flipped before evaluation.
    PriorBitflip { q: f64 },
}

impl NoiseKind {
    pub fn validate(self) -> Result<Self> {
        match self {
            NoiseKind::Gaussian { sigma } if !(sigma >= 0.0 && sigma.is_finite()) => {
                domain(format!("noise sigma must be finite and >= 0, got {sigma}"))
            }
            NoiseKind::PriorBitflip { q } if !(0.0..=1.0).contains(&q) => {
                domain(format!("bit-flip probability must lie in [0, 1], got {q}"))
            }
            ok => Ok(ok),
        }
    }

    pub fn is_none(self) -> bool {
        matches!(
            self,
            NoiseKind::None
                | NoiseKind::Gaussian { sigma: 0.0 }
                | NoiseKind::PriorBitflip { q: 0.0 }
        )
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseKind::None => f.write_str("none"),
            NoiseKind::Gaussian { sigma } => write!(f, "gauss:{sigma}"),
            NoiseKind::PriorBitflip { q } => write!(f, "prior:{q}"),
        }
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parse_num = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad noise parameter '{v}'")))
        };
        let kind = match s.split_once(':') {
            None if s == "none" => NoiseKind::None,
            None if s == "prior" => NoiseKind::PriorBitflip { q: 1.0 },
            Some(("gauss", v)) => NoiseKind::Gaussian {
                sigma: parse_num(v)?,
            },
            Some(("prior", v)) => NoiseKind::PriorBitflip { q: parse_num(v)? },
            _ => {
                return Err(Error::Parse(format!(
                    "bad noise spec '{s}' (expected gauss:<sigma>, prior or prior:<q>)"
                )))
            }
        };
        kind.validate()
    }
}

/// A fitness oracle as seen by an optimizer: evaluations may be noisy and
/// are counted; optimality is judged on the noise-free function.
pub trait Objective {
    fn n(&self) -> usize;
    fn evaluate(&mut self, x: &BitString) -> Fitness;
    fn is_optimum(&self, x: &BitString) -> bool;
    /// Number of `evaluate` calls so far.
    fn evaluations(&self) -> u64;
}

/// Counting evaluator, optionally with noise. Single-owner per run.
#[derive(Clone, Debug)]
pub struct Evaluator<'a> {
    inner: &'a FitnessFunction,
    noise: NoiseKind,
    rng: Option<RngStream>,
    evaluations: u64,
    scratch: BitString,
}

impl<'a> Evaluator<'a> {
    pub fn noise_free(inner: &'a FitnessFunction) -> Self {
        Self::with_noise(inner, NoiseKind::None, None)
    }

    fn with_noise(inner: &'a FitnessFunction, noise: NoiseKind, rng: Option<RngStream>) -> Self {
        Evaluator {
            inner,
            noise,
            rng,
            evaluations: 0,
            scratch: BitString::zeros(inner.n()),
        }
    }
}

/// Wraps `f` with noise drawn from `rng`, fresh and independent per evaluation.
///
/// Draw order per call: Gaussian noise takes one normal variate (none when
/// `sigma = 0`); prior noise takes one unit draw for the flip decision and,
/// when flipping, one `below(n)` for the position (none when `q = 0`).
pub fn wrap_noise(f: &FitnessFunction, kind: NoiseKind, rng: RngStream) -> Result<Evaluator<'_>> {
    Ok(Evaluator::with_noise(f, kind.validate()?, Some(rng)))
}

impl Objective for Evaluator<'_> {
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn evaluate(&mut self, x: &BitString) -> Fitness {
        self.evaluations += 1;
        match (self.noise, self.rng.as_mut()) {
            (NoiseKind::Gaussian { sigma }, Some(rng)) if sigma > 0.0 => {
                Fitness::Real(self.inner.evaluate(x).to_f64() + sigma * rng.standard_normal())
            }
            (NoiseKind::PriorBitflip { q }, Some(rng)) if q > 0.0 => {
                if rng.unit() < q {
                    let i = rng.below(x.len() as u64) as usize;
                    self.scratch.clone_from(x);
                    self.scratch.flip(i);
                    self.inner.evaluate(&self.scratch)
                } else {
                    self.inner.evaluate(x)
                }
            }
            _ => self.inner.evaluate(x),
        }
    }

    fn is_optimum(&self, x: &BitString) -> bool {
        self.inner.is_optimum(x)
    }

    fn evaluations(&self) -> u64 {
        self.evaluations
    }
}

/// Target of a generalized benchmark (or the needle position).
#[derive(Clone, Debug, Default, PartialEq)]
pub enum TargetSpec {
    #[default]
    AllOnes,
    Fixed(BitString),
    /// Drawn uniformly per instance.
    Random,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub enum PermSpec {
    #[default]
    Identity,
    Fixed(Vec<usize>),
    /// Drawn uniformly per instance.
    Random,
}

/// Declarative description of a (possibly randomized, possibly noisy) problem.
#[derive(Clone, Debug, PartialEq)]
pub struct FitnessSpec {
    pub benchmark: Benchmark,
    pub target: TargetSpec,
    pub perm: PermSpec,
    pub noise: NoiseKind,
}

impl FitnessSpec {
    pub fn plain(benchmark: Benchmark) -> Self {
        FitnessSpec {
            benchmark,
            target: TargetSpec::AllOnes,
            perm: PermSpec::Identity,
            noise: NoiseKind::None,
        }
    }

    pub fn with_noise(mut self, noise: NoiseKind) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_target(mut self, target: TargetSpec) -> Self {
        self.target = target;
        self
    }

    pub fn with_perm(mut self, perm: PermSpec) -> Self {
        self.perm = perm;
        self
    }

    /// Static checks that do not depend on `n`.
    pub fn validate(&self) -> Result<()> {
        self.noise.validate()?;
        let permuted = !matches!(self.perm, PermSpec::Identity);
        if permuted && self.benchmark != Benchmark::LeadingOnes {
            return config(format!(
                "perm= is only meaningful for leadingones, not {}",
                self.benchmark.name()
            ));
        }
        if self.benchmark == Benchmark::Constant && self.target != TargetSpec::AllOnes {
            return config("the constant function takes no target");
        }
        Ok(())
    }

    /// Resolves random targets/permutations with `rng` (target bits first,
    /// then the permutation shuffle).
    pub fn instantiate(&self, n: usize, rng: &mut RngStream) -> Result<FitnessFunction> {
        self.validate()?;
        let target = match &self.target {
            TargetSpec::AllOnes => None,
            TargetSpec::Fixed(t) => {
                if t.len() != n {
                    return domain(format!("target has length {}, expected n = {n}", t.len()));
                }
                Some(t.clone())
            }
            TargetSpec::Random => Some(BitString::random(n, rng)),
        };
        let perm = match &self.perm {
            PermSpec::Identity => None,
            PermSpec::Fixed(p) => Some(p.clone()),
            PermSpec::Random => {
                let mut p: Vec<usize> = (0..n).collect();
                rng.shuffle(&mut p);
                Some(p)
            }
        };
        match (self.benchmark, target, perm) {
            (Benchmark::Needle, t, _) => Ok(FitnessFunction::needle(
                t.unwrap_or_else(|| BitString::ones(n)),
            )),
            (b, None, None) => FitnessFunction::new(b, n),
            (b, t, p) => FitnessFunction::generalize(b, t.unwrap_or_else(|| BitString::ones(n)), p),
        }
    }

    /// Whether instances depend on the instance stream.
    pub fn is_randomized(&self) -> bool {
        self.target == TargetSpec::Random || self.perm == PermSpec::Random
    }
}

impl fmt::Display for FitnessSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.benchmark.name())?;
        match &self.target {
            TargetSpec::AllOnes => {}
            TargetSpec::Fixed(t) => write!(f, ";target={t}")?,
            TargetSpec::Random => f.write_str(";target=random")?,
        }
        match &self.perm {
            PermSpec::Identity => {}
            PermSpec::Fixed(p) => {
                let s: Vec<String> = p.iter().map(|v| (v + 1).to_string()).collect();
                write!(f, ";perm={}", s.join("-"))?
            }
            PermSpec::Random => f.write_str(";perm=random")?,
        }
        if self.noise != NoiseKind::None {
            write!(f, ";noise={}", self.noise)?;
        }
        Ok(())
    }
}

impl FromStr for FitnessSpec {
    type Err = Error;

    /// `name[;target=<bits|random>][;perm=<identity|random|1-based list joined by '-'>][;noise=<gauss:s|prior:q>]`
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(';').map(str::trim);
        let benchmark: Benchmark = parts.next().unwrap_or_default().parse()?;
        let mut spec = FitnessSpec::plain(benchmark);
        for part in parts {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("modifier '{part}' is not key=value")))?;
            match key {
                "target" => {
                    spec.target = match value {
                        "random" => TargetSpec::Random,
                        "ones" => TargetSpec::AllOnes,
                        bits => TargetSpec::Fixed(bits.parse()?),
                    }
                }
                "perm" => {
                    spec.perm = match value {
                        "identity" => PermSpec::Identity,
                        "random" => PermSpec::Random,
                        list => PermSpec::Fixed(
                            list.split('-')
                                .map(|v| match v.parse::<usize>() {
                                    Ok(k) if k >= 1 => Ok(k - 1),
                                    _ => Err(Error::Parse(format!("bad permutation entry '{v}'"))),
                                })
                                .collect::<Result<_>>()?,
                        ),
                    }
                }
                "noise" => spec.noise = value.parse()?,
                other => return Err(Error::Parse(format!("unknown fitness modifier '{other}'"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}
