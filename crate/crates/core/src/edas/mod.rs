//! The n-Bernoulli-λ-EDA framework and its univariate instantiations.
//!
//! Each generation samples λ offspring from the frequency vector, evaluates
//! them, and hands `(p, scored offspring)` to an update scheme. Update
//! schemes are pure; the optional margin clamp is a separate pass applied to
//! their output. Randomness enters only through sampling and tie-breaking.
//!
//! Per-generation draw order on the run's stream: `λ · n` sampling draws
//! (offspring in order, bits in index order), then `λ - 1` draws for the
//! tie-breaking shuffle inside truncation selection.

use std::fmt;
use std::str::FromStr;

use crate::error::{config, Error, Result};
use crate::fitness::Objective;
use crate::model::{
    sample_into, select_best_indices, BitString, Fitness, FrequencyVector, Margin, Scored,
    ScoredPopulation,
};
use crate::stats::RngStream;

mod sig;

pub use sig::{
    default_history_cap, pack, significance_thresholds, unpack_into, SigHistories, Significance,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Umda,
    Pbil,
    MmasIb,
    Cga,
    SigCga,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Umda => "umda",
            Algorithm::Pbil => "pbil",
            Algorithm::MmasIb => "mmas_ib",
            Algorithm::Cga => "cga",
            Algorithm::SigCga => "sig_cga",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "umda" => Ok(Algorithm::Umda),
            "pbil" => Ok(Algorithm::Pbil),
            "mmas_ib" | "mmas" => Ok(Algorithm::MmasIb),
            "cga" => Ok(Algorithm::Cga),
            "sig_cga" | "sigcga" => Ok(Algorithm::SigCga),
            other => Err(Error::Parse(format!(
                "unknown algorithm '{other}' (expected umda, pbil, mmas_ib, cga or sig_cga)"
            ))),
        }
    }
}

/// Update scheme with its parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Scheme {
    Umda {
        lambda: usize,
        mu: usize,
    },
    Pbil {
        lambda: usize,
        mu: usize,
        rho: f64,
    },
    MmasIb {
        lambda: usize,
        rho: f64,
    },
    /// Samples exactly two offspring per generation.
    Cga {
        k: f64,
    },
    /// Samples exactly two offspring per generation.
    SigCga {
        epsilon: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdaConfig {
    pub n: usize,
    pub scheme: Scheme,
    /// `None` runs without borders.
    pub margin: Option<Margin>,
}

impl EdaConfig {
    /// Configuration with the customary margin `1/n`.
    pub fn new(n: usize, scheme: Scheme) -> Self {
        EdaConfig {
            n,
            scheme,
            margin: Some(Margin::one_over(n)),
        }
    }

    pub fn umda(n: usize, lambda: usize, mu: usize) -> Self {
        Self::new(n, Scheme::Umda { lambda, mu })
    }

    pub fn pbil(n: usize, lambda: usize, mu: usize, rho: f64) -> Self {
        Self::new(n, Scheme::Pbil { lambda, mu, rho })
    }

    pub fn mmas_ib(n: usize, lambda: usize, rho: f64) -> Self {
        Self::new(n, Scheme::MmasIb { lambda, rho })
    }

    pub fn cga(n: usize, k: f64) -> Self {
        Self::new(n, Scheme::Cga { k })
    }

    pub fn sig_cga(n: usize, epsilon: f64) -> Self {
        Self::new(n, Scheme::SigCga { epsilon })
    }

    pub fn borderless(mut self) -> Self {
        self.margin = None;
        self
    }

    pub fn with_margin(mut self, margin: Option<Margin>) -> Self {
        self.margin = margin;
        self
    }

    pub fn algorithm(&self) -> Algorithm {
        match self.scheme {
            Scheme::Umda { .. } => Algorithm::Umda,
            Scheme::Pbil { .. } => Algorithm::Pbil,
            Scheme::MmasIb { .. } => Algorithm::MmasIb,
            Scheme::Cga { .. } => Algorithm::Cga,
            Scheme::SigCga { .. } => Algorithm::SigCga,
        }
    }

    /// Offspring per generation.
    pub fn lambda(&self) -> usize {
        match self.scheme {
            Scheme::Umda { lambda, .. }
            | Scheme::Pbil { lambda, .. }
            | Scheme::MmasIb { lambda, .. } => lambda,
            Scheme::Cga { .. } | Scheme::SigCga { .. } => 2,
        }
    }

    /// Number of selected offspring used by the update.
    pub fn mu(&self) -> usize {
        match self.scheme {
            Scheme::Umda { mu, .. } | Scheme::Pbil { mu, .. } => mu,
            Scheme::MmasIb { .. } | Scheme::SigCga { .. } => 1,
            Scheme::Cga { .. } => 2,
        }
    }

    pub fn rho(&self) -> Option<f64> {
        match self.scheme {
            Scheme::Pbil { rho, .. } | Scheme::MmasIb { rho, .. } => Some(rho),
            _ => None,
        }
    }

    pub fn k(&self) -> Option<f64> {
        match self.scheme {
            Scheme::Cga { k } => Some(k),
            _ => None,
        }
    }

    pub fn epsilon(&self) -> Option<f64> {
        match self.scheme {
            Scheme::SigCga { epsilon } => Some(epsilon),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return config("n must be at least 1");
        }
        let check_rho = |rho: f64| {
            if rho > 0.0 && rho <= 1.0 {
                Ok(())
            } else {
                config(format!("rho must lie in (0, 1], got {rho}"))
            }
        };
        match self.scheme {
            Scheme::Umda { lambda, mu } | Scheme::Pbil { lambda, mu, .. } => {
                if lambda == 0 {
                    return config("lambda must be at least 1");
                }
                if mu == 0 || mu > lambda {
                    return config(format!(
                        "mu must satisfy 1 <= mu <= lambda (mu = {mu}, lambda = {lambda})"
                    ));
                }
                if let Scheme::Pbil { rho, .. } = self.scheme {
                    check_rho(rho)?;
                }
            }
            Scheme::MmasIb { lambda, rho } => {
                if lambda == 0 {
                    return config("lambda must be at least 1");
                }
                check_rho(rho)?;
            }
            Scheme::Cga { k } => {
                if !(k >= 1.0 && k.is_finite()) {
                    return config(format!("K must be a finite real >= 1, got {k}"));
                }
            }
            Scheme::SigCga { epsilon } => {
                if !(epsilon > 0.0 && epsilon.is_finite()) {
                    return config(format!("epsilon must be a finite real > 0, got {epsilon}"));
                }
                if self.n < 2 {
                    return config("sig-cGA needs n >= 2");
                }
                if let Some(m) = self.margin {
                    if m.value() > 1.0 / self.n as f64 {
                        return config("sig-cGA frequencies use 1/n and 1 - 1/n; the margin may not exceed 1/n");
                    }
                }
            }
        }
        Ok(())
    }
}

fn one_counts(n: usize, best: &[&BitString]) -> Vec<u32> {
    let mut counts = vec![0u32; n];
    for x in best {
        for (c, &b) in counts.iter_mut().zip(x.as_slice()) {
            *c += u32::from(b);
        }
    }
    counts
}

/// UMDA: each frequency becomes the share of ones among the `mu` best.
/// Returns pre-clamp values.
pub fn umda_update(p: &FrequencyVector, best: &[&BitString]) -> Vec<f64> {
    let mu = best.len() as f64;
    one_counts(p.len(), best)
        .into_iter()
        .map(|c| f64::from(c) / mu)
        .collect()
}

/// PBIL: `(1 - rho) p_i + rho * (ones among the mu best) / mu`.
pub fn pbil_update(p: &FrequencyVector, best: &[&BitString], rho: f64) -> Vec<f64> {
    let mu = best.len() as f64;
    one_counts(p.len(), best)
        .into_iter()
        .zip(p.as_slice())
        .map(|(c, &pi)| (1.0 - rho) * pi + rho * (f64::from(c) / mu))
        .collect()
}

/// MMAS_ib: `(1 - rho) p_i + rho * winner_i`.
pub fn mmas_update(p: &FrequencyVector, winner: &BitString, rho: f64) -> Vec<f64> {
    p.as_slice()
        .iter()
        .zip(winner.as_slice())
        .map(|(&pi, &b)| (1.0 - rho) * pi + rho * f64::from(b))
        .collect()
}

/// cGA: `p_i + (better_i - worse_i) / K`, clamped into `[0, 1]`.
pub fn cga_update(p: &FrequencyVector, better: &BitString, worse: &BitString, k: f64) -> Vec<f64> {
    p.as_slice()
        .iter()
        .zip(better.as_slice().iter().zip(worse.as_slice()))
        .map(|(&pi, (&a, &b))| {
            if a == b {
                pi
            } else {
                (pi + (f64::from(a) - f64::from(b)) / k).clamp(0.0, 1.0)
            }
        })
        .collect()
}

/// Applies the margin clamp (if any) to raw update output.
pub fn apply_margin(raw: Vec<f64>, margin: Option<Margin>) -> FrequencyVector {
    FrequencyVector::from_update(raw, margin)
}

/// Full mutable state of one algorithm instance.
#[derive(Clone, Debug, PartialEq)]
pub struct EdaState {
    pub p: FrequencyVector,
    pub generation: u64,
    /// Present for sig-cGA only.
    pub histories: Option<SigHistories>,
}

impl EdaState {
    /// Generation 0: every frequency at 1/2.
    pub fn initial(cfg: &EdaConfig) -> Self {
        let histories = match cfg.scheme {
            Scheme::SigCga { epsilon } => Some(SigHistories::new(cfg.n, epsilon)),
            _ => None,
        };
        EdaState {
            p: FrequencyVector::uniform(cfg.n, cfg.margin),
            generation: 0,
            histories,
        }
    }
}

/// Result of sampling (part of) a generation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SampleOutcome {
    pub sampled: usize,
    /// Index within the generation of the first optimal offspring.
    pub hit: Option<usize>,
}

/// An algorithm instance: configuration, state and the offspring buffer.
#[derive(Clone, Debug)]
pub struct Eda {
    cfg: EdaConfig,
    state: EdaState,
    pop: ScoredPopulation,
    filled: usize,
    /// sig-cGA only: offspring as packed words.
    packed: Vec<Vec<u64>>,
    changed: bool,
}

impl Eda {
    pub fn new(cfg: EdaConfig) -> Result<Self> {
        cfg.validate()?;
        let state = EdaState::initial(&cfg);
        Ok(Self::assemble(cfg, state))
    }

    pub fn from_state(cfg: EdaConfig, state: EdaState) -> Result<Self> {
        cfg.validate()?;
        if state.p.len() != cfg.n {
            return config("state and configuration disagree on n");
        }
        if matches!(cfg.scheme, Scheme::SigCga { .. }) != state.histories.is_some() {
            return config("sig-cGA state must carry histories (and only sig-cGA state may)");
        }
        Ok(Self::assemble(cfg, state))
    }

    fn assemble(cfg: EdaConfig, state: EdaState) -> Self {
        let members = (0..cfg.lambda())
            .map(|_| Scored {
                x: BitString::zeros(cfg.n),
                fitness: Fitness::Exact(0),
            })
            .collect();
        let packed = if state.histories.is_some() {
            vec![Vec::new(); cfg.lambda()]
        } else {
            Vec::new()
        };
        Eda {
            cfg,
            state,
            pop: ScoredPopulation { members },
            filled: 0,
            packed,
            changed: false,
        }
    }

    pub fn config(&self) -> &EdaConfig {
        &self.cfg
    }

    pub fn state(&self) -> &EdaState {
        &self.state
    }

    pub fn into_state(self) -> EdaState {
        self.state
    }

    pub fn frequencies(&self) -> &FrequencyVector {
        &self.state.p
    }

    pub fn generation(&self) -> u64 {
        self.state.generation
    }

    /// Whether the last update changed any frequency.
    pub fn last_update_changed(&self) -> bool {
        self.changed
    }

    /// Offspring sampled so far in the current generation.
    pub fn offspring(&self) -> &[Scored] {
        &self.pop.members[..self.filled]
    }

    /// Samples and evaluates offspring of the current generation, at most
    /// `limit` of them (and never more than λ in total). With
    /// `stop_at_optimum`, sampling stops right after the first offspring that
    /// is optimal for `f`.
    ///
    /// sig-cGA samples through [`SigHistories::sample_packed`], whose draw
    /// pattern differs from the bitwise sampler used by the other schemes.
    pub fn sample_offspring<O: Objective + ?Sized>(
        &mut self,
        f: &mut O,
        rng: &mut RngStream,
        limit: usize,
        stop_at_optimum: bool,
    ) -> SampleOutcome {
        let start = self.filled;
        let end = self.pop.len().min(start.saturating_add(limit));
        for j in start..end {
            let member = &mut self.pop.members[j];
            match &self.state.histories {
                Some(h) => {
                    h.sample_packed(rng, &mut self.packed[j]);
                    unpack_into(&self.packed[j], member.x.bits_mut());
                }
                None => sample_into(&self.state.p, rng, &mut member.x),
            }
            member.fitness = f.evaluate(&member.x);
            self.filled = j + 1;
            if stop_at_optimum && f.is_optimum(&member.x) {
                return SampleOutcome {
                    sampled: j + 1 - start,
                    hit: Some(j),
                };
            }
        }
        SampleOutcome {
            sampled: end - start,
            hit: None,
        }
    }

    /// Applies the update scheme to the completed generation, then the
    /// margin clamp, and advances the generation counter.
    ///
    /// # Panics
    /// If fewer than λ offspring have been sampled.
    pub fn update(&mut self, rng: &mut RngStream) {
        assert_eq!(
            self.filled,
            self.pop.len(),
            "update needs a complete generation"
        );
        let order =
            select_best_indices(&self.pop, self.cfg.mu(), rng).expect("validated mu <= lambda");
        if let Some(histories) = self.state.histories.as_mut() {
            // Frequencies stay in {1/n, 1/2, 1 - 1/n}, inside any admissible margin.
            self.changed =
                histories.record_packed(self.state.p.values_mut(), &self.packed[order[0]]) > 0;
            self.state.generation += 1;
            self.filled = 0;
            return;
        }
        if let Scheme::Cga { k } = self.cfg.scheme {
            let (a, b) = (&self.pop.members[order[0]].x, &self.pop.members[order[1]].x);
            self.state.p.step_towards(a.as_slice(), b.as_slice(), k);
            self.changed = true;
            self.state.generation += 1;
            self.filled = 0;
            return;
        }
        let best: Vec<&BitString> = order.iter().map(|&i| &self.pop.members[i].x).collect();
        let p = &self.state.p;
        let raw = match self.cfg.scheme {
            Scheme::Umda { .. } => umda_update(p, &best),
            Scheme::Pbil { rho, .. } => pbil_update(p, &best, rho),
            Scheme::MmasIb { rho, .. } => mmas_update(p, best[0], rho),
            Scheme::Cga { k } => cga_update(p, best[0], best[1], k),
            Scheme::SigCga { .. } => unreachable!("sig-cGA updates through its histories"),
        };
        self.state.p = apply_margin(raw, self.cfg.margin);
        self.changed = true;
        self.state.generation += 1;
        self.filled = 0;
    }

    /// One full generation: sample λ offspring, update, clamp.
    pub fn step<O: Objective + ?Sized>(
        &mut self,
        f: &mut O,
        rng: &mut RngStream,
    ) -> &ScoredPopulation {
        self.filled = 0;
        self.sample_offspring(f, rng, usize::MAX, false);
        let sampled = self.pop.clone();
        self.update(rng);
        self.pop = sampled;
        &self.pop
    }
}

/// Functional form of one generation: returns the successor state and the
/// sampled population.
pub fn step<O: Objective + ?Sized>(
    state: &EdaState,
    cfg: &EdaConfig,
    f: &mut O,
    rng: &mut RngStream,
) -> Result<(EdaState, ScoredPopulation)> {
    let mut eda = Eda::from_state(*cfg, state.clone())?;
    let pop = eda.step(f, rng).clone();
    Ok((eda.into_state(), pop))
}

/// One sig-cGA generation on `state` (two offspring, winner recorded).
pub fn sigcga_step<O: Objective + ?Sized>(
    state: &EdaState,
    cfg: &EdaConfig,
    f: &mut O,
    rng: &mut RngStream,
) -> Result<EdaState> {
    if cfg.algorithm() != Algorithm::SigCga {
        return config("sigcga_step needs a sig-cGA configuration");
    }
    Ok(step(state, cfg, f, rng)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitness::{Evaluator, FitnessFunction};
    use proptest::prelude::*;

    fn fv(values: &[f64]) -> FrequencyVector {
        FrequencyVector::new(values.to_vec(), None).unwrap()
    }

    fn column(bits: &[u8]) -> Vec<BitString> {
        bits.iter()
            .map(|&b| BitString::new(vec![b]).unwrap())
            .collect()
    }

    fn refs(v: &[BitString]) -> Vec<&BitString> {
        v.iter().collect()
    }

    #[test]
    fn umda_examples() {
        let p = fv(&[0.3]);
        assert_eq!(umda_update(&p, &refs(&column(&[1, 0]))), vec![0.5]);
        assert_eq!(umda_update(&p, &refs(&column(&[1, 1, 0, 1, 0]))), vec![0.6]);
        let raw = umda_update(&p, &refs(&column(&[1, 1, 1, 1])));
        assert_eq!(raw, vec![1.0]);
        let clamped = apply_margin(raw, Some(Margin::new(0.1).unwrap()));
        assert_eq!(clamped.as_slice(), &[0.9]);
    }

    #[test]
    fn pbil_examples() {
        assert_eq!(
            pbil_update(&fv(&[0.5]), &refs(&column(&[1, 1])), 0.5),
            vec![0.75]
        );
        let v = pbil_update(&fv(&[0.9]), &refs(&column(&[0, 0, 0])), 0.1)[0];
        assert!((v - 0.81).abs() < 1e-15);
    }

    #[test]
    fn pbil_with_unit_rate_is_umda_bitwise() {
        let mut rng = RngStream::from_seed(8);
        for _ in 0..200 {
            let n = 1 + rng.below(20) as usize;
            let mu = 1 + rng.below(9) as usize;
            let p = FrequencyVector::new((0..n).map(|_| rng.unit()).collect(), None).unwrap();
            let xs: Vec<BitString> = (0..mu).map(|_| BitString::random(n, &mut rng)).collect();
            let a = umda_update(&p, &refs(&xs));
            let b = pbil_update(&p, &refs(&xs), 1.0);
            assert_eq!(
                a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                b.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn mmas_examples() {
        let one = BitString::new(vec![1]).unwrap();
        let zero = BitString::new(vec![0]).unwrap();
        assert!((mmas_update(&fv(&[0.5]), &one, 0.2)[0] - 0.6).abs() < 1e-15);
        assert!((mmas_update(&fv(&[0.5]), &zero, 0.2)[0] - 0.4).abs() < 1e-15);
        let w: BitString = "1001".parse().unwrap();
        assert_eq!(
            mmas_update(&fv(&[0.3, 0.4, 0.5, 0.6]), &w, 1.0),
            vec![1.0, 0.0, 0.0, 1.0]
        );
        // Equals PBIL with a single selected individual.
        let p = fv(&[0.3, 0.4, 0.5, 0.6]);
        assert_eq!(mmas_update(&p, &w, 0.37), pbil_update(&p, &[&w], 0.37));
    }

    #[test]
    fn cga_examples() {
        let one = BitString::new(vec![1]).unwrap();
        let zero = BitString::new(vec![0]).unwrap();
        assert!((cga_update(&fv(&[0.5]), &one, &zero, 10.0)[0] - 0.6).abs() < 1e-15);
        assert!((cga_update(&fv(&[0.5]), &zero, &one, 10.0)[0] - 0.4).abs() < 1e-15);
        assert_eq!(cga_update(&fv(&[0.37]), &one, &one, 10.0)[0], 0.37);
        assert_eq!(cga_update(&fv(&[0.95]), &one, &zero, 10.0)[0], 1.0);
    }

    #[test]
    fn config_validation() {
        assert!(matches!(
            EdaConfig::umda(10, 5, 6).validate(),
            Err(Error::Config(_))
        ));
        assert!(EdaConfig::pbil(10, 5, 2, 0.0).validate().is_err());
        assert!(EdaConfig::pbil(10, 5, 2, 1.0).validate().is_ok());
        assert!(EdaConfig::cga(10, 0.5).validate().is_err());
        assert!(EdaConfig::sig_cga(10, 0.0).validate().is_err());
        assert!(EdaConfig::sig_cga(10, 13.0)
            .with_margin(Some(Margin::new(0.3).unwrap()))
            .validate()
            .is_err());
        assert_eq!(EdaConfig::cga(10, 4.0).lambda(), 2);
        assert_eq!(EdaConfig::umda(10, 8, 4).margin, Some(Margin::one_over(10)));
    }

    #[test]
    fn fresh_state_is_uniform() {
        let s = EdaState::initial(&EdaConfig::umda(7, 4, 2));
        assert!(s.p.as_slice().iter().all(|&v| v == 0.5));
        assert_eq!(s.generation, 0);
        assert!(s.histories.is_none());
    }

    #[test]
    fn umda_step_respects_borders() {
        let f = FitnessFunction::onemax(30);
        let cfg = EdaConfig::umda(30, 10, 3);
        let mut eda = Eda::new(cfg).unwrap();
        let mut rng = RngStream::from_seed(1);
        let mut ev = Evaluator::noise_free(&f);
        for _ in 0..50 {
            eda.step(&mut ev, &mut rng);
            let m = 1.0 / 30.0;
            assert!(eda
                .frequencies()
                .as_slice()
                .iter()
                .all(|&v| v >= m && v <= 1.0 - m));
        }
        assert_eq!(eda.generation(), 50);
        assert_eq!(ev.evaluations(), 500);
    }

    #[test]
    fn cga_step_moves_at_most_one_over_k() {
        let f = FitnessFunction::onemax(40);
        let cfg = EdaConfig::cga(40, 12.0).borderless();
        let mut eda = Eda::new(cfg).unwrap();
        let mut rng = RngStream::from_seed(2);
        let mut ev = Evaluator::noise_free(&f);
        for _ in 0..300 {
            let before = eda.frequencies().clone();
            eda.step(&mut ev, &mut rng);
            for (a, b) in before.as_slice().iter().zip(eda.frequencies().as_slice()) {
                assert!((a - b).abs() <= 1.0 / 12.0 + 1e-12);
            }
        }
    }

    #[test]
    fn functional_step_matches_engine() {
        let f = FitnessFunction::leadingones(12);
        let cfg = EdaConfig::pbil(12, 6, 3, 0.4);
        let mut eda = Eda::new(cfg).unwrap();
        let mut state = EdaState::initial(&cfg);
        let (mut r1, mut r2) = (RngStream::from_seed(3), RngStream::from_seed(3));
        let (mut e1, mut e2) = (Evaluator::noise_free(&f), Evaluator::noise_free(&f));
        for _ in 0..20 {
            let pop_a = eda.step(&mut e1, &mut r1).clone();
            let (s, pop_b) = step(&state, &cfg, &mut e2, &mut r2).unwrap();
            state = s;
            assert_eq!(pop_a, pop_b);
            assert_eq!(&state, eda.state());
        }
    }

    /// Exhaustive expectation of one step for n = 1 and lambda = 2 under a
    /// flat fitness: enumerate both sampled bits and the tie-break outcome.
    #[test]
    fn balance_exhaustive_n1_lambda2() {
        let p0 = 0.3;
        let p = fv(&[p0]);
        type Update<'a> = Box<dyn Fn(&BitString, &BitString) -> f64 + 'a>;
        let schemes: [(&str, Update); 4] = [
            ("umda", Box::new(|a, _b| umda_update(&p, &[a])[0])),
            ("pbil", Box::new(|a, _b| pbil_update(&p, &[a], 0.3)[0])),
            ("mmas", Box::new(|a, _b| mmas_update(&p, a, 0.1)[0])),
            ("cga", Box::new(|a, b| cga_update(&p, a, b, 5.0)[0])),
        ];
        let bit = |v| BitString::new(vec![v]).unwrap();
        for (name, update) in &schemes {
            let mut expectation = 0.0;
            for x1 in 0..2u8 {
                for x2 in 0..2u8 {
                    let prob = [1.0 - p0, p0][x1 as usize] * [1.0 - p0, p0][x2 as usize];
                    // Flat fitness: each order is equally likely after tie-breaking.
                    let (a, b) = (bit(x1), bit(x2));
                    expectation += prob * 0.5 * (update(&a, &b) + update(&b, &a));
                }
            }
            assert!((expectation - p0).abs() < 1e-15, "{name}: {expectation}");
        }
    }

    #[test]
    fn sig_cga_fresh_step_keeps_half() {
        let f = FitnessFunction::onemax(20);
        let cfg = EdaConfig::sig_cga(20, 13.0);
        let state = EdaState::initial(&cfg);
        let mut ev = Evaluator::noise_free(&f);
        let next = sigcga_step(&state, &cfg, &mut ev, &mut RngStream::from_seed(1)).unwrap();
        assert!(next.p.as_slice().iter().all(|&v| v == 0.5));
        assert_eq!(next.generation, 1);
    }

    #[test]
    fn sig_cga_frequency_support() {
        let n = 16;
        let f = FitnessFunction::leadingones(n);
        let mut eda = Eda::new(EdaConfig::sig_cga(n, 1.0)).unwrap();
        let mut rng = RngStream::from_seed(4);
        let mut ev = Evaluator::noise_free(&f);
        let allowed = [1.0 / n as f64, 0.5, 1.0 - 1.0 / n as f64];
        let mut moved = false;
        for _ in 0..3000 {
            eda.step(&mut ev, &mut rng);
            for &v in eda.frequencies().as_slice() {
                assert!(allowed.contains(&v), "{v}");
                moved |= v != 0.5;
            }
        }
        assert!(moved);
    }

    proptest! {
        #[test]
        fn pbil_step_bounded_by_rho(seed in any::<u64>(), rho in 0.01f64..1.0, n in 1usize..30) {
            let mut rng = RngStream::from_seed(seed);
            let p = FrequencyVector::new((0..n).map(|_| rng.unit()).collect(), None).unwrap();
            let xs: Vec<BitString> = (0..3).map(|_| BitString::random(n, &mut rng)).collect();
            let next = pbil_update(&p, &refs(&xs), rho);
            for (a, b) in p.as_slice().iter().zip(&next) {
                prop_assert!((a - b).abs() <= rho + 1e-12);
                prop_assert!((0.0..=1.0).contains(b));
            }
        }

        #[test]
        fn cga_in_place_matches_functional(seed in any::<u64>(), n in 2usize..40, k in 1.5f64..60.0, borderless in any::<bool>()) {
            let mut rng = RngStream::from_seed(seed);
            let margin = (!borderless).then(|| Margin::one_over(n));
            let mut p = FrequencyVector::uniform(n, margin);
            for _ in 0..50 {
                let a = BitString::random(n, &mut rng);
                let b = BitString::random(n, &mut rng);
                let expected = apply_margin(cga_update(&p, &a, &b, k), margin);
                p.step_towards(a.as_slice(), b.as_slice(), k);
                prop_assert_eq!(&p, &expected);
            }
        }
    }
}
