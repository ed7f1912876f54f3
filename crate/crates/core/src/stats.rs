//! Deterministic random streams and the small statistics toolkit shared by
//! the runner and the experiment harness.
//!
//! # Random streams
//!
//! Every run owns one [`RngStream`]: a xoshiro256++ generator whose 256-bit
//! state is filled from SplitMix64 seeded with a 64-bit value. Streams for
//! parallel replicates are derived from a master seed and an index tuple by
//! [`derive_seed`], which folds each index into the seed with the SplitMix64
//! finalizer ([`mix64`]):
//!
//! ```text
//! h = master
//! for i in indices: h = mix64(h ^ mix64(i + 0x9E3779B97F4A7C15))
//! ```
//!
//! Derivation is pure, so replicate `r` of grid point `g` sees the same stream
//! whatever thread executes it.
//!
//! # Order independence
//!
//! Every statistic sorts its input before summing, so any permutation of the
//! samples produces bit-identical output.

use std::cmp::Ordering;

use rand::{RngCore, SeedableRng};
use rand_distr::{Distribution, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{domain, Error, Result};

/// Identifier of the generator behind [`RngStream`], echoed into output metadata.
pub const GENERATOR_ID: &str = "xoshiro256++ (state from splitmix64)";

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output finalizer. A bijection on `u64`.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds an index tuple into a master seed.
pub fn derive_seed(master: u64, indices: &[u64]) -> u64 {
    indices.iter().fold(master, |h, &i| {
        mix64(h ^ mix64(i.wrapping_add(GOLDEN_GAMMA)))
    })
}

/// A single-owner deterministic random stream.
#[derive(Clone, Debug)]
pub struct RngStream {
    inner: Xoshiro256PlusPlus,
}

impl RngStream {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            inner: Xoshiro256PlusPlus::seed_from_u64(seed),
        }
    }

    /// Stream for the index tuple `indices` under `master`.
    pub fn derive(master: u64, indices: &[u64]) -> Self {
        Self::from_seed(derive_seed(master, indices))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw from `[0, 1)` with 53 bits of resolution; consumes one `u64`.
    #[inline]
    pub fn unit(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, bound)` (Lemire's multiply-shift with rejection).
    ///
    /// # Panics
    /// If `bound == 0`.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "below(0)");
        let mut m = u128::from(self.inner.next_u64()) * u128::from(bound);
        let mut low = m as u64;
        if low < bound {
            let threshold = bound.wrapping_neg() % bound;
            while low < threshold {
                m = u128::from(self.inner.next_u64()) * u128::from(bound);
                low = m as u64;
            }
        }
        (m >> 64) as u64
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    /// In-place Fisher-Yates shuffle; draws `below(i + 1)` for `i = len-1 .. 1`.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

fn sorted_sum(sorted: &[f64]) -> f64 {
    sorted.iter().sum()
}

/// Location and spread of a sample.
#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation (`R - 1` denominator); `None` for one sample.
    pub std_dev: Option<f64>,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let v = sorted(values);
        let count = v.len();
        let mean = sorted_sum(&v) / count as f64;
        let median = if count % 2 == 1 {
            v[count / 2]
        } else {
            0.5 * (v[count / 2 - 1] + v[count / 2])
        };
        let std_dev = (count > 1).then(|| {
            let ss: f64 = v.iter().map(|x| (x - mean).powi(2)).sum();
            (ss / (count - 1) as f64).sqrt()
        });
        Some(Summary {
            count,
            mean,
            median,
            std_dev,
            min: v[0],
            max: v[count - 1],
        })
    }

    /// Standard error of the mean; zero for a single sample.
    pub fn std_error(&self) -> f64 {
        self.std_dev.map_or(0.0, |s| s / (self.count as f64).sqrt())
    }
}

/// Two-sided standard normal quantile for confidence `level`.
pub fn z_value(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return domain(format!("confidence level must lie in (0, 1), got {level}"));
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(normal.inverse_cdf(0.5 + level / 2.0))
}

/// Normal-approximation confidence interval: `(mean, z(level) * s / sqrt(R))`.
pub fn mean_ci(samples: &[f64], level: f64) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "a confidence interval needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    let z = z_value(level)?;
    let s = Summary::of(samples).expect("non-empty");
    Ok((s.mean, z * s.std_error()))
}

/// Ordinary least squares line.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r_squared: f64,
}

/// OLS of `y` on `x`. Needs at least 3 points and two distinct `x`.
pub fn linear_fit(points: &[(f64, f64)]) -> Result<LinearFit> {
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "a regression needs at least 3 points, got {}",
            points.len()
        )));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData(
            "regression needs distinct x values".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let slope_stderr = (ssr / (k - 2.0) / sxx).sqrt();
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (1.0 - ssr / syy).clamp(0.0, 1.0)
    };
    Ok(LinearFit {
        slope,
        intercept,
        slope_stderr,
        r_squared,
    })
}

/// OLS on `(ln x, ln y)`; the slope is the fitted power-law exponent.
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<LinearFit> {
    if let Some(bad) = points.iter().find(|p| !(p.0 > 0.0 && p.1 > 0.0)) {
        return domain(format!(
            "log-log fit needs positive coordinates, got ({}, {})",
            bad.0, bad.1
        ));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|p| (p.0.ln(), p.1.ln())).collect();
    linear_fit(&logs)
}

/// Pearson correlation coefficient; `None` when either side has zero variance.
pub fn pearson(pairs: &[(f64, f64)]) -> Option<f64> {
    if pairs.len() < 2 {
        return None;
    }
    let mut pts = pairs.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

/// Result of a two-sample Kolmogorov-Smirnov test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Survival function of the Kolmogorov distribution, `P(K > x)`.
pub fn kolmogorov_q(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 1.18 {
        // Small-argument form; the alternating series converges slowly here.
        let y = (-std::f64::consts::PI.powi(2) / (8.0 * x * x)).exp();
        let s: f64 = (1..=6).map(|k| y.powi((2 * k - 1) * (2 * k - 1))).sum();
        (1.0 - (2.0 * std::f64::consts::PI).sqrt() / x * s).clamp(0.0, 1.0)
    } else {
        let mut total = 0.0;
        for k in 1..=100 {
            let term = (-2.0 * (k * k) as f64 * x * x).exp();
            total += if k % 2 == 1 { term } else { -term };
            if term < 1e-17 {
                break;
            }
        }
        (2.0 * total).clamp(0.0, 1.0)
    }
}

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value
/// `Q((sqrt(ne) + 0.12 + 0.11 / sqrt(ne)) * D)`, `ne = m n / (m + n)`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientData(
            "KS test needs two non-empty samples".into(),
        ));
    }
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = match a[i].total_cmp(&b[j]) {
            Ordering::Greater => b[j],
            _ => a[i],
        };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = na * nb / (na + nb);
    let sq = ne.sqrt();
    let p_value = kolmogorov_q((sq + 0.12 + 0.11 / sq) * d);
    Ok(KsResult {
        statistic: d,
        p_value,
    })
}

/// Distribution-free confidence interval for the median from order
/// statistics: ranks `floor(R/2 - z sqrt(R)/2)` and `ceil(1 + R/2 + z sqrt(R)/2)`
/// (1-based), clamped to the sample.
pub fn median_ci(samples: &[f64], level: f64) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "a median interval needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    let z = z_value(level)?;
    let v = sorted(samples);
    let r = v.len() as f64;
    let half = z * r.sqrt() / 2.0;
    let lo = ((r / 2.0 - half).floor() as usize).clamp(1, v.len());
    let hi = ((1.0 + r / 2.0 + half).ceil() as usize).clamp(1, v.len());
    Ok((v[lo - 1], v[hi - 1]))
}

/// Wilson score interval for a binomial proportion.
pub fn proportion_ci(successes: usize, trials: usize, level: f64) -> Result<(f64, f64)> {
    if trials == 0 || successes > trials {
        return domain(format!(
            "need 0 <= successes <= trials and trials > 0, got {successes}/{trials}"
        ));
    }
    let z = z_value(level)?;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    Ok(((centre - half).max(0.0), (centre + half).min(1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_ci_brackets_median() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        let (lo, hi) = median_ci(&v, 0.95).unwrap();
        // R = 100: ranks floor(50 - 9.8) = 40 and ceil(51 + 9.8) = 61.
        assert_eq!((lo, hi), (40.0, 61.0));
        assert_eq!(median_ci(&[3.0, 3.0, 3.0], 0.95).unwrap(), (3.0, 3.0));
        assert!(median_ci(&[1.0], 0.95).is_err());
    }

    #[test]
    fn median_ci_coverage() {
        // Uniform(0,1) samples of size 51: the true median 1/2 should be covered
        // in roughly 95% of repetitions.
        let mut rng = RngStream::from_seed(8);
        let covered = (0..2000)
            .filter(|_| {
                let v: Vec<f64> = (0..51).map(|_| rng.unit()).collect();
                let (lo, hi) = median_ci(&v, 0.95).unwrap();
                lo <= 0.5 && 0.5 <= hi
            })
            .count();
        assert!((1860..=1960).contains(&covered), "{covered}");
    }

    #[test]
    fn wilson_interval_examples() {
        // 95%, 10/20: centre 0.5, half-width 1.96/(1+3.8416/20) * sqrt(0.0125 + 0.0024)
        let (lo, hi) = proportion_ci(10, 20, 0.95).unwrap();
        let z = 1.959963984540054f64;
        let h = z / (1.0 + z * z / 20.0) * (0.25f64 / 20.0 + z * z / 1600.0).sqrt();
        assert!((lo - (0.5 - h)).abs() < 1e-12 && (hi - (0.5 + h)).abs() < 1e-12);
        let (lo, hi) = proportion_ci(100, 100, 0.95).unwrap();
        assert!(hi == 1.0 && lo > 0.95 && lo < 0.97, "{lo}");
        let (lo, _) = proportion_ci(0, 100, 0.95).unwrap();
        assert_eq!(lo, 0.0);
        assert!(proportion_ci(3, 2, 0.95).is_err());
    }

    #[test]
    fn derived_streams_replay_and_differ() {
        let mut a = RngStream::derive(99, &[3, 4]);
        let mut b = RngStream::derive(99, &[3, 4]);
        let xs: Vec<u64> = (0..1000).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..1000).map(|_| b.next_u64()).collect();
        assert_eq!(xs, ys);

        let mut c = RngStream::derive(99, &[0]);
        let mut d = RngStream::derive(99, &[1]);
        let cs: Vec<u64> = (0..1000).map(|_| c.next_u64()).collect();
        let ds: Vec<u64> = (0..1000).map(|_| d.next_u64()).collect();
        assert!(cs.iter().zip(&ds).all(|(x, y)| x != y));
    }

    #[test]
    fn derive_seed_distinguishes_tuple_shape() {
        assert_ne!(derive_seed(1, &[0]), derive_seed(1, &[0, 0]));
        assert_ne!(derive_seed(1, &[0, 1]), derive_seed(1, &[1, 0]));
        assert_eq!(derive_seed(5, &[]), 5);
    }

    #[test]
    fn below_stays_in_range_and_covers_it() {
        let mut rng = RngStream::from_seed(7);
        let mut seen = [0u32; 7];
        for _ in 0..70_000 {
            seen[rng.below(7) as usize] += 1;
        }
        // Each bucket expects 10^4; 5 sigma is about 460.
        assert!(
            seen.iter().all(|&c| (9_500..10_500).contains(&c)),
            "{seen:?}"
        );
    }

    #[test]
    fn unit_is_half_open() {
        let mut rng = RngStream::from_seed(1);
        for _ in 0..100_000 {
            let u = rng.unit();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn ci_of_constant_sample_is_degenerate() {
        assert_eq!(mean_ci(&[3.5; 10], 0.95).unwrap(), (3.5, 0.0));
    }

    #[test]
    fn ci_direct_formula() {
        let (m, h) = mean_ci(&[0.0, 2.0], 0.95).unwrap();
        assert_eq!(m, 1.0);
        // s = sqrt(2), s / sqrt(2) = 1, times z = 1.959964
        assert!((h - 1.959_963_984_540_054).abs() < 1e-9, "{h}");
    }

    #[test]
    fn ci_rejects_single_sample_and_bad_level() {
        assert!(matches!(
            mean_ci(&[1.0], 0.95),
            Err(Error::InsufficientData(_))
        ));
        assert!(matches!(mean_ci(&[1.0, 2.0], 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn ci_of_standard_normal_draws() {
        let mut rng = RngStream::from_seed(2024);
        let xs: Vec<f64> = (0..100_000).map(|_| rng.standard_normal()).collect();
        let (m, h) = mean_ci(&xs, 0.95).unwrap();
        assert!(m.abs() < 0.02, "{m}");
        assert!((h - 1.96 / 100_000f64.sqrt()).abs() < 1e-3);
    }

    #[test]
    fn loglog_recovers_exact_power_law() {
        let pts: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 8.0].iter().map(|&x| (x, x * x)).collect();
        let fit = loglog_slope(&pts).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);

        let flat: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 8.0].iter().map(|&x| (x, 5.0)).collect();
        assert!(loglog_slope(&flat).unwrap().slope.abs() < 1e-12);
    }

    #[test]
    fn loglog_of_n_log_n() {
        let xs = [100.0, 200.0, 400.0, 800.0, 1600.0];
        let pts: Vec<(f64, f64)> = xs.iter().map(|&x: &f64| (x, x * x.ln())).collect();
        // Oracle: mean of the four consecutive secant slopes in log-log space,
        // which equals the OLS slope for equally spaced ln x only approximately,
        // so compare both against the bracket.
        let secants: Vec<f64> = pts
            .windows(2)
            .map(|w| (w[1].1.ln() - w[0].1.ln()) / (w[1].0.ln() - w[0].0.ln()))
            .collect();
        let secant_mean = secants.iter().sum::<f64>() / secants.len() as f64;
        let fit = loglog_slope(&pts).unwrap();
        assert!((1.1..=1.25).contains(&fit.slope), "{}", fit.slope);
        assert!((fit.slope - secant_mean).abs() < 0.01);
    }

    #[test]
    fn loglog_rejects_nonpositive() {
        assert!(matches!(
            loglog_slope(&[(1.0, 1.0), (0.0, 2.0), (3.0, 3.0)]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            loglog_slope(&[(1.0, 1.0), (2.0, 2.0)]),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn ks_identical_and_disjoint() {
        let a: Vec<f64> = (0..50).map(f64::from).collect();
        let r = ks_two_sample(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);

        let r = ks_two_sample(&[0.0; 100], &[1000.0; 100]).unwrap();
        assert_eq!(r.statistic, 1.0);
        assert!(r.p_value < 1e-20);
    }

    #[test]
    fn ks_handles_ties_across_samples() {
        // Same multiset in different order and with heavy ties.
        let a = [1.0, 1.0, 2.0, 2.0, 3.0];
        let b = [3.0, 2.0, 1.0, 2.0, 1.0];
        assert_eq!(ks_two_sample(&a, &b).unwrap().statistic, 0.0);
        // F_a jumps to 1 at 1, F_b to 0.5: D = 0.5.
        assert_eq!(
            ks_two_sample(&[1.0, 1.0], &[1.0, 2.0]).unwrap().statistic,
            0.5
        );
    }

    #[test]
    fn ks_calibration_on_uniform_draws() {
        let mut rng = RngStream::from_seed(11);
        let mut accepted = 0;
        for _ in 0..100 {
            let a: Vec<f64> = (0..500).map(|_| rng.unit()).collect();
            let b: Vec<f64> = (0..500).map(|_| rng.unit()).collect();
            if ks_two_sample(&a, &b).unwrap().p_value > 0.01 {
                accepted += 1;
            }
        }
        assert!(accepted >= 98, "{accepted}");
    }

    #[test]
    fn kolmogorov_q_branches_agree() {
        // Both expansions are valid near the switch point.
        let x = 1.18;
        let series = {
            let mut t = 0.0;
            for k in 1..=50 {
                let term = (-2.0 * (k * k) as f64 * x * x).exp();
                t += if k % 2 == 1 { term } else { -term };
            }
            2.0 * t
        };
        assert!((kolmogorov_q(x - 1e-12) - series).abs() < 1e-9);
        // Known value: Q(1.36) is about 0.0494.
        assert!((kolmogorov_q(1.36) - 0.0494).abs() < 5e-4);
    }

    #[test]
    fn summary_is_order_independent() {
        let a = [0.1, 0.7, 1e9, -3.0, 0.2, 0.3];
        let mut b = a;
        b.reverse();
        assert_eq!(Summary::of(&a), Summary::of(&b));
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.median, 2.5);
    }
}
