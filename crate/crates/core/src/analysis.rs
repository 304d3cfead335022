//! Uniformity and independence checks on generated subkeys.
//!
//! Two tests from the NIST SP 800-22 battery (frequency and runs) plus an
//! avalanche matrix, run side by side on schedules from each provider for the
//! same seeded master keys.

use std::fmt::{self, Write as _};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::function::erf::erfc;

use crate::aes_core::{RoundKeySchedule, Variant};
use crate::bits::{hamming, BitString};
use crate::error::{Error, Result};
use crate::keyschedule::{DerivationProfile, MasterKey};

/// Significance level for both statistical tests.
pub const ALPHA: f64 = 0.01;
/// Smallest sample either test accepts.
pub const MIN_SAMPLE_BITS: usize = 100;
/// Minimum trial count for avalanche and comparison runs.
pub const MIN_TRIALS: usize = 100;
/// Acceptable mean flip-rate band.
pub const AVALANCHE_BAND: (f64, f64) = (0.45, 0.55);
/// Pass-rate floor for per-schedule test batteries.
pub const MIN_PASS_RATE: f64 = 0.97;

/// Bits under test plus a label for where they came from.
#[derive(Clone, Debug)]
pub struct BitSample {
    bits: BitString,
    source: String,
}

impl BitSample {
    pub fn new(bits: BitString, source: impl Into<String>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::UndersizedSample { required: 1, actual: 0 });
        }
        Ok(BitSample { bits, source: source.into() })
    }

    pub fn from_schedule(sched: &RoundKeySchedule, source: impl Into<String>) -> Self {
        BitSample { bits: BitString::from_bytes(sched.to_bytes()), source: source.into() }
    }

    pub fn bits(&self) -> &BitString {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// The test's precondition on the sample did not hold.
    NotApplicable,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::NotApplicable => "n/a",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestReport {
    pub test: &'static str,
    pub n: usize,
    pub statistic: f64,
    pub p_value: Option<f64>,
    pub verdict: Verdict,
}

fn verdict_for(p: f64) -> Verdict {
    if p >= ALPHA {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

fn check_size(sample: &BitSample) -> Result<usize> {
    let n = sample.len();
    if n < MIN_SAMPLE_BITS {
        return Err(Error::UndersizedSample { required: MIN_SAMPLE_BITS, actual: n });
    }
    Ok(n)
}

/// Frequency test: s = |#1 − #0| / √n, p = erfc(s / √2).
pub fn monobit_test(sample: &BitSample) -> Result<TestReport> {
    let n = check_size(sample)?;
    let ones = sample.bits.count_ones() as f64;
    let statistic = (2.0 * ones - n as f64).abs() / (n as f64).sqrt();
    let p = erfc(statistic / std::f64::consts::SQRT_2).clamp(0.0, 1.0);
    Ok(TestReport { test: "monobit", n, statistic, p_value: Some(p), verdict: verdict_for(p) })
}

/// Runs test. Not applicable when the ones proportion π has |π − ½| ≥ 2/√n.
pub fn runs_test(sample: &BitSample) -> Result<TestReport> {
    let n = check_size(sample)?;
    let nf = n as f64;
    let pi = sample.bits.count_ones() as f64 / nf;
    if (pi - 0.5).abs() >= 2.0 / nf.sqrt() {
        return Ok(TestReport { test: "runs", n, statistic: pi, p_value: None, verdict: Verdict::NotApplicable });
    }
    let (runs, p) = runs_statistic(&sample.bits, pi);
    Ok(TestReport { test: "runs", n, statistic: runs, p_value: Some(p), verdict: verdict_for(p) })
}

/// Total run count V and its p-value, given the ones proportion `pi`.
fn runs_statistic(bits: &BitString, pi: f64) -> (f64, f64) {
    let n = bits.len();
    let nf = n as f64;
    let transitions = (1..n).filter(|&k| bits.bit(k) != bits.bit(k - 1)).count();
    let runs = (transitions + 1) as f64;
    let q = pi * (1.0 - pi);
    let p = erfc((runs - 2.0 * nf * q).abs() / (2.0 * (2.0 * nf).sqrt() * q)).clamp(0.0, 1.0);
    (runs, p)
}

/// Fraction of schedule bits that change when `toggle` is XORed into the key.
pub fn flip_fraction(profile: DerivationProfile, key: &MasterKey, toggle: &[u8]) -> f64 {
    assert_eq!(toggle.len(), key.as_bytes().len(), "toggle mask must match key length");
    let flipped: Vec<u8> = key.as_bytes().iter().zip(toggle).map(|(a, b)| a ^ b).collect();
    let other = MasterKey::new(key.variant(), &flipped).expect("same length");
    let a = profile.derive(key).to_bytes();
    let b = profile.derive(&other).to_bytes();
    hamming(&a, &b) as f64 / (a.len() * 8) as f64
}

/// Per-input-bit flip counts, split by round key.
#[derive(Clone, Debug, PartialEq)]
pub struct AvalancheMatrix {
    pub profile: DerivationProfile,
    pub variant: Variant,
    pub trials: usize,
    pub seed: u64,
    /// `flips[key_bit][round_key]`, summed over trials.
    flips: Vec<Vec<u64>>,
}

impl AvalancheMatrix {
    pub fn key_bits(&self) -> usize {
        self.flips.len()
    }

    /// Mean fraction of all schedule bits flipped by toggling `bit`.
    pub fn rate(&self, bit: usize) -> f64 {
        let total: u64 = self.flips[bit].iter().sum();
        total as f64 / (self.trials * self.variant.round_key_count() * 128) as f64
    }

    /// Mean fraction of round key `round_key`'s bits flipped by toggling `bit`.
    pub fn region_rate(&self, bit: usize, round_key: usize) -> f64 {
        self.flips[bit][round_key] as f64 / (self.trials * 128) as f64
    }

    pub fn rates(&self) -> Vec<f64> {
        (0..self.key_bits()).map(|b| self.rate(b)).collect()
    }

    pub fn mean_rate(&self) -> f64 {
        self.rates().iter().sum::<f64>() / self.key_bits() as f64
    }

    pub fn all_within(&self, lo: f64, hi: f64) -> bool {
        self.rates().iter().all(|r| (lo..=hi).contains(r))
    }
}

/// Seeded master keys shared by every provider in a comparison.
pub fn sample_keys(variant: Variant, count: usize, seed: u64) -> Vec<MasterKey> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| MasterKey::random(variant, &mut rng)).collect()
}

fn check_trials(trials: usize) -> Result<()> {
    if trials < MIN_TRIALS {
        return Err(Error::Config(format!("need at least {MIN_TRIALS} trials, got {trials}")));
    }
    Ok(())
}

fn worker_count(jobs: usize) -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get()).min(jobs).max(1)
}

fn avalanche_counts(profile: DerivationProfile, keys: &[MasterKey]) -> Vec<Vec<u64>> {
    let variant = keys[0].variant();
    let key_bits = variant.key_bits();
    let regions = variant.round_key_count();
    let count_one = |acc: &mut Vec<Vec<u64>>, key: &MasterKey| {
        let base = profile.derive(key).to_bytes();
        for (bit, row) in acc.iter_mut().enumerate().take(key_bits) {
            let other = profile.derive(&key.with_bit_flipped(bit)).to_bytes();
            for (r, slot) in row.iter_mut().enumerate() {
                *slot += hamming(&base[16 * r..16 * r + 16], &other[16 * r..16 * r + 16]) as u64;
            }
        }
    };
    let workers = worker_count(keys.len());
    let per = keys.len().div_ceil(workers);
    let partials: Vec<Vec<Vec<u64>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = keys
            .chunks(per)
            .map(|chunk| {
                scope.spawn(move || {
                    let mut acc = vec![vec![0u64; regions]; key_bits];
                    chunk.iter().for_each(|k| count_one(&mut acc, k));
                    acc
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("avalanche worker panicked")).collect()
    });
    let mut total = vec![vec![0u64; regions]; key_bits];
    for part in partials {
        for (row, prow) in total.iter_mut().zip(part) {
            for (a, b) in row.iter_mut().zip(prow) {
                *a += b;
            }
        }
    }
    total
}

/// Toggles every master-key bit of `trials` seeded random keys and records how
/// many schedule bits change.
pub fn avalanche_matrix(profile: DerivationProfile, variant: Variant, trials: usize, seed: u64) -> Result<AvalancheMatrix> {
    check_trials(trials)?;
    let keys = sample_keys(variant, trials, seed);
    Ok(AvalancheMatrix { profile, variant, trials, seed, flips: avalanche_counts(profile, &keys) })
}

/// Fractions of schedules passing monobit and runs individually.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PassRates {
    pub monobit: f64,
    pub runs: f64,
}

pub fn schedule_pass_rates(profile: DerivationProfile, keys: &[MasterKey]) -> PassRates {
    let (mut mono, mut runs) = (0usize, 0usize);
    for key in keys {
        let sample = BitSample::from_schedule(&profile.derive(key), profile.name());
        if monobit_test(&sample).expect("schedules exceed 100 bits").verdict == Verdict::Pass {
            mono += 1;
        }
        if runs_test(&sample).expect("schedules exceed 100 bits").verdict == Verdict::Pass {
            runs += 1;
        }
    }
    let n = keys.len() as f64;
    PassRates { monobit: mono as f64 / n, runs: runs as f64 / n }
}

/// Mean Hamming distance between round key 0 and the first 128 master-key bits.
pub fn whitening_distance(profile: DerivationProfile, keys: &[MasterKey]) -> f64 {
    let total: usize = keys
        .iter()
        .map(|k| hamming(&profile.derive(k).keys()[0].0, &k.as_bytes()[..16]))
        .sum();
    total as f64 / keys.len() as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub test: &'static str,
    pub provider: DerivationProfile,
    pub variant: Variant,
    pub n: usize,
    pub statistic: f64,
    pub p_value: Option<f64>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    pub variant: Variant,
    pub trials: usize,
    pub seed: u64,
    pub rows: Vec<ComparisonRow>,
}

pub const CSV_HEADER: &str = "test,provider,variant,n,statistic,p_value,verdict,seed";

impl ComparisonReport {
    pub fn row(&self, test: &str, provider: DerivationProfile) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.test == test && r.provider == provider)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let p = r.p_value.map(|p| format!("{p:.6}")).unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{},{},{},{:.6},{},{},{}",
                r.test, r.provider, r.variant, r.n, r.statistic, p, r.verdict, self.seed
            );
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "Subkey randomness, {} ({} keys, seed {}, alpha {ALPHA})\n\n",
            self.variant.label(),
            self.trials,
            self.seed
        );
        let _ = writeln!(s, "{:<20} {:<11} {:>9} {:>12} {:>10} {:>7}", "test", "provider", "n", "statistic", "p_value", "verdict");
        for r in &self.rows {
            let p = r.p_value.map(|p| format!("{p:.4}")).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                s,
                "{:<20} {:<11} {:>9} {:>12.4} {:>10} {:>7}",
                r.test,
                r.provider.name(),
                r.n,
                r.statistic,
                p,
                r.verdict
            );
        }
        s
    }
}

fn band_verdict(ok: bool) -> Verdict {
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

/// Runs every check for each provider on the same seeded keys.
pub fn compare_providers(
    variant: Variant,
    trials: usize,
    seed: u64,
    providers: &[DerivationProfile],
) -> Result<ComparisonReport> {
    check_trials(trials)?;
    let keys = sample_keys(variant, trials, seed);
    let mut rows = Vec::new();
    for &provider in providers {
        let row = |test, n, statistic, p_value, verdict| ComparisonRow { test, provider, variant, n, statistic, p_value, verdict };

        let joined = BitString::from_bytes(keys.iter().flat_map(|k| provider.derive(k).to_bytes()).collect());
        let joined = BitSample::new(joined, provider.name())?;
        for report in [monobit_test(&joined)?, runs_test(&joined)?] {
            rows.push(row(report.test, report.n, report.statistic, report.p_value, report.verdict));
        }

        let rates = schedule_pass_rates(provider, &keys);
        rows.push(row("monobit-pass-rate", trials, rates.monobit, None, band_verdict(rates.monobit >= MIN_PASS_RATE)));
        rows.push(row("runs-pass-rate", trials, rates.runs, None, band_verdict(rates.runs >= MIN_PASS_RATE)));

        let matrix = AvalancheMatrix {
            profile: provider,
            variant,
            trials,
            seed,
            flips: avalanche_counts(provider, &keys),
        };
        let (lo, hi) = AVALANCHE_BAND;
        rows.push(row(
            "avalanche",
            trials * variant.key_bits(),
            matrix.mean_rate(),
            None,
            band_verdict(matrix.all_within(lo, hi)),
        ));

        let dist = whitening_distance(provider, &keys);
        rows.push(row("whitening-distance", trials, dist, None, band_verdict((lo * 128.0..=hi * 128.0).contains(&dist))));
    }
    Ok(ComparisonReport { variant, trials, seed, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(bits: impl IntoIterator<Item = bool>) -> BitSample {
        BitSample::new(BitString::from_bits(bits), "test").unwrap()
    }

    // erfc(x) = 2/√π ∫_x^∞ e^{-t²} dt by composite Simpson on [x, x + 12].
    fn erfc_quadrature(x: f64) -> f64 {
        let n = 20_000;
        let h = 12.0 / n as f64;
        let f = |t: f64| (-t * t).exp();
        let mut acc = f(x) + f(x + 12.0);
        for i in 1..n {
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x + i as f64 * h);
        }
        acc * h / 3.0 * 2.0 / std::f64::consts::PI.sqrt()
    }

    #[test]
    fn monobit_hand_case() {
        let s = sample((0..100).map(|i| i < 58));
        let r = monobit_test(&s).unwrap();
        assert!((r.statistic - 1.6).abs() < 1e-12);
        let expected = erfc_quadrature(1.6 / std::f64::consts::SQRT_2);
        assert!((expected - 0.1096).abs() < 5e-4, "oracle {expected}");
        assert!((r.p_value.unwrap() - expected).abs() < 1e-9);
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn monobit_extremes() {
        let zeros = monobit_test(&sample(std::iter::repeat_n(false, 1408))).unwrap();
        assert!(zeros.p_value.unwrap() < 1e-100);
        assert_eq!(zeros.verdict, Verdict::Fail);
        let alt = monobit_test(&sample((0..1408).map(|i| i % 2 == 1))).unwrap();
        assert_eq!(alt.statistic, 0.0);
        assert_eq!(alt.p_value, Some(1.0));
    }

    #[test]
    fn runs_extremes() {
        let alt = runs_test(&sample((0..1408).map(|i| i % 2 == 1))).unwrap();
        assert_eq!(alt.statistic, 1408.0);
        assert!(alt.p_value.unwrap() < 1e-100);
        assert_eq!(alt.verdict, Verdict::Fail);
        let zeros = runs_test(&sample(std::iter::repeat_n(false, 1408))).unwrap();
        assert_eq!(zeros.verdict, Verdict::NotApplicable);
        assert_eq!(zeros.p_value, None);
    }

    #[test]
    fn runs_nist_worked_example() {
        // SP 800-22 2.3.8: 1001101011 has V = 7 and p = 0.147232.
        let s = BitString::from_bits("1001101011".chars().map(|c| c == '1'));
        let (runs, p) = runs_statistic(&s, 0.6);
        assert_eq!(runs, 7.0);
        assert!((p - 0.147232).abs() < 1e-6, "{p}");
    }

    #[test]
    fn undersized_samples_rejected() {
        let s = sample(std::iter::repeat_n(true, 99));
        assert!(matches!(monobit_test(&s), Err(Error::UndersizedSample { .. })));
        assert!(matches!(runs_test(&s), Err(Error::UndersizedSample { .. })));
        assert!(BitSample::new(BitString::from_bytes(vec![]), "x").is_err());
    }

    #[test]
    fn empty_toggle_flips_nothing() {
        let key = sample_keys(Variant::A128, 1, 0).remove(0);
        for p in DerivationProfile::ALL {
            assert_eq!(flip_fraction(p, &key, &[0u8; 16]), 0.0);
        }
    }

    #[test]
    fn standard_whitening_region_flips_exactly_one_bit() {
        let m = avalanche_matrix(DerivationProfile::StandardAes, Variant::A256, 100, 9).unwrap();
        for bit in 0..128 {
            assert_eq!(m.region_rate(bit, 0), 1.0 / 128.0);
        }
        for bit in 128..256 {
            assert_eq!(m.region_rate(bit, 0), 0.0);
            assert_eq!(m.region_rate(bit, 1), 1.0 / 128.0);
        }
    }

    #[test]
    fn too_few_trials_rejected() {
        assert!(avalanche_matrix(DerivationProfile::Sha3FullState, Variant::A128, 99, 0).is_err());
        assert!(compare_providers(Variant::A128, 10, 0, &[DerivationProfile::StandardAes]).is_err());
    }

    #[test]
    fn comparison_shape_and_determinism() {
        let providers = [DerivationProfile::StandardAes, DerivationProfile::Sha3FullState];
        let a = compare_providers(Variant::A128, 100, 42, &providers).unwrap();
        let b = compare_providers(Variant::A128, 100, 42, &providers).unwrap();
        assert_eq!(a, b);
        assert!(a.rows.len() >= 6);
        assert_eq!(a.row("whitening-distance", DerivationProfile::StandardAes).unwrap().statistic, 0.0);
        let sha = a.row("whitening-distance", DerivationProfile::Sha3FullState).unwrap().statistic;
        assert!((58.0..=70.0).contains(&sha), "{sha}");
        for r in &a.rows {
            if let Some(p) = r.p_value {
                assert!((0.0..=1.0).contains(&p));
            }
        }
        let csv = a.to_csv();
        assert!(csv.starts_with(CSV_HEADER));
        assert_eq!(csv.lines().count(), a.rows.len() + 1);
        assert!(csv.lines().skip(1).all(|l| l.ends_with(",42") && l.split(',').count() == 8));
        assert!(a.to_text().contains("sha3-full"));
    }
}
