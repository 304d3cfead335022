//! Timing harness for the two experiments: key-schedule latency, and
//! schedule-plus-ECB encryption over doubling payload sizes with the
//! baseline/AESHA3 efficiency ratio.
//!
//! Every timed section holds a process-wide lock, so at most one runs at any
//! instant even when callers use several threads.

use std::fmt::Write as _;
use std::hint::black_box;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Mutex, MutexGuard};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::aes_core::{encrypted_block_count, Variant};
use crate::cipher_modes::ecb_encrypt;
use crate::error::{Error, Result};
use crate::keyschedule::{DerivationProfile, MasterKey, SubkeyProvider};

pub const DEFAULT_ITERATIONS: usize = 10_000;
pub const DEFAULT_WARMUP: usize = 100;
pub const DEFAULT_REPETITIONS: usize = 3;
pub const DEFAULT_SEED: u64 = 0x5EED_AE53;
pub const DEFAULT_MIN_SAMPLE: Duration = Duration::from_millis(1);
/// Relative per-step slack allowed by [`trend_check`].
pub const TREND_TOLERANCE: f64 = 0.05;

const KIB: usize = 1024;
const MIB: usize = 1024 * 1024;

/// Source of monotonic timestamps.
pub trait Clock {
    /// Time since an arbitrary fixed origin. Never decreases.
    fn now(&self) -> Duration;
    /// Smallest observable nonzero step.
    fn resolution(&self) -> Duration;
}

/// [`Instant`]-backed clock.
#[derive(Clone, Copy, Debug)]
pub struct MonotonicClock {
    origin: Instant,
}

impl MonotonicClock {
    pub fn new() -> Self {
        MonotonicClock { origin: Instant::now() }
    }
}

impl Default for MonotonicClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for MonotonicClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }

    fn resolution(&self) -> Duration {
        let mut best = Duration::MAX;
        for _ in 0..64 {
            let a = Instant::now();
            let mut b = Instant::now();
            while b == a {
                b = Instant::now();
            }
            best = best.min(b - a);
        }
        best
    }
}

/// Fake clock that advances by a fixed step on every read, so every timed
/// section measures exactly one step.
#[derive(Debug)]
pub struct FixedStepClock {
    step: Duration,
    ticks: AtomicU64,
}

impl FixedStepClock {
    pub fn new(step: Duration) -> Self {
        FixedStepClock { step, ticks: AtomicU64::new(0) }
    }
}

impl Clock for FixedStepClock {
    fn now(&self) -> Duration {
        let t = self.ticks.fetch_add(1, Ordering::Relaxed);
        self.step * t as u32
    }

    fn resolution(&self) -> Duration {
        self.step
    }
}

static TIMING_LOCK: Mutex<()> = Mutex::new(());

fn timing_section() -> MutexGuard<'static, ()> {
    TIMING_LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub variants: Vec<Variant>,
    /// Must contain `StandardAes` and at least one SHA-3 profile for sweeps.
    pub providers: Vec<DerivationProfile>,
    pub iterations: usize,
    pub sizes: Vec<usize>,
    pub warmup: usize,
    pub repetitions: usize,
    pub seed: u64,
    /// Each sweep sample loops until it spans at least this long.
    pub min_sample: Duration,
    /// Generate sweep payloads on worker threads ahead of timing.
    pub parallel_payloads: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            variants: Variant::ALL.to_vec(),
            providers: vec![DerivationProfile::StandardAes, DerivationProfile::Sha3FullState],
            iterations: DEFAULT_ITERATIONS,
            sizes: doubling_sizes(KIB, 16 * MIB),
            warmup: DEFAULT_WARMUP,
            repetitions: DEFAULT_REPETITIONS,
            seed: DEFAULT_SEED,
            min_sample: DEFAULT_MIN_SAMPLE,
            parallel_payloads: false,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.variants.is_empty() {
            return bad("at least one variant is required".into());
        }
        if self.providers.is_empty() {
            return bad("at least one provider is required".into());
        }
        if self.iterations == 0 {
            return bad("iterations must be at least 1".into());
        }
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1".into());
        }
        if self.sizes.is_empty() || self.sizes.contains(&0) {
            return bad("sizes must be a non-empty list of positive byte counts".into());
        }
        if self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("sizes must be strictly increasing: {:?}", self.sizes));
        }
        Ok(())
    }

    fn sweep_profiles(&self) -> Result<Vec<DerivationProfile>> {
        if !self.providers.contains(&DerivationProfile::StandardAes) {
            return Err(Error::Config("sweep needs the standard provider as its baseline".into()));
        }
        let sha3: Vec<_> = self.providers.iter().copied().filter(|p| p.is_sha3()).collect();
        if sha3.is_empty() {
            return Err(Error::Config("sweep needs at least one SHA-3 provider".into()));
        }
        Ok(sha3)
    }

    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let int = |v: &str| v.parse::<usize>().map_err(|_| Error::Config(format!("{key}: {v:?} is not an integer")));
        match key.trim() {
            "variants" => {
                self.variants = value.split(',').map(|v| v.parse()).collect::<Result<_>>()?;
            }
            "providers" | "profiles" => {
                self.providers = value.split(',').map(|v| v.parse()).collect::<Result<_>>()?;
            }
            "iterations" | "iters" => self.iterations = int(value)?,
            "sizes" => self.sizes = parse_sizes(value)?,
            "warmup" => self.warmup = int(value)?,
            "repetitions" | "reps" => self.repetitions = int(value)?,
            "seed" => self.seed = parse_seed(value)?,
            "min_sample_ms" => {
                let v: f64 = value.parse().map_err(|_| Error::Config(format!("{key}: {value:?} is not a number")))?;
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::Config(format!("{key} must be non-negative")));
                }
                self.min_sample = Duration::from_secs_f64(v / 1e3);
            }
            "parallel" => {
                self.parallel_payloads = match value {
                    "true" | "1" | "yes" => true,
                    "false" | "0" | "no" => false,
                    _ => return Err(Error::Config(format!("{key}: expected true or false, got {value:?}"))),
                }
            }
            other => return Err(Error::Config(format!("unknown setting {other:?}"))),
        }
        Ok(())
    }

    /// Applies `key=value` lines; `#` starts a comment.
    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value, got {line:?}", idx + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }
}

pub fn parse_seed(text: &str) -> Result<u64> {
    let t = text.trim();
    let parsed = match t.strip_prefix("0x") {
        Some(h) => u64::from_str_radix(h, 16),
        None => t.parse(),
    };
    parsed.map_err(|_| Error::Config(format!("seed {t:?} is not an unsigned 64-bit integer")))
}

fn doubling_sizes(start: usize, end: usize) -> Vec<usize> {
    std::iter::successors(Some(start), |&s| s.checked_mul(2)).take_while(|&s| s <= end).collect()
}

/// Parses `1024`, `1K`, `1KB`, `16MB` (binary multiples).
pub fn parse_size(text: &str) -> Result<usize> {
    let t = text.trim().to_ascii_uppercase();
    let t = t.strip_suffix('B').unwrap_or(&t);
    let (num, mult) = if let Some(n) = t.strip_suffix('K') {
        (n, KIB)
    } else if let Some(n) = t.strip_suffix('M') {
        (n, MIB)
    } else {
        (t, 1)
    };
    let n: usize = num.trim().parse().map_err(|_| Error::Config(format!("invalid size {text:?}")))?;
    n.checked_mul(mult).filter(|&v| v > 0).ok_or_else(|| Error::Config(format!("invalid size {text:?}")))
}

/// Either a comma list (`1KB,4KB`) or a doubling range (`1KB..64KB`).
pub fn parse_sizes(text: &str) -> Result<Vec<usize>> {
    if let Some((a, b)) = text.split_once("..") {
        let (start, end) = (parse_size(a)?, parse_size(b)?);
        if end < start {
            return Err(Error::Config(format!("size range {text:?} is empty")));
        }
        return Ok(doubling_sizes(start, end));
    }
    text.split(',').map(parse_size).collect()
}

pub fn format_size(bytes: usize) -> String {
    if bytes >= MIB && bytes.is_multiple_of(MIB) {
        format!("{} MB", bytes / MIB)
    } else if bytes >= KIB && bytes.is_multiple_of(KIB) {
        format!("{} KB", bytes / KIB)
    } else {
        format!("{bytes} B")
    }
}

fn variant_stream(v: Variant) -> u64 {
    v.key_bits() as u64
}

/// Master keys for the key-schedule benchmark; identical for every provider.
pub fn key_stream(seed: u64, variant: Variant, count: usize) -> Vec<MasterKey> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(variant_stream(variant));
    (0..count).map(|_| MasterKey::random(variant, &mut rng)).collect()
}

/// Deterministic sweep payload for `size`.
pub fn payload_for(seed: u64, size: usize) -> Result<Vec<u8>> {
    let mut data = Vec::new();
    data.try_reserve_exact(size).map_err(|e| Error::Config(format!("cannot allocate {size} bytes: {e}")))?;
    data.resize(size, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1 << 32 | size as u64);
    rng.fill(&mut data[..]);
    Ok(data)
}

/// Deterministic master key used for one sweep row.
pub fn sweep_key_for(seed: u64, size: usize, variant: Variant) -> MasterKey {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2 << 32 | (size as u64) << 9 | variant_stream(variant));
    MasterKey::random(variant, &mut rng)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatencyStats {
    pub mean_ms: f64,
    pub median_ms: f64,
    pub stddev_ms: f64,
    pub total_ms: f64,
}

impl LatencyStats {
    pub fn from_samples(samples_ms: &[f64]) -> Self {
        assert!(!samples_ms.is_empty(), "no samples");
        let n = samples_ms.len() as f64;
        let total: f64 = samples_ms.iter().sum();
        let mean = total / n;
        let var = samples_ms.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        LatencyStats { mean_ms: mean, median_ms: median(samples_ms), stddev_ms: var.sqrt(), total_ms: total }
    }
}

fn median(samples: &[f64]) -> f64 {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) {
        (v[m - 1] + v[m]) / 2.0
    } else {
        v[m]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KeyScheduleRow {
    pub profile: DerivationProfile,
    pub variant: Variant,
    pub iterations: usize,
    pub stats: LatencyStats,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KeyScheduleReport {
    pub rows: Vec<KeyScheduleRow>,
    pub seed: u64,
    pub clock_resolution: Duration,
    /// Block encryptions observed while the benchmark ran; zero by construction.
    pub block_encryptions: u64,
}

/// Times schedule derivation alone, one fresh seeded key per iteration.
pub fn bench_key_schedule(cfg: &BenchConfig, clock: &impl Clock) -> Result<KeyScheduleReport> {
    cfg.validate()?;
    let blocks_before = encrypted_block_count();
    let mut rows = Vec::new();
    for &variant in &cfg.variants {
        let keys = key_stream(cfg.seed, variant, cfg.iterations);
        for &profile in &cfg.providers {
            let provider = profile.provider();
            for key in keys.iter().cycle().take(cfg.warmup) {
                black_box(provider.derive(black_box(key)));
            }
            let mut samples = Vec::with_capacity(keys.len());
            let _section = timing_section();
            for key in &keys {
                let t0 = clock.now();
                black_box(provider.derive(black_box(key)));
                let t1 = clock.now();
                samples.push(ms(t1.saturating_sub(t0)));
            }
            rows.push(KeyScheduleRow { profile, variant, iterations: keys.len(), stats: LatencyStats::from_samples(&samples) });
        }
    }
    Ok(KeyScheduleReport {
        rows,
        seed: cfg.seed,
        clock_resolution: clock.resolution(),
        block_encryptions: encrypted_block_count() - blocks_before,
    })
}

impl KeyScheduleReport {
    /// One column per (variant, provider), one row per statistic.
    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let labels: Vec<String> = self.rows.iter().map(|r| r.profile.column_label(r.variant)).collect();
        let _ = writeln!(s, "| Statistic (ms per derivation) | {} |", labels.join(" | "));
        let _ = writeln!(s, "|---|{}", "---|".repeat(labels.len()));
        let line = |name: &str, f: &dyn Fn(&LatencyStats) -> f64| {
            let cells: Vec<String> = self.rows.iter().map(|r| format!("{:.6}", f(&r.stats))).collect();
            format!("| {name} | {} |\n", cells.join(" | "))
        };
        s += &line("mean", &|st| st.mean_ms);
        s += &line("median", &|st| st.median_ms);
        s += &line("stddev", &|st| st.stddev_ms);
        s += &line("total", &|st| st.total_ms);
        let _ = writeln!(
            s,
            "\niterations: {}, seed: {}, clock resolution: {} ns",
            self.rows.first().map_or(0, |r| r.iterations),
            self.seed,
            self.clock_resolution.as_nanos()
        );
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("provider,variant,iterations,mean_ms,median_ms,stddev_ms,total_ms,seed\n");
        for r in &self.rows {
            let st = &r.stats;
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                r.profile, r.variant, r.iterations, st.mean_ms, st.median_ms, st.stddev_ms, st.total_ms, self.seed
            );
        }
        s
    }
}

/// Baseline and AESHA3 total times for one payload size and variant.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchRecord {
    pub size_bytes: usize,
    pub variant: Variant,
    /// The SHA-3 profile compared against the standard schedule.
    pub profile: DerivationProfile,
    pub standard_ms: f64,
    pub sha3_ms: f64,
    /// Interquartile range of the per-repetition efficiency ratios over their median.
    pub noise: f64,
}

impl BenchRecord {
    pub fn efficiency(&self) -> f64 {
        efficiency_ratio(self.standard_ms, self.sha3_ms)
    }
}

/// Baseline time divided by AESHA3 time.
pub fn efficiency_ratio(standard_ms: f64, sha3_ms: f64) -> f64 {
    standard_ms / sha3_ms
}

/// A sweep row that could not be measured.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepFailure {
    pub size_bytes: usize,
    pub variant: Variant,
    pub reason: String,
}

pub type SweepRow = std::result::Result<BenchRecord, SweepFailure>;

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub seed: u64,
    pub repetitions: usize,
    pub clock_resolution: Duration,
}

impl SweepReport {
    pub fn records(&self) -> Vec<BenchRecord> {
        self.rows.iter().filter_map(|r| r.as_ref().ok().cloned()).collect()
    }

    pub fn failures(&self) -> Vec<&SweepFailure> {
        self.rows.iter().filter_map(|r| r.as_ref().err()).collect()
    }
}

/// Mean time of `inner` back-to-back (derive + ECB encrypt) runs.
fn time_run(clock: &impl Clock, provider: &dyn SubkeyProvider, key: &MasterKey, payload: &[u8], inner: usize) -> f64 {
    let _section = timing_section();
    let t0 = clock.now();
    for _ in 0..inner {
        let sched = provider.derive(black_box(key));
        black_box(ecb_encrypt(black_box(payload), &sched));
    }
    let t1 = clock.now();
    ms(t1.saturating_sub(t0)) / inner as f64
}

/// Linear-interpolated quantile of a non-empty sample.
fn quantile(samples: &[f64], q: f64) -> f64 {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q * (v.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

/// Interquartile range of the paired per-repetition ratios, relative to their
/// median. One preempted sample moves this far less than max − min would.
fn ratio_spread(standard: &[f64], sha3: &[f64]) -> f64 {
    let ratios: Vec<f64> = standard.iter().zip(sha3).filter(|(_, &b)| b > 0.0).map(|(a, b)| a / b).collect();
    if ratios.is_empty() {
        return 0.0;
    }
    let m = median(&ratios);
    if m > 0.0 {
        (quantile(&ratios, 0.75) - quantile(&ratios, 0.25)) / m
    } else {
        0.0
    }
}

fn measure_row(
    cfg: &BenchConfig,
    clock: &impl Clock,
    size: usize,
    variant: Variant,
    profile: DerivationProfile,
    payload: &[u8],
) -> BenchRecord {
    let key = sweep_key_for(cfg.seed, size, variant);
    let standard = DerivationProfile::StandardAes.provider();
    let sha3 = profile.provider();

    // Warm caches, then size the inner loop so each sample spans min_sample.
    let single = time_run(clock, standard, &key, payload, 1).max(time_run(clock, sha3, &key, payload, 1));
    let min_ms = ms(cfg.min_sample);
    let inner = if single > 0.0 { (min_ms / single).ceil().clamp(1.0, 1e6) as usize } else { 1 };

    let mut std_samples = Vec::with_capacity(cfg.repetitions);
    let mut sha_samples = Vec::with_capacity(cfg.repetitions);
    for rep in 0..cfg.repetitions {
        // Alternate order so drift does not favour one provider.
        if rep % 2 == 0 {
            std_samples.push(time_run(clock, standard, &key, payload, inner));
            sha_samples.push(time_run(clock, sha3, &key, payload, inner));
        } else {
            sha_samples.push(time_run(clock, sha3, &key, payload, inner));
            std_samples.push(time_run(clock, standard, &key, payload, inner));
        }
    }
    BenchRecord {
        size_bytes: size,
        variant,
        profile,
        standard_ms: median(&std_samples),
        sha3_ms: median(&sha_samples),
        noise: ratio_spread(&std_samples, &sha_samples),
    }
}

/// Times schedule derivation plus full ECB encryption for every size, variant
/// and SHA-3 profile against the standard baseline.
pub fn bench_encrypt_sweep(cfg: &BenchConfig, clock: &impl Clock) -> Result<SweepReport> {
    cfg.validate()?;
    let profiles = cfg.sweep_profiles()?;

    let pregenerated: Option<Vec<Result<Vec<u8>>>> = cfg.parallel_payloads.then(|| {
        std::thread::scope(|scope| {
            let handles: Vec<_> = cfg.sizes.iter().map(|&size| scope.spawn(move || payload_for(cfg.seed, size))).collect();
            handles.into_iter().map(|h| h.join().expect("payload worker panicked")).collect()
        })
    });

    let mut rows = Vec::new();
    for (idx, &size) in cfg.sizes.iter().enumerate() {
        let payload = match &pregenerated {
            Some(all) => all[idx].as_ref().map(|p| p.as_slice()).map_err(|e| e.to_string()).map(std::borrow::Cow::Borrowed),
            None => payload_for(cfg.seed, size).map(std::borrow::Cow::Owned).map_err(|e| e.to_string()),
        };
        for &variant in &cfg.variants {
            for &profile in &profiles {
                rows.push(match &payload {
                    Ok(p) => Ok(measure_row(cfg, clock, size, variant, profile, p)),
                    Err(reason) => Err(SweepFailure { size_bytes: size, variant, reason: reason.clone() }),
                });
            }
        }
    }
    Ok(SweepReport { rows, seed: cfg.seed, repetitions: cfg.repetitions, clock_resolution: clock.resolution() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableFormat {
    Markdown,
    Csv,
}

impl std::str::FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "md" | "markdown" => Ok(TableFormat::Markdown),
            "csv" => Ok(TableFormat::Csv),
            other => Err(Error::Parse(format!("unknown format {other:?}, expected md or csv"))),
        }
    }
}

pub const RECORD_CSV_HEADER: &str = "size_bytes,variant,profile,standard_ms,sha3_ms,efficiency,noise";

fn distinct<T: PartialEq + Copy>(items: impl Iterator<Item = T>) -> Vec<T> {
    let mut out = Vec::new();
    for i in items {
        if !out.contains(&i) {
            out.push(i);
        }
    }
    out
}

fn markdown_table(records: &[BenchRecord], profile: DerivationProfile) -> String {
    let rows: Vec<&BenchRecord> = records.iter().filter(|r| r.profile == profile).collect();
    let mut variants = distinct(rows.iter().map(|r| r.variant));
    variants.sort();
    let mut sizes = distinct(rows.iter().map(|r| r.size_bytes));
    sizes.sort();

    let mut s = String::from("| File Size |");
    for &v in &variants {
        let _ = write!(
            s,
            " Total Time {} / {} (ms) | Efficiency of {} (X) |",
            DerivationProfile::StandardAes.column_label(v),
            profile.column_label(v),
            profile.column_label(v)
        );
    }
    s.push('\n');
    s.push('|');
    s.push_str(&"---|".repeat(1 + 2 * variants.len()));
    s.push('\n');
    for size in sizes {
        let _ = write!(s, "| {} |", format_size(size));
        for &v in &variants {
            match rows.iter().find(|r| r.size_bytes == size && r.variant == v) {
                Some(r) => {
                    let _ = write!(s, " {:.4} / {:.4} | {:.2} |", r.standard_ms, r.sha3_ms, r.efficiency());
                }
                None => s.push_str(" - | - |"),
            }
        }
        s.push('\n');
    }
    s
}

/// Renders results as Markdown (one table per SHA-3 profile: file size, then
/// per variant the two total times and the efficiency ratio) or as CSV records.
pub fn emit_table(records: &[BenchRecord], format: TableFormat) -> Result<String> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    Ok(match format {
        TableFormat::Markdown => distinct(records.iter().map(|r| r.profile))
            .into_iter()
            .map(|p| markdown_table(records, p))
            .collect::<Vec<_>>()
            .join("\n"),
        TableFormat::Csv => {
            let mut s = String::from(RECORD_CSV_HEADER);
            s.push('\n');
            for r in records {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{}",
                    r.size_bytes,
                    r.variant,
                    r.profile,
                    r.standard_ms,
                    r.sha3_ms,
                    r.efficiency(),
                    r.noise
                );
            }
            s
        }
    })
}

/// Inverse of the CSV form of [`emit_table`].
pub fn parse_records_csv(text: &str) -> Result<Vec<BenchRecord>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(RECORD_CSV_HEADER) {
        return Err(Error::Parse("missing benchmark CSV header".into()));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(Error::Parse(format!("expected 7 fields in {line:?}")));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| Error::Parse(format!("bad number {s:?}")));
            Ok(BenchRecord {
                size_bytes: f[0].parse().map_err(|_| Error::Parse(format!("bad size {:?}", f[0])))?,
                variant: f[1].parse()?,
                profile: f[2].parse()?,
                standard_ms: num(f[3])?,
                sha3_ms: num(f[4])?,
                noise: num(f[6])?,
            })
        })
        .collect()
}

/// `size_bytes,variant,profile,efficiency`, one row per record.
pub fn plot_data(records: &[BenchRecord]) -> Result<String> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let mut s = String::from("size_bytes,variant,profile,efficiency\n");
    for r in records {
        let _ = writeln!(s, "{},{},{},{}", r.size_bytes, r.variant, r.profile, r.efficiency());
    }
    Ok(s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrendVerdict {
    Pass,
    Fail,
    /// A violation coincides with measurement noise above the tolerance.
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrendReport {
    pub verdict: TrendVerdict,
    pub tolerance: f64,
    pub violations: Vec<String>,
}

/// Checks that efficiency never rises by more than `tolerance` from one size
/// to the next and stays at or above `1 − tolerance`. Each (variant, profile)
/// series is checked on its own and needs at least four sizes.
pub fn trend_check(records: &[BenchRecord], tolerance: f64) -> Result<TrendReport> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let series_keys = distinct(records.iter().map(|r| (r.variant, r.profile)));
    let mut violations = Vec::new();
    let mut noisy = 0usize;
    let mut hard = 0usize;
    for (variant, profile) in series_keys {
        let mut series: Vec<&BenchRecord> = records.iter().filter(|r| r.variant == variant && r.profile == profile).collect();
        series.sort_by_key(|r| r.size_bytes);
        if series.len() < 4 {
            return Err(Error::Config(format!(
                "trend check needs at least 4 sizes, {} {} has {}",
                profile.column_label(variant),
                profile,
                series.len()
            )));
        }
        let mut flag = |msg: String, noise: f64| {
            if noise > tolerance {
                noisy += 1;
                violations.push(format!("{msg} (noise {:.1}%)", noise * 100.0));
            } else {
                hard += 1;
                violations.push(msg);
            }
        };
        for w in series.windows(2) {
            let (a, b) = (w[0].efficiency(), w[1].efficiency());
            if b > a * (1.0 + tolerance) {
                flag(
                    format!(
                        "{}: ratio rises {a:.3} -> {b:.3} from {} to {}",
                        profile.column_label(variant),
                        format_size(w[0].size_bytes),
                        format_size(w[1].size_bytes)
                    ),
                    w[0].noise.max(w[1].noise),
                );
            }
        }
        for r in &series {
            if r.efficiency() < 1.0 - tolerance {
                flag(
                    format!("{}: ratio {:.3} below {:.2} at {}", profile.column_label(variant), r.efficiency(), 1.0 - tolerance, format_size(r.size_bytes)),
                    r.noise,
                );
            }
        }
    }
    let verdict = if hard > 0 {
        TrendVerdict::Fail
    } else if noisy > 0 {
        TrendVerdict::Inconclusive
    } else {
        TrendVerdict::Pass
    };
    Ok(TrendReport { verdict, tolerance, violations })
}
