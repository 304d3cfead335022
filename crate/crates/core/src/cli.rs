//! Command-line front end.
//!
//! Exit codes: 0 success, 2 usage error, 3 I/O error, 4 malformed
//! key/ciphertext/padding.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::aes_core::Variant;
use crate::analysis::compare_providers;
use crate::bench::{self, BenchConfig, MonotonicClock, TableFormat};
use crate::cipher_modes::{self, CipherMetadata, DEFAULT_CHUNK_BYTES};
use crate::error::Error;
use crate::keyschedule::{read_key_file, DerivationProfile, MasterKey};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_MALFORMED: i32 = 4;

/// Environment variable consulted for the RNG seed when `--seed` is absent.
pub const SEED_ENV: &str = "AESHA3_SEED";

const DEFAULT_PROFILE: DerivationProfile = DerivationProfile::Sha3FullState;

#[derive(Debug, Parser)]
#[command(name = "aesha3", version, about = "AES with FIPS-197 or SHA-3 sponge-derived round keys")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a random hex master key.
    Keygen {
        #[arg(long, default_value = "128", value_parser = parse_variant)]
        variant: Variant,
        #[arg(long)]
        seed: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a round-key schedule, one hex round key per line.
    Derive {
        #[command(flatten)]
        key: KeyArgs,
        #[arg(long, value_parser = parse_profile)]
        profile: Option<DerivationProfile>,
    },
    /// ECB-encrypt a file and write a metadata sidecar next to it.
    Encrypt {
        input: PathBuf,
        #[command(flatten)]
        key: KeyArgs,
        #[arg(long, value_parser = parse_profile)]
        profile: Option<DerivationProfile>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decrypt a file produced by `encrypt`, reading its metadata sidecar.
    Decrypt {
        input: PathBuf,
        #[command(flatten)]
        key: KeyArgs,
        #[arg(long, value_parser = parse_profile)]
        profile: Option<DerivationProfile>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Key-schedule latency and encryption sweep benchmarks.
    Bench(BenchArgs),
    /// Randomness and avalanche comparison of the providers' subkeys.
    Analyze {
        #[arg(long, default_value = "128", value_parser = parse_variant)]
        variant: Variant,
        /// Number of random master keys.
        #[arg(long, default_value_t = 1000)]
        iters: usize,
        #[arg(long)]
        seed: Option<String>,
        #[arg(long, default_value = "md", value_parser = parse_format)]
        format: TableFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct KeyArgs {
    /// File with one lowercase hex key per line; the first key is used.
    #[arg(long)]
    key_file: Option<PathBuf>,
    /// Key as lowercase hex.
    #[arg(long)]
    key: Option<String>,
    /// Expected key size; checked against the key.
    #[arg(long, value_parser = parse_variant)]
    variant: Option<Variant>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// `key=value` file applied before the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma list or doubling range, e.g. `1KB..16MB`.
    #[arg(long)]
    sizes: Option<String>,
    /// Key-schedule iterations.
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    warmup: Option<usize>,
    #[arg(long)]
    seed: Option<String>,
    /// Restrict to one variant.
    #[arg(long, value_parser = parse_variant)]
    variant: Option<Variant>,
    /// SHA-3 profile compared against the standard schedule.
    #[arg(long, value_parser = parse_profile)]
    profile: Option<DerivationProfile>,
    #[arg(long, default_value = "md", value_parser = parse_format)]
    format: TableFormat,
    /// Directory for the Markdown, CSV and plot-data files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Skip the encryption sweep.
    #[arg(long)]
    skip_sweep: bool,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_profile(s: &str) -> Result<DerivationProfile, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_format(s: &str) -> Result<TableFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io { .. } => EXIT_IO,
            Error::KeyLength { .. }
            | Error::KeyHexLength(_)
            | Error::KeyHex(_)
            | Error::KeyFile { .. }
            | Error::MalformedCiphertext(_)
            | Error::MalformedPadding => EXIT_MALFORMED,
            _ => EXIT_USAGE,
        };
        Failure { code, message: e.to_string() }
    }
}

type CliResult = Result<(), Failure>;

struct Context<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
    env_seed: Option<String>,
}

impl Context<'_> {
    fn note(&mut self, msg: &str) {
        let _ = writeln!(self.err, "{msg}");
    }

    fn print(&mut self, text: &str) -> CliResult {
        self.out.write_all(text.as_bytes()).map_err(|e| Error::io("writing output", e).into())
    }

    fn seed(&self, flag: Option<&str>) -> Result<Option<u64>, Failure> {
        match flag.map(str::to_owned).or_else(|| self.env_seed.clone()) {
            Some(s) => Ok(Some(bench::parse_seed(&s)?)),
            None => Ok(None),
        }
    }

    fn profile(&mut self, flag: Option<DerivationProfile>) -> DerivationProfile {
        match flag {
            Some(p) => p,
            None => {
                self.note(&format!("profile: {DEFAULT_PROFILE} (default)"));
                DEFAULT_PROFILE
            }
        }
    }
}

/// Runs the CLI with `AESHA3_SEED` taken from the process environment.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with_env(args, std::env::var(SEED_ENV).ok(), out, err)
}

/// Like [`run`], with the seed environment value supplied by the caller.
pub fn run_with_env<I, T>(args: I, env_seed: Option<String>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            if code == EXIT_OK {
                let _ = out.write_all(rendered.as_bytes());
            } else if e.kind() == clap::error::ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                let _ = writeln!(err, "error: a subcommand is required; see `aesha3 --help`");
            } else {
                let first = rendered.lines().next().unwrap_or("error: invalid usage");
                let _ = writeln!(err, "{first}");
            }
            return code;
        }
    };
    let mut ctx = Context { out, err, env_seed };
    match dispatch(cli.command, &mut ctx) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(ctx.err, "error: {}", f.message.lines().next().unwrap_or(""));
            f.code
        }
    }
}

fn dispatch(command: Command, ctx: &mut Context<'_>) -> CliResult {
    match command {
        Command::Keygen { variant, seed, out } => keygen(ctx, variant, seed.as_deref(), out.as_deref()),
        Command::Derive { key, profile } => {
            let mk = load_key(&key)?;
            let profile = ctx.profile(profile);
            let sched = profile.derive(&mk);
            let text: String = sched.keys().iter().map(|k| k.to_hex() + "\n").collect();
            ctx.print(&text)
        }
        Command::Encrypt { input, key, profile, out } => encrypt(ctx, &input, &key, profile, out),
        Command::Decrypt { input, key, profile, out } => decrypt(ctx, &input, &key, profile, out),
        Command::Bench(args) => run_bench(ctx, args),
        Command::Analyze { variant, iters, seed, format, out } => {
            let seed = ctx.seed(seed.as_deref())?.unwrap_or(bench::DEFAULT_SEED);
            let report = compare_providers(variant, iters, seed, &DerivationProfile::ALL)?;
            let text = match format {
                TableFormat::Markdown => report.to_text(),
                TableFormat::Csv => report.to_csv(),
            };
            match out {
                Some(path) => {
                    fs::write(&path, &text).map_err(|e| Error::io_path("writing", &path, e))?;
                    ctx.note(&format!("wrote {}", path.display()));
                    Ok(())
                }
                None => ctx.print(&text),
            }
        }
    }
}

fn keygen(ctx: &mut Context<'_>, variant: Variant, seed: Option<&str>, out: Option<&Path>) -> CliResult {
    let seed = match ctx.seed(seed)? {
        Some(s) => s,
        None => rand::thread_rng().gen(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let key = MasterKey::random(variant, &mut rng);
    let line = format!("{}\n", key.to_hex());
    match out {
        Some(path) => {
            fs::write(path, &line).map_err(|e| Error::io_path("writing", path, e))?;
            ctx.note(&format!("wrote {} key to {}", variant.label(), path.display()));
            Ok(())
        }
        None => ctx.print(&line),
    }
}

fn load_key(args: &KeyArgs) -> Result<MasterKey, Failure> {
    let key = match (&args.key, &args.key_file) {
        (Some(_), Some(_)) => return Err(Failure::usage("--key and --key-file are mutually exclusive")),
        (None, None) => return Err(Failure::usage("a key is required: pass --key-file or --key")),
        (Some(hex), None) => MasterKey::from_hex(hex.trim())?,
        (None, Some(path)) => read_key_file(path)?.swap_remove(0),
    };
    if let Some(v) = args.variant {
        if v != key.variant() {
            return Err(Error::KeyLength { expected: v.key_bytes(), actual: key.as_bytes().len() }.into());
        }
    }
    Ok(key)
}

fn default_output(input: &Path, suffix: &str) -> PathBuf {
    let mut p = input.as_os_str().to_owned();
    p.push(suffix);
    PathBuf::from(p)
}

fn ecb_warning(ctx: &mut Context<'_>) {
    ctx.note("warning: ECB mode is for benchmarking only; identical plaintext blocks produce identical ciphertext");
}

fn encrypt(ctx: &mut Context<'_>, input: &Path, key: &KeyArgs, profile: Option<DerivationProfile>, out: Option<PathBuf>) -> CliResult {
    let mk = load_key(key)?;
    let profile = ctx.profile(profile);
    ecb_warning(ctx);
    let out = out.unwrap_or_else(|| default_output(input, ".enc"));
    let sched = profile.derive(&mk);
    let written = cipher_modes::encrypt_file_to(input, &out, &sched, DEFAULT_CHUNK_BYTES)?;
    CipherMetadata { variant: mk.variant(), profile }.write_for(&out)?;
    ctx.note(&format!("wrote {written} bytes to {}", out.display()));
    Ok(())
}

fn decrypt(ctx: &mut Context<'_>, input: &Path, key: &KeyArgs, profile: Option<DerivationProfile>, out: Option<PathBuf>) -> CliResult {
    let mk = load_key(key)?;
    let meta = match CipherMetadata::read_for(input) {
        Ok(m) => m,
        Err(Error::Parse(msg)) => return Err(Failure { code: EXIT_MALFORMED, message: format!("metadata: {msg}") }),
        Err(e) => return Err(e.into()),
    };
    if let Some(p) = profile {
        if p != meta.profile {
            return Err(Failure::usage(format!("--profile {p} disagrees with the sidecar's {}", meta.profile)));
        }
    }
    if meta.variant != mk.variant() {
        return Err(Error::KeyLength { expected: meta.variant.key_bytes(), actual: mk.as_bytes().len() }.into());
    }
    ecb_warning(ctx);
    let out = out.unwrap_or_else(|| default_output(input, ".dec"));
    let sched = meta.profile.derive(&mk);
    match cipher_modes::decrypt_file_to(input, &out, &sched, DEFAULT_CHUNK_BYTES) {
        Ok(written) => {
            ctx.note(&format!("wrote {written} bytes to {}", out.display()));
            Ok(())
        }
        Err(e) => {
            let _ = fs::remove_file(&out);
            Err(e.into())
        }
    }
}

fn run_bench(ctx: &mut Context<'_>, args: BenchArgs) -> CliResult {
    let mut cfg = BenchConfig::default();
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(|e| Error::io_path("reading config", path, e))?;
        cfg.apply_kv(&text)?;
    }
    if let Some(s) = &args.sizes {
        cfg.sizes = bench::parse_sizes(s)?;
    }
    if let Some(n) = args.iters {
        cfg.iterations = n;
    }
    if let Some(n) = args.reps {
        cfg.repetitions = n;
    }
    if let Some(n) = args.warmup {
        cfg.warmup = n;
    }
    if let Some(v) = args.variant {
        cfg.variants = vec![v];
    }
    match args.profile {
        Some(DerivationProfile::StandardAes) => {
            return Err(Failure::usage("--profile for bench names the SHA-3 side; the standard baseline is always included"));
        }
        Some(p) => cfg.providers = vec![DerivationProfile::StandardAes, p],
        None if args.config.is_none() => {
            ctx.profile(None);
        }
        None => {}
    }
    if let Some(seed) = ctx.seed(args.seed.as_deref())? {
        cfg.seed = seed;
    }
    cfg.validate()?;

    let clock = MonotonicClock::new();
    let ks = bench::bench_key_schedule(&cfg, &clock)?;
    let mut files: Vec<(&str, String)> = vec![("keyschedule.md", ks.to_markdown()), ("keyschedule.csv", ks.to_csv())];
    let mut stdout_text = match args.format {
        TableFormat::Markdown => format!("## Key-schedule latency\n\n{}\n", ks.to_markdown()),
        TableFormat::Csv => ks.to_csv(),
    };

    if !args.skip_sweep {
        let sweep = bench::bench_encrypt_sweep(&cfg, &clock)?;
        for f in sweep.failures() {
            ctx.note(&format!("warning: {} {} not measured: {}", bench::format_size(f.size_bytes), f.variant.label(), f.reason));
        }
        let records = sweep.records();
        let md = bench::emit_table(&records, TableFormat::Markdown)?;
        let csv = bench::emit_table(&records, TableFormat::Csv)?;
        let trend = if cfg.sizes.len() >= 4 {
            let t = bench::trend_check(&records, bench::TREND_TOLERANCE)?;
            let mut s = format!("trend: {:?}\n", t.verdict);
            for v in &t.violations {
                s += &format!("  {v}\n");
            }
            s
        } else {
            "trend: not checked (fewer than 4 sizes)\n".to_string()
        };
        let meta = format!(
            "seed: {}, repetitions: {}, clock resolution: {} ns, profiles: {}\n",
            sweep.seed,
            sweep.repetitions,
            sweep.clock_resolution.as_nanos(),
            cfg.providers.iter().map(|p| p.name()).collect::<Vec<_>>().join(",")
        );
        stdout_text += &match args.format {
            TableFormat::Markdown => format!("## Encryption sweep (ECB)\n\n{md}\n{meta}{trend}"),
            TableFormat::Csv => csv.clone(),
        };
        files.push(("sweep.md", format!("{md}\n{meta}{trend}")));
        files.push(("sweep.csv", csv));
        files.push(("plot.csv", bench::plot_data(&records)?));
    }

    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).map_err(|e| Error::io_path("creating", dir, e))?;
        for (name, text) in &files {
            let path = dir.join(name);
            fs::write(&path, text).map_err(|e| Error::io_path("writing", &path, e))?;
        }
        ctx.note(&format!("wrote {} files to {}", files.len(), dir.display()));
    }
    ctx.print(&stdout_text)
}
