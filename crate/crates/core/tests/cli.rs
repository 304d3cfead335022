use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_aesha3");
const FIPS_KEY: &str = "2b7e151628aed2a6abf7158809cf4f3c";

fn aesha3(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("AESHA3_SEED").output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn derive_prints_fips_schedule() {
    let out = aesha3(&["derive", "--variant", "128", "--profile", "standard", "--key", FIPS_KEY]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 11);
    assert_eq!(lines[0], FIPS_KEY);
    assert_eq!(lines[10], "d014f9a8c9ee2589e13f0cc8b6630ca6");
}

#[test]
fn derive_reads_key_file_and_announces_default_profile() {
    let dir = tempfile::tempdir().unwrap();
    let keys = dir.path().join("keys.txt");
    fs::write(&keys, format!("\n{}\n", "ab".repeat(32))).unwrap();
    let out = aesha3(&["derive", "--key-file", p(&keys)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(stdout(&out).lines().count(), 15);
    assert!(stderr(&out).contains("profile: sha3-full (default)"));
}

#[test]
fn encrypt_decrypt_round_trip_with_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let keys = dir.path().join("k.txt");
    let plain = dir.path().join("msg.bin");
    let data: Vec<u8> = (0..100_003u32).map(|i| (i * 7 + 3) as u8).collect();
    fs::write(&plain, &data).unwrap();
    assert_eq!(code(&aesha3(&["keygen", "--variant", "192", "--seed", "5", "--out", p(&keys)])), 0);

    for profile in ["standard", "sha3-full", "sha3-shake"] {
        let enc = dir.path().join(format!("msg.{profile}.enc"));
        let out = aesha3(&["encrypt", p(&plain), "--key-file", p(&keys), "--profile", profile, "--out", p(&enc)]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        assert!(stderr(&out).contains("ECB"));
        let meta = fs::read_to_string(dir.path().join(format!("msg.{profile}.enc.meta"))).unwrap();
        assert!(meta.contains(profile) && meta.contains("192"), "{meta}");
        assert_eq!(fs::metadata(&enc).unwrap().len(), 100_016);

        let dec = dir.path().join(format!("msg.{profile}.dec"));
        let out = aesha3(&["decrypt", p(&enc), "--key-file", p(&keys), "--out", p(&dec)]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        assert!(fs::read(&dec).unwrap() == data);
    }
}

#[test]
fn default_output_paths() {
    let dir = tempfile::tempdir().unwrap();
    let plain = dir.path().join("a.txt");
    fs::write(&plain, b"hello").unwrap();
    assert_eq!(code(&aesha3(&["encrypt", p(&plain), "--key", FIPS_KEY])), 0);
    let enc = dir.path().join("a.txt.enc");
    assert!(enc.exists() && dir.path().join("a.txt.enc.meta").exists());
    assert_eq!(code(&aesha3(&["decrypt", p(&enc), "--key", FIPS_KEY])), 0);
    assert_eq!(fs::read(dir.path().join("a.txt.enc.dec")).unwrap(), b"hello");
}

#[test]
fn error_taxonomy() {
    let dir = tempfile::tempdir().unwrap();
    let plain = dir.path().join("p.bin");
    fs::write(&plain, [7u8; 40]).unwrap();
    let bad_hex = dir.path().join("bad.txt");
    fs::write(&bad_hex, "zz".repeat(16)).unwrap();
    let enc = dir.path().join("p.enc");
    assert_eq!(code(&aesha3(&["encrypt", p(&plain), "--key", FIPS_KEY, "--out", p(&enc)])), 0);
    let truncated = dir.path().join("t.enc");
    fs::write(&truncated, &fs::read(&enc).unwrap()[..40]).unwrap();
    fs::copy(dir.path().join("p.enc.meta"), dir.path().join("t.enc.meta")).unwrap();
    let orphan = dir.path().join("orphan.enc");
    fs::write(&orphan, [0u8; 16]).unwrap();
    let garbled = dir.path().join("g.enc");
    fs::write(&garbled, [0u8; 16]).unwrap();
    fs::write(dir.path().join("g.enc.meta"), "nonsense\n").unwrap();
    // Decrypting under a different key garbles the final block's padding.
    let other_key = "000102030405060708090a0b0c0d0e0f";

    let cases: Vec<(Vec<&str>, i32, &str)> = vec![
        (vec![], 2, "no subcommand"),
        (vec!["encrypt"], 2, "missing input"),
        (vec!["derive", "--frobnicate"], 2, "unknown flag"),
        (vec!["derive"], 2, "no key"),
        (vec!["derive", "--key", FIPS_KEY, "--key-file", p(&bad_hex)], 2, "both key sources"),
        (vec!["derive", "--key", FIPS_KEY, "--variant", "111"], 2, "bad variant"),
        (vec!["derive", "--key", FIPS_KEY, "--profile", "sha2"], 2, "bad profile"),
        (vec!["bench", "--format", "xml"], 2, "bad format"),
        (vec!["bench", "--sizes", "1KB,1KB"], 2, "bad sizes"),
        (vec!["keygen", "--seed", "0xzz"], 2, "bad seed"),
        (vec!["decrypt", p(&enc), "--key", FIPS_KEY, "--profile", "standard"], 2, "profile disagrees with sidecar"),
        (vec!["derive", "--key-file", "/no/such/keys"], 3, "missing key file"),
        (vec!["encrypt", "/no/such/input", "--key", FIPS_KEY], 3, "unreadable input"),
        (vec!["decrypt", p(&orphan), "--key", FIPS_KEY], 3, "missing sidecar"),
        (vec!["derive", "--key-file", p(&bad_hex)], 4, "bad hex in key file"),
        (vec!["derive", "--key", "abc"], 4, "bad hex length"),
        (vec!["derive", "--key", FIPS_KEY, "--variant", "256"], 4, "wrong key length"),
        (vec!["decrypt", p(&truncated), "--key", FIPS_KEY], 4, "truncated ciphertext"),
        (vec!["decrypt", p(&enc), "--key", other_key], 4, "bad padding"),
        (vec!["decrypt", p(&garbled), "--key", FIPS_KEY], 4, "corrupt sidecar"),
    ];
    for (args, expected, what) in cases {
        let out = aesha3(&args);
        assert_eq!(code(&out), expected, "{what}: {}", stderr(&out));
        let err = stderr(&out);
        assert_eq!(err.lines().filter(|l| l.starts_with("error")).count(), 1, "{what}: {err}");
    }
}

#[test]
fn bench_emits_seven_column_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = aesha3(&["bench", "--sizes", "1KB..64KB", "--iters", "100", "--out", p(dir.path())]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    let header = text.lines().find(|l| l.starts_with("| File Size")).expect("sweep table");
    assert_eq!(header.matches('|').count() - 1, 7, "{header}");
    let rows = text.lines().filter(|l| l.starts_with("| ") && l.contains(" KB |")).count();
    assert_eq!(rows, 7);
    assert!(text.contains("trend:"));
    for name in ["keyschedule.md", "keyschedule.csv", "sweep.md", "sweep.csv", "plot.csv"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 7 * 3);
}

#[test]
fn bench_config_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bench.conf");
    fs::write(&cfg, "variants = 128\nproviders = standard,sha3-shake\nsizes = 1KB,2KB\niterations = 50\nreps = 3\n").unwrap();
    let out = aesha3(&["bench", "--config", p(&cfg), "--format", "csv"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("size_bytes,variant,profile,standard_ms,sha3_ms,efficiency,noise"));
    assert_eq!(text.lines().filter(|l| l.starts_with("1024,") || l.starts_with("2048,")).count(), 2);
}

#[test]
fn analyze_and_seeding_are_deterministic() {
    let a = aesha3(&["analyze", "--iters", "100", "--seed", "9", "--format", "csv"]);
    let b = aesha3(&["analyze", "--iters", "100", "--seed", "9", "--format", "csv"]);
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert_eq!(stdout(&a), stdout(&b));
    assert!(stdout(&a).starts_with("test,provider,variant,n,statistic,p_value,verdict,seed"));

    let flag = aesha3(&["keygen", "--variant", "256", "--seed", "42"]);
    let env = Command::new(BIN).args(["keygen", "--variant", "256"]).env("AESHA3_SEED", "42").output().unwrap();
    assert_eq!(code(&env), 0);
    assert_eq!(stdout(&flag), stdout(&env));
    assert_eq!(stdout(&flag).trim().len(), 64);
}
