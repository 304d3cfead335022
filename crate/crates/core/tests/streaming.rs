//! Peak heap use while streaming a large file, measured with a counting allocator.

use std::alloc::{GlobalAlloc, Layout, System};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use aesha3::aes_core::Variant;
use aesha3::cipher_modes::{decrypt_file_to, ecb_encrypt, encrypt_file, encrypt_file_to, DEFAULT_CHUNK_BYTES};
use aesha3::keyschedule::{DerivationProfile, MasterKey};

struct Counting;

static CURRENT: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);
static SERIAL: Mutex<()> = Mutex::new(());

unsafe impl GlobalAlloc for Counting {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let p = System.alloc(layout);
        if !p.is_null() {
            let now = CURRENT.fetch_add(layout.size(), Ordering::SeqCst) + layout.size();
            PEAK.fetch_max(now, Ordering::SeqCst);
        }
        p
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        System.dealloc(ptr, layout);
        CURRENT.fetch_sub(layout.size(), Ordering::SeqCst);
    }
}

#[global_allocator]
static GLOBAL: Counting = Counting;

/// Extra bytes beyond the chunk buffer: output BufWriter, paths, error context.
const OVERHEAD: usize = 32 * 1024;

fn peak_during<T>(f: impl FnOnce() -> T) -> (T, usize) {
    let base = CURRENT.load(Ordering::SeqCst);
    PEAK.store(base, Ordering::SeqCst);
    let out = f();
    (out, PEAK.load(Ordering::SeqCst) - base)
}

#[test]
fn sixteen_megabytes_stream_in_bounded_memory() {
    let _guard = SERIAL.lock().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let plain = dir.path().join("big.bin");
    let mut rng = ChaCha20Rng::seed_from_u64(16);
    {
        let mut w = BufWriter::new(File::create(&plain).unwrap());
        let mut piece = vec![0u8; 1 << 20];
        for _ in 0..16 {
            rng.fill_bytes(&mut piece);
            w.write_all(&piece).unwrap();
        }
        w.write_all(&piece[..5]).unwrap();
    }
    let sched = DerivationProfile::Sha3FullState.derive(&MasterKey::random(Variant::A256, &mut rng));
    let enc = dir.path().join("big.enc");
    let dec = dir.path().join("big.dec");

    let (n, peak) = peak_during(|| encrypt_file_to(&plain, &enc, &sched, DEFAULT_CHUNK_BYTES).unwrap());
    assert_eq!(n, (16 << 20) + 16);
    assert!(peak <= DEFAULT_CHUNK_BYTES + OVERHEAD, "encrypt peak {peak}");

    let (n, peak) = peak_during(|| decrypt_file_to(&enc, &dec, &sched, DEFAULT_CHUNK_BYTES).unwrap());
    assert_eq!(n, (16 << 20) + 5);
    assert!(peak <= DEFAULT_CHUNK_BYTES + OVERHEAD, "decrypt peak {peak}");

    assert_eq!(fs::metadata(&dec).unwrap().len(), fs::metadata(&plain).unwrap().len());
    assert!(fs::read(&dec).unwrap() == fs::read(&plain).unwrap());
}

#[test]
fn streamed_matches_buffered_for_boundary_sizes() {
    let _guard = SERIAL.lock().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(17);
    for variant in Variant::ALL {
        let sched = DerivationProfile::Sha3Shake.derive(&MasterKey::random(variant, &mut rng));
        for size in [0usize, 1, 15, 16, 17, 1024, 1 << 20] {
            let mut data = vec![0u8; size];
            rng.fill_bytes(&mut data);
            let path = dir.path().join(format!("{variant:?}-{size}"));
            fs::write(&path, &data).unwrap();
            let out = encrypt_file(&path, &sched, 4096).unwrap();
            assert!(fs::read(out).unwrap() == ecb_encrypt(&data, &sched), "{variant:?} {size}");
        }
    }
}
