//! Cross-checks against the RustCrypto `keccak` and `sha3` crates.

use aesha3::keccak::{self, KeccakState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha3::digest::{ExtendableOutput, Update, XofReader};
use sha3::{Digest, Sha3_256, Shake256};

#[test]
fn permutation_matches_reference_on_random_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..500 {
        let mut lanes = [0u64; 25];
        rng.fill(&mut lanes[..]);
        let ours = keccak::keccak_f(KeccakState::from_lanes(lanes));
        keccak_ref::f1600(&mut lanes);
        assert_eq!(ours.lanes(), &lanes);
    }
}

#[test]
fn zero_state_against_reference() {
    let mut lanes = [0u64; 25];
    keccak_ref::f1600(&mut lanes);
    assert_eq!(lanes[0], 0xF125_8F79_40E1_DDE7);
    let ours = keccak::keccak_f(KeccakState::zero());
    assert_eq!(ours.lanes(), &lanes);
}

#[test]
fn sha3_256_matches_reference_across_lengths() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for len in (0..300).chain([1000, 4096]) {
        let mut msg = vec![0u8; len];
        rng.fill(&mut msg[..]);
        let expected: [u8; 32] = Sha3_256::digest(&msg).into();
        assert_eq!(keccak::sha3_256(&msg), expected, "length {len}");
    }
}

#[test]
fn shake256_matches_reference_stream() {
    for (msg, n_bytes) in [(&b""[..], 32usize), (b"abc", 200), (&[0x5a; 136], 500)] {
        let mut h = Shake256::default();
        h.update(msg);
        let mut expected = vec![0u8; n_bytes];
        h.finalize_xof().read(&mut expected);
        let ours = keccak::shake256_xof(msg, n_bytes * 8).unwrap();
        assert_eq!(ours.as_bytes(), &expected[..]);
    }
}
