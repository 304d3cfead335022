use std::collections::HashSet;

use proptest::prelude::*;

use aesha3::aes_core::Variant;
use aesha3::analysis;
use aesha3::cipher_modes::{ecb_decrypt, ecb_encrypt};
use aesha3::keyschedule::{expand_key_words, DerivationProfile, MasterKey};

fn words(hex: &[&str]) -> Vec<u32> {
    hex.iter().map(|w| u32::from_str_radix(w, 16).unwrap()).collect()
}

#[test]
fn expansion_traces() {
    let cases: [(&str, usize, [&str; 4], [&str; 4]); 3] = [
        (
            "2b7e151628aed2a6abf7158809cf4f3c",
            4,
            ["a0fafe17", "88542cb1", "23a33939", "2a6c7605"],
            ["d014f9a8", "c9ee2589", "e13f0cc8", "b6630ca6"],
        ),
        (
            "8e73b0f7da0e6452c810f32b809079e562f8ead2522c6b7b",
            6,
            ["fe0c91f7", "2402f5a5", "ec12068e", "6c827f6b"],
            ["e98ba06f", "448c773c", "8ecc7204", "01002202"],
        ),
        (
            "603deb1015ca71be2b73aef0857d77811f352c073b6108d72d9810a30914dff4",
            8,
            ["9ba35411", "8e6925af", "a51a8b5f", "2067fcde"],
            ["fe4890d1", "e6188d0b", "046df344", "706c631e"],
        ),
    ];
    for (key, nk, first, last) in cases {
        let mk = MasterKey::from_hex(key).unwrap();
        let w = expand_key_words(&mk);
        assert_eq!(w.len(), 4 * mk.variant().round_key_count());
        assert_eq!(w[nk..nk + 4], words(&first)[..], "{key}");
        assert_eq!(w[w.len() - 4..], words(&last)[..], "{key}");
        let sched = DerivationProfile::StandardAes.derive(&mk);
        assert_eq!(sched.keys()[0].to_hex(), key[..32]);
    }
}

#[test]
fn sha3_schedules_have_distinct_keys_and_no_whitening_leak() {
    for variant in Variant::ALL {
        for profile in [DerivationProfile::Sha3FullState, DerivationProfile::Sha3Shake] {
            for key in analysis::sample_keys(variant, 10_000, 11) {
                let sched = profile.derive(&key);
                let distinct: HashSet<_> = sched.keys().iter().map(|k| k.0).collect();
                assert_eq!(distinct.len(), sched.keys().len(), "{profile} {}", key.to_hex());
                assert_ne!(sched.keys()[0].0[..], key.as_bytes()[..16], "{profile} {}", key.to_hex());
            }
        }
    }
}

#[test]
fn whitening_distance_separates_providers() {
    for variant in Variant::ALL {
        let keys = analysis::sample_keys(variant, 500, 12);
        assert_eq!(analysis::whitening_distance(DerivationProfile::StandardAes, &keys), 0.0);
        for profile in [DerivationProfile::Sha3FullState, DerivationProfile::Sha3Shake] {
            let d = analysis::whitening_distance(profile, &keys);
            assert!((60.0..=68.0).contains(&d), "{profile} {variant:?}: {d}");
        }
    }
}

#[test]
fn standard_avalanche_is_weak_in_whitening_region() {
    let m = analysis::avalanche_matrix(DerivationProfile::StandardAes, Variant::A128, 200, 13).unwrap();
    for bit in 0..128 {
        assert_eq!(m.region_rate(bit, 0), 1.0 / 128.0);
    }
    assert!(m.mean_rate() < 0.45, "{}", m.mean_rate());
    let s = analysis::avalanche_matrix(DerivationProfile::Sha3FullState, Variant::A128, 200, 13).unwrap();
    assert!(s.all_within(0.45, 0.55));
    for bit in 0..128 {
        let r = s.region_rate(bit, 0);
        assert!((0.4..=0.6).contains(&r), "bit {bit}: {r}");
    }
}

fn variant_strategy() -> impl Strategy<Value = Variant> {
    prop_oneof![Just(Variant::A128), Just(Variant::A192), Just(Variant::A256)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn every_combination_round_trips(
        variant in variant_strategy(),
        profile_idx in 0usize..3,
        seed in any::<[u8; 32]>(),
        payload in proptest::collection::vec(any::<u8>(), 0..600),
    ) {
        let mk = MasterKey::new(variant, &seed[..variant.key_bytes()]).unwrap();
        let sched = DerivationProfile::ALL[profile_idx].derive(&mk);
        let ct = ecb_encrypt(&payload, &sched);
        prop_assert_eq!(ct.len(), (payload.len() / 16 + 1) * 16);
        prop_assert_eq!(ecb_decrypt(&ct, &sched).unwrap(), payload);
    }

    #[test]
    fn one_bit_key_change_moves_sha3_schedule(
        variant in variant_strategy(),
        seed in any::<[u8; 32]>(),
        bit in 0usize..128,
    ) {
        let mk = MasterKey::new(variant, &seed[..variant.key_bytes()]).unwrap();
        let flipped = mk.with_bit_flipped(bit % variant.key_bits());
        for profile in [DerivationProfile::Sha3FullState, DerivationProfile::Sha3Shake] {
            let a = profile.derive(&mk).to_bytes();
            let b = profile.derive(&flipped).to_bytes();
            let changed: u32 = a.iter().zip(&b).map(|(x, y)| (x ^ y).count_ones()).sum();
            let frac = changed as f64 / (a.len() * 8) as f64;
            prop_assert!((0.4..=0.6).contains(&frac), "{} {}", profile, frac);
        }
    }
}
