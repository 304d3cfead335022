use aes::cipher::generic_array::GenericArray;
use aes::cipher::{BlockDecrypt, BlockEncrypt, KeyInit};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use aesha3::aes_core::{decrypt_block, encrypt_block, Variant};
use aesha3::keyschedule::{DerivationProfile, MasterKey};

fn reference<C: KeyInit + BlockEncrypt + BlockDecrypt>(key: &[u8], block: [u8; 16]) -> ([u8; 16], [u8; 16]) {
    let cipher = C::new_from_slice(key).unwrap();
    let mut b = GenericArray::clone_from_slice(&block);
    cipher.encrypt_block(&mut b);
    let ct: [u8; 16] = b.as_slice().try_into().unwrap();
    let mut d = GenericArray::clone_from_slice(&block);
    cipher.decrypt_block(&mut d);
    (ct, d.as_slice().try_into().unwrap())
}

#[test]
fn standard_schedule_matches_reference_cipher() {
    let mut rng = ChaCha20Rng::seed_from_u64(0xAE5);
    for variant in Variant::ALL {
        for _ in 0..2000 {
            let mk = MasterKey::random(variant, &mut rng);
            let mut block = [0u8; 16];
            rng.fill_bytes(&mut block);
            let (ct, pt) = match variant {
                Variant::A128 => reference::<aes::Aes128>(mk.as_bytes(), block),
                Variant::A192 => reference::<aes::Aes192>(mk.as_bytes(), block),
                Variant::A256 => reference::<aes::Aes256>(mk.as_bytes(), block),
            };
            let sched = DerivationProfile::StandardAes.derive(&mk);
            assert_eq!(encrypt_block(&block, &sched), ct, "{variant:?} key {}", mk.to_hex());
            assert_eq!(decrypt_block(&block, &sched), pt, "{variant:?} key {}", mk.to_hex());
        }
    }
}
