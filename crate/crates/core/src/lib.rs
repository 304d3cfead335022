//! AES-128/192/256 with two interchangeable key schedules: the FIPS-197 key
//! expansion and a Keccak-sponge derivation that squeezes every round key out
//! of a single absorb of the master key.
//!
//! Alongside the cipher sit the pieces needed to compare the two schedules:
//! ECB payload and file encryption, a timing harness, and a small randomness
//! and avalanche analysis of the generated subkeys.

pub mod aes_core;
pub mod analysis;
pub mod bench;
pub mod bits;
pub mod cipher_modes;
pub mod cli;
pub mod error;
pub mod keccak;
pub mod keyschedule;

pub use aes_core::{decrypt_block, encrypt_block, Block, RoundKey, RoundKeySchedule, Variant};
pub use bits::BitString;
pub use error::{Error, Result};
pub use keyschedule::{DerivationProfile, MasterKey, SubkeyProvider};
