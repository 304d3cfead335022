//! Subkey providers: FIPS-197 key expansion and sponge-derived schedules.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;

use crate::aes_core::{RoundKey, RoundKeySchedule, Variant, SBOX};
use crate::error::{Error, Result};
use crate::keccak::{self, SpongeParams, SqueezeProfile};

/// Secret input to a key schedule.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MasterKey {
    variant: Variant,
    bytes: Vec<u8>,
}

impl fmt::Debug for MasterKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MasterKey({}, {})", self.variant.label(), hex::encode(&self.bytes))
    }
}

impl MasterKey {
    pub fn new(variant: Variant, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != variant.key_bytes() {
            return Err(Error::KeyLength { expected: variant.key_bytes(), actual: bytes.len() });
        }
        Ok(MasterKey { variant, bytes: bytes.to_vec() })
    }

    /// Picks the variant from the key length.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let variant = Variant::from_key_len(bytes.len()).ok_or(Error::KeyLength { expected: 16, actual: bytes.len() })?;
        Self::new(variant, bytes)
    }

    /// Parses 32, 48 or 64 lowercase hex characters.
    pub fn from_hex(text: &str) -> Result<Self> {
        if !matches!(text.len(), 32 | 48 | 64) {
            return Err(Error::KeyHexLength(text.len()));
        }
        if let Some(c) = text.chars().find(|c| !matches!(c, '0'..='9' | 'a'..='f')) {
            return Err(Error::KeyHex(format!("unexpected character {c:?}")));
        }
        let bytes = hex::decode(text).map_err(|e| Error::KeyHex(e.to_string()))?;
        Self::from_bytes(&bytes)
    }

    pub fn random(variant: Variant, rng: &mut impl Rng) -> Self {
        let mut bytes = vec![0u8; variant.key_bytes()];
        rng.fill(&mut bytes[..]);
        MasterKey { variant, bytes }
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.bytes)
    }

    /// Copy with bit `i` (MSB-first) inverted.
    pub fn with_bit_flipped(&self, i: usize) -> Self {
        let mut k = self.clone();
        k.bytes[i / 8] ^= 0x80 >> (i % 8);
        k
    }
}

/// Which key schedule produces the round keys.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DerivationProfile {
    /// FIPS-197 key expansion.
    StandardAes,
    /// SHAKE256-geometry sponge, full 1600-bit state per squeeze.
    Sha3FullState,
    /// SHAKE256 output stream.
    Sha3Shake,
}

impl DerivationProfile {
    pub const ALL: [DerivationProfile; 3] =
        [DerivationProfile::StandardAes, DerivationProfile::Sha3FullState, DerivationProfile::Sha3Shake];

    pub fn name(self) -> &'static str {
        match self {
            DerivationProfile::StandardAes => "standard",
            DerivationProfile::Sha3FullState => "sha3-full",
            DerivationProfile::Sha3Shake => "sha3-shake",
        }
    }

    pub fn is_sha3(self) -> bool {
        !matches!(self, DerivationProfile::StandardAes)
    }

    /// Column label as used in result tables, e.g. `AESHA3-128`.
    pub fn column_label(self, variant: Variant) -> String {
        match self {
            DerivationProfile::StandardAes => variant.label().to_string(),
            DerivationProfile::Sha3FullState => format!("AESHA3-{}", variant.key_bits()),
            DerivationProfile::Sha3Shake => format!("AESHA3-{} (shake)", variant.key_bits()),
        }
    }

    pub fn provider(self) -> &'static dyn SubkeyProvider {
        match self {
            DerivationProfile::StandardAes => &StandardExpansion,
            DerivationProfile::Sha3FullState => &SHA3_FULL_STATE,
            DerivationProfile::Sha3Shake => &SHA3_SHAKE,
        }
    }

    pub fn derive(self, mk: &MasterKey) -> RoundKeySchedule {
        self.provider().derive(mk)
    }
}

impl fmt::Display for DerivationProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DerivationProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DerivationProfile::ALL
            .into_iter()
            .find(|p| p.name() == s.trim())
            .ok_or_else(|| Error::Parse(format!("unknown profile {s:?}, expected standard, sha3-full or sha3-shake")))
    }
}

/// A source of round-key schedules.
pub trait SubkeyProvider: Sync {
    fn profile(&self) -> DerivationProfile;
    fn derive(&self, mk: &MasterKey) -> RoundKeySchedule;
}

/// FIPS-197 word-by-word expansion.
#[derive(Clone, Copy, Debug, Default)]
pub struct StandardExpansion;

impl SubkeyProvider for StandardExpansion {
    fn profile(&self) -> DerivationProfile {
        DerivationProfile::StandardAes
    }

    fn derive(&self, mk: &MasterKey) -> RoundKeySchedule {
        expand_key_standard(mk)
    }
}

/// Sponge-derived schedule: absorb the raw key bytes, squeeze every round key at once.
#[derive(Clone, Copy, Debug)]
pub struct Sha3Derivation {
    profile: DerivationProfile,
    params: SpongeParams,
}

const SHA3_FULL_STATE: Sha3Derivation =
    Sha3Derivation { profile: DerivationProfile::Sha3FullState, params: SpongeParams::SHAKE256 };
const SHA3_SHAKE: Sha3Derivation =
    Sha3Derivation { profile: DerivationProfile::Sha3Shake, params: SpongeParams::SHAKE256 };

impl Sha3Derivation {
    pub fn new(profile: DerivationProfile) -> Result<Self> {
        Self::with_params(profile, SpongeParams::SHAKE256)
    }

    pub fn with_params(profile: DerivationProfile, params: SpongeParams) -> Result<Self> {
        if !profile.is_sha3() {
            return Err(Error::WrongProvider(profile.name()));
        }
        Ok(Sha3Derivation { profile, params })
    }

    pub fn params(&self) -> SpongeParams {
        self.params
    }

    fn squeeze_profile(&self) -> SqueezeProfile {
        match self.profile {
            DerivationProfile::Sha3FullState => SqueezeProfile::FullState,
            _ => SqueezeProfile::RateOnly,
        }
    }

    /// Number of squeeze blocks consumed for `variant`.
    pub fn blocks_consumed(&self, variant: Variant) -> usize {
        let block_bits = match self.squeeze_profile() {
            SqueezeProfile::FullState => keccak::STATE_BITS,
            SqueezeProfile::RateOnly => self.params.rate_bits(),
        };
        subkey_bits_required(variant).div_ceil(block_bits)
    }
}

impl SubkeyProvider for Sha3Derivation {
    fn profile(&self) -> DerivationProfile {
        self.profile
    }

    fn derive(&self, mk: &MasterKey) -> RoundKeySchedule {
        let variant = mk.variant();
        let state = keccak::absorb(mk.as_bytes(), &self.params);
        let mut stream = [0u8; 240];
        let stream = &mut stream[..subkey_bits_required(variant) / 8];
        keccak::squeeze_into(&state, stream, &self.params, self.squeeze_profile());
        RoundKeySchedule::from_bytes(variant, stream).expect("stream length matches variant")
    }
}

/// Round-key bits needed for whitening plus every round: 1408 / 1664 / 1920.
pub fn subkey_bits_required(variant: Variant) -> usize {
    variant.round_key_count() * 128
}

const fn rcon_table() -> [u8; 11] {
    let mut rcon = [0u8; 11];
    let mut v = 1u8;
    let mut i = 1;
    while i < 11 {
        rcon[i] = v;
        v = crate::aes_core::xtime(v);
        i += 1;
    }
    rcon
}

const RCON: [u8; 11] = rcon_table();

fn sub_word(w: u32) -> u32 {
    u32::from_be_bytes(w.to_be_bytes().map(|b| SBOX[b as usize]))
}

fn expand_words_into(mk: &MasterKey, w: &mut [u32; 60]) -> usize {
    let variant = mk.variant();
    let nk = variant.key_bytes() / 4;
    let total = 4 * variant.round_key_count();
    for (dst, c) in w.iter_mut().zip(mk.as_bytes().chunks_exact(4)) {
        *dst = u32::from_be_bytes(c.try_into().unwrap());
    }
    for i in nk..total {
        let mut temp = w[i - 1];
        if i % nk == 0 {
            temp = sub_word(temp.rotate_left(8)) ^ (u32::from(RCON[i / nk]) << 24);
        } else if nk > 6 && i % nk == 4 {
            temp = sub_word(temp);
        }
        w[i] = w[i - nk] ^ temp;
    }
    total
}

/// The 44 / 52 / 60 expanded 32-bit words, big-endian within each word.
pub fn expand_key_words(mk: &MasterKey) -> Vec<u32> {
    let mut w = [0u32; 60];
    let n = expand_words_into(mk, &mut w);
    w[..n].to_vec()
}

pub fn expand_key_standard(mk: &MasterKey) -> RoundKeySchedule {
    let mut w = [0u32; 60];
    let n = expand_words_into(mk, &mut w);
    let keys = w[..n]
        .chunks_exact(4)
        .map(|ws| {
            let mut k = [0u8; 16];
            for (dst, w) in k.chunks_exact_mut(4).zip(ws) {
                dst.copy_from_slice(&w.to_be_bytes());
            }
            RoundKey(k)
        })
        .collect();
    RoundKeySchedule::new(mk.variant(), keys).expect("expansion yields Nr + 1 round keys")
}

/// Sponge-derived schedule for one of the SHA-3 profiles.
pub fn derive_subkeys_sha3(mk: &MasterKey, profile: DerivationProfile) -> Result<RoundKeySchedule> {
    Ok(Sha3Derivation::new(profile)?.derive(mk))
}

/// One lowercase-hex key per line; blank lines are skipped.
pub fn parse_key_file(text: &str, origin: &str) -> Result<Vec<MasterKey>> {
    let mut keys = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim_end();
        if line.is_empty() {
            continue;
        }
        let key = MasterKey::from_hex(line).map_err(|e| Error::KeyFile {
            path: origin.to_string(),
            line: idx + 1,
            reason: e.to_string(),
        })?;
        keys.push(key);
    }
    if keys.is_empty() {
        return Err(Error::KeyFile { path: origin.to_string(), line: 0, reason: "no keys found".into() });
    }
    Ok(keys)
}

pub fn read_key_file(path: &Path) -> Result<Vec<MasterKey>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io_path("reading key file", path, e))?;
    parse_key_file(&text, &path.display().to_string())
}
