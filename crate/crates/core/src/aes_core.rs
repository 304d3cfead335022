//! The AES round function over GF(2^8), driven by an externally supplied
//! round-key schedule.

use std::cell::Cell;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const BLOCK_BYTES: usize = 16;

pub type Block = [u8; BLOCK_BYTES];

/// AES key size.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    A128,
    A192,
    A256,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::A128, Variant::A192, Variant::A256];

    pub fn key_bits(self) -> usize {
        match self {
            Variant::A128 => 128,
            Variant::A192 => 192,
            Variant::A256 => 256,
        }
    }

    pub fn key_bytes(self) -> usize {
        self.key_bits() / 8
    }

    /// Nr: 10 / 12 / 14.
    pub fn rounds(self) -> usize {
        match self {
            Variant::A128 => 10,
            Variant::A192 => 12,
            Variant::A256 => 14,
        }
    }

    /// Round keys including the whitening key: Nr + 1.
    pub fn round_key_count(self) -> usize {
        self.rounds() + 1
    }

    pub fn from_key_len(len: usize) -> Option<Variant> {
        match len {
            16 => Some(Variant::A128),
            24 => Some(Variant::A192),
            32 => Some(Variant::A256),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Variant::A128 => "AES-128",
            Variant::A192 => "AES-192",
            Variant::A256 => "AES-256",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.key_bits())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().trim_start_matches("AES-").trim_start_matches("aes-").trim_start_matches('A') {
            "128" => Ok(Variant::A128),
            "192" => Ok(Variant::A192),
            "256" => Ok(Variant::A256),
            other => Err(Error::Parse(format!("unknown AES variant {other:?}, expected 128, 192 or 256"))),
        }
    }
}

/// Multiplies by x modulo x^8 + x^4 + x^3 + x + 1.
#[inline(always)]
pub const fn xtime(a: u8) -> u8 {
    (a << 1) ^ (((a >> 7) & 1) * 0x1B)
}

/// Product in GF(2^8) with the AES reduction polynomial.
pub const fn gf_mul(a: u8, b: u8) -> u8 {
    let (mut a, mut b, mut p) = (a, b, 0u8);
    while b != 0 {
        if b & 1 != 0 {
            p ^= a;
        }
        a = xtime(a);
        b >>= 1;
    }
    p
}

/// Multiplicative inverse, with 0 mapped to 0. Computed as a^254.
pub const fn gf_inv(a: u8) -> u8 {
    let mut result = 1u8;
    let mut base = a;
    let mut e = 254u32;
    while e != 0 {
        if e & 1 != 0 {
            result = gf_mul(result, base);
        }
        base = gf_mul(base, base);
        e >>= 1;
    }
    result
}

const fn build_sbox() -> [u8; 256] {
    let mut sbox = [0u8; 256];
    let mut i = 0;
    while i < 256 {
        let b = gf_inv(i as u8);
        sbox[i] = b ^ b.rotate_left(1) ^ b.rotate_left(2) ^ b.rotate_left(3) ^ b.rotate_left(4) ^ 0x63;
        i += 1;
    }
    sbox
}

const fn invert(table: &[u8; 256]) -> [u8; 256] {
    let mut inv = [0u8; 256];
    let mut i = 0;
    while i < 256 {
        inv[table[i] as usize] = i as u8;
        i += 1;
    }
    inv
}

pub const SBOX: [u8; 256] = build_sbox();
pub const INV_SBOX: [u8; 256] = invert(&SBOX);

/// A 128-bit round key in the same column-major layout as [`AesState`].
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct RoundKey(pub [u8; 16]);

impl RoundKey {
    pub fn as_bytes(&self) -> &[u8; 16] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Debug for RoundKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RoundKey({})", self.to_hex())
    }
}

/// Whitening key followed by one key per round.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundKeySchedule {
    variant: Variant,
    keys: Vec<RoundKey>,
}

impl RoundKeySchedule {
    pub fn new(variant: Variant, keys: Vec<RoundKey>) -> Result<Self> {
        if keys.len() != variant.round_key_count() {
            return Err(Error::ScheduleLength {
                variant: variant.label(),
                expected: variant.round_key_count(),
                actual: keys.len(),
            });
        }
        Ok(RoundKeySchedule { variant, keys })
    }

    /// Slices `bytes` into consecutive 16-byte round keys.
    pub fn from_bytes(variant: Variant, bytes: &[u8]) -> Result<Self> {
        if !bytes.len().is_multiple_of(16) {
            return Err(Error::ScheduleLength {
                variant: variant.label(),
                expected: variant.round_key_count(),
                actual: bytes.len() / 16,
            });
        }
        let keys = bytes.chunks_exact(16).map(|c| RoundKey(c.try_into().unwrap())).collect();
        Self::new(variant, keys)
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn keys(&self) -> &[RoundKey] {
        &self.keys
    }

    pub fn total_bits(&self) -> usize {
        self.keys.len() * 128
    }

    /// Round keys concatenated in order.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.keys.iter().flat_map(|k| k.0).collect()
    }
}

/// Sixteen bytes viewed as a 4×4 matrix; byte `i` sits at row `i % 4`, column `i / 4`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct AesState([u8; 16]);

impl fmt::Debug for AesState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AesState({})", hex::encode(self.0))
    }
}

impl AesState {
    pub fn from_block(block: Block) -> Self {
        AesState(block)
    }

    pub fn to_block(self) -> Block {
        self.0
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.0[row + 4 * col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: u8) {
        self.0[row + 4 * col] = value;
    }

    pub fn column(&self, col: usize) -> [u8; 4] {
        self.0[4 * col..4 * col + 4].try_into().unwrap()
    }

    #[inline(always)]
    pub fn sub_bytes(self) -> Self {
        AesState(self.0.map(|b| SBOX[b as usize]))
    }

    #[inline(always)]
    pub fn inv_sub_bytes(self) -> Self {
        AesState(self.0.map(|b| INV_SBOX[b as usize]))
    }

    /// Rotates row r left by r positions.
    #[inline(always)]
    pub fn shift_rows(self) -> Self {
        let s = self.0;
        let mut out = [0u8; 16];
        for c in 0..4 {
            for r in 0..4 {
                out[r + 4 * c] = s[r + 4 * ((c + r) % 4)];
            }
        }
        AesState(out)
    }

    #[inline(always)]
    pub fn inv_shift_rows(self) -> Self {
        let s = self.0;
        let mut out = [0u8; 16];
        for c in 0..4 {
            for r in 0..4 {
                out[r + 4 * ((c + r) % 4)] = s[r + 4 * c];
            }
        }
        AesState(out)
    }

    #[inline(always)]
    pub fn mix_columns(self) -> Self {
        let mut s = self.0;
        for col in s.chunks_exact_mut(4) {
            let [a0, a1, a2, a3] = [col[0], col[1], col[2], col[3]];
            let all = a0 ^ a1 ^ a2 ^ a3;
            col[0] = a0 ^ all ^ xtime(a0 ^ a1);
            col[1] = a1 ^ all ^ xtime(a1 ^ a2);
            col[2] = a2 ^ all ^ xtime(a2 ^ a3);
            col[3] = a3 ^ all ^ xtime(a3 ^ a0);
        }
        AesState(s)
    }

    #[inline(always)]
    pub fn inv_mix_columns(self) -> Self {
        // (0E,0B,0D,09) = (02,03,01,01) · (05,00,04,00)
        let mut s = self.0;
        for col in s.chunks_exact_mut(4) {
            let u = xtime(xtime(col[0] ^ col[2]));
            let v = xtime(xtime(col[1] ^ col[3]));
            col[0] ^= u;
            col[1] ^= v;
            col[2] ^= u;
            col[3] ^= v;
        }
        AesState(s).mix_columns()
    }

    #[inline(always)]
    pub fn add_round_key(self, key: &RoundKey) -> Self {
        let mut s = self.0;
        for (b, k) in s.iter_mut().zip(&key.0) {
            *b ^= k;
        }
        AesState(s)
    }
}

thread_local! {
    static BLOCKS_ENCRYPTED: Cell<u64> = const { Cell::new(0) };
}

/// Number of `encrypt_block` calls made on the current thread.
pub fn encrypted_block_count() -> u64 {
    BLOCKS_ENCRYPTED.with(Cell::get)
}

pub fn encrypt_block(block: &Block, sched: &RoundKeySchedule) -> Block {
    BLOCKS_ENCRYPTED.with(|c| c.set(c.get() + 1));
    let keys = sched.keys();
    let last = keys.len() - 1;
    let mut s = AesState::from_block(*block).add_round_key(&keys[0]);
    for key in &keys[1..last] {
        s = s.sub_bytes().shift_rows().mix_columns().add_round_key(key);
    }
    s.sub_bytes().shift_rows().add_round_key(&keys[last]).to_block()
}

pub fn decrypt_block(block: &Block, sched: &RoundKeySchedule) -> Block {
    let keys = sched.keys();
    let last = keys.len() - 1;
    let mut s = AesState::from_block(*block).add_round_key(&keys[last]).inv_shift_rows().inv_sub_bytes();
    for key in keys[1..last].iter().rev() {
        s = s.add_round_key(key).inv_mix_columns().inv_shift_rows().inv_sub_bytes();
    }
    s.add_round_key(&keys[0]).to_block()
}
