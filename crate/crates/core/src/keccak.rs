//! Keccak-f\[1600\] and a byte-oriented sponge driver.
//!
//! Lanes are stored row-major, `lanes[x + 5 * y]`, and serialize little-endian
//! with lane (x, y) at byte offset `8 * (5 * y + x)`, the FIPS-202 convention.
//! The same serialization is what the full-state squeeze emits.

use crate::bits::BitString;
use crate::error::{Error, Result};

/// Width of the permutation in bits.
pub const STATE_BITS: usize = 1600;
/// Width of the permutation in bytes.
pub const STATE_BYTES: usize = STATE_BITS / 8;
/// Rounds of Keccak-f\[1600\].
pub const ROUNDS: usize = 24;

/// Round constants for ι, produced by the degree-8 LFSR x^8 + x^6 + x^5 + x^4 + 1.
pub const ROUND_CONSTANTS: [u64; ROUNDS] = round_constants();

/// ρ rotation offsets, indexed `[x + 5 * y]`.
pub const RHO_OFFSETS: [u32; 25] = rho_offsets();

const fn lfsr_bit(t: usize) -> u64 {
    if t.is_multiple_of(255) {
        return 1;
    }
    let mut r: u16 = 0x01;
    let mut i = 0;
    while i < t % 255 {
        r <<= 1;
        if r & 0x100 != 0 {
            r ^= 0x171;
        }
        i += 1;
    }
    (r & 1) as u64
}

const fn round_constants() -> [u64; ROUNDS] {
    let mut rc = [0u64; ROUNDS];
    let mut round = 0;
    while round < ROUNDS {
        let mut j = 0;
        while j <= 6 {
            rc[round] |= lfsr_bit(j + 7 * round) << ((1usize << j) - 1);
            j += 1;
        }
        round += 1;
    }
    rc
}

const fn rho_offsets() -> [u32; 25] {
    let mut offsets = [0u32; 25];
    let (mut x, mut y) = (1usize, 0usize);
    let mut t = 0;
    while t < 24 {
        offsets[x + 5 * y] = (((t + 1) * (t + 2) / 2) % 64) as u32;
        let nx = y;
        let ny = (2 * x + 3 * y) % 5;
        x = nx;
        y = ny;
        t += 1;
    }
    offsets
}

/// The 5×5 grid of 64-bit lanes.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct KeccakState {
    lanes: [u64; 25],
}

impl std::fmt::Debug for KeccakState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KeccakState").field("lane00", &format_args!("{:016x}", self.lanes[0])).finish()
    }
}

impl KeccakState {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_lanes(lanes: [u64; 25]) -> Self {
        KeccakState { lanes }
    }

    pub fn lanes(&self) -> &[u64; 25] {
        &self.lanes
    }

    /// Lane at column `x`, row `y`.
    pub fn lane(&self, x: usize, y: usize) -> u64 {
        self.lanes[x + 5 * y]
    }

    pub fn set_lane(&mut self, x: usize, y: usize, value: u64) {
        self.lanes[x + 5 * y] = value;
    }

    pub fn from_bytes(bytes: &[u8; STATE_BYTES]) -> Self {
        let mut lanes = [0u64; 25];
        for (lane, chunk) in lanes.iter_mut().zip(bytes.chunks_exact(8)) {
            *lane = u64::from_le_bytes(chunk.try_into().unwrap());
        }
        KeccakState { lanes }
    }

    pub fn to_bytes(&self) -> [u8; STATE_BYTES] {
        let mut out = [0u8; STATE_BYTES];
        for (chunk, lane) in out.chunks_exact_mut(8).zip(&self.lanes) {
            chunk.copy_from_slice(&lane.to_le_bytes());
        }
        out
    }

    /// XORs `data` into the serialized state starting at byte 0.
    fn xor_bytes(&mut self, data: &[u8]) {
        debug_assert!(data.len() <= STATE_BYTES);
        for (i, &b) in data.iter().enumerate() {
            self.lanes[i / 8] ^= u64::from(b) << (8 * (i % 8));
        }
    }

    fn xor_byte(&mut self, offset: usize, value: u8) {
        self.lanes[offset / 8] ^= u64::from(value) << (8 * (offset % 8));
    }

    /// Writes the first `out.len()` serialized bytes into `out`.
    pub fn write_bytes(&self, out: &mut [u8]) {
        assert!(out.len() <= STATE_BYTES, "at most {STATE_BYTES} bytes");
        for (chunk, lane) in out.chunks_mut(8).zip(&self.lanes) {
            chunk.copy_from_slice(&lane.to_le_bytes()[..chunk.len()]);
        }
    }

    /// Applies Keccak-f\[1600\] in place.
    #[inline]
    pub fn permute(&mut self) {
        permute_traced(self, |_, _| {});
    }

    /// Hamming distance between two states, out of 1600.
    pub fn bit_distance(&self, other: &KeccakState) -> u32 {
        self.lanes.iter().zip(&other.lanes).map(|(a, b)| (a ^ b).count_ones()).sum()
    }
}

/// Keccak-f\[1600\] as a pure function.
pub fn keccak_f(state: KeccakState) -> KeccakState {
    let mut s = state;
    s.permute();
    s
}

/// One of the five step mappings of a Keccak round.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    Theta,
    Rho,
    Pi,
    Chi,
    Iota,
}

/// Keccak-f\[1600\] that reports every step mapping applied as `(round, step)`.
#[inline(always)]
pub fn permute_traced(state: &mut KeccakState, mut observe: impl FnMut(usize, Step)) {
    let a = &mut state.lanes;
    for (round, &rc) in ROUND_CONSTANTS.iter().enumerate() {
        theta(a);
        observe(round, Step::Theta);
        rho(a);
        observe(round, Step::Rho);
        pi(a);
        observe(round, Step::Pi);
        chi(a);
        observe(round, Step::Chi);
        iota(a, rc);
        observe(round, Step::Iota);
    }
}

#[inline(always)]
pub(crate) fn theta(a: &mut [u64; 25]) {
    let mut c = [0u64; 5];
    for x in 0..5 {
        c[x] = a[x] ^ a[x + 5] ^ a[x + 10] ^ a[x + 15] ^ a[x + 20];
    }
    for x in 0..5 {
        let d = c[(x + 4) % 5] ^ c[(x + 1) % 5].rotate_left(1);
        for y in 0..5 {
            a[x + 5 * y] ^= d;
        }
    }
}

#[inline(always)]
pub(crate) fn rho(a: &mut [u64; 25]) {
    for (lane, &r) in a.iter_mut().zip(&RHO_OFFSETS) {
        *lane = lane.rotate_left(r);
    }
}

#[inline(always)]
pub(crate) fn pi(a: &mut [u64; 25]) {
    let src = *a;
    for y in 0..5 {
        for x in 0..5 {
            a[x + 5 * y] = src[(x + 3 * y) % 5 + 5 * x];
        }
    }
}

#[inline(always)]
pub(crate) fn chi(a: &mut [u64; 25]) {
    for y in 0..5 {
        let row = [a[5 * y], a[5 * y + 1], a[5 * y + 2], a[5 * y + 3], a[5 * y + 4]];
        for x in 0..5 {
            a[x + 5 * y] = row[x] ^ (!row[(x + 1) % 5] & row[(x + 2) % 5]);
        }
    }
}

#[inline(always)]
pub(crate) fn iota(a: &mut [u64; 25], rc: u64) {
    a[0] ^= rc;
}

/// Rate/capacity split and domain-separation suffix of a sponge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SpongeParams {
    rate_bits: usize,
    capacity_bits: usize,
    domain_suffix: u8,
}

impl SpongeParams {
    /// SHA3-256: rate 1088, suffix `01`.
    pub const SHA3_256: SpongeParams = SpongeParams { rate_bits: 1088, capacity_bits: 512, domain_suffix: 0x06 };
    /// SHAKE256: rate 1088, suffix `1111`.
    pub const SHAKE256: SpongeParams = SpongeParams { rate_bits: 1088, capacity_bits: 512, domain_suffix: 0x1F };

    /// `domain_suffix` holds the suffix bits followed by the first `1` of
    /// pad10*1, least significant bit first (0x06 for SHA3, 0x1F for SHAKE).
    pub fn new(rate_bits: usize, capacity_bits: usize, domain_suffix: u8) -> Result<Self> {
        if rate_bits + capacity_bits != STATE_BITS {
            return Err(Error::SpongeParams(format!(
                "rate {rate_bits} + capacity {capacity_bits} must equal {STATE_BITS}"
            )));
        }
        if rate_bits == 0 || rate_bits >= STATE_BITS || !rate_bits.is_multiple_of(8) {
            return Err(Error::SpongeParams(format!(
                "rate {rate_bits} must be a multiple of 8 strictly between 0 and {STATE_BITS}"
            )));
        }
        if domain_suffix == 0 {
            return Err(Error::SpongeParams("domain suffix must carry the leading pad bit".into()));
        }
        Ok(SpongeParams { rate_bits, capacity_bits, domain_suffix })
    }

    pub fn rate_bits(&self) -> usize {
        self.rate_bits
    }

    pub fn capacity_bits(&self) -> usize {
        self.capacity_bits
    }

    pub fn rate_bytes(&self) -> usize {
        self.rate_bits / 8
    }

    pub fn domain_suffix(&self) -> u8 {
        self.domain_suffix
    }
}

impl Default for SpongeParams {
    fn default() -> Self {
        SpongeParams::SHAKE256
    }
}

/// How much of the state each squeeze step reads.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SqueezeProfile {
    /// Read `rate_bits` per step, as in the standard sponge.
    RateOnly,
    /// Read the entire 1600-bit state per step.
    FullState,
}

/// A sponge that has finished absorbing, with a count of permutation calls.
#[derive(Clone, Debug)]
pub struct Sponge {
    state: KeccakState,
    params: SpongeParams,
    permutations: usize,
}

impl Sponge {
    /// Pads `message` with the domain suffix and pad10*1 and absorbs it block by block.
    pub fn absorb(message: &[u8], params: SpongeParams) -> Self {
        let rate = params.rate_bytes();
        let mut state = KeccakState::zero();
        let mut permutations = 0;

        let mut blocks = message.chunks_exact(rate);
        for block in &mut blocks {
            state.xor_bytes(block);
            state.permute();
            permutations += 1;
        }

        // Final block always exists, even if the message filled the last one.
        let tail = blocks.remainder();
        state.xor_bytes(tail);
        state.xor_byte(tail.len(), params.domain_suffix);
        state.xor_byte(rate - 1, 0x80);
        state.permute();
        permutations += 1;

        Sponge { state, params, permutations }
    }

    pub fn state(&self) -> &KeccakState {
        &self.state
    }

    pub fn params(&self) -> SpongeParams {
        self.params
    }

    pub fn permutation_count(&self) -> usize {
        self.permutations
    }

    pub fn squeeze(&self, n_bits: usize, profile: SqueezeProfile) -> Result<BitString> {
        squeeze(&self.state, n_bits, &self.params, profile)
    }
}

/// Absorbs `message` and returns the resulting state.
pub fn absorb(message: &[u8], params: &SpongeParams) -> KeccakState {
    Sponge::absorb(message, *params).state
}

/// Squeezes `n_bits` from an absorbed state.
///
/// `RateOnly` emits the rate portion of the state, permuting between reads.
/// `FullState` emits the whole serialized state as Y0, then `keccak_f` of it as
/// Y1, and so on; Y0 is taken without an extra permutation.
pub fn squeeze(state: &KeccakState, n_bits: usize, params: &SpongeParams, profile: SqueezeProfile) -> Result<BitString> {
    if n_bits == 0 {
        return Err(Error::ZeroOutputLength);
    }
    let mut out = vec![0u8; n_bits.div_ceil(8)];
    squeeze_into(state, &mut out, params, profile);
    Ok(BitString::from_bytes_truncated(out, n_bits))
}

/// Fills `out` with squeezed bytes; the byte-level core of [`squeeze`].
pub fn squeeze_into(state: &KeccakState, out: &mut [u8], params: &SpongeParams, profile: SqueezeProfile) {
    let block = match profile {
        SqueezeProfile::RateOnly => params.rate_bytes(),
        SqueezeProfile::FullState => STATE_BYTES,
    };
    let mut s = *state;
    let mut chunks = out.chunks_mut(block).peekable();
    while let Some(chunk) = chunks.next() {
        s.write_bytes(chunk);
        if chunks.peek().is_some() {
            s.permute();
        }
    }
}

pub fn sha3_256(message: &[u8]) -> [u8; 32] {
    let params = SpongeParams::SHA3_256;
    let state = absorb(message, &params);
    let mut digest = [0u8; 32];
    state.write_bytes(&mut digest);
    digest
}

pub fn shake256_xof(message: &[u8], n_bits: usize) -> Result<BitString> {
    let params = SpongeParams::SHAKE256;
    squeeze(&absorb(message, &params), n_bits, &params, SqueezeProfile::RateOnly)
}
