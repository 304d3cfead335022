//! ECB over whole payloads and streamed files, with PKCS#7 padding.
//!
//! ECB leaks equal plaintext blocks as equal ciphertext blocks. It is here
//! because the timing experiments encrypt that way, not as a recommendation.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::aes_core::{decrypt_block, encrypt_block, Block, RoundKeySchedule, Variant, BLOCK_BYTES};
use crate::error::{Error, Result};
use crate::keyschedule::DerivationProfile;

pub const DEFAULT_CHUNK_BYTES: usize = 64 * 1024;

/// PKCS#7: append `n` copies of `n`, 1 ≤ n ≤ 16.
pub fn pad(data: &[u8]) -> Vec<u8> {
    let n = BLOCK_BYTES - data.len() % BLOCK_BYTES;
    let mut out = Vec::with_capacity(data.len() + n);
    out.extend_from_slice(data);
    out.resize(data.len() + n, n as u8);
    out
}

/// Strips PKCS#7 padding, returning the unpadded prefix.
pub fn unpad(data: &[u8]) -> Result<&[u8]> {
    if data.is_empty() || !data.len().is_multiple_of(BLOCK_BYTES) {
        return Err(Error::MalformedCiphertext(format!(
            "padded length {} is not a positive multiple of {BLOCK_BYTES}",
            data.len()
        )));
    }
    let n = *data.last().unwrap() as usize;
    if n == 0 || n > BLOCK_BYTES || data[data.len() - n..].iter().any(|&b| b as usize != n) {
        return Err(Error::MalformedPadding);
    }
    Ok(&data[..data.len() - n])
}

fn encrypt_in_place(buf: &mut [u8], sched: &RoundKeySchedule) {
    for chunk in buf.chunks_exact_mut(BLOCK_BYTES) {
        let block: &mut Block = chunk.try_into().unwrap();
        *block = encrypt_block(block, sched);
    }
}

fn decrypt_in_place(buf: &mut [u8], sched: &RoundKeySchedule) {
    for chunk in buf.chunks_exact_mut(BLOCK_BYTES) {
        let block: &mut Block = chunk.try_into().unwrap();
        *block = decrypt_block(block, sched);
    }
}

pub fn ecb_encrypt(data: &[u8], sched: &RoundKeySchedule) -> Vec<u8> {
    let mut out = pad(data);
    encrypt_in_place(&mut out, sched);
    out
}

pub fn ecb_decrypt(data: &[u8], sched: &RoundKeySchedule) -> Result<Vec<u8>> {
    if data.is_empty() || !data.len().is_multiple_of(BLOCK_BYTES) {
        return Err(Error::MalformedCiphertext(format!(
            "length {} is not a positive multiple of {BLOCK_BYTES}",
            data.len()
        )));
    }
    let mut out = data.to_vec();
    decrypt_in_place(&mut out, sched);
    let len = unpad(&out)?.len();
    out.truncate(len);
    Ok(out)
}

fn check_chunk(chunk_bytes: usize) -> Result<()> {
    if chunk_bytes == 0 || !chunk_bytes.is_multiple_of(BLOCK_BYTES) {
        return Err(Error::Config(format!("chunk size {chunk_bytes} must be a positive multiple of {BLOCK_BYTES}")));
    }
    Ok(())
}

/// Reads until `buf` is full or the reader is exhausted.
fn read_full(reader: &mut impl Read, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match reader.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

/// Streams `reader` through ECB encryption in `chunk_bytes` pieces. Only the
/// final piece is padded, so the output equals [`ecb_encrypt`] of the whole input.
/// Returns the number of ciphertext bytes written.
pub fn encrypt_stream(
    reader: &mut impl Read,
    writer: &mut impl Write,
    sched: &RoundKeySchedule,
    chunk_bytes: usize,
) -> Result<u64> {
    check_chunk(chunk_bytes)?;
    let mut buf = vec![0u8; chunk_bytes];
    let mut written = 0u64;
    loop {
        let n = read_full(reader, &mut buf).map_err(|e| Error::io("reading plaintext", e))?;
        let whole = n - n % BLOCK_BYTES;
        encrypt_in_place(&mut buf[..whole], sched);
        writer.write_all(&buf[..whole]).map_err(|e| Error::io("writing ciphertext", e))?;
        written += whole as u64;
        if n < chunk_bytes {
            let mut last = [0u8; BLOCK_BYTES];
            let tail = &buf[whole..n];
            last[..tail.len()].copy_from_slice(tail);
            last[tail.len()..].fill((BLOCK_BYTES - tail.len()) as u8);
            writer.write_all(&encrypt_block(&last, sched)).map_err(|e| Error::io("writing ciphertext", e))?;
            written += BLOCK_BYTES as u64;
            break;
        }
    }
    writer.flush().map_err(|e| Error::io("writing ciphertext", e))?;
    Ok(written)
}

/// Inverse of [`encrypt_stream`]. The last decrypted block is held back until
/// end of input so the padding can be checked before it is written.
pub fn decrypt_stream(
    reader: &mut impl Read,
    writer: &mut impl Write,
    sched: &RoundKeySchedule,
    chunk_bytes: usize,
) -> Result<u64> {
    check_chunk(chunk_bytes)?;
    let mut buf = vec![0u8; chunk_bytes];
    let mut held: Option<Block> = None;
    let mut total_in = 0u64;
    let mut written = 0u64;
    loop {
        let n = read_full(reader, &mut buf).map_err(|e| Error::io("reading ciphertext", e))?;
        total_in += n as u64;
        if n % BLOCK_BYTES != 0 {
            return Err(Error::MalformedCiphertext(format!(
                "length {} is not a multiple of {BLOCK_BYTES}",
                total_in
            )));
        }
        if n == 0 {
            break;
        }
        decrypt_in_place(&mut buf[..n], sched);
        if let Some(h) = held.take() {
            writer.write_all(&h).map_err(|e| Error::io("writing plaintext", e))?;
            written += BLOCK_BYTES as u64;
        }
        writer.write_all(&buf[..n - BLOCK_BYTES]).map_err(|e| Error::io("writing plaintext", e))?;
        written += (n - BLOCK_BYTES) as u64;
        held = Some(buf[n - BLOCK_BYTES..n].try_into().unwrap());
        if n < chunk_bytes {
            break;
        }
    }
    let last = held.ok_or_else(|| Error::MalformedCiphertext("empty ciphertext".into()))?;
    let plain = unpad(&last)?;
    writer.write_all(plain).map_err(|e| Error::io("writing plaintext", e))?;
    writer.flush().map_err(|e| Error::io("writing plaintext", e))?;
    Ok(written + plain.len() as u64)
}

fn open_pair(input: &Path, output: &Path) -> Result<(File, BufWriter<File>)> {
    let src = File::open(input).map_err(|e| Error::io_path("opening", input, e))?;
    let dst = File::create(output).map_err(|e| Error::io_path("creating", output, e))?;
    Ok((src, BufWriter::new(dst)))
}

fn with_context(err: Error, path: &Path) -> Error {
    match err {
        Error::Io { context, source } => Error::Io { context: format!("{context} ({})", path.display()), source },
        other => other,
    }
}

pub fn encrypt_file_to(input: &Path, output: &Path, sched: &RoundKeySchedule, chunk_bytes: usize) -> Result<u64> {
    check_chunk(chunk_bytes)?;
    let (mut src, mut dst) = open_pair(input, output)?;
    encrypt_stream(&mut src, &mut dst, sched, chunk_bytes).map_err(|e| with_context(e, input))
}

pub fn decrypt_file_to(input: &Path, output: &Path, sched: &RoundKeySchedule, chunk_bytes: usize) -> Result<u64> {
    check_chunk(chunk_bytes)?;
    let (mut src, mut dst) = open_pair(input, output)?;
    decrypt_stream(&mut src, &mut dst, sched, chunk_bytes).map_err(|e| with_context(e, input))
}

/// Encrypts `path` to `path.enc` and returns the output path.
pub fn encrypt_file(path: &Path, sched: &RoundKeySchedule, chunk_bytes: usize) -> Result<PathBuf> {
    let mut out = path.as_os_str().to_owned();
    out.push(".enc");
    let out = PathBuf::from(out);
    encrypt_file_to(path, &out, sched, chunk_bytes)?;
    Ok(out)
}

/// Sidecar written next to a ciphertext file, `key=value` per line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CipherMetadata {
    pub variant: Variant,
    pub profile: DerivationProfile,
}

impl CipherMetadata {
    pub const MODE: &'static str = "ecb";
    pub const PADDING: &'static str = "pkcs7";

    pub fn sidecar_path(ciphertext: &Path) -> PathBuf {
        let mut p = ciphertext.as_os_str().to_owned();
        p.push(".meta");
        PathBuf::from(p)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "mode={}", Self::MODE);
        let _ = writeln!(s, "variant={}", self.variant);
        let _ = writeln!(s, "profile={}", self.profile);
        let _ = writeln!(s, "padding={}", Self::PADDING);
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let (mut variant, mut profile) = (None, None);
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let (key, value) =
                line.split_once('=').ok_or_else(|| Error::Parse(format!("metadata line {line:?} is not key=value")))?;
            match key.trim() {
                "mode" if value.trim() != Self::MODE => {
                    return Err(Error::Parse(format!("unsupported mode {value:?}")));
                }
                "padding" if value.trim() != Self::PADDING => {
                    return Err(Error::Parse(format!("unsupported padding {value:?}")));
                }
                "variant" => variant = Some(value.parse()?),
                "profile" => profile = Some(value.parse()?),
                _ => {}
            }
        }
        Ok(CipherMetadata {
            variant: variant.ok_or_else(|| Error::Parse("metadata is missing variant".into()))?,
            profile: profile.ok_or_else(|| Error::Parse("metadata is missing profile".into()))?,
        })
    }

    pub fn write_for(&self, ciphertext: &Path) -> Result<PathBuf> {
        let path = Self::sidecar_path(ciphertext);
        std::fs::write(&path, self.render()).map_err(|e| Error::io_path("writing metadata", &path, e))?;
        Ok(path)
    }

    pub fn read_for(ciphertext: &Path) -> Result<Self> {
        let path = Self::sidecar_path(ciphertext);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io_path("reading metadata", &path, e))?;
        Self::parse(&text)
    }
}
