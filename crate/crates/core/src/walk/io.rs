//! Binary token-stream files.
//!
//! Layout (little-endian): magic `SLWK`, `u16` version, `u32` vocab size,
//! `u32` sequence length, `u64` sequence count, then every token as `u32`,
//! row-major.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::WalkDataset;
use crate::graph::io::read_exact_array;
use crate::{Error, Result};

pub const WALK_MAGIC: &[u8; 4] = b"SLWK";
pub const WALK_VERSION: u16 = 1;
/// Bytes before the first token.
pub const HEADER_LEN: usize = 4 + 2 + 4 + 4 + 8;

pub fn write_walks<W: Write>(out: W, ds: &WalkDataset) -> std::io::Result<()> {
    let mut out = BufWriter::new(out);
    out.write_all(WALK_MAGIC)?;
    out.write_all(&WALK_VERSION.to_le_bytes())?;
    out.write_all(&(ds.vocab_size() as u32).to_le_bytes())?;
    out.write_all(&(ds.seq_len() as u32).to_le_bytes())?;
    out.write_all(&(ds.n_seqs() as u64).to_le_bytes())?;
    for &t in ds.tokens() {
        out.write_all(&t.to_le_bytes())?;
    }
    out.flush()
}

pub fn read_walks<R: Read>(input: R) -> Result<WalkDataset> {
    let mut input = BufReader::new(input);
    let magic: [u8; 4] = read_exact_array(&mut input)?;
    if &magic != WALK_MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}, expected SLWK")));
    }
    let version = u16::from_le_bytes(read_exact_array(&mut input)?);
    if version != WALK_VERSION {
        return Err(Error::Format(format!(
            "unsupported token-stream version {version}"
        )));
    }
    let vocab = u32::from_le_bytes(read_exact_array(&mut input)?) as usize;
    let seq_len = u32::from_le_bytes(read_exact_array(&mut input)?) as usize;
    let n_seqs = u64::from_le_bytes(read_exact_array(&mut input)?) as usize;
    let n = seq_len
        .checked_mul(n_seqs)
        .ok_or_else(|| Error::Format("token count overflows".into()))?;
    let mut bytes = Vec::with_capacity(4 * n);
    input
        .by_ref()
        .take(4 * n as u64)
        .read_to_end(&mut bytes)
        .map_err(|e| Error::Format(format!("reading tokens: {e}")))?;
    if bytes.len() != 4 * n {
        return Err(Error::Format(format!(
            "expected {n} tokens, file holds {}",
            bytes.len() / 4
        )));
    }
    let mut extra = [0u8; 1];
    if input
        .read(&mut extra)
        .map_err(|e| Error::Format(e.to_string()))?
        != 0
    {
        return Err(Error::Format("trailing bytes after the last token".into()));
    }
    let tokens = bytes
        .chunks_exact(4)
        .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    WalkDataset::new(vocab, seq_len, tokens, None).map_err(|e| Error::Format(e.to_string()))
}

pub fn save_walks(path: &Path, ds: &WalkDataset) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_walks(file, ds).map_err(|e| Error::io(path, e))
}

pub fn load_walks(path: &Path) -> Result<WalkDataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_walks(file)
}
