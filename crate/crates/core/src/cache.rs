//! On-disk coefficient cache.
//!
//! Layout, all integers little-endian:
//!
//! | bytes | field |
//! |-------|-------|
//! | 4     | magic `CSLB` |
//! | 4     | format version (u32) |
//! | 4     | weight (u32) |
//! | 8     | nmax (u64) |
//! | 8     | checksum (u64): first 8 bytes of SHA-256 of the payload |
//! | ...   | payload |
//!
//! The payload is `nmax` IEEE-754 doubles `lambda(1..=nmax)`, then the exact
//! cutoff (u64), then for each `n <= cutoff` a u32 length followed by the
//! decimal digits of `tau(n)`.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::forms::FormTable;

pub const MAGIC: &[u8; 4] = b"CSLB";
pub const FORMAT_VERSION: u32 = 1;
pub const CACHE_DIR_ENV: &str = "CSLB_CACHE_DIR";
const HEADER_LEN: usize = 28;

fn checksum(payload: &[u8]) -> u64 {
    let digest = Sha256::digest(payload);
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

pub fn encode(table: &FormTable) -> Vec<u8> {
    encode_with_version(table, FORMAT_VERSION)
}

fn encode_with_version(table: &FormTable, version: u32) -> Vec<u8> {
    let mut payload = Vec::with_capacity(table.nmax * 8 + table.exact_cutoff() * 24 + 8);
    for &l in table.lambdas() {
        payload.extend_from_slice(&l.to_le_bytes());
    }
    payload.extend_from_slice(&(table.exact_cutoff() as u64).to_le_bytes());
    for t in table.taus() {
        let s = t.to_string();
        payload.extend_from_slice(&(s.len() as u32).to_le_bytes());
        payload.extend_from_slice(s.as_bytes());
    }
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&version.to_le_bytes());
    out.extend_from_slice(&table.weight.to_le_bytes());
    out.extend_from_slice(&(table.nmax as u64).to_le_bytes());
    out.extend_from_slice(&checksum(&payload).to_le_bytes());
    out.extend_from_slice(&payload);
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::CacheFormat("unexpected end of payload".into()))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn decode(bytes: &[u8]) -> Result<FormTable> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::CacheFormat(format!(
            "file is {} bytes, shorter than the header",
            bytes.len()
        )));
    }
    let mut header = Reader { buf: bytes, pos: 0 };
    if header.take(4)? != MAGIC {
        return Err(Error::CacheFormat("bad magic".into()));
    }
    let version = header.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let weight = header.u32()?;
    let nmax = header.u64()? as usize;
    let stored = header.u64()?;
    let payload = &bytes[HEADER_LEN..];
    if checksum(payload) != stored {
        return Err(Error::ChecksumMismatch);
    }
    let mut rd = Reader { buf: payload, pos: 0 };
    let lambda = (0..nmax)
        .map(|_| Ok(f64::from_le_bytes(rd.take(8)?.try_into().expect("8 bytes"))))
        .collect::<Result<Vec<_>>>()?;
    let cutoff = rd.u64()? as usize;
    if cutoff > nmax {
        return Err(Error::CacheFormat("exact cutoff exceeds nmax".into()));
    }
    let mut tau = Vec::with_capacity(cutoff);
    for _ in 0..cutoff {
        let len = rd.u32()? as usize;
        let digits = std::str::from_utf8(rd.take(len)?)
            .map_err(|e| Error::CacheFormat(e.to_string()))?;
        tau.push(
            digits
                .parse::<i128>()
                .map_err(|e| Error::CacheFormat(e.to_string()))?,
        );
    }
    if rd.pos != payload.len() {
        return Err(Error::CacheFormat("trailing bytes after payload".into()));
    }
    Ok(FormTable::from_parts(weight, lambda, tau))
}

pub fn write(table: &FormTable, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, encode(table))?;
    Ok(())
}

pub fn read(path: &Path) -> Result<FormTable> {
    decode(&fs::read(path)?)
}

/// Writes the table and reads it back.
pub fn cache_roundtrip(table: &FormTable, path: &Path) -> Result<FormTable> {
    write(table, path)?;
    read(path)
}

/// Default cache file for a given table size, honouring `CSLB_CACHE_DIR`.
pub fn default_path(nmax: usize) -> PathBuf {
    let dir = std::env::var_os(CACHE_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("cslb-cache"));
    dir.join(format!("delta-{nmax}.cslb"))
}

/// Loads a cached table covering `nmax`, building and storing it on a miss.
pub fn load_or_build(nmax: usize, dir: Option<&Path>) -> Result<FormTable> {
    let path = match dir {
        Some(d) => d.join(format!("delta-{nmax}.cslb")),
        None => default_path(nmax),
    };
    match read(&path) {
        Ok(t) if t.nmax >= nmax && t.exact_cutoff() >= nmax => Ok(t),
        _ => {
            let t = crate::forms::build_delta_table(nmax)?;
            write(&t, &path)?;
            Ok(t)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::build_delta_table;

    #[test]
    fn roundtrip_is_exact_and_byte_stable() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.cslb");
        let table = build_delta_table(10_000).unwrap();
        let back = cache_roundtrip(&table, &path).unwrap();
        assert_eq!(back, table);
        assert_eq!(encode(&back), fs::read(&path).unwrap());
    }

    #[test]
    fn truncated_payload_fails_checksum() {
        let bytes = encode(&build_delta_table(100).unwrap());
        let cut = &bytes[..bytes.len() - 10];
        assert_eq!(decode(cut), Err(Error::ChecksumMismatch));
        let mut flipped = bytes.clone();
        flipped[HEADER_LEN + 3] ^= 1;
        assert_eq!(decode(&flipped), Err(Error::ChecksumMismatch));
    }

    #[test]
    fn version_bump_is_rejected() {
        let bytes = encode_with_version(&build_delta_table(10).unwrap(), FORMAT_VERSION + 1);
        assert_eq!(
            decode(&bytes),
            Err(Error::VersionMismatch {
                found: FORMAT_VERSION + 1,
                expected: FORMAT_VERSION
            })
        );
    }

    #[test]
    fn header_fields() {
        let bytes = encode(&build_delta_table(5).unwrap());
        assert_eq!(&bytes[..4], b"CSLB");
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 12);
        assert_eq!(u64::from_le_bytes(bytes[12..20].try_into().unwrap()), 5);
        assert!(decode(&bytes[..10]).is_err());
    }
}
