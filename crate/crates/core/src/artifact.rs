//! Binary artifact container shared by the classifier and embedding files.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic        8 bytes
//! version      u32
//! header_len   u64
//! header       header_len bytes of UTF-8 JSON
//! blocks       u64 count, then per block: u64 length + length × f64
//! ```
//!
//! The JSON header is produced from plain structs with a fixed field order
//! and the float blocks are raw bit patterns, so save → load → save is
//! byte-identical.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("cannot access artifact {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("not a {expected} artifact (bad magic)")]
    BadMagic { expected: &'static str },
    #[error("unsupported {kind} artifact version {found} (expected {expected})")]
    Version {
        kind: &'static str,
        found: u32,
        expected: u32,
    },
    #[error("artifact header is invalid: {0}")]
    Header(#[from] serde_json::Error),
    #[error("artifact is truncated or corrupt: {0}")]
    Corrupt(String),
}

pub(crate) struct Container<H> {
    pub header: H,
    pub blocks: Vec<Vec<f64>>,
}

pub(crate) fn encode<H: Serialize>(
    magic: &[u8; 8],
    version: u32,
    header: &H,
    blocks: &[&[f64]],
) -> Result<Vec<u8>, ArtifactError> {
    let header = serde_json::to_vec(header)?;
    let floats: usize = blocks.iter().map(|b| b.len()).sum();
    let mut out = Vec::with_capacity(32 + header.len() + 8 * (floats + blocks.len()));
    out.extend_from_slice(magic);
    out.extend_from_slice(&version.to_le_bytes());
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(&(blocks.len() as u64).to_le_bytes());
    for block in blocks {
        out.extend_from_slice(&(block.len() as u64).to_le_bytes());
        for v in block.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ArtifactError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| ArtifactError::Corrupt(format!("unexpected end at byte {}", self.pos)))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32, ArtifactError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<usize, ArtifactError> {
        let v = u64::from_le_bytes(self.take(8)?.try_into().unwrap());
        usize::try_from(v).map_err(|_| ArtifactError::Corrupt(format!("length {v} overflows")))
    }
}

pub(crate) fn decode<H: DeserializeOwned>(
    bytes: &[u8],
    magic: &[u8; 8],
    kind: &'static str,
    version: u32,
) -> Result<Container<H>, ArtifactError> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(8).ok() != Some(&magic[..]) {
        return Err(ArtifactError::BadMagic { expected: kind });
    }
    let found = cur.u32()?;
    if found != version {
        return Err(ArtifactError::Version {
            kind,
            found,
            expected: version,
        });
    }
    let header_len = cur.u64()?;
    let header = serde_json::from_slice(cur.take(header_len)?)?;
    let count = cur.u64()?;
    let mut blocks = Vec::with_capacity(count.min(64));
    for _ in 0..count {
        let len = cur.u64()?;
        let raw = cur.take(
            len.checked_mul(8)
                .ok_or_else(|| ArtifactError::Corrupt(format!("block length {len} overflows")))?,
        )?;
        blocks.push(
            raw.chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        );
    }
    if cur.pos != bytes.len() {
        return Err(ArtifactError::Corrupt(format!(
            "{} trailing bytes",
            bytes.len() - cur.pos
        )));
    }
    Ok(Container { header, blocks })
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<(), ArtifactError> {
    let io_err = |source| ArtifactError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut f = fs::File::create(path).map_err(io_err)?;
    f.write_all(bytes).map_err(io_err)?;
    f.flush().map_err(io_err)
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>, ArtifactError> {
    let io_err = |source| ArtifactError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut bytes = Vec::new();
    fs::File::open(path)
        .map_err(io_err)?
        .read_to_end(&mut bytes)
        .map_err(io_err)?;
    Ok(bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Serialize, Deserialize, PartialEq, Debug)]
    struct Header {
        name: String,
        k: usize,
    }

    const MAGIC: &[u8; 8] = b"TESTART\0";

    #[test]
    fn round_trip_is_byte_stable() {
        let header = Header { name: "x".into(), k: 3 };
        let a = [1.5, -0.0, f64::MIN_POSITIVE];
        let b = [];
        let bytes = encode(MAGIC, 1, &header, &[&a, &b]).unwrap();
        let back: Container<Header> = decode(&bytes, MAGIC, "test", 1).unwrap();
        assert_eq!(back.header, header);
        assert_eq!(back.blocks[0], a);
        assert!(back.blocks[1].is_empty());
        let again = encode(
            MAGIC,
            1,
            &back.header,
            &back.blocks.iter().map(Vec::as_slice).collect::<Vec<_>>(),
        )
        .unwrap();
        assert_eq!(bytes, again);
    }

    #[test]
    fn rejects_corruption() {
        let header = Header { name: "x".into(), k: 3 };
        let bytes = encode(MAGIC, 1, &header, &[&[1.0, 2.0]]).unwrap();
        assert!(matches!(
            decode::<Header>(&bytes, b"OTHERART", "test", 1),
            Err(ArtifactError::BadMagic { .. })
        ));
        assert!(matches!(
            decode::<Header>(&bytes, MAGIC, "test", 2),
            Err(ArtifactError::Version { found: 1, .. })
        ));
        assert!(matches!(
            decode::<Header>(&bytes[..bytes.len() - 3], MAGIC, "test", 1),
            Err(ArtifactError::Corrupt(_))
        ));
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(matches!(
            decode::<Header>(&extra, MAGIC, "test", 1),
            Err(ArtifactError::Corrupt(_))
        ));
    }
}
