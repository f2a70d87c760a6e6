//! Versioned binary container for fitted artifacts.
//!
//! Layout: the magic bytes `EMOD`, a little-endian `u32` format version, a
//! length-prefixed UTF-8 kind tag, then the bincode payload.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

pub const MAGIC: &[u8; 4] = b"EMOD";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum PersistError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: not a model file")]
    BadMagic { path: PathBuf },
    #[error("{path}: format version {found} is not supported (expected {FORMAT_VERSION})")]
    Version { path: PathBuf, found: u32 },
    #[error("{path}: holds a `{found}` artifact, expected `{expected}`")]
    Kind { path: PathBuf, found: String, expected: String },
    #[error("{path}: {message}")]
    Payload { path: PathBuf, message: String },
}

pub fn save<T: Serialize>(path: &Path, kind: &str, value: &T) -> Result<(), PersistError> {
    let io = |source| PersistError::Io { path: path.to_path_buf(), source };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    w.write_all(MAGIC).map_err(io)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes()).map_err(io)?;
    let tag = kind.as_bytes();
    w.write_all(&(tag.len() as u32).to_le_bytes()).map_err(io)?;
    w.write_all(tag).map_err(io)?;
    bincode::serialize_into(&mut w, value)
        .map_err(|e| PersistError::Payload { path: path.to_path_buf(), message: e.to_string() })?;
    w.flush().map_err(io)
}

pub fn load<T: DeserializeOwned>(path: &Path, kind: &str) -> Result<T, PersistError> {
    let io = |source| PersistError::Io { path: path.to_path_buf(), source };
    let mut r = BufReader::new(File::open(path).map_err(io)?);
    let mut magic = [0u8; 4];
    if r.read_exact(&mut magic).is_err() || &magic != MAGIC {
        return Err(PersistError::BadMagic { path: path.to_path_buf() });
    }
    let mut word = [0u8; 4];
    r.read_exact(&mut word).map_err(io)?;
    let found = u32::from_le_bytes(word);
    if found != FORMAT_VERSION {
        return Err(PersistError::Version { path: path.to_path_buf(), found });
    }
    r.read_exact(&mut word).map_err(io)?;
    let len = u32::from_le_bytes(word) as usize;
    if len > 256 {
        return Err(PersistError::BadMagic { path: path.to_path_buf() });
    }
    let mut tag = vec![0u8; len];
    r.read_exact(&mut tag).map_err(io)?;
    let found = String::from_utf8_lossy(&tag).into_owned();
    if found != kind {
        return Err(PersistError::Kind { path: path.to_path_buf(), found, expected: kind.to_string() });
    }
    bincode::deserialize_from(r).map_err(|e| PersistError::Payload { path: path.to_path_buf(), message: e.to_string() })
}
