//! Binary window cache.
//!
//! Layout (little endian): magic `EKSW`, `u16` format version, `u64` center,
//! `u64` halfwidth, then `2j + 1` byte pairs `(ω, Ω)` in ascending order.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::arith::{sieve_window, OmegaWindow};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"EKSW";
pub const FORMAT_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 8 + 8;

/// File name for the cache entry keyed by `(center, j)`.
pub fn cache_file_name(center: u64, j: u64) -> String {
    format!("omega_{center}_{j}.bin")
}

pub fn encode_window(window: &OmegaWindow) -> Vec<u8> {
    let mut buf = Vec::with_capacity(HEADER_LEN + 2 * window.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&window.center().to_le_bytes());
    buf.extend_from_slice(&window.halfwidth().to_le_bytes());
    for (&w, &bw) in window.omega().iter().zip(window.big_omega()) {
        buf.push(w);
        buf.push(bw);
    }
    buf
}

pub fn decode_window(bytes: &[u8]) -> Result<OmegaWindow> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(Error::Cache("missing header".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(Error::Cache(format!("unsupported format version {version}")));
    }
    let center = u64::from_le_bytes(bytes[6..14].try_into().unwrap());
    let j = u64::from_le_bytes(bytes[14..22].try_into().unwrap());
    let body = &bytes[HEADER_LEN..];
    if body.len() as u64 != 2 * (2 * j + 1) {
        return Err(Error::Cache(format!("body length {} does not match halfwidth {j}", body.len())));
    }
    let omega = body.iter().step_by(2).copied().collect();
    let big_omega = body.iter().skip(1).step_by(2).copied().collect();
    OmegaWindow::from_parts(center, j, omega, big_omega)
}

pub fn write_window(path: &Path, window: &OmegaWindow) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode_window(window))?;
    Ok(())
}

pub fn read_window(path: &Path) -> Result<OmegaWindow> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_window(&bytes)
}

/// Directory-backed cache of sieved windows.
#[derive(Clone, Debug)]
pub struct WindowCache {
    dir: PathBuf,
}

impl WindowCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        WindowCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, center: u64, j: u64) -> PathBuf {
        self.dir.join(cache_file_name(center, j))
    }

    /// Reads the cached window, or sieves and stores it.
    pub fn load_or_sieve(&self, center: u64, j: u64) -> Result<OmegaWindow> {
        let path = self.path_for(center, j);
        if path.exists() {
            let w = read_window(&path)?;
            if w.center() == center && w.halfwidth() == j {
                return Ok(w);
            }
        }
        let w = sieve_window(center, j)?;
        fs::create_dir_all(&self.dir)?;
        write_window(&path, &w)?;
        Ok(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let cache = WindowCache::new(dir.path());
        let w = cache.load_or_sieve(100_000, 50).unwrap();
        assert!(cache.path_for(100_000, 50).exists());
        let again = cache.load_or_sieve(100_000, 50).unwrap();
        assert_eq!(w, again);
        assert_eq!(std::fs::metadata(cache.path_for(100_000, 50)).unwrap().len(), 22 + 2 * 101);
    }

    #[test]
    fn rejects_corrupt_input() {
        let w = sieve_window(1000, 3).unwrap();
        let mut bytes = encode_window(&w);
        assert!(decode_window(&bytes[..10]).is_err());
        bytes.pop();
        assert!(decode_window(&bytes).is_err());
        let mut bad = encode_window(&w);
        bad[4] = 9;
        assert!(matches!(decode_window(&bad), Err(Error::Cache(_))));
    }
}
