//! Versioned binary index files.
//!
//! Everything is little-endian. Layout:
//!
//! ```text
//! magic        8 bytes  "LBPSPIDX"
//! version      u16      currently 1
//! config       median_radius u32, P u8, mode u8, t u8, R f64 bits,
//!              levels u32, edge-ratio mode u8
//! fingerprint  u64      digest of the config block, doubles as an
//!                       integrity check on load
//! dim          u32      descriptor length
//! entry count  u64
//! entries      id, page, optional label (each u32 length + UTF-8),
//!              width u32, dim f64 values as raw bits
//! ```
//!
//! Values round-trip bit-exactly; writing the same index twice produces
//! byte-identical files. Query-time parameters (lambda, k, width filter)
//! are deliberately absent so tuning them never invalidates an index.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use lbpspot_core::lbp::{LbpMode, LbpParams};
use lbpspot_core::retrieval::{Index, IndexEntry, RetrievalError};
use lbpspot_core::{Descriptor, EdgeRatioMode, ExtractConfig};

pub const MAGIC: &[u8; 8] = b"LBPSPIDX";
pub const VERSION: u16 = 1;

/// Guard against absurd length prefixes in corrupt files.
const MAX_STRING: u32 = 1 << 20;
const MAX_ENTRIES: u64 = 1 << 32;
const MAX_DIM: u32 = 1 << 20;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("cannot access index file {path}: {source}")]
    Io {
        path: PathBuf,
        source: io::Error,
    },
    #[error("{path} is not an index file (bad magic)")]
    BadMagic { path: PathBuf },
    #[error("index version {found} is not supported (expected {VERSION})")]
    UnsupportedVersion { found: u16 },
    #[error("index fingerprint {stored:#018x} does not match its config (computed {computed:#018x}); the file is corrupt")]
    FingerprintMismatch { stored: u64, computed: u64 },
    #[error("corrupt index: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Index(#[from] RetrievalError),
}

fn mode_to_u8(mode: LbpMode) -> u8 {
    match mode {
        LbpMode::Block3x3 => 0,
        LbpMode::CircularInterpolated => 1,
    }
}

fn mode_from_u8(v: u8) -> Result<LbpMode, StoreError> {
    match v {
        0 => Ok(LbpMode::Block3x3),
        1 => Ok(LbpMode::CircularInterpolated),
        other => Err(StoreError::Corrupt(format!("unknown LBP mode byte {other}"))),
    }
}

fn edge_to_u8(mode: EdgeRatioMode) -> u8 {
    match mode {
        EdgeRatioMode::Zone => 0,
        EdgeRatioMode::Global => 1,
    }
}

fn edge_from_u8(v: u8) -> Result<EdgeRatioMode, StoreError> {
    match v {
        0 => Ok(EdgeRatioMode::Zone),
        1 => Ok(EdgeRatioMode::Global),
        other => Err(StoreError::Corrupt(format!(
            "unknown edge-ratio mode byte {other}"
        ))),
    }
}

struct Writer<W: Write> {
    inner: W,
}

impl<W: Write> Writer<W> {
    fn u8(&mut self, v: u8) -> io::Result<()> {
        self.inner.write_all(&[v])
    }
    fn u16(&mut self, v: u16) -> io::Result<()> {
        self.inner.write_all(&v.to_le_bytes())
    }
    fn u32(&mut self, v: u32) -> io::Result<()> {
        self.inner.write_all(&v.to_le_bytes())
    }
    fn u64(&mut self, v: u64) -> io::Result<()> {
        self.inner.write_all(&v.to_le_bytes())
    }
    fn f64(&mut self, v: f64) -> io::Result<()> {
        self.u64(v.to_bits())
    }
    fn string(&mut self, s: &str) -> io::Result<()> {
        self.u32(s.len() as u32)?;
        self.inner.write_all(s.as_bytes())
    }
}

struct Reader<R: Read> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N], StoreError> {
        let mut buf = [0u8; N];
        self.inner
            .read_exact(&mut buf)
            .map_err(|e| StoreError::Corrupt(format!("unexpected end of file: {e}")))?;
        Ok(buf)
    }
    fn u8(&mut self) -> Result<u8, StoreError> {
        Ok(self.bytes::<1>()?[0])
    }
    fn u16(&mut self) -> Result<u16, StoreError> {
        Ok(u16::from_le_bytes(self.bytes()?))
    }
    fn u32(&mut self) -> Result<u32, StoreError> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }
    fn u64(&mut self) -> Result<u64, StoreError> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }
    fn f64(&mut self) -> Result<f64, StoreError> {
        Ok(f64::from_bits(self.u64()?))
    }
    fn string(&mut self) -> Result<String, StoreError> {
        let len = self.u32()?;
        if len > MAX_STRING {
            return Err(StoreError::Corrupt(format!(
                "string length {len} exceeds the {MAX_STRING} limit"
            )));
        }
        let mut buf = vec![0u8; len as usize];
        self.inner
            .read_exact(&mut buf)
            .map_err(|e| StoreError::Corrupt(format!("unexpected end of file: {e}")))?;
        String::from_utf8(buf).map_err(|e| StoreError::Corrupt(format!("invalid UTF-8: {e}")))
    }
}

/// Write an index and the config that produced it.
pub fn save_index(
    path: &Path,
    index: &Index<f64>,
    config: &ExtractConfig,
) -> Result<(), StoreError> {
    let file = File::create(path).map_err(|source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = Writer {
        inner: BufWriter::new(file),
    };
    let io_err = |source: io::Error| StoreError::Io {
        path: path.to_path_buf(),
        source,
    };

    (|| -> io::Result<()> {
        w.inner.write_all(MAGIC)?;
        w.u16(VERSION)?;
        w.u32(config.median_radius)?;
        w.u8(config.lbp.p)?;
        w.u8(mode_to_u8(config.lbp.mode))?;
        w.u8(config.lbp.t)?;
        w.f64(config.lbp.r)?;
        w.u32(config.levels)?;
        w.u8(edge_to_u8(config.edge_ratio))?;
        w.u64(config.fingerprint())?;
        w.u32(index.dim() as u32)?;
        w.u64(index.len() as u64)?;
        for entry in index.entries() {
            w.string(&entry.id)?;
            w.string(&entry.page)?;
            match entry.label() {
                Some(label) => {
                    w.u8(1)?;
                    w.string(label)?;
                }
                None => w.u8(0)?,
            }
            w.u32(entry.width())?;
            for &v in &entry.descriptor.values {
                w.f64(v)?;
            }
        }
        w.inner.flush()
    })()
    .map_err(io_err)
}

/// Read an index back along with its extraction config.
pub fn load_index(path: &Path) -> Result<(Index<f64>, ExtractConfig), StoreError> {
    let file = File::open(path).map_err(|source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut r = Reader {
        inner: BufReader::new(file),
    };

    let magic: [u8; 8] = r.bytes()?;
    if &magic != MAGIC {
        return Err(StoreError::BadMagic {
            path: path.to_path_buf(),
        });
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(StoreError::UnsupportedVersion { found: version });
    }

    let median_radius = r.u32()?;
    let p = r.u8()?;
    let mode = mode_from_u8(r.u8()?)?;
    let t = r.u8()?;
    let radius = r.f64()?;
    let levels = r.u32()?;
    let edge_ratio = edge_from_u8(r.u8()?)?;
    let config = ExtractConfig {
        median_radius,
        lbp: LbpParams {
            p,
            r: radius,
            t,
            mode,
        },
        levels,
        edge_ratio,
    };

    let stored = r.u64()?;
    let computed = config.fingerprint();
    if stored != computed {
        return Err(StoreError::FingerprintMismatch { stored, computed });
    }

    let dim = r.u32()?;
    if dim > MAX_DIM {
        return Err(StoreError::Corrupt(format!("dimension {dim} is implausible")));
    }
    if dim as usize != config.dim() {
        return Err(StoreError::Corrupt(format!(
            "dimension {dim} does not match the config's {}",
            config.dim()
        )));
    }
    let count = r.u64()?;
    if count > MAX_ENTRIES {
        return Err(StoreError::Corrupt(format!(
            "entry count {count} is implausible"
        )));
    }

    let mut entries = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let id = r.string()?;
        let page = r.string()?;
        let label = match r.u8()? {
            0 => None,
            1 => Some(r.string()?),
            other => {
                return Err(StoreError::Corrupt(format!(
                    "unknown label presence byte {other}"
                )))
            }
        };
        let width = r.u32()?;
        let mut values = Vec::with_capacity(dim as usize);
        for _ in 0..dim {
            values.push(r.f64()?);
        }
        entries.push(IndexEntry {
            id,
            page,
            descriptor: Descriptor {
                values,
                width,
                label,
            },
        });
    }

    // trailing garbage means the file is not what we wrote
    let mut trailer = [0u8; 1];
    match r.inner.read(&mut trailer) {
        Ok(0) => {}
        Ok(_) => {
            return Err(StoreError::Corrupt(
                "trailing bytes after the last entry".into(),
            ))
        }
        Err(e) => {
            return Err(StoreError::Corrupt(format!(
                "cannot verify end of file: {e}"
            )))
        }
    }

    let index = Index::new(entries, stored)?;
    Ok((index, config))
}
