//! Binary state snapshots and their budget sidecars.
//!
//! Layout, all little-endian: magic `MNS1`, `u32` version, `u32 n`, `u32`
//! model id, `i32` Riesz sign, `f64 t`, then the three velocity components as
//! `n³` binary64 physical samples each, first axis fastest.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use mns_core::diagnostics::BudgetState;
use mns_core::{Grid, ModelKind, PhysicalVectorField, RieszSign};
use serde::{Deserialize, Serialize};

pub const MAGIC: [u8; 4] = *b"MNS1";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 28;

#[derive(Debug, thiserror::Error)]
pub enum SnapshotError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}: not a snapshot (bad magic)")]
    BadMagic(PathBuf),
    #[error("{path}: unsupported snapshot version {version}")]
    Version { path: PathBuf, version: u32 },
    #[error("{path}: corrupt snapshot, expected {expected} bytes, found {actual}")]
    Truncated { path: PathBuf, expected: usize, actual: usize },
    #[error("{path}: invalid header: {message}")]
    Header { path: PathBuf, message: String },
    #[error("{path}: budget sidecar unreadable: {message}")]
    Sidecar { path: PathBuf, message: String },
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub model: ModelKind,
    pub sign: RieszSign,
    pub t: f64,
    pub samples: PhysicalVectorField,
}

/// Budget integrals and step count at the snapshot, stored next to it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub step: u64,
    pub budget: BudgetState,
}

pub fn sidecar_path(snapshot: &Path) -> PathBuf {
    let mut s = snapshot.as_os_str().to_owned();
    s.push(".budget.json");
    PathBuf::from(s)
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> SnapshotError + '_ {
    move |source| SnapshotError::Io { path: path.to_path_buf(), source }
}

/// Write through a temporary file and rename, so readers never see a partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), SnapshotError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(bytes).map_err(io_err(&tmp))?;
    f.sync_all().map_err(io_err(&tmp))?;
    drop(f);
    fs::rename(&tmp, path).map_err(io_err(path))
}

pub fn encode(snapshot: &Snapshot) -> Vec<u8> {
    let n = snapshot.samples.grid().n();
    let len = snapshot.samples.grid().len();
    let mut bytes = Vec::with_capacity(HEADER_LEN + 3 * 8 * len);
    bytes.extend_from_slice(&MAGIC);
    bytes.extend_from_slice(&VERSION.to_le_bytes());
    bytes.extend_from_slice(&(n as u32).to_le_bytes());
    bytes.extend_from_slice(&snapshot.model.id().to_le_bytes());
    bytes.extend_from_slice(&snapshot.sign.as_i32().to_le_bytes());
    bytes.extend_from_slice(&snapshot.t.to_le_bytes());
    for comp in snapshot.samples.components() {
        for x in comp {
            bytes.extend_from_slice(&x.to_le_bytes());
        }
    }
    bytes
}

pub fn decode(path: &Path, bytes: &[u8]) -> Result<Snapshot, SnapshotError> {
    let header = |message: String| SnapshotError::Header { path: path.to_path_buf(), message };
    if bytes.len() < 4 || bytes[..4] != MAGIC {
        return Err(SnapshotError::BadMagic(path.to_path_buf()));
    }
    if bytes.len() < HEADER_LEN {
        return Err(SnapshotError::Truncated { path: path.to_path_buf(), expected: HEADER_LEN, actual: bytes.len() });
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    let version = u32_at(4);
    if version != VERSION {
        return Err(SnapshotError::Version { path: path.to_path_buf(), version });
    }
    let n = u32_at(8) as usize;
    let model = ModelKind::from_id(u32_at(12)).ok_or_else(|| header(format!("unknown model id {}", u32_at(12))))?;
    let raw_sign = i32::from_le_bytes(bytes[16..20].try_into().expect("4 bytes"));
    let sign = RieszSign::from_i32(raw_sign).ok_or_else(|| header(format!("invalid riesz sign {raw_sign}")))?;
    let t = f64::from_le_bytes(bytes[20..28].try_into().expect("8 bytes"));
    if !(t.is_finite() && t >= 0.0) {
        return Err(header(format!("invalid time {t}")));
    }
    let grid = Grid::new(n).map_err(|e| header(e.to_string()))?;
    let len = grid.len();
    let expected = HEADER_LEN + 3 * 8 * len;
    if bytes.len() != expected {
        return Err(SnapshotError::Truncated { path: path.to_path_buf(), expected, actual: bytes.len() });
    }
    let body = &bytes[HEADER_LEN..];
    let comps: [Vec<f64>; 3] = std::array::from_fn(|c| {
        body[c * 8 * len..(c + 1) * 8 * len]
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
            .collect()
    });
    let samples = PhysicalVectorField::from_components(&grid, comps).map_err(|e| header(e.to_string()))?;
    Ok(Snapshot { model, sign, t, samples })
}

pub fn write_snapshot(path: &Path, snapshot: &Snapshot) -> Result<(), SnapshotError> {
    write_atomic(path, &encode(snapshot))
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot, SnapshotError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    decode(path, &bytes)
}

pub fn write_sidecar(snapshot: &Path, sidecar: &Sidecar) -> Result<(), SnapshotError> {
    let path = sidecar_path(snapshot);
    let text = serde_json::to_string_pretty(sidecar)
        .map_err(|e| SnapshotError::Sidecar { path: path.clone(), message: e.to_string() })?;
    write_atomic(&path, text.as_bytes())
}

pub fn read_sidecar(snapshot: &Path) -> Result<Sidecar, SnapshotError> {
    let path = sidecar_path(snapshot);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    serde_json::from_str(&text).map_err(|e| SnapshotError::Sidecar { path, message: e.to_string() })
}
