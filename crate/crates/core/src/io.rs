//! Snapshot files and time-series CSV.
//!
//! A snapshot is a JSON header next to a raw file of little-endian `f64`, row
//! major over grid points (last axis fastest) with the five tensor coordinates
//! fastest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{SeriesRow, Snapshot, SERIES_COLUMNS};
use crate::grid::{QField, SpectralGrid};

pub const SNAPSHOT_FORMAT: &str = "nematic-snapshot";
/// Coordinates in the orthonormal traceless basis `E1 .. E5`.
pub const BASIS_ID: &str = "traceless-orthonormal-5";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub format: String,
    pub dim: usize,
    pub n: usize,
    pub basis: String,
    pub endianness: String,
    pub step: usize,
    pub t: f64,
    pub config_hash: String,
    /// File name of the data, relative to the header.
    pub data: String,
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

pub fn field_bytes(f: &QField) -> Vec<u8> {
    f.values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn field_from_bytes(grid: SpectralGrid, bytes: &[u8]) -> Result<QField> {
    let expect = 8 * 5 * grid.points();
    if bytes.len() != expect {
        return Err(Error::Format(format!("snapshot data has {} bytes, expected {expect}", bytes.len())));
    }
    let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    QField::from_values(grid, values)
}

/// Write `<stem>.json` and `<stem>.bin` into `dir`; returns the header path.
pub fn write_snapshot(dir: &Path, stem: &str, snap: &Snapshot, config_hash: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let data = format!("{stem}.bin");
    let header = SnapshotHeader {
        format: SNAPSHOT_FORMAT.into(),
        dim: snap.field.grid.dim,
        n: snap.field.grid.n,
        basis: BASIS_ID.into(),
        endianness: "little".into(),
        step: snap.step,
        t: snap.t,
        config_hash: config_hash.into(),
        data: data.clone(),
    };
    let bin = dir.join(&data);
    fs::write(&bin, field_bytes(&snap.field)).map_err(|e| io_err(&bin, e))?;
    let path = dir.join(format!("{stem}.json"));
    let mut text = serde_json::to_string_pretty(&header)?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| io_err(&path, e))?;
    Ok(path)
}

pub fn read_snapshot(header_path: &Path) -> Result<(SnapshotHeader, Snapshot)> {
    let text = fs::read_to_string(header_path).map_err(|e| io_err(header_path, e))?;
    let header: SnapshotHeader = serde_json::from_str(&text)?;
    if header.format != SNAPSHOT_FORMAT || header.basis != BASIS_ID || header.endianness != "little" {
        return Err(Error::Format(format!("{}: unsupported snapshot header", header_path.display())));
    }
    let grid = SpectralGrid::new(header.dim, header.n)?;
    let bin = header_path.parent().unwrap_or(Path::new(".")).join(&header.data);
    let bytes = fs::read(&bin).map_err(|e| io_err(&bin, e))?;
    let field = field_from_bytes(grid, &bytes)?;
    let snap = Snapshot { step: header.step, t: header.t, field };
    Ok((header, snap))
}

pub fn series_csv(rows: &[SeriesRow]) -> String {
    let mut out = SERIES_COLUMNS.join(",");
    out.push('\n');
    for r in rows {
        let cols: Vec<String> = r.columns().iter().map(|v| format!("{v:e}")).collect();
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    out
}

pub fn write_series_csv(path: &Path, rows: &[SeriesRow]) -> Result<()> {
    fs::write(path, series_csv(rows)).map_err(|e| io_err(path, e))
}

/// Rows of a time-series CSV as `[f64; 10]` in column order.
pub fn parse_series_csv(text: &str) -> Result<Vec<[f64; 10]>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Format("empty CSV".into()))?;
    if header != SERIES_COLUMNS.join(",") {
        return Err(Error::Format(format!("unexpected CSV header {header:?}")));
    }
    lines
        .map(|l| {
            let vals: Vec<f64> = l
                .split(',')
                .map(|v| v.parse::<f64>().map_err(|e| Error::Format(format!("{v:?}: {e}"))))
                .collect::<Result<_>>()?;
            vals.try_into().map_err(|v: Vec<f64>| Error::Format(format!("CSV row has {} fields", v.len())))
        })
        .collect()
}
