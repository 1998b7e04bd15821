//! Field snapshots: one JSON header line followed by little-endian `f64`s.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ScalarField;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub n: usize,
    pub active_dims: Vec<usize>,
    pub shape: Vec<usize>,
    pub t: f64,
    pub field: String,
    pub byte_order: String,
    pub dtype: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub header: SnapshotHeader,
    pub values: Vec<f64>,
}

pub fn write_snapshot(path: &Path, field: &ScalarField, t: f64, name: &str) -> Result<()> {
    let grid = field.grid();
    let header = SnapshotHeader {
        n: grid.n(),
        active_dims: grid.active_dims().to_vec(),
        shape: grid.sizes().to_vec(),
        t,
        field: name.to_string(),
        byte_order: "little".into(),
        dtype: "f64".into(),
    };
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    for v in field.values() {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let mut reader = BufReader::new(std::fs::File::open(path)?);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    if !line.ends_with('\n') {
        return Err(Error::Snapshot("missing header line".into()));
    }
    let header: SnapshotHeader = serde_json::from_str(line.trim_end())
        .map_err(|e| Error::Snapshot(format!("bad header: {e}")))?;
    if header.byte_order != "little" || header.dtype != "f64" {
        return Err(Error::Snapshot(format!(
            "unsupported encoding {} {}",
            header.byte_order, header.dtype
        )));
    }
    let count: usize = header.shape.iter().product();
    let mut payload = Vec::new();
    reader.read_to_end(&mut payload)?;
    if payload.len() != count * 8 {
        return Err(Error::Snapshot(format!(
            "payload has {} bytes, expected {}",
            payload.len(),
            count * 8
        )));
    }
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok(Snapshot { header, values })
}
