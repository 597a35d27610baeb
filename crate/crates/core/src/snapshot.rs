//! Field snapshot file pair: `<stem>.meta` is a small text header
//! (`format=pfc2d-v1`, `M=<int>`, `L=<float>`, `t=<float>`, one per line) and
//! `<stem>.raw` holds the `M^2` samples as little-endian IEEE doubles in
//! row-major order.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{PfcError, Result};
use crate::field::Field;
use crate::grid::GridSpec;

pub const SNAPSHOT_FORMAT: &str = "pfc2d-v1";

/// Writes `<stem>.meta` and `<stem>.raw`.
pub fn write_snapshot(stem: &Path, field: &Field, t: f64) -> Result<()> {
    let meta = format!(
        "format={SNAPSHOT_FORMAT}\nM={}\nL={:.16e}\nt={:.16e}\n",
        field.grid().m(),
        field.grid().length(),
        t
    );
    fs::write(stem.with_extension("meta"), meta)?;

    let mut bytes = Vec::with_capacity(field.values().len() * 8);
    for v in field.values() {
        bytes.write_all(&v.to_le_bytes())?;
    }
    fs::write(stem.with_extension("raw"), bytes)?;
    Ok(())
}

/// Reads a snapshot pair back; returns the field and its time stamp.
pub fn read_snapshot(stem: &Path) -> Result<(Field, f64)> {
    let meta_path = stem.with_extension("meta");
    let text = fs::read_to_string(&meta_path)?;
    let mut m: Option<usize> = None;
    let mut l: Option<f64> = None;
    let mut t: Option<f64> = None;
    let mut format_ok = false;
    for line in text.lines() {
        let Some((key, value)) = line.split_once('=') else {
            continue;
        };
        match key.trim() {
            "format" => format_ok = value.trim() == SNAPSHOT_FORMAT,
            "M" => m = value.trim().parse().ok(),
            "L" => l = value.trim().parse().ok(),
            "t" => t = value.trim().parse().ok(),
            _ => {}
        }
    }
    let fail = |message: &str| PfcError::Snapshot {
        path: meta_path.display().to_string(),
        message: message.into(),
    };
    if !format_ok {
        return Err(fail("missing or unknown format line"));
    }
    let (m, l, t) = match (m, l, t) {
        (Some(m), Some(l), Some(t)) => (m, l, t),
        _ => return Err(fail("missing M, L, or t")),
    };
    let grid = GridSpec::new(m, l)?;

    let raw_path = stem.with_extension("raw");
    let bytes = fs::read(&raw_path)?;
    if bytes.len() != grid.points() * 8 {
        return Err(PfcError::Snapshot {
            path: raw_path.display().to_string(),
            message: format!(
                "expected {} bytes, found {}",
                grid.points() * 8,
                bytes.len()
            ),
        });
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((Field::new(grid, values)?, t))
}
