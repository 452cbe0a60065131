//! Flat binary tensors and per-cell CSV for grid functions.
//!
//! Binary layout: 4-byte magic, `u32` version, `u32` axis count, one `u32`
//! depth per axis, then every cell as a little-endian `f64` in row-major
//! order. Grid functions use magic `DYDL`; Haar coefficient tensors use `DYHC`
//! and must be transformed along every axis.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, MultiGrid};
use crate::haar::HaarCoeffs;

pub const GRID_MAGIC: &[u8; 4] = b"DYDL";
pub const HAAR_MAGIC: &[u8; 4] = b"DYHC";
pub const FORMAT_VERSION: u32 = 1;

/// Shortest text that parses back to the same `f64`.
pub fn format_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:?}")
    }
}

fn write_tensor<W: Write>(mut w: W, magic: &[u8; 4], grid: &MultiGrid, data: &[f64]) -> Result<()> {
    let mut buf = Vec::with_capacity(12 + 4 * grid.m() + 8 * data.len());
    buf.extend_from_slice(magic);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(grid.m() as u32).to_le_bytes());
    for &n in grid.levels() {
        buf.extend_from_slice(&(n as u32).to_le_bytes());
    }
    for v in data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_tensor<R: Read>(mut r: R, magic: &[u8; 4]) -> Result<(MultiGrid, Vec<f64>)> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let mut at = 0usize;
    let mut take = |n: usize| -> Result<&[u8]> {
        let s = bytes.get(at..at + n).ok_or_else(|| Error::Format("truncated file".into()))?;
        at += n;
        Ok(s)
    };
    let u32_of = |s: &[u8]| u32::from_le_bytes(s.try_into().expect("4 bytes"));
    if take(4)? != magic {
        return Err(Error::Format(format!("bad magic, expected {}", String::from_utf8_lossy(magic))));
    }
    let version = u32_of(take(4)?);
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let m = u32_of(take(4)?) as usize;
    if m == 0 || m > crate::grid::MAX_AXES {
        return Err(Error::Format(format!("axis count {m}")));
    }
    let mut levels = Vec::with_capacity(m);
    for _ in 0..m {
        levels.push(u32_of(take(4)?) as usize);
    }
    let grid = MultiGrid::new(levels)?;
    let mut data = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        data.push(f64::from_le_bytes(take(8)?.try_into().expect("8 bytes")));
    }
    if at != bytes.len() {
        return Err(Error::Format("trailing bytes".into()));
    }
    Ok((grid, data))
}

pub fn write_grid_function<W: Write>(w: W, f: &GridFunction) -> Result<()> {
    write_tensor(w, GRID_MAGIC, f.grid(), f.data())
}

pub fn read_grid_function<R: Read>(r: R) -> Result<GridFunction> {
    let (grid, data) = read_tensor(r, GRID_MAGIC)?;
    GridFunction::new(grid, data)
}

pub fn write_haar_coeffs<W: Write>(w: W, c: &HaarCoeffs) -> Result<()> {
    if c.axes().len() != c.grid().m() {
        return Err(Error::Format("only fully transformed coefficient tensors are serializable".into()));
    }
    write_tensor(w, HAAR_MAGIC, c.grid(), c.data())
}

pub fn read_haar_coeffs<R: Read>(r: R) -> Result<HaarCoeffs> {
    let (grid, data) = read_tensor(r, HAAR_MAGIC)?;
    let axes = (0..grid.m()).collect();
    HaarCoeffs::new(grid, axes, data)
}

/// Header `axis0,...,value` then one row per cell.
pub fn to_csv(f: &GridFunction) -> String {
    let grid = f.grid();
    let mut s = String::new();
    for a in 0..grid.m() {
        s.push_str(&format!("axis{a},"));
    }
    s.push_str("value\n");
    for (flat, v) in f.data().iter().enumerate() {
        for i in grid.unflatten(flat) {
            s.push_str(&format!("{i},"));
        }
        s.push_str(&format_f64(*v));
        s.push('\n');
    }
    s
}

/// Parses [`to_csv`] output; depths are inferred from the index ranges and
/// every cell must appear exactly once.
pub fn from_csv(text: &str) -> Result<GridFunction> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Format("empty csv".into()))?;
    let m = header.split(',').count().checked_sub(1).filter(|&m| m >= 1)
        .ok_or_else(|| Error::Format("csv needs index columns and a value column".into()))?;
    let mut rows = Vec::new();
    for (ln, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != m + 1 {
            return Err(Error::Format(format!("row {} has {} columns", ln + 2, cols.len())));
        }
        let idx = cols[..m]
            .iter()
            .map(|c| c.parse::<usize>().map_err(|e| Error::Format(format!("row {}: {e}", ln + 2))))
            .collect::<Result<Vec<_>>>()?;
        let v: f64 = cols[m].parse().map_err(|e| Error::Format(format!("row {}: {e}", ln + 2)))?;
        rows.push((idx, v));
    }
    let mut levels = Vec::with_capacity(m);
    for a in 0..m {
        let len = rows.iter().map(|r| r.0[a]).max().map_or(0, |x| x + 1);
        if !len.is_power_of_two() || len < 2 {
            return Err(Error::Format(format!("axis {a} has {len} cells, not a power of two >= 2")));
        }
        levels.push(len.trailing_zeros() as usize);
    }
    let grid = MultiGrid::new(levels)?;
    if rows.len() != grid.len() {
        return Err(Error::Format(format!("{} rows for {} cells", rows.len(), grid.len())));
    }
    let mut data = vec![f64::NAN; grid.len()];
    let mut seen = vec![false; grid.len()];
    for (idx, v) in rows {
        let flat = grid.flat_index(&idx);
        if std::mem::replace(&mut seen[flat], true) {
            return Err(Error::Format(format!("duplicate cell {idx:?}")));
        }
        data[flat] = v;
    }
    GridFunction::new(grid, data)
}

/// Loads by extension: `.csv` as CSV, anything else as binary.
pub fn load_grid_function(path: &Path) -> Result<GridFunction> {
    if path.extension().is_some_and(|e| e == "csv") {
        from_csv(&std::fs::read_to_string(path)?)
    } else {
        read_grid_function(std::fs::File::open(path)?)
    }
}

/// Saves by extension: `.csv` as CSV, anything else as binary.
pub fn save_grid_function(path: &Path, f: &GridFunction) -> Result<()> {
    if path.extension().is_some_and(|e| e == "csv") {
        std::fs::write(path, to_csv(f))?;
        Ok(())
    } else {
        write_grid_function(std::fs::File::create(path)?, f)
    }
}
