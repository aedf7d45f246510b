//! Flat binary and CSV layouts for grid fields.
//!
//! Binary layout, all little-endian:
//!
//! ```text
//! u64 n            ambient dimension
//! u64 comps        values per node (1 for scalar fields)
//! u64 res[n]       cells per axis
//! f64 lo[n]
//! f64 hi[n]
//! f64 values[...]  node-major, row-major node order, components innermost
//! ```

use std::io::{Read, Write};
use std::path::Path;

use super::{BoundaryMode, Grid, ScalarField, VecField};
use crate::error::{Error, Result};

fn header(grid: &Grid, comps: usize) -> Vec<u8> {
    let n = grid.dim();
    let mut out = Vec::with_capacity(8 * (2 + 3 * n));
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&(comps as u64).to_le_bytes());
    for &r in grid.res() {
        out.extend_from_slice(&(r as u64).to_le_bytes());
    }
    for &v in grid.lo().iter().chain(grid.hi()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn encode(grid: &Grid, comps: usize, values: &[f64]) -> Vec<u8> {
    let mut out = header(grid, comps);
    out.reserve(8 * values.len());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn word(&mut self) -> Result<[u8; 8]> {
        let end = self.pos + 8;
        let chunk = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::Data("truncated field file".into()))?;
        self.pos = end;
        Ok(chunk.try_into().expect("slice of length 8"))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.word()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.word()?))
    }
}

fn decode(bytes: &[u8]) -> Result<(Grid, usize, Vec<f64>)> {
    let mut c = Cursor { bytes, pos: 0 };
    let n = c.u64()? as usize;
    if !(1..=3).contains(&n) {
        return Err(Error::Data(format!("field header declares dimension {n}")));
    }
    let comps = c.u64()? as usize;
    let res = (0..n).map(|_| c.u64().map(|r| r as usize)).collect::<Result<Vec<_>>>()?;
    let lo = (0..n).map(|_| c.f64()).collect::<Result<Vec<_>>>()?;
    let hi = (0..n).map(|_| c.f64()).collect::<Result<Vec<_>>>()?;
    let grid = Grid::new(lo, hi, res)?;
    let count = comps * grid.node_count();
    if bytes.len() != c.pos + 8 * count {
        return Err(Error::Data(format!(
            "field file holds {} bytes of values, expected {}",
            bytes.len() - c.pos,
            8 * count
        )));
    }
    let values = (0..count).map(|_| c.f64()).collect::<Result<Vec<_>>>()?;
    Ok((grid, comps, values))
}

impl ScalarField {
    pub fn to_bytes(&self) -> Vec<u8> {
        encode(self.grid(), 1, self.values())
    }

    /// Decodes a scalar field; the boundary mode is not stored and is supplied here.
    pub fn from_bytes(bytes: &[u8], mode: BoundaryMode) -> Result<Self> {
        let (grid, comps, values) = decode(bytes)?;
        if comps != 1 {
            return Err(Error::Data(format!("expected a scalar field, found {comps} components")));
        }
        ScalarField::new(grid, values, mode)
    }

    pub fn write_binary(&self, path: &Path) -> Result<()> {
        write_all(path, &self.to_bytes())
    }

    pub fn read_binary(path: &Path, mode: BoundaryMode) -> Result<Self> {
        ScalarField::from_bytes(&read_all(path)?, mode)
    }

    /// CSV with columns `x1..xn,value`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_csv_rows(self.grid(), 1, self.values(), &["value".to_string()], out)
    }
}

impl VecField {
    pub fn to_bytes(&self) -> Vec<u8> {
        encode(self.grid(), self.comps(), self.values())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (grid, comps, values) = decode(bytes)?;
        VecField::new(grid, comps, values)
    }

    pub fn write_binary(&self, path: &Path) -> Result<()> {
        write_all(path, &self.to_bytes())
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        VecField::from_bytes(&read_all(path)?)
    }

    /// CSV with columns `x1..xn,c1..cm`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let names: Vec<String> = (1..=self.comps()).map(|c| format!("c{c}")).collect();
        write_csv_rows(self.grid(), self.comps(), self.values(), &names, out)
    }
}

fn write_csv_rows<W: Write>(
    grid: &Grid,
    comps: usize,
    values: &[f64],
    names: &[String],
    out: W,
) -> Result<()> {
    let csv_err = |e: csv::Error| Error::Data(format!("csv: {e}"));
    let mut w = csv::Writer::from_writer(out);
    let mut head: Vec<String> = (1..=grid.dim()).map(|a| format!("x{a}")).collect();
    head.extend(names.iter().cloned());
    w.write_record(&head).map_err(csv_err)?;
    let mut row = Vec::with_capacity(head.len());
    for k in 0..grid.node_count() {
        row.clear();
        row.extend(grid.coords(k).iter().map(|x| format!("{x:.16e}")));
        row.extend(values[k * comps..(k + 1) * comps].iter().map(|v| format!("{v:.16e}")));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Data(format!("csv: {e}")))?;
    Ok(())
}

fn write_all(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(bytes))
        .map_err(|e| Error::io(path, e))
}

fn read_all(path: &Path) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    Ok(buf)
}
