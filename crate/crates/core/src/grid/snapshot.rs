//! Binary field snapshots.
//!
//! Layout, all little-endian: `b"HWAV"`, version `u32 = 1`, `n: u32`,
//! `2n + 1` point counts as `u64`, `2n + 1` half-widths as `f64`, the time
//! stamp as `f64`, then the values in row-major order. The boundary mode is
//! not stored; readers supply it.

use std::io::{Read, Write};
use std::sync::Arc;

use super::{Boundary, Field, GridSpec};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"HWAV";
pub const VERSION: u32 = 1;

pub fn write_snapshot<W: Write>(mut w: W, field: &Field, t: f64) -> Result<()> {
    let g = field.grid();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(g.n() as u32).to_le_bytes())?;
    for &p in g.points() {
        w.write_all(&(p as u64).to_le_bytes())?;
    }
    for &l in g.half_widths() {
        w.write_all(&l.to_le_bytes())?;
    }
    w.write_all(&t.to_le_bytes())?;
    let mut buf = Vec::with_capacity(8 * field.values().len());
    for v in field.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format("truncated snapshot".into()),
        _ => Error::Io(e),
    })?;
    Ok(b)
}

/// Returns the field and its time stamp.
pub fn read_snapshot<R: Read>(mut r: R, boundary: Boundary) -> Result<(Field, f64)> {
    if &read_array::<4, _>(&mut r)? != MAGIC {
        return Err(Error::Format("bad magic bytes".into()));
    }
    let version = u32::from_le_bytes(read_array(&mut r)?);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n = u32::from_le_bytes(read_array(&mut r)?) as usize;
    if n == 0 || n > 64 {
        return Err(Error::Format(format!("implausible group parameter n = {n}")));
    }
    let axes = 2 * n + 1;
    let mut points = Vec::with_capacity(axes);
    for _ in 0..axes {
        let p = u64::from_le_bytes(read_array(&mut r)?);
        points.push(usize::try_from(p).map_err(|_| Error::Format("point count overflows".into()))?);
    }
    let mut half_widths = Vec::with_capacity(axes);
    for _ in 0..axes {
        half_widths.push(f64::from_le_bytes(read_array(&mut r)?));
    }
    let t = f64::from_le_bytes(read_array(&mut r)?);
    let grid = GridSpec::new(n, half_widths, points, boundary)
        .map_err(|e| Error::Format(format!("invalid grid header: {e}")))?;
    let mut raw = vec![0u8; 8 * grid.len()];
    r.read_exact(&mut raw)
        .map_err(|_| Error::Format("truncated value block".into()))?;
    let values = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok((Field::from_values(&Arc::new(grid), values)?, t))
}
