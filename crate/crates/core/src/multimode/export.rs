//! Snapshot export.
//!
//! Binary layout of a `QNDM` dump, all little-endian:
//!
//! ```text
//! magic    4 bytes  "QNDM"
//! version  u32      1
//! ndim     u32      1 (auxiliary field) or 2 (pair field)
//! per axis f64 z_min, f64 z_max, u64 n
//! time     f64
//! data     n^ndim pairs of f64 (re, im), row-major (last axis fastest)
//! ```

use std::io::{Read, Write};

use ndarray::Array2;

use super::{FieldA, FieldPS, Grid1D};
use crate::error::{Error, Result};
use crate::linalg::C64;

pub const QNDM_MAGIC: &[u8; 4] = b"QNDM";
pub const QNDM_VERSION: u32 = 1;

/// Writes `z_p,z_s,re,im,abs2,arg` rows.
pub fn write_snapshot_csv<W: Write>(ps: &FieldPS, out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["z_p", "z_s", "re", "im", "abs2", "arg"])?;
    let z = ps.grid.points();
    for ((p, s), v) in ps.values.indexed_iter() {
        writer.write_record([
            z[p].to_string(),
            z[s].to_string(),
            v.re.to_string(),
            v.im.to_string(),
            v.norm_sqr().to_string(),
            v.arg().to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes `z_a,re,im,abs2,arg` rows.
pub fn write_aux_csv<W: Write>(a: &FieldA, out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["z_a", "re", "im", "abs2", "arg"])?;
    for (z, v) in a.grid.points().iter().zip(a.values.iter()) {
        writer.write_record([
            z.to_string(),
            v.re.to_string(),
            v.im.to_string(),
            v.norm_sqr().to_string(),
            v.arg().to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes `z_p,z_s,phase` rows; masked points are written as `NaN`.
pub fn write_phase_csv<W: Write>(map: &Array2<f64>, grid: &Grid1D, out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["z_p", "z_s", "phase"])?;
    let z = grid.points();
    for ((p, s), v) in map.indexed_iter() {
        writer.write_record([z[p].to_string(), z[s].to_string(), v.to_string()])?;
    }
    writer.flush()?;
    Ok(())
}

/// A decoded dump.
#[derive(Debug, Clone, PartialEq)]
pub struct Dump {
    pub axes: Vec<Grid1D>,
    pub t: f64,
    pub data: Vec<C64>,
}

fn write_header<W: Write>(out: &mut W, grid: &Grid1D, ndim: u32, t: f64) -> Result<()> {
    out.write_all(QNDM_MAGIC)?;
    out.write_all(&QNDM_VERSION.to_le_bytes())?;
    out.write_all(&ndim.to_le_bytes())?;
    for _ in 0..ndim {
        out.write_all(&grid.z_min().to_le_bytes())?;
        out.write_all(&grid.z_max().to_le_bytes())?;
        out.write_all(&(grid.n() as u64).to_le_bytes())?;
    }
    out.write_all(&t.to_le_bytes())?;
    Ok(())
}

fn write_data<'a, W: Write>(out: &mut W, values: impl Iterator<Item = &'a C64>) -> Result<()> {
    for v in values {
        out.write_all(&v.re.to_le_bytes())?;
        out.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

/// Dumps a pair field (`ndim = 2`).
pub fn write_qndm<W: Write>(ps: &FieldPS, t: f64, mut out: W) -> Result<()> {
    write_header(&mut out, &ps.grid, 2, t)?;
    write_data(&mut out, ps.values.iter())?;
    out.flush()?;
    Ok(())
}

/// Dumps an auxiliary field (`ndim = 1`).
pub fn write_qndm_aux<W: Write>(a: &FieldA, t: f64, mut out: W) -> Result<()> {
    write_header(&mut out, &a.grid, 1, t)?;
    write_data(&mut out, a.values.iter())?;
    out.flush()?;
    Ok(())
}

fn read_array<R: Read, const N: usize>(input: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    input.read_exact(&mut buf)?;
    Ok(buf)
}

pub fn read_qndm<R: Read>(mut input: R) -> Result<Dump> {
    let magic: [u8; 4] = read_array(&mut input)?;
    if &magic != QNDM_MAGIC {
        return Err(Error::InvalidParameter("not a QNDM dump".into()));
    }
    let version = u32::from_le_bytes(read_array(&mut input)?);
    if version != QNDM_VERSION {
        return Err(Error::InvalidParameter(format!(
            "unsupported QNDM version {version}"
        )));
    }
    let ndim = u32::from_le_bytes(read_array(&mut input)?);
    if !(1..=2).contains(&ndim) {
        return Err(Error::InvalidParameter(format!("unsupported rank {ndim}")));
    }
    let mut axes = Vec::new();
    for _ in 0..ndim {
        let z_min = f64::from_le_bytes(read_array(&mut input)?);
        let z_max = f64::from_le_bytes(read_array(&mut input)?);
        let n = u64::from_le_bytes(read_array(&mut input)?) as usize;
        axes.push(Grid1D::new(z_min, z_max, n)?);
    }
    let t = f64::from_le_bytes(read_array(&mut input)?);
    let count: usize = axes.iter().map(|g| g.n()).product();
    let mut data = Vec::with_capacity(count);
    for _ in 0..count {
        let re = f64::from_le_bytes(read_array(&mut input)?);
        let im = f64::from_le_bytes(read_array(&mut input)?);
        data.push(C64::new(re, im));
    }
    Ok(Dump { axes, t, data })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multimode::gaussian_pair;

    #[test]
    fn qndm_round_trip() {
        let grid = Grid1D::new(-4.0, 4.0, 64).unwrap();
        let mut ps = gaussian_pair(&grid, 0.6, 0.3, -0.2);
        ps.values[[10, 20]] = C64::new(-1.5e-3, 2.25);
        let mut buf = Vec::new();
        write_qndm(&ps, 1.25, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"QNDM");
        assert_eq!(buf.len(), 4 + 4 + 4 + 2 * 24 + 8 + 64 * 64 * 16);
        let dump = read_qndm(buf.as_slice()).unwrap();
        assert_eq!(dump.axes, vec![grid, grid]);
        assert_eq!(dump.t, 1.25);
        assert!(dump.data.iter().zip(ps.values.iter()).all(|(a, b)| a == b));
    }

    #[test]
    fn qndm_aux_and_bad_magic() {
        let grid = Grid1D::new(-4.0, 4.0, 64).unwrap();
        let mut a = FieldA::zeros(grid);
        a.values[3] = C64::new(0.5, -0.5);
        let mut buf = Vec::new();
        write_qndm_aux(&a, 0.0, &mut buf).unwrap();
        let dump = read_qndm(buf.as_slice()).unwrap();
        assert_eq!(dump.axes.len(), 1);
        assert_eq!(dump.data[3], C64::new(0.5, -0.5));
        buf[0] = b'X';
        assert!(read_qndm(buf.as_slice()).is_err());
    }

    #[test]
    fn snapshot_csv_columns() {
        let grid = Grid1D::new(-4.0, 4.0, 64).unwrap();
        let ps = gaussian_pair(&grid, 0.6, 0.0, 0.0);
        let mut buf = Vec::new();
        write_snapshot_csv(&ps, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("z_p,z_s,re,im,abs2,arg"));
        assert_eq!(lines.count(), 64 * 64);
        let mut map = Array2::from_elem((64, 64), 0.0);
        map[[0, 0]] = f64::NAN;
        let mut buf = Vec::new();
        write_phase_csv(&map, &grid, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().nth(1), Some("-4,-4,NaN"));
    }
}
