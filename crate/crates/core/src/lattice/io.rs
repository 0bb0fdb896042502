//! Field snapshot format: a fixed header followed by the raw component
//! array in multi-index-major order, little-endian f64, bit-exact on round
//! trip.

use std::io::{Read, Write};
use std::path::Path;

use super::{FormField, Grid};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"IIA6";
const VERSION: u16 = 1;
/// Value of the endianness tag as written on a little-endian producer.
const ENDIAN_TAG: u16 = 0x00FF;

pub fn write_snapshot(path: &Path, f: &FormField) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&ENDIAN_TAG.to_le_bytes())?;
    w.write_all(&[f.degree() as u8, 0])?;
    for n in f.grid().dims() {
        w.write_all(&(n as u32).to_le_bytes())?;
    }
    w.write_all(&f.grid().length().to_le_bytes())?;
    let (npts, nc) = (f.npts(), f.ncomp());
    let data = f.data();
    for c in 0..nc {
        for pt in 0..npts {
            w.write_all(&data[pt * nc + c].to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<FormField> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut head = [0u8; 4];
    r.read_exact(&mut head)?;
    if &head != MAGIC {
        return Err(Error::BadSnapshot("bad magic".into()));
    }
    let mut u16buf = [0u8; 2];
    r.read_exact(&mut u16buf)?;
    if u16::from_le_bytes(u16buf) != VERSION {
        return Err(Error::BadSnapshot("unsupported version".into()));
    }
    r.read_exact(&mut u16buf)?;
    if u16::from_le_bytes(u16buf) != ENDIAN_TAG {
        return Err(Error::BadSnapshot("endianness tag mismatch".into()));
    }
    let mut db = [0u8; 2];
    r.read_exact(&mut db)?;
    let degree = db[0] as usize;
    if degree > 6 {
        return Err(Error::BadSnapshot(format!("bad degree {degree}")));
    }
    let mut dims = [0usize; 6];
    for d in &mut dims {
        let mut b = [0u8; 4];
        r.read_exact(&mut b)?;
        *d = u32::from_le_bytes(b) as usize;
    }
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let length = f64::from_le_bytes(b8);
    let grid = Grid::anisotropic(dims, length)?;
    let mut f = FormField::zeros(grid, degree);
    let (npts, nc) = (grid.npts(), f.ncomp());
    {
        let data = f.data_mut();
        for c in 0..nc {
            for pt in 0..npts {
                r.read_exact(&mut b8)?;
                data[pt * nc + c] = f64::from_le_bytes(b8);
            }
        }
    }
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::BadSnapshot("trailing bytes".into()));
    }
    Ok(f)
}
