//! Binary field snapshots.
//!
//! Layout (little endian): magic `MHDFIELD`, `u32` version, `u32` field count,
//! then per field `u32 d, u32 n, f64 L, u32 components, u8 zero_mean` followed
//! by `components · n^d` pairs of `f64` (re, im) in row-major FFT order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{MhdError, Result};
use crate::fields::SpectralField;
use crate::grid::Grid;

const MAGIC: &[u8; 8] = b"MHDFIELD";
const VERSION: u32 = 1;

pub fn write_fields<W: Write>(mut w: W, fields: &[&SpectralField]) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(fields.len() as u32).to_le_bytes())?;
    for f in fields {
        let g = f.grid();
        w.write_all(&(g.dim() as u32).to_le_bytes())?;
        w.write_all(&(g.n() as u32).to_le_bytes())?;
        w.write_all(&g.length().to_le_bytes())?;
        w.write_all(&(f.components() as u32).to_le_bytes())?;
        w.write_all(&[f.zero_mean() as u8])?;
        for c in f.coeffs() {
            w.write_all(&c.re.to_le_bytes())?;
            w.write_all(&c.im.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_fields<R: Read>(mut r: R) -> Result<Vec<SpectralField>> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(MhdError::Format("not a field snapshot (bad magic)".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(MhdError::Format(format!("unsupported snapshot version {version}")));
    }
    let count = read_u32(&mut r)? as usize;
    let mut grids: Vec<Grid> = Vec::new();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let d = read_u32(&mut r)? as usize;
        let n = read_u32(&mut r)? as usize;
        let length = read_f64(&mut r)?;
        let components = read_u32(&mut r)? as usize;
        let mut flag = [0u8; 1];
        r.read_exact(&mut flag)?;
        if flag[0] > 1 {
            return Err(MhdError::Format(format!("zero_mean flag {}", flag[0])));
        }
        if components == 0 || components > 9 {
            return Err(MhdError::Format(format!("component count {components}")));
        }
        let grid = match grids.iter().find(|g| g.dim() == d && g.n() == n && g.length() == length) {
            Some(g) => g.clone(),
            None => {
                let g = Grid::new(d, n, length).map_err(|e| MhdError::Format(e.to_string()))?;
                grids.push(g.clone());
                g
            }
        };
        let total = components * grid.size();
        let mut coeffs = Vec::with_capacity(total);
        for _ in 0..total {
            let re = read_f64(&mut r)?;
            let im = read_f64(&mut r)?;
            coeffs.push(Complex64::new(re, im));
        }
        out.push(SpectralField::from_coeffs(&grid, components, flag[0] == 1, coeffs)?);
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(MhdError::Format("trailing bytes after last field".into()));
    }
    Ok(out)
}

pub fn save(path: impl AsRef<Path>, fields: &[&SpectralField]) -> Result<()> {
    write_fields(BufWriter::new(File::create(path)?), fields)
}

pub fn load(path: impl AsRef<Path>) -> Result<Vec<SpectralField>> {
    read_fields(BufReader::new(File::open(path)?))
}
