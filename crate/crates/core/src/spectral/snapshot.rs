//! Binary velocity snapshot.
//!
//! Layout, all little-endian:
//!
//! | bytes          | content                        |
//! |----------------|--------------------------------|
//! | 8              | magic `SMAGBOX1`               |
//! | 8              | `N` as 64-bit integer          |
//! | 8              | box length `L` as f64          |
//! | 8              | time `t` as f64                |
//! | 3 * 8 * N^3    | `u1`, `u2`, `u3`, x-fastest    |

use std::io::{Read, Write};

use super::{Grid, VectorField};
use crate::{Error, Result};

pub const MAGIC: &[u8; 8] = b"SMAGBOX1";

pub fn write_snapshot<W: Write>(mut w: W, u: &VectorField, t: f64) -> Result<()> {
    let g = u.grid();
    w.write_all(MAGIC)?;
    w.write_all(&(g.n() as u64).to_le_bytes())?;
    w.write_all(&g.box_length().to_le_bytes())?;
    w.write_all(&t.to_le_bytes())?;
    let mut buf = Vec::with_capacity(8 * g.len());
    for c in 0..3 {
        buf.clear();
        for v in u.component(c) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

/// Reads a snapshot, returning the velocity and its time stamp.
pub fn read_snapshot<R: Read>(mut r: R) -> Result<(VectorField, f64)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Schema {
            path: Default::default(),
            message: "bad snapshot magic".into(),
        });
    }
    let n = read_u64(&mut r)? as usize;
    let box_length = read_f64(&mut r)?;
    let t = read_f64(&mut r)?;
    let grid = Grid::new(n, box_length)?;
    let mut bytes = vec![0u8; 8 * grid.len()];
    let mut comps: [Vec<f64>; 3] = Default::default();
    for comp in comps.iter_mut() {
        r.read_exact(&mut bytes)?;
        *comp = bytes
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
    }
    Ok((VectorField::from_components(&grid, comps)?, t))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}
