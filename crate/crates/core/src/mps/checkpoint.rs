//! Binary checkpoints of an [`MpsState`].
//!
//! Layout, all integers and floats little-endian:
//!
//! | bytes            | content                                        |
//! |------------------|------------------------------------------------|
//! | 8                | magic `WGMPS\0\0\0`                            |
//! | 4 (u32)          | format version, currently 1                    |
//! | 8 (u64)          | number of sites `N`                            |
//! | 8 (i64)          | orthogonality center, `-1` for none            |
//! | 8 (f64)          | `log_norm`                                     |
//! | 8·N (u64)        | local dimensions `d_0 … d_{N-1}`               |
//! | 8·(N+1) (u64)    | bond dimensions `D_0 … D_N`                    |
//! | 16·Σ D_n d_n D_{n+1} | site tensors in order, each row-major `[D_n, d_n, D_{n+1}]`, every entry as `re: f64, im: f64` |
//!
//! Readers reject unknown versions, inconsistent bonds and trailing bytes.

use std::io::{Read, Write};

use super::MpsState;
use crate::error::{Error, Result};
use crate::tensor::DenseTensor;
use crate::C64;

pub const CHECKPOINT_MAGIC: [u8; 8] = *b"WGMPS\0\0\0";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn write_checkpoint<W: Write>(state: &MpsState, mut w: W) -> Result<()> {
    let n = state.n_sites();
    w.write_all(&CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&(n as u64).to_le_bytes())?;
    let c = state.center().map_or(-1i64, |c| c as i64);
    w.write_all(&c.to_le_bytes())?;
    w.write_all(&state.log_norm().to_le_bytes())?;
    for &d in state.local_dims() {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    for b in state.bond_dims() {
        w.write_all(&(b as u64).to_le_bytes())?;
    }
    let mut buf = Vec::new();
    for t in state.tensors() {
        buf.clear();
        buf.reserve(t.len() * 16);
        for z in t.data() {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

fn read_array<const K: usize, R: Read>(r: &mut R) -> Result<[u8; K]> {
    let mut b = [0u8; K];
    r.read_exact(&mut b)
        .map_err(|e| Error::Checkpoint(format!("truncated file: {e}")))?;
    Ok(b)
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    Ok(u64::from_le_bytes(read_array::<8, _>(r)?))
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<MpsState> {
    let magic = read_array::<8, _>(&mut r)?;
    if magic != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("bad magic bytes".into()));
    }
    let version = u32::from_le_bytes(read_array::<4, _>(&mut r)?);
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let n = read_u64(&mut r)? as usize;
    if n == 0 || n > 1 << 20 {
        return Err(Error::Checkpoint(format!("implausible site count {n}")));
    }
    let center = i64::from_le_bytes(read_array::<8, _>(&mut r)?);
    let log_norm = f64::from_le_bytes(read_array::<8, _>(&mut r)?);
    let dims: Vec<usize> = (0..n)
        .map(|_| read_u64(&mut r).map(|x| x as usize))
        .collect::<Result<_>>()?;
    let bonds: Vec<usize> = (0..=n)
        .map(|_| read_u64(&mut r).map(|x| x as usize))
        .collect::<Result<_>>()?;
    if bonds[0] != 1 || bonds[n] != 1 {
        return Err(Error::Checkpoint("boundary bonds must be 1".into()));
    }
    let mut tensors = Vec::with_capacity(n);
    for i in 0..n {
        let shape = [bonds[i], dims[i], bonds[i + 1]];
        let len = shape
            .iter()
            .try_fold(1usize, |a, &b| a.checked_mul(b))
            .filter(|&l| l > 0 && l < 1 << 32)
            .ok_or_else(|| Error::Checkpoint(format!("bad shape {shape:?} at site {i}")))?;
        let mut raw = vec![0u8; len * 16];
        r.read_exact(&mut raw)
            .map_err(|e| Error::Checkpoint(format!("truncated tensor {i}: {e}")))?;
        let data = raw
            .chunks_exact(16)
            .map(|c| {
                C64::new(
                    f64::from_le_bytes(c[..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..].try_into().unwrap()),
                )
            })
            .collect();
        tensors.push(DenseTensor::new(shape.to_vec(), data)?);
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::Checkpoint("trailing bytes after last tensor".into()));
    }
    let mut state = MpsState::from_tensors(tensors, log_norm)?;
    if center >= 0 {
        if center as usize >= n {
            return Err(Error::Checkpoint(format!("center {center} out of range")));
        }
        state.center = Some(center as usize);
    }
    Ok(state)
}
