//! Dense complex tensors.
//!
//! Storage is a flat row-major buffer: the last axis varies fastest. For a
//! tensor of shape `[n0, n1, n2]` the element `(i, j, k)` lives at
//! `(i * n1 + j) * n2 + k`. Scalars are rank-1 tensors of shape `[1]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::C64;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<C64>,
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<C64>) -> Result<Self> {
        if shape.is_empty() {
            return Err(Error::arg("rank-0 tensors are not allowed; use shape [1]"));
        }
        if shape.contains(&0) {
            return Err(Error::arg(format!("zero extent in shape {shape:?}")));
        }
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(Error::dim(format!(
                "shape {shape:?} needs {len} elements, got {}",
                data.len()
            )));
        }
        Ok(DenseTensor { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        DenseTensor {
            shape: shape.to_vec(),
            data: vec![C64::new(0.0, 0.0); len],
        }
    }

    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> C64) -> Self {
        let mut t = Self::zeros(shape);
        let mut idx = vec![0usize; shape.len()];
        for v in t.data.iter_mut() {
            *v = f(&idx);
            for ax in (0..shape.len()).rev() {
                idx[ax] += 1;
                if idx[ax] < shape[ax] {
                    break;
                }
                idx[ax] = 0;
            }
        }
        t
    }

    /// Deterministic pseudo-random entries with real and imaginary parts in
    /// `[-0.5, 0.5)`. Meant for tests and benchmarks; not a quality RNG.
    pub fn pseudo_random(shape: &[usize], seed: u64) -> Self {
        let mut s = seed.wrapping_mul(0x9E3779B97F4A7C15) | 1;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        Self::from_fn(shape, |_| C64::new(next(), next()))
    }

    pub fn scalar(v: C64) -> Self {
        DenseTensor {
            shape: vec![1],
            data: vec![v],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(&[n, n], |i| {
            if i[0] == i[1] {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    /// Builds an `rows × cols` matrix from a row-major buffer.
    pub fn matrix(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        Self::new(vec![rows, cols], data)
    }

    /// Real matrix from nested rows; handy for operator literals.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::dim("ragged rows"));
        }
        let data = rows.iter().flat_map(|r| r.iter().map(|&x| C64::new(x, 0.0))).collect();
        Self::new(vec![n, m], data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    fn strides(shape: &[usize]) -> Vec<usize> {
        let mut s = vec![1usize; shape.len()];
        for ax in (0..shape.len().saturating_sub(1)).rev() {
            s[ax] = s[ax + 1] * shape[ax + 1];
        }
        s
    }

    pub fn get(&self, idx: &[usize]) -> C64 {
        let st = Self::strides(&self.shape);
        self.data[idx.iter().zip(&st).map(|(i, s)| i * s).sum::<usize>()]
    }

    pub fn set(&mut self, idx: &[usize], v: C64) {
        let st = Self::strides(&self.shape);
        let off = idx.iter().zip(&st).map(|(i, s)| i * s).sum::<usize>();
        self.data[off] = v;
    }

    pub fn reshape(mut self, shape: &[usize]) -> Result<Self> {
        let len: usize = shape.iter().product();
        if shape.is_empty() || len != self.data.len() || shape.contains(&0) {
            return Err(Error::dim(format!("cannot reshape {:?} into {shape:?}", self.shape)));
        }
        self.shape = shape.to_vec();
        Ok(self)
    }

    /// Reorders axes: axis `k` of the result is axis `perm[k]` of `self`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        let r = self.rank();
        if perm.len() != r {
            return Err(Error::arg(format!("permutation {perm:?} for rank {r}")));
        }
        let mut seen = vec![false; r];
        for &p in perm {
            if p >= r || seen[p] {
                return Err(Error::arg(format!("invalid permutation {perm:?}")));
            }
            seen[p] = true;
        }
        if perm.iter().enumerate().all(|(i, &p)| i == p) {
            return Ok(self.clone());
        }
        let new_shape: Vec<usize> = perm.iter().map(|&p| self.shape[p]).collect();
        let old_strides = Self::strides(&self.shape);
        let src_strides: Vec<usize> = perm.iter().map(|&p| old_strides[p]).collect();
        let mut out = Vec::with_capacity(self.data.len());
        let mut idx = vec![0usize; r];
        let mut off = 0usize;
        for _ in 0..self.data.len() {
            out.push(self.data[off]);
            for ax in (0..r).rev() {
                idx[ax] += 1;
                off += src_strides[ax];
                if idx[ax] < new_shape[ax] {
                    break;
                }
                off -= src_strides[ax] * new_shape[ax];
                idx[ax] = 0;
            }
        }
        Ok(DenseTensor {
            shape: new_shape,
            data: out,
        })
    }

    pub fn conj(&self) -> Self {
        DenseTensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, alpha: C64) -> Self {
        DenseTensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|z| z * alpha).collect(),
        }
    }

    pub fn scale_mut(&mut self, alpha: C64) {
        self.data.iter_mut().for_each(|z| *z *= alpha);
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::dim(format!("adding {:?} and {:?}", self.shape, other.shape)));
        }
        Ok(DenseTensor {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// Conjugate transpose of a matrix.
    pub fn adjoint(&self) -> Result<Self> {
        self.expect_matrix()?;
        Ok(self.permute(&[1, 0])?.conj())
    }

    pub fn expect_matrix(&self) -> Result<(usize, usize)> {
        match self.shape.as_slice() {
            &[r, c] => Ok((r, c)),
            s => Err(Error::dim(format!("expected a matrix, got shape {s:?}"))),
        }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        contract(self, other, &[(1, 0)])
    }

    /// Kronecker product of two matrices: `(a ⊗ b)[(i,k),(j,l)] = a[i,j] b[k,l]`.
    pub fn kron(&self, other: &Self) -> Result<Self> {
        let (ar, ac) = self.expect_matrix()?;
        let (br, bc) = other.expect_matrix()?;
        Ok(Self::from_fn(&[ar * br, ac * bc], |i| {
            let (ia, ib) = (i[0] / br, i[0] % br);
            let (ja, jb) = (i[1] / bc, i[1] % bc);
            self.data[ia * ac + ja] * other.data[ib * bc + jb]
        }))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.shape != other.shape {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        match self.adjoint() {
            Ok(h) => h.max_abs_diff(self) <= tol,
            Err(_) => false,
        }
    }
}

/// Sums over paired axes of `a` and `b`.
///
/// The result carries the free axes of `a` followed by the free axes of `b`,
/// each group in original order. With no pairs this is the outer product.
/// If every axis is contracted the result is the scalar tensor `[1]`.
pub fn contract(a: &DenseTensor, b: &DenseTensor, axis_pairs: &[(usize, usize)]) -> Result<DenseTensor> {
    let (ra, rb) = (a.rank(), b.rank());
    let mut used_a = vec![false; ra];
    let mut used_b = vec![false; rb];
    for &(ia, ib) in axis_pairs {
        if ia >= ra || ib >= rb {
            return Err(Error::arg(format!(
                "axis pair ({ia},{ib}) out of range for ranks {ra},{rb}"
            )));
        }
        if used_a[ia] || used_b[ib] {
            return Err(Error::arg(format!("axis repeated in pairs {axis_pairs:?}")));
        }
        used_a[ia] = true;
        used_b[ib] = true;
        if a.shape[ia] != b.shape[ib] {
            return Err(Error::dim(format!(
                "contracting axis {ia} (extent {}) with axis {ib} (extent {})",
                a.shape[ia], b.shape[ib]
            )));
        }
    }
    let free_a: Vec<usize> = (0..ra).filter(|&i| !used_a[i]).collect();
    let free_b: Vec<usize> = (0..rb).filter(|&i| !used_b[i]).collect();
    let perm_a: Vec<usize> = free_a.iter().copied().chain(axis_pairs.iter().map(|p| p.0)).collect();
    let perm_b: Vec<usize> = axis_pairs.iter().map(|p| p.1).chain(free_b.iter().copied()).collect();
    let m: usize = free_a.iter().map(|&i| a.shape[i]).product();
    let k: usize = axis_pairs.iter().map(|p| a.shape[p.0]).product();
    let n: usize = free_b.iter().map(|&i| b.shape[i]).product();
    let ap = a.permute(&perm_a)?;
    let bp = b.permute(&perm_b)?;
    let data = linalg::matmul(&ap.data, m, k, &bp.data, n);
    let mut shape: Vec<usize> = free_a
        .iter()
        .map(|&i| a.shape[i])
        .chain(free_b.iter().map(|&i| b.shape[i]))
        .collect();
    if shape.is_empty() {
        shape.push(1);
    }
    DenseTensor::new(shape, data)
}

/// Rank-truncation policy for SVD-based compression.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvdTruncation {
    pub max_rank: usize,
    /// Largest admissible discarded weight, i.e. the sum of dropped squared
    /// singular values relative to the total.
    pub discard_tolerance: f64,
}

impl SvdTruncation {
    pub fn new(max_rank: usize, discard_tolerance: f64) -> Result<Self> {
        let t = SvdTruncation {
            max_rank,
            discard_tolerance,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn exact(max_rank: usize) -> Self {
        SvdTruncation {
            max_rank,
            discard_tolerance: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_rank == 0 {
            return Err(Error::arg("max_rank must be positive"));
        }
        if !(0.0..1.0).contains(&self.discard_tolerance) {
            return Err(Error::arg(format!(
                "discard_tolerance {} outside [0, 1)",
                self.discard_tolerance
            )));
        }
        Ok(())
    }

    /// Number of values to keep from a non-increasing spectrum, together with
    /// the resulting discarded weight. Also returns the rank the tolerance
    /// alone would ask for, so callers can detect cap pressure.
    pub fn select(&self, s: &[f64]) -> (usize, f64, usize) {
        let total: f64 = s.iter().map(|x| x * x).sum();
        if s.is_empty() || total == 0.0 {
            return (1.min(s.len()), 0.0, 1.min(s.len()));
        }
        // tail[i] = sum_{j >= i} s_j^2
        let mut tail = vec![0.0; s.len() + 1];
        for i in (0..s.len()).rev() {
            tail[i] = tail[i + 1] + s[i] * s[i];
        }
        let limit = self.discard_tolerance * total;
        let mut needed = s.len();
        for r in 1..=s.len() {
            if tail[r] <= limit {
                needed = r;
                break;
            }
        }
        let keep = needed.min(self.max_rank).max(1);
        (keep, tail[keep] / total, needed)
    }
}

#[derive(Clone, Debug)]
pub struct TruncatedSvd {
    /// `m × r`, orthonormal columns.
    pub u: DenseTensor,
    /// Non-increasing, non-negative.
    pub s: Vec<f64>,
    /// `r × n`, orthonormal rows, so that `u · diag(s) · v ≈ m`.
    pub v: DenseTensor,
    pub discarded_weight: f64,
    /// Rank the discard tolerance alone would have kept.
    pub requested_rank: usize,
}

/// Singular value decomposition truncated according to `trunc`.
pub fn truncated_svd(m: &DenseTensor, trunc: &SvdTruncation) -> Result<TruncatedSvd> {
    let (rows, cols) = m.expect_matrix()?;
    let full = linalg::svd(m.data(), rows, cols)?;
    let (keep, discarded_weight, requested_rank) = trunc.select(&full.s);
    let r = full.rank;
    let mut u = Vec::with_capacity(rows * keep);
    for i in 0..rows {
        u.extend_from_slice(&full.u[i * r..i * r + keep]);
    }
    let v = full.vt[..keep * cols].to_vec();
    Ok(TruncatedSvd {
        u: DenseTensor::matrix(rows, keep, u)?,
        s: full.s[..keep].to_vec(),
        v: DenseTensor::matrix(keep, cols, v)?,
        discarded_weight,
        requested_rank,
    })
}
