//! Matrix product states with open boundaries.
//!
//! Site tensor `n` has shape `[D_n, d_n, D_{n+1}]` (row-major, left bond
//! slowest) with `D_0 = D_N = 1`. The represented vector is
//! `exp(log_norm) · Σ A_0^{i_0} ⋯ A_{N-1}^{i_{N-1}} |i_0 … i_{N-1}⟩`, so large
//! or tiny norms live in `log_norm` instead of the tensors.
//!
//! When `center` is `Some(c)`, tensors left of `c` are left isometries
//! (`Σ_{l,s} A*[l,s,r] A[l,s,r'] = δ`) and tensors right of `c` are right
//! isometries; the norm of the network is then the norm of tensor `c`.

mod checkpoint;
mod env;
mod trotter;

pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use env::{
    bond_expectations, expectation_product, expectation_two_point, fidelity, overlap, pair_matrix, site_expectations,
    Environments, PairFill,
};
pub use trotter::{
    bond_hamiltonians, evolve, layer_sequence, Diagnostics, EvolveOptions, Layer, Parity, TimeMode, TrotterPlan,
};

use crate::error::{Error, Result};
use crate::linalg;
use crate::tensor::{DenseTensor, SvdTruncation};
use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// A `d × d` matrix acting on one site.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalOperator {
    pub site: usize,
    pub matrix: DenseTensor,
}

impl LocalOperator {
    pub fn new(site: usize, matrix: DenseTensor) -> Result<Self> {
        let (r, c) = matrix.expect_matrix()?;
        if r != c {
            return Err(Error::dim(format!("local operator must be square, got {r}x{c}")));
        }
        Ok(LocalOperator { site, matrix })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MpsState {
    tensors: Vec<DenseTensor>,
    local_dims: Vec<usize>,
    center: Option<usize>,
    log_norm: f64,
}

/// Which neighbour receives the singular values after a two-site update.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Sweep {
    /// Left site becomes a left isometry; center moves to the right site.
    Right,
    /// Right site becomes a right isometry; center stays on the left site.
    Left,
}

#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct GateReport {
    pub discarded: f64,
    pub requested_rank: usize,
    pub kept_rank: usize,
}

fn adjoint_flat(a: &[C64], m: usize, n: usize) -> Vec<C64> {
    let mut out = vec![ZERO; m * n];
    for i in 0..m {
        for j in 0..n {
            out[j * m + i] = a[i * n + j].conj();
        }
    }
    out
}

impl MpsState {
    /// Tensor product of the given unit vectors.
    pub fn product_state(local_dims: &[usize], vectors: &[Vec<C64>]) -> Result<Self> {
        if local_dims.is_empty() {
            return Err(Error::arg("empty chain"));
        }
        if local_dims.len() != vectors.len() {
            return Err(Error::dim(format!(
                "{} local dimensions but {} vectors",
                local_dims.len(),
                vectors.len()
            )));
        }
        let mut tensors = Vec::with_capacity(local_dims.len());
        for (n, (&d, v)) in local_dims.iter().zip(vectors).enumerate() {
            if v.len() != d {
                return Err(Error::dim(format!("site {n}: vector length {} != {d}", v.len())));
            }
            let norm: f64 = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-10 {
                return Err(Error::arg(format!("site {n}: local vector has norm {norm}")));
            }
            tensors.push(DenseTensor::new(vec![1, d, 1], v.clone())?);
        }
        Ok(MpsState {
            tensors,
            local_dims: local_dims.to_vec(),
            center: Some(0),
            log_norm: 0.0,
        })
    }

    /// Assembles a state from site tensors, checking bond consistency.
    pub fn from_tensors(tensors: Vec<DenseTensor>, log_norm: f64) -> Result<Self> {
        if tensors.is_empty() {
            return Err(Error::arg("empty chain"));
        }
        let mut local_dims = Vec::with_capacity(tensors.len());
        let mut left = 1usize;
        for (n, t) in tensors.iter().enumerate() {
            if t.rank() != 3 {
                return Err(Error::dim(format!("site {n}: tensor rank {} != 3", t.rank())));
            }
            let sh = t.shape();
            if sh[0] != left {
                return Err(Error::dim(format!(
                    "site {n}: left bond {} does not match {left}",
                    sh[0]
                )));
            }
            local_dims.push(sh[1]);
            left = sh[2];
        }
        if left != 1 {
            return Err(Error::dim("last right bond must be 1"));
        }
        Ok(MpsState {
            tensors,
            local_dims,
            center: None,
            log_norm,
        })
    }

    /// Random state with the given bond dimension cap (deterministic in `seed`).
    pub fn pseudo_random(local_dims: &[usize], bond: usize, seed: u64) -> Result<Self> {
        let n = local_dims.len();
        let mut bonds = vec![1usize; n + 1];
        for i in 1..n {
            let left: usize = local_dims[..i].iter().product::<usize>().min(bond);
            let right: usize = local_dims[i..].iter().product::<usize>().min(bond);
            bonds[i] = left.min(right).max(1);
        }
        let tensors = (0..n)
            .map(|i| DenseTensor::pseudo_random(&[bonds[i], local_dims[i], bonds[i + 1]], seed + i as u64))
            .collect();
        let mut s = Self::from_tensors(tensors, 0.0)?;
        s.normalize()?;
        Ok(s)
    }

    /// Exact MPS of a dense vector (site 0 most significant) via successive SVDs.
    pub fn from_dense(local_dims: &[usize], amplitudes: &[C64], trunc: &SvdTruncation) -> Result<Self> {
        let total: usize = local_dims.iter().product();
        if total != amplitudes.len() {
            return Err(Error::dim(format!(
                "vector length {} != product of local dims {total}",
                amplitudes.len()
            )));
        }
        let mut rest = amplitudes.to_vec();
        let mut left = 1usize;
        let mut remaining = total;
        let mut tensors = Vec::with_capacity(local_dims.len());
        for (n, &d) in local_dims.iter().enumerate() {
            remaining /= d;
            if n + 1 == local_dims.len() {
                tensors.push(DenseTensor::new(vec![left, d, 1], rest.clone())?);
                break;
            }
            let m = DenseTensor::matrix(left * d, remaining, rest)?;
            let svd = crate::tensor::truncated_svd(&m, trunc)?;
            let k = svd.s.len();
            tensors.push(svd.u.reshape(&[left, d, k])?);
            let mut v = svd.v.into_data();
            for i in 0..k {
                for x in &mut v[i * remaining..(i + 1) * remaining] {
                    *x *= svd.s[i];
                }
            }
            rest = v;
            left = k;
        }
        let mut s = Self::from_tensors(tensors, 0.0)?;
        s.center = Some(local_dims.len() - 1);
        Ok(s)
    }

    pub fn n_sites(&self) -> usize {
        self.tensors.len()
    }

    pub fn local_dims(&self) -> &[usize] {
        &self.local_dims
    }

    pub fn tensor(&self, n: usize) -> &DenseTensor {
        &self.tensors[n]
    }

    pub fn tensors(&self) -> &[DenseTensor] {
        &self.tensors
    }

    pub fn center(&self) -> Option<usize> {
        self.center
    }

    pub fn log_norm(&self) -> f64 {
        self.log_norm
    }

    pub fn set_log_norm(&mut self, v: f64) {
        self.log_norm = v;
    }

    /// `D_0 … D_N`.
    pub fn bond_dims(&self) -> Vec<usize> {
        let mut b: Vec<usize> = self.tensors.iter().map(|t| t.shape()[0]).collect();
        b.push(1);
        b
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    fn dims(&self, n: usize) -> (usize, usize, usize) {
        let s = self.tensors[n].shape();
        (s[0], s[1], s[2])
    }

    fn set_tensor(&mut self, n: usize, shape: [usize; 3], data: Vec<C64>) {
        self.tensors[n] = DenseTensor::new(shape.to_vec(), data).expect("consistent site tensor");
    }

    /// Makes site `n` a left isometry, pushing the remainder into `n + 1`.
    fn left_orthonormalize(&mut self, n: usize) {
        let (dl, d, dr) = self.dims(n);
        let (q, r) = linalg::qr(self.tensors[n].data(), dl * d, dr);
        let k = (dl * d).min(dr);
        let (_, d2, dr2) = self.dims(n + 1);
        let next = linalg::matmul(&r, k, dr, self.tensors[n + 1].data(), d2 * dr2);
        self.set_tensor(n, [dl, d, k], q);
        self.set_tensor(n + 1, [k, d2, dr2], next);
    }

    /// Makes site `n` a right isometry, pushing the remainder into `n - 1`.
    fn right_orthonormalize(&mut self, n: usize) {
        let (dl, d, dr) = self.dims(n);
        // A = R† Q† from the QR of A†
        let ah = adjoint_flat(self.tensors[n].data(), dl, d * dr);
        let (q, r) = linalg::qr(&ah, d * dr, dl);
        let k = (d * dr).min(dl);
        let (dl0, d0, _) = self.dims(n - 1);
        let rh = adjoint_flat(&r, k, dl);
        let prev = linalg::matmul(self.tensors[n - 1].data(), dl0 * d0, dl, &rh, k);
        self.set_tensor(n, [k, d, dr], adjoint_flat(&q, d * dr, k));
        self.set_tensor(n - 1, [dl0, d0, k], prev);
    }

    /// Moves the orthogonality center to `to` (full canonicalization if the
    /// state has none yet).
    pub fn move_center(&mut self, to: usize) -> Result<()> {
        let n = self.n_sites();
        if to >= n {
            return Err(Error::arg(format!("site {to} out of range for {n} sites")));
        }
        match self.center {
            None => {
                for i in 0..to {
                    self.left_orthonormalize(i);
                }
                for i in (to + 1..n).rev() {
                    self.right_orthonormalize(i);
                }
            }
            Some(c) if c < to => {
                for i in c..to {
                    self.left_orthonormalize(i);
                }
            }
            Some(c) => {
                for i in (to + 1..=c).rev() {
                    self.right_orthonormalize(i);
                }
            }
        }
        self.center = Some(to);
        Ok(())
    }

    /// Norm of the tensor network alone (without `exp(log_norm)`).
    pub fn network_norm(&mut self) -> f64 {
        if self.center.is_none() {
            self.move_center(0).expect("site 0 exists");
        }
        self.tensors[self.center.unwrap()].norm()
    }

    /// Full norm `exp(log_norm) · ‖network‖`.
    pub fn norm(&mut self) -> f64 {
        self.network_norm() * self.log_norm.exp()
    }

    /// Rescales to unit norm, with `log_norm = 0`. Returns the previous norm's
    /// natural logarithm.
    pub fn normalize(&mut self) -> Result<f64> {
        let nn = self.network_norm();
        if !(nn > 0.0 && nn.is_finite()) {
            return Err(Error::Numeric {
                what: format!("cannot normalize state with network norm {nn}"),
                rows: 0,
                cols: 0,
            });
        }
        let c = self.center.unwrap();
        self.tensors[c].scale_mut(C64::new(1.0 / nn, 0.0));
        let old = self.log_norm + nn.ln();
        self.log_norm = 0.0;
        Ok(old)
    }

    /// Folds the network norm into `log_norm`, leaving a unit-norm network.
    pub fn absorb_norm(&mut self) -> Result<()> {
        self.log_norm = self.normalize()?;
        Ok(())
    }

    /// Applies a one-site operator in place. The center is unchanged unless
    /// it was elsewhere, in which case canonical form is dropped.
    pub fn apply_single_site(&mut self, op: &LocalOperator) -> Result<()> {
        let n = self.n_sites();
        if op.site >= n {
            return Err(Error::arg(format!("operator on site {} of {n}", op.site)));
        }
        let (dl, d, dr) = self.dims(op.site);
        let (r, _) = op.matrix.expect_matrix()?;
        if r != d {
            return Err(Error::arg(format!(
                "operator of size {r} on site {} with dimension {d}",
                op.site
            )));
        }
        let t = apply_physical(op.matrix.data(), self.tensors[op.site].data(), dl, d, dr);
        self.set_tensor(op.site, [dl, d, dr], t);
        if self.center != Some(op.site) {
            self.center = None;
        }
        Ok(())
    }

    /// Applies a two-site gate on `(bond, bond + 1)` in the basis
    /// `i_bond * d_{bond+1} + i_{bond+1}`, truncating the new bond. The
    /// orthogonality center ends on `bond + 1`. Returns the discarded weight.
    pub fn apply_two_site_gate(&mut self, bond: usize, gate: &DenseTensor, trunc: &SvdTruncation) -> Result<f64> {
        trunc.validate()?;
        if bond + 1 >= self.n_sites() {
            return Err(Error::arg(format!("bond {bond} out of range")));
        }
        let dd = self.local_dims[bond] * self.local_dims[bond + 1];
        let (r, c) = gate.expect_matrix()?;
        if r != dd || c != dd {
            return Err(Error::arg(format!("gate is {r}x{c} but bond {bond} needs {dd}x{dd}")));
        }
        let rep = self.apply_gate_directed(bond, gate.data(), trunc, Sweep::Right, false)?;
        Ok(rep.discarded)
    }

    pub(crate) fn apply_gate_directed(
        &mut self,
        bond: usize,
        gate: &[C64],
        trunc: &SvdTruncation,
        dir: Sweep,
        renormalize: bool,
    ) -> Result<GateReport> {
        match self.center {
            Some(c) if c == bond || c == bond + 1 => {}
            Some(c) if c < bond => self.move_center(bond)?,
            _ => self.move_center(bond + 1)?,
        }
        let (dl, d1, dm) = self.dims(bond);
        let (_, d2, dr) = self.dims(bond + 1);
        let dd = d1 * d2;
        let theta = linalg::matmul(
            self.tensors[bond].data(),
            dl * d1,
            dm,
            self.tensors[bond + 1].data(),
            d2 * dr,
        );
        // theta'[l, s', r] = Σ_s G[s', s] theta[l, s, r]
        let mut out = vec![ZERO; theta.len()];
        let blk = dd * dr;
        for l in 0..dl {
            let prod = linalg::matmul(gate, dd, dd, &theta[l * blk..(l + 1) * blk], dr);
            out[l * blk..(l + 1) * blk].copy_from_slice(&prod);
        }
        self.split(bond, out, dl, d1, d2, dr, trunc, dir, renormalize)
    }

    /// Splits a two-site block back into site tensors by truncated SVD.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn split(
        &mut self,
        bond: usize,
        theta: Vec<C64>,
        dl: usize,
        d1: usize,
        d2: usize,
        dr: usize,
        trunc: &SvdTruncation,
        dir: Sweep,
        renormalize: bool,
    ) -> Result<GateReport> {
        let (m, n) = (dl * d1, d2 * dr);
        let svd = linalg::svd(&theta, m, n)?;
        let (keep, discarded, requested) = trunc.select(&svd.s);
        let mut s: Vec<f64> = svd.s[..keep].to_vec();
        if renormalize {
            let nrm = s.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(nrm > 0.0 && nrm.is_finite()) {
                return Err(Error::Numeric {
                    what: format!("state collapsed to norm {nrm} on bond {bond}"),
                    rows: m,
                    cols: n,
                });
            }
            for x in &mut s {
                *x /= nrm;
            }
            self.log_norm += nrm.ln();
        }
        let r = svd.rank;
        let mut u = Vec::with_capacity(m * keep);
        for i in 0..m {
            u.extend_from_slice(&svd.u[i * r..i * r + keep]);
        }
        let mut v = svd.vt[..keep * n].to_vec();
        match dir {
            Sweep::Right => {
                for (i, &si) in s.iter().enumerate() {
                    for x in &mut v[i * n..(i + 1) * n] {
                        *x *= si;
                    }
                }
                self.center = Some(bond + 1);
            }
            Sweep::Left => {
                for row in u.chunks_mut(keep) {
                    for (x, &si) in row.iter_mut().zip(&s) {
                        *x *= si;
                    }
                }
                self.center = Some(bond);
            }
        }
        self.set_tensor(bond, [dl, d1, keep], u);
        self.set_tensor(bond + 1, [keep, d2, dr], v);
        Ok(GateReport {
            discarded,
            requested_rank: requested,
            kept_rank: keep,
        })
    }

    /// Applies `Σ_n c_n O_n` (one operator per site, zero coefficients
    /// skipped) as a bond-dimension-2 operator string. The result is not
    /// compressed; call [`MpsState::compress`] afterwards.
    pub fn apply_operator_sum(&mut self, coeffs: &[C64], ops: &[DenseTensor]) -> Result<()> {
        let n = self.n_sites();
        if coeffs.len() != n || ops.len() != n {
            return Err(Error::dim(format!(
                "need {n} coefficients and operators, got {} and {}",
                coeffs.len(),
                ops.len()
            )));
        }
        for (i, op) in ops.iter().enumerate() {
            let (r, c) = op.expect_matrix()?;
            if r != self.local_dims[i] || c != r {
                return Err(Error::dim(format!("operator on site {i} is {r}x{c}")));
            }
        }
        // Operator-string states: 0 = not yet applied, 1 = applied.
        // W[0,0] = I, W[0,1] = c O, W[1,1] = I; left boundary 0, right boundary 1.
        let mut new = Vec::with_capacity(n);
        for i in 0..n {
            let (dl, d, dr) = self.dims(i);
            let a = self.tensors[i].data();
            let oa = apply_physical(ops[i].data(), a, dl, d, dr);
            let alpha: &[usize] = if i == 0 { &[0] } else { &[0, 1] };
            let beta: &[usize] = if i == n - 1 { &[1] } else { &[0, 1] };
            let (nl, nr) = (dl * alpha.len(), dr * beta.len());
            let mut t = vec![ZERO; nl * d * nr];
            for (ai, &al) in alpha.iter().enumerate() {
                for (bi, &be) in beta.iter().enumerate() {
                    let (src, w): (&[C64], C64) = match (al, be) {
                        (0, 0) | (1, 1) => (a, ONE),
                        (0, 1) => (&oa, coeffs[i]),
                        _ => continue,
                    };
                    if w == ZERO {
                        continue;
                    }
                    for l in 0..dl {
                        for s in 0..d {
                            for r in 0..dr {
                                let dst = ((ai * dl + l) * d + s) * nr + bi * dr + r;
                                t[dst] += w * src[(l * d + s) * dr + r];
                            }
                        }
                    }
                }
            }
            new.push(DenseTensor::new(vec![nl, d, nr], t)?);
        }
        self.tensors = new;
        self.center = None;
        Ok(())
    }

    /// Re-truncates every bond: left-canonicalize by QR, then a right-to-left
    /// sweep of truncated SVDs. Returns the summed discarded weight and the
    /// largest rank the tolerance asked for.
    pub fn compress(&mut self, trunc: &SvdTruncation) -> Result<(f64, usize)> {
        trunc.validate()?;
        let n = self.n_sites();
        self.center = None;
        self.move_center(n - 1)?;
        let mut total = 0.0;
        let mut requested = 1;
        for i in (1..n).rev() {
            let (dl, d, dr) = self.dims(i);
            let (dl0, d0, _) = self.dims(i - 1);
            let theta = linalg::matmul(self.tensors[i - 1].data(), dl0 * d0, dl, self.tensors[i].data(), d * dr);
            let rep = self.split(i - 1, theta, dl0, d0, d, dr, trunc, Sweep::Left, false)?;
            total += rep.discarded;
            requested = requested.max(rep.requested_rank);
        }
        Ok((total, requested))
    }

    /// Dense amplitude vector, site 0 most significant. Refuses more than
    /// `2^24` amplitudes.
    pub fn to_dense(&self) -> Result<Vec<C64>> {
        let total = self
            .local_dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .filter(|&t| t <= 1 << 24)
            .ok_or_else(|| Error::Resource("dense vector above 2^24 amplitudes".into()))?;
        let _ = total;
        let mut acc = self.tensors[0].data().to_vec();
        let mut rows = self.local_dims[0];
        let mut bond = self.dims(0).2;
        for i in 1..self.n_sites() {
            let (_, d, dr) = self.dims(i);
            acc = linalg::matmul(&acc, rows, bond, self.tensors[i].data(), d * dr);
            rows *= d;
            bond = dr;
        }
        let f = self.log_norm.exp();
        Ok(acc.into_iter().map(|x| x * f).collect())
    }
}

/// `out[l, s, r] = Σ_t op[s, t] a[l, t, r]`.
pub(crate) fn apply_physical(op: &[C64], a: &[C64], dl: usize, d: usize, dr: usize) -> Vec<C64> {
    let mut out = vec![ZERO; dl * d * dr];
    let blk = d * dr;
    for l in 0..dl {
        let prod = linalg::matmul(op, d, d, &a[l * blk..(l + 1) * blk], dr);
        out[l * blk..(l + 1) * blk].copy_from_slice(&prod);
    }
    out
}
