//! Transfer-matrix contractions: overlaps, local expectation values and
//! cached-environment correlators.
//!
//! A left environment after sites `0..n` is a `D_n(bra) × D_n(ket)` matrix
//! `L[a, b]`; a right environment for sites `n..N` has the same index order.
//! Every value returned here includes both states' `exp(log_norm)` factors.

use super::{apply_physical, LocalOperator, MpsState};
use crate::error::{Error, Result};
use crate::linalg::{self, Op};
use crate::par;
use crate::tensor::DenseTensor;
use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Extends a left environment by one site, with an optional operator on the
/// ket's physical index.
fn left_step(l: &[C64], bra: &DenseTensor, ket: &DenseTensor, op: Option<&[C64]>) -> Vec<C64> {
    let (da, d, da2) = dims3(bra);
    let (db, _, db2) = dims3(ket);
    let owned;
    let k: &[C64] = match op {
        Some(o) => {
            owned = apply_physical(o, ket.data(), db, d, db2);
            &owned
        }
        None => ket.data(),
    };
    // T[a, s, b'] = Σ_b L[a, b] K[b, s, b']
    let t = linalg::matmul(l, da, db, k, d * db2);
    // L'[a', b'] = Σ_{a, s} conj(A[a, s, a']) T[a, s, b']
    linalg::matmul_adjoint_lhs(bra.data(), da * d, da2, &t, db2)
}

/// Extends a right environment by one site to the left.
fn right_step(r: &[C64], bra: &DenseTensor, ket: &DenseTensor, op: Option<&[C64]>) -> Vec<C64> {
    let (da, d, da2) = dims3(bra);
    let (db, _, db2) = dims3(ket);
    let owned;
    let k: &[C64] = match op {
        Some(o) => {
            owned = apply_physical(o, ket.data(), db, d, db2);
            &owned
        }
        None => ket.data(),
    };
    // T[b, s, a'] = Σ_b' K[b, s, b'] R[a', b']
    let (t, _, _) = linalg::gemm(k, db * d, db2, Op::N, r, da2, db2, Op::T);
    // R'[a, b] = Σ_{s, a'} conj(A[a, s, a']) T[b, s, a']
    let (out, _, _) = linalg::gemm(bra.data(), da, d * da2, Op::C, &t, db, d * da2, Op::T);
    out
}

fn dims3(t: &DenseTensor) -> (usize, usize, usize) {
    let s = t.shape();
    (s[0], s[1], s[2])
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_pair(bra: &MpsState, ket: &MpsState) -> Result<()> {
    if bra.local_dims() != ket.local_dims() {
        return Err(Error::dim("bra and ket have different local dimensions"));
    }
    Ok(())
}

fn norm_factor(bra: &MpsState, ket: &MpsState) -> C64 {
    C64::new((bra.log_norm() + ket.log_norm()).exp(), 0.0)
}

fn check_op(state: &MpsState, site: usize, m: &DenseTensor) -> Result<()> {
    let n = state.n_sites();
    if site >= n {
        return Err(Error::arg(format!("operator on site {site}, chain has {n} sites")));
    }
    let d = state.local_dims()[site];
    let (r, c) = m.expect_matrix()?;
    if r != d || c != d {
        return Err(Error::arg(format!("operator {r}x{c} on site {site} of dimension {d}")));
    }
    Ok(())
}

/// `⟨bra| Π_n o_n |ket⟩` with at most one operator per site.
pub fn expectation_product(bra: &MpsState, ket: &MpsState, ops: &[LocalOperator]) -> Result<C64> {
    check_pair(bra, ket)?;
    let n = ket.n_sites();
    let mut per_site: Vec<Option<&[C64]>> = vec![None; n];
    for op in ops {
        check_op(ket, op.site, &op.matrix)?;
        if per_site[op.site].is_some() {
            return Err(Error::arg(format!("two operators on site {}", op.site)));
        }
        per_site[op.site] = Some(op.matrix.data());
    }
    let mut l = vec![C64::new(1.0, 0.0)];
    for (i, op) in per_site.iter().enumerate() {
        l = left_step(&l, bra.tensor(i), ket.tensor(i), *op);
    }
    Ok(l[0] * norm_factor(bra, ket))
}

pub fn overlap(bra: &MpsState, ket: &MpsState) -> Result<C64> {
    expectation_product(bra, ket, &[])
}

/// `|⟨a|b⟩|² / (⟨a|a⟩⟨b|b⟩)`.
pub fn fidelity(a: &MpsState, b: &MpsState) -> Result<f64> {
    let ab = overlap(a, b)?;
    let aa = overlap(a, a)?.re;
    let bb = overlap(b, b)?.re;
    Ok(ab.norm_sqr() / (aa * bb))
}

/// Identity-operator environments for a bra/ket pair: `left[n]` covers sites
/// `0..n` and `right[n]` covers `n..N`, for `n = 0..=N`.
pub struct Environments<'a> {
    bra: &'a MpsState,
    ket: &'a MpsState,
    left: Vec<Vec<C64>>,
    right: Vec<Vec<C64>>,
}

impl<'a> Environments<'a> {
    pub fn new(bra: &'a MpsState, ket: &'a MpsState) -> Result<Self> {
        check_pair(bra, ket)?;
        let n = ket.n_sites();
        let one = vec![C64::new(1.0, 0.0)];
        let mut left = Vec::with_capacity(n + 1);
        left.push(one.clone());
        for i in 0..n {
            let next = left_step(&left[i], bra.tensor(i), ket.tensor(i), None);
            left.push(next);
        }
        let mut right = vec![Vec::new(); n + 1];
        right[n] = one;
        for i in (0..n).rev() {
            right[i] = right_step(&right[i + 1], bra.tensor(i), ket.tensor(i), None);
        }
        Ok(Environments { bra, ket, left, right })
    }

    /// `⟨bra|ket⟩`.
    pub fn overlap(&self) -> C64 {
        self.left[self.ket.n_sites()][0] * norm_factor(self.bra, self.ket)
    }

    /// `⟨o⟩` for a single operator at `site`.
    pub fn local(&self, site: usize, op: &DenseTensor) -> Result<C64> {
        check_op(self.ket, site, op)?;
        let l = left_step(
            &self.left[site],
            self.bra.tensor(site),
            self.ket.tensor(site),
            Some(op.data()),
        );
        Ok(dot(&l, &self.right[site + 1]) * norm_factor(self.bra, self.ket))
    }

    /// `⟨o_{site} ⊗ o_{site+1}⟩` for a two-site operator in the basis
    /// `i_site * d_{site+1} + i_{site+1}`.
    pub fn two_site(&self, site: usize, op: &DenseTensor) -> Result<C64> {
        let n = self.ket.n_sites();
        if site + 1 >= n {
            return Err(Error::arg(format!("bond {site} out of range")));
        }
        let merge = |s: &MpsState| -> DenseTensor {
            let (dl, d1, dm) = dims3(s.tensor(site));
            let (_, d2, dr) = dims3(s.tensor(site + 1));
            let th = linalg::matmul(s.tensor(site).data(), dl * d1, dm, s.tensor(site + 1).data(), d2 * dr);
            DenseTensor::new(vec![dl, d1 * d2, dr], th).expect("merged block")
        };
        let kb = merge(self.ket);
        let (r, c) = op.expect_matrix()?;
        if r != kb.shape()[1] || c != r {
            return Err(Error::arg(format!("two-site operator {r}x{c} on bond {site}")));
        }
        let bb = merge(self.bra);
        let l = left_step(&self.left[site], &bb, &kb, Some(op.data()));
        Ok(dot(&l, &self.right[site + 2]) * norm_factor(self.bra, self.ket))
    }
}

/// `⟨o_n⟩` for one operator per site (each evaluated separately).
pub fn site_expectations(bra: &MpsState, ket: &MpsState, ops: &[DenseTensor]) -> Result<Vec<C64>> {
    let env = Environments::new(bra, ket)?;
    if ops.len() != ket.n_sites() {
        return Err(Error::dim("need one operator per site"));
    }
    par::map_range(ops.len(), |i| env.local(i, &ops[i]))
        .into_iter()
        .collect()
}

/// `⟨h_b⟩` for one two-site operator per bond.
pub fn bond_expectations(bra: &MpsState, ket: &MpsState, ops: &[DenseTensor]) -> Result<Vec<C64>> {
    let env = Environments::new(bra, ket)?;
    if ops.len() + 1 != ket.n_sites() {
        return Err(Error::dim("need one operator per bond"));
    }
    par::map_range(ops.len(), |i| env.two_site(i, &ops[i]))
        .into_iter()
        .collect()
}

/// Which entries of a pair matrix are computed directly.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairFill {
    /// Every ordered pair.
    Full,
    /// Upper triangle, lower filled as the conjugate transpose (valid for
    /// `⟨o_i† o_j⟩` with bra = ket).
    Hermitian,
    /// Upper triangle, lower filled by transposition (valid when `op_a` and
    /// `op_b` are the same operator).
    Symmetric,
}

/// `M[i][j] = ⟨bra| (op_a)_i (op_b)_j |ket⟩` for all site pairs, row-major
/// `N × N`. `op_a[i]`, `op_b[i]` are the operators on site `i`; on the
/// diagonal the product `op_a[i] · op_b[i]` is used. Operators on distinct
/// sites commute, so for `i > j` the contraction meets `op_b` first.
///
/// Cached environments make the cost `O(N² D³)`.
pub fn pair_matrix(
    bra: &MpsState,
    ket: &MpsState,
    op_a: &[DenseTensor],
    op_b: &[DenseTensor],
    fill: PairFill,
) -> Result<Vec<C64>> {
    let env = Environments::new(bra, ket)?;
    let n = ket.n_sites();
    if op_a.len() != n || op_b.len() != n {
        return Err(Error::dim("need one operator per site"));
    }
    for i in 0..n {
        check_op(ket, i, &op_a[i])?;
        check_op(ket, i, &op_b[i])?;
    }
    let f = norm_factor(bra, ket);
    // row i: the operator at i is the left one for j > i
    let sweep = |i: usize, first: &[DenseTensor], second: &[DenseTensor]| -> Vec<C64> {
        let mut row = vec![ZERO; n];
        let mut x = left_step(&env.left[i], bra.tensor(i), ket.tensor(i), Some(first[i].data()));
        for j in i + 1..n {
            let closed = left_step(&x, bra.tensor(j), ket.tensor(j), Some(second[j].data()));
            row[j] = dot(&closed, &env.right[j + 1]) * f;
            if j + 1 < n {
                x = left_step(&x, bra.tensor(j), ket.tensor(j), None);
            }
        }
        row
    };
    let upper = par::map_range(n, |i| sweep(i, op_a, op_b));
    let lower = match fill {
        PairFill::Full => Some(par::map_range(n, |j| sweep(j, op_b, op_a))),
        _ => None,
    };
    let diag: Vec<C64> = par::map_range(n, |i| {
        let prod = op_a[i].matmul(&op_b[i]).expect("square operators");
        env.local(i, &prod).expect("checked operator")
    });
    let mut m = vec![ZERO; n * n];
    for i in 0..n {
        m[i * n + i] = diag[i];
        for j in i + 1..n {
            m[i * n + j] = upper[i][j];
            m[j * n + i] = match (&lower, fill) {
                // low[i][j]: op_b at i, op_a at j
                (Some(low), _) => low[i][j],
                (None, PairFill::Hermitian) => upper[i][j].conj(),
                _ => upper[i][j],
            };
        }
    }
    Ok(m)
}

/// `⟨op_a op_b⟩` on one state, `op_a.site ≤ op_b.site`.
pub fn expectation_two_point(state: &MpsState, op_a: &LocalOperator, op_b: &LocalOperator) -> Result<C64> {
    if op_a.site > op_b.site {
        return Err(Error::arg("two-point operators must be ordered by site"));
    }
    if op_a.site == op_b.site {
        let prod = op_a.matrix.matmul(&op_b.matrix)?;
        return expectation_product(state, state, &[LocalOperator::new(op_a.site, prod)?]);
    }
    expectation_product(state, state, &[op_a.clone(), op_b.clone()])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_expect(bra: &[C64], ket: &[C64], dims: &[usize], ops: &[LocalOperator]) -> C64 {
        let total: usize = dims.iter().product();
        let mut v = ket.to_vec();
        for op in ops {
            let right: usize = dims[op.site + 1..].iter().product();
            let d = dims[op.site];
            let mut w = vec![ZERO; total];
            for idx in 0..total {
                let s = (idx / right) % d;
                let base = idx - s * right;
                for t in 0..d {
                    w[idx] += op.matrix.get(&[s, t]) * v[base + t * right];
                }
            }
            v = w;
        }
        bra.iter().zip(&v).map(|(a, b)| a.conj() * b).sum()
    }

    #[test]
    fn random_pairs_match_dense() {
        let dims = [2, 3, 2, 3, 2];
        let a = MpsState::pseudo_random(&dims, 5, 3).unwrap();
        let b = MpsState::pseudo_random(&dims, 4, 4).unwrap();
        let (va, vb) = (a.to_dense().unwrap(), b.to_dense().unwrap());
        let ops = vec![
            LocalOperator::new(1, DenseTensor::pseudo_random(&[3, 3], 7)).unwrap(),
            LocalOperator::new(4, DenseTensor::pseudo_random(&[2, 2], 8)).unwrap(),
        ];
        let got = expectation_product(&a, &b, &ops).unwrap();
        let want = dense_expect(&va, &vb, &dims, &ops);
        assert!((got - want).norm() < 1e-10 * want.norm().max(1.0));
    }

    #[test]
    fn pair_matrix_matches_direct_products() {
        let dims = [2, 2, 3, 2];
        let a = MpsState::pseudo_random(&dims, 4, 21).unwrap();
        let b = MpsState::pseudo_random(&dims, 4, 22).unwrap();
        let oa: Vec<DenseTensor> = dims
            .iter()
            .enumerate()
            .map(|(i, &d)| DenseTensor::pseudo_random(&[d, d], 30 + i as u64))
            .collect();
        let ob: Vec<DenseTensor> = dims
            .iter()
            .enumerate()
            .map(|(i, &d)| DenseTensor::pseudo_random(&[d, d], 40 + i as u64))
            .collect();
        let m = pair_matrix(&a, &b, &oa, &ob, PairFill::Full).unwrap();
        let n = dims.len();
        for i in 0..n {
            for j in 0..n {
                let want = if i == j {
                    let p = oa[i].matmul(&ob[i]).unwrap();
                    expectation_product(&a, &b, &[LocalOperator::new(i, p).unwrap()]).unwrap()
                } else {
                    expectation_product(
                        &a,
                        &b,
                        &[
                            LocalOperator::new(i, oa[i].clone()).unwrap(),
                            LocalOperator::new(j, ob[j].clone()).unwrap(),
                        ],
                    )
                    .unwrap()
                };
                assert!((m[i * n + j] - want).norm() < 1e-12, "({i},{j})");
            }
        }
    }

    #[test]
    fn two_site_expectation_matches_product_of_locals() {
        let dims = [2, 3, 2];
        let s = MpsState::pseudo_random(&dims, 3, 2).unwrap();
        let o1 = DenseTensor::pseudo_random(&[3, 3], 1);
        let o2 = DenseTensor::pseudo_random(&[2, 2], 2);
        let env = Environments::new(&s, &s).unwrap();
        let got = env.two_site(1, &o1.kron(&o2).unwrap()).unwrap();
        let want = expectation_product(
            &s,
            &s,
            &[LocalOperator::new(1, o1).unwrap(), LocalOperator::new(2, o2).unwrap()],
        )
        .unwrap();
        assert!((got - want).norm() < 1e-12);
    }
}
