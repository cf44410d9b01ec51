//! Thin row-major wrappers around the dense kernels of `faer`.
//!
//! Every buffer here is a row-major `&[C64]` with explicit extents. All calls
//! run with sequential parallelism so results are bit-reproducible.

use faer::linalg::matmul::matmul as faer_matmul;
use faer::{Accum, Mat, MatMut, MatRef, Par, Side};

use crate::error::{Error, Result};
use crate::C64;

fn view(a: &[C64], rows: usize, cols: usize) -> MatRef<'_, C64> {
    MatRef::from_row_major_slice(a, rows, cols)
}

fn to_row_major(m: MatRef<'_, C64>) -> Vec<C64> {
    let (r, c) = (m.nrows(), m.ncols());
    let mut out = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// `a (m×k) · b (k×n)`.
pub fn matmul(a: &[C64], m: usize, k: usize, b: &[C64], n: usize) -> Vec<C64> {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    let mut out = vec![C64::new(0.0, 0.0); m * n];
    if m == 0 || n == 0 {
        return out;
    }
    {
        let dst = MatMut::from_row_major_slice_mut(&mut out, m, n);
        faer_matmul(
            dst,
            Accum::Replace,
            view(a, m, k),
            view(b, k, n),
            C64::new(1.0, 0.0),
            Par::Seq,
        );
    }
    out
}

/// `a† (m×k, stored k×m) · b (k×n)`.
pub fn matmul_adjoint_lhs(a: &[C64], k: usize, m: usize, b: &[C64], n: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); m * n];
    if m == 0 || n == 0 {
        return out;
    }
    {
        let dst = MatMut::from_row_major_slice_mut(&mut out, m, n);
        faer_matmul(
            dst,
            Accum::Replace,
            view(a, k, m).adjoint(),
            view(b, k, n),
            C64::new(1.0, 0.0),
            Par::Seq,
        );
    }
    out
}

/// How a stored row-major operand enters a product.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    /// as stored
    N,
    /// transposed
    T,
    /// complex conjugated
    C,
    /// conjugate transposed
    H,
}

fn mm_into<L, R>(dst: MatMut<'_, C64>, lhs: MatRef<'_, L>, rhs: MatRef<'_, R>)
where
    L: faer::traits::Conjugate<Canonical = C64>,
    R: faer::traits::Conjugate<Canonical = C64>,
{
    faer_matmul(dst, Accum::Replace, lhs, rhs, C64::new(1.0, 0.0), Par::Seq);
}

/// General product `op(a) · op(b)` of row-major operands stored as
/// `ar × ac` and `br × bc`. Returns the row-major result and its extents.
#[allow(clippy::too_many_arguments)]
pub fn gemm(
    a: &[C64],
    ar: usize,
    ac: usize,
    opa: Op,
    b: &[C64],
    br: usize,
    bc: usize,
    opb: Op,
) -> (Vec<C64>, usize, usize) {
    let (m, k) = match opa {
        Op::N | Op::C => (ar, ac),
        Op::T | Op::H => (ac, ar),
    };
    let (k2, n) = match opb {
        Op::N | Op::C => (br, bc),
        Op::T | Op::H => (bc, br),
    };
    assert_eq!(k, k2, "inner extents differ");
    let mut out = vec![C64::new(0.0, 0.0); m * n];
    if m == 0 || n == 0 {
        return (out, m, n);
    }
    {
        let dst = MatMut::from_row_major_slice_mut(&mut out, m, n);
        let va = view(a, ar, ac);
        let vb = view(b, br, bc);
        macro_rules! rhs {
            ($l:expr) => {
                match opb {
                    Op::N => mm_into(dst, $l, vb),
                    Op::T => mm_into(dst, $l, vb.transpose()),
                    Op::C => mm_into(dst, $l, vb.conjugate()),
                    Op::H => mm_into(dst, $l, vb.adjoint()),
                }
            };
        }
        match opa {
            Op::N => rhs!(va),
            Op::T => rhs!(va.transpose()),
            Op::C => rhs!(va.conjugate()),
            Op::H => rhs!(va.adjoint()),
        }
    }
    (out, m, n)
}

pub struct Svd {
    /// m × r
    pub u: Vec<C64>,
    pub s: Vec<f64>,
    /// r × n
    pub vt: Vec<C64>,
    pub rank: usize,
}

/// Thin SVD, singular values non-increasing.
pub fn svd(a: &[C64], m: usize, n: usize) -> Result<Svd> {
    let dec = view(a, m, n).thin_svd().map_err(|e| Error::Numeric {
        what: format!("svd did not converge ({e:?})"),
        rows: m,
        cols: n,
    })?;
    let r = m.min(n);
    let s: Vec<f64> = (0..r).map(|i| dec.S()[i].re).collect();
    if s.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric {
            what: "non-finite singular value".into(),
            rows: m,
            cols: n,
        });
    }
    let u = to_row_major(dec.U());
    let v = dec.V();
    let mut vt = Vec::with_capacity(r * n);
    for i in 0..r {
        for j in 0..n {
            vt.push(v[(j, i)].conj());
        }
    }
    Ok(Svd { u, s, vt, rank: r })
}

/// Eigendecomposition of a Hermitian matrix. Eigenvalues ascending; the
/// eigenvectors are the columns of the returned row-major `n × n` buffer.
pub fn eigh(a: &[C64], n: usize) -> Result<(Vec<f64>, Vec<C64>)> {
    let dec = view(a, n, n)
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numeric {
            what: format!("hermitian eigensolver failed ({e:?})"),
            rows: n,
            cols: n,
        })?;
    let vals = (0..n).map(|i| dec.S()[i].re).collect();
    Ok((vals, to_row_major(dec.U())))
}

/// Eigendecomposition of a real symmetric matrix, same conventions as [`eigh`].
pub fn eigh_real(a: &[f64], n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = MatRef::from_row_major_slice(a, n, n);
    let dec = m.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Numeric {
        what: format!("symmetric eigensolver failed ({e:?})"),
        rows: n,
        cols: n,
    })?;
    let vals = (0..n).map(|i| dec.S()[i]).collect();
    let u = dec.U();
    let mut vecs = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            vecs.push(u[(i, j)]);
        }
    }
    Ok((vals, vecs))
}

/// Thin QR: `a (m×n) = q (m×r) · r (r×n)` with `r = min(m, n)`.
pub fn qr(a: &[C64], m: usize, n: usize) -> (Vec<C64>, Vec<C64>) {
    let dec = view(a, m, n).qr();
    let q = dec.compute_thin_Q();
    let r = dec.thin_R();
    (to_row_major(q.as_ref()), to_row_major(r))
}

/// Lower Cholesky factor of a Hermitian positive-definite matrix, or `None`
/// when the matrix is not positive definite.
pub fn cholesky_lower(a: &[C64], n: usize) -> Option<Vec<C64>> {
    let dec = view(a, n, n).llt(Side::Lower).ok()?;
    let l = dec.L();
    Some(to_row_major(l))
}

/// Solves `a x = b` for square `a` (n×n) and `b` (n×k) by partial-pivot LU.
/// Returns `None` when the reciprocal condition estimate is below `1e-14`.
pub fn solve(a: &[C64], n: usize, b: &[C64], k: usize) -> Option<Vec<C64>> {
    let am = view(a, n, n);
    let lu = am.partial_piv_lu();
    let rhs = Mat::from_fn(n, k, |i, j| b[i * k + j]);
    let x = faer::linalg::solvers::Solve::solve(&lu, &rhs);
    // residual check doubles as singularity detection
    let xs = to_row_major(x.as_ref());
    if xs.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return None;
    }
    let back = matmul(a, n, n, &xs, k);
    let scale: f64 = b.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
    let err: f64 = back.iter().zip(b).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
    let xnorm: f64 = xs.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let anorm: f64 = a.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if err > 1e-8 * scale.max(anorm * xnorm) || xnorm * anorm > 1e14 * scale {
        return None;
    }
    Some(xs)
}

/// `exp(factor · h)` for Hermitian `h`, via its eigendecomposition.
/// `factor` is `-i τ` for real-time gates and `-τ` for imaginary-time gates.
pub fn expm_hermitian(h: &[C64], n: usize, factor: C64) -> Result<Vec<C64>> {
    let (vals, vecs) = eigh(h, n)?;
    let mut scaled = vecs.clone();
    for i in 0..n {
        for (j, &lam) in vals.iter().enumerate() {
            scaled[i * n + j] *= (factor * lam).exp();
        }
    }
    // scaled · vecs†
    let mut out = vec![C64::new(0.0, 0.0); n * n];
    {
        let dst = MatMut::from_row_major_slice_mut(&mut out, n, n);
        faer_matmul(
            dst,
            Accum::Replace,
            view(&scaled, n, n),
            view(&vecs, n, n).adjoint(),
            C64::new(1.0, 0.0),
            Par::Seq,
        );
    }
    Ok(out)
}
