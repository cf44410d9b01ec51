//! Momentum-space observables on the open chain.
//!
//! The DFT uses chain coordinates `x = -L..=L`:
//! `ψ̃_k = N^{-1/2} Σ_x e^{-ikx} ψ_x` and
//! `n_k = N^{-1} Σ_{x₁x₂} e^{ik(x₁-x₂)} ⟨a†_{x₁} a_{x₂}⟩`.
//! The grid is `k_m = k_ref + 2πm/N`, which is a complete orthogonal set for
//! any offset `k_ref`; choosing `k_ref = k_in` puts the carrier on a bin.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{self, Op};
use crate::C64;

/// The `N` grid momenta `k_ref + 2πm/N`, folded into `(-π, π]` and sorted.
pub fn momentum_grid(n_cav: usize, k_ref: f64) -> Vec<f64> {
    let n = n_cav as f64;
    let mut ks: Vec<f64> = (0..n_cav)
        .map(|m| {
            let k = k_ref + 2.0 * PI * m as f64 / n;
            let w = (k + PI).rem_euclid(2.0 * PI) - PI;
            if w <= -PI + 1e-12 {
                PI
            } else {
                w
            }
        })
        .collect();
    ks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ks
}

/// Grid momenta strictly inside `(0, π)`.
pub fn positive_bins(n_cav: usize, k_ref: f64) -> Vec<f64> {
    momentum_grid(n_cav, k_ref)
        .into_iter()
        .filter(|&k| k > 1e-12 && k < PI - 1e-12)
        .collect()
}

fn phases(coords: &[i64], k: f64, sign: f64) -> Vec<C64> {
    coords
        .iter()
        .map(|&x| C64::from_polar(1.0, sign * k * x as f64))
        .collect()
}

/// `ψ̃_k` for each `k`.
pub fn dft(field: &[C64], coords: &[i64], ks: &[f64]) -> Vec<C64> {
    let norm = (coords.len() as f64).sqrt();
    ks.iter()
        .map(|&k| {
            field
                .iter()
                .zip(coords)
                .map(|(f, &x)| f * C64::from_polar(1.0, -k * x as f64))
                .sum::<C64>()
                / norm
        })
        .collect()
}

/// `n_k` from the row-major correlation matrix `C[x₁][x₂] = ⟨a†_{x₁} a_{x₂}⟩`.
pub fn density_from_correlations(corr: &[C64], coords: &[i64], ks: &[f64]) -> Result<Vec<f64>> {
    let n = coords.len();
    if corr.len() != n * n {
        return Err(Error::dim("correlation matrix does not match coordinates"));
    }
    if ks.is_empty() {
        return Ok(Vec::new());
    }
    // U[x, k] = e^{-ikx}; n_k = (U† C U)_kk / N
    let mut u = vec![C64::new(0.0, 0.0); n * ks.len()];
    for (j, &k) in ks.iter().enumerate() {
        for (i, p) in phases(coords, k, -1.0).into_iter().enumerate() {
            u[i * ks.len() + j] = p;
        }
    }
    let cu = linalg::matmul(corr, n, n, &u, ks.len());
    let (m, _, _) = linalg::gemm(&u, n, ks.len(), Op::H, &cu, n, ks.len(), Op::N);
    Ok((0..ks.len()).map(|j| m[j * ks.len() + j].re / n as f64).collect())
}

/// Spectral ratios `T_k = n_k(t)/n_k(0)`, `R_k = n_{-k}(t)/n_k(0)` on bins
/// whose input weight reaches `threshold`; other bins are `None`.
pub fn transmission_reflection(
    n0: &[f64],
    nt_plus: &[f64],
    nt_minus: &[f64],
    threshold: f64,
) -> Result<(Vec<Option<f64>>, Vec<Option<f64>>)> {
    if n0.len() != nt_plus.len() || n0.len() != nt_minus.len() {
        return Err(Error::dim("spectra have different lengths"));
    }
    let mut t = Vec::with_capacity(n0.len());
    let mut r = Vec::with_capacity(n0.len());
    for i in 0..n0.len() {
        if n0[i] >= threshold {
            t.push(Some(nt_plus[i] / n0[i]));
            r.push(Some(nt_minus[i] / n0[i]));
        } else {
            t.push(None);
            r.push(None);
        }
    }
    if t.iter().all(Option::is_none) {
        return Err(Error::EmptySpectrum { threshold });
    }
    Ok((t, r))
}

/// `T₂ = ½(1 - |t|² - |r|²)`. Values below `-tolerance` flag an
/// inconsistent run; values in `[-tolerance, 0)` are returned unchanged.
pub fn inelastic_weight(k: f64, t: C64, r: C64, tolerance: f64) -> Result<f64> {
    let v = 0.5 * (1.0 - t.norm_sqr() - r.norm_sqr());
    if v < -tolerance {
        return Err(Error::Inconsistent { k, value: v, tolerance });
    }
    Ok(v)
}
