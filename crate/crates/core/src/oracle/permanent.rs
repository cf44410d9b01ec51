//! Permanents and the factorized N-photon S-matrix of linear scatterers.

use crate::error::{Error, Result};
use crate::C64;

/// Largest photon number handled exactly.
pub const MAX_PHOTONS: usize = 6;

/// Permanent of a row-major `n × n` matrix by Ryser's inclusion-exclusion
/// formula with Gray-code subset updates, `O(2^n n)`.
pub fn permanent(m: &[C64], n: usize) -> C64 {
    assert_eq!(m.len(), n * n);
    if n == 0 {
        return C64::new(1.0, 0.0);
    }
    let mut row_sums = vec![C64::new(0.0, 0.0); n];
    let mut total = C64::new(0.0, 0.0);
    let mut subset = 0u64;
    for g in 1u64..(1 << n) {
        // column flipped between consecutive Gray codes
        let j = g.trailing_zeros() as usize;
        let gray = g ^ (g >> 1);
        let adding = gray & (1 << j) != 0 && subset & (1 << j) == 0;
        subset = gray;
        for (i, s) in row_sums.iter_mut().enumerate() {
            if adding {
                *s += m[i * n + j];
            } else {
                *s -= m[i * n + j];
            }
        }
        let prod: C64 = row_sums.iter().product();
        let size = subset.count_ones() as usize;
        if (n - size).is_multiple_of(2) {
            total += prod;
        } else {
            total -= prod;
        }
    }
    total
}

/// Single-photon scattering matrix on a momentum grid:
/// `S(p, k) = t_k δ_{p,k} + r_k δ_{p,-k}`. Momenta are addressed by grid
/// index; `mirror[i]` is the index of `-k_i`, if it lies on the grid.
#[derive(Clone, Debug)]
pub struct SingleSMatrix {
    pub k: Vec<f64>,
    pub t: Vec<C64>,
    pub r: Vec<C64>,
    mirror: Vec<Option<usize>>,
}

impl SingleSMatrix {
    pub fn new(k: Vec<f64>, t: Vec<C64>, r: Vec<C64>) -> Result<Self> {
        if k.len() != t.len() || k.len() != r.len() {
            return Err(Error::dim("k, t and r must have equal lengths"));
        }
        let mirror = k
            .iter()
            .map(|&ki| k.iter().position(|&kj| wrap(kj + ki).abs() < 1e-9))
            .collect();
        Ok(SingleSMatrix { k, t, r, mirror })
    }

    /// `⟨p| S |k⟩` for grid indices.
    pub fn element(&self, p: usize, k: usize) -> C64 {
        let mut v = C64::new(0.0, 0.0);
        if p == k {
            v += self.t[k];
        }
        if self.mirror[k] == Some(p) {
            v += self.r[k];
        }
        v
    }
}

fn wrap(x: f64) -> f64 {
    use std::f64::consts::PI;
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if (y + PI).abs() < 1e-12 {
        PI
    } else {
        y
    }
}

/// `⟨p_1 … p_N| S |k_1 … k_N⟩` for a linear scatterer: the permanent of the
/// single-photon elements `S(p_i, k_j)`. Zero when the photon numbers differ.
pub fn nphoton_smatrix_linear(s: &SingleSMatrix, k_in: &[usize], p_out: &[usize]) -> Result<C64> {
    if k_in.len() != p_out.len() {
        return Ok(C64::new(0.0, 0.0));
    }
    let n = k_in.len();
    if n > MAX_PHOTONS {
        return Err(Error::Unsupported(format!(
            "{n} photons; exact permanents are limited to {MAX_PHOTONS}"
        )));
    }
    let grid = s.k.len();
    if k_in.iter().chain(p_out).any(|&i| i >= grid) {
        return Err(Error::arg("momentum index outside the grid"));
    }
    let mut m = Vec::with_capacity(n * n);
    for &p in p_out {
        for &k in k_in {
            m.push(s.element(p, k));
        }
    }
    Ok(permanent(&m, n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(m: &[C64], n: usize) -> C64 {
        fn rec(m: &[C64], n: usize, row: usize, used: &mut Vec<bool>) -> C64 {
            if row == n {
                return C64::new(1.0, 0.0);
            }
            let mut s = C64::new(0.0, 0.0);
            for j in 0..n {
                if !used[j] {
                    used[j] = true;
                    s += m[row * n + j] * rec(m, n, row + 1, used);
                    used[j] = false;
                }
            }
            s
        }
        rec(m, n, 0, &mut vec![false; n])
    }

    #[test]
    fn ryser_matches_permutation_sum() {
        for n in 1..=6 {
            let m = crate::tensor::DenseTensor::pseudo_random(&[n, n], n as u64).into_data();
            let (a, b) = (permanent(&m, n), naive(&m, n));
            assert!((a - b).norm() < 1e-12 * b.norm().max(1.0), "n = {n}");
        }
    }

    #[test]
    fn equal_momenta_double_count() {
        let k = vec![-1.0, 1.0];
        let s = SingleSMatrix::new(k, vec![C64::new(0.3, 0.4); 2], vec![C64::new(0.1, 0.0); 2]).unwrap();
        let one = nphoton_smatrix_linear(&s, &[1], &[1]).unwrap();
        assert_eq!(one, C64::new(0.3, 0.4));
        let two = nphoton_smatrix_linear(&s, &[1, 1], &[1, 1]).unwrap();
        assert!((two - 2.0 * one * one).norm() < 1e-15);
        assert_eq!(nphoton_smatrix_linear(&s, &[1, 1], &[1]).unwrap(), C64::new(0.0, 0.0));
        assert!(matches!(
            nphoton_smatrix_linear(&s, &[0; 7], &[0; 7]),
            Err(Error::Unsupported(_))
        ));
    }
}
