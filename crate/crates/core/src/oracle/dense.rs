//! Brute-force state vectors on the same site layout as the MPS engine.
//!
//! Amplitudes are indexed with site 0 most significant, matching
//! [`MpsState::to_dense`](crate::mps::MpsState::to_dense).

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::HamiltonianTerms;
use crate::mps::{layer_sequence, TrotterPlan};
use crate::par;
use crate::tensor::DenseTensor;
use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Largest vector the dense oracle will allocate.
pub const MAX_DENSE_DIM: usize = 1 << 24;
/// Largest dimension for the exact eigendecomposition mode.
pub const MAX_EXACT_DIM: usize = 1 << 14;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseState {
    pub dims: Vec<usize>,
    pub amps: Vec<C64>,
}

fn total_dim(dims: &[usize]) -> Result<usize> {
    dims.iter()
        .try_fold(1usize, |a, &d| a.checked_mul(d))
        .filter(|&t| t <= MAX_DENSE_DIM)
        .ok_or_else(|| Error::Resource(format!("dense space for dims {dims:?} exceeds 2^24")))
}

impl DenseState {
    pub fn new(dims: Vec<usize>, amps: Vec<C64>) -> Result<Self> {
        let t = total_dim(&dims)?;
        if amps.len() != t {
            return Err(Error::dim(format!("{} amplitudes for dimension {t}", amps.len())));
        }
        Ok(DenseState { dims, amps })
    }

    /// Product of local basis states.
    pub fn basis(dims: &[usize], levels: &[usize]) -> Result<Self> {
        let t = total_dim(dims)?;
        if levels.len() != dims.len() || levels.iter().zip(dims).any(|(l, d)| l >= d) {
            return Err(Error::arg("basis levels out of range"));
        }
        let idx = levels.iter().zip(dims).fold(0usize, |acc, (&l, &d)| acc * d + l);
        let mut amps = vec![ZERO; t];
        amps[idx] = C64::new(1.0, 0.0);
        Ok(DenseState {
            dims: dims.to_vec(),
            amps,
        })
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        for a in &mut self.amps {
            *a /= n;
        }
    }

    pub fn inner(&self, other: &DenseState) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn fidelity(&self, other: &DenseState) -> f64 {
        self.inner(other).norm_sqr() / (self.inner(self).re * other.inner(other).re)
    }

    fn stride(&self, site: usize) -> usize {
        self.dims[site + 1..].iter().product()
    }

    /// Applies a one-site operator.
    pub fn apply_local(&mut self, site: usize, op: &DenseTensor) -> Result<()> {
        let d = self.dims[site];
        if op.shape() != [d, d] {
            return Err(Error::dim(format!(
                "operator {:?} on site {site} of dimension {d}",
                op.shape()
            )));
        }
        let right = self.stride(site);
        let m = op.data();
        let old = std::mem::take(&mut self.amps);
        let mut new = vec![ZERO; old.len()];
        par::for_each_chunk_mut(&mut new, d * right, |blk, out| {
            let src = &old[blk * d * right..(blk + 1) * d * right];
            for s in 0..d {
                for t in 0..d {
                    let w = m[s * d + t];
                    if w == ZERO {
                        continue;
                    }
                    for r in 0..right {
                        out[s * right + r] += w * src[t * right + r];
                    }
                }
            }
        });
        self.amps = new;
        Ok(())
    }

    /// Applies a two-site operator on `(bond, bond + 1)`.
    pub fn apply_two_site(&mut self, bond: usize, gate: &DenseTensor) -> Result<()> {
        let (d1, d2) = (self.dims[bond], self.dims[bond + 1]);
        let dd = d1 * d2;
        if gate.shape() != [dd, dd] {
            return Err(Error::dim(format!("gate {:?} on bond {bond}", gate.shape())));
        }
        let right = self.stride(bond + 1);
        let g = gate.data();
        let old = std::mem::take(&mut self.amps);
        let mut new = vec![ZERO; old.len()];
        par::for_each_chunk_mut(&mut new, dd * right, |blk, out| {
            let src = &old[blk * dd * right..(blk + 1) * dd * right];
            // out (dd × right) = G (dd × dd) · src (dd × right)
            let prod = linalg::matmul(g, dd, dd, src, right);
            out.copy_from_slice(&prod);
        });
        self.amps = new;
        Ok(())
    }

    /// `⟨o⟩` for a one-site operator, unnormalized.
    pub fn local_expectation(&self, site: usize, op: &DenseTensor) -> Result<C64> {
        let mut w = self.clone();
        w.apply_local(site, op)?;
        Ok(self.inner(&w))
    }
}

/// `H |v⟩` using the bond Hamiltonians of a plan (on-site terms included).
pub fn apply_hamiltonian(plan: &TrotterPlan, v: &DenseState) -> Result<DenseState> {
    let mut out = DenseState {
        dims: v.dims.clone(),
        amps: vec![ZERO; v.amps.len()],
    };
    for b in 0..plan.n_bonds() {
        let mut w = v.clone();
        w.apply_two_site(b, plan.bond_hamiltonian(b))?;
        for (o, x) in out.amps.iter_mut().zip(&w.amps) {
            *o += x;
        }
    }
    Ok(out)
}

/// `⟨v|H|v⟩ / ⟨v|v⟩`.
pub fn energy(plan: &TrotterPlan, v: &DenseState) -> Result<f64> {
    let hv = apply_hamiltonian(plan, v)?;
    Ok(v.inner(&hv).re / v.inner(v).re)
}

/// Full Hamiltonian matrix (row-major). Only for small spaces.
pub fn dense_hamiltonian(terms: &HamiltonianTerms) -> Result<Vec<C64>> {
    let dims = terms.layout.dims.clone();
    let dim = total_dim(&dims)?;
    if dim > MAX_EXACT_DIM {
        return Err(Error::Resource(format!("dimension {dim} above the exact-mode limit")));
    }
    let plan = TrotterPlan::new(terms, 1.0, crate::mps::TimeMode::Real)?;
    let mut h = vec![ZERO; dim * dim];
    for col in 0..dim {
        let mut e = DenseState {
            dims: dims.clone(),
            amps: vec![ZERO; dim],
        };
        e.amps[col] = C64::new(1.0, 0.0);
        let he = apply_hamiltonian(&plan, &e)?;
        for row in 0..dim {
            h[row * dim + col] = he.amps[row];
        }
    }
    Ok(h)
}

/// How [`dense_evolve`] propagates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DenseMode {
    /// Same second-order gate sequence as the MPS engine.
    Trotter { dt: f64 },
    /// `exp(-iHt)` from the full eigendecomposition.
    Exact,
}

/// Evolves `state` for time `t`. In Trotter mode `t` must be a whole number
/// of steps.
pub fn dense_evolve(terms: &HamiltonianTerms, state: &DenseState, t: f64, mode: DenseMode) -> Result<DenseState> {
    if state.dims != terms.layout.dims {
        return Err(Error::dim("state and model layouts differ"));
    }
    match mode {
        DenseMode::Trotter { dt } => {
            let steps = (t / dt).round();
            if (steps * dt - t).abs() > 1e-9 * t.abs().max(1.0) {
                return Err(Error::arg(format!("t = {t} is not a multiple of dt = {dt}")));
            }
            let plan = TrotterPlan::new(terms, dt, crate::mps::TimeMode::Real)?;
            trotter_steps(&plan, state, steps as usize)
        }
        DenseMode::Exact => {
            let dim = state.amps.len();
            let h = dense_hamiltonian(terms)?;
            let (vals, vecs) = linalg::eigh(&h, dim)?;
            // c = V† ψ, phases, back
            let (c, _, _) = linalg::gemm(&vecs, dim, dim, linalg::Op::H, &state.amps, dim, 1, linalg::Op::N);
            let c: Vec<C64> = c
                .iter()
                .zip(&vals)
                .map(|(x, &e)| x * C64::from_polar(1.0, -e * t))
                .collect();
            let amps = linalg::matmul(&vecs, dim, dim, &c, 1);
            DenseState::new(state.dims.clone(), amps)
        }
    }
}

/// Applies `steps` fused second-order steps of `plan` (real or imaginary).
pub fn trotter_steps(plan: &TrotterPlan, state: &DenseState, steps: usize) -> Result<DenseState> {
    let mut s = state.clone();
    for layer in layer_sequence(steps) {
        for b in plan.bonds(layer.parity) {
            s.apply_two_site(b, plan.gate(b, layer.half))?;
        }
    }
    Ok(s)
}

/// Lowest eigenvalue and eigenvector of `H` restricted to the Krylov space of
/// `start` (so symmetry sectors are respected), by Lanczos with full
/// reorthogonalization.
pub fn lanczos_ground_state(
    plan: &TrotterPlan,
    start: &DenseState,
    max_iter: usize,
    tol: f64,
) -> Result<(f64, DenseState)> {
    let mut basis: Vec<Vec<C64>> = Vec::new();
    let mut v = start.clone();
    v.normalize();
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut last = f64::INFINITY;
    let mut result = None;
    for it in 0..max_iter {
        basis.push(v.amps.clone());
        let mut w = apply_hamiltonian(plan, &v)?;
        let a = v.inner(&w).re;
        alpha.push(a);
        // full reorthogonalization, twice for stability
        for _ in 0..2 {
            for q in &basis {
                let ov: C64 = q.iter().zip(&w.amps).map(|(x, y)| x.conj() * y).sum();
                for (wi, qi) in w.amps.iter_mut().zip(q) {
                    *wi -= ov * qi;
                }
            }
        }
        let b = w.norm();
        let m = alpha.len();
        let mut tri = vec![0.0; m * m];
        for i in 0..m {
            tri[i * m + i] = alpha[i];
            if i + 1 < m {
                tri[i * m + i + 1] = beta[i];
                tri[(i + 1) * m + i] = beta[i];
            }
        }
        let (vals, vecs) = linalg::eigh_real(&tri, m)?;
        let e0 = vals[0];
        let done = (e0 - last).abs() < tol || b < 1e-12 || it + 1 == max_iter;
        last = e0;
        if done {
            let mut amps = vec![ZERO; v.amps.len()];
            for (i, q) in basis.iter().enumerate() {
                let c = vecs[i * m];
                for (a, x) in amps.iter_mut().zip(q) {
                    *a += x * c;
                }
            }
            let mut gs = DenseState::new(v.dims.clone(), amps)?;
            gs.normalize();
            result = Some((e0, gs));
            break;
        }
        beta.push(b);
        for x in &mut w.amps {
            *x /= b;
        }
        v = w;
    }
    result.ok_or(Error::Convergence {
        sweeps: max_iter,
        trace: vec![last],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_terms, CouplingMode, ModelSpec, ScattererSpec};

    fn small() -> HamiltonianTerms {
        let spec = ModelSpec::waveguide(5, 1, CouplingMode::Full).with_scatterer(ScattererSpec::qubit(0, 1.0, 0.3));
        build_terms(&spec).unwrap()
    }

    #[test]
    fn zero_time_is_identity() {
        let terms = small();
        let mut s = DenseState::basis(&terms.layout.dims, &[0, 1, 0, 0, 0]).unwrap();
        s.amps[3] = C64::new(0.5, 0.0);
        s.normalize();
        let e = dense_evolve(&terms, &s, 0.0, DenseMode::Exact).unwrap();
        assert!(e.fidelity(&s) > 1.0 - 1e-12);
    }

    #[test]
    fn exact_mode_conserves_energy() {
        let terms = small();
        let plan = TrotterPlan::new(&terms, 0.1, crate::mps::TimeMode::Real).unwrap();
        let s = DenseState::basis(&terms.layout.dims, &[1, 0, 0, 0, 0]).unwrap();
        let e0 = energy(&plan, &s).unwrap();
        let out = dense_evolve(&terms, &s, 3.7, DenseMode::Exact).unwrap();
        assert!((energy(&plan, &out).unwrap() - e0).abs() < 1e-12);
    }

    #[test]
    fn trotter_error_is_second_order() {
        let terms = small();
        let s = DenseState::basis(&terms.layout.dims, &[1, 0, 0, 0, 0]).unwrap();
        let t = 2.0;
        let exact = dense_evolve(&terms, &s, t, DenseMode::Exact).unwrap();
        let err = |dt: f64| {
            let tr = dense_evolve(&terms, &s, t, DenseMode::Trotter { dt }).unwrap();
            exact
                .amps
                .iter()
                .zip(&tr.amps)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn lanczos_matches_full_diagonalization() {
        let terms = small();
        let plan = TrotterPlan::new(&terms, 0.1, crate::mps::TimeMode::Real).unwrap();
        let dim = terms.layout.dims.iter().product::<usize>();
        let h = dense_hamiltonian(&terms).unwrap();
        let (vals, _) = linalg::eigh(&h, dim).unwrap();
        // vacuum lies in the even sector, which holds the ground state
        let start = DenseState::basis(&terms.layout.dims, &[0; 5]).unwrap();
        let (e, _) = lanczos_ground_state(&plan, &start, 200, 1e-13).unwrap();
        assert!((e - vals[0]).abs() < 1e-9, "{e} vs {}", vals[0]);
    }
}
