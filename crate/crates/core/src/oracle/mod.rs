//! Exact references for the MPS engine.
//!
//! - [`bogoliubov`]: normal modes of all-oscillator models and the Heisenberg
//!   propagator of the bare modes; everything linear follows from it by Wick
//!   contraction.
//! - [`stationary`]: monochromatic single-photon `(t, r)` on the infinite chain.
//! - [`permanent`]: N-photon S-matrix elements of linear scatterers.
//! - [`dense`]: state vectors for tiny chains, evolved with the same Trotter
//!   gates as the MPS engine or exactly.

pub mod bogoliubov;
pub mod dense;
pub mod permanent;
pub mod stationary;

pub use bogoliubov::{bogoliubov_diagonalize, quadratic_form, LinearSolution};
pub use dense::{dense_evolve, dense_hamiltonian, lanczos_ground_state, trotter_steps, DenseMode, DenseState};
pub use permanent::{nphoton_smatrix_linear, permanent, SingleSMatrix, MAX_PHOTONS};
pub use stationary::{single_excitation_evolve, single_excitation_solve, stationary_amplitudes};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::dispersion;
use crate::scattering::spectra::dft;
use crate::scattering::{ElasticBin, Wavepacket};
use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// How [`single_photon_smatrix`] turns the normal modes into `(t_k, r_k)`.
#[derive(Clone, Debug, PartialEq)]
pub enum SMatrixMode {
    /// Plane-wave limit on the infinite chain, with the free phase
    /// `e^{-iω_k t_out}` attached so it compares with finite-time runs.
    Stationary,
    /// The procedure of the MPS runs: inject `packet`, propagate the field
    /// operators for `t_out`, project back on the ground state and divide the
    /// output by the input momentum amplitudes.
    Windowed { packet: Wavepacket },
}

/// `(t_k, r_k)` for every `k` in `ks` (all in `(0, π)`).
pub fn single_photon_smatrix(
    sol: &LinearSolution,
    t_out: f64,
    ks: &[f64],
    mode: &SMatrixMode,
) -> Result<Vec<(C64, C64)>> {
    match mode {
        SMatrixMode::Stationary => ks
            .iter()
            .map(|&k| {
                let (t, r) = stationary_amplitudes(&sol.spec, k)?;
                let ph = C64::from_polar(1.0, -dispersion(k, &sol.spec) * t_out);
                Ok((t * ph, r * ph))
            })
            .collect(),
        SMatrixMode::Windowed { packet } => {
            let coords = cavity_coords(sol);
            let f0 = single_photon_field(sol, packet, 0.0)?;
            let f1 = single_photon_field(sol, packet, t_out)?;
            let minus: Vec<f64> = ks.iter().map(|k| -k).collect();
            let a0 = dft(&f0, &coords, ks);
            let at = dft(&f1, &coords, ks);
            let ar = dft(&f1, &coords, &minus);
            Ok((0..ks.len()).map(|i| (at[i] / a0[i], ar[i] / a0[i])).collect())
        }
    }
}

/// Oracle amplitudes in the row format of scattering results.
pub fn elastic_bins(ks: &[f64], amps: &[(C64, C64)], spec: &crate::ModelSpec) -> Vec<ElasticBin> {
    ks.iter()
        .zip(amps)
        .map(|(&k, &(t, r))| ElasticBin::new(k, dispersion(k, spec), t, r))
        .collect()
}

fn cavity_coords(sol: &LinearSolution) -> Vec<i64> {
    let l = sol.spec.half_length();
    (-l..=l).collect()
}

/// Contractions shared by the one- and two-photon fields.
struct Wick {
    n: usize,
    g: Vec<C64>,
    /// `⟨ψ_i a_φ†⟩` for every Nambu component `i`.
    g_phi: Vec<C64>,
}

impl Wick {
    fn new(sol: &LinearSolution, packet: &Wavepacket) -> Result<Self> {
        packet.validate(&sol.spec)?;
        let n = sol.n_modes;
        let g = sol.correlations();
        let phi = packet.amplitudes(&sol.spec);
        let mut g_phi = vec![ZERO; 2 * n];
        for (i, out) in g_phi.iter_mut().enumerate() {
            *out = phi
                .iter()
                .enumerate()
                .map(|(y, p)| g[i * 2 * n + sol.cavity_mode(sol.spec.coord_of(y))] * p)
                .sum();
        }
        Ok(Wick { n, g, g_phi })
    }

    /// `⟨ψ_i ψ_j⟩`, using `ψ_j = (ψ_{j ± n})†`.
    fn pair(&self, i: usize, j: usize) -> C64 {
        let m = 2 * self.n;
        self.g[i * m + (j + self.n) % m]
    }

    /// `⟨a_φ a_φ†⟩`, the one-photon norm.
    fn norm1(&self, sol: &LinearSolution, packet: &Wavepacket) -> f64 {
        let phi = packet.amplitudes(&sol.spec);
        phi.iter()
            .enumerate()
            .map(|(x, p)| p.conj() * self.g_phi[sol.cavity_mode(sol.spec.coord_of(x))])
            .sum::<C64>()
            .re
    }

    /// `⟨a_φ† a_φ†⟩`.
    fn creation_pair(&self, sol: &LinearSolution, packet: &Wavepacket) -> C64 {
        let phi = packet.amplitudes(&sol.spec);
        let n = self.n;
        let mut acc = ZERO;
        for (y, py) in phi.iter().enumerate() {
            let iy = n + sol.cavity_mode(sol.spec.coord_of(y));
            for (z, pz) in phi.iter().enumerate() {
                let iz = sol.cavity_mode(sol.spec.coord_of(z));
                acc += py * pz * self.g[iy * 2 * n + iz];
            }
        }
        acc
    }
}

/// Rows of `M(t)` for the cavity annihilators, `a_x(t) = Σ_j M_xj ψ_j`.
fn cavity_rows(sol: &LinearSolution, t: f64) -> Vec<C64> {
    let m = 2 * sol.n_modes;
    let prop = sol.propagator(t);
    let nc = sol.spec.n_cav;
    let mut rows = vec![ZERO; nc * m];
    for x in 0..nc {
        let i = sol.cavity_mode(sol.spec.coord_of(x));
        rows[x * m..(x + 1) * m].copy_from_slice(&prop[i * m..(i + 1) * m]);
    }
    rows
}

/// `f_x(t) = ⟨GS| a_x(t) a_φ† |GS⟩ / ‖a_φ†|GS⟩‖` on every cavity.
pub fn single_photon_field(sol: &LinearSolution, packet: &Wavepacket, t: f64) -> Result<Vec<C64>> {
    let w = Wick::new(sol, packet)?;
    let norm = w.norm1(sol, packet).sqrt();
    let rows = cavity_rows(sol, t);
    let m = 2 * sol.n_modes;
    let f = linalg::matmul(&rows, sol.spec.n_cav, m, &w.g_phi, 1);
    Ok(f.into_iter().map(|v| v / norm).collect())
}

/// `φ_{x₁x₂}(t) = 2^{-1/2} ⟨GS| a_{x₁}(t) a_{x₂}(t) (a_φ†)² |GS⟩ / norm`,
/// row-major over cavities.
pub fn two_photon_field(sol: &LinearSolution, packet: &Wavepacket, t: f64) -> Result<Vec<C64>> {
    let w = Wick::new(sol, packet)?;
    let nc = sol.spec.n_cav;
    let m = 2 * sol.n_modes;
    let rows = cavity_rows(sol, t);
    let f = linalg::matmul(&rows, nc, m, &w.g_phi, 1);
    // ⟨ψ_i ψ_j⟩ as a matrix, then A_x1 P A_x2ᵀ
    let mut p = vec![ZERO; m * m];
    for i in 0..m {
        for j in 0..m {
            p[i * m + j] = w.pair(i, j);
        }
    }
    let rp = linalg::matmul(&rows, nc, m, &p, m);
    let (ab, _, _) = linalg::gemm(&rp, nc, m, linalg::Op::N, &rows, nc, m, linalg::Op::T);
    let cc = w.creation_pair(sol, packet);
    let n1 = w.norm1(sol, packet);
    let norm2 = (cc.norm_sqr() + 2.0 * n1 * n1).sqrt();
    if !(norm2 > 0.0) {
        return Err(Error::Numeric {
            what: "two-photon input has zero norm".into(),
            rows: nc,
            cols: nc,
        });
    }
    let s = std::f64::consts::FRAC_1_SQRT_2 / norm2;
    let mut out = vec![ZERO; nc * nc];
    for a in 0..nc {
        for b in 0..nc {
            out[a * nc + b] = (ab[a * nc + b] * cc + 2.0 * f[a] * f[b]) * s;
        }
    }
    Ok(out)
}

/// A coherent input `|α⟩_k` leaves as `|t_k α⟩ ⊗ |r_k α⟩_{-k}`.
pub fn coherent_output(alpha: C64, t: C64, r: C64) -> (C64, C64) {
    (t * alpha, r * alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CouplingMode, ModelSpec, ScattererSpec};
    use std::f64::consts::PI;

    #[test]
    fn free_chain_only_advances_the_phase() {
        let spec =
            ModelSpec::waveguide(41, 1, CouplingMode::Full).with_scatterer(ScattererSpec::oscillator(0, 1.0, 0.0, 2));
        let sol = bogoliubov_diagonalize(&spec).unwrap();
        let ks = [0.7, PI / 2.0];
        for (&k, (t, r)) in ks
            .iter()
            .zip(single_photon_smatrix(&sol, 3.0, &ks, &SMatrixMode::Stationary).unwrap())
        {
            let want = C64::from_polar(1.0, -dispersion(k, &spec) * 3.0);
            assert!((t - want).norm() < 1e-12 && r.norm() < 1e-12);
        }
    }

    #[test]
    fn windowed_and_stationary_agree_for_broad_packets() {
        let spec =
            ModelSpec::waveguide(161, 1, CouplingMode::Rwa).with_scatterer(ScattererSpec::oscillator(0, 1.0, 0.3, 1));
        let sol = bogoliubov_diagonalize(&spec).unwrap();
        // the re-emission time is far below the time left after the hit
        let packet = Wavepacket::new(-40, 10.0, PI / 2.0, 1);
        let t_out = packet.default_t_out(&spec);
        let ks = [PI / 2.0 - 0.05, PI / 2.0, PI / 2.0 + 0.05];
        let w = single_photon_smatrix(&sol, t_out, &ks, &SMatrixMode::Windowed { packet }).unwrap();
        let s = single_photon_smatrix(&sol, t_out, &ks, &SMatrixMode::Stationary).unwrap();
        for i in 0..3 {
            assert!(
                (w[i].0 - s[i].0).norm() < 1e-2,
                "t at {}: {} vs {}, r {} vs {}",
                ks[i],
                w[i].0,
                s[i].0,
                w[i].1,
                s[i].1
            );
            assert!((w[i].1 - s[i].1).norm() < 1e-2, "r at {}", ks[i]);
        }
    }

    #[test]
    fn two_photon_field_is_symmetric_product_in_rwa() {
        let spec =
            ModelSpec::waveguide(31, 2, CouplingMode::Rwa).with_scatterer(ScattererSpec::oscillator(0, 1.0, 0.2, 2));
        let sol = bogoliubov_diagonalize(&spec).unwrap();
        let packet = Wavepacket::new(-8, 2.0, PI / 2.0, 2);
        let f = single_photon_field(&sol, &packet, 6.0).unwrap();
        let m = two_photon_field(&sol, &packet, 6.0).unwrap();
        let n = spec.n_cav;
        for a in 0..n {
            for b in 0..n {
                let want = f[a] * f[b];
                assert!((m[a * n + b] - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn coherent_intensities_scale_together() {
        let (t, r) = (C64::new(0.6, 0.0), C64::new(0.0, 0.8));
        let (to, ro) = coherent_output(C64::new(0.0, 0.0), t, r);
        assert_eq!((to, ro), (ZERO, ZERO));
        let (to, ro) = coherent_output(C64::new(3.0, 4.0), t, r);
        assert!((to.norm_sqr() + ro.norm_sqr() - 25.0).abs() < 1e-12);
    }
}
