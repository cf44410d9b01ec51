//! Exact diagonalization of the quadratic (all-oscillator) model.
//!
//! Modes are ordered cavities first (`x = -L..=L`), then one mode per
//! oscillator in `ModelSpec::scatterers` order. Writing `ψ = (α, α†)`,
//! `H = ½ ψ† 𝐇 ψ + const` with `𝐇 = [[A, B], [B*, A*]]`. Colpa's method:
//! `𝐇 = K† K` (Cholesky; failure means no stable vacuum),
//! `K Σ K† = U Λ U†` with `Σ = diag(1, -1)`, and `T = K⁻¹ U |Λ|^{1/2}`
//! maps normal modes to bare ones, `ψ = T φ`, with `T Σ T† = Σ`.

use crate::error::{Error, Result};
use crate::linalg::{self, Op};
use crate::model::{CouplingMode, ModelSpec};
use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Clone, Debug)]
pub struct LinearSolution {
    pub spec: ModelSpec,
    /// Number of bosonic modes `n = N_cav + #oscillators`.
    pub n_modes: usize,
    /// Normal-mode frequencies `Λ_l > 0`, ascending.
    pub frequencies: Vec<f64>,
    /// `2n × 2n` row-major paraunitary matrix, `ψ = T φ`.
    pub transform: Vec<C64>,
    /// Ground-state energy relative to the normal-ordered bare vacuum.
    pub ground_energy: f64,
}

impl LinearSolution {
    /// `χ_{il}`: coefficient of `β_l` in `α_i` (upper-left block of `T`).
    pub fn chi(&self, i: usize, l: usize) -> C64 {
        self.transform[i * 2 * self.n_modes + l]
    }

    /// `η_{il}`: coefficient of `β_l` in `α_i†` (lower-left block of `T`).
    pub fn eta(&self, i: usize, l: usize) -> C64 {
        self.transform[(self.n_modes + i) * 2 * self.n_modes + l]
    }

    /// `T⁻¹ = Σ T† Σ`.
    pub fn inverse_transform(&self) -> Vec<C64> {
        let m = 2 * self.n_modes;
        let mut inv = vec![ZERO; m * m];
        for i in 0..m {
            for j in 0..m {
                let s = if (i < self.n_modes) == (j < self.n_modes) {
                    1.0
                } else {
                    -1.0
                };
                inv[i * m + j] = self.transform[j * m + i].conj() * s;
            }
        }
        inv
    }

    /// Largest deviation of `[α_l, α_m†]`-type commutators reconstructed
    /// from `T`, i.e. `‖T Σ T† − Σ‖_max`.
    pub fn commutator_error(&self) -> f64 {
        let n = self.n_modes;
        let m = 2 * n;
        let mut ts = self.transform.clone();
        for row in ts.chunks_mut(m) {
            for x in &mut row[n..] {
                *x = -*x;
            }
        }
        let (p, _, _) = linalg::gemm(&ts, m, m, Op::N, &self.transform, m, m, Op::H);
        let mut worst: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                let want = if i != j {
                    0.0
                } else if i < n {
                    1.0
                } else {
                    -1.0
                };
                worst = worst.max((p[i * m + j] - C64::new(want, 0.0)).norm());
            }
        }
        worst
    }

    /// Ground-state contraction `G_ij = ⟨ψ_i ψ_j†⟩ = (T P T†)_ij` with `P`
    /// projecting on the annihilator half.
    pub fn correlations(&self) -> Vec<C64> {
        let n = self.n_modes;
        let m = 2 * n;
        let mut left = vec![ZERO; m * n];
        for i in 0..m {
            left[i * n..(i + 1) * n].copy_from_slice(&self.transform[i * m..i * m + n]);
        }
        let (g, _, _) = linalg::gemm(&left, m, n, Op::N, &left, m, n, Op::H);
        g
    }

    /// Heisenberg propagator `M(t) = T D(t) T⁻¹`, `ψ(t) = M(t) ψ(0)`.
    pub fn propagator(&self, t: f64) -> Vec<C64> {
        let n = self.n_modes;
        let m = 2 * n;
        let mut td = self.transform.clone();
        for row in td.chunks_mut(m) {
            for (l, x) in row.iter_mut().enumerate() {
                let w = self.frequencies[l % n];
                let ph = if l < n { -w * t } else { w * t };
                *x *= C64::from_polar(1.0, ph);
            }
        }
        linalg::matmul(&td, m, m, &self.inverse_transform(), m)
    }

    /// Bare-mode index of the cavity at chain coordinate `x`.
    pub fn cavity_mode(&self, x: i64) -> usize {
        self.spec.site_of(x)
    }
}

/// Coefficient matrices `(A, B)` of the quadratic Hamiltonian.
pub fn quadratic_form(spec: &ModelSpec) -> Result<(Vec<f64>, Vec<f64>)> {
    spec.validate()?;
    if !spec.all_oscillators() {
        return Err(Error::Config(
            "quadratic diagonalization needs every scatterer to be an oscillator".into(),
        ));
    }
    let nc = spec.n_cav;
    let n = nc + spec.scatterers.len();
    let mut a = vec![0.0; n * n];
    let mut b = vec![0.0; n * n];
    for x in 0..nc {
        a[x * n + x] = spec.epsilon;
        if x + 1 < nc {
            a[x * n + x + 1] = -spec.hopping;
            a[(x + 1) * n + x] = -spec.hopping;
        }
    }
    for (i, s) in spec.scatterers.iter().enumerate() {
        let c = nc + i;
        let x = spec.site_of(s.position);
        let g = s.effective_coupling();
        a[c * n + c] = s.delta;
        a[c * n + x] = g;
        a[x * n + c] = g;
        if spec.coupling == CouplingMode::Full {
            b[c * n + x] = g;
            b[x * n + c] = g;
        }
    }
    Ok((a, b))
}

/// Colpa diagonalization of an all-oscillator model.
pub fn bogoliubov_diagonalize(spec: &ModelSpec) -> Result<LinearSolution> {
    let (a, b) = quadratic_form(spec)?;
    let n = spec.n_cav + spec.scatterers.len();
    let m = 2 * n;
    let mut h = vec![ZERO; m * m];
    for i in 0..n {
        for j in 0..n {
            let (aij, bij) = (C64::new(a[i * n + j], 0.0), C64::new(b[i * n + j], 0.0));
            h[i * m + j] = aij;
            h[i * m + n + j] = bij;
            h[(n + i) * m + j] = bij.conj();
            h[(n + i) * m + n + j] = aij.conj();
        }
    }
    let unstable = || {
        let worst = spec
            .scatterers
            .iter()
            .map(|s| s.effective_coupling())
            .fold(0.0, f64::max);
        Error::Unstable(format!(
            "quadratic form is not positive definite (largest coupling g = {worst}); \
             the coupled vacuum is unstable"
        ))
    };
    let l = linalg::cholesky_lower(&h, m).ok_or_else(unstable)?;
    // K = L†, so K Σ K† = L† Σ L
    let mut sl = l.clone();
    for row in sl.chunks_mut(m).skip(n) {
        for x in row.iter_mut() {
            *x = -*x;
        }
    }
    let (w, _, _) = linalg::gemm(&l, m, m, Op::H, &sl, m, m, Op::N);
    let (vals, vecs) = linalg::eigh(&w, m)?;
    // ascending: the first n are -Λ, the last n are +Λ
    if vals[n - 1] >= 0.0 || vals[n] <= 0.0 {
        return Err(unstable());
    }
    let freqs: Vec<f64> = vals[n..].to_vec();
    // first n columns of T: K⁻¹ u_l √Λ_l, with K⁻¹ = (L†)⁻¹
    let mut u = vec![ZERO; m * n];
    for i in 0..m {
        for l in 0..n {
            u[i * n + l] = vecs[i * m + n + l] * freqs[l].sqrt();
        }
    }
    let lh = adjoint(&l, m);
    let cols = linalg::solve(&lh, m, &u, n).ok_or_else(unstable)?;
    // complete T = [[X, Y*], [Y, X*]] from the particle-hole structure
    let mut t = vec![ZERO; m * m];
    for i in 0..n {
        for l in 0..n {
            let x = cols[i * n + l];
            let y = cols[(n + i) * n + l];
            t[i * m + l] = x;
            t[(n + i) * m + l] = y;
            t[i * m + n + l] = y.conj();
            t[(n + i) * m + n + l] = x.conj();
        }
    }
    let trace_a: f64 = (0..n).map(|i| a[i * n + i]).sum();
    let sol = LinearSolution {
        spec: spec.clone(),
        n_modes: n,
        ground_energy: 0.5 * (freqs.iter().sum::<f64>() - trace_a),
        frequencies: freqs,
        transform: t,
    };
    let err = sol.commutator_error();
    if err > 1e-10 {
        return Err(Error::Numeric {
            what: format!("bogoliubov commutators violated by {err:e}"),
            rows: m,
            cols: m,
        });
    }
    Ok(sol)
}

fn adjoint(a: &[C64], n: usize) -> Vec<C64> {
    let mut out = vec![ZERO; n * n];
    for i in 0..n {
        for j in 0..n {
            out[j * n + i] = a[i * n + j].conj();
        }
    }
    out
}
