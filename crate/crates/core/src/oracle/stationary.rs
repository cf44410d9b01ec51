//! Stationary (monochromatic) single-photon scattering on the infinite chain.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{CouplingMode, ModelSpec};
use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Stationary `(t, r)` at momentum `0 < k < π` for an all-oscillator model,
/// from the Nambu (particle/hole) Lippmann-Schwinger equation.
///
/// Away from the scatterers the particle channel propagates with
/// `G⁺(x, y) = -i e^{ik|x-y|} / (2J sin k)` while the hole channel is
/// evanescent, `(ω + h)⁻¹(x, y) = C q^{|x-y|}` with `q + 1/q = (ω + ε)/J`,
/// `|q| < 1` and `C = 1/(ω + ε - 2Jq)`. The scatterers enter through the
/// self-energy `Σ(ω) = V (ω - M_s)⁻¹ V` of the dynamical matrix, kept
/// unresolved so the resonance `ω = Δ` is regular.
pub fn stationary_amplitudes(spec: &ModelSpec, k: f64) -> Result<(C64, C64)> {
    spec.validate()?;
    if !spec.all_oscillators() {
        return Err(Error::Config(
            "stationary Nambu solution needs oscillator scatterers".into(),
        ));
    }
    if !(k > 0.0 && k < PI) {
        return Err(Error::arg(format!("momentum {k} outside (0, π)")));
    }
    let (eps, j) = (spec.epsilon, spec.hopping);
    let omega = eps - 2.0 * j * k.cos();
    let sk = k.sin();
    let cplus = C64::new(0.0, -1.0 / (2.0 * j * sk));
    let b = (omega + eps) / j;
    let q = (b - (b * b - 4.0).sqrt()) / 2.0;
    let chole = 1.0 / (omega + eps - 2.0 * j * q);
    let full = spec.coupling == CouplingMode::Full;

    let ns = spec.scatterers.len();
    let xs: Vec<i64> = spec.scatterers.iter().map(|s| s.position).collect();
    // channel index: 2 s + 0 (particle), 2 s + 1 (hole)
    let p = 2 * ns;
    let mut g0 = vec![ZERO; p * p];
    for a in 0..ns {
        for bb in 0..ns {
            let dx = (xs[a] - xs[bb]).unsigned_abs() as f64;
            g0[(2 * a) * p + 2 * bb] = cplus * C64::from_polar(1.0, k * dx);
            g0[(2 * a + 1) * p + 2 * bb + 1] = C64::new(chole * q.powf(dx), 0.0);
        }
    }
    // dynamical matrix pieces: chain rows (particle, hole) couple to the
    // oscillator (particle, hole) with V = g [[1, b], [-b, -1]], b = 1 in
    // full coupling; the oscillator block is diag(Δ, -Δ). Unknowns are the
    // chain field ψ at the scatterers and the oscillator amplitudes c:
    //   ψ - G0 V c = ψ_in,   (ω - M_s) c - V ψ = 0
    // which stays regular at ω = Δ, where eliminating c would divide by zero.
    let mut v = vec![ZERO; p * p];
    let mut w = vec![ZERO; p * p];
    for (s, sc) in spec.scatterers.iter().enumerate() {
        let g = sc.effective_coupling();
        let bf = if full { 1.0 } else { 0.0 };
        let blk = [[g, g * bf], [-g * bf, -g]];
        for r in 0..2 {
            for c in 0..2 {
                v[(2 * s + r) * p + 2 * s + c] = C64::new(blk[r][c], 0.0);
            }
        }
        // a decoupled oscillator has c = 0; keep its rows regular
        let (wp, wh) = if g == 0.0 {
            (1.0, 1.0)
        } else {
            (omega - sc.delta, omega + sc.delta)
        };
        w[(2 * s) * p + 2 * s] = C64::new(wp, 0.0);
        w[(2 * s + 1) * p + 2 * s + 1] = C64::new(wh, 0.0);
    }
    let g0v = linalg::matmul(&g0, p, p, &v, p);
    let q2 = 2 * p;
    let mut lhs = vec![ZERO; q2 * q2];
    for i in 0..p {
        lhs[i * q2 + i] = C64::new(1.0, 0.0);
        for c in 0..p {
            lhs[i * q2 + p + c] = -g0v[i * p + c];
            lhs[(p + i) * q2 + c] = -v[i * p + c];
            lhs[(p + i) * q2 + p + c] = w[i * p + c];
        }
    }
    let mut rhs = vec![ZERO; q2];
    for (s, &x) in xs.iter().enumerate() {
        rhs[2 * s] = C64::from_polar(1.0, k * x as f64);
    }
    let sol = linalg::solve(&lhs, q2, &rhs, 1).ok_or(Error::Pole { omega })?;
    // source on the chain: V c
    let f = linalg::matmul(&v, p, p, &sol[p..], 1);
    let mut t = C64::new(1.0, 0.0);
    let mut r = ZERO;
    for (s, &x) in xs.iter().enumerate() {
        let fs = f[2 * s];
        t += cplus * C64::from_polar(1.0, -k * x as f64) * fs;
        r += cplus * C64::from_polar(1.0, k * x as f64) * fs;
    }
    Ok((t, r))
}

/// Exact stationary scattering in the one-excitation sector of an RWA model
/// (qubits, qubit groups or oscillators), solved on the lattice segment that
/// spans the scatterers with transparent boundary rows.
pub fn single_excitation_solve(spec: &ModelSpec, k: f64) -> Result<(C64, C64)> {
    spec.validate()?;
    if spec.coupling != CouplingMode::Rwa {
        return Err(Error::Config("single-excitation sector requires RWA coupling".into()));
    }
    if !(k > 0.0 && k < PI) {
        return Err(Error::arg(format!("momentum {k} outside (0, π)")));
    }
    let (eps, j) = (spec.epsilon, spec.hopping);
    let omega = eps - 2.0 * j * k.cos();
    if spec.scatterers.is_empty() {
        return Ok((C64::new(1.0, 0.0), ZERO));
    }
    let xl = spec.scatterers.iter().map(|s| s.position).min().unwrap() - 1;
    let xr = spec.scatterers.iter().map(|s| s.position).max().unwrap() + 1;
    let nseg = (xr - xl + 1) as usize;
    let ns = spec.scatterers.len();
    let n = nseg + ns;
    let mut a = vec![ZERO; n * n];
    let mut rhs = vec![ZERO; n];
    let eik = C64::from_polar(1.0, k);
    // (ω - ε) ψ_x + J (ψ_{x+1} + ψ_{x-1}) - Σ g c = 0
    for i in 0..nseg {
        a[i * n + i] = C64::new(omega - eps, 0.0);
        if i + 1 < nseg {
            a[i * n + i + 1] += j;
        } else {
            a[i * n + i] += j * eik;
        }
        if i > 0 {
            a[i * n + i - 1] += j;
        } else {
            a[i * n + i] += j * eik;
            rhs[i] += j * C64::new(0.0, 2.0 * k.sin()) * C64::from_polar(1.0, k * xl as f64);
        }
    }
    for (s, sc) in spec.scatterers.iter().enumerate() {
        let i = (sc.position - xl) as usize;
        let c = nseg + s;
        let g = sc.effective_coupling();
        a[i * n + c] -= g;
        // (ω - Δ) c - g ψ_x = 0
        a[c * n + c] = C64::new(omega - sc.delta, 0.0);
        a[c * n + i] -= g;
    }
    let psi = linalg::solve(&a, n, &rhs, 1).ok_or(Error::Pole { omega })?;
    let t = psi[nseg - 1] * C64::from_polar(1.0, -k * xr as f64);
    let r = (psi[0] - C64::from_polar(1.0, k * xl as f64)) * C64::from_polar(1.0, k * xl as f64);
    Ok((t, r))
}

/// Exact time evolution in the one-excitation sector of an RWA model on the
/// finite open chain. `photon` holds cavity amplitudes at `t = 0` with every
/// scatterer in its ground state. Returns the cavity amplitudes at `t`
/// followed by one collective amplitude per scatterer.
pub fn single_excitation_evolve(spec: &ModelSpec, photon: &[C64], t: f64) -> Result<Vec<C64>> {
    spec.validate()?;
    if spec.coupling != CouplingMode::Rwa {
        return Err(Error::Config("single-excitation sector requires RWA coupling".into()));
    }
    let nc = spec.n_cav;
    if photon.len() != nc {
        return Err(Error::dim(format!("need {nc} cavity amplitudes, got {}", photon.len())));
    }
    let n = nc + spec.scatterers.len();
    let mut h = vec![ZERO; n * n];
    for i in 0..nc {
        h[i * n + i] = C64::new(spec.epsilon, 0.0);
        if i + 1 < nc {
            h[i * n + i + 1] = C64::new(-spec.hopping, 0.0);
            h[(i + 1) * n + i] = C64::new(-spec.hopping, 0.0);
        }
    }
    for (s, sc) in spec.scatterers.iter().enumerate() {
        let (i, c) = (spec.site_of(sc.position), nc + s);
        h[c * n + c] = C64::new(sc.delta, 0.0);
        h[i * n + c] = C64::new(sc.effective_coupling(), 0.0);
        h[c * n + i] = C64::new(sc.effective_coupling(), 0.0);
    }
    let u = linalg::expm_hermitian(&h, n, C64::new(0.0, -t))?;
    let mut v = photon.to_vec();
    v.resize(n, ZERO);
    Ok(linalg::matmul(&u, n, n, &v, 1))
}
