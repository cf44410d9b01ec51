//! Lattice layout and Hamiltonian terms for a coupled-cavity waveguide with
//! point-like scatterers.
//!
//! The chain has `n_cav = 2L + 1` cavities labelled `x = -L..=L`; site index
//! `n = x + L`. A scatterer is fused with the cavity it couples to, so the
//! local space of that site is `cavity ⊗ scatterer` with basis index
//! `photon_level * s + scatterer_level`, where `s` is the scatterer dimension.
//! With this embedding every Hamiltonian term is on-site or nearest-neighbour.
//!
//! Co-located identical qubits are described by their symmetric (Dicke)
//! sector: the collective lowering operator `b = m^{-1/2} Σ σ⁻` acts on the
//! ladder `|0⟩..|cap⟩` of collective excitation number.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingMode {
    /// Excitation-number-conserving coupling `g (c† a + c a†)`.
    Rwa,
    /// Full dipole coupling `g (c + c†)(a + a†)`.
    Full,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScattererKind {
    /// `count` identical qubits on one site, kept in the symmetric sector up
    /// to `excitation_cap` collective excitations (`None` means exact: `count`).
    Qubits {
        count: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        excitation_cap: Option<usize>,
    },
    /// Harmonic resonator truncated to `n_osc` quanta.
    Oscillator { n_osc: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScattererSpec {
    /// Chain coordinate `x` in `-L..=L`.
    pub position: i64,
    pub delta: f64,
    /// Coupling per emitter; a qubit group couples collectively with `g √m`.
    pub g: f64,
    #[serde(flatten)]
    pub kind: ScattererKind,
}

impl ScattererSpec {
    pub fn qubit(position: i64, delta: f64, g: f64) -> Self {
        Self::qubits(position, delta, g, 1)
    }

    pub fn qubits(position: i64, delta: f64, g: f64, count: usize) -> Self {
        ScattererSpec {
            position,
            delta,
            g,
            kind: ScattererKind::Qubits {
                count,
                excitation_cap: None,
            },
        }
    }

    pub fn oscillator(position: i64, delta: f64, g: f64, n_osc: usize) -> Self {
        ScattererSpec {
            position,
            delta,
            g,
            kind: ScattererKind::Oscillator { n_osc },
        }
    }

    /// Local scatterer dimension `s`.
    pub fn local_dim(&self) -> usize {
        match self.kind {
            ScattererKind::Qubits { count, excitation_cap } => excitation_cap.unwrap_or(count).min(count) + 1,
            ScattererKind::Oscillator { n_osc } => n_osc + 1,
        }
    }

    /// Coupling seen by the collective mode.
    pub fn effective_coupling(&self) -> f64 {
        match self.kind {
            ScattererKind::Qubits { count, .. } => self.g * (count as f64).sqrt(),
            ScattererKind::Oscillator { .. } => self.g,
        }
    }

    pub fn is_oscillator(&self) -> bool {
        matches!(self.kind, ScattererKind::Oscillator { .. })
    }

    /// Lowering, raising and excitation-number matrices on the scatterer factor.
    pub fn ladder(&self) -> Result<DickeLadder> {
        match self.kind {
            ScattererKind::Qubits { count, excitation_cap } => {
                dicke_ladder(count, excitation_cap.unwrap_or(count).min(count))
            }
            ScattererKind::Oscillator { n_osc } => Ok(oscillator_ladder(n_osc)),
        }
    }

    fn validate(&self, half_len: i64) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.position.abs() > half_len - 1 {
            return bad(format!(
                "scatterer position {} must lie strictly inside [-{half_len}, {half_len}]",
                self.position
            ));
        }
        if !(self.g >= 0.0 && self.g.is_finite()) {
            return bad(format!("coupling g = {} must be non-negative", self.g));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return bad(format!("delta = {} must be positive", self.delta));
        }
        match self.kind {
            ScattererKind::Qubits { count, excitation_cap } => {
                if count == 0 {
                    return bad("qubit count must be at least 1".into());
                }
                if excitation_cap == Some(0) {
                    return bad("excitation_cap must be at least 1".into());
                }
            }
            ScattererKind::Oscillator { n_osc } => {
                if n_osc == 0 {
                    return bad("n_osc must be at least 1".into());
                }
            }
        }
        Ok(())
    }
}

fn default_dim_ceiling() -> usize {
    64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub epsilon: f64,
    pub hopping: f64,
    /// Number of cavities, odd.
    pub n_cav: usize,
    /// Photon truncation per cavity.
    pub n_max: usize,
    #[serde(default)]
    pub scatterers: Vec<ScattererSpec>,
    pub coupling: CouplingMode,
    /// Largest admissible local dimension.
    #[serde(default = "default_dim_ceiling")]
    pub dim_ceiling: usize,
}

impl ModelSpec {
    /// Bare waveguide with the reference parameters `ε = 1`, `J = 1/π`.
    pub fn waveguide(n_cav: usize, n_max: usize, coupling: CouplingMode) -> Self {
        ModelSpec {
            epsilon: 1.0,
            hopping: 1.0 / std::f64::consts::PI,
            n_cav,
            n_max,
            scatterers: Vec::new(),
            coupling,
            dim_ceiling: default_dim_ceiling(),
        }
    }

    pub fn with_scatterer(mut self, s: ScattererSpec) -> Self {
        self.scatterers.push(s);
        self
    }

    pub fn half_length(&self) -> i64 {
        (self.n_cav as i64 - 1) / 2
    }

    /// Site index of chain coordinate `x`.
    pub fn site_of(&self, x: i64) -> usize {
        (x + self.half_length()) as usize
    }

    /// Chain coordinate of site index `n`.
    pub fn coord_of(&self, n: usize) -> i64 {
        n as i64 - self.half_length()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_cav < 3 || self.n_cav.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "n_cav = {} must be odd and at least 3",
                self.n_cav
            )));
        }
        if self.n_max == 0 {
            return Err(Error::Config("n_max must be at least 1".into()));
        }
        if !self.epsilon.is_finite() || !self.hopping.is_finite() {
            return Err(Error::Config("epsilon and hopping must be finite".into()));
        }
        let l = self.half_length();
        let mut seen = std::collections::BTreeSet::new();
        for s in &self.scatterers {
            s.validate(l)?;
            if !seen.insert(s.position) {
                return Err(Error::Config(format!(
                    "two scatterers at position {}; co-located qubits are one group with a count",
                    s.position
                )));
            }
        }
        Ok(())
    }

    pub fn all_oscillators(&self) -> bool {
        self.scatterers.iter().all(|s| s.is_oscillator())
    }

    pub fn layout(&self) -> Result<SiteLayout> {
        SiteLayout::new(self)
    }

    /// Gives every qubit group without an explicit cap the default
    /// `min(m, n_photons + 2)` collective excitations.
    pub fn cap_excitations(&mut self, n_photons: usize) {
        for s in &mut self.scatterers {
            if let ScattererKind::Qubits {
                count,
                excitation_cap: cap @ None,
            } = &mut s.kind
            {
                *cap = Some((*count).min(n_photons + 2));
            }
        }
    }
}

/// Photon truncation used when none is configured: `N` levels suffice in RWA,
/// full coupling keeps one more for the dressed ground state.
pub fn default_n_max(coupling: CouplingMode, n_photons: usize) -> usize {
    match coupling {
        CouplingMode::Rwa => n_photons.max(1),
        CouplingMode::Full => n_photons + 1,
    }
}

/// Free-photon dispersion `ω_k = ε − 2J cos k`.
pub fn dispersion(k: f64, spec: &ModelSpec) -> f64 {
    spec.epsilon - 2.0 * spec.hopping * k.cos()
}

/// Group velocity `dω/dk = 2J sin k`.
pub fn group_velocity(k: f64, spec: &ModelSpec) -> f64 {
    2.0 * spec.hopping * k.sin()
}

#[derive(Clone, Debug, PartialEq)]
pub struct DickeLadder {
    pub raising: DenseTensor,
    pub lowering: DenseTensor,
    /// Diagonal collective excitation count `Σ σ⁺σ⁻`.
    pub number: DenseTensor,
}

/// Collective ladder operators of `m` qubits in the symmetric sector, kept up
/// to `cap` excitations. `b†|n⟩ = √((n+1)(1 − n/m)) |n+1⟩`.
pub fn dicke_ladder(m: usize, cap: usize) -> Result<DickeLadder> {
    if m == 0 || cap == 0 {
        return Err(Error::arg("dicke ladder needs m >= 1 and cap >= 1"));
    }
    if cap > m {
        return Err(Error::arg(format!("excitation cap {cap} exceeds qubit count {m}")));
    }
    let dim = cap + 1;
    let mf = m as f64;
    let raising = DenseTensor::from_fn(&[dim, dim], |i| {
        let (row, col) = (i[0], i[1]);
        if row == col + 1 {
            let n = col as f64;
            C64::new(((n + 1.0) * (1.0 - n / mf)).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let lowering = raising.adjoint()?;
    let number = DenseTensor::from_fn(&[dim, dim], |i| {
        C64::new(if i[0] == i[1] { i[0] as f64 } else { 0.0 }, 0.0)
    });
    Ok(DickeLadder {
        raising,
        lowering,
        number,
    })
}

/// Bosonic ladder truncated to `n` quanta.
pub fn oscillator_ladder(n: usize) -> DickeLadder {
    let dim = n + 1;
    let lowering = boson_annihilation(dim);
    let raising = lowering.adjoint().expect("square");
    let number = DenseTensor::from_fn(&[dim, dim], |i| {
        C64::new(if i[0] == i[1] { i[0] as f64 } else { 0.0 }, 0.0)
    });
    DickeLadder {
        raising,
        lowering,
        number,
    }
}

/// `a` on a `dim`-level truncated boson: `a|n⟩ = √n |n−1⟩`.
pub fn boson_annihilation(dim: usize) -> DenseTensor {
    DenseTensor::from_fn(&[dim, dim], |i| {
        if i[1] == i[0] + 1 {
            C64::new((i[1] as f64).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Local Hilbert-space structure of every chain site.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteLayout {
    /// `n_max + 1`.
    pub cavity_dim: usize,
    /// Per-site local dimension `d_n`.
    pub dims: Vec<usize>,
    /// Per-site scatterer dimension `s` (1 for bare cavities).
    pub scatterer_dims: Vec<usize>,
    /// Index into `ModelSpec::scatterers` for sites hosting one.
    pub scatterer_at: Vec<Option<usize>>,
    ladders: Vec<Option<DickeLadder>>,
}

impl SiteLayout {
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.n_cav;
        let cavity_dim = spec.n_max + 1;
        let mut scatterer_dims = vec![1usize; n];
        let mut scatterer_at = vec![None; n];
        let mut ladders = vec![None; n];
        for (i, s) in spec.scatterers.iter().enumerate() {
            let site = spec.site_of(s.position);
            scatterer_dims[site] = s.local_dim();
            scatterer_at[site] = Some(i);
            ladders[site] = Some(s.ladder()?);
        }
        let dims: Vec<usize> = scatterer_dims.iter().map(|s| s * cavity_dim).collect();
        for (site, &d) in dims.iter().enumerate() {
            if d > spec.dim_ceiling {
                return Err(Error::Config(format!(
                    "site {site} (x = {}) has local dimension {d} above the ceiling {}",
                    spec.coord_of(site),
                    spec.dim_ceiling
                )));
            }
        }
        Ok(SiteLayout {
            cavity_dim,
            dims,
            scatterer_dims,
            scatterer_at,
            ladders,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.dims.len()
    }

    fn on_cavity(&self, site: usize, op: &DenseTensor) -> DenseTensor {
        op.kron(&DenseTensor::identity(self.scatterer_dims[site]))
            .expect("matrices")
    }

    fn on_scatterer(&self, _site: usize, op: &DenseTensor) -> DenseTensor {
        DenseTensor::identity(self.cavity_dim).kron(op).expect("matrices")
    }

    pub fn identity(&self, site: usize) -> DenseTensor {
        DenseTensor::identity(self.dims[site])
    }

    pub fn photon_annihilation(&self, site: usize) -> DenseTensor {
        self.on_cavity(site, &boson_annihilation(self.cavity_dim))
    }

    pub fn photon_creation(&self, site: usize) -> DenseTensor {
        self.photon_annihilation(site).adjoint().expect("square")
    }

    pub fn photon_number(&self, site: usize) -> DenseTensor {
        let a = boson_annihilation(self.cavity_dim);
        self.on_cavity(site, &a.adjoint().unwrap().matmul(&a).unwrap())
    }

    pub fn ladder(&self, site: usize) -> Option<&DickeLadder> {
        self.ladders[site].as_ref()
    }

    pub fn scatterer_lowering(&self, site: usize) -> Option<DenseTensor> {
        self.ladder(site).map(|l| self.on_scatterer(site, &l.lowering))
    }

    pub fn scatterer_raising(&self, site: usize) -> Option<DenseTensor> {
        self.ladder(site).map(|l| self.on_scatterer(site, &l.raising))
    }

    pub fn scatterer_number(&self, site: usize) -> Option<DenseTensor> {
        self.ladder(site).map(|l| self.on_scatterer(site, &l.number))
    }

    /// Photon number plus scatterer excitation number on one site.
    pub fn excitation_number(&self, site: usize) -> DenseTensor {
        let n = self.photon_number(site);
        match self.scatterer_number(site) {
            Some(s) => n.add(&s).unwrap(),
            None => n,
        }
    }

    /// Diagonal `(-1)^(photons + excitations)`.
    pub fn parity(&self, site: usize) -> DenseTensor {
        let s = self.scatterer_dims[site];
        DenseTensor::from_fn(&[self.dims[site], self.dims[site]], |i| {
            if i[0] != i[1] {
                return C64::new(0.0, 0.0);
            }
            let total = i[0] / s + i[0] % s;
            C64::new(if total.is_multiple_of(2) { 1.0 } else { -1.0 }, 0.0)
        })
    }

    /// Local basis vector with given photon and scatterer levels.
    pub fn basis_vector(&self, site: usize, photons: usize, excitation: usize) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); self.dims[site]];
        v[photons * self.scatterer_dims[site] + excitation] = C64::new(1.0, 0.0);
        v
    }

    pub fn vacuum(&self, site: usize) -> Vec<C64> {
        self.basis_vector(site, 0, 0)
    }
}

/// On-site and nearest-neighbour Hamiltonian pieces on a [`SiteLayout`].
///
/// `H = Σ_n onsite[n] + Σ_n bonds[n]`, where `bonds[n]` acts on sites
/// `(n, n+1)` in the two-site basis `i_n * d_{n+1} + i_{n+1}`.
#[derive(Clone, Debug)]
pub struct HamiltonianTerms {
    pub layout: SiteLayout,
    pub onsite: Vec<DenseTensor>,
    pub bonds: Vec<DenseTensor>,
}

pub fn build_terms(spec: &ModelSpec) -> Result<HamiltonianTerms> {
    let layout = SiteLayout::new(spec)?;
    let n = layout.n_sites();
    let mut onsite = Vec::with_capacity(n);
    for site in 0..n {
        let mut h = layout.photon_number(site).scale(C64::new(spec.epsilon, 0.0));
        if let Some(idx) = layout.scatterer_at[site] {
            let sc = &spec.scatterers[idx];
            let g = C64::new(sc.effective_coupling(), 0.0);
            let num = layout.scatterer_number(site).unwrap();
            let lo = layout.scatterer_lowering(site).unwrap();
            let up = layout.scatterer_raising(site).unwrap();
            let a = layout.photon_annihilation(site);
            let ad = layout.photon_creation(site);
            h = h.add(&num.scale(C64::new(sc.delta, 0.0)))?;
            let coupling = match spec.coupling {
                CouplingMode::Full => {
                    let x_sc = up.add(&lo)?;
                    let x_ph = a.add(&ad)?;
                    x_sc.matmul(&x_ph)?
                }
                CouplingMode::Rwa => up.matmul(&a)?.add(&lo.matmul(&ad)?)?,
            };
            h = h.add(&coupling.scale(g))?;
        }
        onsite.push(h);
    }
    let mut bonds = Vec::with_capacity(n - 1);
    let mj = C64::new(-spec.hopping, 0.0);
    for site in 0..n - 1 {
        let a1 = layout.photon_annihilation(site);
        let a2 = layout.photon_annihilation(site + 1);
        let hop = layout
            .photon_creation(site)
            .kron(&a2)?
            .add(&a1.kron(&layout.photon_creation(site + 1))?)?;
        bonds.push(hop.scale(mj));
    }
    Ok(HamiltonianTerms { layout, onsite, bonds })
}
