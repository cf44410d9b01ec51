//! Scattering experiments: ground state, wavepacket injection, real-time
//! evolution and the observables read off the final state.
//!
//! Amplitudes are always taken relative to the interacting ground state. The
//! one-photon field is `ψ_x(t) = ⟨GS(t)| a_x |Ψ(t)⟩` where `|GS(t)⟩` is the
//! ground state propagated with the same gates as `|Ψ⟩`; in RWA the ground
//! state is the vacuum and is left alone.

pub mod metrics;
mod packet;
pub mod spectra;

pub use packet::Wavepacket;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build_terms, dispersion, group_velocity, CouplingMode, HamiltonianTerms, ModelSpec, SiteLayout};
use crate::mps::{
    evolve, expectation_product, overlap, pair_matrix, Diagnostics, Environments, EvolveOptions, LocalOperator,
    MpsState, PairFill, TimeMode, TrotterPlan,
};
use crate::tensor::{DenseTensor, SvdTruncation};
use crate::C64;

use spectra::{density_from_correlations, dft, inelastic_weight, positive_bins, transmission_reflection};

/// Imaginary-time schedule for the ground state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GroundStateOptions {
    pub dt: f64,
    /// `dt` is halved whenever the energy moves less than this in a sweep,
    /// down to `min_dt`.
    pub halve_below: f64,
    pub min_dt: f64,
    /// Stop once `|ΔE| ≤ tolerance · max(|E|, 1)` at the smallest step.
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for GroundStateOptions {
    fn default() -> Self {
        GroundStateOptions {
            dt: 0.1,
            halve_below: 1e-7,
            min_dt: 0.1 / 64.0,
            tolerance: 1e-9,
            max_sweeps: 20_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    /// Real-time step, rounded down so that it divides `t_out`.
    pub dt: f64,
    pub max_bond: usize,
    pub discard_tolerance: f64,
    pub hard_cap: usize,
    /// Steps between stored snapshots.
    pub snapshot_stride: usize,
    /// Input weight per photon below which a momentum bin is undefined.
    pub bin_threshold: f64,
    /// Most negative inelastic weight accepted before a run is declared
    /// inconsistent.
    pub inelastic_tolerance: f64,
    pub ground_state: GroundStateOptions,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            dt: 0.05,
            max_bond: 64,
            discard_tolerance: 1e-12,
            hard_cap: 256,
            snapshot_stride: 20,
            bin_threshold: 1e-4,
            inelastic_tolerance: 2e-2,
            ground_state: GroundStateOptions::default(),
        }
    }
}

impl EngineConfig {
    pub fn trunc(&self) -> Result<SvdTruncation> {
        SvdTruncation::new(self.max_bond, self.discard_tolerance)
            .map_err(|e| Error::Config(format!("engine truncation: {e}")))
    }

    fn options(&self, renormalize: bool) -> Result<EvolveOptions> {
        let mut o = EvolveOptions::new(self.trunc()?, renormalize);
        o.hard_cap = self.hard_cap;
        Ok(o)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("engine.dt must be positive");
        }
        if self.hard_cap < self.max_bond {
            return bad("engine.hard_cap must be at least engine.max_bond");
        }
        if self.snapshot_stride == 0 {
            return bad("engine.snapshot_stride must be at least 1");
        }
        let g = &self.ground_state;
        if !(g.dt > 0.0 && g.min_dt > 0.0 && g.min_dt <= g.dt) {
            return bad("ground_state.dt and min_dt must satisfy 0 < min_dt <= dt");
        }
        self.trunc().map(|_| ())
    }
}

/// Converged ground state and its baselines.
#[derive(Clone, Debug)]
pub struct GroundState {
    pub state: MpsState,
    pub energy: f64,
    pub energy_trace: Vec<f64>,
    pub sweeps: usize,
    /// `⟨n_x⟩` on every cavity.
    pub n_x: Vec<f64>,
    /// Excitation count of every scatterer, in `ModelSpec::scatterers` order.
    pub populations: Vec<f64>,
    /// `⟨N̂⟩`, photons plus scatterer excitations.
    pub excitations: f64,
    pub diagnostics: Diagnostics,
}

impl GroundState {
    pub fn photons(&self) -> f64 {
        self.n_x.iter().sum()
    }
}

fn norm_sq(s: &MpsState) -> Result<f64> {
    Ok(overlap(s, s)?.re)
}

/// `⟨H⟩ / ⟨ψ|ψ⟩`.
pub fn energy(state: &MpsState, plan: &TrotterPlan) -> Result<f64> {
    let parts = crate::mps::bond_expectations(state, state, plan.bond_hamiltonians())?;
    Ok(parts.iter().map(|c| c.re).sum::<f64>() / norm_sq(state)?)
}

/// Photon occupations and scatterer excitations of a state, normalized.
fn occupations(state: &MpsState, spec: &ModelSpec, layout: &SiteLayout) -> Result<(Vec<f64>, Vec<f64>)> {
    let env = Environments::new(state, state)?;
    let nn = env.overlap().re;
    let n_x = crate::par::map_range(layout.n_sites(), |i| env.local(i, &layout.photon_number(i)))
        .into_iter()
        .map(|r| r.map(|c| c.re / nn))
        .collect::<Result<Vec<_>>>()?;
    let pops = spec
        .scatterers
        .iter()
        .map(|s| {
            let site = spec.site_of(s.position);
            env.local(site, &layout.scatterer_number(site).expect("scatterer site"))
                .map(|c| c.re / nn)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((n_x, pops))
}

fn vacuum(layout: &SiteLayout) -> Result<MpsState> {
    let vecs: Vec<Vec<C64>> = (0..layout.n_sites()).map(|i| layout.vacuum(i)).collect();
    MpsState::product_state(&layout.dims, &vecs)
}

/// Imaginary-time ground state from the vacuum (even parity sector).
pub fn prepare_ground_state(spec: &ModelSpec, cfg: &EngineConfig) -> Result<GroundState> {
    cfg.validate()?;
    let terms = build_terms(spec)?;
    prepare_with_terms(spec, &terms, cfg)
}

fn prepare_with_terms(spec: &ModelSpec, terms: &HamiltonianTerms, cfg: &EngineConfig) -> Result<GroundState> {
    let opts = cfg.options(true)?;
    let g = &cfg.ground_state;
    let mut state = vacuum(&terms.layout)?;
    let mut dt = g.dt;
    let mut plan = TrotterPlan::new(terms, dt, TimeMode::Imaginary)?;
    let mut diag = Diagnostics::default();
    let mut e_prev = energy(&state, &plan)?;
    let mut trace = vec![e_prev];
    let mut sweeps = 0;
    loop {
        if sweeps >= g.max_sweeps {
            return Err(Error::Convergence { sweeps, trace });
        }
        evolve(&mut state, &plan, 1, &opts, &mut diag)?;
        state.normalize()?;
        sweeps += 1;
        let e = energy(&state, &plan)?;
        trace.push(e);
        let de = (e - e_prev).abs();
        e_prev = e;
        if de < g.halve_below && dt > g.min_dt * (1.0 + 1e-12) {
            dt = (dt / 2.0).max(g.min_dt);
            plan = plan.with_dt(dt)?;
            continue;
        }
        if de <= g.tolerance * e.abs().max(1.0) {
            break;
        }
    }
    let (n_x, populations) = occupations(&state, spec, &terms.layout)?;
    let excitations = n_x.iter().sum::<f64>() + populations.iter().sum::<f64>();
    Ok(GroundState {
        state,
        energy: e_prev,
        energy_trace: trace,
        sweeps,
        n_x,
        populations,
        excitations,
        diagnostics: diag,
    })
}

/// `(a_φ†)^N |GS⟩`, compressed after every application and normalized.
pub fn inject_wavepacket(
    gs: &MpsState,
    spec: &ModelSpec,
    packet: &Wavepacket,
    trunc: &SvdTruncation,
    hard_cap: usize,
) -> Result<MpsState> {
    packet.validate(spec)?;
    if packet.n_photons > spec.n_max {
        return Err(Error::Config(format!(
            "n_max = {} cannot hold {} photons on one site",
            spec.n_max, packet.n_photons
        )));
    }
    let layout = spec.layout()?;
    if gs.local_dims() != layout.dims.as_slice() {
        return Err(Error::dim("ground state built on a different layout"));
    }
    let phi = packet.amplitudes(spec);
    let ops: Vec<DenseTensor> = (0..layout.n_sites()).map(|i| layout.photon_creation(i)).collect();
    let mut psi = gs.clone();
    for _ in 0..packet.n_photons {
        psi.apply_operator_sum(&phi, &ops)?;
        let (_, requested) = psi.compress(trunc)?;
        if requested > hard_cap {
            return Err(Error::Resource(format!(
                "wavepacket injection needs bond {requested} (hard cap {hard_cap})"
            )));
        }
        psi.normalize()?;
    }
    Ok(psi)
}

/// Everything needed for one scattering experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatteringRun {
    pub model: ModelSpec,
    pub packet: Wavepacket,
    /// Observation time; `None` picks [`Wavepacket::default_t_out`].
    #[serde(default)]
    pub t_out: Option<f64>,
    #[serde(default)]
    pub engine: EngineConfig,
    /// Compute the two-photon map at `t_out` (two-photon runs only).
    #[serde(default = "yes")]
    pub two_photon_map: bool,
}

fn yes() -> bool {
    true
}

impl ScatteringRun {
    pub fn new(model: ModelSpec, packet: Wavepacket) -> Self {
        ScatteringRun {
            model,
            packet,
            t_out: None,
            engine: EngineConfig::default(),
            two_photon_map: true,
        }
    }

    pub fn t_out(&self) -> f64 {
        self.t_out.unwrap_or_else(|| self.packet.default_t_out(&self.model))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumBin {
    pub k: f64,
    pub omega: f64,
    /// `⟨n_k⟩` of the injected photons at `t = 0`.
    pub n_in: f64,
    /// `⟨n_k⟩` and `⟨n_{-k}⟩` at `t_out`.
    pub n_out: f64,
    pub n_out_reflected: f64,
    /// `None` when the input weight is below threshold, or when the bin is
    /// too slow to have cleared the scatterers by `t_out`.
    pub transmission: Option<f64>,
    pub reflection: Option<f64>,
}

/// Elastic amplitudes at one momentum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElasticBin {
    pub k: f64,
    pub omega: f64,
    pub t_re: f64,
    pub t_im: f64,
    pub r_re: f64,
    pub r_im: f64,
    /// `½(1 − |t|² − |r|²)`.
    pub t2: f64,
    /// `1 − |t|² − |r|²`.
    pub loss: f64,
}

impl ElasticBin {
    pub fn new(k: f64, omega: f64, t: C64, r: C64) -> Self {
        let loss = 1.0 - t.norm_sqr() - r.norm_sqr();
        ElasticBin {
            k,
            omega,
            t_re: t.re,
            t_im: t.im,
            r_re: r.re,
            r_im: r.im,
            t2: 0.5 * loss,
            loss,
        }
    }

    pub fn t(&self) -> C64 {
        C64::new(self.t_re, self.t_im)
    }

    pub fn r(&self) -> C64 {
        C64::new(self.r_re, self.r_im)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub time: f64,
    /// `⟨n_x⟩` minus nothing: the ground-state cloud is included.
    pub n_x: Vec<f64>,
    /// Scatterer excitation minus its ground-state value.
    pub delta_p: Vec<f64>,
}

/// `⟨σ_i⁺ σ_j⁻⟩(t)` for scatterers `i < j` (collective operators for groups).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorTrace {
    pub i: usize,
    pub j: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

/// Row-major `φ_{x₁x₂}` over cavities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoPhotonMap {
    pub coords: Vec<i64>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl TwoPhotonMap {
    pub fn from_amplitudes(coords: Vec<i64>, amps: &[C64]) -> Self {
        TwoPhotonMap {
            coords,
            re: amps.iter().map(|z| z.re).collect(),
            im: amps.iter().map(|z| z.im).collect(),
        }
    }

    pub fn amplitudes(&self) -> Vec<C64> {
        self.re.iter().zip(&self.im).map(|(&r, &i)| C64::new(r, i)).collect()
    }

    /// `|φ_{x₁x₂}|²`.
    pub fn intensity(&self) -> Vec<f64> {
        self.re.iter().zip(&self.im).map(|(r, i)| r * r + i * i).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conservation {
    pub norm_sq: f64,
    pub total_discarded: f64,
    pub energy_initial: f64,
    pub energy_final: f64,
    /// `⟨N̂⟩ / ⟨ψ|ψ⟩` at both ends.
    pub number_initial: f64,
    pub number_final: f64,
    /// Excitation number is a symmetry (RWA).
    pub number_conserved: bool,
}

impl Conservation {
    /// `1 − ‖ψ‖²` may not exceed the discarded weight.
    pub fn norm_accounted(&self) -> bool {
        let lost = 1.0 - self.norm_sq;
        lost <= self.total_discarded + 1e-10 && self.norm_sq <= 1.0 + 1e-10
    }

    pub fn energy_drift(&self) -> f64 {
        (self.energy_final - self.energy_initial).abs() / self.energy_initial.abs().max(1e-300)
    }

    pub fn number_drift(&self) -> f64 {
        (self.number_final - self.number_initial).abs() / self.number_initial.abs().max(1e-300)
    }

    /// Human-readable violations of the conservation budget.
    pub fn violations(&self, energy_tol: f64, number_tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        if !self.norm_accounted() {
            out.push(format!(
                "norm² {} not accounted for by discarded weight {}",
                self.norm_sq, self.total_discarded
            ));
        }
        if self.energy_drift() > energy_tol {
            out.push(format!("relative energy drift {:e}", self.energy_drift()));
        }
        if self.number_conserved && self.number_drift() > number_tol {
            out.push(format!("relative excitation drift {:e}", self.number_drift()));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatteringResult {
    pub t_out: f64,
    pub dt: f64,
    pub steps: usize,
    pub coords: Vec<i64>,
    pub ground_energy: f64,
    pub ground_excitations: f64,
    pub ground_populations: Vec<f64>,
    pub spectrum: Vec<SpectrumBin>,
    /// One-photon runs only; bins with undefined input weight are omitted.
    pub elastic: Vec<ElasticBin>,
    pub snapshots: Vec<Snapshot>,
    pub correlators: Vec<CorrelatorTrace>,
    pub two_photon: Option<TwoPhotonMap>,
    pub conservation: Conservation,
    pub diagnostics: Diagnostics,
    pub companion_diagnostics: Option<Diagnostics>,
    /// Set when some bin has `T₂` below `-inelastic_tolerance`; the data are
    /// kept so the offending bins can be inspected.
    #[serde(default)]
    pub inconsistency: Option<String>,
}

/// A finished run together with its final state.
pub struct RunOutcome {
    pub result: ScatteringResult,
    pub state: MpsState,
}

/// Whether the component at momentum `k` has travelled past the last
/// scatterer, plus three packet widths, by `t_out`. Slower bins are reported
/// as undefined.
pub fn bin_resolved(spec: &ModelSpec, packet: &Wavepacket, t_out: f64, k: f64) -> bool {
    let x_hi = spec.scatterers.iter().map(|s| s.position).max().unwrap_or(packet.x_in);
    let clear = (x_hi - packet.x_in) as f64 + 3.0 * packet.theta;
    group_velocity(k, spec) * t_out >= clear
}

/// `⟨n_k⟩` of a state on the given momenta, from the cached-environment
/// correlation matrix `⟨a†_{x₁} a_{x₂}⟩`.
pub fn momentum_density(state: &MpsState, spec: &ModelSpec, ks: &[f64]) -> Result<Vec<f64>> {
    let layout = spec.layout()?;
    let n = layout.n_sites();
    let ad: Vec<DenseTensor> = (0..n).map(|i| layout.photon_creation(i)).collect();
    let a: Vec<DenseTensor> = (0..n).map(|i| layout.photon_annihilation(i)).collect();
    let nn = norm_sq(state)?;
    let corr: Vec<C64> = pair_matrix(state, state, &ad, &a, PairFill::Hermitian)?
        .into_iter()
        .map(|c| c / nn)
        .collect();
    let coords: Vec<i64> = (0..n).map(|i| spec.coord_of(i)).collect();
    density_from_correlations(&corr, &coords, ks)
}

/// `ψ_x = ⟨gs| a_x |ψ⟩` on every cavity.
pub fn one_photon_field(gs: &MpsState, psi: &MpsState, layout: &SiteLayout) -> Result<Vec<C64>> {
    let ops: Vec<DenseTensor> = (0..layout.n_sites()).map(|i| layout.photon_annihilation(i)).collect();
    crate::mps::site_expectations(gs, psi, &ops)
}

/// `φ_{x₁x₂} = 2^{-1/2} ⟨gs| a_{x₁} a_{x₂} |ψ⟩`, row-major over sites.
pub fn two_photon_field(gs: &MpsState, psi: &MpsState, layout: &SiteLayout) -> Result<Vec<C64>> {
    let a: Vec<DenseTensor> = (0..layout.n_sites()).map(|i| layout.photon_annihilation(i)).collect();
    let m = pair_matrix(gs, psi, &a, &a, PairFill::Symmetric)?;
    Ok(m.into_iter().map(|z| z * std::f64::consts::FRAC_1_SQRT_2).collect())
}

/// `(N!)^{-1/2} ⟨gs| a_{x₁} ⋯ a_{x_N} |ψ⟩` at the given chain coordinates
/// (any order; repeated coordinates apply `a` repeatedly).
pub fn nphoton_projector(gs: &MpsState, psi: &MpsState, spec: &ModelSpec, positions: &[i64]) -> Result<C64> {
    let layout = spec.layout()?;
    let l = spec.half_length();
    let mut sites: Vec<usize> = Vec::with_capacity(positions.len());
    for &x in positions {
        if x.abs() > l {
            return Err(Error::arg(format!("position {x} outside the chain")));
        }
        sites.push(spec.site_of(x));
    }
    sites.sort_unstable();
    let mut ops: Vec<LocalOperator> = Vec::new();
    let mut i = 0;
    while i < sites.len() {
        let site = sites[i];
        let mut power = layout.photon_annihilation(site);
        let mut j = i + 1;
        while j < sites.len() && sites[j] == site {
            power = power.matmul(&layout.photon_annihilation(site))?;
            j += 1;
        }
        ops.push(LocalOperator::new(site, power)?);
        i = j;
    }
    let fact: f64 = (1..=positions.len()).map(|v| v as f64).product();
    Ok(expectation_product(gs, psi, &ops)? / fact.sqrt())
}

/// Scatterer excitations minus their ground-state values.
pub fn qubit_populations(state: &MpsState, spec: &ModelSpec, gs: &GroundState) -> Result<Vec<f64>> {
    let layout = spec.layout()?;
    let (_, pops) = occupations(state, spec, &layout)?;
    Ok(pops.iter().zip(&gs.populations).map(|(p, b)| p - b).collect())
}

fn correlators(state: &MpsState, spec: &ModelSpec, layout: &SiteLayout) -> Result<Vec<C64>> {
    let nn = norm_sq(state)?;
    let ns = spec.scatterers.len();
    let mut out = Vec::new();
    for i in 0..ns {
        for j in i + 1..ns {
            let (si, sj) = (
                spec.site_of(spec.scatterers[i].position),
                spec.site_of(spec.scatterers[j].position),
            );
            let up = LocalOperator::new(si, layout.scatterer_raising(si).expect("scatterer"))?;
            let down = LocalOperator::new(sj, layout.scatterer_lowering(sj).expect("scatterer"))?;
            let mut ops = vec![up, down];
            ops.sort_by_key(|o| o.site);
            out.push(expectation_product(state, state, &ops)? / nn);
        }
    }
    Ok(out)
}

fn excitation_number(state: &MpsState, layout: &SiteLayout) -> Result<f64> {
    let ops: Vec<DenseTensor> = (0..layout.n_sites()).map(|i| layout.excitation_number(i)).collect();
    let v = crate::mps::site_expectations(state, state, &ops)?;
    Ok(v.iter().map(|c| c.re).sum::<f64>() / norm_sq(state)?)
}

/// Prepares the ground state and runs the experiment.
pub fn run(run: &ScatteringRun) -> Result<RunOutcome> {
    run.engine.validate()?;
    let gs = prepare_ground_state(&run.model, &run.engine)?;
    let mut diag = Diagnostics::default();
    run_with_ground_state(run, &gs, &mut diag)
}

/// Runs the experiment on a prepared ground state. Truncation diagnostics go
/// to `diag` as the evolution proceeds, so they are available after an abort.
pub fn run_with_ground_state(run: &ScatteringRun, gs: &GroundState, diag: &mut Diagnostics) -> Result<RunOutcome> {
    let spec = &run.model;
    let cfg = &run.engine;
    cfg.validate()?;
    let trunc = cfg.trunc()?;
    let terms = build_terms(spec)?;
    let layout = &terms.layout;
    let packet = &run.packet;
    let n_ph = packet.n_photons;

    let t_out = run.t_out();
    if !(t_out > 0.0 && t_out.is_finite()) {
        return Err(Error::Config(format!("t_out = {t_out} must be positive")));
    }
    let steps = (t_out / cfg.dt).ceil().max(1.0) as usize;
    let dt = t_out / steps as f64;
    let plan = TrotterPlan::new(&terms, dt, TimeMode::Real)?;
    let opts = cfg.options(false)?;

    let mut psi = inject_wavepacket(&gs.state, spec, packet, &trunc, cfg.hard_cap)?;
    let coords: Vec<i64> = (0..layout.n_sites()).map(|i| spec.coord_of(i)).collect();
    let ks = positive_bins(spec.n_cav, packet.k_in);
    let mut both = ks.clone();
    both.extend(ks.iter().map(|k| -k));
    let nk = ks.len();

    let full = spec.coupling == CouplingMode::Full;
    let baseline = if full {
        momentum_density(&gs.state, spec, &both)?
    } else {
        vec![0.0; both.len()]
    };
    let n0: Vec<f64> = momentum_density(&psi, spec, &ks)?
        .iter()
        .zip(&baseline)
        .map(|(a, b)| a - b)
        .collect();

    let need_companion = full && (n_ph == 1 || (n_ph == 2 && run.two_photon_map));
    let mut companion = gs.state.clone();
    let mut companion_diag = Diagnostics::default();
    let field0 = if n_ph == 1 {
        Some(one_photon_field(&companion, &psi, layout)?)
    } else {
        None
    };

    let energy_initial = energy(&psi, &plan)?;
    let number_initial = excitation_number(&psi, layout)?;

    let ns = spec.scatterers.len();
    let n_pairs = ns * ns.saturating_sub(1) / 2;
    let mut corr_re = vec![Vec::new(); n_pairs];
    let mut corr_im = vec![Vec::new(); n_pairs];
    let mut snapshots = Vec::new();
    let mut record = |psi: &MpsState, time: f64, snaps: &mut Vec<Snapshot>| -> Result<()> {
        let (n_x, pops) = occupations(psi, spec, layout)?;
        let delta_p = pops.iter().zip(&gs.populations).map(|(p, b)| p - b).collect();
        snaps.push(Snapshot { time, n_x, delta_p });
        for (idx, c) in correlators(psi, spec, layout)?.into_iter().enumerate() {
            corr_re[idx].push(c.re);
            corr_im[idx].push(c.im);
        }
        Ok(())
    };
    record(&psi, 0.0, &mut snapshots)?;

    let mut done = 0;
    while done < steps {
        let chunk = cfg.snapshot_stride.min(steps - done);
        evolve(&mut psi, &plan, chunk, &opts, diag)?;
        if need_companion {
            evolve(&mut companion, &plan, chunk, &opts, &mut companion_diag)?;
        }
        done += chunk;
        record(&psi, done as f64 * dt, &mut snapshots)?;
    }

    let nt = momentum_density(&psi, spec, &both)?;
    let nt: Vec<f64> = nt.iter().zip(&baseline).map(|(a, b)| a - b).collect();
    let threshold = cfg.bin_threshold * n_ph as f64;
    let n0_resolved: Vec<f64> = (0..nk)
        .map(|i| {
            if bin_resolved(spec, packet, t_out, ks[i]) {
                n0[i]
            } else {
                0.0
            }
        })
        .collect();
    let (tr, rf) = transmission_reflection(&n0_resolved, &nt[..nk], &nt[nk..], threshold)?;
    let spectrum: Vec<SpectrumBin> = (0..nk)
        .map(|i| SpectrumBin {
            k: ks[i],
            omega: dispersion(ks[i], spec),
            n_in: n0[i],
            n_out: nt[i],
            n_out_reflected: nt[nk + i],
            transmission: tr[i],
            reflection: rf[i],
        })
        .collect();

    let mut elastic = Vec::new();
    let mut inconsistent: Option<(Error, usize)> = None;
    if let Some(f0) = field0 {
        let f1 = one_photon_field(&companion, &psi, layout)?;
        let a0 = dft(&f0, &coords, &ks);
        let at = dft(&f1, &coords, &both);
        for i in 0..nk {
            if tr[i].is_none() {
                continue;
            }
            let (t, r) = (at[i] / a0[i], at[nk + i] / a0[i]);
            if let Err(e) = inelastic_weight(ks[i], t, r, cfg.inelastic_tolerance) {
                inconsistent.get_or_insert((e, 0)).1 += 1;
            }
            elastic.push(ElasticBin::new(ks[i], dispersion(ks[i], spec), t, r));
        }
    }

    let two_photon = if n_ph == 2 && run.two_photon_map {
        let m = two_photon_field(&companion, &psi, layout)?;
        Some(TwoPhotonMap::from_amplitudes(coords.clone(), &m))
    } else {
        None
    };

    let conservation = Conservation {
        norm_sq: norm_sq(&psi)?,
        total_discarded: diag.total_discarded,
        energy_initial,
        energy_final: energy(&psi, &plan)?,
        number_initial,
        number_final: excitation_number(&psi, layout)?,
        number_conserved: !full,
    };

    let mut correlators_out = Vec::with_capacity(n_pairs);
    let mut idx = 0;
    for i in 0..ns {
        for j in i + 1..ns {
            correlators_out.push(CorrelatorTrace {
                i,
                j,
                re: std::mem::take(&mut corr_re[idx]),
                im: std::mem::take(&mut corr_im[idx]),
            });
            idx += 1;
        }
    }

    Ok(RunOutcome {
        result: ScatteringResult {
            t_out,
            dt,
            steps,
            coords,
            ground_energy: gs.energy,
            ground_excitations: gs.excitations,
            ground_populations: gs.populations.clone(),
            spectrum,
            elastic,
            snapshots,
            correlators: correlators_out,
            two_photon,
            conservation,
            diagnostics: diag.clone(),
            companion_diagnostics: need_companion.then_some(companion_diag),
            inconsistency: inconsistent.map(|(e, n)| format!("{e} ({n} bins)")),
        },
        state: psi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ScattererSpec;
    use std::f64::consts::PI;

    #[test]
    fn rwa_ground_state_is_vacuum() {
        let spec = ModelSpec::waveguide(9, 1, CouplingMode::Rwa).with_scatterer(ScattererSpec::qubit(0, 1.0, 0.2));
        let gs = prepare_ground_state(&spec, &EngineConfig::default()).unwrap();
        assert!(gs.excitations.abs() < 1e-14);
        assert!(gs.energy.abs() < 1e-14);
    }

    #[test]
    fn injected_photon_has_unit_number_and_gaussian_spectrum() {
        let spec = ModelSpec::waveguide(41, 1, CouplingMode::Rwa);
        let gs = prepare_ground_state(&spec, &EngineConfig::default()).unwrap();
        let p = Wavepacket::new(0, 3.0, PI / 2.0, 1);
        let psi = inject_wavepacket(&gs.state, &spec, &p, &SvdTruncation::exact(8), 256).unwrap();
        let layout = spec.layout().unwrap();
        assert!((excitation_number(&psi, &layout).unwrap() - 1.0).abs() < 1e-12);
        let ks = spectra::momentum_grid(41, PI / 2.0);
        let nk = momentum_density(&psi, &spec, &ks).unwrap();
        assert!((nk.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        let peak = ks[nk
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0];
        assert!((peak - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn two_photon_product_input_factorizes() {
        let spec = ModelSpec::waveguide(21, 2, CouplingMode::Rwa);
        let layout = spec.layout().unwrap();
        let gs = vacuum(&layout).unwrap();
        let p = Wavepacket::new(0, 2.0, 1.0, 2);
        let psi = inject_wavepacket(&gs, &spec, &p, &SvdTruncation::exact(16), 256).unwrap();
        let phi = p.amplitudes(&spec);
        let map = two_photon_field(&gs, &psi, &layout).unwrap();
        let n = spec.n_cav;
        for a in 0..n {
            for b in 0..n {
                assert!((map[a * n + b] - phi[a] * phi[b]).norm() < 1e-10);
            }
        }
        let x = nphoton_projector(&gs, &psi, &spec, &[1, -2]).unwrap();
        let want = phi[spec.site_of(1)] * phi[spec.site_of(-2)];
        assert!((x - want).norm() < 1e-10);
    }

    #[test]
    fn free_packet_is_fully_transmitted() {
        let spec = ModelSpec::waveguide(81, 1, CouplingMode::Rwa);
        let mut run = ScatteringRun::new(spec, Wavepacket::new(-10, 3.0, PI / 2.0, 1));
        run.t_out = Some(15.0);
        let out = run_with_ground_state(
            &run,
            &prepare_ground_state(&run.model, &run.engine).unwrap(),
            &mut Diagnostics::default(),
        )
        .unwrap();
        for b in &out.result.spectrum {
            if let Some(t) = b.transmission {
                // Trotter dispersion error dominates in the sparsely populated wings
                assert!((t - 1.0).abs() < 5e-3, "T at {} = {t}", b.k);
                assert!(b.reflection.unwrap() < 1e-4);
            }
        }
        for e in &out.result.elastic {
            let want = C64::from_polar(1.0, -e.omega * 15.0);
            assert!((e.t() - want).norm() < 1e-2, "t at {}", e.k);
        }
    }
}
