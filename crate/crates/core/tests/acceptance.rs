//! Acceptance suite at desk scale (129 cavities, bond dimension 64).
//!
//! `cargo test -p waveguide-mps --test acceptance -- 3 4` runs a subset.
//! One PASS/FAIL line is printed per criterion. The process exits non-zero on
//! a failure only when `WGMPS_ACCEPTANCE_STRICT` is set, so that the
//! workspace test run reports the outcome without aborting on it.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use waveguide_mps::model::{build_terms, default_n_max};
use waveguide_mps::mps::{evolve, Diagnostics, EvolveOptions, TimeMode, TrotterPlan};
use waveguide_mps::oracle::{
    self, bogoliubov_diagonalize, coherent_output, single_excitation_evolve, single_excitation_solve,
    single_photon_smatrix, stationary_amplitudes, trotter_steps, DenseState, SMatrixMode,
};
use waveguide_mps::scattering::metrics::{
    diagonal_ratio, inelastic_peak, normalized_l1, peak_deviation, peak_time, r_max, reflected_quadrant,
    reflection_near,
};
use waveguide_mps::scattering::spectra::dft;
use waveguide_mps::scattering::{
    prepare_ground_state, run as run_scattering, EngineConfig, ScatteringResult, ScatteringRun, Wavepacket,
};
use waveguide_mps::{CouplingMode, ModelSpec, ScattererSpec, SvdTruncation, C64};

const N_CAV: usize = 129;
const K_IN: f64 = PI / 2.0;
// widest packet that keeps 3θ clear of both the edge and the scatterer
const THETA_WIDE: f64 = 10.0;

type Outcome = Result<(bool, String), String>;

struct Record {
    result: Arc<ScatteringResult>,
}

static RUNS: Mutex<BTreeMap<String, Record>> = Mutex::new(BTreeMap::new());

fn model(coupling: CouplingMode, n_photons: usize, scatterers: Vec<ScattererSpec>) -> ModelSpec {
    model_on(N_CAV, coupling, n_photons, scatterers)
}

fn model_on(n_cav: usize, coupling: CouplingMode, n_photons: usize, scatterers: Vec<ScattererSpec>) -> ModelSpec {
    let mut m = ModelSpec::waveguide(n_cav, default_n_max(coupling, n_photons), coupling);
    m.scatterers = scatterers;
    m.cap_excitations(n_photons);
    m
}

fn scatter(label: &str, run: ScatteringRun) -> Result<Arc<ScatteringResult>, String> {
    if let Some(r) = RUNS.lock().unwrap().get(label) {
        return Ok(r.result.clone());
    }
    let t0 = Instant::now();
    let out = run_scattering(&run).map_err(|e| format!("{label}: {e}"))?;
    let res = Arc::new(out.result);
    eprintln!(
        "      run {label}: {:.0} s, t_out {:.1}, max bond {}, discarded {:.1e}",
        t0.elapsed().as_secs_f64(),
        res.t_out,
        res.diagnostics.max_bond,
        res.diagnostics.total_discarded
    );
    RUNS.lock()
        .unwrap()
        .insert(label.to_string(), Record { result: res.clone() });
    Ok(res)
}

fn qubit_run(label: &str, g: f64, count: usize, n: usize) -> Result<Arc<ScatteringResult>, String> {
    let m = model(CouplingMode::Rwa, n, vec![ScattererSpec::qubits(0, 1.0, g, count)]);
    scatter(label, ScatteringRun::new(m, Wavepacket::new(-20, 2.0, K_IN, n)))
}

fn map_of(r: &ScatteringResult) -> Result<Vec<f64>, String> {
    r.two_photon
        .as_ref()
        .map(|m| m.intensity())
        .ok_or_else(|| "run has no two-photon map".to_string())
}

fn reflected_ratio(r: &ScatteringResult) -> Result<f64, String> {
    let (_, q) = reflected_quadrant(&map_of(r)?, &r.coords, 0);
    diagonal_ratio(&q).ok_or_else(|| "empty reflected quadrant".to_string())
}

fn reflected_diagonal(r: &ScatteringResult) -> Result<f64, String> {
    let (c, q) = reflected_quadrant(&map_of(r)?, &r.coords, 0);
    Ok((0..c.len()).map(|i| q[i * c.len() + i]).fold(0.0, f64::max))
}

fn wide_packet(n: usize) -> Wavepacket {
    Wavepacket::new(-32, THETA_WIDE, K_IN, n)
}

fn c1_oracle_fidelity() -> Outcome {
    let n_cav = 11;
    let spec = ModelSpec::waveguide(n_cav, 2, CouplingMode::Full).with_scatterer(ScattererSpec::qubit(0, 1.0, 0.3));
    let cfg = EngineConfig::default();
    let gs = prepare_ground_state(&spec, &cfg).map_err(|e| e.to_string())?;
    let layout = spec.layout().map_err(|e| e.to_string())?;
    // narrow photon left of the qubit, built directly because the chain is
    // too short for a validated packet
    let coeffs: Vec<C64> = (0..n_cav)
        .map(|n| {
            let x = spec.coord_of(n) as f64;
            C64::from_polar((-(x + 3.0).powi(2) / 2.0).exp(), K_IN * x)
        })
        .collect();
    let ops: Vec<_> = (0..n_cav).map(|n| layout.photon_creation(n)).collect();
    let mut psi = gs.state.clone();
    psi.apply_operator_sum(&coeffs, &ops).map_err(|e| e.to_string())?;
    psi.compress(&SvdTruncation::exact(256)).map_err(|e| e.to_string())?;
    psi.normalize().map_err(|e| e.to_string())?;

    let dense0 = DenseState::new(psi.local_dims().to_vec(), psi.to_dense().map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let terms = build_terms(&spec).map_err(|e| e.to_string())?;
    let dt = cfg.dt;
    let steps = (5.0 / 1.0 / dt).round() as usize;
    let plan = TrotterPlan::new(&terms, dt, TimeMode::Real).map_err(|e| e.to_string())?;
    let mut diag = Diagnostics::default();
    let opts = EvolveOptions::new(cfg.trunc().map_err(|e| e.to_string())?, false);
    evolve(&mut psi, &plan, steps, &opts, &mut diag).map_err(|e| e.to_string())?;
    let dense = trotter_steps(&plan, &dense0, steps).map_err(|e| e.to_string())?;
    let mps = DenseState::new(psi.local_dims().to_vec(), psi.to_dense().map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let f = mps.fidelity(&dense);
    Ok((
        f >= 0.999,
        format!(
            "F = {f:.8} at t = {} ({} cavities, dim {}, max bond {})",
            steps as f64 * dt,
            n_cav,
            dense.amps.len(),
            diag.max_bond
        ),
    ))
}

fn c2_linear_elastic() -> Outcome {
    // the counter-rotating terms squeeze the oscillator and the cavities next
    // to it: two levels shift the resonance by ~0.1 in amplitude
    let mut m = model(CouplingMode::Full, 1, vec![ScattererSpec::oscillator(0, 1.0, 0.3, 5)]);
    m.n_max = 3;
    // a narrower packet placed further out leaves room for the slow wing
    // bins to clear the scatterer before the fast ones reach the edge
    let packet = Wavepacket::new(-44, 4.0, K_IN, 1);
    let mut run = ScatteringRun::new(m.clone(), packet.clone());
    run.t_out = Some(125.0);
    let res = scatter("oscillator-full-g0.3", run)?;
    let sol = bogoliubov_diagonalize(&m).map_err(|e| e.to_string())?;
    let ks: Vec<f64> = res.elastic.iter().map(|b| b.k).collect();
    let amps =
        single_photon_smatrix(&sol, res.t_out, &ks, &SMatrixMode::Windowed { packet }).map_err(|e| e.to_string())?;
    let mut worst_unit: f64 = 0.0;
    let mut worst_t2 = f64::NEG_INFINITY;
    let mut worst_amp: f64 = 0.0;
    for (b, (t, r)) in res.elastic.iter().zip(&amps) {
        worst_unit = worst_unit.max((b.t().norm_sqr() + b.r().norm_sqr() - 1.0).abs());
        worst_t2 = worst_t2.max(b.t2);
        worst_amp = worst_amp.max((b.t() - t).norm()).max((b.r() - r).norm());
    }
    let ok = !res.elastic.is_empty() && worst_unit <= 2e-2 && worst_t2 <= 1e-2 && worst_amp <= 2e-2;
    Ok((
        ok,
        format!(
            "{} bins: max ||t|²+|r|²-1| = {worst_unit:.2e} (<= 2e-2), max T2 = {worst_t2:.2e} (<= 1e-2), max amplitude error vs oracle = {worst_amp:.2e} (<= 2e-2)",
            res.elastic.len()
        ),
    ))
}

fn c3_perfect_reflection() -> Outcome {
    let res = qubit_run("qubit-g0.15-N1", 0.15, 1, 1)?;
    let r = reflection_near(&res.spectrum, K_IN).ok_or("no defined bin near k_in")?;
    let spec = model(CouplingMode::Rwa, 1, vec![ScattererSpec::qubit(0, 1.0, 0.15)]);
    let (_, r_exact) = single_excitation_solve(&spec, K_IN).map_err(|e| e.to_string())?;
    let dev = (r_exact.norm_sqr() - 1.0).abs();
    // the same packet, window and t_out propagated exactly in the
    // one-excitation sector: what a perfect engine would measure here
    let packet = Wavepacket::new(-20, 2.0, K_IN, 1);
    let amps = packet.amplitudes(&spec);
    let out = single_excitation_evolve(&spec, &amps, res.t_out).map_err(|e| e.to_string())?;
    let a0 = dft(&amps, &res.coords, &[K_IN])[0];
    let ar = dft(&out[..spec.n_cav], &res.coords, &[-K_IN])[0];
    let window = (ar / a0).norm_sqr();
    Ok((
        r >= 0.95 && dev <= 1e-10,
        format!(
            "R(k_in) = {r:.4} (>= 0.95), exact ||r|²-1| = {dev:.1e} (<= 1e-10); exact propagation over the same {N_CAV}-cavity window to t_out = {:.1} gives {window:.4}",
            res.t_out
        ),
    ))
}

fn c4_saturation() -> Outcome {
    let mut rm = Vec::new();
    for n in 1..=3 {
        let res = qubit_run(&format!("qubit-g0.15-N{n}"), 0.15, 1, n)?;
        rm.push(r_max(&res.spectrum).ok_or("no defined bins")?.1);
    }
    let ok = rm[0] > rm[1] && rm[1] > rm[2] && rm[0] - rm[2] >= 0.1;
    Ok((
        ok,
        format!(
            "R_max(N=1,2,3) = {:.4}, {:.4}, {:.4}; drop {:.4} (>= 0.1)",
            rm[0],
            rm[1],
            rm[2],
            rm[0] - rm[2]
        ),
    ))
}

fn c5_dicke_linearization() -> Outcome {
    let one = r_max(&qubit_run("qubit-g0.15-N2", 0.15, 1, 2)?.spectrum)
        .ok_or("no defined bins")?
        .1;
    let four = r_max(&qubit_run("dicke4-g0.075-N2", 0.075, 4, 2)?.spectrum)
        .ok_or("no defined bins")?
        .1;
    Ok((
        four - one >= 0.05,
        format!(
            "R_max(M=4) - R_max(M=1) = {four:.4} - {one:.4} = {:.4} (>= 0.05)",
            four - one
        ),
    ))
}

fn rwa_two_photon(label: &str, s: ScattererSpec) -> Result<Arc<ScatteringResult>, String> {
    let m = model(CouplingMode::Rwa, 2, vec![s]);
    scatter(label, ScatteringRun::new(m, wide_packet(2)))
}

fn oscillator_reference() -> Result<Arc<ScatteringResult>, String> {
    rwa_two_photon("oscillator-rwa-g0.1-N2", ScattererSpec::oscillator(0, 1.0, 0.1, 2))
}

fn c6_antibunching() -> Outcome {
    let qubit = rwa_two_photon("qubit-g0.1-N2", ScattererSpec::qubit(0, 1.0, 0.1))?;
    let osc = oscillator_reference()?;
    let rq = reflected_ratio(&qubit)?;
    let ro = reflected_ratio(&osc)?;
    let m = model(CouplingMode::Rwa, 2, vec![ScattererSpec::oscillator(0, 1.0, 0.1, 2)]);
    let sol = bogoliubov_diagonalize(&m).map_err(|e| e.to_string())?;
    let exact: Vec<f64> = oracle::two_photon_field(&sol, &wide_packet(2), osc.t_out)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|z| z.norm_sqr())
        .collect();
    let dev = peak_deviation(&map_of(&osc)?, &exact).map_err(|e| e.to_string())?;
    Ok((
        rq <= 0.05 && ro >= 0.99 && dev <= 0.05,
        format!(
            "qubit reflected diagonal/peak = {rq:.4} (<= 0.05); oscillator = {ro:.4} (diagonal maximum); oscillator map vs Wick factorization {dev:.2e} of peak (<= 0.05)"
        ),
    ))
}

fn c7_dicke_m20() -> Outcome {
    let g = 0.1 / 20f64.sqrt();
    let dicke = rwa_two_photon("dicke20-g0.1-N2", ScattererSpec::qubits(0, 1.0, g, 20))?;
    let osc = oscillator_reference()?;
    // both runs carry the same two-photon input, so raw intensities compare
    let dd = reflected_diagonal(&dicke)?;
    let doc = reflected_diagonal(&osc)?;
    let dip = 1.0 - dd / doc;
    Ok((
        dip >= 0.10,
        format!(
            "reflected diagonal peak Dicke {dd:.4e} vs oscillator {doc:.4e}: dip {:.1}% (>= 10%); diagonal/peak Dicke {:.4}",
            100.0 * dip,
            reflected_ratio(&dicke)?
        ),
    ))
}

fn triple(
    coupling: CouplingMode,
    g: f64,
    d: i64,
    stride: Option<usize>,
    map: bool,
) -> Result<Arc<ScatteringResult>, String> {
    let scat = if d == 0 {
        vec![ScattererSpec::qubits(0, 1.0, g, 3)]
    } else {
        vec![
            ScattererSpec::qubit(-d, 1.0, g),
            ScattererSpec::qubit(0, 1.0, g),
            ScattererSpec::qubit(d, 1.0, g),
        ]
    };
    let m = model(coupling, 2, scat);
    let mut run = ScatteringRun::new(m, Wavepacket::new(-33, THETA_WIDE, K_IN, 2));
    run.two_photon_map = map;
    if let Some(s) = stride {
        run.engine.snapshot_stride = s;
    }
    let tag = match coupling {
        CouplingMode::Rwa => "rwa",
        CouplingMode::Full => "full",
    };
    scatter(&format!("triple-{tag}-g{g:.4}-d{d}"), run)
}

fn c8_markovian() -> Outcome {
    let g = 0.1 / 3f64.sqrt();
    let d0 = map_of(&*triple(CouplingMode::Rwa, g, 0, None, true)?)?;
    let d2 = map_of(&*triple(CouplingMode::Rwa, g, 2, None, true)?)?;
    let l1 = normalized_l1(&d0, &d2).map_err(|e| e.to_string())?;
    let d1 = triple(CouplingMode::Rwa, g, 1, Some(2), false)?;
    let times: Vec<f64> = d1.snapshots.iter().map(|s| s.time).collect();
    let peaks: Vec<f64> = (0..3)
        .map(|i| {
            let v: Vec<f64> = d1.snapshots.iter().map(|s| s.delta_p[i]).collect();
            peak_time(&times, &v).unwrap_or(f64::NAN)
        })
        .collect();
    let ordered = peaks[0] < peaks[1] && peaks[1] < peaks[2];
    // informational: when each δP_i first reaches 1% of its maximum
    let onsets: Vec<f64> = (0..3)
        .map(|i| {
            let v: Vec<f64> = d1.snapshots.iter().map(|s| s.delta_p[i]).collect();
            let top = v.iter().cloned().fold(0.0, f64::max);
            v.iter().position(|&p| p >= 0.01 * top).map_or(f64::NAN, |n| times[n])
        })
        .collect();
    Ok((
        l1 <= 0.05 && ordered,
        format!(
            "L1(d=0, d=2) = {l1:.4} (<= 0.05); d=1 peak times {:.2} < {:.2} < {:.2}: {} (1% onsets {:.2}, {:.2}, {:.2})",
            peaks[0],
            peaks[1],
            peaks[2],
            if ordered { "ordered" } else { "NOT ordered" },
            onsets[0],
            onsets[1],
            onsets[2]
        ),
    ))
}

fn c9_ultrastrong_breakdown() -> Outcome {
    let d0 = triple(CouplingMode::Full, 0.3, 0, None, true)?;
    let d2 = triple(CouplingMode::Full, 0.3, 2, None, true)?;
    let l1 = normalized_l1(&map_of(&d0)?, &map_of(&d2)?).map_err(|e| e.to_string())?;
    let residual =
        |r: &ScatteringResult| -> f64 { r.snapshots.last().map(|s| s.delta_p.iter().sum()).unwrap_or(f64::NAN) };
    let (p0, p2) = (residual(&d0), residual(&d2));
    let relaxed = p0 > 0.0 && (p2 <= 0.0 || p0 / p2 >= 3.0);
    Ok((
        l1 >= 0.15 && relaxed,
        format!(
            "L1(d=0, d=2) = {l1:.4} (>= 0.15); residual δP at t_out d=0 {p0:.3e}, d=2 {p2:.3e}, ratio {:.2} (>= 3)",
            p0 / p2
        ),
    ))
}

fn c10_ultrastrong_ground_state() -> Outcome {
    let spec = model(CouplingMode::Full, 1, vec![ScattererSpec::qubit(0, 1.0, 0.7)]);
    let gs = prepare_ground_state(&spec, &EngineConfig::default()).map_err(|e| e.to_string())?;
    let l = spec.half_length();
    let n = |x: i64| gs.n_x[spec.site_of(x)];
    // far tails sit at 1e-100 and below; differences under double precision
    // relative to the cloud are rounding, not structure
    let floor = 1e-14 * gs.n_x.iter().cloned().fold(0.0, f64::max);
    let mut monotone = true;
    let mut first_break = String::new();
    for x in 2..l {
        for (a, b) in [(x, x + 1), (-x, -x - 1)] {
            if n(b) > n(a) + floor && monotone {
                monotone = false;
                first_break = format!(" (n({b}) = {:.2e} > n({a}) = {:.2e})", n(b), n(a));
            }
        }
    }
    Ok((
        gs.excitations > 0.01 && monotone,
        format!(
            "<N>_GS = {:.4} (> 0.01), n(0) = {:.2e}, n(±3) = {:.2e}/{:.2e}, n(±{l}) = {:.1e}/{:.1e}, monotone beyond 2 sites: {monotone}{first_break}",
            gs.excitations,
            n(0),
            n(-3),
            n(3),
            n(-l),
            n(l)
        ),
    ))
}

fn c11_inelastic() -> Outcome {
    let packet = wide_packet(1);
    let mut peaks = Vec::new();
    for count in [1usize, 2] {
        let g = 0.5 / (count as f64).sqrt();
        let m = model(CouplingMode::Full, 1, vec![ScattererSpec::qubits(0, 1.0, g, count)]);
        let res = scatter(&format!("full-M{count}-g{g:.4}"), ScatteringRun::new(m, packet.clone()))?;
        peaks.push(inelastic_peak(&res.elastic).ok_or("no elastic bins")?.1);
    }
    let osc = model(CouplingMode::Full, 1, vec![ScattererSpec::oscillator(0, 1.0, 0.5, 2)]);
    let stability = match bogoliubov_diagonalize(&osc) {
        Ok(_) => "quadratic form stable".to_string(),
        Err(e) => format!("oracle: {e}"),
    };
    let control = scatter("oscillator-full-g0.5", ScatteringRun::new(osc, packet)).and_then(|r| {
        inelastic_peak(&r.elastic)
            .map(|p| p.1)
            .ok_or_else(|| "no elastic bins".into())
    });
    let (c_ok, c_text) = match control {
        Ok(v) => (v <= 1e-2, format!("oscillator control T2 peak = {v:.3e} (<= 1e-2)")),
        Err(e) => (false, format!("oscillator control failed: {e}")),
    };
    let (p1, p2) = (peaks[0], peaks[1]);
    let close = (p1 - p2).abs() <= 0.5 * p1.max(p2);
    Ok((
        p1 >= 0.05 && p2 >= 0.05 && close && c_ok,
        format!("T2 peak M=1 {p1:.4}, M=2 {p2:.4} (>= 0.05, within 50%: {close}); {c_text}; {stability}"),
    ))
}

fn c12_conservation() -> Outcome {
    // make sure there is something to check when run on its own
    if RUNS.lock().unwrap().is_empty() {
        qubit_run("qubit-g0.15-N1", 0.15, 1, 1)?;
        c2_linear_elastic()?;
    }
    let runs = RUNS.lock().unwrap();
    let mut bad = Vec::new();
    let mut worst_e: f64 = 0.0;
    let mut worst_n: f64 = 0.0;
    for (label, r) in runs.iter() {
        let c = &r.result.conservation;
        worst_e = worst_e.max(c.energy_drift());
        if c.number_conserved {
            worst_n = worst_n.max(c.number_drift());
        }
        for v in c.violations(1e-3, 1e-6) {
            bad.push(format!("{label}: {v}"));
        }
    }
    Ok((
        bad.is_empty(),
        format!(
            "{} runs, worst energy drift {worst_e:.1e} (<= 1e-3), worst RWA number drift {worst_n:.1e} (<= 1e-6){}",
            runs.len(),
            if bad.is_empty() {
                String::new()
            } else {
                format!("; {}", bad.join("; "))
            }
        ),
    ))
}

fn c13_coherent_linearity() -> Outcome {
    let spec = model(CouplingMode::Full, 1, vec![ScattererSpec::oscillator(0, 1.0, 0.3, 2)]);
    let (t, r) = stationary_amplitudes(&spec, K_IN + 0.1).map_err(|e| e.to_string())?;
    let ratios: Vec<f64> = [0.1, 1.0, 10.0]
        .iter()
        .map(|&a| {
            let (ot, or) = coherent_output(C64::new(a, 0.0), t, r);
            ot.norm_sqr() / or.norm_sqr()
        })
        .collect();
    let spread = ratios.iter().map(|v| (v / ratios[1] - 1.0).abs()).fold(0.0, f64::max);
    Ok((
        spread <= 1e-12,
        format!(
            "|t|²/|r|² = {:.12} for |α| = 0.1, 1, 10; relative spread {spread:.1e} (<= 1e-12)",
            ratios[1]
        ),
    ))
}

fn main() {
    let criteria: [(usize, &str, fn() -> Outcome); 13] = [
        (1, "oracle fidelity", c1_oracle_fidelity),
        (3, "perfect single-photon reflection", c3_perfect_reflection),
        (4, "reflection saturation", c4_saturation),
        (5, "Dicke linearization", c5_dicke_linearization),
        (13, "coherent-state linearity", c13_coherent_linearity),
        (2, "elastic-only linear scattering", c2_linear_elastic),
        (6, "antibunching", c6_antibunching),
        (7, "nonlinearity at M=20", c7_dicke_m20),
        (8, "Markovian distance equivalence", c8_markovian),
        (9, "ultrastrong breakdown of equivalence", c9_ultrastrong_breakdown),
        (10, "ultrastrong ground state", c10_ultrastrong_ground_state),
        (11, "inelastic channel", c11_inelastic),
        (12, "conservation suite", c12_conservation),
    ];
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    let mut ran = 0;
    for (id, name, f) in criteria {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        ran += 1;
        let t0 = Instant::now();
        let outcome = match catch_unwind(AssertUnwindSafe(f)) {
            Ok(o) => o,
            Err(p) => Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into())),
        };
        let (pass, detail) = match outcome {
            Ok((p, d)) => (p, d),
            Err(e) => (false, format!("error: {e}")),
        };
        println!(
            "{} {id:>2} {name}: {detail} [{:.0} s]",
            if pass { "PASS" } else { "FAIL" },
            t0.elapsed().as_secs_f64()
        );
        if !pass {
            failed.push(id);
        }
    }
    println!("acceptance: {}/{ran} passed", ran - failed.len());
    if !failed.is_empty() && std::env::var_os("WGMPS_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
