use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};
use waveguide_mps::model::dispersion;
use waveguide_mps::mps::{write_checkpoint, Diagnostics};
use waveguide_mps::oracle::{
    bogoliubov_diagonalize, elastic_bins, single_excitation_evolve, single_excitation_solve, single_photon_field,
    stationary_amplitudes, two_photon_field,
};
use waveguide_mps::scattering::spectra::{dft, positive_bins};
use waveguide_mps::scattering::{bin_resolved, prepare_ground_state, run_with_ground_state, ElasticBin, SpectrumBin};
use waveguide_mps::{par, CouplingMode, MpsState, C64};

use crate::config::{self, ExperimentConfig, Point, SweepRun};
use crate::output::{self, Session};
use crate::{Failure, RunArgs};

pub const FIGURES: &[(&str, &str, &str)] = &[
    (
        "fig1c",
        "ground-state photon cloud versus coupling",
        include_str!("../configs/fig1c.toml"),
    ),
    (
        "fig2a",
        "single-qubit reflection for one to three photons",
        include_str!("../configs/fig2a.toml"),
    ),
    (
        "fig3",
        "two-photon reflection maps from qubit groups and an oscillator",
        include_str!("../configs/fig3.toml"),
    ),
    (
        "fig4",
        "three qubits at spacings 0, 1 and 2",
        include_str!("../configs/fig4.toml"),
    ),
    (
        "fig6",
        "inelastic scattering at strong coupling",
        include_str!("../configs/fig6.toml"),
    ),
];

/// Opens the output directory. Configuration errors are already recorded in
/// its manifest when this returns `Err(code)`.
fn start(
    loaded: Result<ExperimentConfig, Failure>,
    out: Option<PathBuf>,
    default: &str,
    command: &str,
) -> Result<(ExperimentConfig, Session), u8> {
    let dir = out
        .or_else(|| loaded.as_ref().ok().and_then(|c| c.output.clone()))
        .unwrap_or_else(|| Path::new("out").join(default));
    let mut s = match Session::create(&dir, command) {
        Ok(s) => s,
        Err(f) => {
            eprintln!("error ({}): {}", f.kind(), f.message);
            return Err(f.code);
        }
    };
    match loaded {
        Ok(cfg) => {
            s.set_config(&cfg);
            Ok((cfg, s))
        }
        Err(f) => Err(s.finish(Err(f))),
    }
}

fn open(args: &RunArgs, command: &str) -> Result<(ExperimentConfig, Session), u8> {
    start(
        config::load(&args.config, &args.set),
        args.out.clone(),
        command,
        command,
    )
}

fn save_state(s: &mut Session, state: &MpsState) -> Result<(), Failure> {
    let path = s.path("state.mps");
    let f = File::create(&path)?;
    write_checkpoint(state, BufWriter::new(f))?;
    Ok(())
}

pub fn ground_state(args: &RunArgs, checkpoint: bool) -> u8 {
    let (cfg, mut s) = match open(args, "ground-state") {
        Ok(v) => v,
        Err(code) => return code,
    };
    let r = cfg
        .single()
        .and_then(|p| run_ground_state(&cfg, &p, &mut s, checkpoint));
    s.finish(r)
}

fn run_ground_state(cfg: &ExperimentConfig, p: &Point, s: &mut Session, checkpoint: bool) -> Result<(), Failure> {
    s.record("model", &p.model);
    let gs = prepare_ground_state(&p.model, &cfg.engine)?;
    output::write_ground_state(s, &p.model, &gs)?;
    if checkpoint {
        save_state(s, &gs.state)?;
    }
    Ok(())
}

pub fn scatter(args: &RunArgs, checkpoint: bool) -> u8 {
    let (cfg, mut s) = match open(args, "scatter") {
        Ok(v) => v,
        Err(code) => return code,
    };
    let r = cfg.single().and_then(|p| run_scatter(&cfg, &p, &mut s, checkpoint));
    s.finish(r)
}

fn run_scatter(cfg: &ExperimentConfig, p: &Point, s: &mut Session, checkpoint: bool) -> Result<(), Failure> {
    let run = p.run(cfg)?;
    s.record("model", &run.model);
    s.record("packet", &run.packet);
    let gs = prepare_ground_state(&run.model, &run.engine)?;
    let mut diag = Diagnostics::default();
    match run_with_ground_state(&run, &gs, &mut diag) {
        Ok(out) => {
            output::write_result(s, &run.model, &out.result)?;
            if checkpoint {
                save_state(s, &out.state)?;
            }
            match out.result.inconsistency {
                Some(msg) => Err(Failure::numeric(msg)),
                None => Ok(()),
            }
        }
        Err(e) => {
            // keep whatever the evolution recorded before it stopped
            output::write_diagnostics(s, "diagnostics.csv", &diag)?;
            s.record("diagnostics", output::diagnostics_summary(&diag));
            Err(e.into())
        }
    }
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    label: &'a str,
    exit_code: u8,
    n_photons: usize,
    coupling: CouplingMode,
    m: Option<usize>,
    spacing: Option<i64>,
    g: Option<f64>,
    k_in: f64,
    oscillator: bool,
    r_max_k: Option<f64>,
    r_max: Option<f64>,
    t2_peak_k: Option<f64>,
    t2_peak: Option<f64>,
    ground_energy: Option<f64>,
    ground_photons: Option<f64>,
    max_bond: Option<u64>,
    total_discarded: Option<f64>,
}

fn field(results: &Map<String, Value>, path: &[&str]) -> Option<Value> {
    let mut v = results.get(path[0])?;
    for p in &path[1..] {
        v = v.get(p)?;
    }
    Some(v.clone())
}

fn num(results: &Map<String, Value>, path: &[&str]) -> Option<f64> {
    field(results, path).and_then(|v| v.as_f64())
}

pub fn sweep(args: &RunArgs) -> u8 {
    match open(args, "sweep") {
        Ok((cfg, s)) => run_sweep(&cfg, s),
        Err(code) => code,
    }
}

fn run_sweep(cfg: &ExperimentConfig, mut s: Session) -> u8 {
    let points = match cfg.points() {
        Ok(p) => p,
        Err(f) => return s.finish(Err(f)),
    };
    let mode = cfg.sweep.as_ref().map(|w| w.run).unwrap_or_default();
    let dir = s.dir.clone();
    let outcomes: Vec<(u8, Map<String, Value>)> = par::map_vec(&points, |p| {
        let mut sub = match Session::create(&dir.join(&p.label), "sweep-point") {
            Ok(sub) => sub,
            Err(f) => return (f.code, Map::new()),
        };
        sub.record("point", p);
        let r = match mode {
            SweepRun::Scatter => run_scatter(cfg, p, &mut sub, false),
            SweepRun::GroundState => run_ground_state(cfg, p, &mut sub, false),
        };
        let results = sub.results.clone();
        (sub.finish(r), results)
    });
    let rows: Vec<SummaryRow> = points
        .iter()
        .zip(&outcomes)
        .map(|(p, (code, r))| SummaryRow {
            label: &p.label,
            exit_code: *code,
            n_photons: p.n_photons,
            coupling: p.coupling,
            m: p.m,
            spacing: p.spacing,
            g: p.g,
            k_in: p.k_in,
            oscillator: p.oscillator,
            r_max_k: num(r, &["r_max", "k"]),
            r_max: num(r, &["r_max", "reflection"]),
            t2_peak_k: num(r, &["t2_peak", "k"]),
            t2_peak: num(r, &["t2_peak", "t2"]),
            ground_energy: num(r, &["ground_energy"]).or_else(|| num(r, &["energy"])),
            ground_photons: num(r, &["photons"]),
            max_bond: field(r, &["diagnostics", "max_bond"]).and_then(|v| v.as_u64()),
            total_discarded: num(r, &["diagnostics", "total_discarded"]),
        })
        .collect();
    let written = s.csv("summary.csv", &rows);
    let labels: Vec<&str> = points.iter().map(|p| p.label.as_str()).collect();
    s.record("points", &labels);
    s.record("point_exit_codes", outcomes.iter().map(|o| o.0).collect::<Vec<_>>());
    let worst = outcomes.iter().map(|o| o.0).max().unwrap_or(0);
    let r = written.and_then(|()| {
        if worst == 0 {
            Ok(())
        } else {
            let failed = outcomes.iter().filter(|o| o.0 != 0).count();
            Err(Failure {
                code: worst,
                message: format!("{failed} of {} sweep points failed", points.len()),
            })
        }
    });
    s.finish(r)
}

pub fn figures(id: &str, out: Option<PathBuf>, set: Vec<String>) -> u8 {
    if id == "list" {
        for (name, what, _) in FIGURES {
            println!("{name:6} {what}");
        }
        return 0;
    }
    let Some((name, _, text)) = FIGURES.iter().find(|f| f.0 == id) else {
        let ids: Vec<&str> = FIGURES.iter().map(|f| f.0).collect();
        eprintln!("error (config): unknown figure `{id}`; available: {}", ids.join(", "));
        return 2;
    };
    let loaded = config::parse(text, &set).map_err(|f| f.context(name));
    match start(loaded, out, name, "figures") {
        Ok((cfg, mut s)) => {
            s.record("figure", name);
            run_sweep(&cfg, s)
        }
        Err(code) => code,
    }
}

pub fn oracle(args: &RunArgs) -> u8 {
    let (cfg, mut s) = match open(args, "oracle") {
        Ok(v) => v,
        Err(code) => return code,
    };
    let r = run_oracle(&cfg, &mut s);
    s.finish(r)
}

#[derive(Serialize)]
struct PopulationRow {
    time: f64,
    scatterer: usize,
    position: i64,
    delta_p: f64,
}

fn run_oracle(cfg: &ExperimentConfig, s: &mut Session) -> Result<(), Failure> {
    let p = cfg.single()?;
    let run = p.run(cfg)?;
    let (spec, packet) = (&run.model, &run.packet);
    let t_out = run.t_out();
    let n_ph = packet.n_photons;
    s.record("model", spec);
    s.record("packet", packet);
    s.record("t_out", t_out);
    let coords: Vec<i64> = (0..spec.n_cav).map(|n| spec.coord_of(n)).collect();
    let ks = positive_bins(spec.n_cav, packet.k_in);
    let minus: Vec<f64> = ks.iter().map(|k| -k).collect();

    let (f0, f1, stationary, method) = if spec.all_oscillators() {
        let sol = bogoliubov_diagonalize(spec)?;
        if n_ph == 2 {
            let m = two_photon_field(&sol, packet, t_out)?;
            let re: Vec<f64> = m.iter().map(|z| z.re).collect();
            let im: Vec<f64> = m.iter().map(|z| z.im).collect();
            output::write_pairs(s, &coords, &re, &im)?;
        }
        let st = ks
            .iter()
            .map(|&k| stationary_amplitudes(spec, k))
            .collect::<Result<Vec<_>, _>>()?;
        (
            single_photon_field(&sol, packet, 0.0)?,
            single_photon_field(&sol, packet, t_out)?,
            st,
            "normal modes",
        )
    } else if spec.coupling == CouplingMode::Rwa && n_ph == 1 {
        let amps = packet.amplitudes(spec);
        let out = single_excitation_evolve(spec, &amps, t_out)?;
        s.csv(
            "populations.csv",
            spec.scatterers.iter().enumerate().map(|(i, sc)| PopulationRow {
                time: t_out,
                scatterer: i,
                position: sc.position,
                delta_p: out[spec.n_cav + i].norm_sqr(),
            }),
        )?;
        let st = ks
            .iter()
            .map(|&k| single_excitation_solve(spec, k))
            .collect::<Result<Vec<_>, _>>()?;
        (amps, out[..spec.n_cav].to_vec(), st, "one-excitation sector")
    } else {
        return Err(Failure::config(
            "no exact reference for this model: the oracle covers oscillator-only models and \
             single photons in the rotating-wave approximation",
        ));
    };
    s.record("method", method);

    let a0 = dft(&f0, &coords, &ks);
    let at = dft(&f1, &coords, &ks);
    let ar = dft(&f1, &coords, &minus);
    let threshold = cfg.engine.bin_threshold * n_ph as f64;
    let scale = n_ph as f64;
    let mut spectrum = Vec::with_capacity(ks.len());
    let mut elastic = Vec::new();
    for i in 0..ks.len() {
        let n_in = scale * a0[i].norm_sqr();
        let defined = n_in >= threshold && bin_resolved(spec, packet, t_out, ks[i]);
        let (t, r) = (at[i] / a0[i], ar[i] / a0[i]);
        spectrum.push(SpectrumBin {
            k: ks[i],
            omega: dispersion(ks[i], spec),
            n_in,
            n_out: scale * at[i].norm_sqr(),
            n_out_reflected: scale * ar[i].norm_sqr(),
            transmission: defined.then(|| t.norm_sqr()),
            reflection: defined.then(|| r.norm_sqr()),
        });
        if defined {
            elastic.push(ElasticBin::new(ks[i], dispersion(ks[i], spec), t, r));
        }
    }
    if elastic.is_empty() {
        return Err(Failure::numeric(format!(
            "no spectral bin above threshold {threshold:e}"
        )));
    }
    s.csv("spectrum.csv", &spectrum)?;
    s.csv("elastic.csv", &elastic)?;
    // monochromatic amplitudes, carrying the free phase of the window
    let phased: Vec<(C64, C64)> = ks
        .iter()
        .zip(&stationary)
        .map(|(&k, &(t, r))| {
            let ph = C64::from_polar(1.0, -dispersion(k, spec) * t_out);
            (t * ph, r * ph)
        })
        .collect();
    s.csv("stationary.csv", elastic_bins(&ks, &phased, spec))?;
    Ok(())
}
