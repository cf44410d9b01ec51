//! Output directories: CSV tables plus a `manifest.json` that is written
//! whether or not the run succeeded.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};
use waveguide_mps::mps::Diagnostics;
use waveguide_mps::scattering::metrics::{inelastic_peak, r_max};
use waveguide_mps::scattering::{GroundState, ScatteringResult};
use waveguide_mps::ModelSpec;

use crate::Failure;

pub const MANIFEST_SCHEMA: u32 = 1;

#[derive(Serialize)]
struct Manifest<'a> {
    schema: u32,
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    status: &'static str,
    exit_code: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    config: Option<&'a Value>,
    files: &'a [String],
    results: &'a Map<String, Value>,
}

/// One output directory and its manifest.
pub struct Session {
    pub dir: PathBuf,
    command: String,
    config: Option<Value>,
    files: Vec<String>,
    pub results: Map<String, Value>,
}

impl Session {
    pub fn create(dir: &Path, command: &str) -> Result<Self, Failure> {
        fs::create_dir_all(dir).map_err(|e| Failure::config(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Session {
            dir: dir.to_path_buf(),
            command: command.to_string(),
            config: None,
            files: Vec::new(),
            results: Map::new(),
        })
    }

    pub fn set_config<T: Serialize>(&mut self, cfg: &T) {
        self.config = serde_json::to_value(cfg).ok();
    }

    pub fn record<T: Serialize>(&mut self, key: &str, value: T) {
        self.results
            .insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    /// Path for a new file, registered in the manifest.
    pub fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    pub fn csv<R: Serialize>(&mut self, name: &str, rows: impl IntoIterator<Item = R>) -> Result<(), Failure> {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path)?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes the manifest and reports the outcome; returns the exit code.
    pub fn finish(mut self, outcome: Result<(), Failure>) -> u8 {
        self.files.sort();
        self.files.dedup();
        let (status, code, error) = match &outcome {
            Ok(()) => ("ok", 0, None),
            Err(f) => (
                if f.code == 3 { "aborted" } else { "failed" },
                f.code,
                Some(json!({ "kind": f.kind(), "message": f.message })),
            ),
        };
        let manifest = Manifest {
            schema: MANIFEST_SCHEMA,
            tool: "wgmps",
            version: env!("CARGO_PKG_VERSION"),
            command: &self.command,
            status,
            exit_code: code,
            error,
            config: self.config.as_ref(),
            files: &self.files,
            results: &self.results,
        };
        let path = self.dir.join("manifest.json");
        let written = File::create(&path)
            .map_err(|e| e.to_string())
            .and_then(|f| serde_json::to_writer_pretty(BufWriter::new(f), &manifest).map_err(|e| e.to_string()));
        if let Err(e) = written {
            eprintln!("error: cannot write {}: {e}", path.display());
            return 2;
        }
        if let Err(f) = outcome {
            eprintln!("error ({}): {}", f.kind(), f.message);
        }
        code
    }
}

#[derive(Serialize)]
struct SiteRow {
    time: f64,
    x: i64,
    n_x: f64,
}

#[derive(Serialize)]
struct PopulationRow {
    time: f64,
    scatterer: usize,
    position: i64,
    delta_p: f64,
}

#[derive(Serialize)]
struct CorrelatorRow {
    time: f64,
    i: usize,
    j: usize,
    re: f64,
    im: f64,
}

#[derive(Serialize)]
struct PairRow {
    x1: i64,
    x2: i64,
    re: f64,
    im: f64,
    intensity: f64,
}

#[derive(Serialize)]
struct StepRow {
    step: usize,
    max_discarded: f64,
    norm: f64,
}

pub fn write_diagnostics(s: &mut Session, name: &str, d: &Diagnostics) -> Result<(), Failure> {
    let n = d.max_discarded.len().max(d.norm_trace.len());
    s.csv(
        name,
        (0..n).map(|i| StepRow {
            step: i + 1,
            max_discarded: d.max_discarded.get(i).copied().unwrap_or(f64::NAN),
            norm: d.norm_trace.get(i).copied().unwrap_or(f64::NAN),
        }),
    )
}

pub fn diagnostics_summary(d: &Diagnostics) -> Value {
    json!({
        "steps": d.steps,
        "total_discarded": d.total_discarded,
        "max_bond": d.max_bond,
        "max_requested_rank": d.max_requested_rank,
        "aborted": d.aborted,
    })
}

pub fn write_result(s: &mut Session, spec: &ModelSpec, r: &ScatteringResult) -> Result<(), Failure> {
    s.csv("spectrum.csv", &r.spectrum)?;
    if !r.elastic.is_empty() {
        s.csv("elastic.csv", &r.elastic)?;
    }
    s.csv(
        "photons.csv",
        r.snapshots.iter().flat_map(|snap| {
            r.coords.iter().zip(&snap.n_x).map(|(&x, &n_x)| SiteRow {
                time: snap.time,
                x,
                n_x,
            })
        }),
    )?;
    if !spec.scatterers.is_empty() {
        s.csv(
            "populations.csv",
            r.snapshots.iter().flat_map(|snap| {
                snap.delta_p.iter().enumerate().map(|(i, &delta_p)| PopulationRow {
                    time: snap.time,
                    scatterer: i,
                    position: spec.scatterers[i].position,
                    delta_p,
                })
            }),
        )?;
    }
    if !r.correlators.is_empty() {
        s.csv(
            "correlators.csv",
            r.correlators.iter().flat_map(|c| {
                r.snapshots.iter().enumerate().map(|(n, snap)| CorrelatorRow {
                    time: snap.time,
                    i: c.i,
                    j: c.j,
                    re: c.re[n],
                    im: c.im[n],
                })
            }),
        )?;
    }
    if let Some(m) = &r.two_photon {
        write_pairs(s, &m.coords, &m.re, &m.im)?;
    }
    write_diagnostics(s, "diagnostics.csv", &r.diagnostics)?;
    s.record("t_out", r.t_out);
    s.record("dt", r.dt);
    s.record("steps", r.steps);
    s.record("ground_energy", r.ground_energy);
    s.record("ground_excitations", r.ground_excitations);
    if let Some((k, v)) = r_max(&r.spectrum) {
        s.record("r_max", json!({ "k": k, "reflection": v }));
    }
    if let Some((k, v)) = inelastic_peak(&r.elastic) {
        s.record("t2_peak", json!({ "k": k, "t2": v }));
    }
    s.record("conservation", &r.conservation);
    s.record("violations", r.conservation.violations(1e-3, 1e-6));
    s.record("diagnostics", diagnostics_summary(&r.diagnostics));
    if let Some(d) = &r.companion_diagnostics {
        s.record("companion_diagnostics", diagnostics_summary(d));
    }
    if let Some(msg) = &r.inconsistency {
        s.record("inconsistency", msg);
    }
    Ok(())
}

pub fn write_pairs(s: &mut Session, coords: &[i64], re: &[f64], im: &[f64]) -> Result<(), Failure> {
    let n = coords.len();
    s.csv(
        "two_photon.csv",
        (0..n * n).map(|idx| PairRow {
            x1: coords[idx / n],
            x2: coords[idx % n],
            re: re[idx],
            im: im[idx],
            intensity: re[idx] * re[idx] + im[idx] * im[idx],
        }),
    )
}

#[derive(Serialize)]
struct SweepRow {
    sweep: usize,
    energy: f64,
}

#[derive(Serialize)]
struct GroundSiteRow {
    x: i64,
    n_x: f64,
}

#[derive(Serialize)]
struct GroundPopulationRow {
    scatterer: usize,
    position: i64,
    population: f64,
}

pub fn write_ground_state(s: &mut Session, spec: &ModelSpec, gs: &GroundState) -> Result<(), Failure> {
    s.csv(
        "energy.csv",
        gs.energy_trace
            .iter()
            .enumerate()
            .map(|(sweep, &energy)| SweepRow { sweep, energy }),
    )?;
    s.csv(
        "photons.csv",
        gs.n_x.iter().enumerate().map(|(n, &n_x)| GroundSiteRow {
            x: spec.coord_of(n),
            n_x,
        }),
    )?;
    s.csv(
        "populations.csv",
        gs.populations
            .iter()
            .enumerate()
            .map(|(i, &population)| GroundPopulationRow {
                scatterer: i,
                position: spec.scatterers[i].position,
                population,
            }),
    )?;
    write_diagnostics(s, "diagnostics.csv", &gs.diagnostics)?;
    s.record("energy", gs.energy);
    s.record("sweeps", gs.sweeps);
    s.record("excitations", gs.excitations);
    s.record("photons", gs.photons());
    s.record("diagnostics", diagnostics_summary(&gs.diagnostics));
    Ok(())
}
