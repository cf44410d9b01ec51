//! Experiment configuration: TOML on disk, `--set key=value` overrides on
//! top, then expansion of sweep axes into concrete runs.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use waveguide_mps::model::default_n_max;
use waveguide_mps::scattering::{EngineConfig, ScatteringRun, Wavepacket};
use waveguide_mps::{CouplingMode, ModelSpec, ScattererKind, ScattererSpec};

use crate::Failure;

pub const SCHEMA: u32 = 1;

fn schema() -> u32 {
    SCHEMA
}

fn one() -> f64 {
    1.0
}

fn inv_pi() -> f64 {
    1.0 / PI
}

fn desk_n_cav() -> usize {
    129
}

fn dim_ceiling() -> usize {
    64
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "schema")]
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub model: ModelSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub packet: Option<Wavepacket>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_out: Option<f64>,
    #[serde(default = "yes")]
    pub two_photon_map: bool,
    #[serde(default)]
    pub engine: EngineConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

/// `ModelSpec` with desk-scale defaults; `n_max` defaults per photon number.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default = "one")]
    pub epsilon: f64,
    #[serde(default = "inv_pi")]
    pub hopping: f64,
    #[serde(default = "desk_n_cav")]
    pub n_cav: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    pub coupling: CouplingMode,
    #[serde(default)]
    pub scatterers: Vec<ScattererSpec>,
    #[serde(default = "dim_ceiling")]
    pub dim_ceiling: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepRun {
    #[default]
    Scatter,
    GroundState,
}

/// Axes are combined as a Cartesian product; an empty axis keeps the base
/// value.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default)]
    pub run: SweepRun,
    #[serde(default)]
    pub n_photons: Vec<usize>,
    /// Qubits per group, applied to every qubit scatterer.
    #[serde(default)]
    pub m: Vec<usize>,
    /// Spacing between neighbouring scatterers, laid out symmetrically about
    /// the middle one. Zero merges identical qubits into a single group.
    #[serde(default)]
    pub spacing: Vec<i64>,
    #[serde(default)]
    pub g: Vec<f64>,
    #[serde(default)]
    pub k_in: Vec<f64>,
    #[serde(default)]
    pub coupling: Vec<CouplingMode>,
    /// Rescale `g` by `1/√M` so that the collective coupling stays fixed.
    #[serde(default)]
    pub fixed_collective: bool,
    /// Add one point per remaining combination with every qubit group
    /// replaced by an oscillator of the same collective coupling.
    #[serde(default)]
    pub oscillator_reference: bool,
}

/// One concrete experiment of a sweep.
#[derive(Clone, Debug, Serialize)]
pub struct Point {
    pub label: String,
    pub n_photons: usize,
    pub m: Option<usize>,
    pub spacing: Option<i64>,
    pub g: Option<f64>,
    pub k_in: f64,
    pub coupling: CouplingMode,
    pub oscillator: bool,
    pub model: ModelSpec,
    pub packet: Option<Wavepacket>,
}

impl Point {
    pub fn run(&self, cfg: &ExperimentConfig) -> Result<ScatteringRun, Failure> {
        let packet = self
            .packet
            .clone()
            .ok_or_else(|| Failure::config("a [packet] table is required to scatter"))?;
        packet.validate(&self.model).map_err(Failure::from)?;
        Ok(ScatteringRun {
            model: self.model.clone(),
            packet,
            t_out: cfg.t_out,
            engine: cfg.engine.clone(),
            two_photon_map: cfg.two_photon_map,
        })
    }
}

/// Reads `path`, applies overrides and checks the result.
pub fn load(path: &Path, overrides: &[String]) -> Result<ExperimentConfig, Failure> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text, overrides).map_err(|f| f.context(&path.display().to_string()))
}

pub fn parse(text: &str, overrides: &[String]) -> Result<ExperimentConfig, Failure> {
    let mut table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Failure::config(e.to_string()))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let cfg: ExperimentConfig = table
        .try_into()
        .map_err(|e: toml::de::Error| Failure::config(e.to_string()))?;
    if cfg.schema != SCHEMA {
        return Err(Failure::config(format!(
            "schema = {} is not supported (expected {SCHEMA})",
            cfg.schema
        )));
    }
    cfg.engine.validate().map_err(Failure::from)?;
    Ok(cfg)
}

/// `a.b.0.c=value`; the value is read as TOML and falls back to a string.
pub fn apply_override(table: &mut toml::Table, item: &str) -> Result<(), Failure> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| Failure::config(format!("override `{item}` is not key=value")))?;
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap(),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.trim().split('.').collect();
    let mut cur = table;
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        if last {
            cur.insert(part.to_string(), value);
            return Ok(());
        }
        let next = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = match next {
            toml::Value::Table(t) => t,
            toml::Value::Array(a) => {
                let idx: usize = parts[i + 1]
                    .parse()
                    .map_err(|_| Failure::config(format!("override `{key}`: `{part}` is a list, expected an index")))?;
                let len = a.len();
                let elem = a
                    .get_mut(idx)
                    .ok_or_else(|| Failure::config(format!("override `{key}`: index {idx} out of range ({len})")))?;
                if i + 2 == parts.len() {
                    *elem = value;
                    return Ok(());
                }
                match elem {
                    toml::Value::Table(t) => {
                        // skip the index segment
                        return apply_override(t, &format!("{}={raw}", parts[i + 2..].join(".")))
                            .map_err(|f| f.context(key));
                    }
                    _ => {
                        return Err(Failure::config(format!(
                            "override `{key}`: element {idx} is not a table"
                        )))
                    }
                }
            }
            _ => return Err(Failure::config(format!("override `{key}`: `{part}` is not a table"))),
        };
    }
    Ok(())
}

impl ModelSection {
    pub fn spec(&self, n_photons: usize) -> Result<ModelSpec, Failure> {
        let mut m = ModelSpec {
            epsilon: self.epsilon,
            hopping: self.hopping,
            n_cav: self.n_cav,
            n_max: self.n_max.unwrap_or_else(|| default_n_max(self.coupling, n_photons)),
            scatterers: self.scatterers.clone(),
            coupling: self.coupling,
            dim_ceiling: self.dim_ceiling,
        };
        m.cap_excitations(n_photons);
        m.validate().map_err(Failure::from)?;
        Ok(m)
    }
}

fn axis<T: Clone>(values: &[T]) -> Vec<Option<T>> {
    if values.is_empty() {
        vec![None]
    } else {
        values.iter().cloned().map(Some).collect()
    }
}

fn qubit_count(s: &ScattererSpec) -> Option<usize> {
    match s.kind {
        ScattererKind::Qubits { count, .. } => Some(count),
        ScattererKind::Oscillator { .. } => None,
    }
}

/// Lays the scatterers out with spacing `d` about the middle one's position.
fn respace(scat: &[ScattererSpec], d: i64) -> Result<Vec<ScattererSpec>, Failure> {
    if scat.is_empty() {
        return Ok(Vec::new());
    }
    let mut sorted = scat.to_vec();
    sorted.sort_by_key(|s| s.position);
    let centre = sorted[(sorted.len() - 1) / 2].position;
    let mid = (sorted.len() as i64 - 1) / 2;
    if d == 0 {
        if sorted.len() == 1 {
            return Ok(sorted);
        }
        let first = &sorted[0];
        let same = sorted
            .iter()
            .all(|s| s.delta == first.delta && s.g == first.g && qubit_count(s).is_some());
        if !same {
            return Err(Failure::config(
                "spacing 0 merges scatterers into one group, which needs identical qubits",
            ));
        }
        let total: usize = sorted.iter().filter_map(qubit_count).sum();
        return Ok(vec![ScattererSpec::qubits(centre, first.delta, first.g, total)]);
    }
    Ok(sorted
        .into_iter()
        .enumerate()
        .map(|(i, mut s)| {
            s.position = centre + (i as i64 - mid) * d;
            s
        })
        .collect())
}

impl ExperimentConfig {
    /// Photon number of the base configuration.
    pub fn base_photons(&self) -> usize {
        self.packet.as_ref().map(|p| p.n_photons).unwrap_or(1)
    }

    /// Single point without sweep expansion.
    pub fn single(&self) -> Result<Point, Failure> {
        let n = self.base_photons();
        Ok(Point {
            label: "run".into(),
            n_photons: n,
            m: None,
            spacing: None,
            g: None,
            k_in: self.packet.as_ref().map(|p| p.k_in).unwrap_or(PI / 2.0),
            coupling: self.model.coupling,
            oscillator: false,
            model: self.model.spec(n)?,
            packet: self.packet.clone(),
        })
    }

    /// Expands the sweep axes. Without a `[sweep]` table this is the single
    /// base point.
    pub fn points(&self) -> Result<Vec<Point>, Failure> {
        let Some(sw) = &self.sweep else {
            return Ok(vec![self.single()?]);
        };
        let mut out = Vec::new();
        let base_k = self.packet.as_ref().map(|p| p.k_in).unwrap_or(PI / 2.0);
        for coupling in axis(&sw.coupling) {
            for n in axis(&sw.n_photons) {
                for d in axis(&sw.spacing) {
                    for g in axis(&sw.g) {
                        for k in axis(&sw.k_in) {
                            let mut ms: Vec<(Option<usize>, bool)> =
                                axis(&sw.m).into_iter().map(|m| (m, false)).collect();
                            if sw.oscillator_reference {
                                ms.push((None, true));
                            }
                            for (m, osc) in ms {
                                out.push(self.point(sw, coupling, n, d, g, k.unwrap_or(base_k), m, osc)?);
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn point(
        &self,
        sw: &SweepSection,
        coupling: Option<CouplingMode>,
        n: Option<usize>,
        d: Option<i64>,
        g: Option<f64>,
        k_in: f64,
        m: Option<usize>,
        oscillator: bool,
    ) -> Result<Point, Failure> {
        let n_photons = n.unwrap_or_else(|| self.base_photons());
        let mut section = self.model.clone();
        if let Some(c) = coupling {
            section.coupling = c;
        }
        let mut scat = section.scatterers.clone();
        for s in &mut scat {
            if let Some(g) = g {
                s.g = g;
            }
            if let (Some(m), ScattererKind::Qubits { count, .. }) = (m, &mut s.kind) {
                *count = m;
            }
            if sw.fixed_collective {
                if let Some(c) = qubit_count(s) {
                    s.g /= (c as f64).sqrt();
                }
            }
        }
        if let Some(d) = d {
            scat = respace(&scat, d)?;
        }
        if oscillator {
            let levels = section
                .n_max
                .unwrap_or_else(|| default_n_max(section.coupling, n_photons));
            scat = scat
                .into_iter()
                .map(|s| ScattererSpec::oscillator(s.position, s.delta, s.effective_coupling(), levels))
                .collect();
        }
        section.scatterers = scat;
        let model = section.spec(n_photons)?;
        let packet = self.packet.clone().map(|mut p| {
            p.n_photons = n_photons;
            p.k_in = k_in;
            p
        });

        let mut label = Vec::new();
        if !sw.coupling.is_empty() {
            label.push(match section.coupling {
                CouplingMode::Rwa => "rwa".to_string(),
                CouplingMode::Full => "full".to_string(),
            });
        }
        if !sw.n_photons.is_empty() {
            label.push(format!("N{n_photons}"));
        }
        if oscillator {
            label.push("osc".into());
        } else if let Some(m) = m {
            label.push(format!("M{m}"));
        }
        if let Some(d) = d {
            label.push(format!("d{d}"));
        }
        if let Some(g) = g {
            label.push(format!("g{g}"));
        }
        if !sw.k_in.is_empty() {
            label.push(format!("k{k_in:.4}"));
        }
        if label.is_empty() {
            label.push("run".into());
        }
        Ok(Point {
            label: label.join("-"),
            n_photons,
            m,
            spacing: d,
            g,
            k_in,
            coupling: section.coupling,
            oscillator,
            model,
            packet,
        })
    }
}
