use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

const SMALL: &str = r#"
schema = 1
name = "small"
t_out = 24.0

[model]
coupling = "rwa"
n_cav = 41

[[model.scatterers]]
kind = "qubits"
count = 1
position = 0
delta = 1.0
g = 0.3

[packet]
x_in = -8
theta = 2.0
k_in = 1.5707963267948966
n_photons = 1
"#;

fn wgmps(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_wgmps")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn setup(text: &str) -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, text).unwrap();
    (dir, cfg)
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn scatter_is_deterministic_and_matches_itself() {
    let (tmp, cfg) = setup(SMALL);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(wgmps(&["scatter", p(&cfg), "-o", p(&a)]).0, 0);
    assert_eq!(wgmps(&["scatter", p(&cfg), "-o", p(&b)]).0, 0);
    for name in [
        "spectrum.csv",
        "elastic.csv",
        "photons.csv",
        "populations.csv",
        "diagnostics.csv",
        "manifest.json",
    ] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
    let m = manifest(&a);
    assert_eq!(m["status"], "ok");
    assert!(m["files"].as_array().unwrap().iter().any(|f| f == "spectrum.csv"));
    assert!(m["results"]["violations"].as_array().unwrap().is_empty());

    let c = tmp.path().join("c");
    assert_eq!(
        wgmps(&["compare", p(&a), p(&b), "-o", p(&c), "--tol", "0", "--all-rows"]).0,
        0
    );
    assert_eq!(manifest(&c)["results"]["max_abs_deviation"], 0.0);
}

#[test]
fn oracle_agrees_with_the_engine() {
    let (tmp, cfg) = setup(SMALL);
    let a = tmp.path().join("mps");
    let o = tmp.path().join("exact");
    assert_eq!(wgmps(&["scatter", p(&cfg), "-o", p(&a)]).0, 0);
    assert_eq!(wgmps(&["oracle", p(&cfg), "-o", p(&o)]).0, 0);
    let c = tmp.path().join("c");
    let (code, err) = wgmps(&["compare", p(&a), p(&o), "-o", p(&c), "--tol", "2e-3"]);
    assert_eq!(code, 0, "{err}");
    // the time series has one row in common with the oracle's final populations
    assert!(
        manifest(&c)["results"]["unmatched_rows"]["populations.csv"]
            .as_u64()
            .unwrap()
            > 0
    );
    let (code, _) = wgmps(&["compare", p(&a), p(&o), "-o", p(&c), "--tol", "1e-12"]);
    assert_eq!(code, 1);
}

#[test]
fn malformed_config_exits_2_with_manifest() {
    let (tmp, cfg) = setup(&SMALL.replace("g = 0.3", "g = \"strong\""));
    let out = tmp.path().join("out");
    let (code, err) = wgmps(&["scatter", p(&cfg), "-o", p(&out)]);
    assert_eq!(code, 2, "{err}");
    let m = manifest(&out);
    assert_eq!(m["status"], "failed");
    assert_eq!(m["error"]["kind"], "config");

    let (code, _) = wgmps(&["scatter", p(&cfg), "-o", p(&out), "--set", "model.scatterers.0.g=0.3"]);
    assert_eq!(code, 0);

    let (code, err) = wgmps(&[
        "scatter",
        p(&cfg),
        "-o",
        p(&out),
        "--set",
        "model.n_cav=40",
        "--set",
        "model.scatterers.0.g=0.3",
    ]);
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("odd"), "{err}");
}

#[test]
fn overrides_reach_the_run() {
    let (tmp, cfg) = setup(SMALL);
    let out = tmp.path().join("out");
    let (code, err) = wgmps(&[
        "scatter",
        p(&cfg),
        "-o",
        p(&out),
        "--set",
        "engine.max_bond=8",
        "--set",
        "t_out=24.5",
        "--set",
        "name=\"renamed\"",
    ]);
    assert!(code == 0 || code == 1, "{err}");
    let m = manifest(&out);
    assert_eq!(m["config"]["engine"]["max_bond"], 8);
    assert_eq!(m["config"]["name"], "renamed");
    assert_eq!(m["results"]["t_out"], 24.5);
    assert!(m["results"]["diagnostics"]["max_bond"].as_u64().unwrap() <= 8);
}

#[test]
fn resource_abort_exits_3_and_keeps_diagnostics() {
    // one photon needs bond dimension 2 only; two need 3
    let (tmp, cfg) = setup(&SMALL.replace("n_photons = 1", "n_photons = 2"));
    let out = tmp.path().join("out");
    let (code, err) = wgmps(&[
        "scatter",
        p(&cfg),
        "-o",
        p(&out),
        "--set",
        "engine.max_bond=2",
        "--set",
        "engine.hard_cap=2",
    ]);
    assert_eq!(code, 3, "{err}");
    let m = manifest(&out);
    assert_eq!(m["status"], "aborted");
    assert_eq!(m["error"]["kind"], "resource");
    assert!(out.join("diagnostics.csv").exists());
}

#[test]
fn ground_state_checkpoint_round_trips() {
    let text = SMALL
        .replace("coupling = \"rwa\"", "coupling = \"full\"")
        .replace("n_cav = 41", "n_cav = 11")
        .replace("g = 0.3", "g = 0.5");
    let (tmp, cfg) = setup(&text);
    let out = tmp.path().join("gs");
    let (code, err) = wgmps(&["ground-state", p(&cfg), "-o", p(&out), "--checkpoint"]);
    assert_eq!(code, 0, "{err}");
    let m = manifest(&out);
    assert!(m["results"]["photons"].as_f64().unwrap() > 1e-3);
    let state = waveguide_mps::mps::read_checkpoint(fs::File::open(out.join("state.mps")).unwrap()).unwrap();
    assert_eq!(state.n_sites(), 11);
    let photons = fs::read_to_string(out.join("photons.csv")).unwrap();
    assert_eq!(photons.lines().count(), 12);
}

#[test]
fn oracle_refuses_nonlinear_multi_photon_models() {
    let (tmp, cfg) = setup(&SMALL.replace("n_photons = 1", "n_photons = 2"));
    let out = tmp.path().join("out");
    assert_eq!(wgmps(&["oracle", p(&cfg), "-o", p(&out)]).0, 2);
    assert_eq!(manifest(&out)["error"]["kind"], "config");
}

#[test]
fn figure_sweep_runs_at_reduced_size() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("fig2a");
    let (code, err) = wgmps(&[
        "figures",
        "fig2a",
        "-o",
        p(&out),
        "--set",
        "model.n_cav=41",
        "--set",
        "packet.x_in=-8",
        "--set",
        "model.scatterers.0.g=0.3",
        "--set",
        "t_out=24.0",
        "--set",
        "sweep.n_photons=[1, 2]",
    ]);
    assert!(code == 0 || code == 1, "{err}");
    let m = manifest(&out);
    assert_eq!(m["results"]["figure"], "fig2a");
    assert_eq!(m["results"]["points"], serde_json::json!(["N1", "N2"]));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    for label in ["N1", "N2"] {
        assert!(out.join(label).join("spectrum.csv").exists());
        assert_eq!(manifest(&out.join(label))["command"], "sweep-point");
    }
    assert_eq!(wgmps(&["figures", "fig9", "-o", p(&out)]).0, 2);
    assert_eq!(wgmps(&["figures", "list"]).0, 0);
}

#[test]
fn bundled_figures_parse() {
    for id in ["fig1c", "fig2a", "fig3", "fig4", "fig6"] {
        let tmp = tempfile::tempdir().unwrap();
        // an impossible override keeps the run from starting, after parsing
        let (code, err) = wgmps(&["figures", id, "-o", p(tmp.path()), "--set", "engine.dt=-1"]);
        assert_eq!(code, 2, "{id}: {err}");
        assert!(err.contains("dt"), "{id}: {err}");
    }
}
