//! Column-wise comparison of two output directories.
//!
//! Every CSV file present in both directories is compared. Rows are matched
//! on their key columns (coordinates, momenta, times, labels), numeric
//! columns are compared against a tolerance. Differing headers are a schema
//! mismatch (exit 2); values out of tolerance fail the comparison (exit 1).
//! Rows present on one side only are reported, and fail the comparison with
//! `--all-rows`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use waveguide_mps::scattering::metrics::normalized_l1;

use crate::output::Session;
use crate::Failure;

const KEYS: &[&str] = &[
    "label",
    "k",
    "time",
    "x",
    "x1",
    "x2",
    "scatterer",
    "position",
    "step",
    "sweep",
    "i",
    "j",
];

#[derive(Serialize)]
struct ColumnRow {
    file: String,
    column: String,
    rows: usize,
    max_abs: f64,
    mean_abs: f64,
    tolerance: f64,
    pass: bool,
}

struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn read_table(path: &Path) -> Result<Table, Failure> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec?.iter().map(str::to_string).collect());
    }
    Ok(Table { headers, rows })
}

fn csv_files(root: &Path) -> Result<BTreeSet<PathBuf>, Failure> {
    let mut out = BTreeSet::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        let entries = std::fs::read_dir(&dir).map_err(|e| Failure::config(format!("{}: {e}", dir.display())))?;
        for e in entries {
            let p = e?.path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|x| x == "csv") {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    Ok(out)
}

fn parse_tolerances(items: &[String]) -> Result<BTreeMap<String, f64>, Failure> {
    items
        .iter()
        .map(|s| {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| Failure::config(format!("`{s}` is not COLUMN=TOL")))?;
            let v: f64 = v
                .parse()
                .map_err(|_| Failure::config(format!("`{v}` is not a tolerance")))?;
            Ok((k.to_string(), v))
        })
        .collect()
}

fn value(s: &str) -> Option<f64> {
    if s.is_empty() {
        None
    } else {
        s.parse().ok()
    }
}

struct Report {
    columns: Vec<ColumnRow>,
    unmatched: BTreeMap<String, usize>,
    intensity_l1: BTreeMap<String, f64>,
}

fn compare_file(name: &str, a: &Table, b: &Table, tol: f64, tols: &BTreeMap<String, f64>, rep: &mut Report) {
    let keys: Vec<usize> = (0..a.headers.len())
        .filter(|&i| KEYS.contains(&a.headers[i].as_str()))
        .collect();
    let key_of = |row: &Vec<String>, idx: usize| -> Vec<String> {
        if keys.is_empty() {
            vec![idx.to_string()]
        } else {
            keys.iter().map(|&i| row[i].clone()).collect()
        }
    };
    let index_b: BTreeMap<Vec<String>, &Vec<String>> =
        b.rows.iter().enumerate().map(|(i, r)| (key_of(r, i), r)).collect();
    let mut pairs = Vec::new();
    let mut matched = 0;
    for (i, ra) in a.rows.iter().enumerate() {
        if let Some(rb) = index_b.get(&key_of(ra, i)) {
            pairs.push((ra, *rb));
            matched += 1;
        }
    }
    let unmatched = a.rows.len() + b.rows.len() - 2 * matched;
    if unmatched > 0 {
        rep.unmatched.insert(name.to_string(), unmatched);
    }
    for c in 0..a.headers.len() {
        if keys.contains(&c) {
            continue;
        }
        let col = &a.headers[c];
        let limit = tols.get(col).copied().unwrap_or(tol);
        let mut max: f64 = 0.0;
        let mut sum = 0.0;
        let mut n = 0;
        for (ra, rb) in &pairs {
            let d = match (value(&ra[c]), value(&rb[c])) {
                (Some(x), Some(y)) if x.is_nan() && y.is_nan() => 0.0,
                (Some(x), Some(y)) => (x - y).abs(),
                (None, None) if ra[c] == rb[c] => 0.0,
                _ => f64::INFINITY,
            };
            max = if d.is_nan() { f64::INFINITY } else { max.max(d) };
            sum += d;
            n += 1;
        }
        rep.columns.push(ColumnRow {
            file: name.to_string(),
            column: col.clone(),
            rows: n,
            max_abs: max,
            mean_abs: if n > 0 { sum / n as f64 } else { 0.0 },
            tolerance: limit,
            pass: max <= limit,
        });
    }
    if name.ends_with("two_photon.csv") {
        if let Some(c) = a.headers.iter().position(|h| h == "intensity") {
            let ia: Vec<f64> = pairs.iter().map(|p| value(&p.0[c]).unwrap_or(0.0)).collect();
            let ib: Vec<f64> = pairs.iter().map(|p| value(&p.1[c]).unwrap_or(0.0)).collect();
            if let Ok(l1) = normalized_l1(&ia, &ib) {
                rep.intensity_l1.insert(name.to_string(), l1);
            }
        }
    }
}

pub fn run(a: &Path, b: &Path, out: &Path, tol: f64, column_tol: &[String], all_rows: bool) -> u8 {
    let mut s = match Session::create(out, "compare") {
        Ok(s) => s,
        Err(f) => {
            eprintln!("error ({}): {}", f.kind(), f.message);
            return f.code;
        }
    };
    s.set_config(&json!({ "a": a, "b": b, "tolerance": tol, "column_tolerances": column_tol, "all_rows": all_rows }));
    let r = compare(a, b, tol, column_tol, all_rows, &mut s);
    s.finish(r)
}

fn compare(
    a: &Path,
    b: &Path,
    tol: f64,
    column_tol: &[String],
    all_rows: bool,
    s: &mut Session,
) -> Result<(), Failure> {
    let tols = parse_tolerances(column_tol)?;
    let fa = csv_files(a)?;
    let fb = csv_files(b)?;
    let common: Vec<&PathBuf> = fa.intersection(&fb).collect();
    let only: Vec<String> = fa.symmetric_difference(&fb).map(|p| p.display().to_string()).collect();
    s.record("unpaired_files", &only);
    if common.is_empty() {
        return Err(Failure::config("the directories have no CSV file in common"));
    }
    let mut rep = Report {
        columns: Vec::new(),
        unmatched: BTreeMap::new(),
        intensity_l1: BTreeMap::new(),
    };
    let mut schema = Vec::new();
    for rel in &common {
        let name = rel.display().to_string();
        let ta = read_table(&a.join(rel))?;
        let tb = read_table(&b.join(rel))?;
        if ta.headers != tb.headers {
            schema.push(name);
            continue;
        }
        compare_file(&name, &ta, &tb, tol, &tols, &mut rep);
    }
    s.csv("comparison.csv", &rep.columns)?;
    let failed: Vec<String> = rep
        .columns
        .iter()
        .filter(|c| !c.pass)
        .map(|c| format!("{}:{}", c.file, c.column))
        .collect();
    let worst = rep.columns.iter().map(|c| c.max_abs).fold(0.0, f64::max);
    s.record("files_compared", common.len() - schema.len());
    s.record("max_abs_deviation", worst);
    s.record("failed_columns", &failed);
    s.record("unmatched_rows", &rep.unmatched);
    s.record("two_photon_l1", &rep.intensity_l1);
    s.record("schema_mismatch", &schema);
    println!(
        "compared {} files: max deviation {worst:.3e}, {} columns out of tolerance, {} files with unmatched rows",
        common.len() - schema.len(),
        failed.len(),
        rep.unmatched.len()
    );
    if !schema.is_empty() {
        return Err(Failure::config(format!("headers differ in {}", schema.join(", "))));
    }
    if !failed.is_empty() || (all_rows && !rep.unmatched.is_empty()) {
        return Err(Failure::numeric(format!(
            "{} columns out of tolerance, {} files with unmatched rows",
            failed.len(),
            rep.unmatched.len()
        )));
    }
    Ok(())
}
