//! Scalar summaries of spectra and two-photon maps.

use super::{ElasticBin, SpectrumBin};
use crate::error::{Error, Result};

/// Largest reflection over defined bins, with its momentum.
pub fn r_max(spectrum: &[SpectrumBin]) -> Option<(f64, f64)> {
    spectrum
        .iter()
        .filter_map(|b| b.reflection.map(|r| (b.k, r)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
}

/// Reflection in the defined bin closest to `k`.
pub fn reflection_near(spectrum: &[SpectrumBin], k: f64) -> Option<f64> {
    spectrum
        .iter()
        .filter(|b| b.reflection.is_some())
        .min_by(|a, b| (a.k - k).abs().total_cmp(&(b.k - k).abs()))
        .and_then(|b| b.reflection)
}

/// Largest inelastic weight `T₂` and its momentum.
pub fn inelastic_peak(elastic: &[ElasticBin]) -> Option<(f64, f64)> {
    elastic.iter().map(|b| (b.k, b.t2)).max_by(|a, b| a.1.total_cmp(&b.1))
}

/// `Σ |p_a − p_b|` after scaling both maps to unit sum.
pub fn normalized_l1(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::dim("maps differ in size"));
    }
    let (sa, sb) = (a.iter().sum::<f64>(), b.iter().sum::<f64>());
    if !(sa > 0.0 && sb > 0.0) {
        return Err(Error::arg("cannot normalize an empty map"));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x / sa - y / sb).abs()).sum())
}

/// Restricts a row-major map over `coords` to `x₁, x₂ < below`, i.e. both
/// photons on the incoming side of the scatterers.
pub fn reflected_quadrant(map: &[f64], coords: &[i64], below: i64) -> (Vec<i64>, Vec<f64>) {
    let n = coords.len();
    let keep: Vec<usize> = (0..n).filter(|&i| coords[i] < below).collect();
    let mut out = Vec::with_capacity(keep.len() * keep.len());
    for &i in &keep {
        for &j in &keep {
            out.push(map[i * n + j]);
        }
    }
    (keep.iter().map(|&i| coords[i]).collect(), out)
}

/// Largest diagonal value over the largest value of a square map.
pub fn diagonal_ratio(map: &[f64]) -> Option<f64> {
    let n = (map.len() as f64).sqrt().round() as usize;
    if n == 0 || n * n != map.len() {
        return None;
    }
    let peak = map.iter().cloned().fold(0.0, f64::max);
    if peak <= 0.0 {
        return None;
    }
    let diag = (0..n).map(|i| map[i * n + i]).fold(0.0, f64::max);
    Some(diag / peak)
}

/// `max |a − b| / max |b|`.
pub fn peak_deviation(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::dim("maps differ in size"));
    }
    let peak = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if peak <= 0.0 {
        return Err(Error::arg("reference map is zero"));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / peak)
}

/// Time at which a trace peaks.
pub fn peak_time(times: &[f64], values: &[f64]) -> Option<f64> {
    times
        .iter()
        .zip(values)
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(t, _)| *t)
}
