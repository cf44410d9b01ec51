use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{group_velocity, ModelSpec};
use crate::C64;

/// Gaussian photon wavepacket `φ_x ∝ exp(-(x - x_in)²/(2θ²) + i k_in x)`,
/// normalized to `Σ|φ_x|² = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Wavepacket {
    pub x_in: i64,
    pub theta: f64,
    pub k_in: f64,
    pub n_photons: usize,
}

impl Wavepacket {
    pub fn new(x_in: i64, theta: f64, k_in: f64, n_photons: usize) -> Self {
        Wavepacket {
            x_in,
            theta,
            k_in,
            n_photons,
        }
    }

    /// Checks the packet parameters and that it sits more than `3θ` from the
    /// chain edges and from every scatterer.
    pub fn validate(&self, spec: &ModelSpec) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.k_in > 0.0 && self.k_in < PI) {
            return bad(format!("k_in = {} must lie in (0, π)", self.k_in));
        }
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return bad(format!("theta = {} must be positive", self.theta));
        }
        if self.n_photons == 0 {
            return bad("n_photons must be at least 1".into());
        }
        let l = spec.half_length();
        let reach = 3.0 * self.theta;
        let edge = (self.x_in + l).min(l - self.x_in) as f64;
        if edge <= reach {
            return bad(format!(
                "packet at x_in = {} with theta = {} does not fit: edge distance {edge} <= 3θ",
                self.x_in, self.theta
            ));
        }
        for s in &spec.scatterers {
            let d = (s.position - self.x_in).abs() as f64;
            if d <= reach {
                return bad(format!(
                    "packet at x_in = {} overlaps the scatterer at {} (distance {d} <= 3θ = {reach})",
                    self.x_in, s.position
                ));
            }
        }
        Ok(())
    }

    /// Normalized amplitudes on sites `0..n_cav` (coordinate `x = n - L`).
    pub fn amplitudes(&self, spec: &ModelSpec) -> Vec<C64> {
        let l = spec.half_length();
        let raw: Vec<C64> = (-l..=l)
            .map(|x| {
                let dx = (x - self.x_in) as f64;
                C64::from_polar((-dx * dx / (2.0 * self.theta * self.theta)).exp(), self.k_in * x as f64)
            })
            .collect();
        let n = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        raw.into_iter().map(|z| z / n).collect()
    }

    /// Default observation time: the carrier travels from `x_in` through the
    /// scatterers, then as far as it can while the fronts of both outgoing
    /// packets stay clear of the chain edges. The margin is three widths plus
    /// dispersive broadening: group-velocity spread away from `k = π/2`, and
    /// the Airy-like front that narrow packets develop near it.
    pub fn default_t_out(&self, spec: &ModelSpec) -> f64 {
        let l = spec.half_length();
        let lo = spec.scatterers.iter().map(|s| s.position).min().unwrap_or(0);
        let hi = spec.scatterers.iter().map(|s| s.position).max().unwrap_or(0);
        let room = (l - hi).min(lo + l) as f64;
        let travel = (lo - self.x_in).max(0) as f64 + (hi - lo) as f64 + room;
        let v = group_velocity(self.k_in, spec);
        // v'(k) and v''(k)/2 of the cosine band
        let dv = (2.0 * spec.hopping * self.k_in.cos()).abs();
        let curv = (spec.hopping * self.k_in.sin()).abs();
        let sigma_k = 1.0 / (self.theta * std::f64::consts::SQRT_2);
        let margin = |t: f64| {
            let airy = (curv * t).cbrt().min(curv * sigma_k * sigma_k * t);
            3.0 * (self.theta + dv * sigma_k * t + airy)
        };
        let (mut a, mut b) = (0.0, travel / v);
        for _ in 0..100 {
            let m = 0.5 * (a + b);
            if v * m + margin(m) <= travel {
                a = m;
            } else {
                b = m;
            }
        }
        a
    }
}
