//! Second-order Suzuki-Trotter evolution (TEBD).
//!
//! One step is `E(dt/2) O(dt) E(dt/2)` where `E` and `O` are the products of
//! gates on even and odd bonds. On-site terms are split between the two bonds
//! touching a site (half each, whole at the chain ends). Between consecutive
//! steps the two even half-layers are fused into one full layer, which is the
//! same operator since even gates commute among themselves.
//!
//! Even layers sweep left to right, odd layers right to left, so the
//! orthogonality center only travels one site between gates.

use serde::{Deserialize, Serialize};

use super::{MpsState, Sweep};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::HamiltonianTerms;
use crate::tensor::{DenseTensor, SvdTruncation};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeMode {
    /// Gates `exp(-i h dt)`.
    Real,
    /// Gates `exp(-h dt)`.
    Imaginary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// One gate layer of the fused step sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layer {
    pub parity: Parity,
    /// `true` for a `dt/2` layer.
    pub half: bool,
    /// Step this layer is accounted to.
    pub step: usize,
}

/// Fused layer sequence for `steps` second-order steps.
pub fn layer_sequence(steps: usize) -> Vec<Layer> {
    let mut out = Vec::with_capacity(2 * steps + 1);
    if steps == 0 {
        return out;
    }
    out.push(Layer {
        parity: Parity::Even,
        half: true,
        step: 0,
    });
    for step in 0..steps {
        out.push(Layer {
            parity: Parity::Odd,
            half: false,
            step,
        });
        out.push(Layer {
            parity: Parity::Even,
            half: step + 1 == steps,
            step,
        });
    }
    out
}

#[derive(Clone, Debug)]
pub struct TrotterPlan {
    pub dt: f64,
    pub mode: TimeMode,
    local_dims: Vec<usize>,
    /// Bond Hamiltonians with the on-site terms folded in.
    bond_h: Vec<DenseTensor>,
    half_gates: Vec<DenseTensor>,
    full_gates: Vec<DenseTensor>,
}

impl TrotterPlan {
    pub fn new(terms: &HamiltonianTerms, dt: f64, mode: TimeMode) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::arg(format!("time step {dt} must be positive")));
        }
        let bond_h = bond_hamiltonians(terms)?;
        let mut plan = TrotterPlan {
            dt,
            mode,
            local_dims: terms.layout.dims.clone(),
            bond_h,
            half_gates: Vec::new(),
            full_gates: Vec::new(),
        };
        plan.rebuild()?;
        Ok(plan)
    }

    fn rebuild(&mut self) -> Result<()> {
        let gate = |h: &DenseTensor, tau: f64| -> Result<DenseTensor> {
            let n = h.shape()[0];
            let factor = match self.mode {
                TimeMode::Real => C64::new(0.0, -tau),
                TimeMode::Imaginary => C64::new(-tau, 0.0),
            };
            DenseTensor::matrix(n, n, linalg::expm_hermitian(h.data(), n, factor)?)
        };
        self.half_gates = self
            .bond_h
            .iter()
            .map(|h| gate(h, self.dt / 2.0))
            .collect::<Result<_>>()?;
        self.full_gates = self.bond_h.iter().map(|h| gate(h, self.dt)).collect::<Result<_>>()?;
        Ok(())
    }

    /// Same plan with a different step.
    pub fn with_dt(&self, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::arg(format!("time step {dt} must be positive")));
        }
        let mut p = self.clone();
        p.dt = dt;
        p.rebuild()?;
        Ok(p)
    }

    pub fn order(&self) -> usize {
        2
    }

    pub fn n_bonds(&self) -> usize {
        self.bond_h.len()
    }

    pub fn local_dims(&self) -> &[usize] {
        &self.local_dims
    }

    /// Bond Hamiltonian including its share of the on-site terms.
    pub fn bond_hamiltonian(&self, bond: usize) -> &DenseTensor {
        &self.bond_h[bond]
    }

    pub fn bond_hamiltonians(&self) -> &[DenseTensor] {
        &self.bond_h
    }

    pub fn gate(&self, bond: usize, half: bool) -> &DenseTensor {
        if half {
            &self.half_gates[bond]
        } else {
            &self.full_gates[bond]
        }
    }

    /// Bonds of one parity in application order.
    pub fn bonds(&self, parity: Parity) -> Vec<usize> {
        let all = 0..self.n_bonds();
        match parity {
            Parity::Even => all.filter(|b| b % 2 == 0).collect(),
            Parity::Odd => all.filter(|b| b % 2 == 1).rev().collect(),
        }
    }
}

/// `h_b = bonds[b] + w_l h_b ⊗ 1 + w_r 1 ⊗ h_{b+1}` with `w = ½` for interior
/// sites and `1` at the chain ends.
pub fn bond_hamiltonians(terms: &HamiltonianTerms) -> Result<Vec<DenseTensor>> {
    let n = terms.onsite.len();
    if n < 2 {
        return Err(Error::arg("need at least two sites"));
    }
    let weight = |site: usize| if site == 0 || site == n - 1 { 1.0 } else { 0.5 };
    let dims = &terms.layout.dims;
    (0..n - 1)
        .map(|b| {
            let left = terms.onsite[b]
                .scale(C64::new(weight(b), 0.0))
                .kron(&DenseTensor::identity(dims[b + 1]))?;
            let right =
                DenseTensor::identity(dims[b]).kron(&terms.onsite[b + 1].scale(C64::new(weight(b + 1), 0.0)))?;
            terms.bonds[b].add(&left)?.add(&right)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    pub trunc: SvdTruncation,
    /// Fold the norm into `log_norm` after every gate (imaginary time).
    pub renormalize: bool,
    /// Abort when truncation to the tolerance would need a larger bond.
    pub hard_cap: usize,
}

impl EvolveOptions {
    pub fn new(trunc: SvdTruncation, renormalize: bool) -> Self {
        EvolveOptions {
            trunc,
            renormalize,
            hard_cap: 256,
        }
    }
}

/// Per-step truncation and norm record. Accumulates across calls.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub steps: usize,
    /// Largest single-gate discarded weight in each step.
    pub max_discarded: Vec<f64>,
    /// Sum of all discarded weights.
    pub total_discarded: f64,
    /// Network norm after each step (real time) or `log_norm` increment per
    /// step (imaginary time).
    pub norm_trace: Vec<f64>,
    pub max_bond: usize,
    pub max_requested_rank: usize,
    pub aborted: Option<String>,
}

impl Diagnostics {
    pub fn merge(&mut self, other: &Diagnostics) {
        self.steps += other.steps;
        self.max_discarded.extend_from_slice(&other.max_discarded);
        self.total_discarded += other.total_discarded;
        self.norm_trace.extend_from_slice(&other.norm_trace);
        self.max_bond = self.max_bond.max(other.max_bond);
        self.max_requested_rank = self.max_requested_rank.max(other.max_requested_rank);
        if other.aborted.is_some() {
            self.aborted = other.aborted.clone();
        }
    }
}

/// Runs `steps` second-order steps. Diagnostics are appended to `diag` as the
/// run progresses, so they survive an abort.
pub fn evolve(
    state: &mut MpsState,
    plan: &TrotterPlan,
    steps: usize,
    opts: &EvolveOptions,
    diag: &mut Diagnostics,
) -> Result<()> {
    if state.local_dims() != plan.local_dims() {
        return Err(Error::dim("plan built for different local dimensions"));
    }
    opts.trunc.validate()?;
    if steps == 0 {
        return Ok(());
    }
    let start = diag.max_discarded.len();
    diag.max_discarded.extend(std::iter::repeat_n(0.0, steps));
    let mut log_before = state.log_norm();
    for (idx, layer) in layer_sequence(steps).into_iter().enumerate() {
        let dir = match layer.parity {
            Parity::Even => Sweep::Right,
            Parity::Odd => Sweep::Left,
        };
        for bond in plan.bonds(layer.parity) {
            let gate = plan.gate(bond, layer.half);
            let rep = state.apply_gate_directed(bond, gate.data(), &opts.trunc, dir, opts.renormalize)?;
            let slot = &mut diag.max_discarded[start + layer.step];
            *slot = slot.max(rep.discarded);
            diag.total_discarded += rep.discarded;
            diag.max_requested_rank = diag.max_requested_rank.max(rep.requested_rank);
            diag.max_bond = diag.max_bond.max(rep.kept_rank);
            if rep.requested_rank > opts.hard_cap {
                let msg = format!(
                    "bond {bond} needs rank {} at step {} (hard cap {})",
                    rep.requested_rank,
                    diag.steps + 1,
                    opts.hard_cap
                );
                diag.aborted = Some(msg.clone());
                diag.max_discarded.truncate(start + layer.step + 1);
                return Err(Error::Resource(msg));
            }
        }
        // every even layer but the opening half closes a step
        let step_done = idx > 0 && layer.parity == Parity::Even;
        if step_done {
            diag.steps += 1;
            if opts.renormalize {
                diag.norm_trace.push(state.log_norm() - log_before);
                log_before = state.log_norm();
            } else {
                diag.norm_trace.push(state.network_norm());
            }
        }
    }
    Ok(())
}
