//! Matrix-product-state simulation of few-photon scattering in a discretized
//! waveguide (a tight-binding chain of cavities) coupled to qubits, qubit
//! groups and harmonic resonators.
//!
//! Layers, bottom up:
//! - [`tensor`]: dense complex tensors, contraction and truncated SVD;
//! - [`model`]: lattice layout and Hamiltonian terms;
//! - [`mps`]: MPS states, TEBD evolution and transfer-matrix observables;
//! - [`scattering`]: ground states, wavepackets, spectra and two-photon maps;
//! - [`oracle`]: exact references (quadratic diagonalization, stationary
//!   single-excitation scattering, dense state vectors).

pub mod error;
pub mod linalg;
pub mod model;
pub mod mps;
pub mod oracle;
pub mod par;
pub mod scattering;
pub mod tensor;

pub use num_complex::Complex64 as C64;

pub use error::{Error, Result};
pub use model::{CouplingMode, ModelSpec, ScattererKind, ScattererSpec};
pub use mps::{LocalOperator, MpsState};
pub use tensor::{DenseTensor, SvdTruncation};
