//! Heisenberg-picture Pauli propagation for quantum circuits with arbitrary
//! single-qubit noise.
//!
//! The crate is organised bottom-up:
//!
//! * [`pauli`] – bit-packed Pauli strings, sparse real Pauli sums and product states.
//! * [`channels`] – single-qubit channels in normal form, contraction coefficients
//!   and effective depolarizing rates.
//! * [`circuit`] – layered circuits with interleaved noise, lattices and the
//!   HVA / Trotterized TFIM builders.
//! * [`propagation`] – the path-weight truncated backpropagation estimator.
//! * [`montecarlo`] – path sampling estimates of ensemble second moments.
//! * [`oracle`] – dense Pauli-vector reference simulation at small `n`.
//! * [`schema`] – JSON formats shared by the CLI and the Python bindings.

pub mod channels;
pub mod circuit;
pub mod dense;
pub mod error;
pub mod montecarlo;
pub mod oracle;
pub mod pauli;
pub mod propagation;
pub mod schema;

pub use channels::{ChannelClass, ContractionModel, Design, NormalFormChannel, SingleQubitPtm};
pub use circuit::{
    build_hva, build_trotter_tfim, sample_circuit, truncate_to_last_layers, Angle, AngleLaw,
    Circuit, CliffordGate, CliffordLaw, EnsembleSpec, Gate, Lattice, Layer, NoiseModel,
    NoisePlacement, PauliRotation,
};
pub use error::{Error, Result};
pub use montecarlo::{estimate, EstimateResult, Functional};
pub use oracle::{heisenberg_exact, simulate_exact};
pub use pauli::{Pauli, PauliString, PauliSum, ProductState};
pub use propagation::{backpropagate, expectation, BackpropResult, TruncationConfig};
