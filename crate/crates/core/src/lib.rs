//! Compilation of commuting Pauli fragments into Clifford + rotation
//! circuits, and grouped qDRIFT simulation.

pub mod circuit;
pub mod dense;
pub mod diag;
pub mod error;
pub mod grouping;
pub mod hamiltonian;
pub mod models;
pub mod pauli;
pub mod phase;
pub mod qdrift;
pub mod structured;
pub mod synth;
pub mod tableau;
pub mod templates;

pub use circuit::{Circuit, CostReport, Gate};
pub use error::{HfError, Result};
pub use hamiltonian::{parse_hamiltonian, Fragment, Hamiltonian, Term};
pub use pauli::{parse_pauli, PauliString, Phase};

/// Library version.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
