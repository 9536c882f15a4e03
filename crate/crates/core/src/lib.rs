//! Unambiguous discrimination of quantum operations.
//!
//! The crate builds optimal unambiguous-discrimination (UD) measurements for
//! sets of quantum operations, decides whether a set of non-unitary channels
//! can be discriminated from a given pure probe, compiles channels and POVMs
//! into two-layer (or deeper) ancilla-assisted binary-tree circuits, and
//! simulates the whole prepare / operate / measure pipeline under cavity and
//! ancilla decoherence.
//!
//! Modules, bottom up:
//!
//! * [`hilbert`]: truncated Fock-space states, coherent states, displacements.
//! * [`channels`]: Kraus channels, block-dephasing / block-Pauli families,
//!   amplitude damping and qubit decoherence.
//! * [`discrimination`]: reciprocal states, symmetric UD bound, support
//!   feasibility, probe search, Born-rule reports.
//! * [`dilation`]: binary-tree compilation of channels and POVMs.
//! * [`metrics`]: distance between reports, state fidelity, chi matrices
//!   and process fidelity.
//! * [`noisesim`]: exact and shot-sampled simulation under a device model.
//! * [`experiments`]: the displacement, block-dephasing and block-Pauli
//!   discrimination tasks, ready to run.
//! * [`cli`]: configuration files and the `udsim` command implementations.
//!
//! See `examples/` for one runnable program per capability.

pub mod channels;
pub mod cli;
pub mod dilation;
pub mod discrimination;
pub mod error;
pub mod experiments;
pub mod hilbert;
pub mod linalg;
pub mod metrics;
pub mod noisesim;
pub mod serial;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, C64};
