// SPDX-License-Identifier: Apache-2.0

//! Simulation of flux qubits coupled through a driven cavity mode.
//!
//! The drive phases of the individual qubits tune a cavity-mediated
//! `σ^x σ^x` interaction. The crate builds the rotated-frame Hamiltonians,
//! integrates open-system dynamics and reproduces the Bell and GHZ
//! state-preparation experiments.
//!
//! Modules, bottom-up:
//! - [`linalg`]: dense complex matrices, Kronecker products, exponentials.
//! - [`space`], [`state`]: tensor layout, single-site operators, density matrices.
//! - [`model`]: Hamiltonians, couplings, gate unitaries, targets.
//! - [`dynamics`]: Lindblad and unitary propagation, fidelity.
//! - [`scenarios`]: the experiments behind the `fluxqed` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod model;
pub mod scenarios;
pub mod space;
pub mod state;

pub use error::{QsimError, Result};
pub use linalg::{kron, matexp, ComplexMatrix, Ket, C64};
pub use space::{embed, HilbertSpace, Site};
pub use state::QuantumState;
