//! Analytics and simulation for sum-frequency-generation (SFG) based
//! nonlinear Bell state measurement of time-bin qubits.
//!
//! The crate is organised bottom-up:
//!
//! * [`qubits`]: time-bin qubit algebra, Bell decomposition, 2x2 density matrices.
//! * [`sources`]: SPDC pair statistics and the coherent/Fock Alice source.
//! * [`cavity`]: coupled-mode model of the triply resonant chi(2) microring.
//! * [`bsm`]: SFG heralding, coincidence fringes and the complete Bell analyzer.
//! * [`protocols`]: closed-form fidelities and rates for teleportation and swapping.
//! * [`tomography`]: bin-count mapping, Stokes inversion, maximum-likelihood
//!   reconstruction and fidelity error propagation.
//! * [`montecarlo`]: event-level sampler and exact enumerator used as the
//!   independent check on every closed form.

pub mod bsm;
pub mod cavity;
pub mod error;
pub mod montecarlo;
pub mod protocols;
pub mod qubits;
pub mod sources;
pub mod tomography;

pub use error::{Error, Result};
