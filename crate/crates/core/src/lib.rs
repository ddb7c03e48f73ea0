//! Mode-coupling models of qubits embedded in chains of coupled 3D cavities.
//!
//! * [`modechain`] builds the frequency matrices of cavity chains with
//!   embedded qubits, diagonalises them and computes the mode-mediated
//!   exchange coupling between two qubits.
//! * [`netoracle`] is an independent lumped-element circuit model of the same
//!   structures, with port impedance, admittance and transmission spectra.
//! * [`specx`] extracts resonances, branches, minimum gaps, two-level fits and
//!   black-box Kerr coefficients from spectra.
//! * [`calib`] fits the coupler law γ(d) = α·d⁴ and converts field strengths
//!   to single-photon fields.
//! * [`crossval`] wires the circuit oracle through the extraction layer to
//!   reproduce model-level quantities.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calib;
pub mod crossval;
pub mod modechain;
pub mod netoracle;
pub(crate) mod numeric;
pub mod specx;
pub mod units;

pub use units::Frequency;

/// Library version.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
