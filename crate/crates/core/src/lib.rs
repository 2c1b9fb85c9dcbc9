//! Simulation and verification of Bell measurements built from passive
//! linear optics and photon counting.
//!
//! States are creation-operator polynomials on the vacuum ([`fock`]), mixed
//! by unitary mode networks ([`network`]) and read out by photon-number
//! detection ([`measurement`]). [`bell`] classifies outcomes for the four
//! Bell inputs, [`nogo`] checks each step of the argument that no such
//! device identifies all four with certainty, and [`search`] looks for the
//! best achievable unambiguous success fraction.

// Negated float comparisons are deliberate: they reject NaN along with
// out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bell;
pub mod cli;
pub mod error;
pub mod fock;
pub mod matrix;
pub mod measurement;
pub mod network;
pub mod nogo;
pub mod sampling;
pub mod search;

pub use error::{Error, Result};
pub use num_complex::Complex64;
