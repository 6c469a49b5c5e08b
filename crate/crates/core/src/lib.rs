//! Simulation of cavity-free nondestructive single-photon detection with a
//! pumped three-wave-mixing medium.
//!
//! The single-mode model propagates a (probe, auxiliary, signal) density
//! matrix through a lossy medium ([`dynamics`]), displaces the transmitted
//! probe and scores the detector ([`detection`]), and renders Wigner
//! functions of the reduced states ([`tomography`]). The [`multimode`]
//! module integrates the real-space wave-packet equations for a single
//! probe photon and a single signal photon.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod detection;
pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod linalg;
pub mod multimode;
pub mod tomography;

pub use error::{Error, Result};
pub use linalg::C64;
