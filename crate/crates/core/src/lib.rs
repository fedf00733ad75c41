//! Forward simulation of ac-Stark spatial phase modulation of a stored
//! spin-wave, and the inverse pipeline that recovers imposed phases,
//! decoherence and readout phase stability from simulated camera data.
//!
//! Lengths are in µm unless a name says otherwise (`_mm`, `_nm`).

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod field;
pub mod fit;
pub mod fringe;
pub mod memory;
pub mod optics;
pub mod scenario;
pub mod ssm;

pub use error::{Result, SsmError};
