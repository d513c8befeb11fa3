//! Emission and excitation rates for Unruh-deWitt detectors whose center of
//! mass delocalizes coherently, plus a harmonic hydrogen model in SI units.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod hydrogen;
pub mod quad;
pub mod rates;
pub mod templates;
pub mod units;
pub mod wavepackets;

pub use error::{Error, Result};
