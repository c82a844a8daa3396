//! Steady-state boiler emulator, fault dataset generator and from-scratch
//! classifiers for boiler fault detection and diagnosis.

// `!(x > 0.0)` style checks reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bas;
pub mod calibration;
pub mod dataset;
pub mod emulator;
pub mod error;
pub mod experiments;
pub mod fault;
pub mod hx;
pub mod ml;
pub mod par;
pub mod seed;
pub mod thermo;

pub use error::{Error, Result};
