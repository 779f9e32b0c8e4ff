//! Jamming-aided covert communication with multiple receivers: covertness metrics,
//! power and rate allocation for quasi-static and fast-varying channels, and a
//! Monte-Carlo model of the adversary's detector.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod covertness;
pub mod detection;
pub mod error;
pub mod experiment;
pub mod fast_varying;
pub mod numerics;
pub mod quasi_static;
pub mod scenario;

pub use error::{CovertError, Result};
