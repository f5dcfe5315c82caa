//! Average-switch model of a grid-connected AC drive with cascaded PI control,
//! and two outer loops that adapt the reactive power set-point to keep the
//! grid converter clear of its current and modulation limits.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod af;
pub mod control;
pub mod dq;
pub mod error;
pub mod ofo;
pub mod oracle;
pub mod params;
pub mod plant;

pub use dq::DqVector;
pub use error::{Error, Result};
pub use params::{Limits, PlantParams, ReferenceDesign};
