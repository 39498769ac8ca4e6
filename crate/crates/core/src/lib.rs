//! Lumped-parameter model, frequency-domain analysis and force-control simulation
//! of a magnetorheological-clutch + hydrostatic-transmission actuation line.
//!
//! * [`params`] physical parameters, config files, derived hardware quantities
//! * [`tf`] polynomial / rational algebra and the exact line transfer functions
//! * [`analysis`] Bode tables, bandwidth, margins, root locus, stable-gain limits
//! * [`sim`] time-domain plant, controller strategies, metrics, FRF estimation

// `!(x > 0.0)` style checks are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod params;
pub mod sim;
pub mod tf;

pub use error::{Error, Result};
