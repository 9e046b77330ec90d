//! Drone detection and bearing estimation for a rotating event camera.
//!
//! The pipeline slices an event stream into windows, accumulates each window
//! into a multi-slice signed representation, detects the target, and turns
//! the detection into an azimuth/elevation bearing in the platform frame
//! using the spin angle recovered from trigger pulses. A simulator produces
//! event streams with exact ground truth so every stage can be scored.

// `!(x >= y)` is used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod detection;
pub mod error;
pub mod event;
pub mod geometry;
pub mod harness;
pub mod io;
pub mod metrics;
pub mod representation;
pub mod sim;

pub use error::{Error, Result};
pub use event::{Event, EventStream, Polarity, SensorConfig, Timestamp};
