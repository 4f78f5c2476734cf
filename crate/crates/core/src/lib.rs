//! Simulation of a water-air optical wireless link whose beam is deflected by
//! surface waves and re-centered by a MEMS-mirror tracking loop.
//!
//! The pipeline per control tick is
//! [`wave`] (surface slope) -> [`optics`] (refraction and feedback geometry)
//! -> [`detector`] (capture fraction, PD-array reading) -> [`tracker`]
//! (controller and mirror), and per packet [`link`] (SNR, BER, loss).
//! [`harness`] composes these into trials and sweeps.

pub mod detector;
pub mod error;
pub mod harness;
pub mod link;
pub mod optics;
pub mod rng;
pub mod tracker;
pub mod wave;

pub use error::{Error, Result};
