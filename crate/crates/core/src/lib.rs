//! Deterministic RF baseband dataset synthesis and channel simulation.
//!
//! The pipeline mirrors a digital transmitter and a simulated channel:
//! random bits are mapped onto one of thirteen constellations
//! ([`constellations`]), RRC pulse shaped ([`waveform`]), and pushed through
//! carrier offset, Jakes Rayleigh fading and AWGN ([`channel`]). [`dataset`]
//! assembles labelled examples for four learning tasks and stores them in
//! the RFDS binary format; [`metrics`] provides classical reference
//! receivers and the scoring used to evaluate model predictions.

pub mod channel;
pub mod cli;
pub mod constellations;
pub mod dataset;
mod error;
pub mod metrics;
pub mod waveform;

pub use error::{Error, Result};
