//! Ruin-probability driven sharing of unlicensed spectrum between LTE-U and WiFi.
//!
//! The pipeline has four stages:
//!
//! - [`ruin`]: finite-time ruin probability of the WiFi duty-cycle surplus
//!   process, exact (log-space series) and Monte Carlo.
//! - [`duty`]: ruin probability to LTE-U duty cycle per channel, plus an
//!   empirical check of the original WiFi chance constraint.
//! - [`alloc`]: SNR utilities and water-filling of the LTE-U duty cycle
//!   across cellular users.
//! - [`sim`]: frame-level simulator comparing pure WiFi, equal sharing,
//!   LTE-dominant and ruin-fair schemes.
//!
//! [`experiment`] drives parameter sweeps and writes CSV plus a run manifest.

pub mod alloc;
pub mod duty;
pub mod error;
pub mod experiment;
pub mod rng;
pub mod ruin;
pub mod sim;

pub use error::{Error, Result};
