//! Two-media laser threshold magnetometry toolkit.
//!
//! An NV-doped diamond sits inside the cavity of a MECSEL as a
//! spin-state-dependent absorber at 1042 nm. Resonant microwave driving
//! moves population into the absorbing lower singlet state, shifting the
//! laser threshold; reading the magnetic resonance out through the laser
//! output turns it into optical contrast of up to 100 %.
//!
//! The crate covers the full chain:
//!
//! * [`params`] / [`config`] — parameter sets, validation, config files
//! * [`steady`] — coupled NV + MECSEL + cavity steady state
//! * [`laser`] — pump sweeps, thresholds, slope efficiencies
//! * [`odmr`] — spectrum synthesis and multi-Lorentzian fitting
//! * [`sensitivity`] — photon-shot-noise-limited sensitivity and dynamic range
//! * [`calibration`] — staged parameter recovery from measured curves
//! * [`io`] — CSV/JSON formats shared with the command-line tool

pub mod calibration;
pub mod config;
pub mod constants;
pub mod error;
pub mod io;
pub mod laser;
pub mod numeric;
pub mod odmr;
pub mod params;
pub mod sensitivity;
pub mod steady;

pub use error::{Error, Result};
pub use params::ModelParams;
