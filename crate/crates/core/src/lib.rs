//! Magnetic-gradient noise budgets for Stern–Gerlach matter-wave interferometers.
//!
//! A levitated diamagnetic particle carrying an embedded spin is split into two
//! arms by a wire-generated field gradient and recombined after one trap period.
//! Fluctuations of that gradient dephase the arms and jitter their classical
//! paths. This crate computes:
//!
//! * the interferometer's derived quantities and closed-loop trajectories ([`physics`]),
//! * white, flicker and tabulated gradient-noise spectra ([`spectra`]),
//! * the harmonic-oscillator transfer functions that weight those spectra ([`transfer`]),
//! * dephasing rates, coherence and noise-amplitude bounds ([`dephasing`]),
//! * sampled noise paths, trajectory deviations and interferometric contrast ([`stochastic`]),
//! * parameter sweeps and log-log fits over the above ([`sweeps`]).
//!
//! All quantities are SI; angular frequency (rad s⁻¹) is the frequency variable
//! everywhere except where a name says otherwise.

pub mod dephasing;
pub mod error;
pub mod physics;
pub mod quadrature;
pub mod reproduce;
pub mod spectra;
pub mod stochastic;
pub mod sweeps;
pub mod transfer;

pub use error::{Error, Result};
