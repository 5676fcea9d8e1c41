//! Gait synthesis for a planar biped from a Matsuoka coupled neural
//! oscillator, with harmony search (and a GA baseline) tuning the
//! oscillator and network parameters against a kinematic walking rollout.
//!
//! The crate is organised bottom-up:
//!
//! - [`oscillator`]: the two-neuron Matsuoka pair, its integrator and
//!   period/phase analysis.
//! - [`controller`]: the linear joint network, ankle derivation, joint
//!   limits and hip-angle feedback.
//! - [`optimize`]: bounded-vector harmony search, GA and random search,
//!   the 10-element gait genome and benchmark objectives.
//! - [`simulator`]: the walking episode, fall detection and fitness.
//! - [`experiments`]: configuration, run artifacts and the comparison
//!   protocol used by the `cpg-gait` command line tool.

pub mod controller;
pub mod error;
pub mod experiments;
pub mod optimize;
pub mod oscillator;
pub mod simulator;

pub use error::{Error, Result};
