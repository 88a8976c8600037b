//! Analytical model, proportional-fair optimizer, LQI controller and
//! slot-level simulator for saturated 802.11e EDCA over error-prone channels.
//!
//! The crate is `no_std` (with `alloc`); all IO lives in the companion
//! CLI crate. Internal units are microseconds and bits throughout.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analytics;
pub mod config;
pub mod dare;
pub mod fixed_point;
pub mod lqi;
pub mod math;
pub mod matrix;
pub mod optimizer;
pub mod sim;

pub use analytics::{airtimes, average_delay, slot_probabilities, throughput, Airtimes};
pub use config::{AcClass, AttemptVector, ConfigError, NetworkConfig, ProtocolTimings, SlotProbabilities};
pub use dare::{solve_dare, DareError};
pub use fixed_point::{cwmin_from_tau, tau_from_cwmin, FixedPointError};
pub use lqi::{jacobian, lqi_gain, ControllerState, LinearModel, LqiError};
pub use matrix::Matrix;
pub use optimizer::{kkt_residual, solve, utility, OperatingPoint, SolveError};
pub use sim::{estimate_pfail, Plant, SimError, SimResult, WindowMeasurement};
