//! Kadanoff sand pile model KSPM(D).
//!
//! Configurations are stored as height differences `σ_i = h_i - h_{i+1}`.
//! Firing column `i` (allowed when `σ_i >= D`) moves `D - 1` grains from
//! column `i` onto the `D - 1` columns to its right, which in difference
//! coordinates reads:
//!
//! ```text
//! σ_{i-1}   += D - 1   (i > 0)
//! σ_i       -= D
//! σ_{i+D-1} += 1
//! ```
//!
//! The crate is split into:
//!
//! * [`config`]: configurations and the transition rule,
//! * [`strategies`]: leftmost and randomized stabilization, the iterative
//!   single-grain process and its avalanches,
//! * [`pseudolocal`]: interval detection, peak prediction and the
//!   pseudo-local reconstruction of the right part of an avalanche,
//! * [`analysis`]: exact rational algebra for D = 3 (shot vectors, the
//!   `u`-vector recurrence, Jordan data, the projection law, growth laws).
//!
//! Independent work items (verification sweeps, random configurations) are
//! fanned out with rayon when the `parallel` feature is enabled; see [`par`].

pub mod analysis;
pub mod config;
pub mod error;
pub mod par;
pub mod pseudolocal;
pub mod strategies;

pub use config::{Configuration, Parameters, MASS_CAP};
pub use error::{Error, Result};
pub use strategies::{Avalanche, Process, RunTrace, ShotVector, StepRecord, Strategy};
