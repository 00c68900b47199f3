//! Version-age-of-information simulation for push-gossip networks whose
//! topology switches among a finite set of graphs according to a
//! continuous-time Markov chain.
//!
//! The crate is organised bottom-up:
//!
//! * [`topology`] builds the graphs and per-neighbor gossip rates.
//! * [`rate`] parses the `n`-dependent rate expressions used for CTMC leave rates.
//! * [`ctmc`] holds the switching chain: generator, stationary law, return-time
//!   moments and trajectory sampling.
//! * [`engine`] runs the event-driven simulation (plus a literal per-edge
//!   oracle engine and the spread-time experiment).
//! * [`metrics`] aggregates replicates and fits scaling laws.
//! * [`experiments`] encodes the scenario presets and sweep driver.
//! * [`config`] reads the JSON configuration file used by the CLI.

pub mod config;
pub mod ctmc;
pub mod engine;
mod error;
pub mod experiments;
pub mod metrics;
pub mod rate;
pub mod topology;

pub use error::{Error, Result};

/// Version tag written as the first line of every CSV the crate emits.
pub const CSV_VERSION_HEADER: &str = "# gossip-age-sim v1";
