//! Event-driven simulation of source updates, source deliveries, push
//! gossip and CTMC topology switches.
//!
//! [`run`] is the production engine: one competing-exponential loop whose
//! per-event cost is O(1). [`run_naive`] is a literal transcription of the
//! model with one exponential clock per directed edge and per source link;
//! it exists to cross-check [`run`]. [`spread_experiment`] measures the
//! first-passage time of a single packet planted at node 0.

mod fast;
mod naive;
mod network;
mod spread;

use serde::{Deserialize, Serialize};

use crate::ctmc::CtmcSpec;
use crate::{Error, Result};

pub use fast::{run, run_logged, run_on, Event, EventKind, SimState, Simulation};
pub use naive::{run_naive, run_naive_on, NAIVE_MAX_NODES};
pub use network::Network;
pub use spread::{
    expected_spread_time, spread_approximation, spread_experiment, spread_experiment_on, spread_stage_times,
    spread_time_variance, spread_variance_bound, SpreadOutcome,
};

/// Largest `n` for which event logs are emitted.
pub const EVENT_LOG_MAX_NODES: usize = 64;

/// Default cap on the spread time before the experiment aborts.
pub const DEFAULT_SPREAD_CAP: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    FullGossip,
    SpreadExperiment,
}

/// How the source's total delivery rate is split over nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceDelivery {
    /// Every node receives at rate `lambda_s / n`.
    #[default]
    UniformNode,
}

/// Complete description of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    /// Source self-update rate.
    pub lambda_e: f64,
    /// Total source-to-network delivery rate.
    pub lambda_s: f64,
    /// Total gossip rate of every non-isolated node.
    pub lambda: f64,
    pub ctmc: CtmcSpec,
    pub horizon: f64,
    pub burn_in: f64,
    pub seed: u64,
    pub mode: Mode,
    pub source_delivery: SourceDelivery,
    /// Abort the spread experiment if `T` exceeds this.
    pub spread_cap: f64,
}

impl SimConfig {
    /// Unit rates, horizon 2000 with 10% burn-in, seed 0.
    pub fn new(n: usize, ctmc: CtmcSpec) -> Self {
        SimConfig {
            n,
            lambda_e: 1.0,
            lambda_s: 1.0,
            lambda: 1.0,
            ctmc,
            horizon: 2000.0,
            burn_in: 200.0,
            seed: 0,
            mode: Mode::FullGossip,
            source_delivery: SourceDelivery::UniformNode,
            spread_cap: DEFAULT_SPREAD_CAP,
        }
    }

    pub fn with_rates(mut self, lambda_e: f64, lambda_s: f64, lambda: f64) -> Self {
        self.lambda_e = lambda_e;
        self.lambda_s = lambda_s;
        self.lambda = lambda;
        self
    }

    /// Sets the horizon and a burn-in of 10% of it.
    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self.burn_in = 0.1 * horizon;
        self
    }

    pub fn with_burn_in(mut self, burn_in: f64) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::config("n must be at least 1"));
        }
        for (name, v) in [
            ("lambda_e", self.lambda_e),
            ("lambda_s", self.lambda_s),
            ("lambda", self.lambda),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(format!("{name} must be a finite non-negative rate, got {v}")));
            }
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::config(format!("horizon must be positive, got {}", self.horizon)));
        }
        if !(self.burn_in >= 0.0 && self.burn_in < self.horizon) {
            return Err(Error::config(format!(
                "burn_in must satisfy 0 <= burn_in < horizon, got burn_in = {} and horizon = {}",
                self.burn_in, self.horizon
            )));
        }
        if self.spread_cap.is_nan() || self.spread_cap <= 0.0 {
            return Err(Error::config("spread_cap must be positive"));
        }
        self.ctmc.validate()
    }
}

/// Event tallies by category.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventCounts {
    pub source_updates: u64,
    pub deliveries: u64,
    pub gossip_pushes: u64,
    /// Pushes that advanced the receiver's version.
    pub gossip_accepted: u64,
    pub switches: u64,
}

/// Outcome of one full-gossip run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub n: usize,
    pub seed: u64,
    pub horizon: f64,
    pub burn_in: f64,
    /// Time-averaged version age of each node over `[burn_in, horizon]`.
    pub per_node_age: Vec<f64>,
    /// Mean of `per_node_age`.
    pub network_avg_age: f64,
    pub event_counts: EventCounts,
    /// Source version at the horizon.
    pub final_source_version: u64,
}

impl RunResult {
    pub(crate) fn from_per_node(cfg: &SimConfig, per_node_age: Vec<f64>, counts: EventCounts, n0: u64) -> Self {
        let network_avg_age = per_node_age.iter().sum::<f64>() / per_node_age.len() as f64;
        RunResult {
            n: cfg.n,
            seed: cfg.seed,
            horizon: cfg.horizon,
            burn_in: cfg.burn_in,
            per_node_age,
            network_avg_age,
            event_counts: counts,
            final_source_version: n0,
        }
    }
}
