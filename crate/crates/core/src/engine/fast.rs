use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use super::{EventCounts, Mode, Network, RunResult, SimConfig, EVENT_LOG_MAX_NODES};
use crate::{Error, Result};

/// What happened at an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    SourceUpdate,
    Delivery { node: usize },
    Gossip { from: usize, to: usize, accepted: bool },
    Switch { from: usize, to: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
}

/// Mutable state of a full-gossip run.
///
/// Versions are stored as counters (`N_0` for the source, `N_i` per node);
/// the age of node `i` is `N_0 - N_i` and is never materialised. Per-node
/// age integrals are kept lazily as `int N_0 - int N_i`, where `int N_i`
/// is only brought up to date when `N_i` changes.
#[derive(Debug, Clone)]
pub struct SimState {
    time: f64,
    burn_in: f64,
    topology: usize,
    source_version: u64,
    versions: Vec<u64>,
    version_sum: u64,
    /// sum_i int X_i dt over [burn_in, time].
    age_area: f64,
    /// int N_0 dt over [burn_in, time].
    source_area: f64,
    /// int N_i dt over [burn_in, last_touch[i]].
    node_area: Vec<f64>,
    last_touch: Vec<f64>,
    counts: EventCounts,
}

impl SimState {
    fn new(n: usize, topology: usize, burn_in: f64) -> Self {
        SimState {
            time: 0.0,
            burn_in,
            topology,
            source_version: 0,
            versions: vec![0; n],
            version_sum: 0,
            age_area: 0.0,
            source_area: 0.0,
            node_area: vec![0.0; n],
            last_touch: vec![0.0; n],
            counts: EventCounts::default(),
        }
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Index of the current CTMC state.
    pub fn topology(&self) -> usize {
        self.topology
    }

    pub fn source_version(&self) -> u64 {
        self.source_version
    }

    pub fn versions(&self) -> &[u64] {
        &self.versions
    }

    pub fn age(&self, node: usize) -> u64 {
        self.source_version - self.versions[node]
    }

    pub fn counts(&self) -> &EventCounts {
        &self.counts
    }

    /// Sum of all node ages integrated over the measured window so far.
    pub fn age_area(&self) -> f64 {
        self.age_area
    }

    fn clip(&self, t: f64) -> f64 {
        t.max(self.burn_in)
    }

    fn advance(&mut self, to: f64) {
        let dt = self.clip(to) - self.clip(self.time);
        if dt > 0.0 {
            let n = self.versions.len() as u64;
            let total_age = n * self.source_version - self.version_sum;
            self.age_area += total_age as f64 * dt;
            self.source_area += self.source_version as f64 * dt;
        }
        self.time = to;
    }

    fn flush(&mut self, node: usize) {
        let dt = self.clip(self.time) - self.clip(self.last_touch[node]);
        if dt > 0.0 {
            self.node_area[node] += self.versions[node] as f64 * dt;
        }
        self.last_touch[node] = self.time;
    }

    fn set_version(&mut self, node: usize, version: u64) {
        self.flush(node);
        self.version_sum += version - self.versions[node];
        self.versions[node] = version;
    }
}

/// A single full-gossip run, advanced one event at a time.
///
/// All clocks are merged into one exponential race of total rate
/// `lambda_e + lambda_s + lambda * |active nodes| + q_k`; the category is
/// chosen proportionally to its rate and the actor uniformly within it.
/// Since every non-isolated node gossips at the same total rate, a uniform
/// active node followed by a rate-weighted neighbor reproduces the per-edge
/// clocks exactly.
pub struct Simulation<'a> {
    cfg: &'a SimConfig,
    net: &'a Network,
    rng: ChaCha8Rng,
    state: SimState,
    finished: bool,
}

impl<'a> Simulation<'a> {
    pub fn new(cfg: &'a SimConfig, net: &'a Network) -> Result<Self> {
        cfg.validate()?;
        if net.n() != cfg.n || net.num_states() != cfg.ctmc.num_states() {
            return Err(Error::config("network was built for a different configuration"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let topology = net.chain().sample_stationary(net.stationary(), &mut rng);
        Ok(Simulation {
            cfg,
            net,
            rng,
            state: SimState::new(cfg.n, topology, cfg.burn_in),
            finished: false,
        })
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    /// Processes the next event, or returns `None` once the horizon is reached.
    pub fn step(&mut self) -> Option<Event> {
        if self.finished {
            return None;
        }
        let k = self.state.topology;
        let active = self.net.active_nodes(k);
        let rate_update = self.cfg.lambda_e;
        let rate_deliver = self.cfg.lambda_s;
        let rate_gossip = self.cfg.lambda * active.len() as f64;
        let rate_switch = self.net.chain().leave_rate(k);
        let total = rate_update + rate_deliver + rate_gossip + rate_switch;

        let next = if total > 0.0 {
            let e: f64 = self.rng.sample(Exp1);
            self.state.time + e / total
        } else {
            f64::INFINITY
        };
        if next >= self.cfg.horizon {
            self.state.advance(self.cfg.horizon);
            self.finished = true;
            return None;
        }
        self.state.advance(next);

        let u = self.rng.random::<f64>() * total;
        let kind = match pick_category(u, [rate_update, rate_deliver, rate_gossip, rate_switch]) {
            0 => {
                self.state.source_version += 1;
                self.state.counts.source_updates += 1;
                EventKind::SourceUpdate
            }
            1 => {
                let node = self.rng.random_range(0..self.cfg.n);
                let v = self.state.source_version;
                self.state.set_version(node, v);
                self.state.counts.deliveries += 1;
                EventKind::Delivery { node }
            }
            2 => {
                let from = active[self.rng.random_range(0..active.len())];
                let slot = self.net.rates(k).pick_slot(from, self.rng.random());
                let to = self.net.graph(k).neighbors(from)[slot];
                let (vf, vt) = (self.state.versions[from], self.state.versions[to]);
                let accepted = vf > vt;
                if accepted {
                    self.state.set_version(to, vf);
                    self.state.counts.gossip_accepted += 1;
                }
                self.state.counts.gossip_pushes += 1;
                EventKind::Gossip { from, to, accepted }
            }
            _ => {
                let to = self.net.chain().next_state(k, self.rng.random());
                self.state.topology = to;
                self.state.counts.switches += 1;
                EventKind::Switch { from: k, to }
            }
        };
        Some(Event { time: next, kind })
    }

    /// Runs to the horizon and returns the time-averaged ages.
    pub fn finish(mut self) -> RunResult {
        while self.step().is_some() {}
        self.into_result()
    }

    fn into_result(mut self) -> RunResult {
        let window = self.cfg.horizon - self.cfg.burn_in;
        for i in 0..self.cfg.n {
            self.state.flush(i);
        }
        let per_node = self
            .state
            .node_area
            .iter()
            .map(|a| (self.state.source_area - a) / window)
            .collect();
        RunResult::from_per_node(self.cfg, per_node, self.state.counts, self.state.source_version)
    }
}

/// Index of the category whose cumulative-rate interval contains `u`;
/// rounding spill past the end falls to the last category with positive rate.
pub(crate) fn pick_category<const N: usize>(mut u: f64, rates: [f64; N]) -> usize {
    let mut last = 0;
    for (i, r) in rates.iter().enumerate() {
        if *r <= 0.0 {
            continue;
        }
        if u < *r {
            return i;
        }
        u -= r;
        last = i;
    }
    last
}

fn require_full_gossip(cfg: &SimConfig) -> Result<()> {
    if cfg.mode != Mode::FullGossip {
        return Err(Error::config("run requires mode full_gossip"));
    }
    Ok(())
}

/// Simulates `[0, horizon]` and returns time-averaged ages over `[burn_in, horizon]`.
pub fn run(cfg: &SimConfig) -> Result<RunResult> {
    require_full_gossip(cfg)?;
    let net = Network::build(cfg)?;
    run_on(cfg, &net)
}

/// Like [`run`], reusing a prebuilt [`Network`] for `cfg.n`.
pub fn run_on(cfg: &SimConfig, net: &Network) -> Result<RunResult> {
    require_full_gossip(cfg)?;
    Ok(Simulation::new(cfg, net)?.finish())
}

/// Like [`run`], also writing every event as CSV `t,event_kind,actor,target`.
/// Only allowed for `n <= 64`.
pub fn run_logged<W: Write>(cfg: &SimConfig, out: &mut W) -> Result<RunResult> {
    require_full_gossip(cfg)?;
    if cfg.n > EVENT_LOG_MAX_NODES {
        return Err(Error::config(format!(
            "event logs are limited to n <= {EVENT_LOG_MAX_NODES}, got n = {}",
            cfg.n
        )));
    }
    let net = Network::build(cfg)?;
    let mut sim = Simulation::new(cfg, &net)?;
    let io = |source| Error::Io {
        path: "event log".into(),
        source,
    };
    writeln!(out, "t,event_kind,actor,target").map_err(io)?;
    while let Some(ev) = sim.step() {
        let line = match ev.kind {
            EventKind::SourceUpdate => format!("{},source_update,source,", ev.time),
            EventKind::Delivery { node } => format!("{},delivery,source,{node}", ev.time),
            EventKind::Gossip { from, to, .. } => format!("{},gossip,{from},{to}", ev.time),
            EventKind::Switch { from, to } => format!("{},switch,{from},{to}", ev.time),
        };
        writeln!(out, "{line}").map_err(io)?;
    }
    Ok(sim.into_result())
}
