//! Literal per-clock transcription of the model, used as an oracle for
//! the fast engine. Ages are stored directly (not as version counters) and
//! every source link and directed edge owns its own exponential clock.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use super::{EventCounts, Mode, Network, RunResult, SimConfig};
use crate::{Error, Result};

/// Largest `n` accepted by [`run_naive`].
pub const NAIVE_MAX_NODES: usize = 64;

#[derive(Debug, Clone, Copy)]
enum Clock {
    SourceUpdate,
    SourceLink(usize),
    Edge { from: usize, to: usize },
    Switch,
}

struct Clocks {
    kinds: Vec<Clock>,
    rates: Vec<f64>,
    next: Vec<f64>,
}

impl Clocks {
    fn push<R: Rng>(&mut self, kind: Clock, rate: f64, now: f64, rng: &mut R) {
        self.kinds.push(kind);
        self.rates.push(rate);
        self.next.push(draw(now, rate, rng));
    }

    fn earliest(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, &t) in self.next.iter().enumerate() {
            if t.is_finite() && best.is_none_or(|b| t < self.next[b]) {
                best = Some(i);
            }
        }
        best
    }
}

fn draw<R: Rng>(now: f64, rate: f64, rng: &mut R) -> f64 {
    if rate > 0.0 {
        let e: f64 = rng.sample(Exp1);
        now + e / rate
    } else {
        f64::INFINITY
    }
}

/// Same model as [`super::run`], simulated with independent clocks.
pub fn run_naive(cfg: &SimConfig) -> Result<RunResult> {
    if cfg.n > NAIVE_MAX_NODES {
        return Err(Error::config(format!(
            "naive engine is limited to n <= {NAIVE_MAX_NODES}, got n = {}",
            cfg.n
        )));
    }
    let net = Network::build(cfg)?;
    run_naive_on(cfg, &net)
}

pub fn run_naive_on(cfg: &SimConfig, net: &Network) -> Result<RunResult> {
    cfg.validate()?;
    if cfg.mode != Mode::FullGossip {
        return Err(Error::config("run_naive requires mode full_gossip"));
    }
    if cfg.n > NAIVE_MAX_NODES {
        return Err(Error::config(format!("naive engine is limited to n <= {NAIVE_MAX_NODES}")));
    }
    let n = cfg.n;
    // Distinct stream from the fast engine for the same seed.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x6e61_6976_6500_0000);
    let chain = net.chain();
    let mut state = chain.sample_stationary(net.stationary(), &mut rng);

    let mut clocks = Clocks {
        kinds: Vec::new(),
        rates: Vec::new(),
        next: Vec::new(),
    };
    clocks.push(Clock::SourceUpdate, cfg.lambda_e, 0.0, &mut rng);
    for j in 0..n {
        clocks.push(Clock::SourceLink(j), cfg.lambda_s / n as f64, 0.0, &mut rng);
    }
    clocks.push(Clock::Switch, chain.leave_rate(state), 0.0, &mut rng);
    let fixed = clocks.kinds.len();
    let add_edges = |clocks: &mut Clocks, state: usize, now: f64, rng: &mut ChaCha8Rng| {
        clocks.kinds.truncate(fixed);
        clocks.rates.truncate(fixed);
        clocks.next.truncate(fixed);
        let g = net.graph(state);
        let rates = net.rates(state);
        for from in 0..n {
            for (slot, &to) in g.neighbors(from).iter().enumerate() {
                clocks.push(Clock::Edge { from, to }, rates.rate(from, slot), now, rng);
            }
        }
    };
    add_edges(&mut clocks, state, 0.0, &mut rng);

    let mut ages = vec![0u64; n];
    let mut area = vec![0.0f64; n];
    let mut source_version = 0u64;
    let mut counts = EventCounts::default();
    let mut now = 0.0f64;

    loop {
        let next_idx = clocks.earliest();
        let t_next = next_idx.map_or(f64::INFINITY, |i| clocks.next[i]);
        let until = t_next.min(cfg.horizon);
        let dt = until.max(cfg.burn_in) - now.max(cfg.burn_in);
        if dt > 0.0 {
            for (a, &x) in area.iter_mut().zip(&ages) {
                *a += x as f64 * dt;
            }
        }
        now = until;
        let Some(idx) = next_idx.filter(|_| t_next < cfg.horizon) else {
            break;
        };
        match clocks.kinds[idx] {
            Clock::SourceUpdate => {
                source_version += 1;
                for x in ages.iter_mut() {
                    *x += 1;
                }
                counts.source_updates += 1;
            }
            Clock::SourceLink(j) => {
                ages[j] = 0;
                counts.deliveries += 1;
            }
            Clock::Edge { from, to } => {
                counts.gossip_pushes += 1;
                if ages[from] < ages[to] {
                    ages[to] = ages[from];
                    counts.gossip_accepted += 1;
                }
            }
            Clock::Switch => {
                state = chain.next_state(state, rng.random());
                counts.switches += 1;
                clocks.rates[idx] = chain.leave_rate(state);
                add_edges(&mut clocks, state, now, &mut rng);
            }
        }
        clocks.next[idx] = draw(now, clocks.rates[idx], &mut rng);
    }

    let window = cfg.horizon - cfg.burn_in;
    let per_node = area.iter().map(|a| a / window).collect();
    Ok(RunResult::from_per_node(cfg, per_node, counts, source_version))
}
