//! First-passage spread of a single packet planted at node 0.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use super::fast::pick_category;
use super::{Mode, Network, SimConfig};
use crate::{Error, Result};

/// Result of one spread trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpreadOutcome {
    /// First time every node holds the packet.
    pub spread_time: f64,
    /// Source self-updates in `[0, spread_time]`.
    pub source_count: u64,
    pub events: u64,
}

/// Plants a packet at node 0 at time 0 with source deliveries disabled and
/// lets gossip (under CTMC switching) carry it until every node is informed.
pub fn spread_experiment(cfg: &SimConfig) -> Result<SpreadOutcome> {
    let net = Network::build(cfg)?;
    spread_experiment_on(cfg, &net)
}

pub fn spread_experiment_on(cfg: &SimConfig, net: &Network) -> Result<SpreadOutcome> {
    cfg.validate()?;
    if cfg.mode != Mode::SpreadExperiment {
        return Err(Error::config("spread_experiment requires mode spread_experiment"));
    }
    if net.n() != cfg.n {
        return Err(Error::config("network was built for a different configuration"));
    }
    let n = cfg.n;
    if n > 1 && (!net.union_connected() || cfg.lambda <= 0.0) {
        return Err(Error::config(
            "no state (nor their union) connects every node, so the packet can never reach all of them",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let chain = net.chain();
    let mut state = chain.sample_stationary(net.stationary(), &mut rng);
    let mut informed = vec![false; n];
    informed[0] = true;
    let mut informed_count = 1;
    let mut t = 0.0;
    let mut source_count = 0;
    let mut events = 0;

    while informed_count < n {
        let active = net.active_nodes(state);
        let rate_gossip = cfg.lambda * active.len() as f64;
        let rate_switch = chain.leave_rate(state);
        let total = cfg.lambda_e + rate_gossip + rate_switch;
        let e: f64 = rng.sample(Exp1);
        t += e / total;
        if t > cfg.spread_cap {
            return Err(Error::Guard(format!(
                "spread time exceeded cap {} with {informed_count} of {n} nodes informed",
                cfg.spread_cap
            )));
        }
        events += 1;
        let u = rng.random::<f64>() * total;
        match pick_category(u, [cfg.lambda_e, rate_gossip, rate_switch]) {
            0 => source_count += 1,
            1 => {
                let from = active[rng.random_range(0..active.len())];
                if informed[from] {
                    let slot = net.rates(state).pick_slot(from, rng.random());
                    let to = net.graph(state).neighbors(from)[slot];
                    if !informed[to] {
                        informed[to] = true;
                        informed_count += 1;
                    }
                }
            }
            _ => state = chain.next_state(state, rng.random()),
        }
    }
    Ok(SpreadOutcome {
        spread_time: t,
        source_count,
        events,
    })
}

/// Samples the complete-graph spread time directly as a sum of independent
/// stage times, stage `k` being exponential with rate `k (n - k) lambda / (n - 1)`.
pub fn spread_stage_times<R: Rng + ?Sized>(n: usize, lambda: f64, rng: &mut R, trials: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::config("stage sums need n >= 2"));
    }
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::config("lambda must be positive"));
    }
    let stage_rates: Vec<f64> = (1..n)
        .map(|k| (k * (n - k)) as f64 * lambda / (n - 1) as f64)
        .collect();
    Ok((0..trials)
        .map(|_| {
            stage_rates
                .iter()
                .map(|r| {
                    let e: f64 = rng.sample(Exp1);
                    e / r
                })
                .sum()
        })
        .collect())
}

/// `E[S_n] = ((n-1)/lambda) sum_{k=1}^{n-1} 1/(k(n-k))` for the complete graph.
pub fn expected_spread_time(n: usize, lambda: f64) -> f64 {
    let nf = n as f64;
    (1..n).map(|k| 1.0 / (k as f64 * (nf - k as f64))).sum::<f64>() * (nf - 1.0) / lambda
}

/// Exact `Var[S_n]` for the complete graph.
pub fn spread_time_variance(n: usize, lambda: f64) -> f64 {
    let nf = n as f64;
    (1..n)
        .map(|k| {
            let r = k as f64 * (nf - k as f64) * lambda / (nf - 1.0);
            1.0 / (r * r)
        })
        .sum()
}

/// `2(n-1)/(n lambda) (ln n + gamma)`, the harmonic-number approximation of [`expected_spread_time`].
pub fn spread_approximation(n: usize, lambda: f64) -> f64 {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    let nf = n as f64;
    2.0 * (nf - 1.0) / (nf * lambda) * (nf.ln() + EULER_GAMMA)
}

/// Upper bound `4 pi^2 / (3 lambda^2)` on `Var[S_n]`, uniform in `n`.
pub fn spread_variance_bound(lambda: f64) -> f64 {
    4.0 * std::f64::consts::PI.powi(2) / (3.0 * lambda * lambda)
}
