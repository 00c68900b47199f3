//! Scenario presets and the parallel sweep driver.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ctmc::CtmcSpec;
use crate::engine::{self, Mode, Network, SimConfig, SpreadOutcome};
use crate::metrics::{aggregate, Metric, SweepRow, SweepTable};
pub use crate::rate::{parse_rate_expr, RateExpr};
use crate::topology::TopologySpec;
use crate::{Error, Result};

pub const PRESET_IDS: [&str; 4] = ["fig3", "fig4", "fig5", "thm1"];

pub const DEFAULT_HORIZON: f64 = 2000.0;
pub const DEFAULT_REPLICATES: usize = 20;

/// One leave-rate class of a preset, applied to every CTMC state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateVariant {
    pub label: String,
    pub rate: RateExpr,
}

/// Everything needed to reproduce one figure-style sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioPreset {
    pub id: String,
    pub description: String,
    pub n_list: Vec<usize>,
    pub lambda_e: f64,
    pub lambda_s: f64,
    pub lambda: f64,
    pub states: Vec<TopologySpec>,
    pub transition_probs: Vec<Vec<f64>>,
    pub variants: Vec<RateVariant>,
    pub replicates: usize,
    pub horizon: f64,
    pub burn_in: f64,
}

impl ScenarioPreset {
    pub fn ctmc(&self, variant: &RateVariant) -> CtmcSpec {
        CtmcSpec {
            states: self.states.clone(),
            leave_rates: vec![variant.rate.clone(); self.states.len()],
            transition_probs: self.transition_probs.clone(),
        }
    }

    pub fn variant(&self, label: &str) -> Option<&RateVariant> {
        self.variants.iter().find(|v| v.label == label)
    }

    /// Keeps only the named variants.
    pub fn restrict_variants(&mut self, labels: &[&str]) -> Result<()> {
        for l in labels {
            if self.variant(l).is_none() {
                return Err(Error::config(format!("preset {} has no rate class {l:?}", self.id)));
            }
        }
        self.variants.retain(|v| labels.contains(&v.label.as_str()));
        Ok(())
    }

    pub fn set_horizon(&mut self, horizon: f64) {
        self.horizon = horizon;
        self.burn_in = 0.1 * horizon;
    }

    /// Checks every variant's chain at every `n` in the list.
    pub fn validate(&self) -> Result<()> {
        for v in &self.variants {
            let spec = self.ctmc(v);
            for &n in &self.n_list {
                spec.at(n)?;
            }
        }
        Ok(())
    }

    fn sweep(&self) -> Sweep {
        let base = SimConfig::new(self.n_list.first().copied().unwrap_or(1), CtmcSpec::single(TopologySpec::Complete))
            .with_rates(self.lambda_e, self.lambda_s, self.lambda)
            .with_horizon(self.horizon)
            .with_burn_in(self.burn_in);
        Sweep {
            scenario: self.id.clone(),
            base,
            variants: self
                .variants
                .iter()
                .map(|v| (v.label.clone(), self.ctmc(v)))
                .collect(),
            n_list: self.n_list.clone(),
            replicates: self.replicates,
        }
    }
}

fn rate(text: &str) -> RateExpr {
    parse_rate_expr(text).expect("built-in rate expression")
}

fn variants(list: &[(&str, &str)]) -> Vec<RateVariant> {
    list.iter()
        .map(|(label, expr)| RateVariant {
            label: label.to_string(),
            rate: rate(expr),
        })
        .collect()
}

/// Squares of the even integers whose square lies in `[lo, hi]`.
fn even_squares(lo: usize, hi: usize) -> Vec<usize> {
    (1..)
        .map(|k| 2 * k)
        .map(|m: usize| m * m)
        .skip_while(|&s| s < lo)
        .take_while(|&s| s <= hi)
        .collect()
}

fn swap2() -> Vec<Vec<f64>> {
    vec![vec![0.0, 1.0], vec![1.0, 0.0]]
}

/// Looks up a built-in preset by id.
pub fn preset(id: &str) -> Result<ScenarioPreset> {
    let base = |id: &str, description: &str, n_list, states, transition_probs, variants| ScenarioPreset {
        id: id.to_string(),
        description: description.to_string(),
        n_list,
        lambda_e: 1.0,
        lambda_s: 1.0,
        lambda: 1.0,
        states,
        transition_probs,
        variants,
        replicates: DEFAULT_REPLICATES,
        horizon: DEFAULT_HORIZON,
        burn_in: 0.1 * DEFAULT_HORIZON,
    };
    let p = match id {
        "fig3" => base(
            "fig3",
            "ring <-> grid (torus), leave rates sqrt(n) or n^(1/3)",
            even_squares(100, 1024),
            vec![TopologySpec::Ring, TopologySpec::grid()],
            swap2(),
            variants(&[("sqrt", "sqrt(n)"), ("cbrt", "n^(1/3)")]),
        ),
        "fig4" => base(
            "fig4",
            "ring <-> complete, leave rates n, sqrt(n) or log(n)",
            (200..=1000).step_by(200).collect(),
            vec![TopologySpec::Ring, TopologySpec::Complete],
            swap2(),
            variants(&[("linear", "n"), ("sqrt", "sqrt(n)"), ("log", "log(n)")]),
        ),
        "fig5" => {
            let spec = CtmcSpec::cycle(
                vec![
                    TopologySpec::Complete,
                    TopologySpec::Ring,
                    TopologySpec::grid(),
                    TopologySpec::Disconnected,
                ],
                RateExpr::constant(1.0),
            );
            base(
                "fig5",
                "4-cycle complete - ring - grid - disconnected, jump to either neighbor w.p. 1/2",
                even_squares(100, 1024),
                spec.states,
                spec.transition_probs,
                variants(&[("linear", "n"), ("sqrt", "sqrt(n)"), ("cbrt", "n^(1/3)"), ("log", "log(n)")]),
            )
        }
        "thm1" => base(
            "thm1",
            "ring <-> complete with constant leave rate 1",
            vec![128, 256, 512, 1024],
            vec![TopologySpec::Ring, TopologySpec::Complete],
            swap2(),
            variants(&[("const", "1")]),
        ),
        other => {
            return Err(Error::config(format!(
                "unknown preset {other:?}; expected one of {PRESET_IDS:?}"
            )))
        }
    };
    Ok(p)
}

/// A grid of full-gossip runs: every variant at every `n`, `replicates` times.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub scenario: String,
    /// Rates, horizon and burn-in shared by all runs; `n`, `ctmc` and `seed` are replaced per run.
    pub base: SimConfig,
    pub variants: Vec<(String, CtmcSpec)>,
    pub n_list: Vec<usize>,
    pub replicates: usize,
}

fn fnv1a(bytes: &[u8], mut h: u64) -> u64 {
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-run seed: `base ^ hash(scenario, rate_class, n, replicate)`.
pub fn derive_seed(base: u64, scenario: &str, rate_class: &str, n: usize, replicate: usize) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325;
    h = fnv1a(scenario.as_bytes(), h);
    h = fnv1a(&[0xff], h);
    h = fnv1a(rate_class.as_bytes(), h);
    h = fnv1a(&[0xff], h);
    h = fnv1a(&(n as u64).to_le_bytes(), h);
    h = fnv1a(&(replicate as u64).to_le_bytes(), h);
    base ^ splitmix64(h)
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))
}

impl Sweep {
    pub fn run_count(&self) -> usize {
        self.variants.len() * self.n_list.len() * self.replicates
    }

    /// Runs every `(variant, n, replicate)` on a pool of `jobs` workers.
    /// The table depends only on `seed`, not on `jobs`.
    pub fn run(&self, seed: u64, jobs: usize) -> Result<SweepTable> {
        if self.replicates == 0 || self.n_list.is_empty() || self.variants.is_empty() {
            return Err(Error::config("sweep needs at least one variant, n and replicate"));
        }
        let pool = pool(jobs)?;
        let mut rows = Vec::with_capacity(self.run_count());
        for &n in &self.n_list {
            let configs: Vec<(String, SimConfig)> = self
                .variants
                .iter()
                .map(|(label, ctmc)| {
                    let mut cfg = self.base.clone();
                    cfg.n = n;
                    cfg.ctmc = ctmc.clone();
                    cfg.mode = Mode::FullGossip;
                    (label.clone(), cfg)
                })
                .collect();
            let networks = configs
                .iter()
                .map(|(_, cfg)| Network::build(cfg))
                .collect::<Result<Vec<_>>>()?;
            let tasks: Vec<(usize, usize)> = (0..configs.len())
                .flat_map(|v| (0..self.replicates).map(move |r| (v, r)))
                .collect();
            let chunk: Vec<SweepRow> = pool.install(|| {
                tasks
                    .par_iter()
                    .map(|&(v, r)| {
                        let (label, cfg) = &configs[v];
                        let cfg = cfg.clone().with_seed(derive_seed(seed, &self.scenario, label, n, r));
                        let res = engine::run_on(&cfg, &networks[v])?;
                        Ok(SweepRow {
                            scenario: self.scenario.clone(),
                            n,
                            rate_class: label.clone(),
                            replicate: r,
                            metric: Metric::NetworkAvgAge,
                            value: res.network_avg_age,
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })?;
            rows.extend(chunk);
        }
        aggregate(rows)
    }
}

/// Runs every variant / `n` / replicate of a preset.
pub fn run_preset(preset: &ScenarioPreset, seed: u64, jobs: usize) -> Result<SweepTable> {
    preset.validate()?;
    preset.sweep().run(seed, jobs)
}

/// Runs `trials` independent spread experiments for `cfg`, trial `i`
/// seeded with `derive_seed(cfg.seed, "spread", "", n, i)`.
pub fn run_spread_trials(cfg: &SimConfig, trials: usize, jobs: usize) -> Result<Vec<SpreadOutcome>> {
    let mut cfg = cfg.clone();
    cfg.mode = Mode::SpreadExperiment;
    let net = Network::build(&cfg)?;
    let pool = pool(jobs)?;
    pool.install(|| {
        (0..trials)
            .into_par_iter()
            .map(|i| {
                let c = cfg.clone().with_seed(derive_seed(cfg.seed, "spread", "", cfg.n, i));
                engine::spread_experiment_on(&c, &net)
            })
            .collect()
    })
}
