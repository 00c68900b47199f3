//! Fast engine against the per-clock naive engine and small closed forms.

use gossip_age_core::ctmc::CtmcSpec;
use gossip_age_core::engine::{self, Mode, Network, SimConfig};
use gossip_age_core::metrics::stats;
use gossip_age_core::rate::RateExpr;
use gossip_age_core::topology::TopologySpec;

fn mean_ages(cfg: &SimConfig, seeds: u64, naive: bool) -> Vec<f64> {
    let net = Network::build(cfg).unwrap();
    (0..seeds)
        .map(|s| {
            let c = cfg.clone().with_seed(1000 + s);
            let r = if naive {
                engine::run_naive_on(&c, &net)
            } else {
                engine::run_on(&c, &net)
            };
            r.unwrap().network_avg_age
        })
        .collect()
}

fn assert_engines_agree(cfg: &SimConfig) {
    let fast = mean_ages(cfg, 400, false);
    let naive = mean_ages(cfg, 400, true);
    let (a, b) = (stats::ci95(&fast), stats::ci95(&naive));
    assert!(stats::intervals_overlap(a, b), "fast {a:?} vs naive {b:?}");
}

#[test]
fn path_with_switching_to_complete() {
    let spec = CtmcSpec::alternating(
        TopologySpec::custom(vec![[0, 1], [1, 2], [2, 3]]),
        TopologySpec::Complete,
        RateExpr::constant(0.7),
    );
    assert_engines_agree(&SimConfig::new(4, spec).with_horizon(120.0));
}

#[test]
fn weighted_star_and_disconnected() {
    let star = TopologySpec::Custom {
        edges: vec![[0, 1], [0, 2], [0, 3], [0, 4]],
        weights: Some(vec![1.0, 2.0, 3.0, 4.0]),
        path: None,
    };
    let spec = CtmcSpec::alternating(star, TopologySpec::Disconnected, RateExpr::constant(2.0));
    let cfg = SimConfig::new(5, spec).with_rates(1.5, 0.5, 2.0).with_horizon(120.0);
    assert_engines_agree(&cfg);
}

#[test]
fn two_node_complete_matches_closed_form() {
    let cfg = SimConfig::new(2, CtmcSpec::single(TopologySpec::Complete)).with_horizon(2000.0);
    let closed = two_node_mean_age(cfg.lambda_e, cfg.lambda_s, cfg.lambda);
    for naive in [false, true] {
        let m = stats::mean(&mean_ages(&cfg, 40, naive));
        assert!((m - closed).abs() / closed < 0.02, "naive={naive}: {m} vs {closed}");
    }
}

/// Mean version age of one node of a two-node complete graph, from the
/// set recursion: the pair {1, 2} hears the source at rate ls, so its age
/// is le / ls; node 1 alone hears the source at ls / 2 and node 2 at l.
fn two_node_mean_age(le: f64, ls: f64, l: f64) -> f64 {
    let pair = le / ls;
    (le + l * pair) / (ls / 2.0 + l)
}

#[test]
fn lone_node_age_renewal() {
    let cfg = SimConfig::new(1, CtmcSpec::single(TopologySpec::Complete))
        .with_rates(2.0, 0.5, 1.0)
        .with_horizon(40_000.0)
        .with_burn_in(100.0);
    let fast = engine::run(&cfg).unwrap().network_avg_age;
    let naive = engine::run_naive(&cfg).unwrap().network_avg_age;
    for x in [fast, naive] {
        assert!((x - 4.0).abs() / 4.0 < 0.05, "{x}");
    }
}

#[test]
fn identical_seed_identical_result() {
    let spec = CtmcSpec::alternating(TopologySpec::Ring, TopologySpec::grid(), RateExpr::constant(3.0));
    let cfg = SimConfig::new(49, spec).with_horizon(200.0).with_seed(9);
    assert_eq!(engine::run(&cfg).unwrap(), engine::run(&cfg).unwrap());
    assert_eq!(engine::run_naive(&cfg).unwrap(), engine::run_naive(&cfg).unwrap());
}

#[test]
fn spread_on_ring_is_slower_than_complete() {
    let ring = SimConfig::new(64, CtmcSpec::single(TopologySpec::Ring)).with_mode(Mode::SpreadExperiment);
    let complete = SimConfig::new(64, CtmcSpec::single(TopologySpec::Complete)).with_mode(Mode::SpreadExperiment);
    let mean = |cfg: &SimConfig| {
        let xs: Vec<f64> = (0..100)
            .map(|s| engine::spread_experiment(&cfg.clone().with_seed(s)).unwrap().spread_time)
            .collect();
        stats::mean(&xs)
    };
    let (r, c) = (mean(&ring), mean(&complete));
    assert!(r > 2.0 * c, "ring {r}, complete {c}");
    // the antipode is 32 hops away either way, each hop taking Exp(1/2)
    assert!(r > 40.0, "{r}");
}
