use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use gossip_age_core::ctmc::{self, Chain, CtmcSpec};
use gossip_age_core::engine::{EventKind, Network, SimConfig, Simulation};
use gossip_age_core::metrics::{aggregate, compare_models, fit_scaling, Metric, ScalingModel, SweepRow};
use gossip_age_core::rate::RateExpr;
use gossip_age_core::topology::{build_topology, gossip_rates, TopologySpec};

fn topology_spec() -> impl Strategy<Value = (TopologySpec, usize)> {
    prop_oneof![
        (2usize..60).prop_map(|n| (TopologySpec::Complete, n)),
        (3usize..60).prop_map(|n| (TopologySpec::Ring, n)),
        (1usize..60).prop_map(|n| (TopologySpec::Disconnected, n)),
        (2usize..9, any::<bool>())
            .prop_map(|(s, wraparound)| (TopologySpec::Grid { wraparound }, s * s)),
        (2usize..12).prop_flat_map(|n| {
            let pairs: Vec<[usize; 2]> = (0..n).flat_map(|i| (i + 1..n).map(move |j| [i, j])).collect();
            proptest::sample::subsequence(pairs.clone(), 0..=pairs.len())
                .prop_map(move |edges| (TopologySpec::custom(edges), n))
        }),
    ]
}

fn random_chain() -> impl Strategy<Value = Chain> {
    (2usize..=6).prop_flat_map(|k| {
        (
            proptest::collection::vec(0.1f64..10.0, k),
            proptest::collection::vec(proptest::collection::vec(0.05f64..1.0, k), k),
        )
            .prop_map(move |(q, w)| {
                let p = w
                    .iter()
                    .enumerate()
                    .map(|(i, row)| {
                        let s: f64 = row.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, x)| x).sum();
                        row.iter().enumerate().map(|(j, x)| if i == j { 0.0 } else { x / s }).collect()
                    })
                    .collect();
                Chain::new(q, p).unwrap()
            })
    })
}

proptest! {
    #[test]
    fn neighbor_rates_sum_to_lambda((spec, n) in topology_spec(), lambda in 0.1f64..10.0) {
        let g = build_topology(&spec, n).unwrap();
        let table = gossip_rates(&g, lambda);
        for i in 0..n {
            let total: f64 = table.node_rates(i).iter().sum();
            if g.degree(i) > 0 {
                prop_assert!((total - lambda).abs() <= 1e-12 * lambda);
            } else {
                prop_assert_eq!(total, 0.0);
            }
        }
    }

    #[test]
    fn build_topology_is_deterministic((spec, n) in topology_spec()) {
        prop_assert_eq!(build_topology(&spec, n).unwrap(), build_topology(&spec, n).unwrap());
    }

    #[test]
    fn regular_topologies_are_regular(n in 3usize..80, side in 3usize..10) {
        let ring = build_topology(&TopologySpec::Ring, n).unwrap();
        prop_assert!(ring.degrees().iter().all(|&d| d == 2));
        let torus = build_topology(&TopologySpec::grid(), side * side).unwrap();
        prop_assert!(torus.degrees().iter().all(|&d| d == 4));
        let complete = build_topology(&TopologySpec::Complete, n).unwrap();
        let rates = gossip_rates(&complete, 1.0);
        for i in 0..n {
            prop_assert!(rates.node_rates(i).iter().all(|&r| (r - 1.0 / (n - 1) as f64).abs() < 1e-15));
        }
    }

    #[test]
    fn generator_rows_sum_to_zero(chain in random_chain()) {
        let q = chain.generator();
        for i in 0..q.nrows() {
            prop_assert!(q.row(i).sum().abs() <= 1e-12 * chain.leave_rate(i));
            prop_assert_eq!(q[(i, i)], -chain.leave_rate(i));
            for j in 0..q.ncols() {
                if i != j {
                    prop_assert!(q[(i, j)] >= 0.0);
                }
            }
        }
    }

    #[test]
    fn stationary_residual_is_tiny(chain in random_chain()) {
        let pi = chain.stationary().unwrap();
        prop_assert!((pi.sum() - 1.0).abs() < 1e-12);
        prop_assert!(pi.iter().all(|&p| p > 0.0));
        prop_assert!((pi.transpose() * chain.generator()).amax() <= 1e-10);
    }

    #[test]
    fn return_moments_are_positive(chain in random_chain(), target in 0usize..6) {
        let target = target % chain.num_states();
        let m = ctmc::return_time_moments(&chain, target).unwrap();
        // the mean return time equals 1 / (pi_t q_t) by renewal-reward
        let pi = chain.stationary().unwrap();
        let renewal = 1.0 / (pi[target] * chain.leave_rate(target));
        prop_assert!((m.mean - renewal).abs() <= 1e-8 * renewal);
        prop_assert!(m.variance > 0.0);
    }

    #[test]
    fn aggregate_is_permutation_invariant(
        values in proptest::collection::vec((0usize..3, 0usize..2, -100.0f64..100.0), 1..40),
        shuffle_seed in any::<u64>(),
    ) {
        let rows: Vec<SweepRow> = values
            .iter()
            .enumerate()
            .map(|(r, &(n, class, v))| SweepRow {
                scenario: "s".into(),
                n: 100 * (n + 1),
                rate_class: ["a", "b"][class].into(),
                replicate: r,
                metric: Metric::NetworkAvgAge,
                value: v,
            })
            .collect();
        let mut shuffled = rows.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle_seed));
        prop_assert_eq!(aggregate(rows).unwrap(), aggregate(shuffled).unwrap());
    }

    #[test]
    fn exact_power_law_is_recovered(c in 0.1f64..10.0, a in 0.05f64..1.5) {
        let pts: Vec<(f64, f64)> = [100.0, 200.0, 400.0, 800.0, 1600.0].iter().map(|&n| (n, c * f64::powf(n, a))).collect();
        let fit = fit_scaling(&pts, ScalingModel::PowerLaw).unwrap();
        prop_assert!((fit.exponent.unwrap() - a).abs() < 1e-9);
        prop_assert!((fit.coefficient - c).abs() < 1e-9 * c);
        prop_assert!((fit.r_squared - 1.0).abs() < 1e-9);
    }

    #[test]
    fn exact_log_law_is_recovered(c in 0.1f64..10.0, b in -5.0f64..5.0) {
        let pts: Vec<(f64, f64)> = [100.0, 300.0, 900.0, 2700.0].iter().map(|&n| (n, c * f64::ln(n) + b)).collect();
        let fit = fit_scaling(&pts, ScalingModel::Logarithmic).unwrap();
        prop_assert!((fit.coefficient - c).abs() < 1e-9);
        prop_assert!((fit.offset.unwrap() - b).abs() < 1e-8);
    }

    #[test]
    fn power_data_prefers_power_law(c in 0.5f64..5.0, a in 0.3f64..1.2) {
        let pts: Vec<(f64, f64)> = (0..8).map(|i| 100.0 * 2f64.powi(i)).map(|n| (n, c * n.powf(a))).collect();
        let cmp = compare_models(&pts).unwrap();
        prop_assert_eq!(cmp.preferred, ScalingModel::PowerLaw);
        prop_assert!(cmp.power_law.r_squared >= cmp.logarithmic.r_squared);
    }

    #[test]
    fn rate_expr_display_roundtrips(coeff in 1u32..50, base in 0usize..6) {
        let bases = ["n", "sqrt(n)", "cbrt(n)", "log(n)", "n^(2/3)", "n^0.25"];
        let text = format!("{coeff}*{}", bases[base]);
        let expr: RateExpr = text.parse().unwrap();
        let again: RateExpr = expr.to_string().parse().unwrap();
        prop_assert_eq!(expr.eval(1000), again.eval(1000));
        prop_assert!(expr.eval(1000) > 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Counter invariants at every event of a full-gossip run.
    #[test]
    fn engine_counters_stay_ordered(
        (spec, n) in topology_spec(),
        q in 0.2f64..5.0,
        seed in any::<u64>(),
    ) {
        let ctmc = CtmcSpec::alternating(spec, TopologySpec::Ring, RateExpr::constant(q));
        let n = n.max(3);
        let cfg = SimConfig::new(n, ctmc).with_horizon(30.0).with_seed(seed);
        let net = match Network::build(&cfg) {
            Ok(net) => net,
            Err(_) => return Ok(()), // spec not valid at the adjusted n
        };
        let mut sim = Simulation::new(&cfg, &net).unwrap();
        let mut prev_versions = sim.state().versions().to_vec();
        let mut prev_source = sim.state().source_version();
        while let Some(ev) = sim.step() {
            let st = sim.state();
            let versions = st.versions();
            prop_assert!(versions.iter().all(|&v| v <= st.source_version()));
            prop_assert!(versions.iter().zip(&prev_versions).all(|(a, b)| a >= b));
            match ev.kind {
                EventKind::SourceUpdate => prop_assert_eq!(st.source_version(), prev_source + 1),
                _ => prop_assert_eq!(st.source_version(), prev_source),
            }
            if let EventKind::Gossip { from, to, .. } = ev.kind {
                let expected = prev_versions[to].max(prev_versions[from]);
                prop_assert_eq!(versions[to], expected);
            }
            prev_versions = versions.to_vec();
            prev_source = st.source_version();
        }
    }
}
