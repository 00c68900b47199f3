//! End-to-end acceptance checks. Runs every criterion, prints one PASS/FAIL
//! line each, and exits non-zero if any failed.

use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gossip_age_core::ctmc::{self, Chain, CtmcSpec};
use gossip_age_core::engine::{self, Mode, SimConfig};
use gossip_age_core::experiments::{self, Sweep};
use gossip_age_core::metrics::{fit_scaling, stats, ScalingModel, SweepTable};
use gossip_age_core::rate::RateExpr;
use gossip_age_core::topology::TopologySpec;

const SEED: u64 = 20241018;

type Check = fn() -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn complete_spread(n: usize) -> SimConfig {
    SimConfig::new(n, CtmcSpec::single(TopologySpec::Complete))
        .with_mode(Mode::SpreadExperiment)
        .with_seed(SEED)
}

fn spread_times(n: usize, trials: usize) -> Vec<f64> {
    experiments::run_spread_trials(&complete_spread(n), trials, jobs())
        .expect("spread trials")
        .iter()
        .map(|o| o.spread_time)
        .collect()
}

/// Independent of the library's closed form: summed in reverse, in a different arrangement.
fn exact_spread_mean(n: usize) -> f64 {
    let nf = n as f64;
    (1..n).rev().map(|k| (nf - 1.0) / (k as f64 * (nf - k as f64))).sum()
}

fn c1_spread_mean() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [100, 400, 1000] {
        let mean = stats::mean(&spread_times(n, 200));
        let exact = exact_spread_mean(n);
        let rel = (mean - exact).abs() / exact;
        pass &= rel <= 0.05;
        parts.push(format!("n={n}: {mean:.3} vs {exact:.3} ({:.1}%)", rel * 100.0));
    }
    outcome(pass, parts.join("; ") + " [tol 5%]")
}

fn c2_spread_variance() -> Outcome {
    let var = stats::variance(&spread_times(1000, 1000));
    let bound = 4.0 * std::f64::consts::PI.powi(2) / 3.0 * 1.10;
    outcome(var <= bound, format!("var(T) = {var:.3} <= {bound:.3}"))
}

fn c3_stage_sum_cross_validation() -> Outcome {
    let trials = 1000;
    let sim = spread_times(500, trials);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let stages = engine::spread_stage_times(500, 1.0, &mut rng, trials).unwrap();
    let (a, b) = (stats::mean(&sim), stats::mean(&stages));
    let rel = (a - b).abs() / b;
    let t = stats::welch_t_test(&sim, &stages);
    outcome(
        rel <= 0.03 && t.p_value >= 0.01,
        format!("simulated {a:.3}, stage sums {b:.3} ({:.2}%), Welch p = {:.3}", rel * 100.0, t.p_value),
    )
}

fn c4_lone_node_age() -> Outcome {
    let cfg = SimConfig::new(1, CtmcSpec::single(TopologySpec::Complete))
        .with_horizon(1e5)
        .with_burn_in(1e3)
        .with_seed(SEED);
    let fast = engine::run(&cfg).unwrap().network_avg_age;
    let naive = engine::run_naive(&cfg).unwrap().network_avg_age;
    let ok = |x: f64| (x - 1.0).abs() <= 0.05;
    outcome(ok(fast) && ok(naive), format!("fast {fast:.4}, naive {naive:.4}, target 1.0 ± 5%"))
}

fn random_small_config(rng: &mut ChaCha8Rng) -> SimConfig {
    let n = rng.random_range(2..=6);
    let mut states = Vec::new();
    for _ in 0..2 {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random_bool(0.5) {
                    edges.push([i, j]);
                }
            }
        }
        states.push(TopologySpec::custom(edges));
    }
    let q = [rng.random_range(0.2..3.0), rng.random_range(0.2..3.0)];
    let spec = CtmcSpec {
        states,
        leave_rates: q.iter().map(|&x| RateExpr::constant(x)).collect(),
        transition_probs: vec![vec![0.0, 1.0], vec![1.0, 0.0]],
    };
    SimConfig::new(n, spec)
        .with_rates(rng.random_range(0.5..2.0), rng.random_range(0.5..2.0), rng.random_range(0.5..2.0))
        .with_horizon(100.0)
}

fn c5_oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut failures = Vec::new();
    for c in 0..10 {
        let cfg = random_small_config(&mut rng);
        let net = engine::Network::build(&cfg).unwrap();
        let (mut fast, mut naive) = (Vec::new(), Vec::new());
        for s in 0..1000 {
            let c = cfg.clone().with_seed(SEED + s);
            fast.push(engine::run_on(&c, &net).unwrap().network_avg_age);
            naive.push(engine::run_naive_on(&c, &net).unwrap().network_avg_age);
        }
        let (a, b) = (stats::ci95(&fast), stats::ci95(&naive));
        if !stats::intervals_overlap(a, b) {
            failures.push(format!("config {c} (n={}): {a:?} vs {b:?}", cfg.n));
        }
    }
    let pass = failures.is_empty();
    let detail = if pass {
        "10 configs x 1000 seeds, all 95% CIs overlap".to_string()
    } else {
        failures.join("; ")
    };
    outcome(pass, detail)
}

fn c6_poisson_source() -> Outcome {
    let runs = 500;
    let counts: Vec<f64> = (0..runs)
        .map(|i| {
            let cfg = SimConfig::new(1, CtmcSpec::single(TopologySpec::Complete))
                .with_horizon(1e3)
                .with_burn_in(0.0)
                .with_seed(SEED + i);
            engine::run(&cfg).unwrap().event_counts.source_updates as f64
        })
        .collect();
    let (m, v) = (stats::mean(&counts), stats::variance(&counts));
    let expected = 1e3;
    let (rm, rv) = ((m - expected).abs() / expected, (v - expected).abs() / expected);
    outcome(
        rm <= 0.03 && rv <= 0.03,
        format!("mean {m:.1} ({:.2}%), variance {v:.1} ({:.2}%) vs 1000 [tol 3%]", rm * 100.0, rv * 100.0),
    )
}

fn random_chain(rng: &mut ChaCha8Rng) -> Chain {
    let k = rng.random_range(2..=6);
    let q = (0..k).map(|_| rng.random_range(0.5..5.0)).collect();
    let p = (0..k)
        .map(|i| {
            let w: Vec<f64> = (0..k).map(|j| if i == j { 0.0 } else { rng.random_range(0.1..1.0) }).collect();
            let s: f64 = w.iter().sum();
            w.iter().map(|x| x / s).collect()
        })
        .collect();
    Chain::new(q, p).unwrap()
}

fn c7_phase_type_moments() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut pass = true;
    let mut parts = Vec::new();
    for _ in 0..5 {
        let chain = random_chain(&mut rng);
        let exact = ctmc::return_time_moments(&chain, 0).unwrap();
        let mc = ctmc::mc_return_moments(&chain, 0, 100_000, &mut rng).unwrap();
        let rm = (mc.mean - exact.mean).abs() / exact.mean;
        let rv = (mc.variance - exact.variance).abs() / exact.variance;
        pass &= rm <= 0.02 && rv <= 0.05;
        parts.push(format!("K={} mean {:.2}% var {:.2}%", chain.num_states(), rm * 100.0, rv * 100.0));
    }
    let mut worst: f64 = 0.0;
    for (a, b) in [(1.0, 1.0), (1.0, 2.0), (0.3, 7.5), (4.0, 0.25)] {
        let chain = Chain::new(vec![a, b], vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let m = ctmc::return_time_moments(&chain, 0).unwrap();
        worst = worst
            .max((m.mean - (1.0 / a + 1.0 / b)).abs())
            .max((m.variance - (1.0 / (a * a) + 1.0 / (b * b))).abs());
    }
    pass &= worst <= 1e-9;
    parts.push(format!("two-state max error {worst:.1e}"));
    outcome(pass, parts.join("; "))
}

fn c8_stationarity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 8);
    let mut chains: Vec<Chain> = (0..5).map(|_| random_chain(&mut rng)).collect();
    for id in experiments::PRESET_IDS {
        let p = experiments::preset(id).unwrap();
        chains.push(p.ctmc(&p.variants[0]).at(p.n_list[0]).unwrap());
    }
    let (mut worst_residual, mut worst_occ): (f64, f64) = (0.0, 0.0);
    for chain in &chains {
        let pi = chain.stationary().unwrap();
        worst_residual = worst_residual.max((pi.transpose() * chain.generator()).amax());
        let traj = ctmc::sample_trajectory(chain, &mut rng, 1e5).unwrap();
        let occ = ctmc::occupancy(&traj, chain.num_states(), 1e5);
        for (o, p) in occ.iter().zip(pi.iter()) {
            worst_occ = worst_occ.max((o - p).abs() / p);
        }
    }
    outcome(
        worst_residual <= 1e-10 && worst_occ <= 0.02,
        format!(
            "{} chains: max |pi Q| = {worst_residual:.1e}, max occupancy error {:.2}%",
            chains.len(),
            worst_occ * 100.0
        ),
    )
}

fn run_preset(id: &str) -> SweepTable {
    let preset = experiments::preset(id).unwrap();
    experiments::run_preset(&preset, SEED, jobs()).unwrap()
}

fn c9_constant_rate_log_scaling() -> Outcome {
    let table = run_preset("thm1");
    let points = table.series("thm1", "const");
    let cmp = gossip_age_core::metrics::compare_models(&points).unwrap();
    let growth = table.group("thm1", "const", 1024).unwrap().mean / table.group("thm1", "const", 128).unwrap().mean;
    let bound = (1024f64.ln() / 128f64.ln()) * 1.25;
    outcome(
        cmp.preferred == ScalingModel::Logarithmic && growth <= bound,
        format!(
            "preferred {:?} (R2 log {:.4}, power {:.4}); age(1024)/age(128) = {growth:.3} <= {bound:.3}",
            cmp.preferred, cmp.logarithmic.r_squared, cmp.power_law.r_squared
        ),
    )
}

fn c10_ring_grid_exponents() -> Outcome {
    let table = run_preset("fig3");
    let mut pass = true;
    let mut parts = Vec::new();
    for (label, target) in [("sqrt", 0.5), ("cbrt", 1.0 / 3.0)] {
        let fit = fit_scaling(&table.series("fig3", label), ScalingModel::PowerLaw).unwrap();
        let a = fit.exponent.unwrap();
        let ok = (a - target).abs() <= 0.1;
        pass &= ok;
        parts.push(format!("{label}: exponent {a:.3} (target {target:.2} ± 0.1) {}", if ok { "ok" } else { "off" }));
    }
    outcome(pass, parts.join("; "))
}

fn c11_ring_complete_ordering() -> Outcome {
    let table = run_preset("fig4");
    let preset = experiments::preset("fig4").unwrap();
    let mut violations = Vec::new();
    for &n in preset.n_list.iter().filter(|&&n| n >= 400) {
        let m = |label: &str| table.group("fig4", label, n).unwrap().mean;
        let (log, sqrt, lin) = (m("log"), m("sqrt"), m("linear"));
        if !(log < sqrt && sqrt < lin) {
            violations.push(format!("n={n}: log {log:.3}, sqrt {sqrt:.3}, linear {lin:.3}"));
        }
    }
    let cmp = gossip_age_core::metrics::compare_models(&table.series("fig4", "log")).unwrap();
    let log_ok = cmp.preferred == ScalingModel::Logarithmic;
    let mut detail = format!("log variant prefers {:?}", cmp.preferred);
    if violations.is_empty() {
        detail.push_str("; ordering holds for all n >= 400");
    } else {
        detail.push_str(&format!("; ordering violated at {}", violations.join(", ")));
    }
    outcome(log_ok && violations.is_empty(), detail)
}

fn c12_static_ring() -> Outcome {
    let sweep = Sweep {
        scenario: "ring".into(),
        base: SimConfig::new(100, CtmcSpec::single(TopologySpec::Ring)),
        variants: vec![("static".into(), CtmcSpec::single(TopologySpec::Ring))],
        n_list: vec![100, 400],
        replicates: 20,
    };
    let table = sweep.run(SEED, jobs()).unwrap();
    let a = table.group("ring", "static", 100).unwrap().mean;
    let b = table.group("ring", "static", 400).unwrap().mean;
    let ratio = b / a;
    outcome(
        (ratio - 2.0).abs() <= 0.4,
        format!("age(100) = {a:.3}, age(400) = {b:.3}, ratio {ratio:.3} (2.0 ± 20%)"),
    )
}

fn cli(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_gossip-age-sim"))
        .args(args)
        .output()
        .expect("spawn gossip-age-sim");
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn c13_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"network": {"n": 64},
            "ctmc": {"states": [{"kind": "ring"}, {"kind": "grid"}], "q": ["sqrt(n)", "log(n)"], "p": [[0, 1], [1, 0]]},
            "run": {"horizon": 200, "seed": 11, "replicates": 4}}"#,
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();
    let commands: Vec<Vec<&str>> = vec![
        vec!["--config", cfg, "simulate"],
        vec!["--config", cfg, "--format", "csv", "simulate"],
        vec!["--config", cfg, "sweep", "--n-list", "36,64,100", "--rates", "sqrt(n);n^(1/3)"],
        vec!["--config", cfg, "--format", "json", "sweep", "--n-list", "36,64,100"],
        vec!["--config", cfg, "spread", "--trials", "50"],
        vec!["--config", cfg, "--format", "json", "spread", "--trials", "50"],
        vec!["--config", cfg, "ctmc", "--mc-check", "--mc-returns", "2000"],
        vec!["presets", "list"],
        vec!["--seed", "5", "presets", "run", "fig4", "--replicates", "2", "--horizon", "50", "--n-list", "50,100"],
    ];
    let mut differing = Vec::new();
    for args in &commands {
        let reference = cli(&[&args[..], &["--jobs", "1"]].concat());
        for j in ["2", "4"] {
            if cli(&[&args[..], &["--jobs", j]].concat()) != reference {
                differing.push(format!("{} (--jobs {j})", args.join(" ")));
            }
        }
    }
    let pass = differing.is_empty();
    let detail = if pass {
        format!("{} commands byte-identical across --jobs 1/2/4", commands.len())
    } else {
        format!("output differs: {}", differing.join("; "))
    };
    outcome(pass, detail)
}

fn main() -> ExitCode {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: [(&str, Check); 13] = [
        ("complete-graph spread mean", c1_spread_mean),
        ("spread-time variance bound", c2_spread_variance),
        ("stage-sum cross-validation", c3_stage_sum_cross_validation),
        ("lone-node stationary age", c4_lone_node_age),
        ("fast vs naive engine", c5_oracle_equivalence),
        ("Poisson source count", c6_poisson_source),
        ("phase-type return moments", c7_phase_type_moments),
        ("CTMC stationarity", c8_stationarity),
        ("constant-rate complete mixture log scaling", c9_constant_rate_log_scaling),
        ("ring/grid power-law exponents", c10_ring_grid_exponents),
        ("ring/complete rate ordering", c11_ring_complete_ordering),
        ("static ring growth", c12_static_ring),
        ("determinism across --jobs", c13_determinism),
    ];
    let mut failed = 0;
    let mut ran = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = format!("criterion_{:02}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| id.contains(f.as_str()) || name.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let out = check();
        let verdict = if out.pass { "PASS" } else { "FAIL" };
        if !out.pass {
            failed += 1;
        }
        println!("{id} {verdict} {name}: {} ({:.1}s)", out.detail, start.elapsed().as_secs_f64());
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
