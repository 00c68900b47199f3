use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use gossip_age_core::config::ConfigFile;
use gossip_age_core::ctmc::{self, CtmcSpec};
use gossip_age_core::engine::{self, Mode, Network};
use gossip_age_core::experiments::{self, parse_rate_expr, Sweep, PRESET_IDS};
use gossip_age_core::metrics::{compare_models, stats, SweepTable};
use gossip_age_core::{Error, CSV_VERSION_HEADER};

#[derive(Parser)]
#[command(name = "gossip-age-sim", version, about = "Version-age simulator for gossip over switching topologies")]
struct Cli {
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Overrides `run.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweeps and trials.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Override a config key, e.g. `--set network.n=400` (repeatable).
    #[arg(long = "set", global = true, value_name = "K=V")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Single full-gossip run; prints the run result.
    Simulate {
        /// Also write a CSV event log (n <= 64).
        #[arg(long)]
        event_log: Option<PathBuf>,
    },
    /// Age sweep over n and leave-rate classes.
    Sweep {
        /// Comma-separated node counts; defaults to the config's n.
        #[arg(long, value_delimiter = ',')]
        n_list: Vec<usize>,
        /// Rate expressions applied to every state's leave rate, one variant each.
        /// Separate with ';' (or ',' when no expression contains one).
        #[arg(long)]
        rates: Option<String>,
        #[arg(long)]
        replicates: Option<usize>,
    },
    /// Spread-time trials from a packet planted at node 0.
    Spread {
        #[arg(long, default_value_t = 200)]
        trials: usize,
    },
    /// Generator, stationary distribution and return-time moments.
    Ctmc {
        /// Add Monte-Carlo estimates next to the analytic values.
        #[arg(long)]
        mc_check: bool,
        #[arg(long, default_value_t = 100_000)]
        mc_returns: usize,
    },
    /// Built-in scenario presets.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    List,
    Run {
        id: String,
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        n_list: Vec<usize>,
        /// Only run these rate classes (comma-separated labels).
        #[arg(long, value_delimiter = ',')]
        rates: Vec<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(text) => match emit(cli.out.as_deref(), &text) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Guard(_) => 3,
        _ => 2,
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|source| Error::Io {
            path: p.display().to_string(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| Error::Io {
                    path: "stdout".into(),
                    source,
                })
        }
    }
}

fn load_config(cli: &Cli) -> Result<ConfigFile, Error> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Error::Config("--config PATH is required for this command".into()))?;
    let mut cfg = ConfigFile::load(path, &cli.overrides)?;
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    Ok(cfg)
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, Error> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn dispatch(cli: &Cli) -> Result<String, Error> {
    match &cli.command {
        Command::Simulate { event_log } => simulate(cli, event_log.as_deref()),
        Command::Sweep {
            n_list,
            rates,
            replicates,
        } => sweep(cli, n_list, rates.as_deref(), *replicates),
        Command::Spread { trials } => spread(cli, *trials),
        Command::Ctmc { mc_check, mc_returns } => analyze(cli, *mc_check, *mc_returns),
        Command::Presets { action } => presets(cli, action),
    }
}

fn simulate(cli: &Cli, event_log: Option<&Path>) -> Result<String, Error> {
    let mut cfg = load_config(cli)?.sim_config();
    cfg.mode = Mode::FullGossip;
    let result = match event_log {
        Some(path) => {
            let mut buf = Vec::new();
            let r = engine::run_logged(&cfg, &mut buf)?;
            std::fs::write(path, buf).map_err(|source| Error::Io {
                path: path.display().to_string(),
                source,
            })?;
            r
        }
        None => engine::run(&cfg)?,
    };
    match cli.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&result),
        Format::Csv => {
            let mut s = format!("{CSV_VERSION_HEADER}\nnode,avg_age\n");
            for (i, a) in result.per_node_age.iter().enumerate() {
                s.push_str(&format!("{i},{a}\n"));
            }
            Ok(s)
        }
    }
}

fn split_rates(text: &str) -> Vec<String> {
    let sep = if text.contains(';') { ';' } else { ',' };
    text.split(sep).map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

fn table_output(cli: &Cli, table: &SweepTable) -> Result<String, Error> {
    match cli.format.unwrap_or(Format::Csv) {
        Format::Csv => Ok(table.to_csv()),
        Format::Json => {
            let fits: Vec<_> = table
                .curves()
                .into_iter()
                .filter_map(|(scenario, rate_class)| {
                    let cmp = compare_models(&table.series(&scenario, &rate_class)).ok()?;
                    Some(json!({"scenario": scenario, "rate_class": rate_class, "comparison": cmp}))
                })
                .collect();
            to_json(&json!({"rows": table.rows, "groups": table.groups, "fits": fits}))
        }
    }
}

fn sweep(cli: &Cli, n_list: &[usize], rates: Option<&str>, replicates: Option<usize>) -> Result<String, Error> {
    let cfg = load_config(cli)?;
    let base = cfg.sim_config();
    let variants = match rates {
        Some(text) => split_rates(text)
            .into_iter()
            .map(|expr| {
                let rate = parse_rate_expr(&expr)?;
                let ctmc = CtmcSpec {
                    leave_rates: vec![rate; base.ctmc.num_states()],
                    ..base.ctmc.clone()
                };
                Ok((expr, ctmc))
            })
            .collect::<Result<Vec<_>, Error>>()?,
        None => vec![("config".to_string(), base.ctmc.clone())],
    };
    let n_list = if n_list.is_empty() { vec![base.n] } else { n_list.to_vec() };
    for (_, ctmc) in &variants {
        for &n in &n_list {
            ctmc.at(n)?;
        }
    }
    let sweep = Sweep {
        scenario: cfg.run.scenario.clone(),
        base: base.clone(),
        variants,
        n_list,
        replicates: replicates.unwrap_or(cfg.run.replicates),
    };
    let table = sweep.run(base.seed, cli.jobs)?;
    table_output(cli, &table)
}

fn spread(cli: &Cli, trials: usize) -> Result<String, Error> {
    if trials == 0 {
        return Err(Error::Config("--trials must be positive".into()));
    }
    let mut cfg = load_config(cli)?.sim_config();
    cfg.mode = Mode::SpreadExperiment;
    let net = Network::build(&cfg)?;
    if cfg.n > 1 && !net.any_state_connected() {
        eprintln!("warning: no single state's graph is connected; spread relies on switching between them");
    }
    let outcomes = experiments::run_spread_trials(&cfg, trials, cli.jobs)?;
    let times: Vec<f64> = outcomes.iter().map(|o| o.spread_time).collect();
    let counts: Vec<f64> = outcomes.iter().map(|o| o.source_count as f64).collect();
    let (t_lo, t_hi) = stats::ci95(&times);
    let (c_lo, c_hi) = stats::ci95(&counts);
    match cli.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut s = format!("{CSV_VERSION_HEADER}\ntrial,T,N0_count\n");
            for (i, o) in outcomes.iter().enumerate() {
                s.push_str(&format!("{i},{},{}\n", o.spread_time, o.source_count));
            }
            s.push_str(&format!("mean,{},{}\n", stats::mean(&times), stats::mean(&counts)));
            s.push_str(&format!("ci_low,{t_lo},{c_lo}\n"));
            s.push_str(&format!("ci_high,{t_hi},{c_hi}\n"));
            Ok(s)
        }
        Format::Json => to_json(&json!({
            "n": cfg.n,
            "trials": outcomes,
            "summary": {
                "mean_T": stats::mean(&times),
                "var_T": stats::variance(&times),
                "ci_T": [t_lo, t_hi],
                "mean_N0_count": stats::mean(&counts),
                "ci_N0_count": [c_lo, c_hi],
            }
        })),
    }
}

fn analyze(cli: &Cli, mc_check: bool, mc_returns: usize) -> Result<String, Error> {
    let cfg = load_config(cli)?;
    let chain = cfg.ctmc.at(cfg.network.n)?;
    let analysis = ctmc::analyze(&chain)?;
    let mut doc = serde_json::to_value(&analysis)?;
    if mc_check {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.run.seed);
        // about a million jumps
        let fastest = chain.leave_rates().iter().cloned().fold(1.0, f64::max);
        let horizon = 1e6 / fastest;
        let traj = ctmc::sample_trajectory(&chain, &mut rng, horizon)?;
        let occupancy = ctmc::occupancy(&traj, chain.num_states(), horizon);
        let moments = if chain.num_states() >= 2 {
            (0..chain.num_states())
                .map(|t| ctmc::mc_return_moments(&chain, t, mc_returns, &mut rng))
                .collect::<Result<Vec<_>, _>>()?
        } else {
            Vec::new()
        };
        doc["mc_occupancy"] = json!(occupancy);
        doc["mc_return_moments"] = json!(moments);
    }
    to_json(&doc)
}

fn presets(cli: &Cli, action: &PresetAction) -> Result<String, Error> {
    match action {
        PresetAction::List => {
            let list = PRESET_IDS
                .iter()
                .map(|id| experiments::preset(id))
                .collect::<Result<Vec<_>, _>>()?;
            match cli.format.unwrap_or(Format::Csv) {
                Format::Json => to_json(&list),
                Format::Csv => {
                    let mut s = String::new();
                    for p in &list {
                        let labels: Vec<&str> = p.variants.iter().map(|v| v.label.as_str()).collect();
                        s.push_str(&format!(
                            "{}\t{}\tn = {:?}\trates = {}\n",
                            p.id,
                            p.description,
                            p.n_list,
                            labels.join(",")
                        ));
                    }
                    Ok(s)
                }
            }
        }
        PresetAction::Run {
            id,
            replicates,
            horizon,
            n_list,
            rates,
        } => {
            let mut preset = experiments::preset(id)?;
            if let Some(r) = replicates {
                preset.replicates = *r;
            }
            if let Some(h) = horizon {
                preset.set_horizon(*h);
            }
            if !n_list.is_empty() {
                preset.n_list = n_list.clone();
            }
            if !rates.is_empty() {
                let labels: Vec<&str> = rates.iter().map(String::as_str).collect();
                preset.restrict_variants(&labels)?;
            }
            let table = experiments::run_preset(&preset, cli.seed.unwrap_or(0), cli.jobs)?;
            table_output(cli, &table)
        }
    }
}
