//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 on a configuration error (nothing is
//! written), 3 on a fault during a run.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coordination::{build_controllers, JointActionIndexing, ProtocolConfig, ProtocolKind};
use crate::game::{check_ergodic_with_cap, parse_game_spec, random_ergodic_cisg, serialize_game_spec, Cisg};
use crate::harness::{Metrics, Monitoring, RunLog, SeedStreams, Simulation, SimulationConfig};
use crate::planning::{default_mixing_cap, epsilon_mixing_time, optimal_value_oracle_with, OracleOptions};
use crate::rmax::run_rmax_from;

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_RUNTIME: u8 = 3;

pub const SUMMARY_HEADER: [&str; 7] = ["seed", "steps", "final_avg", "v_opt", "target", "time_to_target", "switches"];

#[derive(Debug, Parser)]
#[command(name = "coordlearn", version, about = "Coordination learning in common-interest stochastic games")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a protocol over a sweep of seeds.
    Run(RunArgs),
    /// Report v(M), an optimal policy, ergodicity and mixing times.
    Oracle(OracleArgs),
    /// Re-run a recorded config.json and print or write its run log.
    Replay(ReplayArgs),
    /// Write a random ergodic game.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub game: PathBuf,
    #[arg(long, value_parser = parse_protocol)]
    pub protocol: ProtocolKind,
    #[arg(long, value_parser = parse_monitoring, default_value = "imperfect")]
    pub monitoring: Monitoring,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.1)]
    pub gamma: f64,
    #[arg(long)]
    pub t_mix: Option<usize>,
    #[arg(long)]
    pub k1_override: Option<u64>,
    /// Shared bound on every agent's action count.
    #[arg(long)]
    pub bound: Option<usize>,
    /// Shared agent order for case2, e.g. `1,0`.
    #[arg(long, value_delimiter = ',')]
    pub agent_order: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0)]
    pub t_prime_floor: u64,
    /// Raise the trial length to the R-MAX step bound.
    #[arg(long)]
    pub rmax_bound: bool,
    /// `a..b` (inclusive), a comma list, or one seed.
    #[arg(long, value_parser = parse_seeds, default_value = "0")]
    pub seed: SeedList,
    #[arg(long)]
    pub steps: u64,
    #[arg(long, default_value_t = 0)]
    pub start_state: usize,
    /// Score every run against the brute-force optimal value.
    #[arg(long)]
    pub oracle: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub game: PathBuf,
    /// Accuracies for the mixing-time report.
    #[arg(long, value_delimiter = ',', default_value = "0.25,0.1,0.05")]
    pub epsilon: Vec<f64>,
    /// Largest number of stationary policies to enumerate.
    #[arg(long, default_value_t = crate::game::DEFAULT_POLICY_CAP)]
    pub cap: u64,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Where to write the run log; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub states: usize,
    #[arg(long, value_delimiter = ',', default_value = "2,2")]
    pub actions: Vec<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub r_max: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedList(pub Vec<u64>);

pub fn parse_seeds(s: &str) -> Result<SeedList, String> {
    let bad = |e: std::num::ParseIntError| format!("bad seed in {s:?}: {e}");
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (a.trim().parse::<u64>().map_err(bad)?, b.trim().parse::<u64>().map_err(bad)?);
        if a > b {
            return Err(format!("empty seed range {s:?}"));
        }
        return Ok(SeedList((a..=b).collect()));
    }
    let seeds = s.split(',').map(|x| x.trim().parse::<u64>().map_err(bad)).collect::<Result<Vec<_>, _>>()?;
    Ok(SeedList(seeds))
}

fn parse_protocol(s: &str) -> Result<ProtocolKind, String> {
    s.parse()
}

fn parse_monitoring(s: &str) -> Result<Monitoring, String> {
    match s {
        "perfect" => Ok(Monitoring::Perfect),
        "imperfect" => Ok(Monitoring::Imperfect),
        _ => Err(format!("monitoring must be perfect or imperfect, got {s:?}")),
    }
}

/// Everything needed to reproduce one seed's run, stored next to its log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSnapshot {
    /// The game in spec format.
    pub game: String,
    pub simulation: SimulationConfig,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_RUNTIME,
            message: message.into(),
        }
    }
}

pub fn load_game(path: &Path) -> Result<Cisg, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    parse_game_spec(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

/// One seed's log, driven through the harness or, for `rmax-single`, by a
/// lone learner on the induced MDP.
pub fn execute(game: &Cisg, config: &SimulationConfig) -> Result<RunLog, String> {
    if config.protocol.kind == ProtocolKind::RmaxSingle {
        let t_mix = config.protocol.t_mix.ok_or("rmax-single needs t_mix")?;
        let rmax = config.protocol.rmax_config(game.r_max(), t_mix);
        let trace = run_rmax_from(
            &game.induced_mdp(),
            &rmax,
            config.master_seed,
            config.num_steps,
            config.start_state,
        )
        .map_err(|e| e.to_string())?;
        let mut log = RunLog::from_centralized(&trace, &JointActionIndexing::canonical(game.action_counts().to_vec()));
        log.config = Some(config.clone());
        return Ok(log);
    }
    let mut sim = Simulation::new(game, config).map_err(|e| e.to_string())?;
    sim.run(config.num_steps).map_err(|e| e.to_string())?;
    Ok(sim.into_log())
}

fn opt_field<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn cmd_run(args: &RunArgs) -> Result<Vec<(u64, Metrics)>, CliError> {
    let game = load_game(&args.game)?;
    let protocol = ProtocolConfig {
        kind: args.protocol,
        epsilon: args.epsilon,
        delta: args.delta,
        gamma: args.gamma,
        t_mix: args.t_mix,
        k1_override: args.k1_override,
        bound: args.bound,
        agent_order: args.agent_order.clone(),
        t_prime_floor: args.t_prime_floor,
        use_rmax_bound: args.rmax_bound,
    };
    if args.seed.0.is_empty() {
        return Err(CliError::config("no seeds given"));
    }
    if args.start_state >= game.num_states() {
        return Err(CliError::config(format!("start state {} is out of range", args.start_state)));
    }
    // everything that can be rejected is rejected before anything is written
    build_controllers(&game, &protocol, args.monitoring, &SeedStreams::new(0))
        .map_err(|e| CliError::config(e.to_string()))?;
    let v_opt = if args.oracle {
        let report = check_ergodic_with_cap(&game, crate::game::DEFAULT_POLICY_CAP).map_err(|e| CliError::config(e.to_string()))?;
        if !report.ergodic {
            return Err(CliError::config("--oracle needs an ergodic game; this one is not"));
        }
        let v = optimal_value_oracle_with(&game.induced_mdp(), &OracleOptions::default())
            .map_err(|e| CliError::config(format!("oracle: {e}")))?;
        Some(v.optimal_value)
    } else {
        None
    };

    fs::create_dir_all(&args.out).map_err(|e| CliError::runtime(format!("{}: {e}", args.out.display())))?;
    let game_text = serialize_game_spec(&game);
    let mut results: Vec<(u64, Metrics)> = args
        .seed
        .0
        .par_iter()
        .map(|&seed| -> Result<(u64, Metrics), CliError> {
            let simulation = SimulationConfig {
                protocol: protocol.clone(),
                monitoring: args.monitoring,
                master_seed: seed,
                num_steps: args.steps,
                start_state: args.start_state,
            };
            let log = execute(&game, &simulation).map_err(|e| CliError::runtime(format!("seed {seed}: {e}")))?;
            let dir = args.out.join(format!("seed_{seed}"));
            let io_err = |e: io::Error| CliError::runtime(format!("{}: {e}", dir.display()));
            fs::create_dir_all(&dir).map_err(io_err)?;
            let file = fs::File::create(dir.join("runlog.csv")).map_err(io_err)?;
            log.write_csv(io::BufWriter::new(file))
                .map_err(|e| CliError::runtime(format!("seed {seed}: {e}")))?;
            let snapshot = RunSnapshot {
                game: game_text.clone(),
                simulation,
            };
            let json = serde_json::to_string_pretty(&snapshot).expect("snapshot serializes");
            fs::write(dir.join("config.json"), json).map_err(io_err)?;
            let metrics = match v_opt {
                Some(v) => Metrics::with_oracle_value(&log, v, args.epsilon, args.gamma),
                None => Metrics::from_log(&log),
            };
            Ok((seed, metrics))
        })
        .collect::<Result<_, _>>()?;
    results.sort_by_key(|r| r.0);

    let path = args.out.join("summary.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
    let csv_err = |e: csv::Error| CliError::runtime(format!("{}: {e}", path.display()));
    w.write_record(SUMMARY_HEADER).map_err(csv_err)?;
    for (seed, m) in &results {
        w.write_record([
            seed.to_string(),
            m.steps.to_string(),
            m.running_average.to_string(),
            opt_field(m.v_opt),
            opt_field(m.target),
            opt_field(m.time_to_target),
            m.switches.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::runtime(e.to_string()))?;
    Ok(results)
}

/// The oracle report as text.
pub fn oracle_report(game: &Cisg, epsilons: &[f64], cap: u64) -> Result<String, CliError> {
    let mut out = String::new();
    let counts: Vec<String> = game.action_counts().iter().map(|c| c.to_string()).collect();
    out += &format!(
        "states: {}\nagents: {}\nactions: {}\n",
        game.num_states(),
        game.num_agents(),
        counts.join("x")
    );
    let report = check_ergodic_with_cap(game, cap).map_err(|e| CliError::config(e.to_string()))?;
    if let Some(w) = &report.witness {
        let joints: Vec<String> = w.policy.actions().iter().map(|&j| game.canonical_joint(j).to_string()).collect();
        out += &format!(
            "ergodic: no\nwitness: policy [{}] never reaches state {} from state {}\n",
            joints.join(", "),
            w.to,
            w.from
        );
        return Ok(out);
    }
    out += &format!("ergodic: yes ({} policies checked)\n", report.policies_checked);
    let mdp = game.induced_mdp();
    let value = optimal_value_oracle_with(
        &mdp,
        &OracleOptions {
            cap,
            keep_table: false,
        },
    )
    .map_err(|e| CliError::config(e.to_string()))?;
    out += &format!("v(M): {}\n", value.optimal_value);
    out += "policy:\n";
    for (s, &j) in value.argmax_policy.actions().iter().enumerate() {
        out += &format!("  {s} -> {}\n", game.canonical_joint(j));
    }
    let max_count = game.action_counts().iter().copied().max().unwrap_or(1);
    for &eps in epsilons {
        let t_cap = default_mixing_cap(game.num_states(), max_count, game.r_max(), eps);
        match epsilon_mixing_time(&mdp, &value.argmax_policy, eps, t_cap) {
            Ok(t) => out += &format!("mixing time (eps={eps}): {t}\n"),
            Err(e) => out += &format!("mixing time (eps={eps}): {e}\n"),
        }
    }
    Ok(out)
}

pub fn cmd_replay(args: &ReplayArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", args.config.display())))?;
    let snapshot: RunSnapshot =
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", args.config.display())))?;
    let game = parse_game_spec(&snapshot.game).map_err(|e| CliError::config(e.to_string()))?;
    let log = execute(&game, &snapshot.simulation).map_err(CliError::runtime)?;
    let csv = log.to_csv_string();
    match &args.out {
        Some(p) => fs::write(p, csv).map_err(|e| CliError::runtime(format!("{}: {e}", p.display()))),
        None => io::stdout().write_all(csv.as_bytes()).or_else(ignore_broken_pipe),
    }
}

/// A reader that closes the pipe early (`| head`) is not a failure.
fn ignore_broken_pipe(e: io::Error) -> Result<(), CliError> {
    match e.kind() {
        io::ErrorKind::BrokenPipe => Ok(()),
        _ => Err(CliError::runtime(e.to_string())),
    }
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<(), CliError> {
    if args.states == 0 || args.actions.is_empty() || args.actions.contains(&0) || !(args.r_max > 0.0) {
        return Err(CliError::config("need at least one state, positive action counts and r_max > 0"));
    }
    let game = random_ergodic_cisg(args.states, &args.actions, args.r_max, args.seed);
    let text = serialize_game_spec(&game);
    match &args.out {
        Some(p) => fs::write(p, text).map_err(|e| CliError::runtime(format!("{}: {e}", p.display()))),
        None => io::stdout().write_all(text.as_bytes()).or_else(ignore_broken_pipe),
    }
}

pub fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Run(args) => {
            let results = cmd_run(args)?;
            println!(
                "{} runs written to {} (summary.csv)",
                results.len(),
                args.out.display()
            );
            Ok(())
        }
        Command::Oracle(args) => {
            let game = load_game(&args.game)?;
            let report = oracle_report(&game, &args.epsilon, args.cap)?;
            io::stdout().write_all(report.as_bytes()).or_else(ignore_broken_pipe)
        }
        Command::Replay(args) => cmd_replay(args),
        Command::Generate(args) => cmd_generate(args),
    }
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
