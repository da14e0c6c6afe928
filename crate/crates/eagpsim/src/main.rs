use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use eagpsim::config::parse_scenario;
use eagpsim::output::write_outputs;
use eagpsim::presets::{preset, PRESETS};
use eagpsim::protocols::ProtocolId;
use eagpsim::runner::{execute_plan, Plan};

#[derive(Parser)]
#[command(
    name = "eagpsim",
    version,
    about = "Energy-aware gossip simulator for wireless sensor networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario across protocols and seeds, writing result CSVs
    Run(RunArgs),
    /// Write the bundled scenario files into a directory
    Presets {
        /// Target directory
        #[arg(long, default_value = "presets")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file path, or the name of a bundled preset
    #[arg(long)]
    scenario: String,

    /// Comma-separated protocols: eagp, gossip, gossip_fo, mcfa
    #[arg(long, default_value = "eagp,gossip,gossip_fo,mcfa")]
    protocols: String,

    /// Explicit comma-separated seeds
    #[arg(long, conflicts_with = "num_seeds")]
    seeds: Option<String>,

    /// Run seeds 1 through N
    #[arg(long)]
    num_seeds: Option<u64>,

    /// Override the scenario duration, in seconds
    #[arg(long)]
    duration: Option<f64>,

    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Worker threads
    #[arg(long, default_value_t = 1)]
    workers: usize,

    /// Write per-event trace logs (large)
    #[arg(long)]
    trace: bool,
}

type Failure = (i32, String);

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code as u8)
        }
    }
}

fn real_main() -> Result<(), Failure> {
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Presets { out } => dump_presets(&out),
    }
}

fn dump_presets(dir: &PathBuf) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| (1, format!("cannot create {}: {e}", dir.display())))?;
    for (name, text) in PRESETS {
        let path = dir.join(format!("{name}.cfg"));
        std::fs::write(&path, text).map_err(|e| (1, format!("cannot write {}: {e}", path.display())))?;
        println!("{}", path.display());
    }
    Ok(())
}

fn load_scenario_text(spec: &str) -> Result<String, Failure> {
    match std::fs::read_to_string(spec) {
        Ok(text) => Ok(text),
        Err(io) if io.kind() == std::io::ErrorKind::NotFound => {
            preset(spec).map(str::to_string).ok_or_else(|| {
                (2, format!("`{spec}` is neither a readable file nor a bundled preset"))
            })
        }
        Err(io) => Err((2, format!("cannot read {spec}: {io}"))),
    }
}

fn parse_protocols(text: &str) -> Result<Vec<ProtocolId>, Failure> {
    let protocols: Vec<ProtocolId> = text
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.parse::<ProtocolId>().map_err(|e| (2, e)))
        .collect::<Result<_, _>>()?;
    if protocols.is_empty() {
        return Err((2, "no protocols selected".into()));
    }
    Ok(protocols)
}

fn parse_seed_list(text: &str, what: &str) -> Result<Vec<u64>, Failure> {
    let seeds: Vec<u64> = text
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<u64>().map_err(|_| (2, format!("bad seed `{s}` in {what}"))))
        .collect::<Result<_, _>>()?;
    if seeds.is_empty() {
        return Err((2, format!("{what} lists no seeds")));
    }
    let mut seen = BTreeSet::new();
    Ok(seeds.into_iter().filter(|s| seen.insert(*s)).collect())
}

/// Seed precedence: EAGPSIM_SEED env, --seeds, --num-seeds, the scenario's
/// sim.seeds, then seeds 1 through 5.
fn resolve_seeds(args: &RunArgs, from_config: Option<&Vec<u64>>) -> Result<Vec<u64>, Failure> {
    if let Ok(env) = std::env::var("EAGPSIM_SEED") {
        return parse_seed_list(&env, "EAGPSIM_SEED");
    }
    if let Some(list) = &args.seeds {
        return parse_seed_list(list, "--seeds");
    }
    if let Some(n) = args.num_seeds {
        if n == 0 {
            return Err((2, "--num-seeds must be at least 1".into()));
        }
        return Ok((1..=n).collect());
    }
    if let Some(seeds) = from_config {
        return Ok(seeds.clone());
    }
    Ok((1..=5).collect())
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let text = load_scenario_text(&args.scenario)?;
    let mut resolved = parse_scenario(&text).map_err(|e| (e.exit_code(), e.to_string()))?;
    if let Some(duration) = args.duration {
        if duration <= 0.0 || !duration.is_finite() {
            return Err((2, "--duration must be positive".into()));
        }
        resolved.duration_s = duration;
    }
    let protocols = parse_protocols(&args.protocols)?;
    let seeds = resolve_seeds(&args, resolved.seeds.as_ref())?;
    if args.workers == 0 {
        return Err((2, "--workers must be at least 1".into()));
    }

    let plan = Plan { resolved, protocols, seeds, workers: args.workers, trace: args.trace };
    let out = execute_plan(&plan).map_err(|e| (e.exit_code(), e.to_string()))?;

    write_outputs(&args.out, &plan, &out)
        .map_err(|e| (1, format!("cannot write results to {}: {e}", args.out.display())))?;

    for r in &out.records {
        let m = &r.report;
        let efficiency = m
            .efficiency_j_per_pkt
            .map(|j| format!("{:.4} J/pkt", j))
            .unwrap_or_else(|| "n/a".into());
        println!(
            "{:<9} seed {:<3} delivery {:6.2}%  redundancy {:5.2}  energy {:8.3} J  {}",
            r.protocol.to_string(),
            r.seed,
            m.delivery_rate_pct,
            m.redundancy,
            m.total_energy_j,
            efficiency
        );
    }
    println!("results written to {}", args.out.display());
    Ok(())
}
