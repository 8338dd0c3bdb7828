use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};
use marsring::{bench, cmd_agent, cmd_broker, cmd_match, cmd_replay_check, cmd_sim, load_config, AgentArgs};
use marsring_core::agentcore::Role;
use marsring_core::marssim::{MatchResult, Transport};

#[derive(Parser)]
#[command(name = "marsring", version, about = "Graph-world agent teams over a message bus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a message broker until killed.
    Broker {
        #[arg(long, default_value_t = 7400)]
        port: u16,
    },
    /// Run one agent against a broker and a simulator.
    Agent {
        #[arg(long)]
        id: String,
        #[arg(long)]
        role: Role,
        #[arg(long, value_name = "HOST:PORT")]
        broker: String,
        #[arg(long, value_name = "HOST:PORT")]
        sim: String,
        /// Per-step budget for sharing and coordination.
        #[arg(long, default_value_t = 800)]
        deadline_ms: u64,
        #[arg(long)]
        no_parry: bool,
    },
    /// Run only the simulator, waiting for agents over TCP.
    Sim {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 7500)]
        port: u16,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "match.replay")]
        replay: PathBuf,
    },
    /// Play a full match in this process.
    Match {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "inproc", value_parser = ["inproc", "tcp"])]
        transport: String,
        #[arg(long, default_value = "match.replay")]
        replay: PathBuf,
    },
    /// Compare incremental index insertion, full rebuild and per-step search.
    BenchApsp {
        #[arg(long, value_delimiter = ',', default_value = "16,32,64")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Re-score a replay file against its recorded scores.
    ReplayCheck { path: PathBuf },
}

fn print_scores(result: &MatchResult) {
    let [a, b] = result.scores;
    println!("final scores: {a} {b}");
    if result.missed > 0 {
        println!("missed actions: {}", result.missed);
    }
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Broker { port } => cmd_broker(port)?,
        Command::Agent { id, role, broker, sim, deadline_ms, no_parry } => {
            let report = cmd_agent(&AgentArgs {
                id: &id,
                role,
                broker: &broker,
                sim: &sim,
                deadline: Duration::from_millis(deadline_ms),
                parry: !no_parry,
            })?;
            match report.final_scores {
                Some((a, b)) => println!("{id}: {} steps, final scores: {a} {b}", report.steps),
                None => println!("{id}: {} steps, simulator closed early", report.steps),
            }
        }
        Command::Sim { config, port, seed, replay } => {
            let config = load_config(&config, seed)?;
            print_scores(&cmd_sim(&config, port, &replay)?);
        }
        Command::Match { config, seed, transport, replay } => {
            let config = load_config(&config, seed)?;
            let transport: Transport = transport.parse().map_err(anyhow::Error::msg)?;
            print_scores(&cmd_match(&config, transport, &replay)?);
        }
        Command::BenchApsp { sizes, trials, seed } => {
            print!("{}", bench::render(&bench::run(&sizes, trials, seed)?));
        }
        Command::ReplayCheck { path } => {
            let replay = cmd_replay_check(&path)?;
            let [a, b] = replay.final_scores();
            println!("OK: {} steps, final scores {a} {b}", replay.steps);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MARSRING_LOG", "warn")).init();
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
