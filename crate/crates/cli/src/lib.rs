//! Library side of the `marsring` binary: config files, the APSP benchmark
//! and the subcommand bodies.

pub mod bench;
pub mod config;

use std::fs;
use std::net::{SocketAddr, TcpListener, ToSocketAddrs};
use std::path::Path;
use std::thread;
use std::time::{Duration, Instant};

use anyhow::{anyhow, bail, Context, Result};
use log::info;
use marsring_core::agentcore::link::TcpLink;
use marsring_core::agentcore::{run_agent, AgentConfig, AgentReport, PolicyConfig, Role};
use marsring_core::marssim::{
    accept_agents, play, run_match, ArenaOptions, MatchConfig, MatchResult, Replay, ServeOptions, Transport,
};
use marsring_core::msgbus::{Broker, BusConfig, BusConnector, TcpConnector};
use marsring_core::AgentId;

pub const CONNECT_PATIENCE: Duration = Duration::from_secs(10);

pub fn resolve(addr: &str) -> Result<SocketAddr> {
    addr.to_socket_addrs()
        .with_context(|| format!("bad address {addr:?}"))?
        .next()
        .ok_or_else(|| anyhow!("address {addr:?} resolves to nothing"))
}

/// Loads `path`, applying a seed override.
pub fn load_config(path: &Path, seed: Option<u64>) -> Result<MatchConfig> {
    let mut config = config::load(path)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    Ok(config)
}

fn write_replay(result: &MatchResult, path: &Path) -> Result<()> {
    fs::write(path, result.replay.encode()).with_context(|| format!("cannot write replay {}", path.display()))
}

/// Plays a whole match in this process and writes its replay.
pub fn cmd_match(config: &MatchConfig, transport: Transport, replay: &Path) -> Result<MatchResult> {
    let played = play(config, transport, &ArenaOptions::default())?;
    for (id, report) in &played.reports {
        if let Err(e) = report {
            bail!("agent {id} failed: {e}");
        }
    }
    write_replay(&played.result, replay)?;
    Ok(played.result)
}

/// Runs only the simulator: waits on `port` for every non-idle agent.
pub fn cmd_sim(config: &MatchConfig, port: u16, replay: &Path) -> Result<MatchResult> {
    let setup = config.setup()?;
    let listener = TcpListener::bind(("127.0.0.1", port)).with_context(|| format!("cannot listen on port {port}"))?;
    info!("simulator on {}, waiting for {} agents", listener.local_addr()?, setup.active.len());
    let opts = ServeOptions { hello_timeout: Duration::from_secs(60), ..ServeOptions::default() };
    let links = accept_agents(&listener, setup.active.len(), opts.hello_timeout)?;
    let result = run_match(&setup, links, &opts)?;
    write_replay(&result, replay)?;
    Ok(result)
}

pub fn cmd_broker(port: u16) -> Result<()> {
    let broker = Broker::bind(("127.0.0.1", port), BusConfig::default())
        .with_context(|| format!("cannot listen on port {port}"))?;
    println!("broker listening on {}", broker.local_addr());
    broker.wait();
    Ok(())
}

pub struct AgentArgs<'a> {
    pub id: &'a str,
    pub role: Role,
    pub broker: &'a str,
    pub sim: &'a str,
    pub deadline: Duration,
    pub parry: bool,
}

/// Retries `f` every 100 ms until it succeeds or `patience` runs out.
fn retry<T, E>(patience: Duration, mut f: impl FnMut() -> Result<T, E>) -> Result<T, E> {
    let start = Instant::now();
    loop {
        match f() {
            Err(_) if start.elapsed() < patience => thread::sleep(Duration::from_millis(100)),
            other => return other,
        }
    }
}

/// Joins the broker and the simulator, waiting up to `CONNECT_PATIENCE` for
/// either to come up.
pub fn cmd_agent(args: &AgentArgs) -> Result<AgentReport> {
    let id = AgentId::new(args.id).map_err(|e| anyhow!("agent id {:?}: {e}", args.id))?;
    let bus = TcpConnector::new(resolve(args.broker)?);
    let mut client = retry(CONNECT_PATIENCE, || bus.connect(id.as_str()))
        .with_context(|| format!("cannot join broker {}", args.broker))?;
    let sim = resolve(args.sim)?;
    let mut link = retry(CONNECT_PATIENCE, || TcpLink::connect(sim))
        .with_context(|| format!("cannot reach simulator {}", args.sim))?;
    let mut cfg = AgentConfig::new(id, args.deadline);
    cfg.policy = PolicyConfig { parry: args.parry, ..PolicyConfig::default() };
    info!("{} playing as {}", args.id, args.role);
    Ok(run_agent(&cfg, client.as_mut(), &mut link, None)?)
}

/// Re-scores a replay file. Parse errors carry the line number, mismatches
/// the step.
pub fn cmd_replay_check(path: &Path) -> Result<Replay> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read replay {}", path.display()))?;
    let replay = Replay::parse(&text).with_context(|| format!("{}", path.display()))?;
    replay.check().with_context(|| format!("{}: mismatch", path.display()))?;
    Ok(replay)
}
