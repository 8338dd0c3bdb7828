use std::io;
use std::net::TcpListener;
use std::sync::Arc;
use std::thread;

use log::warn;
use thiserror::Error;

use super::{accept_agents, run_match, ConfigError, MatchConfig, MatchError, MatchResult, ServeOptions};
use crate::agentcore::link::{channel_pair, LineLink, TcpLink};
use crate::agentcore::{run_agent, AgentConfig, AgentError, AgentReport, PolicyConfig, StepObserver};
use crate::msgbus::{Broker, BusClient, BusConfig, BusConnector, BusError, InProcBus};
use crate::AgentId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transport {
    InProc,
    Tcp,
}

impl std::str::FromStr for Transport {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "inproc" => Ok(Transport::InProc),
            "tcp" => Ok(Transport::Tcp),
            _ => Err(format!("unknown transport {s:?} (expected tcp or inproc)")),
        }
    }
}

#[derive(Clone, Default)]
pub struct ArenaOptions {
    pub serve: ServeOptions,
    pub observer: Option<Arc<dyn StepObserver>>,
    /// Share of the step duration an agent spends draining and
    /// coordinating. Defaults to 0.8.
    pub agent_share: Option<f64>,
}

#[derive(Debug, Error)]
pub enum ArenaError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error(transparent)]
    Bus(#[from] BusError),
    #[error("network setup: {0}")]
    Io(#[from] io::Error),
}

pub struct Played {
    pub result: MatchResult,
    pub reports: Vec<(AgentId, Result<AgentReport, AgentError>)>,
}

/// Agent settings for `agent` as configured in `config`.
pub fn agent_config(config: &MatchConfig, agent: &AgentId, share: f64) -> AgentConfig {
    let deadline = config.step_duration.mul_f64(share);
    let mut cfg = AgentConfig::new(agent.clone(), deadline);
    let parry = config.team_of(agent).is_none_or(|(_, team)| team.parry);
    cfg.policy = PolicyConfig { parry, costs: config.rules.costs, ..PolicyConfig::default() };
    cfg
}

/// Plays `config` with simulator, buses and every non-idle agent inside
/// this process. Each team gets its own bus.
pub fn play(config: &MatchConfig, transport: Transport, opts: &ArenaOptions) -> Result<Played, ArenaError> {
    let setup = config.setup()?;
    let share = opts.agent_share.unwrap_or(0.8);
    let mut seats: Vec<(AgentId, usize)> = Vec::new();
    for (team, spec) in config.teams.iter().enumerate() {
        seats.extend(spec.agents.iter().filter(|a| !a.idle).map(|a| (a.id.clone(), team)));
    }

    let connectors: Vec<Box<dyn BusConnector>>;
    let mut brokers = Vec::new();
    let listener;
    match transport {
        Transport::InProc => {
            connectors = vec![Box::new(InProcBus::new()), Box::new(InProcBus::new())];
            listener = None;
        }
        Transport::Tcp => {
            for _ in 0..2 {
                brokers.push(Broker::bind("127.0.0.1:0", BusConfig::default())?);
            }
            connectors = brokers.iter().map(|b| Box::new(b.connector()) as Box<dyn BusConnector>).collect();
            listener = Some(TcpListener::bind("127.0.0.1:0")?);
        }
    }

    let mut clients: Vec<Box<dyn BusClient>> = Vec::new();
    for (id, team) in &seats {
        clients.push(connectors[*team].connect(id.as_str())?);
    }
    let mut agent_links: Vec<Box<dyn LineLink>> = Vec::new();
    let mut sim_links: Vec<Box<dyn LineLink>> = Vec::new();
    if listener.is_none() {
        for _ in &seats {
            let (agent_end, sim_end) = channel_pair();
            agent_links.push(Box::new(agent_end));
            sim_links.push(Box::new(sim_end));
        }
    }
    let sim_addr = listener.as_ref().map(|l| l.local_addr()).transpose()?;

    let observer = opts.observer.as_deref();
    let outcome = thread::scope(|scope| {
        let mut handles = Vec::new();
        let mut agent_links = agent_links.into_iter();
        for ((id, _), mut client) in seats.iter().zip(clients) {
            let cfg = agent_config(config, id, share);
            let link = agent_links.next();
            handles.push((
                id.clone(),
                scope.spawn(move || {
                    let mut link: Box<dyn LineLink> = match link {
                        Some(link) => link,
                        None => Box::new(TcpLink::connect(sim_addr.expect("tcp transport"))?),
                    };
                    run_agent(&cfg, client.as_mut(), link.as_mut(), observer)
                }),
            ));
        }
        let served = match &listener {
            Some(l) => accept_agents(l, seats.len(), opts.serve.hello_timeout)
                .map_err(MatchError::from)
                .and_then(|links| run_match(&setup, links, &opts.serve)),
            None => run_match(&setup, sim_links, &opts.serve),
        };
        let reports: Vec<_> = handles
            .into_iter()
            .map(|(id, h)| {
                let report = h.join().expect("agent thread panicked");
                if let Err(e) = &report {
                    warn!("{id}: {e}");
                }
                (id, report)
            })
            .collect();
        (served, reports)
    });
    for broker in &mut brokers {
        broker.shutdown();
    }
    let (served, reports) = outcome;
    Ok(Played { result: served?, reports })
}
