//! A two-team, turn-based graph world.
//!
//! The simulator owns the true [`MatchState`]. Each step it sends every
//! connected agent a local percept, waits for their actions up to the step
//! duration, resolves them simultaneously and accrues score: a one-time
//! bonus for the first probe of a vertex plus, every step, the value of each
//! vertex the team has probed and currently occupies.

mod arena;
mod engine;
mod replay;
mod server;
mod world;

use std::collections::BTreeSet;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::agentcore::Role;
use crate::worldgraph::WorldGraph;
use crate::{AgentId, TeamId};

pub use arena::{agent_config, play, ArenaError, ArenaOptions, Played, Transport};
pub use engine::{AgentState, MatchState, Placement, Rules, StepGain};
pub use replay::{Replay, ReplayError, ReplayMismatch, StepRecord};
pub use server::{accept_agents, run_match, MatchError, MatchResult, ServeOptions};
pub use world::{generate_world, WorldError, WorldParams};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentSpec {
    pub id: AgentId,
    pub role: Role,
    /// Idle agents never connect; the simulator plays `noop` for them.
    pub idle: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TeamSpec {
    pub name: TeamId,
    pub agents: Vec<AgentSpec>,
    /// Whether this team's agents may parry.
    pub parry: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum WorldSource {
    Generated(WorldParams),
    Fixed(WorldGraph),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchConfig {
    pub world: WorldSource,
    pub teams: [TeamSpec; 2],
    pub steps: u64,
    /// Longest the simulator waits for a step's actions.
    pub step_duration: Duration,
    pub rules: Rules,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("teams have different sizes ({0} vs {1})")]
    UnevenTeams(usize, usize),
    #[error("both teams are named {0}")]
    SameTeamName(TeamId),
    #[error("agent id {0} is used twice")]
    DuplicateAgent(AgentId),
    #[error("team {0} has no agents")]
    EmptyTeam(TeamId),
    #[error("the world has no vertices")]
    EmptyWorld,
    #[error(transparent)]
    World(#[from] WorldError),
}

/// Everything a match needs once the seed has been applied.
#[derive(Debug, Clone, PartialEq)]
pub struct Setup {
    pub seed: u64,
    pub steps: u64,
    pub step_duration: Duration,
    pub rules: Rules,
    pub graph: WorldGraph,
    pub teams: [TeamId; 2],
    pub placements: Vec<Placement>,
    /// Agents that are expected to connect.
    pub active: BTreeSet<AgentId>,
}

impl Setup {
    pub fn initial_state(&self) -> MatchState {
        MatchState::new(self.graph.clone(), self.teams.clone(), &self.placements, self.rules)
    }

    /// Connected members of `team` with their roles.
    pub fn roster(&self, team: usize) -> Vec<(AgentId, Role)> {
        self.placements
            .iter()
            .filter(|p| p.team == team && self.active.contains(&p.id))
            .map(|p| (p.id.clone(), p.role))
            .collect()
    }
}

impl MatchConfig {
    /// Checks the team layout, builds the world and draws start vertices,
    /// all from `self.seed`.
    pub fn setup(&self) -> Result<Setup, ConfigError> {
        let [a, b] = &self.teams;
        if a.agents.len() != b.agents.len() {
            return Err(ConfigError::UnevenTeams(a.agents.len(), b.agents.len()));
        }
        if a.name == b.name {
            return Err(ConfigError::SameTeamName(a.name.clone()));
        }
        for team in &self.teams {
            if team.agents.is_empty() {
                return Err(ConfigError::EmptyTeam(team.name.clone()));
            }
        }
        let mut seen = BTreeSet::new();
        for agent in a.agents.iter().chain(&b.agents) {
            if !seen.insert(agent.id.clone()) {
                return Err(ConfigError::DuplicateAgent(agent.id.clone()));
            }
        }

        let graph = match &self.world {
            WorldSource::Generated(params) => generate_world(params, self.seed)?,
            WorldSource::Fixed(graph) => graph.clone(),
        };
        let vertices: Vec<_> = graph.vertex_ids().collect();
        if vertices.is_empty() {
            return Err(ConfigError::EmptyWorld);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(1);
        let mut placements = Vec::new();
        let mut active = BTreeSet::new();
        for (team, spec) in self.teams.iter().enumerate() {
            for agent in &spec.agents {
                placements.push(Placement {
                    id: agent.id.clone(),
                    team,
                    role: agent.role,
                    start: vertices[rng.gen_range(0..vertices.len())],
                });
                if !agent.idle {
                    active.insert(agent.id.clone());
                }
            }
        }
        Ok(Setup {
            seed: self.seed,
            steps: self.steps,
            step_duration: self.step_duration,
            rules: self.rules,
            graph,
            teams: [a.name.clone(), b.name.clone()],
            placements,
            active,
        })
    }

    /// Team index and spec of `agent`.
    pub fn team_of(&self, agent: &AgentId) -> Option<(usize, &TeamSpec)> {
        self.teams.iter().enumerate().find(|(_, t)| t.agents.iter().any(|a| a.id == *agent))
    }
}
