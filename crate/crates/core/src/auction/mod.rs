//! Ring auction assigning `n` agents to `n` distinct goals.
//!
//! A token circulates the ring once per round, so every round costs exactly
//! `n` messages. Each agent that is still unassigned bids on its best goal
//! that nobody holds yet; when the token is back at the initiator every
//! standing bid becomes a permanent assignment. Every round fixes at least one
//! agent, so an auction ends after at most `n` rounds and `n²` messages.
//!
//! The pure state machine lives in [`Participant`]; [`participate`] drives it
//! over a [`BusClient`](crate::msgbus::BusClient) and [`run_auction`] runs a
//! whole ring, one thread per agent.

mod announce;
mod driver;
mod protocol;
mod token;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::msgbus::BusError;
use crate::worldgraph::{DistanceIndex, VertexId, WorldGraph};
use crate::AgentId;

pub use announce::{decode_goals, encode_goals, Announcement};
pub use driver::{participate, run_auction, AuctionConfig, AuctionOutcome};
pub use protocol::{simulate, Hand, Participant};
pub use token::{decode_token, encode_token, AuctionToken, TokenError};

pub type GoalId = u32;

/// Score given to goals the agent cannot reach.
pub const UNREACHABLE_SCORE: i64 = i64::MIN;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GoalKind {
    Probe,
    Occupy,
    Repair,
    Hunt,
}

impl GoalKind {
    pub const ALL: [GoalKind; 4] = [GoalKind::Probe, GoalKind::Occupy, GoalKind::Repair, GoalKind::Hunt];

    pub fn as_str(self) -> &'static str {
        match self {
            GoalKind::Probe => "probe",
            GoalKind::Occupy => "occupy",
            GoalKind::Repair => "repair",
            GoalKind::Hunt => "hunt",
        }
    }

    fn index(self) -> u32 {
        self as u32
    }
}

impl fmt::Display for GoalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GoalKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GoalKind::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| format!("unknown goal kind {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Goal {
    pub id: GoalId,
    pub target: VertexId,
    pub kind: GoalKind,
}

impl Goal {
    /// Goal with the conventional id `target * 4 + kind`, unique per
    /// (target, kind) pair.
    pub fn at(target: VertexId, kind: GoalKind) -> Self {
        Self { id: target * 4 + kind.index(), target, kind }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScoredGoal {
    pub goal: GoalId,
    pub score: i64,
}

/// Canonical table order: score descending, then goal id ascending.
pub fn sort_table(table: &mut [ScoredGoal]) {
    table.sort_by(|a, b| b.score.cmp(&a.score).then(a.goal.cmp(&b.goal)));
}

/// Base worth of a goal before travel cost.
pub fn goal_worth(graph: &WorldGraph, goal: &Goal) -> i64 {
    let value = graph.value(goal.target).flatten();
    match goal.kind {
        GoalKind::Probe => value.map_or(1, i64::from),
        GoalKind::Occupy => value.map_or(0, i64::from),
        GoalKind::Repair => 10,
        GoalKind::Hunt => 5,
    }
}

/// Worth minus distance from `position` for every goal, best first, cut to
/// the top `n`.
pub fn score_goals(
    graph: &WorldGraph,
    index: &DistanceIndex,
    position: VertexId,
    goals: &[Goal],
    n: usize,
) -> Vec<ScoredGoal> {
    let mut table: Vec<ScoredGoal> = goals
        .iter()
        .map(|goal| {
            let dist = index.dist(position, goal.target).ok().flatten();
            let score = match dist {
                Some(d) => goal_worth(graph, goal) - d as i64,
                None => UNREACHABLE_SCORE,
            };
            ScoredGoal { goal: goal.id, score }
        })
        .collect();
    sort_table(&mut table);
    table.truncate(n);
    table
}

/// Cyclic order of the agents taking part. The first agent initiates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RingTopology {
    agents: Vec<AgentId>,
}

impl RingTopology {
    pub fn new(agents: Vec<AgentId>) -> Result<Self, AuctionError> {
        if agents.is_empty() {
            return Err(AuctionError::EmptyRing);
        }
        let mut seen = BTreeSet::new();
        for a in &agents {
            if !seen.insert(a) {
                return Err(AuctionError::DuplicateAgent(a.clone()));
            }
        }
        Ok(Self { agents })
    }

    /// Ring in ascending id order.
    pub fn sorted(mut agents: Vec<AgentId>) -> Result<Self, AuctionError> {
        agents.sort();
        Self::new(agents)
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn agents(&self) -> &[AgentId] {
        &self.agents
    }

    pub fn initiator(&self) -> &AgentId {
        &self.agents[0]
    }

    pub fn position(&self, agent: &AgentId) -> Option<usize> {
        self.agents.iter().position(|a| a == agent)
    }

    pub fn successor(&self, agent: &AgentId) -> Option<&AgentId> {
        self.position(agent).map(|i| &self.agents[(i + 1) % self.agents.len()])
    }

    pub fn contains(&self, agent: &AgentId) -> bool {
        self.position(agent).is_some()
    }
}

#[derive(Debug, Error)]
pub enum AuctionError {
    #[error("auction needs at least {agents} goals, got {goals}")]
    TooFewGoals { goals: usize, agents: usize },
    #[error("goal {0} listed twice")]
    DuplicateGoal(GoalId),
    #[error("ring is empty")]
    EmptyRing,
    #[error("agent {0} appears twice in the ring")]
    DuplicateAgent(AgentId),
    #[error("agent {0} is not in the ring")]
    NotInRing(AgentId),
    #[error("no score table for agent {0}")]
    MissingTable(AgentId),
    #[error("score table of {agent} ranks only {len} known goals, ring has {n} agents")]
    ShortTable { agent: AgentId, len: usize, n: usize },
    #[error("auction {0} timed out")]
    Timeout(u64),
    #[error("agent {agent} was dropped from auction {auction}")]
    Excluded { agent: AgentId, auction: u64 },
    #[error("unexpected token: {0}")]
    Unexpected(String),
    #[error(transparent)]
    Token(#[from] TokenError),
    #[error(transparent)]
    Bus(#[from] BusError),
}
