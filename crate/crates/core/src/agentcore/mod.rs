//! The autonomous agent.
//!
//! Each agent owns a [`Belief`] grown from its own percepts and from the
//! percepts its teammates share on `team.percepts`. Every step it integrates
//! what it sees, shares it, drains teammates' shares up to a deadline, takes
//! part in any pending goal auction, picks an [`Action`] with a fixed
//! priority policy and sends it to the simulator.

mod belief;
mod control;
pub mod link;
mod percept;
mod policy;

use std::fmt;
use std::str::FromStr;

use crate::worldgraph::VertexId;
use crate::{AgentId, TeamId};

pub use belief::{Attack, Belief, Integrated, Sighting, ThreatRecord};
pub use control::{run_agent, AgentConfig, AgentError, AgentReport, StepObserver};
pub use percept::{decode_percept, encode_percept, Percept, PerceptError, SeenAgent, SelfState};
pub use policy::{candidate_goals, decide, goal_done, hunt_goal, parry_policy, PolicyConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Explorer,
    Saboteur,
    Sentinel,
    Repairer,
}

impl Role {
    pub const ALL: [Role; 4] = [Role::Explorer, Role::Saboteur, Role::Sentinel, Role::Repairer];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Explorer => "explorer",
            Role::Saboteur => "saboteur",
            Role::Sentinel => "sentinel",
            Role::Repairer => "repairer",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Role::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown role {s:?} (expected explorer, saboteur, sentinel or repairer)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ActionResult {
    Ok,
    Failed,
}

impl ActionResult {
    pub fn as_str(self) -> &'static str {
        match self {
            ActionResult::Ok => "ok",
            ActionResult::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Action {
    Goto(VertexId),
    Probe,
    Survey,
    Attack(AgentId),
    Parry,
    Recharge,
    Noop,
}

impl Action {
    /// Single-token form used in replay files: `goto:5`, `attack:b2`, `probe`.
    pub fn compact(&self) -> String {
        match self {
            Action::Goto(v) => format!("goto:{v}"),
            Action::Attack(a) => format!("attack:{a}"),
            other => other.to_string(),
        }
    }

    pub fn parse_compact(s: &str) -> Result<Self, String> {
        s.replacen(':', " ", 1).parse()
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Goto(v) => write!(f, "goto {v}"),
            Action::Probe => f.write_str("probe"),
            Action::Survey => f.write_str("survey"),
            Action::Attack(a) => write!(f, "attack {a}"),
            Action::Parry => f.write_str("parry"),
            Action::Recharge => f.write_str("recharge"),
            Action::Noop => f.write_str("noop"),
        }
    }
}

impl FromStr for Action {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut words = s.split(' ');
        let action = match (words.next(), words.next()) {
            (Some("goto"), Some(v)) => Action::Goto(v.parse().map_err(|_| format!("bad vertex {v:?}"))?),
            (Some("attack"), Some(a)) => Action::Attack(AgentId::new(a).map_err(|e| e.to_string())?),
            (Some("probe"), None) => Action::Probe,
            (Some("survey"), None) => Action::Survey,
            (Some("parry"), None) => Action::Parry,
            (Some("recharge"), None) => Action::Recharge,
            (Some("noop"), None) => Action::Noop,
            _ => return Err(format!("unknown action {s:?}")),
        };
        if words.next().is_some() {
            return Err(format!("trailing words in action {s:?}"));
        }
        Ok(action)
    }
}

/// Energy prices of actions. Moving costs the edge weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Costs {
    pub probe: u32,
    pub survey: u32,
    pub attack: u32,
    pub parry: u32,
    /// Energy restored by one recharge.
    pub recharge: u32,
}

impl Default for Costs {
    fn default() -> Self {
        Self { probe: 1, survey: 1, attack: 2, parry: 2, recharge: 3 }
    }
}

/// A teammate as announced by the simulator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Teammate {
    pub id: AgentId,
    pub role: Role,
}

/// Team name plus the connected members, the receiving agent included.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Roster {
    pub team: TeamId,
    pub members: Vec<Teammate>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn action_text_forms() {
        let all = [
            Action::Goto(12),
            Action::Probe,
            Action::Survey,
            Action::Attack(AgentId::new("b2").unwrap()),
            Action::Parry,
            Action::Recharge,
            Action::Noop,
        ];
        for a in all {
            assert_eq!(a.to_string().parse::<Action>().unwrap(), a);
            assert_eq!(Action::parse_compact(&a.compact()).unwrap(), a);
        }
        assert_eq!(Action::Goto(3).compact(), "goto:3");
        for bad in ["", "goto", "goto x", "probe 1", "fly", "attack B"] {
            assert!(bad.parse::<Action>().is_err(), "{bad}");
        }
    }

    #[test]
    fn roles_parse() {
        for r in Role::ALL {
            assert_eq!(r.as_str().parse::<Role>(), Ok(r));
        }
        assert!("pilot".parse::<Role>().is_err());
    }
}
