#![allow(dead_code)]

use std::time::Duration;

use marsring_core::agentcore::Role;
use marsring_core::marssim::{AgentSpec, MatchConfig, Rules, TeamSpec, WorldParams, WorldSource};
use marsring_core::{AgentId, TeamId};

pub fn id(s: &str) -> AgentId {
    AgentId::new(s).unwrap()
}

pub fn team(name: &str, prefix: &str, roles: &[(Role, bool)], parry: bool) -> TeamSpec {
    TeamSpec {
        name: TeamId::new(name).unwrap(),
        agents: roles
            .iter()
            .enumerate()
            .map(|(i, &(role, idle))| AgentSpec { id: id(&format!("{prefix}{}", i + 1)), role, idle })
            .collect(),
        parry,
    }
}

pub fn config(vertices: usize, density: f64, steps: u64, seed: u64, teams: [TeamSpec; 2]) -> MatchConfig {
    MatchConfig {
        world: WorldSource::Generated(WorldParams { vertices, density, ..WorldParams::default() }),
        teams,
        steps,
        step_duration: Duration::from_secs(2),
        rules: Rules::default(),
        seed,
    }
}
