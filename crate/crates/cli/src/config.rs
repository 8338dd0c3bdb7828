//! Match configuration files.
//!
//! ```text
//! # comment
//! seed = 7
//! steps = 20
//! step_ms = 1000
//!
//! [world]
//! vertices = 10
//! density = 0.3
//! max_value = 10
//! max_weight = 10
//! # or: file = worlds/ring.graph  (relative to the config file)
//!
//! [rules]
//! max_energy = 10
//! max_health = 3
//!
//! [costs]
//! probe = 1
//! survey = 1
//! attack = 2
//! parry = 2
//! recharge = 3
//!
//! [team.red]
//! parry = on
//! r1 = explorer
//! r2 = saboteur idle
//!
//! [team.blue]
//! b1 = explorer
//! b2 = explorer idle
//! ```
//!
//! Exactly two `[team.<name>]` sections are required; other keys are optional.

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use marsring_core::agentcore::Role;
use marsring_core::marssim::{AgentSpec, MatchConfig, Rules, TeamSpec, WorldParams, WorldSource};
use marsring_core::worldgraph::parse_graph;
use marsring_core::{AgentId, TeamId};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigFileError {
    #[error("cannot read config {path}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Syntax { path: PathBuf, line: usize, message: String },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
}

enum Section {
    Top,
    World,
    Rules,
    Costs,
    Team(usize),
}

struct Parser<'a> {
    path: &'a Path,
    line: usize,
}

impl Parser<'_> {
    fn fail(&self, message: impl Into<String>) -> ConfigFileError {
        ConfigFileError::Syntax { path: self.path.to_path_buf(), line: self.line, message: message.into() }
    }

    fn value<T: FromStr>(&self, key: &str, raw: &str) -> Result<T, ConfigFileError> {
        raw.parse().map_err(|_| self.fail(format!("bad value {raw:?} for `{key}`")))
    }

    fn switch(&self, key: &str, raw: &str) -> Result<bool, ConfigFileError> {
        match raw {
            "on" | "true" | "yes" => Ok(true),
            "off" | "false" | "no" => Ok(false),
            _ => Err(self.fail(format!("bad value {raw:?} for `{key}` (expected on or off)"))),
        }
    }
}

pub fn load(path: &Path) -> Result<MatchConfig, ConfigFileError> {
    let text =
        std::fs::read_to_string(path).map_err(|source| ConfigFileError::Read { path: path.to_path_buf(), source })?;
    parse(&text, path)
}

/// Parses config text; `path` names the file in errors and anchors relative
/// world files.
pub fn parse(text: &str, path: &Path) -> Result<MatchConfig, ConfigFileError> {
    let mut p = Parser { path, line: 0 };
    let mut seed = 0;
    let mut steps = 100;
    let mut step_ms = 1000u64;
    let mut params = WorldParams::default();
    let mut world_file: Option<PathBuf> = None;
    let mut rules = Rules::default();
    let mut teams: Vec<TeamSpec> = Vec::new();
    let mut section = Section::Top;

    for (i, raw) in text.lines().enumerate() {
        p.line = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = match name.trim() {
                "world" => Section::World,
                "rules" => Section::Rules,
                "costs" => Section::Costs,
                other => {
                    let Some(team) = other.strip_prefix("team.") else {
                        return Err(p.fail(format!("unknown section [{other}]")));
                    };
                    let name = TeamId::new(team).map_err(|e| p.fail(format!("team name {team:?}: {e}")))?;
                    if teams.iter().any(|t| t.name == name) {
                        return Err(p.fail(format!("team {team} is defined twice")));
                    }
                    if teams.len() == 2 {
                        return Err(p.fail("a match has exactly two teams"));
                    }
                    teams.push(TeamSpec { name, agents: Vec::new(), parry: true });
                    Section::Team(teams.len() - 1)
                }
            };
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(p.fail(format!("expected `key = value`, got {line:?}")));
        };
        let (key, value) = (key.trim(), value.trim());
        match (&section, key) {
            (Section::Top, "seed") => seed = p.value(key, value)?,
            (Section::Top, "steps") => steps = p.value(key, value)?,
            (Section::Top, "step_ms") => step_ms = p.value(key, value)?,
            (Section::World, "vertices") => params.vertices = p.value(key, value)?,
            (Section::World, "density") => params.density = p.value(key, value)?,
            (Section::World, "max_value") => params.max_value = p.value(key, value)?,
            (Section::World, "max_weight") => params.max_weight = p.value(key, value)?,
            (Section::World, "file") => {
                world_file = Some(path.parent().unwrap_or(Path::new(".")).join(value));
            }
            (Section::Rules, "max_energy") => rules.max_energy = p.value(key, value)?,
            (Section::Rules, "max_health") => rules.max_health = p.value(key, value)?,
            (Section::Costs, "probe") => rules.costs.probe = p.value(key, value)?,
            (Section::Costs, "survey") => rules.costs.survey = p.value(key, value)?,
            (Section::Costs, "attack") => rules.costs.attack = p.value(key, value)?,
            (Section::Costs, "parry") => rules.costs.parry = p.value(key, value)?,
            (Section::Costs, "recharge") => rules.costs.recharge = p.value(key, value)?,
            (Section::Team(t), "parry") => teams[*t].parry = p.switch(key, value)?,
            (Section::Team(t), agent) => {
                let id = AgentId::new(agent).map_err(|e| p.fail(format!("agent id {agent:?}: {e}")))?;
                let mut words = value.split_whitespace();
                let role_word = words.next().ok_or_else(|| p.fail(format!("agent {agent} has no role")))?;
                let role: Role = role_word.parse().map_err(|_| p.fail(format!("unknown role {role_word:?}")))?;
                let idle = match words.next() {
                    None => false,
                    Some("idle") => true,
                    Some(other) => return Err(p.fail(format!("unexpected {other:?} after role (only `idle`)"))),
                };
                teams[*t].agents.push(AgentSpec { id, role, idle });
            }
            (_, key) => return Err(p.fail(format!("unknown key `{key}` here"))),
        }
    }

    let invalid = |message: String| ConfigFileError::Invalid { path: path.to_path_buf(), message };
    let teams: [TeamSpec; 2] = teams
        .try_into()
        .map_err(|got: Vec<TeamSpec>| invalid(format!("need two [team.<name>] sections, found {}", got.len())))?;
    if step_ms == 0 {
        return Err(invalid("`step_ms` must be positive".into()));
    }
    let world = match world_file {
        Some(file) => {
            let text = std::fs::read_to_string(&file)
                .map_err(|e| invalid(format!("cannot read world file {}: {e}", file.display())))?;
            WorldSource::Fixed(parse_graph(&text).map_err(|e| invalid(format!("world file {}: {e}", file.display())))?)
        }
        None => WorldSource::Generated(params),
    };
    let config = MatchConfig { world, teams, steps, step_duration: Duration::from_millis(step_ms), rules, seed };
    config.setup().map_err(|e| invalid(e.to_string()))?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMOKE: &str = "seed = 3\nsteps = 20\n[world]\nvertices = 10\n[team.red]\nr1 = explorer\nr2 = saboteur idle\n\
                         [team.blue]\nparry = off\nb1 = explorer\nb2 = explorer\n";

    fn err(text: &str) -> String {
        parse(text, Path::new("x.cfg")).unwrap_err().to_string()
    }

    #[test]
    fn reads_teams_and_world() {
        let c = parse(SMOKE, Path::new("x.cfg")).unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.steps, 20);
        assert_eq!(c.teams[0].agents[1].role, Role::Saboteur);
        assert!(c.teams[0].agents[1].idle);
        assert!(c.teams[0].parry);
        assert!(!c.teams[1].parry);
        assert!(matches!(c.world, WorldSource::Generated(WorldParams { vertices: 10, .. })));
    }

    #[test]
    fn errors_name_line_and_field() {
        assert_eq!(err("steps = many\n"), "x.cfg:1: bad value \"many\" for `steps`");
        assert_eq!(err("[world]\nsize = 3\n"), "x.cfg:2: unknown key `size` here");
        assert_eq!(err("[team.a]\na1 = pilot\n"), "x.cfg:2: unknown role \"pilot\"");
        assert!(err("[team.a]\na1 = explorer\n").contains("found 1"));
        assert!(err("[world]\ndensity = 2\n[team.a]\na1 = explorer\n[team.b]\nb1 = explorer\n").contains("density"));
    }

    #[test]
    fn missing_file_names_the_path() {
        let e = load(Path::new("/nonexistent/where.cfg")).unwrap_err().to_string();
        assert!(e.contains("/nonexistent/where.cfg"), "{e}");
    }
}
