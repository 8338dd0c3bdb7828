//! Replay text format:
//!
//! ```text
//! REPLAY <seed> <steps>
//! teams <team-0> <team-1>
//! rules energy=10 health=3 probe=1 survey=1 attack=2 parry=2 recharge=3
//! vertex <id> <value>              (graph text format)
//! edge <id> <id> <weight>
//! agent <id> <team> <role> <start>
//! S <step> <agent>=<action> ... <score-0> <score-1>
//! ```
//!
//! `S` lines list every agent in id order with the compact action form
//! (`goto:4`, `attack:b1`, `noop`, ...) and the cumulative scores after the
//! step.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::{MatchState, Placement, Rules, Setup};
use crate::agentcore::{Action, Costs};
use crate::worldgraph::{graph_from_records, parse_graph_record, write_graph, WorldGraph};
use crate::{AgentId, TeamId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepRecord {
    pub step: u64,
    pub actions: Vec<(AgentId, Action)>,
    pub scores: [u64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    pub seed: u64,
    pub teams: [TeamId; 2],
    pub rules: Rules,
    pub graph: WorldGraph,
    pub placements: Vec<Placement>,
    pub records: Vec<StepRecord>,
    /// Declared step count; equals `records.len()` for a parsed replay.
    pub steps: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("replay line {line}: {message}")]
pub struct ReplayError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayMismatch {
    #[error("step {step}: recorded scores {recorded:?}, re-simulated {computed:?}")]
    Scores { step: u64, recorded: [u64; 2], computed: [u64; 2] },
    #[error("step {step}: recorded actions differ from the applied ones")]
    Actions { step: u64 },
}

impl ReplayMismatch {
    pub fn step(&self) -> u64 {
        match self {
            ReplayMismatch::Scores { step, .. } | ReplayMismatch::Actions { step } => *step,
        }
    }
}

fn fail(line: usize, message: impl Into<String>) -> ReplayError {
    ReplayError { line, message: message.into() }
}

fn number<T: std::str::FromStr>(line: usize, what: &str, raw: &str) -> Result<T, ReplayError> {
    raw.parse().map_err(|_| fail(line, format!("bad {what} {raw:?}")))
}

impl Replay {
    pub fn new(setup: &Setup, records: Vec<StepRecord>) -> Self {
        Self {
            seed: setup.seed,
            teams: setup.teams.clone(),
            rules: setup.rules,
            graph: setup.graph.clone(),
            placements: setup.placements.clone(),
            steps: records.len() as u64,
            records,
        }
    }

    pub fn initial_state(&self) -> MatchState {
        MatchState::new(self.graph.clone(), self.teams.clone(), &self.placements, self.rules)
    }

    pub fn final_scores(&self) -> [u64; 2] {
        self.records.last().map_or([0, 0], |r| r.scores)
    }

    pub fn encode(&self) -> String {
        let mut out = String::new();
        let r = &self.rules;
        let c = &r.costs;
        let _ = writeln!(out, "REPLAY {} {}", self.seed, self.steps);
        let _ = writeln!(out, "teams {} {}", self.teams[0], self.teams[1]);
        let _ = writeln!(
            out,
            "rules energy={} health={} probe={} survey={} attack={} parry={} recharge={}",
            r.max_energy, r.max_health, c.probe, c.survey, c.attack, c.parry, c.recharge
        );
        out.push_str(&write_graph(&self.graph));
        for p in &self.placements {
            let _ = writeln!(out, "agent {} {} {} {}", p.id, self.teams[p.team], p.role, p.start);
        }
        for rec in &self.records {
            let _ = write!(out, "S {}", rec.step);
            for (id, action) in &rec.actions {
                let _ = write!(out, " {id}={}", action.compact());
            }
            let _ = writeln!(out, " {} {}", rec.scores[0], rec.scores[1]);
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, ReplayError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, header) = lines.next().ok_or_else(|| fail(1, "empty file"))?;
        let head: Vec<&str> = header.split_whitespace().collect();
        let ["REPLAY", seed, steps] = head[..] else {
            return Err(fail(1, format!("expected REPLAY <seed> <steps>, got {header:?}")));
        };
        let seed: u64 = number(1, "seed", seed)?;
        let steps: u64 = number(1, "step count", steps)?;

        let mut teams: Option<[TeamId; 2]> = None;
        let mut rules: Option<Rules> = None;
        let mut graph_records = Vec::new();
        let mut graph: Option<WorldGraph> = None;
        let mut placements = Vec::new();
        let mut records: Vec<StepRecord> = Vec::new();
        let mut last_line = 1;

        for (n, raw) in lines {
            last_line = n;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields[0] {
                "teams" => {
                    let [_, a, b] = fields[..] else {
                        return Err(fail(n, "expected teams <a> <b>"));
                    };
                    let team = |s: &str| TeamId::new(s).map_err(|e| fail(n, e.to_string()));
                    teams = Some([team(a)?, team(b)?]);
                }
                "rules" => rules = Some(parse_rules(n, &fields[1..])?),
                "vertex" | "edge" => {
                    if graph.is_some() {
                        return Err(fail(n, "graph records must precede agents and steps"));
                    }
                    let record = parse_graph_record(line, n).map_err(|e| fail(e.line, e.message))?;
                    graph_records.push((n, record.expect("vertex or edge")));
                }
                "agent" => {
                    let teams = teams.as_ref().ok_or_else(|| fail(n, "agent before teams"))?;
                    if graph.is_none() {
                        graph = Some(graph_from_records(&graph_records).map_err(|e| fail(e.line, e.message))?);
                    }
                    let [_, id, team, role, start] = fields[..] else {
                        return Err(fail(n, "expected agent <id> <team> <role> <start>"));
                    };
                    let team = teams
                        .iter()
                        .position(|t| t.as_str() == team)
                        .ok_or_else(|| fail(n, format!("unknown team {team:?}")))?;
                    let start = number(n, "start vertex", start)?;
                    if !graph.as_ref().expect("built above").contains(start) {
                        return Err(fail(n, format!("start vertex {start} is not in the graph")));
                    }
                    let id = AgentId::new(id).map_err(|e| fail(n, e.to_string()))?;
                    if placements.iter().any(|p: &Placement| p.id == id) {
                        return Err(fail(n, format!("agent {id} listed twice")));
                    }
                    placements.push(Placement { id, team, role: role.parse().map_err(|e| fail(n, e))?, start });
                }
                "S" => {
                    if placements.is_empty() {
                        return Err(fail(n, "step record before agents"));
                    }
                    let rec = parse_step(n, &fields)?;
                    let expected = records.len() as u64 + 1;
                    if rec.step != expected {
                        return Err(fail(n, format!("expected step {expected}, found {}", rec.step)));
                    }
                    records.push(rec);
                }
                other => return Err(fail(n, format!("unknown record {other:?}"))),
            }
        }
        let teams = teams.ok_or_else(|| fail(last_line, "missing teams line"))?;
        let rules = rules.ok_or_else(|| fail(last_line, "missing rules line"))?;
        let graph = match graph {
            Some(g) => g,
            None => graph_from_records(&graph_records).map_err(|e| fail(e.line, e.message))?,
        };
        if records.len() as u64 != steps {
            return Err(fail(
                last_line + 1,
                format!("expected {steps} step records, found {} (truncated?)", records.len()),
            ));
        }
        Ok(Self { seed, teams, rules, graph, placements, records, steps })
    }

    /// Re-simulates the action log and compares every step's scores.
    pub fn check(&self) -> Result<(), ReplayMismatch> {
        let mut state = self.initial_state();
        for rec in &self.records {
            let submitted: BTreeMap<AgentId, Action> = rec.actions.iter().cloned().collect();
            let (applied, _) = state.step(&submitted);
            if applied != rec.actions {
                return Err(ReplayMismatch::Actions { step: rec.step });
            }
            if state.scores() != rec.scores {
                return Err(ReplayMismatch::Scores { step: rec.step, recorded: rec.scores, computed: state.scores() });
            }
        }
        Ok(())
    }
}

fn parse_rules(n: usize, fields: &[&str]) -> Result<Rules, ReplayError> {
    let mut values = BTreeMap::new();
    for f in fields {
        let (k, v) = f.split_once('=').ok_or_else(|| fail(n, format!("bad rule {f:?}")))?;
        values.insert(k, number::<u32>(n, k, v)?);
    }
    let get = |k: &str| values.get(k).copied().ok_or_else(|| fail(n, format!("missing rule {k}")));
    Ok(Rules {
        costs: Costs {
            probe: get("probe")?,
            survey: get("survey")?,
            attack: get("attack")?,
            parry: get("parry")?,
            recharge: get("recharge")?,
        },
        max_energy: get("energy")?,
        max_health: get("health")?,
    })
}

fn parse_step(n: usize, fields: &[&str]) -> Result<StepRecord, ReplayError> {
    if fields.len() < 4 {
        return Err(fail(n, "expected S <step> <actions...> <score> <score>"));
    }
    let step = number(n, "step", fields[1])?;
    let scores = [number(n, "score", fields[fields.len() - 2])?, number(n, "score", fields[fields.len() - 1])?];
    let actions = fields[2..fields.len() - 2]
        .iter()
        .map(|entry| {
            let (id, action) = entry.split_once('=').ok_or_else(|| fail(n, format!("bad action entry {entry:?}")))?;
            Ok((
                AgentId::new(id).map_err(|e| fail(n, e.to_string()))?,
                Action::parse_compact(action).map_err(|e| fail(n, e))?,
            ))
        })
        .collect::<Result<_, _>>()?;
    Ok(StepRecord { step, actions, scores })
}
