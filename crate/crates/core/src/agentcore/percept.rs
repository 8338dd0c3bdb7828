use std::fmt::Write as _;

use thiserror::Error;

use super::{ActionResult, Role};
use crate::worldgraph::{Edge, VertexId};
use crate::{AgentId, TeamId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelfState {
    pub position: VertexId,
    pub energy: u32,
    pub health: u32,
    pub role: Role,
    /// Outcome of the action submitted for the previous step.
    pub last_result: ActionResult,
    /// Knocked out: only recharge has an effect until health is full again.
    pub disabled: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SeenAgent {
    pub id: AgentId,
    pub team: TeamId,
    pub position: VertexId,
}

/// One step's observation. Shared copies carry no self state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Percept {
    pub step: u64,
    pub sender: AgentId,
    pub vertices: Vec<(VertexId, Option<u32>)>,
    pub edges: Vec<Edge>,
    pub agents: Vec<SeenAgent>,
    pub self_state: Option<SelfState>,
}

impl Percept {
    /// Sorts every list by id, the order the wire format requires.
    pub fn normalize(&mut self) {
        self.vertices.sort_unstable();
        self.vertices.dedup();
        self.edges.sort_unstable_by_key(|e| (e.a, e.b));
        self.edges.dedup();
        self.agents.sort();
        self.agents.dedup();
    }

    /// Copy for `team.percepts`: the same observation without self state.
    pub fn shared(&self) -> Percept {
        Percept { self_state: None, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("bad percept field {field}: {message}")]
pub struct PerceptError {
    pub field: &'static str,
    pub message: String,
}

fn err(field: &'static str, message: impl Into<String>) -> PerceptError {
    PerceptError { field, message: message.into() }
}

fn opt(value: Option<u32>) -> String {
    value.map_or_else(|| "?".to_string(), |v| v.to_string())
}

/// `P <step> <sender> v=<id:value|?>,... e=<id:id:w|?>,... a=<id:team:pos>,...`
/// followed by ` self=<pos>:<energy>:<health>:<role>:<ok|failed>:<0|1>` on
/// simulator percepts.
pub fn encode_percept(percept: &Percept) -> String {
    let mut p = percept.clone();
    p.normalize();
    let mut out = format!("P {} {} v=", p.step, p.sender);
    for (i, (id, value)) in p.vertices.iter().enumerate() {
        let sep = if i == 0 { "" } else { "," };
        let _ = write!(out, "{sep}{id}:{}", opt(*value));
    }
    out.push_str(" e=");
    for (i, e) in p.edges.iter().enumerate() {
        let sep = if i == 0 { "" } else { "," };
        let _ = write!(out, "{sep}{}:{}:{}", e.a, e.b, opt(e.weight));
    }
    out.push_str(" a=");
    for (i, a) in p.agents.iter().enumerate() {
        let sep = if i == 0 { "" } else { "," };
        let _ = write!(out, "{sep}{}:{}:{}", a.id, a.team, a.position);
    }
    if let Some(s) = p.self_state {
        let _ = write!(
            out,
            " self={}:{}:{}:{}:{}:{}",
            s.position,
            s.energy,
            s.health,
            s.role,
            s.last_result.as_str(),
            u8::from(s.disabled)
        );
    }
    out
}

fn number<T: std::str::FromStr>(field: &'static str, raw: &str) -> Result<T, PerceptError> {
    raw.parse().map_err(|_| err(field, format!("not a number: {raw:?}")))
}

fn maybe(field: &'static str, raw: &str) -> Result<Option<u32>, PerceptError> {
    if raw == "?" {
        Ok(None)
    } else {
        number(field, raw).map(Some)
    }
}

fn items<'a>(field: &'static str, raw: &'a str) -> Result<Vec<Vec<&'a str>>, PerceptError> {
    let prefix = format!("{field}=");
    let body =
        raw.strip_prefix(prefix.as_str()).ok_or_else(|| err(field, format!("expected {prefix}..., got {raw:?}")))?;
    if body.is_empty() {
        return Ok(Vec::new());
    }
    Ok(body.split(',').map(|item| item.split(':').collect()).collect())
}

pub fn decode_percept(line: &str) -> Result<Percept, PerceptError> {
    let fields: Vec<&str> = line.trim_end_matches('\n').split(' ').collect();
    if !(fields.len() == 6 || fields.len() == 7) || fields[0] != "P" {
        return Err(err("header", format!("expected `P <step> <sender> v= e= a=`, got {line:?}")));
    }
    let step = number("step", fields[1])?;
    let sender = AgentId::new(fields[2]).map_err(|e| err("sender", e.to_string()))?;

    let mut vertices = Vec::new();
    for item in items("v", fields[3])? {
        let [id, value] = item[..] else {
            return Err(err("v", format!("bad entry {:?}", item.join(":"))));
        };
        vertices.push((number("v", id)?, maybe("v", value)?));
    }

    let mut edges = Vec::new();
    for item in items("e", fields[4])? {
        let [a, b, w] = item[..] else {
            return Err(err("e", format!("bad entry {:?}", item.join(":"))));
        };
        let (a, b): (VertexId, VertexId) = (number("e", a)?, number("e", b)?);
        let weight = maybe("e", w)?;
        if a == b || weight == Some(0) {
            return Err(err("e", format!("invalid edge {a}:{b}")));
        }
        edges.push(Edge::new(a, b, weight));
    }

    let mut agents = Vec::new();
    for item in items("a", fields[5])? {
        let [id, team, pos] = item[..] else {
            return Err(err("a", format!("bad entry {:?}", item.join(":"))));
        };
        agents.push(SeenAgent {
            id: AgentId::new(id).map_err(|e| err("a", e.to_string()))?,
            team: TeamId::new(team).map_err(|e| err("a", e.to_string()))?,
            position: number("a", pos)?,
        });
    }

    let self_state = match fields.get(6) {
        None => None,
        Some(raw) => {
            let body = raw.strip_prefix("self=").ok_or_else(|| err("self", format!("got {raw:?}")))?;
            let parts: Vec<&str> = body.split(':').collect();
            let [pos, energy, health, role, result, disabled] = parts[..] else {
                return Err(err("self", format!("bad value {body:?}")));
            };
            Some(SelfState {
                position: number("self", pos)?,
                energy: number("self", energy)?,
                health: number("self", health)?,
                role: role.parse().map_err(|e| err("self", e))?,
                last_result: match result {
                    "ok" => ActionResult::Ok,
                    "failed" => ActionResult::Failed,
                    other => return Err(err("self", format!("bad result {other:?}"))),
                },
                disabled: match disabled {
                    "0" => false,
                    "1" => true,
                    other => return Err(err("self", format!("bad disabled flag {other:?}"))),
                },
            })
        }
    };

    let mut percept = Percept { step, sender, vertices, edges, agents, self_state };
    percept.normalize();
    Ok(percept)
}
