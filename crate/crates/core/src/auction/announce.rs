use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{Goal, GoalId, GoalKind, TokenError};
use crate::AgentId;

/// Control messages on `team.auction`.
///
/// ```text
/// START <auction> ring=<a,...> goals=<goal:vertex:kind,...>
/// SKIP <auction>
/// RESULT <auction> <rounds> assign=<goal:agent,...>
/// ABORT <auction>
/// ALIVE <auction> <agent>
/// DONE <auction> <agent> <goal>
/// ```
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Announcement {
    Start {
        auction: u64,
        ring: Vec<AgentId>,
        goals: Vec<Goal>,
    },
    Skip {
        auction: u64,
    },
    Result {
        auction: u64,
        rounds: u32,
        assignment: BTreeMap<GoalId, AgentId>,
    },
    Abort {
        auction: u64,
    },
    Alive {
        auction: u64,
        agent: AgentId,
    },
    /// `agent` finished the goal it won in `auction`.
    Done {
        auction: u64,
        agent: AgentId,
        goal: GoalId,
    },
}

fn err(field: &'static str, message: impl Into<String>) -> TokenError {
    TokenError { field, message: message.into() }
}

fn join<T>(items: impl IntoIterator<Item = T>, mut f: impl FnMut(&mut String, T)) -> String {
    let mut out = String::new();
    for (i, item) in items.into_iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        f(&mut out, item);
    }
    out
}

fn list<'a>(field: &'static str, raw: &'a str) -> Result<Vec<&'a str>, TokenError> {
    let prefix = format!("{field}=");
    let body =
        raw.strip_prefix(prefix.as_str()).ok_or_else(|| err(field, format!("expected {prefix}..., got {raw:?}")))?;
    Ok(if body.is_empty() { Vec::new() } else { body.split(',').collect() })
}

fn number<T: std::str::FromStr>(field: &'static str, raw: &str) -> Result<T, TokenError> {
    raw.parse().map_err(|_| err(field, format!("not a number: {raw:?}")))
}

fn agent(field: &'static str, raw: &str) -> Result<AgentId, TokenError> {
    AgentId::new(raw).map_err(|e| err(field, e.to_string()))
}

pub fn encode_goals(goals: &[Goal]) -> String {
    join(goals, |out, g| {
        let _ = write!(out, "{}:{}:{}", g.id, g.target, g.kind);
    })
}

pub fn decode_goals(raw: &str) -> Result<Vec<Goal>, TokenError> {
    if raw.is_empty() {
        return Ok(Vec::new());
    }
    raw.split(',')
        .map(|entry| {
            let parts: Vec<&str> = entry.split(':').collect();
            let [id, target, kind] = parts[..] else {
                return Err(err("goals", format!("bad entry {entry:?}")));
            };
            Ok(Goal {
                id: number("goals", id)?,
                target: number("goals", target)?,
                kind: kind.parse::<GoalKind>().map_err(|e| err("goals", e))?,
            })
        })
        .collect()
}

impl Announcement {
    pub fn auction(&self) -> u64 {
        match self {
            Announcement::Start { auction, .. }
            | Announcement::Skip { auction }
            | Announcement::Result { auction, .. }
            | Announcement::Abort { auction }
            | Announcement::Alive { auction, .. }
            | Announcement::Done { auction, .. } => *auction,
        }
    }

    pub fn encode(&self) -> String {
        match self {
            Announcement::Start { auction, ring, goals } => format!(
                "START {auction} ring={} goals={}",
                join(ring, |out, a| out.push_str(a.as_str())),
                encode_goals(goals)
            ),
            Announcement::Skip { auction } => format!("SKIP {auction}"),
            Announcement::Result { auction, rounds, assignment } => format!(
                "RESULT {auction} {rounds} assign={}",
                join(assignment, |out, (g, a)| {
                    let _ = write!(out, "{g}:{a}");
                })
            ),
            Announcement::Abort { auction } => format!("ABORT {auction}"),
            Announcement::Alive { auction, agent } => format!("ALIVE {auction} {agent}"),
            Announcement::Done { auction, agent, goal } => format!("DONE {auction} {agent} {goal}"),
        }
    }

    pub fn decode(text: &str) -> Result<Self, TokenError> {
        let fields: Vec<&str> = text.trim_end_matches('\n').split(' ').collect();
        let auction = || -> Result<u64, TokenError> { number("auction-id", fields.get(1).copied().unwrap_or("")) };
        match (fields[0], fields.len()) {
            ("START", 4) => {
                let ring = list("ring", fields[2])?.into_iter().map(|a| agent("ring", a)).collect::<Result<_, _>>()?;
                let goals_raw = fields[3]
                    .strip_prefix("goals=")
                    .ok_or_else(|| err("goals", format!("expected goals=..., got {:?}", fields[3])))?;
                Ok(Announcement::Start { auction: auction()?, ring, goals: decode_goals(goals_raw)? })
            }
            ("SKIP", 2) => Ok(Announcement::Skip { auction: auction()? }),
            ("RESULT", 4) => {
                let mut assignment = BTreeMap::new();
                for entry in list("assign", fields[3])? {
                    let (g, a) = entry.split_once(':').ok_or_else(|| err("assign", format!("bad entry {entry:?}")))?;
                    if assignment.insert(number("assign", g)?, agent("assign", a)?).is_some() {
                        return Err(err("assign", format!("duplicate goal {g}")));
                    }
                }
                Ok(Announcement::Result { auction: auction()?, rounds: number("rounds", fields[2])?, assignment })
            }
            ("ABORT", 2) => Ok(Announcement::Abort { auction: auction()? }),
            ("ALIVE", 3) => Ok(Announcement::Alive { auction: auction()?, agent: agent("agent", fields[2])? }),
            ("DONE", 4) => Ok(Announcement::Done {
                auction: auction()?,
                agent: agent("agent", fields[2])?,
                goal: number("goal", fields[3])?,
            }),
            _ => Err(err("header", format!("unrecognized announcement {text:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(s: &str) -> AgentId {
        AgentId::new(s).unwrap()
    }

    #[test]
    fn round_trips() {
        let all = [
            Announcement::Start {
                auction: 4,
                ring: vec![a("a1"), a("a2")],
                goals: vec![Goal::at(3, GoalKind::Probe), Goal::at(7, GoalKind::Occupy)],
            },
            Announcement::Start { auction: 5, ring: vec![a("x")], goals: vec![] },
            Announcement::Skip { auction: 9 },
            Announcement::Result { auction: 4, rounds: 2, assignment: BTreeMap::from([(12, a("a1")), (29, a("a2"))]) },
            Announcement::Abort { auction: 4 },
            Announcement::Alive { auction: 4, agent: a("a2") },
            Announcement::Done { auction: 4, agent: a("a1"), goal: 12 },
        ];
        for ann in all {
            let text = ann.encode();
            assert_eq!(Announcement::decode(&text).unwrap(), ann, "{text}");
        }
    }

    #[test]
    fn wire_text() {
        let start =
            Announcement::Start { auction: 1, ring: vec![a("a1"), a("a2")], goals: vec![Goal::at(3, GoalKind::Probe)] };
        assert_eq!(start.encode(), "START 1 ring=a1,a2 goals=12:3:probe");
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", "START 1", "RESULT 1 2 assign=1:a,1:b", "ALIVE x a1", "HELLO", "START 1 ring= goals=1:2:fly"] {
            assert!(Announcement::decode(bad).is_err(), "{bad}");
        }
    }
}
