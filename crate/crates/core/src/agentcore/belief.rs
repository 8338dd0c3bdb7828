use std::collections::{BTreeMap, BTreeSet};

use super::{ActionResult, Percept, Role, SelfState};
use crate::auction::Goal;
use crate::worldgraph::{Change, DistanceIndex, Edge, GraphError, Vertex, VertexId, WorldGraph};
use crate::{AgentId, TeamId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sighting {
    pub team: TeamId,
    pub position: VertexId,
    pub step: u64,
}

/// Health lost during `step`, blamed on the enemies within one hop when the
/// step began.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attack {
    pub step: u64,
    pub attackers: Vec<AgentId>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ThreatRecord {
    pub attacks: Vec<Attack>,
}

impl ThreatRecord {
    pub fn attacked_since(&self, step: u64) -> bool {
        self.attacks.iter().any(|a| a.step >= step)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrated {
    Applied,
    /// Not newer than the last percept from the same sender; ignored.
    Stale,
}

/// An agent's accumulated view of the match.
#[derive(Debug, Clone)]
pub struct Belief {
    me: AgentId,
    team: TeamId,
    role: Role,
    graph: WorldGraph,
    index: DistanceIndex,
    last_seen: BTreeMap<AgentId, Sighting>,
    /// Agents seen at more than one vertex.
    mobile: BTreeSet<AgentId>,
    own: Option<SelfState>,
    step: u64,
    enemies_in_reach: Vec<AgentId>,
    threat: ThreatRecord,
    source_steps: BTreeMap<AgentId, u64>,
    /// Current goal and the step it was taken on.
    pub goal: Option<Goal>,
    pub goal_since: u64,
    /// Enemies whose last attack by us was parried, with the step it happened.
    pub parried_by: BTreeMap<AgentId, u64>,
    pub last_action: Option<super::Action>,
    pub stale: u64,
    pub decode_errors: u64,
}

impl Belief {
    pub fn new(me: AgentId, team: TeamId, role: Role) -> Self {
        Self {
            me,
            team,
            role,
            graph: WorldGraph::new(),
            index: DistanceIndex::new(),
            last_seen: BTreeMap::new(),
            mobile: BTreeSet::new(),
            own: None,
            step: 0,
            enemies_in_reach: Vec::new(),
            threat: ThreatRecord::default(),
            source_steps: BTreeMap::new(),
            goal: None,
            goal_since: 0,
            parried_by: BTreeMap::new(),
            last_action: None,
            stale: 0,
            decode_errors: 0,
        }
    }

    pub fn me(&self) -> &AgentId {
        &self.me
    }

    pub fn team(&self) -> &TeamId {
        &self.team
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn graph(&self) -> &WorldGraph {
        &self.graph
    }

    pub fn index(&self) -> &DistanceIndex {
        &self.index
    }

    /// Step of the latest own percept.
    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn own(&self) -> Option<&SelfState> {
        self.own.as_ref()
    }

    pub fn position(&self) -> Option<VertexId> {
        self.own.map(|s| s.position)
    }

    pub fn last_seen(&self) -> &BTreeMap<AgentId, Sighting> {
        &self.last_seen
    }

    pub fn threat(&self) -> &ThreatRecord {
        &self.threat
    }

    pub fn is_enemy(&self, agent: &AgentId) -> bool {
        self.last_seen.get(agent).is_some_and(|s| s.team != self.team)
    }

    /// Enemies seen at `vertex` during the current step.
    pub fn enemies_at(&self, vertex: VertexId) -> Vec<AgentId> {
        self.last_seen
            .iter()
            .filter(|(_, s)| s.team != self.team && s.position == vertex && s.step == self.step)
            .map(|(id, _)| id.clone())
            .collect()
    }

    /// Enemies implicated in the most attacks. Where an attack had suspects
    /// that have been seen moving, the ones never seen moving are cleared.
    pub fn saboteurs(&self) -> BTreeSet<AgentId> {
        let mut counts: BTreeMap<&AgentId, usize> = BTreeMap::new();
        for attack in &self.threat.attacks {
            let moved = attack.attackers.iter().any(|a| self.mobile.contains(a));
            for id in attack.attackers.iter().filter(|a| !moved || self.mobile.contains(*a)) {
                *counts.entry(id).or_default() += 1;
            }
        }
        let top = counts.values().copied().max().unwrap_or(0);
        counts.into_iter().filter(|&(_, c)| c == top).map(|(id, _)| id.clone()).collect()
    }

    /// Enemies seen this step at `vertex` or one hop from it.
    pub fn enemies_within_reach(&self, vertex: VertexId) -> Vec<AgentId> {
        self.last_seen
            .iter()
            .filter(|(_, s)| {
                s.team != self.team
                    && s.step == self.step
                    && (s.position == vertex || self.graph.edge(s.position, vertex).is_some())
            })
            .map(|(id, _)| id.clone())
            .collect()
    }

    /// Merges a percept. Data already known changes nothing; new vertices go
    /// through incremental index insertion and new or cheaper edges through
    /// edge updates.
    pub fn integrate(&mut self, percept: &Percept) -> Result<Integrated, GraphError> {
        if self.source_steps.get(&percept.sender).is_some_and(|&s| s >= percept.step) {
            self.stale += 1;
            return Ok(Integrated::Stale);
        }
        self.check(percept)?;

        let incoming: BTreeMap<VertexId, Option<u32>> = percept.vertices.iter().copied().collect();
        let fresh: Vec<VertexId> = incoming.keys().copied().filter(|v| !self.graph.contains(*v)).collect();
        for &v in &fresh {
            self.graph.add_vertex(Vertex::new(v, incoming[&v]))?;
            let mut incident = Vec::new();
            for e in &percept.edges {
                if let Some(other) = e.other(v) {
                    if self.index.contains(other) && self.graph.edge(e.a, e.b).is_none() {
                        self.graph.add_edge(*e)?;
                        incident.push(*e);
                    }
                }
            }
            self.index.insert_vertex(v, &incident)?;
        }
        for (&v, &value) in &incoming {
            self.graph.record_vertex(Vertex::new(v, value))?;
        }
        for e in &percept.edges {
            if self.graph.record_edge(*e)? != Change::Unchanged {
                let now = self.graph.edge(e.a, e.b).expect("just recorded");
                self.index.update_edge(&now)?;
            }
        }

        for seen in &percept.agents {
            let prev = self.last_seen.get(&seen.id);
            if prev.is_some_and(|s| s.position != seen.position) {
                self.mobile.insert(seen.id.clone());
            }
            if prev.is_none_or(|s| s.step <= percept.step) {
                self.last_seen.insert(
                    seen.id.clone(),
                    Sighting { team: seen.team.clone(), position: seen.position, step: percept.step },
                );
            }
        }

        if percept.sender == self.me {
            if let Some(state) = percept.self_state {
                self.take_own(percept, state);
            }
        }
        self.source_steps.insert(percept.sender.clone(), percept.step);
        Ok(Integrated::Applied)
    }

    fn check(&self, percept: &Percept) -> Result<(), GraphError> {
        let listed: BTreeSet<VertexId> = percept.vertices.iter().map(|(v, _)| *v).collect();
        for (v, value) in &percept.vertices {
            if let (Some(Some(known)), Some(got)) = (self.graph.value(*v), value) {
                if known != *got {
                    return Err(GraphError::ValueConflict { id: *v, known, got: *got });
                }
            }
        }
        for e in &percept.edges {
            for end in [e.a, e.b] {
                if !listed.contains(&end) && !self.graph.contains(end) {
                    return Err(GraphError::UnknownVertex(end));
                }
            }
        }
        Ok(())
    }

    fn take_own(&mut self, percept: &Percept, state: SelfState) {
        if let Some(prev) = self.own {
            if state.health < prev.health {
                let attackers = std::mem::take(&mut self.enemies_in_reach);
                self.threat.attacks.push(Attack { step: percept.step.saturating_sub(1), attackers });
            }
        }
        if let (Some(super::Action::Attack(target)), ActionResult::Failed) = (&self.last_action, state.last_result) {
            self.parried_by.insert(target.clone(), percept.step);
        }
        self.enemies_in_reach = percept
            .agents
            .iter()
            .filter(|a| {
                a.team != self.team
                    && (a.position == state.position || self.graph.edge(a.position, state.position).is_some())
            })
            .map(|a| a.id.clone())
            .collect();
        self.own = Some(state);
        self.step = percept.step;
    }

    /// Graph edges incident to the current position.
    pub fn exits(&self) -> Vec<Edge> {
        self.position().map(|p| self.graph.incident_edges(p)).unwrap_or_default()
    }
}
