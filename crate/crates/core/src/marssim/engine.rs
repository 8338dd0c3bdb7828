use std::collections::{BTreeMap, BTreeSet};

use log::debug;

use crate::agentcore::{Action, ActionResult, Costs, Percept, Role, SeenAgent, SelfState};
use crate::worldgraph::{Edge, VertexId, WorldGraph};
use crate::{AgentId, TeamId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rules {
    pub costs: Costs,
    pub max_energy: u32,
    pub max_health: u32,
}

impl Default for Rules {
    fn default() -> Self {
        Self { costs: Costs::default(), max_energy: 10, max_health: 3 }
    }
}

/// Where an agent starts and which side it plays for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placement {
    pub id: AgentId,
    /// 0 or 1.
    pub team: usize,
    pub role: Role,
    pub start: VertexId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentState {
    pub id: AgentId,
    pub team: usize,
    pub role: Role,
    pub position: VertexId,
    pub energy: u32,
    pub health: u32,
    pub last_result: ActionResult,
    /// Set when health reaches 0, cleared once recharging restores it to
    /// the maximum.
    pub disabled: bool,
}

impl AgentState {
    pub fn disabled(&self) -> bool {
        self.disabled
    }
}

/// Score gained in one step, split by source.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepGain {
    pub bonus: [u64; 2],
    pub income: [u64; 2],
}

impl StepGain {
    pub fn total(&self, team: usize) -> u64 {
        self.bonus[team] + self.income[team]
    }
}

/// The true match state. Only [`MatchState::step`] mutates it.
#[derive(Debug, Clone)]
pub struct MatchState {
    graph: WorldGraph,
    teams: [TeamId; 2],
    agents: Vec<AgentState>,
    rules: Rules,
    probed: [BTreeSet<VertexId>; 2],
    surveyed: [BTreeSet<(VertexId, VertexId)>; 2],
    bonus_paid: BTreeSet<VertexId>,
    scores: [u64; 2],
    step: u64,
}

fn key(e: &Edge) -> (VertexId, VertexId) {
    (e.a.min(e.b), e.a.max(e.b))
}

impl MatchState {
    /// Panics if a placement names a vertex missing from `graph`, a team
    /// other than 0 or 1, or repeats an agent id.
    pub fn new(graph: WorldGraph, teams: [TeamId; 2], placements: &[Placement], rules: Rules) -> Self {
        let mut agents: Vec<AgentState> = placements
            .iter()
            .map(|p| {
                assert!(graph.contains(p.start), "start vertex {} of {} is not in the world", p.start, p.id);
                assert!(p.team < 2, "team index {} of {}", p.team, p.id);
                AgentState {
                    id: p.id.clone(),
                    team: p.team,
                    role: p.role,
                    position: p.start,
                    energy: rules.max_energy,
                    health: rules.max_health,
                    last_result: ActionResult::Ok,
                    disabled: false,
                }
            })
            .collect();
        agents.sort_by(|a, b| a.id.cmp(&b.id));
        assert!(agents.windows(2).all(|w| w[0].id != w[1].id), "duplicate agent id");
        Self {
            graph,
            teams,
            agents,
            rules,
            probed: Default::default(),
            surveyed: Default::default(),
            bonus_paid: BTreeSet::new(),
            scores: [0, 0],
            step: 0,
        }
    }

    pub fn graph(&self) -> &WorldGraph {
        &self.graph
    }

    pub fn teams(&self) -> &[TeamId; 2] {
        &self.teams
    }

    /// Sorted by id.
    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn agent(&self, id: &AgentId) -> Option<&AgentState> {
        self.index_of(id).map(|i| &self.agents[i])
    }

    pub fn rules(&self) -> &Rules {
        &self.rules
    }

    pub fn scores(&self) -> [u64; 2] {
        self.scores
    }

    /// Steps resolved so far.
    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn probed_by(&self, team: usize) -> &BTreeSet<VertexId> {
        &self.probed[team]
    }

    fn index_of(&self, id: &AgentId) -> Option<usize> {
        self.agents.binary_search_by(|a| a.id.cmp(id)).ok()
    }

    /// What `id` sees before acting in the next step.
    pub fn percept(&self, id: &AgentId) -> Option<Percept> {
        let me = self.agent(id)?;
        let pos = me.position;
        let team = me.team;
        let mut visible: Vec<VertexId> = vec![pos];
        visible.extend(self.graph.neighbors(pos).map(|(v, _)| v));
        let vertices = visible
            .iter()
            .map(|&v| {
                let value = self.graph.value(v).flatten().filter(|_| self.probed[team].contains(&v));
                (v, value)
            })
            .collect();
        let edges = self
            .graph
            .incident_edges(pos)
            .into_iter()
            .map(|e| {
                let known = self.surveyed[team].contains(&key(&e));
                Edge::new(e.a, e.b, if known { e.weight } else { None })
            })
            .collect();
        let agents = self
            .agents
            .iter()
            .filter(|a| visible.contains(&a.position))
            .map(|a| SeenAgent { id: a.id.clone(), team: self.teams[a.team].clone(), position: a.position })
            .collect();
        let mut p = Percept {
            step: self.step + 1,
            sender: id.clone(),
            vertices,
            edges,
            agents,
            self_state: Some(SelfState {
                position: pos,
                energy: me.energy,
                health: me.health,
                role: me.role,
                last_result: me.last_result,
                disabled: me.disabled,
            }),
        };
        p.normalize();
        Some(p)
    }

    /// Resolves one step of simultaneous actions. Agents without an entry
    /// do nothing; entries for unknown agents are ignored. Returns the
    /// actions as applied, one per agent in id order.
    pub fn step(&mut self, submitted: &BTreeMap<AgentId, Action>) -> (Vec<(AgentId, Action)>, StepGain) {
        for id in submitted.keys() {
            if self.index_of(id).is_none() {
                debug!("ignoring action from unknown agent {id}");
            }
        }
        let costs = self.rules.costs;
        let n = self.agents.len();
        let start_disabled: Vec<bool> = self.agents.iter().map(AgentState::disabled).collect();
        let start_pos: Vec<VertexId> = self.agents.iter().map(|a| a.position).collect();
        let actions: Vec<Action> = self
            .agents
            .iter()
            .zip(&start_disabled)
            .map(|(a, &disabled)| {
                let act = submitted.get(&a.id).cloned().unwrap_or(Action::Noop);
                if disabled && act != Action::Recharge && act != Action::Noop {
                    debug!("{} is disabled, {act} ignored", a.id);
                    Action::Noop
                } else {
                    act
                }
            })
            .collect();
        let mut result = vec![ActionResult::Ok; n];

        let mut parrying = vec![false; n];
        for i in 0..n {
            if actions[i] == Action::Parry {
                if self.agents[i].energy >= costs.parry {
                    self.agents[i].energy -= costs.parry;
                    parrying[i] = true;
                } else {
                    result[i] = ActionResult::Failed;
                }
            }
        }

        for i in 0..n {
            let Action::Attack(target) = &actions[i] else {
                continue;
            };
            let valid = self.index_of(target).filter(|&t| {
                self.agents[i].role == Role::Saboteur
                    && self.agents[t].team != self.agents[i].team
                    && (start_pos[t] == start_pos[i] || self.graph.edge(start_pos[i], start_pos[t]).is_some())
                    && !start_disabled[t]
                    && self.agents[i].energy >= costs.attack
            });
            let Some(t) = valid else {
                result[i] = ActionResult::Failed;
                continue;
            };
            self.agents[i].energy -= costs.attack;
            if parrying[t] {
                result[i] = ActionResult::Failed;
            } else {
                let target = &mut self.agents[t];
                target.health = target.health.saturating_sub(1);
                target.disabled |= target.health == 0;
            }
        }

        for i in 0..n {
            let Action::Goto(to) = actions[i] else {
                continue;
            };
            match self.graph.edge(start_pos[i], to).and_then(|e| e.weight) {
                Some(w) if self.agents[i].energy >= w => {
                    self.agents[i].energy -= w;
                    self.agents[i].position = to;
                }
                _ => result[i] = ActionResult::Failed,
            }
        }

        let mut gain = StepGain::default();
        let mut probers: BTreeMap<VertexId, usize> = BTreeMap::new();
        for i in 0..n {
            let team = self.agents[i].team;
            let pos = self.agents[i].position;
            match actions[i] {
                Action::Probe | Action::Survey => {
                    let cost = if actions[i] == Action::Probe { costs.probe } else { costs.survey };
                    if self.agents[i].energy < cost {
                        result[i] = ActionResult::Failed;
                        continue;
                    }
                    self.agents[i].energy -= cost;
                    if actions[i] == Action::Probe {
                        self.probed[team].insert(pos);
                        // Agents are in id order, so the first prober wins ties.
                        probers.entry(pos).or_insert(i);
                    } else {
                        for e in self.graph.incident_edges(pos) {
                            self.surveyed[team].insert(key(&e));
                        }
                    }
                }
                Action::Recharge => {
                    let a = &mut self.agents[i];
                    a.energy = (a.energy + costs.recharge).min(self.rules.max_energy);
                    if a.disabled {
                        a.health = (a.health + 1).min(self.rules.max_health);
                        a.disabled = a.health < self.rules.max_health;
                    }
                }
                _ => {}
            }
        }
        for (v, i) in probers {
            if self.bonus_paid.insert(v) {
                gain.bonus[self.agents[i].team] += u64::from(self.graph.value(v).flatten().unwrap_or(0));
            }
        }

        for (team, income) in gain.income.iter_mut().enumerate() {
            let held: BTreeSet<VertexId> = self
                .agents
                .iter()
                .filter(|a| a.team == team && !a.disabled())
                .map(|a| a.position)
                .filter(|v| self.probed[team].contains(v))
                .collect();
            *income = held.iter().map(|&v| u64::from(self.graph.value(v).flatten().unwrap_or(0))).sum();
        }
        for team in 0..2 {
            self.scores[team] += gain.total(team);
        }
        for (a, r) in self.agents.iter_mut().zip(result) {
            a.last_result = r;
        }
        self.step += 1;
        let applied = self.agents.iter().map(|a| a.id.clone()).zip(actions).collect();
        (applied, gain)
    }
}
