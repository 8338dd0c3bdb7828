use super::{Action, Belief, Costs, Role};
use crate::auction::{Goal, GoalKind};
use crate::worldgraph::{bfs_frontier, bfs_nearest, VertexId, WorldGraph, UNSURVEYED_WEIGHT};
use crate::AgentId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolicyConfig {
    pub parry: bool,
    pub costs: Costs,
    /// Steps an occupy goal is held before it counts as done.
    pub occupy_stint: u64,
    /// Steps a saboteur leaves an enemy alone after a parried attack.
    pub avoid_after_parry: u64,
    /// Sightings older than this many steps are not hunted.
    pub hunt_memory: u64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self { parry: true, costs: Costs::default(), occupy_stint: 10, avoid_after_parry: 6, hunt_memory: 3 }
    }
}

/// True iff a known enemy saboteur stands on our vertex this step, or we
/// were attacked during the last two steps and a known saboteur is within
/// one hop.
pub fn parry_policy(belief: &Belief) -> bool {
    let Some(pos) = belief.position() else {
        return false;
    };
    let step = belief.step();
    let nearby = |within_one_hop: bool| {
        belief.saboteurs().iter().any(|s| {
            belief.last_seen().get(s).is_some_and(|seen| {
                seen.step == step
                    && (seen.position == pos || (within_one_hop && belief.graph().edge(pos, seen.position).is_some()))
            })
        })
    };
    nearby(false) || (belief.threat().attacked_since(step.saturating_sub(2)) && nearby(true))
}

/// Goals worth auctioning among `slots` bidders: probing every unprobed
/// vertex, plus occupying the most valuable probed vertices for any slots
/// the probe goals leave open. Sorted by id.
pub fn candidate_goals(graph: &WorldGraph, slots: usize) -> Vec<Goal> {
    let mut goals: Vec<Goal> =
        graph.vertices().filter(|v| v.value.is_none()).map(|v| Goal::at(v.id, GoalKind::Probe)).collect();
    let mut worth: Vec<(u32, VertexId)> =
        graph.vertices().filter_map(|v| v.value.filter(|&x| x > 0).map(|x| (x, v.id))).collect();
    worth.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let open = slots.saturating_sub(goals.len());
    goals.extend(worth.into_iter().take(open).map(|(_, v)| Goal::at(v, GoalKind::Occupy)));
    goals.sort_by_key(|g| g.id);
    goals
}

/// Whether `goal` needs no further work from this agent. `held` counts the
/// steps spent on the goal's target so far.
pub fn goal_done(belief: &Belief, goal: &Goal, held: u64, cfg: &PolicyConfig) -> bool {
    let Some(pos) = belief.position() else {
        return false;
    };
    if belief.index().dist(pos, goal.target).ok().flatten().is_none() {
        return true;
    }
    match goal.kind {
        GoalKind::Probe => belief.graph().value(goal.target).flatten().is_some(),
        GoalKind::Occupy | GoalKind::Repair => held >= cfg.occupy_stint,
        GoalKind::Hunt => belief.enemies_at(goal.target).is_empty() && pos == goal.target,
    }
}

fn huntable(belief: &Belief, cfg: &PolicyConfig, enemy: &AgentId) -> bool {
    let step = belief.step();
    !belief.parried_by.get(enemy).is_some_and(|&at| step < at + cfg.avoid_after_parry)
}

/// Saboteur target: the closest recently seen enemy, ties broken by id.
pub fn hunt_goal(belief: &Belief, cfg: &PolicyConfig) -> Option<Goal> {
    let pos = belief.position()?;
    let step = belief.step();
    belief
        .last_seen()
        .iter()
        .filter(|(id, seen)| {
            seen.team != *belief.team() && seen.step + cfg.hunt_memory >= step && huntable(belief, cfg, id)
        })
        .filter_map(|(id, seen)| {
            let d = belief.index().dist(pos, seen.position).ok().flatten()?;
            Some((d, id.clone(), seen.position))
        })
        .min()
        .map(|(_, _, target)| Goal::at(target, GoalKind::Hunt))
}

/// Move one hop toward `target` if the energy allows, surveying first when
/// the next edge's weight is unknown and a full-price move is unaffordable.
fn step_toward(belief: &Belief, target: VertexId, costs: &Costs) -> Option<Action> {
    let pos = belief.position()?;
    let energy = belief.own()?.energy;
    let next = belief.index().next_hop(pos, target).ok().flatten()?;
    let edge = belief.graph().edge(pos, next)?;
    Some(match edge.weight {
        Some(w) if energy >= w => Action::Goto(next),
        Some(_) => Action::Recharge,
        None if energy >= UNSURVEYED_WEIGHT => Action::Goto(next),
        None if energy >= costs.survey => Action::Survey,
        None => Action::Recharge,
    })
}

fn affordable(energy: u32, cost: u32, action: Action) -> Action {
    if energy >= cost {
        action
    } else {
        Action::Recharge
    }
}

/// Fixed priority policy:
/// 1. disabled, or too little energy for any move: recharge;
/// 2. parry when enabled and [`parry_policy`] fires;
/// 3. hunting with prey in reach: attack; on the goal's target: the goal's
///    action;
/// 4. with a goal: one hop along the shortest path toward it;
/// 5. saboteurs sharing a vertex with an enemy that parried them: leave by
///    the cheapest surveyed exit;
/// 6. explorers without a goal: head for the nearest frontier vertex,
///    probing or surveying once there; saboteurs scout for unsurveyed edges;
/// 7. otherwise recharge.
pub fn decide(belief: &Belief, cfg: &PolicyConfig) -> Action {
    let Some(state) = belief.own().copied() else {
        return Action::Noop;
    };
    let pos = state.position;
    let costs = &cfg.costs;
    if state.disabled || state.health == 0 {
        return Action::Recharge;
    }
    let cheapest = belief.exits().iter().map(|e| e.weight.unwrap_or(1)).min();
    if cheapest.is_some_and(|c| state.energy < c) {
        return Action::Recharge;
    }
    if cfg.parry && state.energy >= costs.parry && parry_policy(belief) {
        return Action::Parry;
    }

    if let Some(goal) = belief.goal {
        if goal.kind == GoalKind::Hunt {
            let prey = belief.enemies_within_reach(pos).into_iter().find(|e| huntable(belief, cfg, e));
            if let Some(prey) = prey {
                return affordable(state.energy, costs.attack, Action::Attack(prey));
            }
        }
        if goal.target == pos {
            match goal.kind {
                GoalKind::Probe if belief.graph().value(pos).flatten().is_none() => {
                    return affordable(state.energy, costs.probe, Action::Probe);
                }
                GoalKind::Probe => {}
                GoalKind::Occupy | GoalKind::Repair => return Action::Recharge,
                GoalKind::Hunt => {}
            }
        } else if let Some(action) = step_toward(belief, goal.target, costs) {
            return action;
        }
    }

    if belief.role() == Role::Saboteur && belief.enemies_at(pos).iter().any(|e| !huntable(belief, cfg, e)) {
        let exit = belief
            .exits()
            .into_iter()
            .filter_map(|e| Some((e.weight?, e.other(pos)?)))
            .filter(|&(w, _)| state.energy >= w)
            .min();
        if let Some((_, next)) = exit {
            return Action::Goto(next);
        }
    }

    let graph = belief.graph();
    let frontier = match belief.role() {
        Role::Explorer => bfs_frontier(graph, pos),
        // Saboteurs scout for prey but leave probing to explorers.
        Role::Saboteur => bfs_nearest(graph, pos, |v| graph.incident_edges(v).iter().any(|e| e.weight.is_none())),
        _ => Ok(None),
    };
    if let Ok(Some(frontier)) = frontier {
        if frontier == pos {
            return if belief.role() == Role::Explorer && graph.value(pos).flatten().is_none() {
                affordable(state.energy, costs.probe, Action::Probe)
            } else {
                affordable(state.energy, costs.survey, Action::Survey)
            };
        }
        if let Some(action) = step_toward(belief, frontier, costs) {
            return action;
        }
    }
    Action::Recharge
}
