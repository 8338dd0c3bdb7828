mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::id;
use marsring_core::agentcore::{
    decide, parry_policy, Action, ActionResult, Belief, Percept, PolicyConfig, Role, SeenAgent, SelfState,
};
use marsring_core::auction::{Goal, GoalKind};
use marsring_core::worldgraph::{Edge, VertexId, UNSURVEYED_WEIGHT};
use marsring_core::TeamId;
use proptest::prelude::*;

type Weights = BTreeMap<(VertexId, VertexId), u64>;

/// Floyd-Warshall over the known edges, unsurveyed ones at the placeholder
/// weight.
fn floyd(vertices: &BTreeSet<VertexId>, weights: &Weights) -> BTreeMap<(VertexId, VertexId), u64> {
    let mut d = BTreeMap::new();
    for &v in vertices {
        d.insert((v, v), 0);
    }
    for (&(a, b), &w) in weights {
        d.insert((a, b), w);
        d.insert((b, a), w);
    }
    for &k in vertices {
        for &i in vertices {
            for &j in vertices {
                if let (Some(&ik), Some(&kj)) = (d.get(&(i, k)), d.get(&(k, j))) {
                    if d.get(&(i, j)).is_none_or(|&ij| ik + kj < ij) {
                        d.insert((i, j), ik + kj);
                    }
                }
            }
        }
    }
    d
}

fn known_weights(belief: &Belief) -> (BTreeSet<VertexId>, Weights) {
    let vs = belief.graph().vertex_ids().collect();
    let ws = belief
        .graph()
        .edges()
        .map(|e| ((e.a.min(e.b), e.a.max(e.b)), u64::from(e.weight.unwrap_or(UNSURVEYED_WEIGHT))))
        .collect();
    (vs, ws)
}

fn weight(ws: &Weights, a: VertexId, b: VertexId) -> Option<u64> {
    ws.get(&(a.min(b), a.max(b))).copied()
}

fn assert_index_matches(belief: &Belief) {
    let (vs, ws) = known_weights(belief);
    let d = floyd(&vs, &ws);
    for &s in &vs {
        for &t in &vs {
            let want = d.get(&(s, t)).copied();
            assert_eq!(belief.index().dist(s, t).unwrap(), want, "dist {s}->{t}");
            let hop = want.filter(|_| s != t).and_then(|total| {
                vs.iter()
                    .copied()
                    .find(|&n| weight(&ws, s, n).zip(d.get(&(n, t))).is_some_and(|(w, &rest)| w + rest == total))
            });
            assert_eq!(belief.index().next_hop(s, t).unwrap(), hop, "next hop {s}->{t}");
        }
    }
}

fn red() -> TeamId {
    TeamId::new("red").unwrap()
}

fn blue() -> TeamId {
    TeamId::new("blue").unwrap()
}

fn me(pos: VertexId, energy: u32, health: u32) -> SelfState {
    SelfState { position: pos, energy, health, role: Role::Explorer, last_result: ActionResult::Ok, disabled: false }
}

fn own(step: u64, vertices: &[(VertexId, Option<u32>)], edges: &[Edge], state: SelfState) -> Percept {
    Percept {
        step,
        sender: id("a1"),
        vertices: vertices.to_vec(),
        edges: edges.to_vec(),
        agents: vec![],
        self_state: Some(state),
    }
}

#[test]
fn two_percepts_extend_the_index_exactly() {
    let mut b = Belief::new(id("a1"), red(), Role::Explorer);
    b.integrate(&own(
        1,
        &[(1, Some(3)), (2, None), (3, None), (4, None)],
        &[Edge::surveyed(1, 2, 4), Edge::surveyed(2, 3, 1), Edge::unsurveyed(1, 4)],
        me(1, 10, 3),
    ))
    .unwrap();
    assert_index_matches(&b);
    // The second view reveals D and E, a cheap shortcut and a surveyed 1-4.
    b.integrate(&own(
        2,
        &[(4, Some(2)), (5, None), (3, None)],
        &[Edge::surveyed(1, 4, 1), Edge::surveyed(4, 5, 1), Edge::surveyed(5, 3, 1)],
        me(4, 9, 3),
    ))
    .unwrap();
    assert_index_matches(&b);
    assert_eq!(b.index().dist(1, 3).unwrap(), Some(3));
    assert_eq!(b.index().next_hop(1, 3).unwrap(), Some(4));
}

/// A hidden world: values per vertex and weights per edge on 0..n.
fn world() -> impl Strategy<Value = (Vec<u32>, Vec<(VertexId, VertexId, u32)>)> {
    (3usize..9).prop_flat_map(|n| {
        let values = proptest::collection::vec(0u32..20, n);
        let edges = proptest::collection::btree_map((0..n as VertexId, 0..n as VertexId), 1u32..16, 1..n * 2);
        (values, edges).prop_map(|(values, edges)| {
            let edges = edges.into_iter().filter(|((a, b), _)| a != b).map(|((a, b), w)| (a, b, w)).collect();
            (values, edges)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn index_tracks_every_merge(
        (values, edges) in world(),
        views in proptest::collection::vec((any::<u64>(), any::<u64>(), any::<u64>()), 1..10),
    ) {
        let n = values.len() as u64;
        let mut b = Belief::new(id("a1"), red(), Role::Explorer);
        let mut seen: BTreeSet<VertexId> = BTreeSet::new();
        for (step, (pick, probed, surveyed)) in views.into_iter().enumerate() {
            // Each view shows a few vertices and every edge between known
            // or shown ones, some probed and some surveyed.
            let shown: BTreeSet<VertexId> = (0..n).filter(|v| pick >> v & 1 == 1).map(|v| v as VertexId).collect();
            let all: BTreeSet<VertexId> = seen.union(&shown).copied().collect();
            let vertices: Vec<_> = shown
                .iter()
                .map(|&v| (v, (probed >> v & 1 == 1).then_some(values[v as usize])))
                .collect();
            let view_edges: Vec<Edge> = edges
                .iter()
                .enumerate()
                .filter(|(_, (a, b, _))| (shown.contains(a) || shown.contains(b)) && all.contains(a) && all.contains(b))
                .map(|(i, &(a, b, w))| if surveyed >> (i % 64) & 1 == 1 { Edge::surveyed(a, b, w) } else { Edge::unsurveyed(a, b) })
                .collect();
            let percept = Percept {
                step: step as u64 + 1,
                sender: id("a1"),
                vertices,
                edges: view_edges,
                agents: vec![],
                self_state: None,
            };
            b.integrate(&percept).unwrap();
            seen = all;
            assert_index_matches(&b);
        }
    }
}

/// Square 1-2-4 and 1-3-4 with equal costs, plus a pricier 1-5-4.
fn square(energy: u32) -> Belief {
    let mut b = Belief::new(id("a1"), red(), Role::Explorer);
    b.integrate(&own(
        1,
        &[(1, Some(1)), (2, Some(1)), (3, Some(1)), (4, Some(9)), (5, Some(1))],
        &[
            Edge::surveyed(1, 3, 2),
            Edge::surveyed(3, 4, 2),
            Edge::surveyed(1, 2, 3),
            Edge::surveyed(2, 4, 1),
            Edge::surveyed(1, 5, 1),
            Edge::surveyed(5, 4, 5),
        ],
        me(1, energy, 3),
    ))
    .unwrap();
    b
}

#[test]
fn goal_two_hops_away_takes_the_smallest_tied_hop() {
    let mut b = square(10);
    b.goal = Some(Goal::at(4, GoalKind::Occupy));
    let action = decide(&b, &PolicyConfig::default());
    let (vs, ws) = known_weights(&b);
    let d = floyd(&vs, &ws);
    let total = d[&(1, 4)];
    let want = vs.iter().copied().find(|&n| weight(&ws, 1, n).is_some_and(|w| w + d[&(n, 4)] == total)).unwrap();
    assert_eq!(want, 2);
    assert_eq!(action, Action::Goto(want));
}

#[test]
fn short_of_energy_for_the_next_hop_recharges() {
    let mut b = square(2);
    b.goal = Some(Goal::at(4, GoalKind::Occupy));
    assert_eq!(decide(&b, &PolicyConfig::default()), Action::Recharge);
}

#[test]
fn decisions_repeat_for_identical_beliefs() {
    let cfg = PolicyConfig::default();
    for energy in 0..12 {
        for goal in [None, Some(Goal::at(4, GoalKind::Occupy)), Some(Goal::at(5, GoalKind::Probe))] {
            let mut a = square(energy);
            let mut b = square(energy);
            a.goal = goal;
            b.goal = goal;
            assert_eq!(decide(&a, &cfg), decide(&b, &cfg));
        }
    }
}

fn with_agents(step: u64, health: u32, pos: VertexId, agents: Vec<SeenAgent>) -> Percept {
    let mut p = own(
        step,
        &[(1, Some(1)), (2, Some(1)), (3, Some(1))],
        &[Edge::surveyed(1, 2, 1), Edge::surveyed(2, 3, 1)],
        me(pos, 10, health),
    );
    p.agents = agents;
    p
}

fn enemy(name: &str, pos: VertexId) -> SeenAgent {
    SeenAgent { id: id(name), team: blue(), position: pos }
}

#[test]
fn parry_fires_for_a_known_saboteur_on_our_vertex() {
    let mut b = Belief::new(id("a1"), red(), Role::Explorer);
    b.integrate(&with_agents(1, 3, 2, vec![enemy("b1", 1)])).unwrap();
    assert!(!parry_policy(&b), "nobody has attacked yet");
    b.integrate(&with_agents(2, 2, 2, vec![enemy("b1", 2)])).unwrap();
    assert_eq!(b.saboteurs(), BTreeSet::from([id("b1")]));
    assert!(parry_policy(&b));
    assert_eq!(decide(&b, &PolicyConfig::default()), Action::Parry);
    let off = PolicyConfig { parry: false, ..PolicyConfig::default() };
    assert_ne!(decide(&b, &off), Action::Parry);
}

#[test]
fn parry_fires_for_an_adjacent_saboteur_only_after_a_recent_attack() {
    let mut b = Belief::new(id("a1"), red(), Role::Explorer);
    b.integrate(&with_agents(1, 3, 2, vec![enemy("b1", 1)])).unwrap();
    b.integrate(&with_agents(2, 2, 2, vec![enemy("b1", 3)])).unwrap();
    assert!(parry_policy(&b), "attacked last step, saboteur one hop away");
    for step in 3..6 {
        b.integrate(&with_agents(step, 2, 2, vec![enemy("b1", if step % 2 == 0 { 3 } else { 1 })])).unwrap();
    }
    assert!(!parry_policy(&b), "the attack is too old for an adjacent saboteur");
    b.integrate(&with_agents(6, 2, 2, vec![enemy("b1", 2)])).unwrap();
    assert!(parry_policy(&b), "co-located saboteurs always trigger");
}

#[test]
fn unknown_enemies_do_not_trigger_parry() {
    let mut b = Belief::new(id("a1"), red(), Role::Explorer);
    b.integrate(&with_agents(1, 3, 2, vec![enemy("b2", 2)])).unwrap();
    b.integrate(&with_agents(2, 3, 2, vec![enemy("b2", 2)])).unwrap();
    assert!(!parry_policy(&b));
}
