use std::collections::BTreeMap;

use marsring_core::worldgraph::{
    bfs_nearest, hop_distances, DistanceIndex, Edge, Vertex, VertexId, WorldGraph, UNSURVEYED_WEIGHT,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Bellman-Ford from every source over the edge list, then the canonical
/// first step by scanning neighbors. Shares no code with the index.
struct Oracle {
    dist: BTreeMap<(VertexId, VertexId), Option<u64>>,
    next: BTreeMap<(VertexId, VertexId), Option<VertexId>>,
}

fn oracle(graph: &WorldGraph) -> Oracle {
    let ids: Vec<VertexId> = graph.vertex_ids().collect();
    let edges: Vec<Edge> = graph.edges().collect();
    let mut dist = BTreeMap::new();
    for &s in &ids {
        let mut d: BTreeMap<VertexId, Option<u64>> = ids.iter().map(|&v| (v, None)).collect();
        d.insert(s, Some(0));
        for _ in 0..ids.len() {
            for e in &edges {
                let w = u64::from(e.effective_weight());
                for (x, y) in [(e.a, e.b), (e.b, e.a)] {
                    if let Some(dx) = d[&x] {
                        if d[&y].is_none_or(|dy| dx + w < dy) {
                            d.insert(y, Some(dx + w));
                        }
                    }
                }
            }
        }
        for (&t, &dt) in &d {
            dist.insert((s, t), dt);
        }
    }
    let mut next = BTreeMap::new();
    for &i in &ids {
        for &j in &ids {
            let hop = match dist[&(i, j)] {
                Some(d) if i != j => graph
                    .neighbors(i)
                    .find(|&(k, w)| dist[&(k, j)].map(|dk| dk + u64::from(w.unwrap_or(UNSURVEYED_WEIGHT))) == Some(d)),
                _ => None,
            };
            next.insert((i, j), hop.map(|(k, _)| k));
        }
    }
    Oracle { dist, next }
}

fn assert_matches_oracle(index: &DistanceIndex, graph: &WorldGraph) {
    let o = oracle(graph);
    for (&(i, j), &d) in &o.dist {
        assert_eq!(index.dist(i, j).unwrap(), d, "dist({i},{j})");
        assert_eq!(index.next_hop(i, j).unwrap(), o.next[&(i, j)], "next_hop({i},{j})");
    }
}

fn assert_metric(index: &DistanceIndex) {
    let ids = index.vertices();
    for &i in ids {
        assert_eq!(index.dist(i, i).unwrap(), Some(0));
        for &j in ids {
            let dij = index.dist(i, j).unwrap();
            assert_eq!(dij, index.dist(j, i).unwrap(), "symmetry {i},{j}");
            for &k in ids {
                if let (Some(a), Some(b)) = (index.dist(i, k).unwrap(), index.dist(k, j).unwrap()) {
                    let d = dij.expect("reachable through k");
                    assert!(d <= a + b, "triangle {i},{j} via {k}");
                }
            }
        }
    }
}

fn assert_paths_valid(index: &DistanceIndex, graph: &WorldGraph) {
    for &i in index.vertices() {
        for &j in index.vertices() {
            match index.shortest_path(i, j).unwrap() {
                None => assert_eq!(index.dist(i, j).unwrap(), None),
                Some(path) => {
                    assert_eq!(path.vertices.first(), Some(&i));
                    assert_eq!(path.vertices.last(), Some(&j));
                    let cost: u64 = path
                        .vertices
                        .windows(2)
                        .map(|w| {
                            let e = graph.edge(w[0], w[1]).expect("consecutive vertices adjacent");
                            u64::from(e.effective_weight())
                        })
                        .sum();
                    assert_eq!(Some(cost), index.dist(i, j).unwrap());
                    assert_eq!(cost, path.cost);
                }
            }
        }
    }
}

/// Random graph with sparse ids; returns it plus a random insertion order.
fn random_graph(rng: &mut ChaCha8Rng, max_n: usize) -> (WorldGraph, Vec<VertexId>) {
    let n = rng.gen_range(1..=max_n);
    let density: f64 = rng.gen_range(0.1..=0.9);
    let mut ids: Vec<VertexId> = (0..n as VertexId).map(|i| i * 3 + rng.gen_range(0..3)).collect();
    let mut g = WorldGraph::new();
    for &v in &ids {
        g.add_vertex(Vertex::new(v, None)).unwrap();
    }
    for x in 0..n {
        for y in x + 1..n {
            if rng.gen_bool(density) {
                g.add_edge(Edge::surveyed(ids[x], ids[y], rng.gen_range(1..=10))).unwrap();
            }
        }
    }
    ids.shuffle(rng);
    (g, ids)
}

fn grow(graph: &WorldGraph, order: &[VertexId]) -> DistanceIndex {
    let mut index = DistanceIndex::new();
    for &v in order {
        let incident: Vec<Edge> =
            graph.incident_edges(v).into_iter().filter(|e| index.contains(e.other(v).unwrap())).collect();
        index.insert_vertex(v, &incident).unwrap();
    }
    index
}

#[test]
fn build_matches_bellman_ford_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..40 {
        let (g, _) = random_graph(&mut rng, 14);
        let index = DistanceIndex::build(&g);
        assert_matches_oracle(&index, &g);
        assert_metric(&index);
        assert_paths_valid(&index, &g);
    }
}

#[test]
fn incremental_equals_rebuild_on_100_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2011);
    for round in 0..100 {
        let (g, order) = random_graph(&mut rng, 50);
        let grown = grow(&g, &order);
        let built = DistanceIndex::build(&g);
        assert_eq!(grown, built, "graph #{round}");
    }
}

#[test]
fn incremental_matches_oracle_with_unsurveyed_edges() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..30 {
        let (g, order) = random_graph(&mut rng, 12);
        let hidden: Vec<Edge> = g.edges().filter(|_| rng.gen_bool(0.4)).collect();
        let mut partial = WorldGraph::new();
        for v in g.vertices() {
            partial.add_vertex(v).unwrap();
        }
        for e in g.edges() {
            let e = if hidden.contains(&e) { Edge::unsurveyed(e.a, e.b) } else { e };
            partial.add_edge(e).unwrap();
        }
        let mut index = grow(&partial, &order);
        assert_matches_oracle(&index, &partial);
        // Surveying reveals weights no larger than the assumed one.
        for e in hidden {
            partial.record_edge(e).unwrap();
            index.update_edge(&e).unwrap();
            assert_eq!(index, DistanceIndex::build(&partial));
        }
        assert_matches_oracle(&index, &partial);
    }
}

#[test]
fn insertion_cost_is_quadratic() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in [32usize, 48, 64] {
        let mut g = WorldGraph::new();
        for v in 0..n as VertexId {
            g.add_vertex(Vertex::new(v, None)).unwrap();
        }
        for x in 0..n as VertexId {
            for y in x + 1..n as VertexId {
                if rng.gen_bool(0.3) {
                    g.add_edge(Edge::surveyed(x, y, rng.gen_range(1..=10))).unwrap();
                }
            }
        }
        let last = n as VertexId - 1;
        let keep: Vec<VertexId> = (0..last).collect();
        let mut index = DistanceIndex::build(&g.induced(&keep));
        let build_ops = index.ops();
        index.reset_ops();
        index.insert_vertex(last, &g.incident_edges(last)).unwrap();
        let insert_ops = index.ops();

        let m = (n - 1) as u64;
        assert_eq!(build_ops, m * m * m);
        // n^2 pair relaxations plus the degree-bounded single-source and
        // first-step scans, each at most 2 * edges.
        let edges = g.edge_count() as u64;
        assert!(insert_ops <= m * m + m * g.degree(last) as u64 + 2 * edges, "n={n}");
        assert!(insert_ops < build_ops / 8, "n={n}: {insert_ops} vs {build_ops}");
        assert_eq!(index, DistanceIndex::build(&g));
    }
}

#[test]
fn bfs_nearest_matches_exhaustive_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        let (g, _) = random_graph(&mut rng, 10);
        let ids: Vec<VertexId> = g.vertex_ids().collect();
        let start = *ids.choose(&mut rng).unwrap();
        let marked: Vec<VertexId> = ids.iter().copied().filter(|_| rng.gen_bool(0.3)).collect();
        let hit = bfs_nearest(&g, start, |v| marked.contains(&v)).unwrap();
        let hops = hop_distances(&g, start).unwrap();
        let best = marked.iter().filter_map(|v| hops.get(v).map(|&h| (h, *v))).min();
        assert_eq!(hit, best.map(|(_, v)| v));
    }
}

fn arb_graph() -> impl Strategy<Value = (WorldGraph, Vec<VertexId>, Vec<(usize, usize, u32)>)> {
    (1usize..12).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|x| (x + 1..n).map(move |y| (x, y))).collect();
        let m = pairs.len();
        (
            proptest::collection::vec(proptest::option::of(1u32..=10), m),
            Just(pairs),
            Just((0..n as VertexId).collect::<Vec<_>>()).prop_shuffle(),
            proptest::collection::vec((0..n, 0..n, 1u32..=10), 0..6),
        )
            .prop_map(|(weights, pairs, order, updates)| {
                let mut g = WorldGraph::new();
                for v in 0..order.len() as VertexId {
                    g.add_vertex(Vertex::new(v, None)).unwrap();
                }
                for ((x, y), w) in pairs.into_iter().zip(weights) {
                    if let Some(w) = w {
                        g.add_edge(Edge::surveyed(x as VertexId, y as VertexId, w)).unwrap();
                    }
                }
                (g, order, updates)
            })
    })
}

proptest! {
    #[test]
    fn any_insertion_order_equals_rebuild((g, order, _) in arb_graph()) {
        let grown = grow(&g, &order);
        prop_assert_eq!(&grown, &DistanceIndex::build(&g));
        assert_metric(&grown);
        assert_paths_valid(&grown, &g);
    }

    #[test]
    fn edge_updates_equal_rebuild((g, order, updates) in arb_graph()) {
        let mut g = g;
        let mut index = grow(&g, &order);
        for (x, y, w) in updates {
            if x == y {
                continue;
            }
            let e = Edge::surveyed(x as VertexId, y as VertexId, w);
            g.record_edge(e).unwrap();
            index.update_edge(&e).unwrap();
            prop_assert_eq!(&index, &DistanceIndex::build(&g));
        }
    }
}
