use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};

use super::{GraphError, VertexId, WorldGraph};

/// Nearest vertex by hop count satisfying `predicate`, ties broken by the
/// smallest id. The start vertex itself is checked first.
pub fn bfs_nearest<F>(graph: &WorldGraph, start: VertexId, mut predicate: F) -> Result<Option<VertexId>, GraphError>
where
    F: FnMut(VertexId) -> bool,
{
    if !graph.contains(start) {
        return Err(GraphError::UnknownVertex(start));
    }
    let mut seen = BTreeMap::from([(start, ())]);
    let mut layer = vec![start];
    while !layer.is_empty() {
        layer.sort_unstable();
        if let Some(&hit) = layer.iter().find(|&&v| predicate(v)) {
            return Ok(Some(hit));
        }
        let mut next = Vec::new();
        for &v in &layer {
            for (n, _) in graph.neighbors(v) {
                if seen.insert(n, ()).is_none() {
                    next.push(n);
                }
            }
        }
        layer = next;
    }
    Ok(None)
}

/// Exploration search: nearest vertex that is unprobed or has an unsurveyed
/// incident edge.
pub fn bfs_frontier(graph: &WorldGraph, start: VertexId) -> Result<Option<VertexId>, GraphError> {
    bfs_nearest(graph, start, |v| graph.is_frontier(v))
}

/// Hop counts from `start` to every reachable vertex.
pub fn hop_distances(graph: &WorldGraph, start: VertexId) -> Result<BTreeMap<VertexId, u32>, GraphError> {
    if !graph.contains(start) {
        return Err(GraphError::UnknownVertex(start));
    }
    let mut hops = BTreeMap::from([(start, 0)]);
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        let d = hops[&v];
        for (n, _) in graph.neighbors(v) {
            if let std::collections::btree_map::Entry::Vacant(slot) = hops.entry(n) {
                slot.insert(d + 1);
                queue.push_back(n);
            }
        }
    }
    Ok(hops)
}

/// Counts edge relaxations performed by [`single_source`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchCounter {
    pub relaxations: u64,
}

/// Plain Dijkstra over effective weights: the from-scratch search an agent
/// can run every step instead of keeping an index.
pub fn single_source(
    graph: &WorldGraph,
    source: VertexId,
    counter: &mut SearchCounter,
) -> Result<BTreeMap<VertexId, u64>, GraphError> {
    if !graph.contains(source) {
        return Err(GraphError::UnknownVertex(source));
    }
    let mut dist = BTreeMap::from([(source, 0u64)]);
    let mut heap = BinaryHeap::from([Reverse((0u64, source))]);
    while let Some(Reverse((d, v))) = heap.pop() {
        if dist.get(&v).is_some_and(|&best| d > best) {
            continue;
        }
        for (n, w) in graph.neighbors(v) {
            counter.relaxations += 1;
            let cand = d + u64::from(w.unwrap_or(super::UNSURVEYED_WEIGHT));
            if dist.get(&n).is_none_or(|&cur| cand < cur) {
                dist.insert(n, cand);
                heap.push(Reverse((cand, n)));
            }
        }
    }
    Ok(dist)
}

#[cfg(test)]
mod tests {
    use super::super::{Edge, Vertex};
    use super::*;

    fn path(values: &[Option<u32>]) -> WorldGraph {
        let mut g = WorldGraph::new();
        for (id, &v) in values.iter().enumerate() {
            g.add_vertex(Vertex::new(id as VertexId, v)).unwrap();
        }
        for id in 1..values.len() as VertexId {
            g.add_edge(Edge::surveyed(id - 1, id, 1)).unwrap();
        }
        g
    }

    #[test]
    fn nearest_start_itself() {
        let g = path(&[Some(3), Some(0)]);
        assert_eq!(bfs_nearest(&g, 0, |_| true), Ok(Some(0)));
    }

    #[test]
    fn nearest_valued_vertex() {
        let g = path(&[Some(0), Some(0), Some(4)]);
        let hit = bfs_nearest(&g, 0, |v| g.value(v).flatten().unwrap_or(0) > 0);
        assert_eq!(hit, Ok(Some(2)));
        assert_eq!(bfs_nearest(&g, 0, |_| false), Ok(None));
        assert_eq!(bfs_nearest(&g, 9, |_| true), Err(GraphError::UnknownVertex(9)));
    }

    #[test]
    fn nearest_tie_takes_smallest_id() {
        // Star centred on 5 with leaves 9, 7, 8.
        let mut g = WorldGraph::new();
        for v in [5, 7, 8, 9] {
            g.add_vertex(Vertex::new(v, None)).unwrap();
        }
        for leaf in [9, 7, 8] {
            g.add_edge(Edge::surveyed(5, leaf, 1)).unwrap();
        }
        assert_eq!(bfs_nearest(&g, 5, |v| v != 5), Ok(Some(7)));
    }

    #[test]
    fn frontier_cases() {
        let explored = {
            let mut g = path(&[Some(1), Some(1)]);
            g.record_edge(Edge::surveyed(0, 1, 1)).unwrap();
            g
        };
        assert_eq!(bfs_frontier(&explored, 0), Ok(None));

        let g = path(&[Some(1), None]);
        assert_eq!(bfs_frontier(&g, 0), Ok(Some(1)));

        let g = path(&[Some(1), Some(1), None, None]);
        assert_eq!(bfs_frontier(&g, 0), Ok(Some(2)));
    }

    #[test]
    fn dijkstra_counts_relaxations() {
        let g = path(&[None, None, None]);
        let mut counter = SearchCounter::default();
        let dist = single_source(&g, 0, &mut counter).unwrap();
        assert_eq!(dist[&2], 2);
        assert_eq!(counter.relaxations, 4);
    }

    #[test]
    fn hop_counts() {
        let g = path(&[None, None, None]);
        let hops = hop_distances(&g, 2).unwrap();
        assert_eq!(hops[&0], 2);
        assert_eq!(hops.len(), 3);
    }
}
