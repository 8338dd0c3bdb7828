use std::collections::HashMap;

use super::{Edge, GraphError, VertexId, WorldGraph};

/// A reconstructed shortest path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    pub vertices: Vec<VertexId>,
    pub cost: u64,
}

/// All-pairs shortest-path distances and first-step table over a growing
/// graph.
///
/// Distances are `Option<u64>`; `None` is the unreachable marker, so
/// relaxation never adds to a sentinel.
///
/// The first-step table is canonical: `next_hop(i, j)` is always the
/// smallest-id neighbor `k` of `i` with `w(i, k) + dist(k, j) == dist(i, j)`.
/// Both the full rebuild and the incremental updates maintain that choice, so
/// two indexes over the same graph compare equal no matter how they were
/// grown.
///
/// Every examined pair relaxation is counted in [`DistanceIndex::ops`].
#[derive(Debug, Clone, Default)]
pub struct DistanceIndex {
    order: Vec<VertexId>,
    slot: HashMap<VertexId, usize>,
    adj: Vec<Vec<(usize, u32)>>,
    dist: Vec<Vec<Option<u64>>>,
    next: Vec<Vec<Option<usize>>>,
    ops: u64,
}

impl DistanceIndex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Full Floyd–Warshall build. Vertices are indexed in ascending id order.
    pub fn build(graph: &WorldGraph) -> Self {
        let mut index = Self::new();
        for v in graph.vertex_ids() {
            index.push_slot(v);
        }
        for e in graph.edges() {
            let (a, b) = (index.slot[&e.a], index.slot[&e.b]);
            let w = e.effective_weight();
            index.adj[a].push((b, w));
            index.adj[b].push((a, w));
        }
        index.floyd_warshall();
        index
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.slot.contains_key(&v)
    }

    /// Indexed vertices in insertion order.
    pub fn vertices(&self) -> &[VertexId] {
        &self.order
    }

    /// Pair relaxations examined since creation or the last reset.
    pub fn ops(&self) -> u64 {
        self.ops
    }

    pub fn reset_ops(&mut self) {
        self.ops = 0;
    }

    pub fn dist(&self, from: VertexId, to: VertexId) -> Result<Option<u64>, GraphError> {
        let (i, j) = (self.lookup(from)?, self.lookup(to)?);
        Ok(self.dist[i][j])
    }

    pub fn next_hop(&self, from: VertexId, to: VertexId) -> Result<Option<VertexId>, GraphError> {
        let (i, j) = (self.lookup(from)?, self.lookup(to)?);
        Ok(self.next[i][j].map(|k| self.order[k]))
    }

    /// Effective weight of the indexed edge `x`-`y`, if any.
    pub fn weight(&self, x: VertexId, y: VertexId) -> Option<u32> {
        let (i, j) = (*self.slot.get(&x)?, *self.slot.get(&y)?);
        self.adj[i].iter().find(|&&(k, _)| k == j).map(|&(_, w)| w)
    }

    /// Cheapest path from `from` to `to`, or `None` when unreachable.
    pub fn shortest_path(&self, from: VertexId, to: VertexId) -> Result<Option<Path>, GraphError> {
        let (mut i, j) = (self.lookup(from)?, self.lookup(to)?);
        let Some(cost) = self.dist[i][j] else {
            return Ok(None);
        };
        let mut vertices = vec![from];
        while i != j {
            i = self.next[i][j].expect("finite distance has a first step");
            vertices.push(self.order[i]);
        }
        Ok(Some(Path { vertices, cost }))
    }

    /// Adds `v` with the given incident edges, each connecting `v` to an
    /// already indexed vertex. Costs one single-source pass from `v` plus one
    /// relaxation of every pair through `v`.
    pub fn insert_vertex(&mut self, v: VertexId, incident: &[Edge]) -> Result<(), GraphError> {
        if self.contains(v) {
            return Err(GraphError::DuplicateVertex(v));
        }
        let mut links: Vec<(usize, u32)> = Vec::with_capacity(incident.len());
        for e in incident {
            let other = e.other(v).ok_or(GraphError::NotIncident(v, e.a, e.b))?;
            e.validate()?;
            let k = self.lookup(other)?;
            if links.iter().any(|&(seen, _)| seen == k) {
                return Err(GraphError::DuplicateEdge(e.a, e.b));
            }
            links.push((k, e.effective_weight()));
        }

        let n = self.order.len();
        let s = self.push_slot(v);
        for &(k, w) in &links {
            self.adj[k].push((s, w));
        }
        self.adj[s] = links;

        // dist(v, j): first step out of v is some incident edge, and the rest
        // of a shortest path cannot come back through v.
        for j in 0..n {
            let mut best: Option<(u64, usize)> = None;
            for &(k, w) in &self.adj[s] {
                self.ops += 1;
                if let Some(d) = self.dist[k][j] {
                    let cand = (u64::from(w) + d, k);
                    if self.improves(cand, best) {
                        best = Some(cand);
                    }
                }
            }
            if let Some((d, k)) = best {
                self.dist[s][j] = Some(d);
                self.dist[j][s] = Some(d);
                self.next[s][j] = Some(k);
            }
        }

        // First step from every i toward v.
        for i in 0..n {
            let Some(target) = self.dist[i][s] else {
                continue;
            };
            let mut hop: Option<usize> = None;
            for &(k, w) in &self.adj[i] {
                self.ops += 1;
                let via = self.dist[k][s].map(|d| d + u64::from(w));
                if via == Some(target) && hop.is_none_or(|h| self.order[k] < self.order[h]) {
                    hop = Some(k);
                }
            }
            self.next[i][s] = hop;
        }

        // Relax every other pair through v.
        for i in 0..n {
            let to_v = self.dist[i][s];
            let hop_v = self.next[i][s];
            for j in 0..n {
                self.ops += 1;
                if i == j {
                    continue;
                }
                if let (Some(a), Some(b)) = (to_v, self.dist[s][j]) {
                    self.offer(i, j, a + b, hop_v.expect("reachable"));
                }
            }
        }
        Ok(())
    }

    /// Adds the edge, or changes its weight. New edges and weight decreases
    /// relax every pair through the edge's endpoints; a weight increase can
    /// lengthen existing paths and falls back to a full rebuild.
    ///
    /// Returns whether the index changed.
    pub fn update_edge(&mut self, edge: &Edge) -> Result<bool, GraphError> {
        edge.validate()?;
        let (a, b) = (self.lookup(edge.a)?, self.lookup(edge.b)?);
        let w = edge.effective_weight();
        match self.adj[a].iter().find(|&&(k, _)| k == b).map(|&(_, old)| old) {
            Some(old) if old == w => return Ok(false),
            Some(old) => {
                self.set_weight(a, b, w);
                self.set_weight(b, a, w);
                if w > old {
                    self.floyd_warshall();
                    return Ok(true);
                }
            }
            None => {
                self.adj[a].push((b, w));
                self.adj[b].push((a, w));
            }
        }

        let n = self.order.len();
        let w = u64::from(w);
        let to_a: Vec<_> = (0..n).map(|i| (self.dist[i][a], self.next[i][a])).collect();
        let to_b: Vec<_> = (0..n).map(|i| (self.dist[i][b], self.next[i][b])).collect();
        let from_a: Vec<_> = self.dist[a].clone();
        let from_b: Vec<_> = self.dist[b].clone();

        for i in 0..n {
            for j in 0..n {
                self.ops += 1;
                if i == j {
                    continue;
                }
                // i ~> a -> b ~> j
                if let (Some(x), Some(y)) = (to_a[i].0, from_b[j]) {
                    let hop = if i == a { b } else { to_a[i].1.expect("reachable") };
                    self.offer(i, j, x + w + y, hop);
                }
                // i ~> b -> a ~> j
                if let (Some(x), Some(y)) = (to_b[i].0, from_a[j]) {
                    let hop = if i == b { a } else { to_b[i].1.expect("reachable") };
                    self.offer(i, j, x + w + y, hop);
                }
            }
        }
        Ok(true)
    }

    /// Recomputes every entry from the stored adjacency.
    pub fn rebuild(&mut self) {
        self.floyd_warshall();
    }

    fn set_weight(&mut self, from: usize, to: usize, w: u32) {
        if let Some(entry) = self.adj[from].iter_mut().find(|(k, _)| *k == to) {
            entry.1 = w;
        }
    }

    fn lookup(&self, v: VertexId) -> Result<usize, GraphError> {
        self.slot.get(&v).copied().ok_or(GraphError::UnknownVertex(v))
    }

    fn push_slot(&mut self, v: VertexId) -> usize {
        let s = self.order.len();
        self.order.push(v);
        self.slot.insert(v, s);
        self.adj.push(Vec::new());
        for row in &mut self.dist {
            row.push(None);
        }
        for row in &mut self.next {
            row.push(None);
        }
        let mut row = vec![None; s + 1];
        row[s] = Some(0);
        self.dist.push(row);
        self.next.push(vec![None; s + 1]);
        s
    }

    /// Lexicographic on (distance, first-step vertex id).
    fn improves(&self, cand: (u64, usize), current: Option<(u64, usize)>) -> bool {
        match current {
            None => true,
            Some((d, k)) => cand.0 < d || (cand.0 == d && self.order[cand.1] < self.order[k]),
        }
    }

    fn offer(&mut self, i: usize, j: usize, d: u64, hop: usize) {
        let current = self.dist[i][j].zip(self.next[i][j]);
        if self.improves((d, hop), current) {
            self.dist[i][j] = Some(d);
            self.next[i][j] = Some(hop);
        }
    }

    fn floyd_warshall(&mut self) {
        let n = self.order.len();
        for i in 0..n {
            self.dist[i].fill(None);
            self.next[i].fill(None);
            self.dist[i][i] = Some(0);
        }
        for i in 0..n {
            for idx in 0..self.adj[i].len() {
                let (j, w) = self.adj[i][idx];
                self.dist[i][j] = Some(u64::from(w));
                self.next[i][j] = Some(j);
            }
        }
        for k in 0..n {
            for i in 0..n {
                self.ops += n as u64;
                if i == k {
                    continue;
                }
                let (Some(to_k), Some(hop)) = (self.dist[i][k], self.next[i][k]) else {
                    continue;
                };
                for j in 0..n {
                    if j == k || j == i {
                        continue;
                    }
                    if let Some(rest) = self.dist[k][j] {
                        self.offer(i, j, to_k + rest, hop);
                    }
                }
            }
        }
    }
}

/// Two indexes are equal when they cover the same vertices with the same
/// distances and first steps, regardless of insertion order.
impl PartialEq for DistanceIndex {
    fn eq(&self, other: &Self) -> bool {
        if self.order.len() != other.order.len() {
            return false;
        }
        let Some(map): Option<Vec<usize>> = self.order.iter().map(|v| other.slot.get(v).copied()).collect() else {
            return false;
        };
        (0..self.order.len()).all(|i| {
            (0..self.order.len()).all(|j| {
                let (oi, oj) = (map[i], map[j]);
                self.dist[i][j] == other.dist[oi][oj]
                    && self.next[i][j].map(|k| self.order[k]) == other.next[oi][oj].map(|k| other.order[k])
            })
        })
    }
}

impl Eq for DistanceIndex {}
