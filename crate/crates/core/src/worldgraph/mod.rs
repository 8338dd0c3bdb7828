//! Graph model of the match world, the incremental all-pairs shortest-path
//! index agents navigate with, and the breadth-first searches used for goal
//! finding and exploration.
//!
//! The same [`WorldGraph`] type holds both the simulator's true world, where
//! every value and weight is known, and an agent's partial view, where vertex
//! values stay `None` until probed and edge weights stay `None` until surveyed.

mod index;
mod search;
mod text;

use std::collections::BTreeMap;

use thiserror::Error;

pub use index::{DistanceIndex, Path};
pub use search::{bfs_frontier, bfs_nearest, hop_distances, single_source, SearchCounter};
pub use text::{graph_from_records, parse_graph, parse_graph_record, write_graph, GraphRecord, ParseError};

pub type VertexId = u32;

/// Weight assumed for an edge whose cost has not been surveyed yet. It is the
/// upper end of the generated weight range, so a later survey normally only
/// lowers the cost.
pub const UNSURVEYED_WEIGHT: u32 = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("vertex {0} already exists")]
    DuplicateVertex(VertexId),
    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),
    #[error("self-loop on vertex {0}")]
    SelfLoop(VertexId),
    #[error("edge {0}-{1} already exists")]
    DuplicateEdge(VertexId, VertexId),
    #[error("edge {0}-{1} has weight 0")]
    ZeroWeight(VertexId, VertexId),
    #[error("edge {1}-{2} is not incident to inserted vertex {0}")]
    NotIncident(VertexId, VertexId, VertexId),
    #[error("vertex {id} already probed with value {known}, got {got}")]
    ValueConflict { id: VertexId, known: u32, got: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Vertex {
    pub id: VertexId,
    /// `None` until probed.
    pub value: Option<u32>,
}

impl Vertex {
    pub fn new(id: VertexId, value: Option<u32>) -> Self {
        Self { id, value }
    }

    pub fn probed(id: VertexId, value: u32) -> Self {
        Self { id, value: Some(value) }
    }
}

/// Undirected edge, stored with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub a: VertexId,
    pub b: VertexId,
    /// `None` until surveyed.
    pub weight: Option<u32>,
}

impl Edge {
    pub fn new(x: VertexId, y: VertexId, weight: Option<u32>) -> Self {
        let (a, b) = if x <= y { (x, y) } else { (y, x) };
        Self { a, b, weight }
    }

    pub fn surveyed(x: VertexId, y: VertexId, weight: u32) -> Self {
        Self::new(x, y, Some(weight))
    }

    pub fn unsurveyed(x: VertexId, y: VertexId) -> Self {
        Self::new(x, y, None)
    }

    /// Cost used for path planning.
    pub fn effective_weight(&self) -> u32 {
        self.weight.unwrap_or(UNSURVEYED_WEIGHT)
    }

    pub fn other(&self, v: VertexId) -> Option<VertexId> {
        if v == self.a {
            Some(self.b)
        } else if v == self.b {
            Some(self.a)
        } else {
            None
        }
    }

    fn validate(&self) -> Result<(), GraphError> {
        if self.a == self.b {
            return Err(GraphError::SelfLoop(self.a));
        }
        if self.weight == Some(0) {
            return Err(GraphError::ZeroWeight(self.a, self.b));
        }
        Ok(())
    }
}

/// What a `record_*` call changed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Change {
    Unchanged,
    Added,
    /// An unknown value or weight became known (or a known weight changed).
    Learned,
}

/// Weighted undirected graph with sorted, deterministic iteration order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WorldGraph {
    values: BTreeMap<VertexId, Option<u32>>,
    adjacency: BTreeMap<VertexId, BTreeMap<VertexId, Option<u32>>>,
}

impl WorldGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, vertex: Vertex) -> Result<(), GraphError> {
        if self.values.contains_key(&vertex.id) {
            return Err(GraphError::DuplicateVertex(vertex.id));
        }
        self.values.insert(vertex.id, vertex.value);
        self.adjacency.insert(vertex.id, BTreeMap::new());
        Ok(())
    }

    pub fn add_edge(&mut self, edge: Edge) -> Result<(), GraphError> {
        edge.validate()?;
        self.require(edge.a)?;
        self.require(edge.b)?;
        if self.adjacency[&edge.a].contains_key(&edge.b) {
            return Err(GraphError::DuplicateEdge(edge.a, edge.b));
        }
        self.link(edge);
        Ok(())
    }

    /// Adds the vertex if missing and learns its value if newly probed.
    /// A probed value never changes afterwards.
    pub fn record_vertex(&mut self, vertex: Vertex) -> Result<Change, GraphError> {
        match self.values.get_mut(&vertex.id) {
            None => {
                self.add_vertex(vertex)?;
                Ok(Change::Added)
            }
            Some(slot) => match (*slot, vertex.value) {
                (_, None) => Ok(Change::Unchanged),
                (None, Some(v)) => {
                    *slot = Some(v);
                    Ok(Change::Learned)
                }
                (Some(known), Some(got)) if known == got => Ok(Change::Unchanged),
                (Some(known), Some(got)) => Err(GraphError::ValueConflict { id: vertex.id, known, got }),
            },
        }
    }

    /// Adds the edge if missing, or replaces its weight with a surveyed one.
    /// An unsurveyed report never erases a known weight.
    pub fn record_edge(&mut self, edge: Edge) -> Result<Change, GraphError> {
        edge.validate()?;
        self.require(edge.a)?;
        self.require(edge.b)?;
        match self.adjacency[&edge.a].get(&edge.b).copied() {
            None => {
                self.link(edge);
                Ok(Change::Added)
            }
            Some(known) => match edge.weight {
                None => Ok(Change::Unchanged),
                Some(w) if known == Some(w) => Ok(Change::Unchanged),
                Some(_) => {
                    self.link(edge);
                    Ok(Change::Learned)
                }
            },
        }
    }

    fn link(&mut self, edge: Edge) {
        self.adjacency.get_mut(&edge.a).expect("checked").insert(edge.b, edge.weight);
        self.adjacency.get_mut(&edge.b).expect("checked").insert(edge.a, edge.weight);
    }

    fn require(&self, v: VertexId) -> Result<(), GraphError> {
        if self.values.contains_key(&v) {
            Ok(())
        } else {
            Err(GraphError::UnknownVertex(v))
        }
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.values.contains_key(&v)
    }

    pub fn vertex_count(&self) -> usize {
        self.values.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.values().map(BTreeMap::len).sum::<usize>() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `None` if the vertex is unknown, `Some(None)` if known but unprobed.
    pub fn value(&self, v: VertexId) -> Option<Option<u32>> {
        self.values.get(&v).copied()
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.values.iter().map(|(&id, &value)| Vertex { id, value })
    }

    pub fn vertex_ids(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.values.keys().copied()
    }

    /// Every edge once, sorted by `(a, b)`.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.adjacency.iter().flat_map(|(&a, nbrs)| nbrs.range(a + 1..).map(move |(&b, &weight)| Edge { a, b, weight }))
    }

    pub fn edge(&self, x: VertexId, y: VertexId) -> Option<Edge> {
        self.adjacency.get(&x)?.get(&y).map(|&weight| Edge::new(x, y, weight))
    }

    /// Neighbors in ascending id order, with their (possibly unknown) weight.
    pub fn neighbors(&self, v: VertexId) -> impl Iterator<Item = (VertexId, Option<u32>)> + '_ {
        self.adjacency.get(&v).into_iter().flat_map(|nbrs| nbrs.iter().map(|(&n, &w)| (n, w)))
    }

    pub fn incident_edges(&self, v: VertexId) -> Vec<Edge> {
        self.neighbors(v).map(|(n, w)| Edge::new(v, n, w)).collect()
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adjacency.get(&v).map_or(0, BTreeMap::len)
    }

    /// Exploration target: unprobed, or touching an unsurveyed edge.
    pub fn is_frontier(&self, v: VertexId) -> bool {
        match self.values.get(&v) {
            None => false,
            Some(None) => true,
            Some(Some(_)) => self.neighbors(v).any(|(_, w)| w.is_none()),
        }
    }

    /// Graph with every incident edge of vertices in `keep` and nothing else.
    pub fn induced(&self, keep: &[VertexId]) -> WorldGraph {
        let mut out = WorldGraph::new();
        for &v in keep {
            if let Some(value) = self.value(v) {
                let _ = out.add_vertex(Vertex::new(v, value));
            }
        }
        for e in self.edges() {
            if out.contains(e.a) && out.contains(e.b) {
                let _ = out.add_edge(e);
            }
        }
        out
    }
}
