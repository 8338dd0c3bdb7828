use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::worldgraph::{Edge, Vertex, VertexId, WorldGraph};

/// Generator parameters. `density` is the fraction of the non-tree vertex
/// pairs that receive an extra edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldParams {
    pub vertices: usize,
    pub density: f64,
    pub max_value: u32,
    pub max_weight: u32,
}

impl Default for WorldParams {
    fn default() -> Self {
        Self { vertices: 20, density: 0.2, max_value: 10, max_weight: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorldError {
    #[error("a world needs at least 2 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("density {0} is outside [0, 1]")]
    Density(f64),
    #[error("max_weight must be at least 1")]
    ZeroWeight,
}

/// Random connected world: a uniform random spanning tree plus
/// `round(density * (pairs - (n - 1)))` extra edges. Vertex ids run `0..n`.
pub fn generate_world(params: &WorldParams, seed: u64) -> Result<WorldGraph, WorldError> {
    let n = params.vertices;
    if n < 2 {
        return Err(WorldError::TooFewVertices(n));
    }
    if !(0.0..=1.0).contains(&params.density) {
        return Err(WorldError::Density(params.density));
    }
    if params.max_weight == 0 {
        return Err(WorldError::ZeroWeight);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graph = WorldGraph::new();
    for id in 0..n as VertexId {
        graph.add_vertex(Vertex::probed(id, rng.gen_range(0..=params.max_value))).expect("fresh id");
    }

    let mut order: Vec<VertexId> = (0..n as VertexId).collect();
    order.shuffle(&mut rng);
    for i in 1..n {
        let parent = order[rng.gen_range(0..i)];
        let w = rng.gen_range(1..=params.max_weight);
        graph.add_edge(Edge::surveyed(order[i], parent, w)).expect("tree edge is new");
    }

    let mut spare: Vec<(VertexId, VertexId)> = Vec::new();
    for a in 0..n as VertexId {
        for b in a + 1..n as VertexId {
            if graph.edge(a, b).is_none() {
                spare.push((a, b));
            }
        }
    }
    let extra = (params.density * spare.len() as f64).round() as usize;
    spare.shuffle(&mut rng);
    for &(a, b) in spare.iter().take(extra) {
        let w = rng.gen_range(1..=params.max_weight);
        graph.add_edge(Edge::surveyed(a, b, w)).expect("spare pair is new");
    }
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::worldgraph::hop_distances;

    #[test]
    fn two_vertices_no_density_is_one_edge() {
        let g = generate_world(&WorldParams { vertices: 2, density: 0.0, ..Default::default() }, 3).unwrap();
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn same_seed_same_world() {
        let p = WorldParams { vertices: 30, density: 0.3, ..Default::default() };
        assert_eq!(generate_world(&p, 9).unwrap(), generate_world(&p, 9).unwrap());
        assert_ne!(generate_world(&p, 9).unwrap(), generate_world(&p, 10).unwrap());
    }

    #[test]
    fn connected_for_many_seeds() {
        let p = WorldParams { vertices: 50, density: 0.3, ..Default::default() };
        for seed in 0..20 {
            let g = generate_world(&p, seed).unwrap();
            assert_eq!(hop_distances(&g, 0).unwrap().len(), 50, "seed {seed}");
            for v in g.vertices() {
                assert!(v.value.unwrap() <= 10);
            }
            for e in g.edges() {
                assert!((1..=10).contains(&e.weight.unwrap()));
            }
        }
    }

    #[test]
    fn full_density_is_complete() {
        let g = generate_world(&WorldParams { vertices: 8, density: 1.0, ..Default::default() }, 1).unwrap();
        assert_eq!(g.edge_count(), 28);
    }

    #[test]
    fn rejects_bad_params() {
        let bad = |vertices, density| generate_world(&WorldParams { vertices, density, ..Default::default() }, 0);
        assert_eq!(bad(1, 0.0), Err(WorldError::TooFewVertices(1)));
        assert_eq!(bad(5, 1.5), Err(WorldError::Density(1.5)));
        assert_eq!(bad(5, -0.1), Err(WorldError::Density(-0.1)));
        assert!(matches!(bad(5, f64::NAN), Err(WorldError::Density(_))));
    }
}
