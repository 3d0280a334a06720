//! Similarity graphs: construction, Louvain communities, force-directed
//! layout and GraphML/DOT export.

mod export;
mod layout;
mod louvain;

use crate::data::Side;
use crate::error::{Error, Result};
use crate::similarity::{RadiusVector, SimilarityMatrix};

pub use export::{
    export_graph, read_layout_csv, write_dot, write_graphml, write_layout_csv, GraphFormat, LayoutRow,
};
pub use layout::{layout, LayoutConfig, LayoutResult};
pub use louvain::{louvain, modularity, CommunityAssignment};

/// Undirected weighted graph over the entities of a similarity matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityGraph {
    pub side: Side,
    pub num_nodes: usize,
    /// `(a, b, weight)` with `a < b`, sorted.
    pub edges: Vec<(usize, usize, f64)>,
    pub radius: Vec<usize>,
    /// 1-based popularity rank per node, when known.
    pub popularity_rank: Option<Vec<usize>>,
    pub threshold: f64,
}

impl SimilarityGraph {
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.num_nodes];
        for &(a, b, _) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    /// Adjacency lists `(neighbor, weight)`.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.num_nodes];
        for &(a, b, w) in &self.edges {
            adj[a].push((b, w));
            adj[b].push((a, w));
        }
        adj
    }
}

/// Keeps every stored pair with similarity strictly above `threshold`.
pub fn build_graph(
    sim: &SimilarityMatrix,
    threshold: f64,
    radii: &RadiusVector,
    popularity_rank: Option<Vec<usize>>,
) -> Result<SimilarityGraph> {
    if !(threshold.is_finite() && threshold >= 0.0) {
        return Err(Error::invalid(format!("edge threshold must be >= 0, got {threshold}")));
    }
    if radii.side != sim.side() || radii.radii.len() != sim.size() {
        return Err(Error::invalid("radius vector does not match the similarity matrix"));
    }
    if let Some(ranks) = &popularity_rank {
        if ranks.len() != sim.size() {
            return Err(Error::invalid("popularity ranks do not match the similarity matrix"));
        }
    }
    let edges = sim.pairs().filter(|&(_, _, w)| w > threshold).collect();
    Ok(SimilarityGraph {
        side: sim.side(),
        num_nodes: sim.size(),
        edges,
        radius: radii.radii.clone(),
        popularity_rank,
        threshold,
    })
}
