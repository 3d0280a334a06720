//! Louvain modularity optimization (resolution 1).
//!
//! Each level moves single nodes to the neighboring community with the largest
//! modularity gain, visiting nodes in a seeded random order; a node only moves
//! when the gain beats staying put, and equal gains go to the lowest
//! community id. Communities are then collapsed into super-nodes and the
//! process repeats. When a level makes no move, one more local-move sweep
//! runs on the original graph starting from the current partition; if it
//! changes anything, aggregation resumes from there. The returned partition
//! is therefore stable under every single-node move.

use std::collections::BTreeSet;

use super::SimilarityGraph;
use crate::rng::{SeededRng, GRAPH_STREAM};

#[derive(Clone, Debug, PartialEq)]
pub struct CommunityAssignment {
    /// Community per node, contiguous from 0 in order of first appearance.
    pub community: Vec<usize>,
    pub modularity: f64,
    /// Modularity after each outer pass, starting with the singleton partition.
    pub pass_modularity: Vec<f64>,
}

impl CommunityAssignment {
    pub fn num_communities(&self) -> usize {
        self.community.iter().copied().max().map_or(0, |m| m + 1)
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_communities()];
        for &c in &self.community {
            sizes[c] += 1;
        }
        sizes
    }
}

/// Weighted graph with optional self-loops; `loops[i]` is `A_ii`.
struct Level {
    adj: Vec<Vec<(usize, f64)>>,
    loops: Vec<f64>,
    degree: Vec<f64>,
    two_m: f64,
}

impl Level {
    fn from_graph(graph: &SimilarityGraph) -> Self {
        let adj = graph.adjacency();
        let loops = vec![0.0; graph.num_nodes];
        Self::new(adj, loops)
    }

    fn new(adj: Vec<Vec<(usize, f64)>>, loops: Vec<f64>) -> Self {
        let degree: Vec<f64> = adj
            .iter()
            .zip(&loops)
            .map(|(list, l)| l + list.iter().map(|&(_, w)| w).sum::<f64>())
            .collect();
        let two_m = degree.iter().sum();
        Self {
            adj,
            loops,
            degree,
            two_m,
        }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    /// Collapses `assignment` (contiguous ids) into a new level.
    fn aggregate(&self, assignment: &[usize], count: usize) -> Level {
        let mut weights: Vec<std::collections::BTreeMap<usize, f64>> =
            vec![Default::default(); count];
        let mut loops = vec![0.0; count];
        for (i, list) in self.adj.iter().enumerate() {
            let ci = assignment[i];
            loops[ci] += self.loops[i];
            for &(j, w) in list {
                let cj = assignment[j];
                if ci == cj {
                    loops[ci] += w;
                } else {
                    *weights[ci].entry(cj).or_default() += w;
                }
            }
        }
        let adj = weights.into_iter().map(|m| m.into_iter().collect()).collect();
        Level::new(adj, loops)
    }
}

/// One local-move phase starting from `community`. Returns whether any node
/// moved. Community ids stay within `0..level.len()`.
fn local_moves(level: &Level, community: &mut [usize], rng: &mut SeededRng) -> bool {
    let n = level.len();
    if level.two_m <= 0.0 {
        return false;
    }
    let two_m = level.two_m;
    let eps = 1e-12 * two_m.max(1.0);
    let mut tot = vec![0.0; n];
    let mut members = vec![0usize; n];
    for i in 0..n {
        tot[community[i]] += level.degree[i];
        members[community[i]] += 1;
    }
    let mut free: BTreeSet<usize> = (0..n).filter(|&c| members[c] == 0).collect();
    let mut link = vec![0.0; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut any_move = false;

    loop {
        let mut moved = false;
        for &i in &rng.permutation(n) {
            let own = community[i];
            let k_i = level.degree[i];
            for &(j, w) in &level.adj[i] {
                let c = community[j];
                if link[c] == 0.0 && !touched.contains(&c) {
                    touched.push(c);
                }
                link[c] += w;
            }
            tot[own] -= k_i;
            let gain = |c: usize| link[c] - tot[c] * k_i / two_m;
            let stay = gain(own);
            let mut best: Option<(usize, f64)> = None;
            touched.sort_unstable();
            for &c in &touched {
                if c == own {
                    continue;
                }
                let g = gain(c);
                if g > stay + eps && best.is_none_or(|(_, bg)| g > bg) {
                    best = Some((c, g));
                }
            }
            // Isolation has gain 0; it only matters when own still has members.
            if members[own] > 1 && 0.0 > stay + eps && best.is_none_or(|(_, bg)| 0.0 > bg) {
                best = free.first().map(|&c| (c, 0.0));
            }
            let target = best.map_or(own, |(c, _)| c);
            tot[target] += k_i;
            if target != own {
                members[own] -= 1;
                if members[own] == 0 {
                    free.insert(own);
                }
                if members[target] == 0 {
                    free.remove(&target);
                }
                members[target] += 1;
                community[i] = target;
                moved = true;
                any_move = true;
            }
            for &c in &touched {
                link[c] = 0.0;
            }
            touched.clear();
        }
        if !moved {
            break;
        }
    }
    any_move
}

/// Renumbers ids to be contiguous in order of first appearance.
fn renumber(community: &mut [usize]) -> usize {
    let mut map = std::collections::HashMap::new();
    for c in community.iter_mut() {
        let next = map.len();
        *c = *map.entry(*c).or_insert(next);
    }
    map.len()
}

/// Weighted modularity of a partition of `graph`.
pub fn modularity(graph: &SimilarityGraph, community: &[usize]) -> f64 {
    let count = community.iter().copied().max().map_or(0, |m| m + 1);
    let mut inside = vec![0.0; count];
    let mut tot = vec![0.0; count];
    let mut two_m = 0.0;
    for &(a, b, w) in &graph.edges {
        two_m += 2.0 * w;
        tot[community[a]] += w;
        tot[community[b]] += w;
        if community[a] == community[b] {
            inside[community[a]] += 2.0 * w;
        }
    }
    if two_m <= 0.0 {
        return 0.0;
    }
    inside
        .iter()
        .zip(&tot)
        .map(|(i, t)| i / two_m - (t / two_m) * (t / two_m))
        .sum()
}

pub fn louvain(graph: &SimilarityGraph, seed: u64) -> CommunityAssignment {
    let n = graph.num_nodes;
    let base = Level::from_graph(graph);
    let mut rng = SeededRng::stream(seed, GRAPH_STREAM);
    let mut partition: Vec<usize> = (0..n).collect();
    let mut count = n;
    let mut pass_modularity = vec![modularity(graph, &partition)];

    loop {
        let level = base.aggregate(&partition, count);
        let mut assignment: Vec<usize> = (0..count).collect();
        if local_moves(&level, &mut assignment, &mut rng) {
            for c in partition.iter_mut() {
                *c = assignment[*c];
            }
            count = renumber(&mut partition);
            pass_modularity.push(modularity(graph, &partition));
            continue;
        }
        if count < n && local_moves(&base, &mut partition, &mut rng) {
            count = renumber(&mut partition);
            pass_modularity.push(modularity(graph, &partition));
            continue;
        }
        break;
    }
    renumber(&mut partition);
    CommunityAssignment {
        modularity: modularity(graph, &partition),
        community: partition,
        pass_modularity,
    }
}
