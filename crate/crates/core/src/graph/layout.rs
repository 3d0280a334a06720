//! Fruchterman-Reingold style layout.

use super::SimilarityGraph;
use crate::rng::{mix64, unit_from_bits, SeededRng, LAYOUT_STREAM};

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct LayoutConfig {
    pub iterations: usize,
    pub seed: u64,
    /// Multiplier on the pairwise repulsion term.
    pub repulsion: f64,
    /// Pull toward the centre of the unit square; keeps components together.
    pub gravity: f64,
    /// Displacement cap at the first iteration; decays linearly to 0.
    pub initial_temperature: f64,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self {
            iterations: 200,
            seed: 42,
            repulsion: 1.0,
            gravity: 0.1,
            initial_temperature: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayoutResult {
    pub positions: Vec<[f64; 2]>,
    pub iterations: usize,
    pub seed: u64,
}

/// Direction used when two nodes coincide exactly.
fn jitter_direction(a: usize, b: usize, salt: u64) -> [f64; 2] {
    let h = mix64(mix64(a as u64 ^ salt).wrapping_add(b as u64));
    let angle = unit_from_bits(h) * std::f64::consts::TAU;
    [angle.cos(), angle.sin()]
}

pub fn layout(graph: &SimilarityGraph, cfg: &LayoutConfig) -> LayoutResult {
    let n = graph.num_nodes;
    let mut rng = SeededRng::stream(cfg.seed, LAYOUT_STREAM);
    let mut pos: Vec<[f64; 2]> = (0..n).map(|_| [rng.unit(), rng.unit()]).collect();
    let k = (1.0 / n.max(1) as f64).sqrt();
    let mut disp = vec![[0.0f64; 2]; n];

    for t in 0..cfg.iterations {
        let temperature = cfg.initial_temperature * (1.0 - t as f64 / cfg.iterations as f64);
        disp.iter_mut().for_each(|d| *d = [0.0, 0.0]);
        for i in 0..n {
            for j in (i + 1)..n {
                let (dir, d) = direction(&pos, i, j, t as u64);
                let f = cfg.repulsion * k * k / d;
                disp[i][0] += dir[0] * f;
                disp[i][1] += dir[1] * f;
                disp[j][0] -= dir[0] * f;
                disp[j][1] -= dir[1] * f;
            }
        }
        for &(a, b, w) in &graph.edges {
            let (dir, d) = direction(&pos, a, b, t as u64);
            let f = w * d * d / k;
            disp[a][0] -= dir[0] * f;
            disp[a][1] -= dir[1] * f;
            disp[b][0] += dir[0] * f;
            disp[b][1] += dir[1] * f;
        }
        for (p, d) in pos.iter().zip(disp.iter_mut()) {
            let dx = 0.5 - p[0];
            let dy = 0.5 - p[1];
            let dc = dx.hypot(dy);
            d[0] += cfg.gravity * dc * dx / k;
            d[1] += cfg.gravity * dc * dy / k;
        }
        for (p, d) in pos.iter_mut().zip(&disp) {
            let len = d[0].hypot(d[1]);
            if len > 0.0 && len.is_finite() {
                let step = len.min(temperature) / len;
                p[0] += d[0] * step;
                p[1] += d[1] * step;
            }
        }
    }
    separate_duplicates(&mut pos, k);
    LayoutResult {
        positions: pos,
        iterations: cfg.iterations,
        seed: cfg.seed,
    }
}

/// Unit vector from `j` to `i` and the distance, floored away from zero.
fn direction(pos: &[[f64; 2]], i: usize, j: usize, salt: u64) -> ([f64; 2], f64) {
    let dx = pos[i][0] - pos[j][0];
    let dy = pos[i][1] - pos[j][1];
    let d = dx.hypot(dy);
    if d < 1e-9 {
        (jitter_direction(i, j, salt), 1e-9)
    } else {
        ([dx / d, dy / d], d)
    }
}

fn separate_duplicates(pos: &mut [[f64; 2]], k: f64) {
    let mut round = 0u64;
    loop {
        let mut order: Vec<usize> = (0..pos.len()).collect();
        order.sort_by(|&a, &b| {
            pos[a][0]
                .total_cmp(&pos[b][0])
                .then(pos[a][1].total_cmp(&pos[b][1]))
                .then(a.cmp(&b))
        });
        let mut clean = true;
        for w in order.windows(2) {
            if pos[w[0]] == pos[w[1]] {
                let dir = jitter_direction(w[0], w[1], round);
                pos[w[1]][0] += dir[0] * k * 1e-6;
                pos[w[1]][1] += dir[1] * k * 1e-6;
                clean = false;
            }
        }
        if clean {
            return;
        }
        round += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Side;

    fn graph(n: usize, edges: &[(usize, usize, f64)]) -> SimilarityGraph {
        SimilarityGraph {
            side: Side::Item,
            num_nodes: n,
            edges: edges.to_vec(),
            radius: vec![0; n],
            popularity_rank: None,
            threshold: 0.0,
        }
    }

    fn dist(p: &[[f64; 2]], a: usize, b: usize) -> f64 {
        (p[a][0] - p[b][0]).hypot(p[a][1] - p[b][1])
    }

    #[test]
    fn zero_iterations_is_initialization() {
        let g = graph(3, &[(0, 1, 1.0)]);
        let cfg = LayoutConfig { iterations: 0, seed: 5, ..Default::default() };
        let out = layout(&g, &cfg);
        let mut rng = SeededRng::stream(5, LAYOUT_STREAM);
        let expected: Vec<[f64; 2]> = (0..3).map(|_| [rng.unit(), rng.unit()]).collect();
        assert_eq!(out.positions, expected);
        assert!(out.positions.iter().flatten().all(|v| (0.0..1.0).contains(v)));
    }

    #[test]
    fn deterministic() {
        let g = graph(5, &[(0, 1, 0.5), (1, 2, 0.9), (3, 4, 0.2)]);
        let cfg = LayoutConfig::default();
        assert_eq!(layout(&g, &cfg), layout(&g, &cfg));
    }

    #[test]
    fn edge_pulls_pair_together() {
        let g = graph(2, &[(0, 1, 1.0)]);
        for seed in 0..20 {
            let start = layout(&g, &LayoutConfig { iterations: 0, seed, ..Default::default() });
            let cfg = LayoutConfig {
                iterations: 100,
                seed,
                repulsion: 1e-3,
                ..Default::default()
            };
            let end = layout(&g, &cfg);
            assert!(dist(&end.positions, 0, 1) < dist(&start.positions, 0, 1), "seed {seed}");
        }
    }

    #[test]
    fn coincident_nodes_are_separated() {
        let mut pos = vec![[0.5, 0.5]; 4];
        separate_duplicates(&mut pos, 0.5);
        for a in 0..4 {
            for b in (a + 1)..4 {
                assert_ne!(pos[a], pos[b]);
            }
        }
    }

    #[test]
    fn finite_on_dense_graph() {
        let edges: Vec<_> = (0..8)
            .flat_map(|a| ((a + 1)..8).map(move |b| (a, b, 1.0)))
            .collect();
        let out = layout(&graph(8, &edges), &LayoutConfig::default());
        assert!(out.positions.iter().flatten().all(|v| v.is_finite()));
    }
}
