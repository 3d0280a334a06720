//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use recsys_lens::data::{Rating, RatingScale, RatingsDataset, Side};
use recsys_lens::graph::{build_graph, SimilarityGraph};
use recsys_lens::rng::SeededRng;
use recsys_lens::similarity::{similarity_radius, SimilarityMatrix};

/// Sparse random ratings on a 1..5 integer scale.
pub fn random_dataset(rng: &mut SeededRng, users: usize, items: usize, density: f64) -> RatingsDataset {
    let mut ratings = Vec::new();
    for u in 0..users {
        for i in 0..items {
            if rng.unit() < density {
                ratings.push(Rating::new(u, i, (1 + rng.below(5)) as f64));
            }
        }
    }
    if ratings.is_empty() {
        ratings.push(Rating::new(0, 0, 3.0));
    }
    RatingsDataset::from_indexed(users, items, ratings, RatingScale::FIVE_STAR).unwrap()
}

/// Cosine similarity from the raw triplets, one pair at a time.
pub fn brute_similarity(ds: &RatingsDataset, side: Side) -> Vec<Vec<f64>> {
    let (n, m) = match side {
        Side::User => (ds.num_users(), ds.num_items()),
        Side::Item => (ds.num_items(), ds.num_users()),
    };
    let mut dense = vec![vec![0.0; m]; n];
    for r in ds.ratings() {
        let (e, c) = match side {
            Side::User => (r.user, r.item),
            Side::Item => (r.item, r.user),
        };
        dense[e][c] = r.value;
    }
    let mut out = vec![vec![0.0; n]; n];
    for a in 0..n {
        out[a][a] = 1.0;
        for b in 0..n {
            if a == b {
                continue;
            }
            let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
            for c in 0..m {
                if dense[a][c] > 0.0 && dense[b][c] > 0.0 {
                    ab += dense[a][c] * dense[b][c];
                    aa += dense[a][c] * dense[a][c];
                    bb += dense[b][c] * dense[b][c];
                }
            }
            if ab > 0.0 {
                out[a][b] = ab / (aa.sqrt() * bb.sqrt());
            }
        }
    }
    out
}

/// Laplace expansion along the first row.
pub fn cofactor_det(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    match n {
        0 => 1.0,
        1 => m[0][0],
        _ => (0..n)
            .map(|j| {
                let minor: Vec<Vec<f64>> = m[1..]
                    .iter()
                    .map(|row| row.iter().enumerate().filter(|&(c, _)| c != j).map(|(_, &v)| v).collect())
                    .collect();
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * m[0][j] * cofactor_det(&minor)
            })
            .sum(),
    }
}

/// Graph over `n` nodes from explicit positive-weight edges.
pub fn graph_from_edges(n: usize, edges: &[(usize, usize, f64)]) -> SimilarityGraph {
    let sim = SimilarityMatrix::from_pairs(Side::User, n, edges).unwrap();
    build_graph(&sim, 0.0, &similarity_radius(&sim), None).unwrap()
}

/// Random weighted graph on `n` nodes.
pub fn random_graph(rng: &mut SeededRng, n: usize, p: f64) -> SimilarityGraph {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.unit() < p {
                edges.push((a, b, 0.05 + 0.95 * rng.unit()));
            }
        }
    }
    graph_from_edges(n, &edges)
}

/// `Q = 1/2m sum_ij [A_ij - k_i k_j / 2m] delta(c_i, c_j)` from a dense matrix.
pub fn modularity_oracle(n: usize, edges: &[(usize, usize, f64)], community: &[usize]) -> f64 {
    let mut a = vec![vec![0.0; n]; n];
    for &(x, y, w) in edges {
        a[x][y] += w;
        a[y][x] += w;
    }
    let k: Vec<f64> = a.iter().map(|row| row.iter().sum()).collect();
    let two_m: f64 = k.iter().sum();
    if two_m == 0.0 {
        return 0.0;
    }
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if community[i] == community[j] {
                q += a[i][j] - k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}

/// Relabels communities by first appearance.
pub fn canonical(community: &[usize]) -> Vec<usize> {
    let mut map = HashMap::new();
    community
        .iter()
        .map(|c| {
            let next = map.len();
            *map.entry(*c).or_insert(next)
        })
        .collect()
}

/// Every partition of `n` nodes as a restricted growth string.
pub fn all_partitions(n: usize) -> Vec<Vec<usize>> {
    fn grow(prefix: &mut Vec<usize>, n: usize, max: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for c in 0..=max + 1 {
            prefix.push(c);
            grow(prefix, n, max.max(c), out);
            prefix.pop();
        }
    }
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    grow(&mut vec![0], n, 0, &mut out);
    out
}

/// Checks `community` against the exhaustive table of partition
/// modularities: returns its tabulated Q and the best Q reachable by moving
/// one node to another (or a new) community.
pub fn exhaustive_check(n: usize, edges: &[(usize, usize, f64)], community: &[usize]) -> (f64, f64) {
    let table: HashMap<Vec<usize>, f64> = all_partitions(n)
        .into_iter()
        .map(|p| {
            let q = modularity_oracle(n, edges, &p);
            (p, q)
        })
        .collect();
    let here = canonical(community);
    let q = table[&here];
    let mut best_move = f64::NEG_INFINITY;
    for node in 0..n {
        for target in 0..=n {
            if target == here[node] {
                continue;
            }
            let mut moved = here.clone();
            moved[node] = target;
            best_move = best_move.max(table[&canonical(&moved)]);
        }
    }
    (q, best_move)
}
