//! Entity-entity cosine similarity, similarity radii, determinant diversity
//! scores and dense heatmap grids.

mod dpp;
mod heatmap;

use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{entity_counts, popularity_order, RatingsDataset, Side};
use crate::error::{Error, Result};

pub use dpp::{determinant, dpp_diversity};
pub use heatmap::{heatmap_data, write_heatmap_csv, Heatmap, HeatmapOrder, DENSE_CUTOFF};

/// Sparse symmetric similarity matrix.
///
/// Only strictly positive similarities are stored. Each entity keeps its
/// neighbor list sorted by neighbor index, and `(a, b)` and `(b, a)` are
/// inserted from the same value, so lookups are exactly symmetric. The
/// diagonal is implicitly 1.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityMatrix {
    side: Side,
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl SimilarityMatrix {
    /// Builds a matrix from `(a, b, sim)` pairs. Pairs with `sim <= 0` are
    /// dropped; self pairs, out-of-range indices, values above 1 and repeated
    /// pairs are rejected.
    pub fn from_pairs(side: Side, size: usize, pairs: &[(usize, usize, f64)]) -> Result<Self> {
        let mut neighbors = vec![Vec::new(); size];
        for &(a, b, s) in pairs {
            if a == b || a >= size || b >= size {
                return Err(Error::invalid(format!("invalid similarity pair ({a}, {b})")));
            }
            if !(s.is_finite() && s <= 1.0) {
                return Err(Error::invalid(format!("similarity {s} for ({a}, {b}) outside [0, 1]")));
            }
            if s > 0.0 {
                neighbors[a].push((b, s));
                neighbors[b].push((a, s));
            }
        }
        for list in &mut neighbors {
            list.sort_by_key(|&(b, _)| b);
            if list.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::invalid("repeated similarity pair"));
            }
        }
        Ok(Self { side, neighbors })
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn size(&self) -> usize {
        self.neighbors.len()
    }

    /// Similarity of `a` and `b`; 1 on the diagonal, 0 when absent.
    pub fn get(&self, a: usize, b: usize) -> f64 {
        if a == b {
            return 1.0;
        }
        match self.neighbors[a].binary_search_by_key(&b, |&(x, _)| x) {
            Ok(pos) => self.neighbors[a][pos].1,
            Err(_) => 0.0,
        }
    }

    /// Stored neighbors of `a`, ascending by index.
    pub fn neighbors(&self, a: usize) -> &[(usize, f64)] {
        &self.neighbors[a]
    }

    /// Stored pairs with `a < b`, in lexicographic order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.neighbors.iter().enumerate().flat_map(|(a, list)| {
            list.iter()
                .filter(move |&&(b, _)| b > a)
                .map(move |&(b, s)| (a, b, s))
        })
    }

    pub fn num_pairs(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn max_similarity(&self) -> f64 {
        self.pairs().map(|(_, _, s)| s).fold(0.0, f64::max)
    }
}

/// Raw (uncentred) cosine similarity over co-rated support.
///
/// For users `a` and `b` with shared items `C`,
/// `sim = sum_c r_ac r_bc / (sqrt(sum_c r_ac^2) sqrt(sum_c r_bc^2))`.
/// Pairs sharing fewer than `min_support` entities are absent. Item-item
/// similarity is the same computation with the roles swapped. Rows are
/// computed in parallel; each pair's accumulation order is fixed by the
/// dataset, so the result does not depend on scheduling.
pub fn similarity_matrix(
    dataset: &RatingsDataset,
    side: Side,
    min_support: usize,
) -> Result<SimilarityMatrix> {
    if dataset.is_empty() {
        return Err(Error::invalid("similarity of an empty dataset"));
    }
    let min_support = min_support.max(1);
    let (size, other) = match side {
        Side::User => (dataset.num_users(), dataset.num_items()),
        Side::Item => (dataset.num_items(), dataset.num_users()),
    };
    // own[e]: (context entity, rating); by_context[c]: (entity, rating)
    let mut own: Vec<Vec<(usize, f64)>> = vec![Vec::new(); size];
    let mut by_context: Vec<Vec<(usize, f64)>> = vec![Vec::new(); other];
    for r in dataset.ratings() {
        let (e, c) = match side {
            Side::User => (r.user, r.item),
            Side::Item => (r.item, r.user),
        };
        own[e].push((c, r.value));
        by_context[c].push((e, r.value));
    }

    struct Scratch {
        dot: Vec<f64>,
        norm_a: Vec<f64>,
        norm_b: Vec<f64>,
        support: Vec<usize>,
        touched: Vec<usize>,
    }

    let upper: Vec<Vec<(usize, f64)>> = (0..size)
        .into_par_iter()
        .map_init(
            || Scratch {
                dot: vec![0.0; size],
                norm_a: vec![0.0; size],
                norm_b: vec![0.0; size],
                support: vec![0; size],
                touched: Vec::new(),
            },
            |s, a| {
                for &(c, ra) in &own[a] {
                    for &(b, rb) in &by_context[c] {
                        if b <= a {
                            continue;
                        }
                        if s.support[b] == 0 {
                            s.touched.push(b);
                        }
                        s.dot[b] += ra * rb;
                        s.norm_a[b] += ra * ra;
                        s.norm_b[b] += rb * rb;
                        s.support[b] += 1;
                    }
                }
                s.touched.sort_unstable();
                let mut row = Vec::new();
                for &b in &s.touched {
                    let denom = (s.norm_a[b] * s.norm_b[b]).sqrt();
                    if s.support[b] >= min_support && denom > 0.0 {
                        let sim = (s.dot[b] / denom).min(1.0);
                        if sim > 0.0 {
                            row.push((b, sim));
                        }
                    }
                    s.dot[b] = 0.0;
                    s.norm_a[b] = 0.0;
                    s.norm_b[b] = 0.0;
                    s.support[b] = 0;
                }
                s.touched.clear();
                row
            },
        )
        .collect();

    let mut neighbors: Vec<Vec<(usize, f64)>> = vec![Vec::new(); size];
    for (a, row) in upper.into_iter().enumerate() {
        for (b, sim) in row {
            neighbors[a].push((b, sim));
            neighbors[b].push((a, sim));
        }
    }
    for list in &mut neighbors {
        list.sort_by_key(|&(b, _)| b);
    }
    Ok(SimilarityMatrix { side, neighbors })
}

/// Per-entity neighborhood sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusVector {
    pub side: Side,
    pub radii: Vec<usize>,
}

/// Number of other entities with strictly positive similarity.
pub fn similarity_radius(sim: &SimilarityMatrix) -> RadiusVector {
    RadiusVector {
        side: sim.side(),
        radii: (0..sim.size()).map(|e| sim.neighbors(e).len()).collect(),
    }
}

/// Radius per popularity rank.
#[derive(Clone, Debug, PartialEq)]
pub struct RadiusCurve {
    /// `(entity, popularity rank, radius)`, rank starting at 1.
    pub rows: Vec<(usize, usize, usize)>,
    /// `max(radius) / median(positive radii)`; `None` when no radius is positive.
    pub skewness: Option<f64>,
}

impl RadiusCurve {
    pub fn points(&self) -> Vec<(usize, usize)> {
        self.rows.iter().map(|&(_, rank, r)| (rank, r)).collect()
    }
}

pub fn radius_vs_popularity(dataset: &RatingsDataset, radii: &RadiusVector) -> Result<RadiusCurve> {
    let counts = entity_counts(dataset, radii.side);
    if counts.len() != radii.radii.len() {
        return Err(Error::invalid(format!(
            "radius vector has {} entries but the dataset has {} entities",
            radii.radii.len(),
            counts.len()
        )));
    }
    let rows: Vec<(usize, usize, usize)> = popularity_order(&counts)
        .into_iter()
        .enumerate()
        .map(|(k, e)| (e, k + 1, radii.radii[e]))
        .collect();

    let mut positive: Vec<usize> = radii.radii.iter().copied().filter(|&r| r > 0).collect();
    positive.sort_unstable();
    let skewness = if positive.is_empty() {
        None
    } else {
        let mid = positive.len() / 2;
        let median = if positive.len() % 2 == 1 {
            positive[mid] as f64
        } else {
            0.5 * (positive[mid - 1] + positive[mid]) as f64
        };
        Some(*positive.last().unwrap() as f64 / median)
    };
    Ok(RadiusCurve { rows, skewness })
}

/// CSV `a,b,sim` with header, `a < b`, lexicographic order.
pub fn write_pairs_csv<W: Write>(sim: &SimilarityMatrix, mut out: W) -> std::io::Result<()> {
    out.write_all(b"a,b,sim\n")?;
    for (a, b, s) in sim.pairs() {
        writeln!(out, "{a},{b},{s}")?;
    }
    Ok(())
}

pub fn read_pairs_csv<R: BufRead>(reader: R, context: &str) -> Result<Vec<(usize, usize, f64)>> {
    let mut pairs = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(context, e))?;
        if n == 0 || line.trim().is_empty() {
            continue;
        }
        let mut f = line.split(',');
        let parsed = (|| {
            let a = f.next()?.trim().parse().ok()?;
            let b = f.next()?.trim().parse().ok()?;
            let s = f.next()?.trim().parse().ok()?;
            Some((a, b, s))
        })();
        match parsed {
            Some(p) => pairs.push(p),
            None => return Err(Error::parse(context, format!("line {}: expected a,b,sim", n + 1))),
        }
    }
    Ok(pairs)
}

/// CSV `entity,popularity_rank,radius` with header, in popularity order.
pub fn write_radius_csv<W: Write>(curve: &RadiusCurve, mut out: W) -> std::io::Result<()> {
    out.write_all(b"entity,popularity_rank,radius\n")?;
    for &(e, rank, r) in &curve.rows {
        writeln!(out, "{e},{rank},{r}")?;
    }
    Ok(())
}

/// Reads a radius CSV back into `(entity, rank, radius)` rows.
pub fn read_radius_csv<R: BufRead>(reader: R, context: &str) -> Result<Vec<(usize, usize, usize)>> {
    let mut rows = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(context, e))?;
        if n == 0 || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<Option<usize>> = line.split(',').map(|x| x.trim().parse().ok()).collect();
        match fields.as_slice() {
            [Some(e), Some(rank), Some(r)] => rows.push((*e, *rank, *r)),
            _ => {
                return Err(Error::parse(
                    context,
                    format!("line {}: expected entity,popularity_rank,radius", n + 1),
                ))
            }
        }
    }
    Ok(rows)
}
