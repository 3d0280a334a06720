use std::io::Write;

use serde::{Deserialize, Serialize};

use super::SimilarityMatrix;
use crate::data::popularity_order;
use crate::error::{Error, Result};

/// Largest entity count materialized densely without an explicit top-N.
pub const DENSE_CUTOFF: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum HeatmapOrder {
    ByIndex,
    ByPopularity,
}

/// Dense symmetric similarity grid with unit diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct Heatmap {
    /// Entity shown at each row/column.
    pub entities: Vec<usize>,
    pub values: Vec<Vec<f64>>,
}

/// Materializes a dense grid.
///
/// `counts` are per-entity rating counts (for popularity order and top-N
/// selection). With `top_n = Some(n)` only the `n` most popular entities are
/// kept; without it, matrices larger than `cutoff` are rejected.
pub fn heatmap_data(
    sim: &SimilarityMatrix,
    order: HeatmapOrder,
    counts: &[usize],
    cutoff: usize,
    top_n: Option<usize>,
) -> Result<Heatmap> {
    if counts.len() != sim.size() {
        return Err(Error::invalid(format!(
            "popularity counts cover {} entities, matrix has {}",
            counts.len(),
            sim.size()
        )));
    }
    let by_popularity = popularity_order(counts);
    let mut entities: Vec<usize> = match top_n {
        Some(n) => by_popularity.iter().copied().take(n).collect(),
        None if sim.size() > cutoff => {
            return Err(Error::invalid(format!(
                "{} entities exceed the dense heatmap cutoff of {cutoff}; pass a top-N limit",
                sim.size()
            )))
        }
        None => by_popularity.clone(),
    };
    if order == HeatmapOrder::ByIndex {
        entities.sort_unstable();
    }
    let values = entities
        .iter()
        .map(|&a| entities.iter().map(|&b| sim.get(a, b)).collect())
        .collect();
    Ok(Heatmap { entities, values })
}

/// Row-major CSV grid, no header.
pub fn write_heatmap_csv<W: Write>(heatmap: &Heatmap, mut out: W) -> std::io::Result<()> {
    for row in &heatmap.values {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Side;

    fn sample() -> SimilarityMatrix {
        SimilarityMatrix::from_pairs(Side::User, 3, &[(0, 1, 0.8), (1, 2, 0.3)]).unwrap()
    }

    #[test]
    fn two_entity_grid() {
        let sim = SimilarityMatrix::from_pairs(Side::User, 2, &[(0, 1, 0.8)]).unwrap();
        let h = heatmap_data(&sim, HeatmapOrder::ByIndex, &[1, 1], DENSE_CUTOFF, None).unwrap();
        assert_eq!(h.values, vec![vec![1.0, 0.8], vec![0.8, 1.0]]);
    }

    #[test]
    fn popularity_order_is_a_permutation() {
        let sim = sample();
        let counts = [1, 5, 3];
        let a = heatmap_data(&sim, HeatmapOrder::ByIndex, &counts, DENSE_CUTOFF, None).unwrap();
        let b = heatmap_data(&sim, HeatmapOrder::ByPopularity, &counts, DENSE_CUTOFF, None).unwrap();
        assert_eq!(b.entities, vec![1, 2, 0]);
        let flat = |h: &Heatmap| {
            let mut v: Vec<f64> = h.values.iter().flatten().copied().collect();
            v.sort_by(f64::total_cmp);
            v
        };
        assert_eq!(flat(&a), flat(&b));
        for h in [&a, &b] {
            for (i, row) in h.values.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    assert_eq!(*v, h.values[j][i]);
                }
            }
        }
    }

    #[test]
    fn cutoff_requires_top_n() {
        let sim = sample();
        assert!(heatmap_data(&sim, HeatmapOrder::ByIndex, &[1, 5, 3], 2, None).is_err());
        let h = heatmap_data(&sim, HeatmapOrder::ByIndex, &[1, 5, 3], 2, Some(2)).unwrap();
        assert_eq!(h.entities, vec![1, 2]);
        assert_eq!(h.values, vec![vec![1.0, 0.3], vec![0.3, 1.0]]);
    }

    #[test]
    fn csv_layout() {
        let sim = SimilarityMatrix::from_pairs(Side::User, 2, &[(0, 1, 0.5)]).unwrap();
        let h = heatmap_data(&sim, HeatmapOrder::ByIndex, &[1, 1], DENSE_CUTOFF, None).unwrap();
        let mut buf = Vec::new();
        write_heatmap_csv(&h, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "1,0.5\n0.5,1\n");
    }
}
