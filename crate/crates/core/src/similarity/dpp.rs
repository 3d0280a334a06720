use super::SimilarityMatrix;
use crate::error::{Error, Result};

/// Determinant by Gaussian elimination with partial pivoting.
/// `matrix` is row-major `n x n` and is consumed as scratch space.
pub fn determinant(mut matrix: Vec<f64>, n: usize) -> f64 {
    assert_eq!(matrix.len(), n * n, "matrix must be n x n");
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| matrix[a * n + col].abs().total_cmp(&matrix[b * n + col].abs()))
            .expect("non-empty range");
        let p = matrix[pivot * n + col];
        if p == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for k in 0..n {
                matrix.swap(pivot * n + k, col * n + k);
            }
            det = -det;
        }
        det *= p;
        for row in col + 1..n {
            let factor = matrix[row * n + col] / p;
            if factor != 0.0 {
                for k in col..n {
                    matrix[row * n + k] -= factor * matrix[col * n + k];
                }
            }
        }
    }
    det
}

/// Determinant of the selection's similarity submatrix (unit diagonal).
///
/// Larger values mean a more mutually dissimilar selection. Results in
/// `[-1e-12, 0)` are reported as 0.
pub fn dpp_diversity(sim: &SimilarityMatrix, selection: &[usize]) -> Result<f64> {
    if selection.is_empty() {
        return Err(Error::invalid("selection must contain at least one entity"));
    }
    let mut seen = std::collections::HashSet::new();
    for &e in selection {
        if e >= sim.size() {
            return Err(Error::invalid(format!(
                "entity {e} outside similarity matrix of size {}",
                sim.size()
            )));
        }
        if !seen.insert(e) {
            return Err(Error::invalid(format!("entity {e} selected twice")));
        }
    }
    let n = selection.len();
    let mut m = Vec::with_capacity(n * n);
    for &a in selection {
        for &b in selection {
            m.push(sim.get(a, b));
        }
    }
    let det = determinant(m, n);
    Ok(if (-1e-12..0.0).contains(&det) { 0.0 } else { det })
}
