use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::RatingScale;
use crate::error::{Error, Result};
use crate::rng::{SeededRng, INIT_STREAM};

/// Lower bound applied to dot products before division (zero-data updates)
/// and before exponentiation (`x^x` loss).
pub const DOT_FLOOR: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FactorAlgorithm {
    Mf,
    Zeromat,
    Dotmat,
    DotmatHybrid,
}

impl FactorAlgorithm {
    pub fn name(self) -> &'static str {
        match self {
            FactorAlgorithm::Mf => "mf",
            FactorAlgorithm::Zeromat => "zeromat",
            FactorAlgorithm::Dotmat => "dotmat",
            FactorAlgorithm::DotmatHybrid => "dotmat-hybrid",
        }
    }
}

/// Row-major dense matrix of latent factors.
#[derive(Clone, Debug, PartialEq)]
pub struct Factors {
    rows: usize,
    k: usize,
    data: Vec<f64>,
}

impl Factors {
    pub fn from_vec(rows: usize, k: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * k {
            return Err(Error::invalid(format!(
                "factor data has {} entries, expected {rows}x{k}",
                data.len()
            )));
        }
        Ok(Self { rows, k, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.k..(r + 1) * self.k]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.k..(r + 1) * self.k]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Latent factor model shared by the matrix factorization family.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorModel {
    pub algorithm: FactorAlgorithm,
    pub user_factors: Factors,
    pub item_factors: Factors,
    pub gamma: f64,
    pub lambda: f64,
    pub iterations: u64,
    pub seed: u64,
    pub scale: RatingScale,
    /// Min and max raw dot product over all (user, item) pairs, used to map
    /// zero-data scores onto the rating scale.
    pub dot_range: Option<(f64, f64)>,
}

impl FactorModel {
    /// Seeded initialization: every entry uniform in `(0, 1/sqrt(k)]`, users
    /// first, then items, drawn from `SeededRng::stream(seed, INIT_STREAM)`.
    pub fn init(
        algorithm: FactorAlgorithm,
        num_users: usize,
        num_items: usize,
        k: usize,
        seed: u64,
        scale: RatingScale,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("latent dimension k must be at least 1"));
        }
        let bound = 1.0 / (k as f64).sqrt();
        let mut rng = SeededRng::stream(seed, INIT_STREAM);
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n * k).map(|_| (1.0 - rng.unit()) * bound).collect()
        };
        let users = draw(num_users);
        let items = draw(num_items);
        Ok(Self {
            algorithm,
            user_factors: Factors::from_vec(num_users, k, users)?,
            item_factors: Factors::from_vec(num_items, k, items)?,
            gamma: 0.0,
            lambda: 0.0,
            iterations: 0,
            seed,
            scale,
            dot_range: None,
        })
    }

    pub fn k(&self) -> usize {
        self.user_factors.k()
    }

    pub fn num_users(&self) -> usize {
        self.user_factors.rows()
    }

    pub fn num_items(&self) -> usize {
        self.item_factors.rows()
    }

    pub fn raw_score(&self, user: usize, item: usize) -> f64 {
        dot(self.user_factors.row(user), self.item_factors.row(item))
    }

    /// Serializes to the model JSON layout. Reals use 17 significant digits.
    pub fn to_json(&self) -> String {
        let mut s = String::new();
        s.push_str("{\n");
        let _ = writeln!(s, "  \"algorithm\": \"{}\",", self.algorithm.name());
        let _ = writeln!(s, "  \"k\": {},", self.k());
        let _ = writeln!(s, "  \"m\": {},", self.num_users());
        let _ = writeln!(s, "  \"n\": {},", self.num_items());
        let _ = writeln!(s, "  \"gamma\": {},", real17(self.gamma));
        let _ = writeln!(s, "  \"lambda\": {},", real17(self.lambda));
        let _ = writeln!(s, "  \"seed\": {},", self.seed);
        let _ = writeln!(s, "  \"iterations\": {},", self.iterations);
        let _ = writeln!(s, "  \"r_min\": {},", real17(self.scale.min));
        let _ = writeln!(s, "  \"r_max\": {},", real17(self.scale.max));
        match self.dot_range {
            Some((lo, hi)) => {
                let _ = writeln!(s, "  \"dot_range\": [{}, {}],", real17(lo), real17(hi));
            }
            None => s.push_str("  \"dot_range\": null,\n"),
        }
        write_array(&mut s, "U", self.user_factors.as_slice());
        s.push_str(",\n");
        write_array(&mut s, "V", self.item_factors.as_slice());
        s.push_str("\n}\n");
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::parse("model file", e.to_string()))?;
        Ok(Self {
            algorithm: raw.algorithm,
            user_factors: Factors::from_vec(raw.m, raw.k, raw.u)?,
            item_factors: Factors::from_vec(raw.n, raw.k, raw.v)?,
            gamma: raw.gamma,
            lambda: raw.lambda,
            iterations: raw.iterations,
            seed: raw.seed,
            scale: RatingScale::new(raw.r_min, raw.r_max)?,
            dot_range: raw.dot_range,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[derive(Deserialize)]
struct ModelFile {
    algorithm: FactorAlgorithm,
    k: usize,
    m: usize,
    n: usize,
    gamma: f64,
    lambda: f64,
    seed: u64,
    iterations: u64,
    r_min: f64,
    r_max: f64,
    dot_range: Option<(f64, f64)>,
    #[serde(rename = "U")]
    u: Vec<f64>,
    #[serde(rename = "V")]
    v: Vec<f64>,
}

/// Scientific notation with 17 significant digits, valid as a JSON number.
pub fn real17(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_array(s: &mut String, name: &str, values: &[f64]) {
    let _ = write!(s, "  \"{name}\": [");
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push_str(", ");
        }
        s.push_str(&real17(*v));
    }
    s.push(']');
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_bounds() {
        let m = FactorModel::init(FactorAlgorithm::Mf, 20, 30, 4, 9, RatingScale::FIVE_STAR)
            .unwrap();
        let bound = 0.5;
        for v in m.user_factors.as_slice().iter().chain(m.item_factors.as_slice()) {
            assert!(*v > 0.0 && *v <= bound);
        }
        for u in 0..20 {
            for i in 0..30 {
                let d = m.raw_score(u, i);
                assert!(d > 0.0 && d <= 1.0);
            }
        }
    }

    #[test]
    fn zero_k_rejected() {
        assert!(FactorModel::init(FactorAlgorithm::Mf, 1, 1, 0, 0, RatingScale::FIVE_STAR).is_err());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut m =
            FactorModel::init(FactorAlgorithm::Zeromat, 3, 4, 2, 5, RatingScale::FIVE_STAR)
                .unwrap();
        m.gamma = 0.1;
        m.dot_range = Some((0.123456789, 0.987654321));
        let text = m.to_json();
        let back = FactorModel::from_json(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn real17_digits() {
        assert_eq!(real17(0.1), "1.0000000000000001e-1");
        assert_eq!(real17(1.0), "1.0000000000000000e0");
        let v = 0.1 + 0.2;
        assert_eq!(real17(v).parse::<f64>().unwrap(), v);
    }
}
