//! The recommender roster: classic matrix factorization, random placement,
//! the two zero-data factorizations and their hybrid, and user/item
//! neighborhood CF. Everything is evaluated through [`Predictor`].

mod cf;
mod model;
mod sgd;

use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{RatingScale, RatingsDataset};
use crate::error::{Error, Result};
use crate::rng::{mix64, unit_from_bits};

pub use cf::{cf_predict, CfMode, CfPrediction, CollaborativeFilter};
pub use model::{dot, real17, FactorAlgorithm, FactorModel, Factors, DOT_FLOOR};
pub use sgd::{
    self_power, train_dotmat, train_dotmat_hybrid, train_dotmat_hybrid_observed,
    train_dotmat_observed, train_mf, train_mf_observed, train_zeromat, train_zeromat_observed,
    Checkpoints, SgdConfig,
};

/// Uniform prediction surface. Outputs are finite and inside `scale()`.
pub trait Predictor: Sync {
    fn predict(&self, user: usize, item: usize) -> f64;
    fn scale(&self) -> RatingScale;
}

impl Predictor for FactorModel {
    fn predict(&self, user: usize, item: usize) -> f64 {
        let scale = self.scale;
        if user >= self.num_users() || item >= self.num_items() {
            return scale.midpoint();
        }
        let d = self.raw_score(user, item);
        let value = match self.algorithm {
            FactorAlgorithm::Mf | FactorAlgorithm::DotmatHybrid => d,
            FactorAlgorithm::Dotmat => self_power(d.clamp(DOT_FLOOR, 1.0)).0 * scale.max,
            FactorAlgorithm::Zeromat => match self.dot_range {
                Some((lo, hi)) if hi > lo => scale.min + (d - lo) / (hi - lo) * scale.width(),
                _ => scale.midpoint(),
            },
        };
        if value.is_finite() {
            scale.clamp(value)
        } else {
            scale.midpoint()
        }
    }

    fn scale(&self) -> RatingScale {
        self.scale
    }
}

/// Random placement: a uniform draw from the rating scale that depends only on
/// `(seed, user, item)`. The draw is
/// `unit(mix64(mix64(mix64(seed) + user) + item))` with wrapping adds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RandomPlacement {
    pub seed: u64,
    pub scale: RatingScale,
}

pub fn predict_random(seed: u64, scale: RatingScale) -> RandomPlacement {
    RandomPlacement { seed, scale }
}

impl Predictor for RandomPlacement {
    fn predict(&self, user: usize, item: usize) -> f64 {
        let h = mix64(mix64(mix64(self.seed).wrapping_add(user as u64)).wrapping_add(item as u64));
        self.scale.min + unit_from_bits(h) * self.scale.width()
    }

    fn scale(&self) -> RatingScale {
        self.scale
    }
}

/// Mean absolute error over the test triplets.
///
/// Absolute errors are summed in ascending order, which makes the result
/// independent of triplet order.
pub fn evaluate_mae(predictor: &(impl Predictor + ?Sized), test: &RatingsDataset) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::invalid("cannot evaluate on an empty test set"));
    }
    let mut errors: Vec<f64> = test
        .ratings()
        .iter()
        .map(|r| (predictor.predict(r.user, r.item) - r.value).abs())
        .collect();
    errors.sort_by(f64::total_cmp);
    Ok(errors.iter().sum::<f64>() / errors.len() as f64)
}

/// A labelled 1-D series of MAE values over a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesTrace {
    pub label: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl SeriesTrace {
    pub fn new(label: impl Into<String>, xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.is_empty() {
            return Err(Error::invalid(format!(
                "trace needs equal, non-zero lengths (got {} xs, {} ys)",
                xs.len(),
                ys.len()
            )));
        }
        if let Some(pos) = ys.iter().position(|y| !y.is_finite() || *y < 0.0) {
            return Err(Error::invalid(format!("trace value {pos} is not a finite MAE")));
        }
        Ok(Self {
            label: label.into(),
            xs,
            ys,
        })
    }

    /// Wraps a bare sequence, using the position as x.
    pub fn from_values(label: impl Into<String>, ys: Vec<f64>) -> Result<Self> {
        let xs = (0..ys.len()).map(|i| i as f64).collect();
        Self::new(label, xs, ys)
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    /// Reads CSV `x,mae`; rows with an empty `mae` (failed grid points) are
    /// skipped.
    pub fn read_csv<R: BufRead>(reader: R, label: &str) -> Result<Self> {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(label, e))?;
            if n == 0 || line.trim().is_empty() {
                continue;
            }
            let mut f = line.split(',');
            let (x, y) = (f.next().unwrap_or("").trim(), f.next().unwrap_or("").trim());
            if y.is_empty() {
                continue;
            }
            match (x.parse::<f64>(), y.parse::<f64>()) {
                (Ok(x), Ok(y)) => {
                    xs.push(x);
                    ys.push(y);
                }
                _ => return Err(Error::parse(label, format!("line {}: expected x,mae", n + 1))),
            }
        }
        Self::new(label, xs, ys)
    }
}

/// Every algorithm the toolkit can train and score.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Mf,
    Random,
    Zeromat,
    Dotmat,
    DotmatHybrid,
    UserCf,
    ItemCf,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::Mf,
        Algorithm::Random,
        Algorithm::Zeromat,
        Algorithm::Dotmat,
        Algorithm::DotmatHybrid,
        Algorithm::UserCf,
        Algorithm::ItemCf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Mf => "mf",
            Algorithm::Random => "random",
            Algorithm::Zeromat => "zeromat",
            Algorithm::Dotmat => "dotmat",
            Algorithm::DotmatHybrid => "dotmat-hybrid",
            Algorithm::UserCf => "user-cf",
            Algorithm::ItemCf => "item-cf",
        }
    }

    /// Whether training reads rating values.
    pub fn needs_ratings(self) -> bool {
        !matches!(self, Algorithm::Zeromat | Algorithm::Random)
    }
}

/// Hyperparameters shared by every algorithm; each reads what it needs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSettings {
    pub k: usize,
    pub gamma: f64,
    pub lambda: f64,
    pub iterations: u64,
    /// Dotmat steps before the MF phase of the hybrid.
    pub iters_pre: u64,
    pub seed: u64,
    pub neighbors: usize,
    pub min_support: usize,
}

impl Default for ModelSettings {
    fn default() -> Self {
        Self {
            k: 10,
            gamma: 0.01,
            lambda: 0.01,
            iterations: 50_000,
            iters_pre: 20_000,
            seed: 42,
            neighbors: 20,
            min_support: 1,
        }
    }
}

impl ModelSettings {
    pub fn sgd(&self) -> SgdConfig {
        SgdConfig {
            k: self.k,
            gamma: self.gamma,
            lambda: self.lambda,
            iterations: self.iterations,
            seed: self.seed,
        }
    }
}

/// A trained predictor plus the factor model behind it, when there is one.
pub enum Fitted {
    Factor(FactorModel),
    Random(RandomPlacement),
    Cf(CollaborativeFilter),
}

impl Fitted {
    pub fn predictor(&self) -> &dyn Predictor {
        match self {
            Fitted::Factor(m) => m,
            Fitted::Random(r) => r,
            Fitted::Cf(c) => c,
        }
    }

    pub fn factor_model(&self) -> Option<&FactorModel> {
        match self {
            Fitted::Factor(m) => Some(m),
            _ => None,
        }
    }
}

/// Trains `algorithm` on `train`. Zero-data algorithms only read the
/// dataset's dimensions and rating scale.
pub fn fit(
    algorithm: Algorithm,
    train: &RatingsDataset,
    settings: &ModelSettings,
    checkpoints: Option<&mut Checkpoints<'_>>,
) -> Result<Fitted> {
    let sgd = settings.sgd();
    Ok(match algorithm {
        Algorithm::Mf => Fitted::Factor(train_mf_observed(train, &sgd, checkpoints)?),
        Algorithm::Zeromat => Fitted::Factor(train_zeromat_observed(
            train.num_users(),
            train.num_items(),
            train.scale(),
            &sgd,
            checkpoints,
        )?),
        Algorithm::Dotmat => Fitted::Factor(train_dotmat_observed(train, &sgd, checkpoints)?),
        Algorithm::DotmatHybrid => Fitted::Factor(train_dotmat_hybrid_observed(
            train,
            &sgd,
            settings.iters_pre,
            checkpoints,
        )?),
        Algorithm::Random => Fitted::Random(predict_random(settings.seed, train.scale())),
        Algorithm::UserCf => Fitted::Cf(CollaborativeFilter::fit(
            train,
            CfMode::UserBased,
            settings.neighbors,
            settings.min_support,
        )?),
        Algorithm::ItemCf => Fitted::Cf(CollaborativeFilter::fit(
            train,
            CfMode::ItemBased,
            settings.neighbors,
            settings.min_support,
        )?),
    })
}

/// What a grid value controls.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum GridMode {
    /// Grid values are learning rates.
    Rate,
    /// Grid values are SGD step counts (the MF phase for the hybrid).
    Steps,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridPoint {
    pub x: f64,
    pub mae: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridOutcome {
    pub points: Vec<GridPoint>,
    /// Successful points only.
    pub trace: Option<SeriesTrace>,
}

impl GridOutcome {
    /// CSV `x,mae` with an empty `mae` for failed points.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(b"x,mae\n")?;
        for p in &self.points {
            match p.mae {
                Some(m) => writeln!(out, "{},{}", p.x, m)?,
                None => writeln!(out, "{},", p.x)?,
            }
        }
        Ok(())
    }
}

/// Trains once per grid value and records test MAE.
///
/// Grid point `g` uses seed `settings.seed + g`; points may run in parallel
/// and are gathered in grid order.
pub fn mae_grid(
    algorithm: Algorithm,
    train: &RatingsDataset,
    test: &RatingsDataset,
    grid: &[f64],
    mode: GridMode,
    settings: &ModelSettings,
) -> Result<GridOutcome> {
    if grid.is_empty() {
        return Err(Error::invalid("grid must contain at least one value"));
    }
    if test.is_empty() {
        return Err(Error::invalid("cannot evaluate on an empty test set"));
    }
    let points: Vec<GridPoint> = grid
        .par_iter()
        .enumerate()
        .map(|(g, &x)| {
            let mut s = ModelSettings {
                seed: settings.seed.wrapping_add(g as u64),
                ..*settings
            };
            let mut run = || -> Result<f64> {
                match mode {
                    GridMode::Rate => s.gamma = x,
                    GridMode::Steps => {
                        if !(x >= 0.0 && x.fract() == 0.0) {
                            return Err(Error::invalid(format!("step count {x} is not an integer")));
                        }
                        s.iterations = x as u64;
                    }
                }
                let fitted = fit(algorithm, train, &s, None)?;
                evaluate_mae(fitted.predictor(), test)
            };
            match run() {
                Ok(mae) => GridPoint {
                    x,
                    mae: Some(mae),
                    error: None,
                },
                Err(e) => GridPoint {
                    x,
                    mae: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    let (xs, ys): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter_map(|p| p.mae.map(|m| (p.x, m)))
        .unzip();
    let trace = if xs.is_empty() {
        None
    } else {
        Some(SeriesTrace::new(algorithm.name(), xs, ys)?)
    };
    Ok(GridOutcome { points, trace })
}
