//! SGD trainers for the factor-model family.
//!
//! Every step samples one training point uniformly with replacement from
//! `SeededRng::stream(seed, SAMPLE_STREAM)` and updates the user and item rows
//! from their pre-step values.

use super::model::{dot, FactorAlgorithm, FactorModel, DOT_FLOOR};
use crate::data::RatingsDataset;
use crate::error::{Error, Result};
use crate::rng::{SeededRng, SAMPLE_STREAM};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SgdConfig {
    pub k: usize,
    pub gamma: f64,
    pub lambda: f64,
    pub iterations: u64,
    pub seed: u64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self {
            k: 10,
            gamma: 0.01,
            lambda: 0.01,
            iterations: 50_000,
            seed: 42,
        }
    }
}

/// Periodic model snapshots during training.
///
/// The callback sees step 0, every `every`-th step, and the final step.
pub struct Checkpoints<'a> {
    pub every: u64,
    pub callback: &'a mut dyn FnMut(u64, &FactorModel),
}

impl Checkpoints<'_> {
    fn at(&mut self, step: u64, last: u64, model: &FactorModel) {
        if step == 0 || step == last || (self.every > 0 && step.is_multiple_of(self.every)) {
            (self.callback)(step, model);
        }
    }
}

fn check_config(cfg: &SgdConfig) -> Result<()> {
    if cfg.k == 0 {
        return Err(Error::invalid("latent dimension k must be at least 1"));
    }
    if !(cfg.gamma.is_finite() && cfg.gamma >= 0.0) {
        return Err(Error::invalid(format!("learning rate must be >= 0, got {}", cfg.gamma)));
    }
    if !(cfg.lambda.is_finite() && cfg.lambda >= 0.0) {
        return Err(Error::invalid(format!("regularization must be >= 0, got {}", cfg.lambda)));
    }
    Ok(())
}

fn require_data(train: &RatingsDataset) -> Result<()> {
    if train.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    Ok(())
}

/// Applies one update built from pre-step rows: `u += du(u, v)`, `v += dv(u, v)`.
fn step_rows(
    model: &mut FactorModel,
    user: usize,
    item: usize,
    mut update: impl FnMut(f64, f64) -> (f64, f64),
) -> bool {
    let u = model.user_factors.row_mut(user);
    let v = model.item_factors.row_mut(item);
    let mut finite = true;
    for (uf, vf) in u.iter_mut().zip(v.iter_mut()) {
        let (nu, nv) = update(*uf, *vf);
        *uf = nu;
        *vf = nv;
        finite &= nu.is_finite() && nv.is_finite();
    }
    finite
}

/// Squared-error SGD with L2 weight `lambda`:
/// `e = r - u.v`, `u += gamma (e v - lambda u)`, `v += gamma (e u - lambda v)`.
pub(crate) fn run_mf(
    model: &mut FactorModel,
    train: &RatingsDataset,
    cfg: &SgdConfig,
    mut checkpoints: Option<&mut Checkpoints<'_>>,
) -> Result<()> {
    let mut rng = SeededRng::stream(cfg.seed, SAMPLE_STREAM);
    let ratings = train.ratings();
    if let Some(c) = checkpoints.as_deref_mut() {
        c.at(0, cfg.iterations, model);
    }
    for step in 1..=cfg.iterations {
        let r = ratings[rng.below(ratings.len())];
        let err = r.value - dot(model.user_factors.row(r.user), model.item_factors.row(r.item));
        let (g, l) = (cfg.gamma, cfg.lambda);
        let ok = step_rows(model, r.user, r.item, |u, v| {
            (u + g * (err * v - l * u), v + g * (err * u - l * v))
        });
        if !ok {
            return Err(Error::Diverged { step, gamma: cfg.gamma });
        }
        if let Some(c) = checkpoints.as_deref_mut() {
            c.at(step, cfg.iterations, model);
        }
    }
    Ok(())
}

/// `x^x` and its derivative `x^x (ln x + 1)`.
pub fn self_power(x: f64) -> (f64, f64) {
    let f = x.powf(x);
    (f, f * (x.ln() + 1.0))
}

/// Subgradient steps on `|x^x - r / r_max|` with `x = clamp(u.v, DOT_FLOOR, 1)`.
/// A zero residual contributes a zero subgradient, and so does a dot product
/// below `DOT_FLOOR`.
pub(crate) fn run_dotmat(
    model: &mut FactorModel,
    train: &RatingsDataset,
    cfg: &SgdConfig,
    mut checkpoints: Option<&mut Checkpoints<'_>>,
) -> Result<()> {
    let mut rng = SeededRng::stream(cfg.seed, SAMPLE_STREAM);
    let ratings = train.ratings();
    let r_max = train.scale().max;
    if let Some(c) = checkpoints.as_deref_mut() {
        c.at(0, cfg.iterations, model);
    }
    for step in 1..=cfg.iterations {
        let r = ratings[rng.below(ratings.len())];
        let raw = dot(model.user_factors.row(r.user), model.item_factors.row(r.item));
        let x = raw.clamp(DOT_FLOOR, 1.0);
        let (f, mut df) = self_power(x);
        if raw < DOT_FLOOR {
            // Below the floor the clamped loss is flat. Following f'(floor)
            // here drives u.v to -inf whenever the target exceeds f(floor).
            df = 0.0;
        }
        let residual = f - r.value / r_max;
        let sign = if residual > 0.0 {
            1.0
        } else if residual < 0.0 {
            -1.0
        } else {
            0.0
        };
        let g = cfg.gamma * sign * df;
        let ok = step_rows(model, r.user, r.item, |u, v| (u - g * v, v - g * u));
        if !ok {
            return Err(Error::Diverged { step, gamma: cfg.gamma });
        }
        if let Some(c) = checkpoints.as_deref_mut() {
            c.at(step, cfg.iterations, model);
        }
    }
    Ok(())
}

/// Rating-free updates `u += gamma (v / (u.v) - 2u)`, `v += gamma (u / (u.v) - 2v)`
/// over uniformly sampled (user, item) index pairs. Denominators smaller than
/// `DOT_FLOOR` in magnitude are replaced by `DOT_FLOOR` with the same sign.
pub(crate) fn run_zeromat(
    model: &mut FactorModel,
    cfg: &SgdConfig,
    mut checkpoints: Option<&mut Checkpoints<'_>>,
) -> Result<()> {
    let mut rng = SeededRng::stream(cfg.seed, SAMPLE_STREAM);
    let (m, n) = (model.num_users(), model.num_items());
    if let Some(c) = checkpoints.as_deref_mut() {
        c.at(0, cfg.iterations, model);
    }
    for step in 1..=cfg.iterations {
        let i = rng.below(m);
        let j = rng.below(n);
        let d = dot(model.user_factors.row(i), model.item_factors.row(j));
        let denom = if d.abs() < DOT_FLOOR {
            if d < 0.0 {
                -DOT_FLOOR
            } else {
                DOT_FLOOR
            }
        } else {
            d
        };
        let g = cfg.gamma;
        let ok = step_rows(model, i, j, |u, v| {
            (u + g * (v / denom - 2.0 * u), v + g * (u / denom - 2.0 * v))
        });
        if !ok {
            return Err(Error::Diverged { step, gamma: cfg.gamma });
        }
        if let Some(c) = checkpoints.as_deref_mut() {
            c.at(step, cfg.iterations, model);
        }
    }
    Ok(())
}

fn stamp(model: &mut FactorModel, cfg: &SgdConfig) {
    model.gamma = cfg.gamma;
    model.lambda = cfg.lambda;
    model.iterations = cfg.iterations;
    model.seed = cfg.seed;
}

/// Classic matrix factorization.
pub fn train_mf(train: &RatingsDataset, cfg: &SgdConfig) -> Result<FactorModel> {
    train_mf_observed(train, cfg, None)
}

pub fn train_mf_observed(
    train: &RatingsDataset,
    cfg: &SgdConfig,
    checkpoints: Option<&mut Checkpoints<'_>>,
) -> Result<FactorModel> {
    check_config(cfg)?;
    require_data(train)?;
    let mut model = FactorModel::init(
        FactorAlgorithm::Mf,
        train.num_users(),
        train.num_items(),
        cfg.k,
        cfg.seed,
        train.scale(),
    )?;
    run_mf(&mut model, train, cfg, checkpoints)?;
    stamp(&mut model, cfg);
    Ok(model)
}

/// Zero-data cold-start factorization. Takes only the index space and the
/// output rating scale; no ratings are read.
pub fn train_zeromat(
    num_users: usize,
    num_items: usize,
    scale: crate::data::RatingScale,
    cfg: &SgdConfig,
) -> Result<FactorModel> {
    train_zeromat_observed(num_users, num_items, scale, cfg, None)
}

pub fn train_zeromat_observed(
    num_users: usize,
    num_items: usize,
    scale: crate::data::RatingScale,
    cfg: &SgdConfig,
    checkpoints: Option<&mut Checkpoints<'_>>,
) -> Result<FactorModel> {
    check_config(cfg)?;
    if num_users == 0 || num_items == 0 {
        return Err(Error::invalid("zeromat needs at least one user and one item"));
    }
    let mut model =
        FactorModel::init(FactorAlgorithm::Zeromat, num_users, num_items, cfg.k, cfg.seed, scale)?;
    run_zeromat(&mut model, cfg, checkpoints)?;
    stamp(&mut model, cfg);
    model.dot_range = Some(score_range(&model));
    Ok(model)
}

/// Min and max of `u.v` over every (user, item) pair.
pub(crate) fn score_range(model: &FactorModel) -> (f64, f64) {
    use rayon::prelude::*;
    (0..model.num_users())
        .into_par_iter()
        .map(|u| {
            (0..model.num_items()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
                let d = model.raw_score(u, i);
                (lo.min(d), hi.max(d))
            })
        })
        .reduce(
            || (f64::INFINITY, f64::NEG_INFINITY),
            |a, b| (a.0.min(b.0), a.1.max(b.1)),
        )
}

/// `x^x` loss factorization.
pub fn train_dotmat(train: &RatingsDataset, cfg: &SgdConfig) -> Result<FactorModel> {
    train_dotmat_observed(train, cfg, None)
}

pub fn train_dotmat_observed(
    train: &RatingsDataset,
    cfg: &SgdConfig,
    checkpoints: Option<&mut Checkpoints<'_>>,
) -> Result<FactorModel> {
    check_config(cfg)?;
    require_data(train)?;
    let mut model = FactorModel::init(
        FactorAlgorithm::Dotmat,
        train.num_users(),
        train.num_items(),
        cfg.k,
        cfg.seed,
        train.scale(),
    )?;
    run_dotmat(&mut model, train, cfg, checkpoints)?;
    stamp(&mut model, cfg);
    Ok(model)
}

/// Two-phase training: `iters_pre` dotmat steps, then `cfg.iterations`
/// matrix factorization steps warm-started from the phase-one factors. Both
/// phases use the same seed, so an empty phase reproduces the other trainer.
pub fn train_dotmat_hybrid(
    train: &RatingsDataset,
    cfg: &SgdConfig,
    iters_pre: u64,
) -> Result<FactorModel> {
    train_dotmat_hybrid_observed(train, cfg, iters_pre, None)
}

pub fn train_dotmat_hybrid_observed(
    train: &RatingsDataset,
    cfg: &SgdConfig,
    iters_pre: u64,
    checkpoints: Option<&mut Checkpoints<'_>>,
) -> Result<FactorModel> {
    check_config(cfg)?;
    require_data(train)?;
    let mut model = FactorModel::init(
        FactorAlgorithm::DotmatHybrid,
        train.num_users(),
        train.num_items(),
        cfg.k,
        cfg.seed,
        train.scale(),
    )?;
    let pre = SgdConfig {
        iterations: iters_pre,
        ..*cfg
    };
    run_dotmat(&mut model, train, &pre, None)?;
    run_mf(&mut model, train, cfg, checkpoints)?;
    stamp(&mut model, cfg);
    model.iterations = iters_pre + cfg.iterations;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Rating, RatingScale};
    use crate::data::synth::low_rank_dataset;
    use crate::recommend::{evaluate_mae, Predictor};

    fn single(value: f64) -> RatingsDataset {
        RatingsDataset::from_indexed(1, 1, vec![Rating::new(0, 0, value)], RatingScale::FIVE_STAR)
            .unwrap()
    }

    fn unit_model(alg: FactorAlgorithm) -> FactorModel {
        let mut m = FactorModel::init(alg, 1, 1, 1, 0, RatingScale::FIVE_STAR).unwrap();
        m.user_factors.row_mut(0)[0] = 1.0;
        m.item_factors.row_mut(0)[0] = 1.0;
        m
    }

    #[test]
    fn zero_iterations_keep_initialization() {
        let ds = low_rank_dataset(5, 5, 1, 0.5, 1.5, 3).unwrap();
        let cfg = SgdConfig { iterations: 0, k: 2, ..SgdConfig::default() };
        let model = train_mf(&ds, &cfg).unwrap();
        let init = FactorModel::init(FactorAlgorithm::Mf, 5, 5, 2, cfg.seed, ds.scale()).unwrap();
        assert_eq!(model.user_factors, init.user_factors);
        assert_eq!(model.item_factors, init.item_factors);
    }

    #[test]
    fn mf_single_step_hand_value() {
        let ds = single(4.0);
        let mut m = unit_model(FactorAlgorithm::Mf);
        let cfg = SgdConfig { k: 1, gamma: 0.1, lambda: 0.0, iterations: 1, seed: 0 };
        run_mf(&mut m, &ds, &cfg, None).unwrap();
        // e = 3, u = 1 + 0.1 * 3 * 1
        assert!((m.user_factors.row(0)[0] - 1.3).abs() < 1e-15);
        assert!((m.item_factors.row(0)[0] - 1.3).abs() < 1e-15);
    }

    #[test]
    fn zeromat_single_step_hand_value() {
        let mut m = unit_model(FactorAlgorithm::Zeromat);
        let cfg = SgdConfig { k: 1, gamma: 0.1, lambda: 0.0, iterations: 1, seed: 0 };
        run_zeromat(&mut m, &cfg, None).unwrap();
        assert!((m.user_factors.row(0)[0] - 0.9).abs() < 1e-15);
        assert!((m.item_factors.row(0)[0] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn zeromat_zero_rate_is_identity() {
        let cfg = SgdConfig { gamma: 0.0, iterations: 500, k: 3, ..SgdConfig::default() };
        let m = train_zeromat(4, 6, RatingScale::FIVE_STAR, &cfg).unwrap();
        let init =
            FactorModel::init(FactorAlgorithm::Zeromat, 4, 6, 3, cfg.seed, RatingScale::FIVE_STAR)
                .unwrap();
        assert_eq!(m.user_factors, init.user_factors);
        assert_eq!(m.item_factors, init.item_factors);
    }

    #[test]
    fn zeromat_tiny_denominator_keeps_sign() {
        let mut m = unit_model(FactorAlgorithm::Zeromat);
        m.user_factors.row_mut(0)[0] = 1e-4;
        m.item_factors.row_mut(0)[0] = -1e-4;
        let cfg = SgdConfig { k: 1, gamma: 1e-9, lambda: 0.0, iterations: 1, seed: 0 };
        run_zeromat(&mut m, &cfg, None).unwrap();
        // v / (-floor) pushes u negative-ward from 1e-4 by 1e-9 * 1e-4 / 1e-6
        let u = m.user_factors.row(0)[0];
        assert!((u - (1e-4 + 1e-9 * (-1e-4 / -1e-6 - 2e-4))).abs() < 1e-18);
        assert!(m.user_factors.all_finite());
    }

    #[test]
    fn self_power_at_one_and_half() {
        let (f, df) = self_power(1.0);
        assert_eq!((f, df), (1.0, 1.0));
        let (f, df) = self_power(0.5);
        assert!((f - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((df - 0.216_977_709_452_273_96).abs() < 1e-12);
    }

    #[test]
    fn self_power_derivative_matches_finite_difference() {
        for x in [0.1f64, 0.3, 0.5, 0.9] {
            let h = 1e-6;
            let fd = ((x + h).powf(x + h) - (x - h).powf(x - h)) / (2.0 * h);
            let (_, df) = self_power(x);
            assert!(((df - fd) / fd).abs() < 1e-6, "x={x} df={df} fd={fd}");
        }
    }

    #[test]
    fn dotmat_zero_residual_no_change() {
        // x = 1 gives f = 1 = 5 / 5.
        let ds = single(5.0);
        let mut m = unit_model(FactorAlgorithm::Dotmat);
        let before = m.clone();
        let cfg = SgdConfig { k: 1, gamma: 0.5, lambda: 0.0, iterations: 3, seed: 0 };
        run_dotmat(&mut m, &ds, &cfg, None).unwrap();
        assert_eq!(m, before);
    }

    #[test]
    fn dotmat_step_direction() {
        // x = 1, target 0.8: residual 0.2 > 0, f' = 1, u = 1 - 0.1 * 1 * 1.
        let ds = single(4.0);
        let mut m = unit_model(FactorAlgorithm::Dotmat);
        let cfg = SgdConfig { k: 1, gamma: 0.1, lambda: 0.0, iterations: 1, seed: 0 };
        run_dotmat(&mut m, &ds, &cfg, None).unwrap();
        assert!((m.user_factors.row(0)[0] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn hybrid_degenerate_phases() {
        let ds = low_rank_dataset(8, 9, 2, 0.5, 1.2, 4).unwrap();
        let cfg = SgdConfig { k: 3, gamma: 0.02, lambda: 0.01, iterations: 400, seed: 11 };

        let mf = train_mf(&ds, &cfg).unwrap();
        let h = train_dotmat_hybrid(&ds, &cfg, 0).unwrap();
        assert_eq!(h.user_factors, mf.user_factors);
        assert_eq!(h.item_factors, mf.item_factors);

        let dm = train_dotmat(&ds, &SgdConfig { iterations: 300, ..cfg }).unwrap();
        let h = train_dotmat_hybrid(&ds, &SgdConfig { iterations: 0, ..cfg }, 300).unwrap();
        assert_eq!(h.user_factors, dm.user_factors);
        assert_eq!(h.item_factors, dm.item_factors);
    }

    #[test]
    fn hybrid_refines_dotmat_on_rank_one() {
        let ds = low_rank_dataset(12, 12, 1, 1.0, 2.0, 8).unwrap();
        let cfg = SgdConfig { k: 1, gamma: 0.01, lambda: 0.0, iterations: 20_000, seed: 2 };
        let dm = train_dotmat(&ds, &SgdConfig { iterations: 2_000, ..cfg }).unwrap();
        let h = train_dotmat_hybrid(&ds, &cfg, 2_000).unwrap();
        let phase1 = FactorModel { algorithm: FactorAlgorithm::DotmatHybrid, ..dm.clone() };
        let mae_phase1 = evaluate_mae(&phase1, &ds).unwrap();
        let mae_final = evaluate_mae(&h, &ds).unwrap();
        assert!(mae_final <= mae_phase1 + 1e-9, "{mae_final} vs {mae_phase1}");
    }

    #[test]
    fn mf_reduces_training_error_on_rank_one() {
        let ds = low_rank_dataset(10, 10, 1, 1.0, 2.0, 5).unwrap();
        let base = SgdConfig { k: 1, gamma: 0.01, lambda: 0.0, iterations: 0, seed: 1 };
        let before = evaluate_mae(&train_mf(&ds, &base).unwrap(), &ds).unwrap();
        let after = evaluate_mae(
            &train_mf(&ds, &SgdConfig { iterations: 10_000, ..base }).unwrap(),
            &ds,
        )
        .unwrap();
        assert!(after < before);
    }

    #[test]
    fn divergence_is_reported() {
        let ds = low_rank_dataset(6, 6, 2, 1.0, 2.0, 5).unwrap();
        let cfg = SgdConfig { k: 2, gamma: 50.0, lambda: 0.0, iterations: 10_000, seed: 1 };
        match train_mf(&ds, &cfg) {
            Err(Error::Diverged { step, .. }) => assert!(step >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn predictions_respect_scale() {
        let ds = low_rank_dataset(6, 7, 2, 0.5, 1.5, 5).unwrap();
        let cfg = SgdConfig { k: 2, iterations: 2_000, ..SgdConfig::default() };
        for m in [
            train_mf(&ds, &cfg).unwrap(),
            train_dotmat(&ds, &cfg).unwrap(),
            train_zeromat(6, 7, ds.scale(), &cfg).unwrap(),
        ] {
            for u in 0..7 {
                for i in 0..8 {
                    let p = m.predict(u, i);
                    assert!(p.is_finite() && ds.scale().contains(p));
                }
            }
        }
    }
}
