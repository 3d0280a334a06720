//! C ABI for recsys-lens.
//!
//! Handles are opaque pointers created by `*_new`/`*_load`/`*_train`
//! functions and released with the matching `*_free`. Every fallible call
//! returns an [`RlStatus`]; on failure [`rl_last_error_message`] describes
//! the problem. Error messages are per thread. Panics never cross the
//! boundary; they surface as `RL_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use recsys_lens::data::{self, RatingScale, RatingsDataset};
use recsys_lens::recommend::{self, FactorModel, ModelSettings, Predictor, SeriesTrace};
use recsys_lens::similarity::{self, SimilarityMatrix};
use recsys_lens::{embedding, recurrence, Error};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RlStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    Validate = 5,
    Compute = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RlInputFormat {
    MovielensDat = 0,
    MovielensTab = 1,
    ComodaCsv = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RlAlgorithm {
    Mf = 0,
    Zeromat = 1,
    Dotmat = 2,
    DotmatHybrid = 3,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RlSide {
    User = 0,
    Item = 1,
}

/// SGD settings for [`rl_model_train`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RlTrainConfig {
    pub k: usize,
    pub gamma: f64,
    pub lambda: f64,
    pub iterations: u64,
    /// Dotmat steps before the MF phase (hybrid only).
    pub iters_pre: u64,
    pub seed: u64,
}

/// Opaque rating dataset.
pub struct RlDataset(RatingsDataset);
/// Opaque trained factor model.
pub struct RlModel(FactorModel);
/// Opaque sparse similarity matrix.
pub struct RlSimilarity(SimilarityMatrix);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(err: &Error) -> RlStatus {
    match err.category() {
        "io" => RlStatus::Io,
        "parse" => RlStatus::Parse,
        "validate" => RlStatus::Validate,
        _ => RlStatus::Compute,
    }
}

struct Fail(RlStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(RlStatus::NullArgument, format!("{what} is null"))
}

/// Runs `body`, converting errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Fail>) -> RlStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            RlStatus::Ok
        }
        Ok(Err(Fail(status, message))) => {
            set_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {message}"));
            RlStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, Fail> {
    ptr.as_ref().ok_or_else(|| null(what))
}

unsafe fn slice<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn path_arg(ptr: *const c_char) -> Result<PathBuf, Fail> {
    if ptr.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map(PathBuf::from)
        .map_err(|_| Fail(RlStatus::InvalidUtf8, "path is not valid UTF-8".into()))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = value;
    Ok(())
}

/// Message for the most recent failed call on this thread, or null. The
/// pointer stays valid until the next call into this library on the same
/// thread.
#[no_mangle]
pub extern "C" fn rl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn rl_train_config_default() -> RlTrainConfig {
    let s = ModelSettings::default();
    RlTrainConfig {
        k: s.k,
        gamma: s.gamma,
        lambda: s.lambda,
        iterations: s.iterations,
        iters_pre: s.iters_pre,
        seed: s.seed,
    }
}

// ---- datasets ----

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_dataset_load(
    path: *const c_char,
    format: RlInputFormat,
    scale_min: f64,
    scale_max: f64,
    out: *mut *mut RlDataset,
) -> RlStatus {
    guard(|| {
        let path = path_arg(path)?;
        let format = match format {
            RlInputFormat::MovielensDat => data::InputFormat::MovielensDat,
            RlInputFormat::MovielensTab => data::InputFormat::MovielensTab,
            RlInputFormat::ComodaCsv => data::InputFormat::ComodaCsv,
        };
        let scale = RatingScale::new(scale_min, scale_max)?;
        let (ds, _) = data::load_ratings(&path, format, scale)?;
        store(out, RlDataset(ds))
    })
}

/// Builds a dataset from parallel arrays of dense indices and values.
///
/// # Safety
/// Each array must hold `len` elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_dataset_from_triplets(
    users: *const usize,
    items: *const usize,
    values: *const f64,
    len: usize,
    num_users: usize,
    num_items: usize,
    scale_min: f64,
    scale_max: f64,
    out: *mut *mut RlDataset,
) -> RlStatus {
    guard(|| {
        let users = slice(users, len, "users")?;
        let items = slice(items, len, "items")?;
        let values = slice(values, len, "values")?;
        let ratings = (0..len)
            .map(|i| data::Rating::new(users[i], items[i], values[i]))
            .collect();
        let scale = RatingScale::new(scale_min, scale_max)?;
        let ds = RatingsDataset::from_indexed(num_users, num_items, ratings, scale)?;
        store(out, RlDataset(ds))
    })
}

/// # Safety
/// `dataset` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rl_dataset_num_users(dataset: *const RlDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.0.num_users())
}

/// # Safety
/// `dataset` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rl_dataset_num_items(dataset: *const RlDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.0.num_items())
}

/// Number of ratings.
///
/// # Safety
/// `dataset` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rl_dataset_len(dataset: *const RlDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.0.len())
}

/// # Safety
/// `dataset` must be a live handle; `train` and `test` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_dataset_split(
    dataset: *const RlDataset,
    ratio: f64,
    seed: u64,
    train: *mut *mut RlDataset,
    test: *mut *mut RlDataset,
) -> RlStatus {
    guard(|| {
        let ds = borrow(dataset, "dataset")?;
        if train.is_null() || test.is_null() {
            return Err(null("output pointer"));
        }
        let pair = data::split(&ds.0, ratio, seed)?;
        store(train, RlDataset(pair.train))?;
        store(test, RlDataset(pair.test))
    })
}

/// # Safety
/// `dataset` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rl_dataset_free(dataset: *mut RlDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

// ---- models ----

/// Trains a factor model. ZeroMat reads only the dataset's dimensions and
/// rating scale, so `train` may hold no ratings.
///
/// # Safety
/// `train` and `config` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_model_train(
    algorithm: RlAlgorithm,
    train: *const RlDataset,
    config: *const RlTrainConfig,
    out: *mut *mut RlModel,
) -> RlStatus {
    guard(|| {
        let ds = borrow(train, "train")?;
        let c = borrow(config, "config")?;
        let settings = ModelSettings {
            k: c.k,
            gamma: c.gamma,
            lambda: c.lambda,
            iterations: c.iterations,
            iters_pre: c.iters_pre,
            seed: c.seed,
            ..ModelSettings::default()
        };
        let algorithm = match algorithm {
            RlAlgorithm::Mf => recommend::Algorithm::Mf,
            RlAlgorithm::Zeromat => recommend::Algorithm::Zeromat,
            RlAlgorithm::Dotmat => recommend::Algorithm::Dotmat,
            RlAlgorithm::DotmatHybrid => recommend::Algorithm::DotmatHybrid,
        };
        match recommend::fit(algorithm, &ds.0, &settings, None)? {
            recommend::Fitted::Factor(model) => store(out, RlModel(model)),
            _ => Err(Fail(RlStatus::Compute, "not a factor model".into())),
        }
    })
}

/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_model_predict(
    model: *const RlModel,
    user: usize,
    item: usize,
    out: *mut f64,
) -> RlStatus {
    guard(|| {
        let m = borrow(model, "model")?;
        if user >= m.0.num_users() || item >= m.0.num_items() {
            return Err(Fail(
                RlStatus::Validate,
                format!("({user}, {item}) is outside the {}x{} model", m.0.num_users(), m.0.num_items()),
            ));
        }
        write_out(out, m.0.predict(user, item))
    })
}

/// Mean absolute error of the model on `test`.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_model_mae(
    model: *const RlModel,
    test: *const RlDataset,
    out: *mut f64,
) -> RlStatus {
    guard(|| {
        let m = borrow(model, "model")?;
        let t = borrow(test, "test")?;
        write_out(out, recommend::evaluate_mae(&m.0, &t.0)?)
    })
}

/// MAE of seeded uniform random placement on `test`.
///
/// # Safety
/// `test` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_random_placement_mae(
    seed: u64,
    test: *const RlDataset,
    out: *mut f64,
) -> RlStatus {
    guard(|| {
        let t = borrow(test, "test")?;
        let predictor = recommend::predict_random(seed, t.0.scale());
        write_out(out, recommend::evaluate_mae(&predictor, &t.0)?)
    })
}

/// # Safety
/// `model` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn rl_model_save(model: *const RlModel, path: *const c_char) -> RlStatus {
    guard(|| {
        let m = borrow(model, "model")?;
        let path = path_arg(path)?;
        Ok(m.0.save(&path)?)
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_model_load(path: *const c_char, out: *mut *mut RlModel) -> RlStatus {
    guard(|| {
        let path = path_arg(path)?;
        store(out, RlModel(FactorModel::load(&path)?))
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rl_model_free(model: *mut RlModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

// ---- similarity ----

/// # Safety
/// `dataset` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_similarity_compute(
    dataset: *const RlDataset,
    side: RlSide,
    min_support: usize,
    out: *mut *mut RlSimilarity,
) -> RlStatus {
    guard(|| {
        let ds = borrow(dataset, "dataset")?;
        let side = match side {
            RlSide::User => data::Side::User,
            RlSide::Item => data::Side::Item,
        };
        store(out, RlSimilarity(similarity::similarity_matrix(&ds.0, side, min_support)?))
    })
}

/// Number of entities (matrix order).
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rl_similarity_size(sim: *const RlSimilarity) -> usize {
    sim.as_ref().map_or(0, |s| s.0.size())
}

/// # Safety
/// `sim` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_similarity_get(
    sim: *const RlSimilarity,
    a: usize,
    b: usize,
    out: *mut f64,
) -> RlStatus {
    guard(|| {
        let s = borrow(sim, "similarity")?;
        if a >= s.0.size() || b >= s.0.size() {
            return Err(Fail(RlStatus::Validate, format!("index outside 0..{}", s.0.size())));
        }
        write_out(out, s.0.get(a, b))
    })
}

/// Writes each entity's similarity radius into `out`, which must hold
/// `rl_similarity_size(sim)` elements.
///
/// # Safety
/// `sim` must be a live handle; `out` must point to `len` writable elements.
#[no_mangle]
pub unsafe extern "C" fn rl_similarity_radii(
    sim: *const RlSimilarity,
    out: *mut usize,
    len: usize,
) -> RlStatus {
    guard(|| {
        let s = borrow(sim, "similarity")?;
        let radii = similarity::similarity_radius(&s.0).radii;
        if len < radii.len() {
            return Err(Fail(
                RlStatus::BufferTooSmall,
                format!("need {} elements, got {len}", radii.len()),
            ));
        }
        if out.is_null() {
            return Err(null("output buffer"));
        }
        std::slice::from_raw_parts_mut(out, radii.len()).copy_from_slice(&radii);
        Ok(())
    })
}

/// Determinant of the similarity submatrix indexed by `selection`.
///
/// # Safety
/// `sim` must be a live handle; `selection` must hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn rl_dpp_diversity(
    sim: *const RlSimilarity,
    selection: *const usize,
    len: usize,
    out: *mut f64,
) -> RlStatus {
    guard(|| {
        let s = borrow(sim, "similarity")?;
        let selection = slice(selection, len, "selection")?;
        write_out(out, similarity::dpp_diversity(&s.0, selection)?)
    })
}

/// # Safety
/// `sim` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rl_similarity_free(sim: *mut RlSimilarity) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

// ---- series analysis ----

/// Delay embedding of `series` into row-major points of width `dim`.
///
/// `*points` receives the number of points. When `out` is null only the
/// count is reported; otherwise `out_len` must be at least `points * dim`.
///
/// # Safety
/// `series` must hold `len` elements and `out` (when non-null) `out_len`.
#[no_mangle]
pub unsafe extern "C" fn rl_takens_embed(
    series: *const f64,
    len: usize,
    dim: usize,
    tau: usize,
    out: *mut f64,
    out_len: usize,
    points: *mut usize,
) -> RlStatus {
    guard(|| {
        let values = slice(series, len, "series")?;
        let trace = SeriesTrace::from_values("ffi", values.to_vec())?;
        let cloud = embedding::takens_embed(&trace, dim, tau)?;
        write_out(points, cloud.points.len())?;
        if out.is_null() {
            return Ok(());
        }
        let needed = cloud.points.len() * dim;
        if out_len < needed {
            return Err(Fail(
                RlStatus::BufferTooSmall,
                format!("need {needed} elements, got {out_len}"),
            ));
        }
        let dst = std::slice::from_raw_parts_mut(out, needed);
        for (chunk, p) in dst.chunks_mut(dim).zip(&cloud.points) {
            chunk.copy_from_slice(p);
        }
        Ok(())
    })
}

/// Fraction of set cells in the recurrence plot of `series` at `epsilon`.
///
/// # Safety
/// `series` must hold `len` elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_recurrence_rate(
    series: *const f64,
    len: usize,
    epsilon: f64,
    out: *mut f64,
) -> RlStatus {
    guard(|| {
        let values = slice(series, len, "series")?;
        let trace = SeriesTrace::from_values("ffi", values.to_vec())?;
        let grid = recurrence::recurrence_plot(&trace, epsilon)?;
        write_out(out, recurrence::recurrence_rate(&grid))
    })
}
