//! C interface to `garch-ssm`.
//!
//! Objects are exposed as opaque handles created by `gssm_*_new` (or a
//! producing call such as [`gssm_fit`]) and released by the matching
//! `gssm_*_free`. Every fallible call returns a [`GssmStatus`]; on failure
//! [`gssm_last_error`] describes the problem. Matrices are passed as
//! row-major `double` buffers, and `NaN` marks a missing observation.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use garch_ssm::diagnostics::{summarize_values, waic, WaicReport};
use garch_ssm::filter::{filter_likelihood, ObservationNoise};
use garch_ssm::io::{read_csv, RunConfig};
use garch_ssm::model::{
    simulate, CorrelationFactor, GarchParams, ModelSpec, SeriesData, SeriesGarch, StateCov,
};
use garch_ssm::sampling::{run_chains_parallel, ObservationModel, PosteriorDraws, Problem};
use garch_ssm::Error;
use nalgebra::DMatrix;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GssmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Dimension = 3,
    Numerical = 4,
    Parse = 5,
    Config = 6,
    Io = 7,
    Insufficient = 8,
    ChainFailed = 9,
    Mismatch = 10,
    Panic = 11,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(e: &Error) -> GssmStatus {
    match e {
        Error::InvalidParameter { .. } => GssmStatus::InvalidArgument,
        Error::Dimension(_) => GssmStatus::Dimension,
        Error::SingularForecast { .. } | Error::Numerical(_) => GssmStatus::Numerical,
        Error::Chain { .. } => GssmStatus::ChainFailed,
        Error::Parse { .. } => GssmStatus::Parse,
        Error::Config { .. } => GssmStatus::Config,
        Error::Io(_) => GssmStatus::Io,
        Error::Mismatch(_) => GssmStatus::Mismatch,
        Error::Insufficient(_) => GssmStatus::Insufficient,
    }
}

struct Fail(GssmStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(GssmStatus::NullPointer, format!("`{what}` is null"))
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(GssmStatus::InvalidArgument, msg.into())
}

/// Run `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> GssmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            GssmStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            GssmStatus::Panic
        }
    }
}

unsafe fn slice<'a>(ptr: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn slice_mut<'a>(ptr: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(ptr, len))
}

unsafe fn string<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if ptr.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| invalid(format!("`{what}` is not UTF-8")))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn handle<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, Fail> {
    ptr.as_ref().ok_or_else(|| null(what))
}

fn row_major(v: &[f64], rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(rows, cols, v)
}

/// Message of the last failed call on this thread, or an empty string.
/// The pointer stays valid until the next call into the library on the
/// same thread.
#[no_mangle]
pub extern "C" fn gssm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gssm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Observed series.
pub struct GssmData(SeriesData);

/// `y` is `t_len × n`, row-major; `NaN` cells are missing.
///
/// # Safety
/// `y` must point to `t_len * n` readable doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gssm_data_new(y: *const f64, t_len: usize, n: usize, out: *mut *mut GssmData) -> GssmStatus {
    guard(|| {
        let total = t_len.checked_mul(n).ok_or_else(|| invalid("t_len * n overflows"))?;
        let y = slice(y, total, "y")?;
        let mask: Vec<bool> = y.iter().map(|v| !v.is_nan()).collect();
        let data = SeriesData::new(row_major(y, t_len, n), mask)?;
        write_out(out, Box::into_raw(Box::new(GssmData(data))), "out")
    })
}

/// Read a series CSV (header row, optional time column, `NA` or empty for missing).
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gssm_data_read_csv(path: *const c_char, out: *mut *mut GssmData) -> GssmStatus {
    guard(|| {
        let path = string(path, "path")?;
        let data = read_csv(Path::new(path))?;
        write_out(out, Box::into_raw(Box::new(GssmData(data))), "out")
    })
}

/// # Safety
/// `data` must be valid; `t_len` and `n` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gssm_data_dims(data: *const GssmData, t_len: *mut usize, n: *mut usize) -> GssmStatus {
    guard(|| {
        let d = &handle(data, "data")?.0;
        write_out(t_len, d.len(), "t_len")?;
        write_out(n, d.n(), "n")
    })
}

/// # Safety
/// `data` must come from this library and not be used afterwards. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn gssm_data_free(data: *mut GssmData) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// State-space structure.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GssmModelKind {
    /// Random walk plus noise, `r = n`.
    RandomWalk = 0,
    /// Local linear trend per series, `r = 2n`.
    LocalTrend = 1,
}

/// Model specification with the diffuse initial-state prior.
pub struct GssmModel(ModelSpec);

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gssm_model_new(kind: GssmModelKind, n: usize, out: *mut *mut GssmModel) -> GssmStatus {
    guard(|| {
        let spec = match kind {
            GssmModelKind::RandomWalk => ModelSpec::random_walk_plus_noise(n)?,
            GssmModelKind::LocalTrend => ModelSpec::local_linear_trend(n)?,
        };
        write_out(out, Box::into_raw(Box::new(GssmModel(spec))), "out")
    })
}

/// # Safety
/// `model` must be valid; `n` and `r` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gssm_model_dims(model: *const GssmModel, n: *mut usize, r: *mut usize) -> GssmStatus {
    guard(|| {
        let m = &handle(model, "model")?.0;
        write_out(n, m.n(), "n")?;
        write_out(r, m.r(), "r")
    })
}

/// # Safety
/// `model` must come from this library and not be used afterwards. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn gssm_model_free(model: *mut GssmModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// CCC-GARCH(p, q) parameters: `alpha0[n]`, `alpha[n*p]` and `beta[n*q]`
/// (series-major), correlation `corr[n*n]`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GssmGarch {
    pub p: usize,
    pub q: usize,
    pub alpha0: *const f64,
    pub alpha: *const f64,
    pub beta: *const f64,
    pub corr: *const f64,
}

unsafe fn garch_params(g: &GssmGarch, n: usize) -> Result<(GarchParams, DMatrix<f64>), Fail> {
    let alpha0 = slice(g.alpha0, n, "alpha0")?;
    let alpha = slice(g.alpha, n * g.p, "alpha")?;
    let beta = slice(g.beta, n * g.q, "beta")?;
    let corr = row_major(slice(g.corr, n * n, "corr")?, n, n);
    let series = (0..n)
        .map(|i| {
            SeriesGarch::new(
                alpha0[i],
                alpha[i * g.p..(i + 1) * g.p].to_vec(),
                beta[i * g.q..(i + 1) * g.q].to_vec(),
            )
        })
        .collect();
    Ok((GarchParams::new(series)?, corr))
}

/// Marginal log-likelihood of the GARCH state-space model. `w` is `r × r`;
/// `pointwise`, if not null, receives the `t_len` per-time log predictive
/// densities.
///
/// # Safety
/// Handles must be valid, buffers sized as documented, `loglik` writable.
#[no_mangle]
pub unsafe extern "C" fn gssm_loglik_garch(
    model: *const GssmModel,
    data: *const GssmData,
    garch: *const GssmGarch,
    w: *const f64,
    loglik: *mut f64,
    pointwise: *mut f64,
) -> GssmStatus {
    guard(|| {
        let spec = &handle(model, "model")?.0;
        let data = &handle(data, "data")?.0;
        let (n, r) = (spec.n(), spec.r());
        let (params, corr) = garch_params(handle(garch, "garch")?, n)?;
        let w = StateCov::new(row_major(slice(w, r * r, "w")?, r, r))?;
        let out = filter_likelihood(data, spec, ObservationNoise::Garch { params: &params, corr: &corr }, &w)?;
        if !pointwise.is_null() {
            slice_mut(pointwise, out.pointwise.len(), "pointwise")?.copy_from_slice(&out.pointwise);
        }
        write_out(loglik, out.loglik, "loglik")
    })
}

/// Marginal log-likelihood with constant observation covariance `v` (`n × n`).
///
/// # Safety
/// As [`gssm_loglik_garch`].
#[no_mangle]
pub unsafe extern "C" fn gssm_loglik_constant(
    model: *const GssmModel,
    data: *const GssmData,
    v: *const f64,
    w: *const f64,
    loglik: *mut f64,
    pointwise: *mut f64,
) -> GssmStatus {
    guard(|| {
        let spec = &handle(model, "model")?.0;
        let data = &handle(data, "data")?.0;
        let (n, r) = (spec.n(), spec.r());
        let v = row_major(slice(v, n * n, "v")?, n, n);
        let w = StateCov::new(row_major(slice(w, r * r, "w")?, r, r))?;
        let out = filter_likelihood(data, spec, ObservationNoise::Constant(&v), &w)?;
        if !pointwise.is_null() {
            slice_mut(pointwise, out.pointwise.len(), "pointwise")?.copy_from_slice(&out.pointwise);
        }
        write_out(loglik, out.loglik, "loglik")
    })
}

/// Simulate `t_len` observations starting from `θ_0 = 0`. Writes `y_out`
/// (`t_len × n`) and, if not null, `sigma_out` (`t_len × n`) and
/// `states_out` (`(t_len + 1) × r`).
///
/// # Safety
/// Handles must be valid and output buffers sized as documented.
#[no_mangle]
pub unsafe extern "C" fn gssm_simulate(
    model: *const GssmModel,
    garch: *const GssmGarch,
    w: *const f64,
    t_len: usize,
    seed: u64,
    y_out: *mut f64,
    sigma_out: *mut f64,
    states_out: *mut f64,
) -> GssmStatus {
    guard(|| {
        let spec = &handle(model, "model")?.0;
        let (n, r) = (spec.n(), spec.r());
        let (params, corr) = garch_params(handle(garch, "garch")?, n)?;
        let corr = CorrelationFactor::from_correlation(&corr)?;
        let w = StateCov::new(row_major(slice(w, r * r, "w")?, r, r))?;
        let spec = spec
            .clone()
            .with_prior(nalgebra::DVector::zeros(r), DMatrix::identity(r, r) * 1e-300)?;
        let (data, truth) = simulate(&spec, &params, &corr, &w, t_len, seed)?;
        let copy = |m: &DMatrix<f64>, ptr: *mut f64, what: &str| -> Result<(), Fail> {
            let buf = slice_mut(ptr, m.len(), what)?;
            for (k, v) in buf.iter_mut().enumerate() {
                *v = m[(k / m.ncols(), k % m.ncols())];
            }
            Ok(())
        };
        copy(data.y(), y_out, "y_out")?;
        if !sigma_out.is_null() {
            copy(&truth.sigma, sigma_out, "sigma_out")?;
        }
        if !states_out.is_null() {
            copy(&truth.states, states_out, "states_out")?;
        }
        Ok(())
    })
}

/// WAIC from a `draws × t_len` row-major matrix of pointwise log predictive
/// densities, on the higher-is-better scale.
///
/// # Safety
/// `lp` must hold `draws * t_len` doubles; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn gssm_waic(
    lp: *const f64,
    draws: usize,
    t_len: usize,
    waic_out: *mut f64,
    lppd_out: *mut f64,
    p_waic_out: *mut f64,
) -> GssmStatus {
    guard(|| {
        let total = draws.checked_mul(t_len).ok_or_else(|| invalid("draws * t_len overflows"))?;
        let m = row_major(slice(lp, total, "lp")?, draws, t_len);
        let r = waic(&m)?;
        write_out(waic_out, r.waic, "waic_out")?;
        write_out(lppd_out, r.lppd, "lppd_out")?;
        write_out(p_waic_out, r.p_waic, "p_waic_out")
    })
}

/// Parsed run configuration.
pub struct GssmConfig(RunConfig);

/// Parse TOML configuration text. Relative paths resolve against `base_dir`
/// (null means the current directory).
///
/// # Safety
/// Strings must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gssm_config_parse(
    text: *const c_char,
    base_dir: *const c_char,
    out: *mut *mut GssmConfig,
) -> GssmStatus {
    guard(|| {
        let text = string(text, "text")?;
        let base = if base_dir.is_null() { "." } else { string(base_dir, "base_dir")? };
        let config = RunConfig::parse(text, Path::new(base))?;
        write_out(out, Box::into_raw(Box::new(GssmConfig(config))), "out")
    })
}

/// # Safety
/// `config` must come from this library and not be used afterwards. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn gssm_config_free(config: *mut GssmConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Posterior draws of a completed fit.
pub struct GssmFit {
    draws: PosteriorDraws,
    waic: WaicReport,
    names: Vec<CString>,
    values: Vec<Vec<f64>>,
}

/// Run the sampler configured by `config` on `data`. Chains that stop early
/// are reported through [`gssm_fit_failures`]; the call still succeeds if
/// any draws were retained.
///
/// # Safety
/// Handles must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gssm_fit(config: *const GssmConfig, data: *const GssmData, out: *mut *mut GssmFit) -> GssmStatus {
    guard(|| {
        let config = &handle(config, "config")?.0;
        let data = &handle(data, "data")?.0;
        let problem = Problem {
            data,
            spec: &config.spec,
            model: config.model,
            prior: &config.priors,
            config: &config.mcmc,
        };
        let draws = run_chains_parallel(&problem)?;
        let report = waic(&draws.pointwise_lp)?;
        let (names, values): (Vec<_>, Vec<_>) = draws
            .scalar_parameters()
            .into_iter()
            .map(|(n, v)| (CString::new(n).unwrap_or_default(), v))
            .unzip();
        let fit = GssmFit {
            draws,
            waic: report,
            names,
            values,
        };
        write_out(out, Box::into_raw(Box::new(fit)), "out")
    })
}

/// Number of retained draws.
///
/// # Safety
/// `fit` must be valid or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn gssm_fit_n_draws(fit: *const GssmFit) -> usize {
    fit.as_ref().map_or(0, |f| f.draws.len())
}

/// Number of chains that stopped early.
///
/// # Safety
/// `fit` must be valid or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn gssm_fit_failures(fit: *const GssmFit) -> usize {
    fit.as_ref().map_or(0, |f| f.draws.failures.len())
}

/// Number of named scalar parameters.
///
/// # Safety
/// `fit` must be valid or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn gssm_fit_n_params(fit: *const GssmFit) -> usize {
    fit.as_ref().map_or(0, |f| f.names.len())
}

/// Name of parameter `k` (for example `alpha1[2]` or `W[1,1]`); null when
/// out of range. Owned by the fit.
///
/// # Safety
/// `fit` must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn gssm_fit_param_name(fit: *const GssmFit, k: usize) -> *const c_char {
    fit.as_ref()
        .and_then(|f| f.names.get(k))
        .map_or(std::ptr::null(), |s| s.as_ptr())
}

/// Copy the draws of parameter `k` into `out` (`gssm_fit_n_draws` values).
///
/// # Safety
/// `fit` must be valid and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn gssm_fit_param_draws(fit: *const GssmFit, k: usize, out: *mut f64, len: usize) -> GssmStatus {
    guard(|| {
        let fit = handle(fit, "fit")?;
        let v = fit.values.get(k).ok_or_else(|| invalid(format!("parameter index {k} out of range")))?;
        if len != v.len() {
            return Err(Fail(GssmStatus::Dimension, format!("buffer holds {len} values, fit has {}", v.len())));
        }
        slice_mut(out, len, "out")?.copy_from_slice(v);
        Ok(())
    })
}

/// Posterior median and 95% interval of parameter `k`.
///
/// # Safety
/// `fit` must be valid; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn gssm_fit_param_summary(
    fit: *const GssmFit,
    k: usize,
    median: *mut f64,
    lo: *mut f64,
    hi: *mut f64,
) -> GssmStatus {
    guard(|| {
        let fit = handle(fit, "fit")?;
        let v = fit.values.get(k).ok_or_else(|| invalid(format!("parameter index {k} out of range")))?;
        let s = summarize_values("param", v)?;
        write_out(median, s.median, "median")?;
        write_out(lo, s.ci_lo, "lo")?;
        write_out(hi, s.ci_hi, "hi")
    })
}

/// WAIC of the fit (higher is better) with its components.
///
/// # Safety
/// `fit` must be valid; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn gssm_fit_waic(
    fit: *const GssmFit,
    waic_out: *mut f64,
    lppd_out: *mut f64,
    p_waic_out: *mut f64,
) -> GssmStatus {
    guard(|| {
        let w = &handle(fit, "fit")?.waic;
        write_out(waic_out, w.waic, "waic_out")?;
        write_out(lppd_out, w.lppd, "lppd_out")?;
        write_out(p_waic_out, w.p_waic, "p_waic_out")
    })
}

/// 1 for a GARCH fit, 0 for the constant-covariance model.
///
/// # Safety
/// `fit` must be valid or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn gssm_fit_is_garch(fit: *const GssmFit) -> i32 {
    fit.as_ref()
        .map_or(0, |f| i32::from(matches!(f.draws.model, ObservationModel::Garch { .. })))
}

/// # Safety
/// `fit` must come from this library and not be used afterwards. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn gssm_fit_free(fit: *mut GssmFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}
