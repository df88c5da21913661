//! C interface to `bnpirt`.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_read`
//! style functions and released with the matching `*_free`. Every fallible
//! call returns a `BnpirtStatus`; on failure the message is available from
//! `bnpirt_last_error` on the same thread. Panics never unwind into C.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use bnpirt::archive::SampleArchive;
use bnpirt::diagnostics::{efficiency_report, univariate_ess, ParameterSelection};
use bnpirt::identify::postprocess_archive;
use bnpirt::inference::waic::waic_from_archive;
use bnpirt::model::{success_probability, ItemRow, ModelKind, ResponseMatrix};
use bnpirt::priors::{crp_cluster_moments, Priors};
use bnpirt::samplers::strategy::{AbilityModel, Algorithm, ConstraintMode, Parameterization, StrategyConfig};
use bnpirt::samplers::{run_chain, ChainSettings};
use bnpirt::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BnpirtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Dimension = 3,
    Io = 4,
    Runtime = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BnpirtModel {
    OnePl = 1,
    TwoPl = 2,
    ThreePl = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BnpirtParameterization {
    Irt = 0,
    SlopeIntercept = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BnpirtConstraint {
    Unconstrained = 0,
    ConstrainedAbilities = 1,
    ConstrainedItems = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BnpirtAlgorithm {
    MhConjugate = 0,
    Centered = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BnpirtAbilityModel {
    Parametric = 0,
    Semiparametric = 1,
}

/// One cell of the strategy matrix; each field holds a value of the enum of
/// the same name.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BnpirtStrategy {
    pub model: i32,
    pub parameterization: i32,
    pub constraint: i32,
    pub algorithm: i32,
    pub ability_model: i32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct BnpirtWaic {
    pub waic: f64,
    pub lppd: f64,
    pub p_waic: f64,
}

/// Binary response matrix.
pub struct BnpirtResponses(ResponseMatrix);

/// Post-burn-in draws of one chain.
pub struct BnpirtArchive(SampleArchive);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> BnpirtStatus {
    match e {
        Error::Dimension(_) => BnpirtStatus::Dimension,
        Error::Io { .. } => BnpirtStatus::Io,
        Error::Stage { source, .. } => status_of(source),
        e if e.is_validation() => BnpirtStatus::InvalidArgument,
        _ => BnpirtStatus::Runtime,
    }
}

struct Fail(BnpirtStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(BnpirtStatus::NullPointer, format!("`{what}` is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> BnpirtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BnpirtStatus::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            BnpirtStatus::Panic
        }
    }
}

unsafe fn path_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(BnpirtStatus::InvalidArgument, format!("`{what}` is not UTF-8")))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

fn bad_enum(what: &str, v: i32) -> Fail {
    Fail(BnpirtStatus::InvalidArgument, format!("{v} is not a valid {what}"))
}

fn model_kind(m: i32) -> Result<ModelKind, Fail> {
    match m {
        x if x == BnpirtModel::OnePl as i32 => Ok(ModelKind::OnePL),
        x if x == BnpirtModel::TwoPl as i32 => Ok(ModelKind::TwoPL),
        x if x == BnpirtModel::ThreePl as i32 => Ok(ModelKind::ThreePL),
        v => Err(bad_enum("model", v)),
    }
}

impl BnpirtStrategy {
    fn to_config(self) -> Result<StrategyConfig, Fail> {
        let parameterization = match self.parameterization {
            x if x == BnpirtParameterization::Irt as i32 => Parameterization::Irt,
            x if x == BnpirtParameterization::SlopeIntercept as i32 => Parameterization::SlopeIntercept,
            v => return Err(bad_enum("parameterization", v)),
        };
        let constraint = match self.constraint {
            x if x == BnpirtConstraint::Unconstrained as i32 => ConstraintMode::Unconstrained,
            x if x == BnpirtConstraint::ConstrainedAbilities as i32 => ConstraintMode::ConstrainedAbilities,
            x if x == BnpirtConstraint::ConstrainedItems as i32 => ConstraintMode::ConstrainedItems,
            v => return Err(bad_enum("constraint", v)),
        };
        let algorithm = match self.algorithm {
            x if x == BnpirtAlgorithm::MhConjugate as i32 => Algorithm::MhConjugate,
            x if x == BnpirtAlgorithm::Centered as i32 => Algorithm::Centered,
            v => return Err(bad_enum("algorithm", v)),
        };
        let ability_model = match self.ability_model {
            x if x == BnpirtAbilityModel::Parametric as i32 => AbilityModel::Parametric,
            x if x == BnpirtAbilityModel::Semiparametric as i32 => AbilityModel::Semiparametric,
            v => return Err(bad_enum("ability model", v)),
        };
        Ok(StrategyConfig::new(
            model_kind(self.model)?,
            parameterization,
            constraint,
            algorithm,
            ability_model,
        )?)
    }
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length, 0 if there is none.
#[no_mangle]
pub unsafe extern "C" fn bnpirt_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
                *buf.add(n) = 0;
            }
            bytes.len()
        }
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bnpirt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Builds a response matrix from `n_individuals * n_items` row-major cells:
/// 0, 1, or -1 for missing.
#[no_mangle]
pub unsafe extern "C" fn bnpirt_responses_new(
    n_individuals: usize,
    n_items: usize,
    cells: *const i8,
    out: *mut *mut BnpirtResponses,
) -> BnpirtStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        if cells.is_null() {
            return Err(null("cells"));
        }
        let total = n_individuals
            .checked_mul(n_items)
            .ok_or_else(|| Fail(BnpirtStatus::Dimension, "matrix too large".into()))?;
        let raw = slice::from_raw_parts(cells, total);
        let cells = raw
            .iter()
            .map(|&c| match c {
                0 => Ok(Some(0)),
                1 => Ok(Some(1)),
                -1 => Ok(None),
                other => Err(Fail(BnpirtStatus::InvalidArgument, format!("cell value {other} is not 0, 1 or -1"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let y = ResponseMatrix::new(n_individuals, n_items, cells)?;
        *out = Box::into_raw(Box::new(BnpirtResponses(y)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn bnpirt_responses_read_csv(path: *const c_char, out: *mut *mut BnpirtResponses) -> BnpirtStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let p = path_arg(path, "path")?;
        let f = std::fs::File::open(p).map_err(|e| Error::io(p, e))?;
        let y = ResponseMatrix::read_csv(std::io::BufReader::new(f))?;
        *out = Box::into_raw(Box::new(BnpirtResponses(y)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn bnpirt_responses_free(handle: *mut BnpirtResponses) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

#[no_mangle]
pub unsafe extern "C" fn bnpirt_responses_shape(
    handle: *const BnpirtResponses,
    n_individuals: *mut usize,
    n_items: *mut usize,
) -> BnpirtStatus {
    guard(|| {
        let y = &handle.as_ref().ok_or_else(|| null("handle"))?.0;
        *out_ptr(n_individuals, "n_individuals")? = y.n_individuals();
        *out_ptr(n_items, "n_items")? = y.n_items();
        Ok(())
    })
}

/// Probability of a correct response; `guessing` is ignored unless the model is 3PL.
#[no_mangle]
pub unsafe extern "C" fn bnpirt_success_probability(
    model: i32,
    discrimination: f64,
    difficulty: f64,
    guessing: f64,
    ability: f64,
    out: *mut f64,
) -> BnpirtStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let kind = model_kind(model)?;
        let row = ItemRow {
            discrimination,
            difficulty,
            guessing: kind.has_guessing().then_some(guessing),
        };
        *out = success_probability(kind, &row, ability)?;
        Ok(())
    })
}

/// Runs one chain with default priors. `thin` of 0 means 1.
#[no_mangle]
pub unsafe extern "C" fn bnpirt_fit(
    responses: *const BnpirtResponses,
    strategy: BnpirtStrategy,
    iterations: usize,
    burnin: usize,
    thin: usize,
    seed: u64,
    out: *mut *mut BnpirtArchive,
) -> BnpirtStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let y = &responses.as_ref().ok_or_else(|| null("responses"))?.0;
        let mut settings = ChainSettings::new(iterations, burnin, seed);
        settings.thin = thin.max(1);
        let archive = run_chain(y, &strategy.to_config()?, &Priors::default(), &settings)?;
        *out = Box::into_raw(Box::new(BnpirtArchive(archive)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn bnpirt_archive_read(dir: *const c_char, out: *mut *mut BnpirtArchive) -> BnpirtStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let a = SampleArchive::read_dir(path_arg(dir, "dir")?)?;
        *out = Box::into_raw(Box::new(BnpirtArchive(a)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn bnpirt_archive_write(archive: *const BnpirtArchive, dir: *const c_char) -> BnpirtStatus {
    guard(|| {
        let a = &archive.as_ref().ok_or_else(|| null("archive"))?.0;
        a.write_dir(path_arg(dir, "dir")?)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn bnpirt_archive_free(handle: *mut BnpirtArchive) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

#[no_mangle]
pub unsafe extern "C" fn bnpirt_archive_shape(
    archive: *const BnpirtArchive,
    n_draws: *mut usize,
    n_columns: *mut usize,
) -> BnpirtStatus {
    guard(|| {
        let a = &archive.as_ref().ok_or_else(|| null("archive"))?.0;
        *out_ptr(n_draws, "n_draws")? = a.n_draws();
        *out_ptr(n_columns, "n_columns")? = a.n_columns();
        Ok(())
    })
}

/// Copies the draws of column `name` into `buf` (capacity `len`). `written`
/// receives the number of draws; the call fails if `len` is too small.
#[no_mangle]
pub unsafe extern "C" fn bnpirt_archive_column(
    archive: *const BnpirtArchive,
    name: *const c_char,
    buf: *mut f64,
    len: usize,
    written: *mut usize,
) -> BnpirtStatus {
    guard(|| {
        let a = &archive.as_ref().ok_or_else(|| null("archive"))?.0;
        let col = a.column(path_arg(name, "name")?)?;
        let written = out_ptr(written, "written")?;
        *written = col.len();
        if len < col.len() {
            return Err(Fail(
                BnpirtStatus::Dimension,
                format!("buffer holds {len} values, column has {}", col.len()),
            ));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        ptr::copy_nonoverlapping(col.as_ptr(), buf, col.len());
        Ok(())
    })
}

/// New archive mapped to the identified base parameterization.
#[no_mangle]
pub unsafe extern "C" fn bnpirt_archive_postprocess(
    archive: *const BnpirtArchive,
    out: *mut *mut BnpirtArchive,
) -> BnpirtStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let a = &archive.as_ref().ok_or_else(|| null("archive"))?.0;
        *out = Box::into_raw(Box::new(BnpirtArchive(postprocess_archive(a)?)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn bnpirt_waic(
    archive: *const BnpirtArchive,
    responses: *const BnpirtResponses,
    out: *mut BnpirtWaic,
) -> BnpirtStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let a = &archive.as_ref().ok_or_else(|| null("archive"))?.0;
        let y = &responses.as_ref().ok_or_else(|| null("responses"))?.0;
        let w = waic_from_archive(a, y)?;
        *out = BnpirtWaic {
            waic: w.waic,
            lppd: w.lppd,
            p_waic: w.p_waic,
        };
        Ok(())
    })
}

/// Multivariate ESS over item parameters and abilities on the base scale, and
/// its rate per second of total run time.
#[no_mangle]
pub unsafe extern "C" fn bnpirt_multivariate_ess(
    archive: *const BnpirtArchive,
    mess: *mut f64,
    mess_per_second: *mut f64,
) -> BnpirtStatus {
    guard(|| {
        let a = &archive.as_ref().ok_or_else(|| null("archive"))?.0;
        let r = efficiency_report(a, &ParameterSelection::Common)?;
        *out_ptr(mess, "mess")? = r.mess;
        if let Some(p) = mess_per_second.as_mut() {
            *p = r.mess_per_total_second;
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn bnpirt_univariate_ess(chain: *const f64, n: usize, out: *mut f64) -> BnpirtStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        if chain.is_null() {
            return Err(null("chain"));
        }
        *out = univariate_ess(slice::from_raw_parts(chain, n))?.ess;
        Ok(())
    })
}

/// Prior mean and variance of the number of clusters among `n` CRP draws.
#[no_mangle]
pub unsafe extern "C" fn bnpirt_crp_cluster_moments(
    alpha: f64,
    n: usize,
    expected: *mut f64,
    variance: *mut f64,
) -> BnpirtStatus {
    guard(|| {
        let (e, v) = crp_cluster_moments(alpha, n)?;
        *out_ptr(expected, "expected")? = e;
        *out_ptr(variance, "variance")? = v;
        Ok(())
    })
}
