//! C ABI over the vidmas engine.
//!
//! Every fallible call returns a [`VidmasStatus`]. On failure the message is
//! available from [`vidmas_last_error_message`] on the same thread. Strings
//! handed out by the library are JSON documents owned by the caller and must
//! be released with [`vidmas_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use serde::Serialize;
use vidmas::config::Config;
use vidmas::engine::Engine;
use vidmas::personalization::Device;
use vidmas::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VidmasStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Panic = 3,
    InvalidArgument = 10,
    InvalidConfig = 11,
    InvalidRating = 12,
    InvalidDescriptor = 13,
    EmptyFrames = 14,
    OutOfRangePerformance = 15,
    UnknownUser = 20,
    UnknownDomain = 21,
    UnknownDocument = 22,
    UnknownConcept = 23,
    UnknownCommunity = 24,
    UnknownStrategy = 25,
    DuplicateUser = 30,
    DuplicateDocument = 31,
    ModelMissing = 40,
    EmptyTrainingSet = 41,
    InsufficientClasses = 42,
    EmptyEvaluationSet = 43,
    IoFailure = 50,
    CorruptStore = 51,
    FetchFailed = 52,
    RuntimeFailure = 60,
}

impl From<&Error> for VidmasStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidArgument(_) => VidmasStatus::InvalidArgument,
            Error::InvalidConfig(_) => VidmasStatus::InvalidConfig,
            Error::InvalidRating(_) => VidmasStatus::InvalidRating,
            Error::InvalidDescriptor(_) => VidmasStatus::InvalidDescriptor,
            Error::EmptyFrames => VidmasStatus::EmptyFrames,
            Error::OutOfRangePerformance { .. } => VidmasStatus::OutOfRangePerformance,
            Error::UnknownUser(_) => VidmasStatus::UnknownUser,
            Error::UnknownDomain(_) => VidmasStatus::UnknownDomain,
            Error::UnknownDocument(_) => VidmasStatus::UnknownDocument,
            Error::UnknownConcept(_) => VidmasStatus::UnknownConcept,
            Error::UnknownCommunity(_) => VidmasStatus::UnknownCommunity,
            Error::UnknownStrategy(_) => VidmasStatus::UnknownStrategy,
            Error::DuplicateUser(_) => VidmasStatus::DuplicateUser,
            Error::DuplicateDocument(_) => VidmasStatus::DuplicateDocument,
            Error::ModelMissing => VidmasStatus::ModelMissing,
            Error::EmptyTrainingSet => VidmasStatus::EmptyTrainingSet,
            Error::InsufficientClasses(_) => VidmasStatus::InsufficientClasses,
            Error::EmptyEvaluationSet => VidmasStatus::EmptyEvaluationSet,
            Error::IoFailure { .. } => VidmasStatus::IoFailure,
            Error::CorruptStore(_) => VidmasStatus::CorruptStore,
            Error::FetchFailed { .. } => VidmasStatus::FetchFailed,
            Error::DuplicateAgent(_) | Error::UnknownRecipient(_) | Error::StepBudgetExceeded { .. } => {
                VidmasStatus::RuntimeFailure
            }
        }
    }
}

/// Opaque engine handle.
pub struct VidmasEngine {
    inner: Engine,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(VidmasStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(VidmasStatus::from(&e), format!("{}: {e}", e.code()))
    }
}

fn set_last_error(message: Option<String>) {
    let c = message.map(|m| CString::new(m.replace('\0', " ")).expect("nul bytes removed"));
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

/// Runs `f`, records its failure message and converts panics.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> VidmasStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error(None);
            VidmasStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_last_error(Some(message));
            status
        }
        Err(_) => {
            set_last_error(Some("panic inside vidmas".into()));
            VidmasStatus::Panic
        }
    }
}

unsafe fn engine_mut<'a>(engine: *mut VidmasEngine) -> Result<&'a mut Engine, Failure> {
    engine
        .as_mut()
        .map(|e| &mut e.inner)
        .ok_or_else(|| Failure(VidmasStatus::NullPointer, "engine handle is null".into()))
}

unsafe fn str_arg<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return Err(Failure(VidmasStatus::NullPointer, format!("`{name}` is null")));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| Failure(VidmasStatus::InvalidUtf8, format!("`{name}` is not valid UTF-8")))
}

unsafe fn opt_path_arg(ptr: *const c_char, name: &str) -> Result<Option<PathBuf>, Failure> {
    if ptr.is_null() {
        Ok(None)
    } else {
        str_arg(ptr, name).map(|s| Some(PathBuf::from(s)))
    }
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(VidmasStatus::NullPointer, "output pointer is null".into()));
    }
    out.write(value);
    Ok(())
}

unsafe fn write_json<T: Serialize>(out: *mut *mut c_char, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string(value).map_err(|e| Failure(VidmasStatus::RuntimeFailure, e.to_string()))?;
    let c = CString::new(text).map_err(|e| Failure(VidmasStatus::RuntimeFailure, e.to_string()))?;
    write_out(out, c.into_raw())
}

/// Opens an engine. `config_path` (TOML or JSON) and `data_dir` may be null;
/// a null `data_dir` keeps the configured directory, and with none the
/// engine runs in memory. On success `*out` receives a handle to release with
/// [`vidmas_engine_free`].
///
/// # Safety
/// String arguments must be null or valid NUL-terminated strings; `out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn vidmas_engine_open(
    config_path: *const c_char,
    data_dir: *const c_char,
    out: *mut *mut VidmasEngine,
) -> VidmasStatus {
    guard(|| {
        let mut config = match opt_path_arg(config_path, "config_path")? {
            Some(path) => Config::from_file(&path)?,
            None => Config::default(),
        };
        if let Some(dir) = opt_path_arg(data_dir, "data_dir")? {
            config.data_dir = Some(dir);
        }
        let engine = Engine::open(config)?;
        write_out(out, Box::into_raw(Box::new(VidmasEngine { inner: engine })))
    })
}

/// Releases an engine handle. Null is ignored.
///
/// # Safety
/// `engine` must come from [`vidmas_engine_open`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn vidmas_engine_free(engine: *mut VidmasEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Ingests a descriptor file or a directory of them. `*out_json` receives
/// the ingest report.
///
/// # Safety
/// `engine` must be a live handle, `path` a valid string, `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn vidmas_ingest(
    engine: *mut VidmasEngine,
    path: *const c_char,
    out_json: *mut *mut c_char,
) -> VidmasStatus {
    guard(|| {
        let engine = engine_mut(engine)?;
        let path = PathBuf::from(str_arg(path, "path")?);
        let report = engine.ingest_paths(&[path])?;
        write_json(out_json, &report)
    })
}

/// Trains the classifier from a JSONL labels file and reclassifies the
/// store. `*out_json` receives the training report.
///
/// # Safety
/// `engine` must be a live handle, `labels_path` a valid string, `out_json`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn vidmas_train(
    engine: *mut VidmasEngine,
    labels_path: *const c_char,
    out_json: *mut *mut c_char,
) -> VidmasStatus {
    guard(|| {
        let engine = engine_mut(engine)?;
        let labels = vidmas::classification::load_labels(Path::new(str_arg(labels_path, "labels_path")?))?;
        let report = engine.train(&labels)?;
        write_json(out_json, &report)
    })
}

/// Creates a user avatar seeded from its geographic community.
///
/// # Safety
/// `engine` must be a live handle and the strings valid.
#[no_mangle]
pub unsafe extern "C" fn vidmas_create_user(
    engine: *mut VidmasEngine,
    user: *const c_char,
    country: *const c_char,
    language: *const c_char,
) -> VidmasStatus {
    guard(|| {
        let engine = engine_mut(engine)?;
        engine.create_user(
            str_arg(user, "user")?,
            str_arg(country, "country")?,
            str_arg(language, "language")?,
            Device::Desktop,
        )?;
        Ok(())
    })
}

/// Runs a query. `*out_json` receives the strategy, ranked results and the
/// per-stage performance report.
///
/// # Safety
/// `engine` must be a live handle, the strings valid, `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn vidmas_query(
    engine: *mut VidmasEngine,
    user: *const c_char,
    domain: *const c_char,
    text: *const c_char,
    k: usize,
    out_json: *mut *mut c_char,
) -> VidmasStatus {
    guard(|| {
        let engine = engine_mut(engine)?;
        let resp = engine.query(
            str_arg(user, "user")?,
            str_arg(domain, "domain")?,
            str_arg(text, "text")?,
            k,
        )?;
        write_json(out_json, &resp)
    })
}

/// Records a 0..=5 rating. `*out_tau` receives the document's new pheromone.
///
/// # Safety
/// `engine` must be a live handle, the strings valid, `out_tau` writable.
#[no_mangle]
pub unsafe extern "C" fn vidmas_feedback(
    engine: *mut VidmasEngine,
    user: *const c_char,
    doc: *const c_char,
    rating: i64,
    out_tau: *mut f64,
) -> VidmasStatus {
    guard(|| {
        let engine = engine_mut(engine)?;
        let tau = engine.feedback(str_arg(user, "user")?, str_arg(doc, "doc")?, rating)?;
        write_out(out_tau, tau)
    })
}

/// Up to `k` query suggestions as a JSON array.
///
/// # Safety
/// `engine` must be a live handle, the strings valid, `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn vidmas_suggest(
    engine: *mut VidmasEngine,
    user: *const c_char,
    domain: *const c_char,
    k: usize,
    out_json: *mut *mut c_char,
) -> VidmasStatus {
    guard(|| {
        let engine = engine_mut(engine)?;
        let suggestions = engine.suggest(str_arg(user, "user")?, str_arg(domain, "domain")?, k)?;
        write_json(out_json, &suggestions)
    })
}

/// Tier counts and mean pheromone as JSON.
///
/// # Safety
/// `engine` must be a live handle and `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn vidmas_stats(engine: *mut VidmasEngine, out_json: *mut *mut c_char) -> VidmasStatus {
    guard(|| {
        let engine = engine_mut(engine)?;
        write_json(out_json, &engine.stats())
    })
}

/// One organizer cycle. `*out_migrations` receives the number of documents
/// that changed tier.
///
/// # Safety
/// `engine` must be a live handle and `out_migrations` writable.
#[no_mangle]
pub unsafe extern "C" fn vidmas_reorganize(
    engine: *mut VidmasEngine,
    evaporate: bool,
    out_migrations: *mut usize,
) -> VidmasStatus {
    guard(|| {
        let engine = engine_mut(engine)?;
        let moved = engine.reorganize(evaporate)?.len();
        write_out(out_migrations, moved)
    })
}

/// Persists the store. A no-op for in-memory engines.
///
/// # Safety
/// `engine` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn vidmas_save(engine: *mut VidmasEngine) -> VidmasStatus {
    guard(|| {
        engine_mut(engine)?.save()?;
        Ok(())
    })
}

/// Product of `len` stage performances in `[0, 1]`.
///
/// # Safety
/// `values` must point to `len` readable doubles (or be null when `len` is
/// 0) and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vidmas_global_performance(values: *const f64, len: usize, out: *mut f64) -> VidmasStatus {
    guard(|| {
        let slice = if len == 0 {
            &[][..]
        } else if values.is_null() {
            return Err(Failure(VidmasStatus::NullPointer, "`values` is null".into()));
        } else {
            std::slice::from_raw_parts(values, len)
        };
        let stages: Vec<(String, f64)> = slice
            .iter()
            .enumerate()
            .map(|(i, v)| (format!("stage{i}"), *v))
            .collect();
        let report = vidmas::query::global_performance(&stages)?;
        write_out(out, report.p_global)
    })
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn vidmas_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn vidmas_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}
