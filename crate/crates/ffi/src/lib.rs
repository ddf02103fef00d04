//! C interface: every function is `extern "C"`, panics never cross the
//! boundary, and fallible calls return a status code with the message
//! retrievable through `vantage_last_error`. Models are opaque handles
//! created by `vantage_model_load` and released by `vantage_model_free`;
//! strings returned through out-pointers are released by
//! `vantage_string_free`.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use vantage::advisor::{advise, TaskPlan};
use vantage::clustering::ManifoldSet;
use vantage::error::{Error, ErrorKind};
use vantage::geometry::{default_lattice, ViewpointSet, DEFAULT_RADIUS_M};
use vantage::pipeline::{run_csv, write_artifacts, PipelineConfig};
use vantage::Affordance;

/// Outcome of a fallible call, aligned with the CLI exit codes.
#[allow(non_camel_case_types)]
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum vantage_status_t {
    /// The call succeeded.
    VANTAGE_STATUS_OK = 0,
    /// Invalid input: bad arguments, unreadable files, malformed data.
    VANTAGE_STATUS_VALIDATION_ERROR = 2,
    /// The computation was impossible on the given data.
    VANTAGE_STATUS_NUMERIC_ERROR = 3,
    /// An internal panic was caught; the handle states are unchanged.
    VANTAGE_STATUS_PANIC = 5,
}

use vantage_status_t::*;

/// A loaded set of per-affordance manifold models plus the viewpoint set
/// they were built on. Opaque; create with `vantage_model_load`, release
/// with `vantage_model_free`.
#[allow(non_camel_case_types)]
pub struct vantage_model_t {
    models: BTreeMap<Affordance, ManifoldSet>,
    viewpoints: ViewpointSet,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> =
        RefCell::new(CString::new("").expect("empty string has no NUL"));
}

fn set_last_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).expect("NULs stripped");
    });
}

fn status_of(e: &Error) -> vantage_status_t {
    match e.kind() {
        ErrorKind::Numeric => VANTAGE_STATUS_NUMERIC_ERROR,
        ErrorKind::Validation | ErrorKind::Io => VANTAGE_STATUS_VALIDATION_ERROR,
    }
}

/// Runs `body` with panics contained, translating both errors and panics
/// into status codes and recording their messages.
fn guarded(body: impl FnOnce() -> Result<(), Error>) -> vantage_status_t {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_last_error("");
            VANTAGE_STATUS_OK
        }
        Ok(Err(e)) => {
            set_last_error(&e.to_string());
            status_of(&e)
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("internal panic: {message}"));
            VANTAGE_STATUS_PANIC
        }
    }
}

/// # Safety
/// `ptr` must be null or point to a NUL-terminated string.
unsafe fn str_arg<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, Error> {
    if ptr.is_null() {
        return Err(Error::BadConfig(format!("{name} must not be null")));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|e| Error::BadConfig(format!("{name} is not valid UTF-8: {e}")))
}

fn out_arg<'a, T>(ptr: *mut T, name: &str) -> Result<&'a mut T, Error> {
    if ptr.is_null() {
        return Err(Error::BadConfig(format!("{name} must not be null")));
    }
    Ok(unsafe { &mut *ptr })
}

/// Version of the library as a static NUL-terminated string; never freed.
#[no_mangle]
pub extern "C" fn vantage_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last error on this thread, empty after a success. The
/// pointer stays valid until the next call into the library on the same
/// thread; do not free it.
#[no_mangle]
pub extern "C" fn vantage_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Runs the full pipeline on the trials CSV at `trials_path` and writes all
/// artifacts (values.csv, manifolds.json, rejected.json, report.json,
/// plotdata/) under `out_dir`. `config_json` is a pipeline configuration
/// document, or null for the defaults.
///
/// # Safety
/// String arguments must be null or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn vantage_run_pipeline(
    trials_path: *const c_char,
    config_json: *const c_char,
    out_dir: *const c_char,
) -> vantage_status_t {
    guarded(|| {
        let trials_path = PathBuf::from(str_arg(trials_path, "trials_path")?);
        let out_dir = PathBuf::from(str_arg(out_dir, "out_dir")?);
        let config = if config_json.is_null() {
            PipelineConfig::default()
        } else {
            let json = str_arg(config_json, "config_json")?;
            let config: PipelineConfig = serde_json::from_str(json)?;
            config.validate()?;
            config
        };
        let output = run_csv(&config, &trials_path)?;
        std::fs::create_dir_all(&out_dir)
            .map_err(|e| Error::io(out_dir.display().to_string(), e))?;
        write_artifacts(&out_dir, &config, &output)?;
        Ok(())
    })
}

fn load_models(path: &Path) -> Result<BTreeMap<Affordance, ManifoldSet>, Error> {
    let file_path = if path.is_dir() {
        path.join("manifolds.json")
    } else {
        path.to_path_buf()
    };
    let file = std::fs::File::open(&file_path)
        .map_err(|e| Error::io(file_path.display().to_string(), e))?;
    Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
}

/// Loads manifold models from a run's output directory (or a manifolds.json
/// path directly) into a fresh handle stored in `*model`. The built-in
/// lattice at the models' radius supplies member poses; load a custom set
/// by running the pipeline instead of this shortcut.
///
/// # Safety
/// `models_path` must be NUL-terminated; `model` must point to writable
/// pointer storage.
#[no_mangle]
pub unsafe extern "C" fn vantage_model_load(
    models_path: *const c_char,
    model: *mut *mut vantage_model_t,
) -> vantage_status_t {
    guarded(|| {
        let path = PathBuf::from(str_arg(models_path, "models_path")?);
        let slot = out_arg(model, "model")?;
        let models = load_models(&path)?;
        let radius = models
            .values()
            .next()
            .map_or(DEFAULT_RADIUS_M, |s| s.best().centroid.radius);
        let viewpoints = default_lattice(radius)?;
        *slot = Box::into_raw(Box::new(vantage_model_t { models, viewpoints }));
        Ok(())
    })
}

/// Releases a handle from `vantage_model_load`. Null is a no-op.
///
/// # Safety
/// `model` must be null or a pointer returned by `vantage_model_load` that
/// has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn vantage_model_free(model: *mut vantage_model_t) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Advises on the task plan in `plan_json` against the loaded models and
/// stores the advice document in `*advice_json` as a heap string; release
/// it with `vantage_string_free`.
///
/// # Safety
/// `model` must be a live handle; `plan_json` must be NUL-terminated;
/// `advice_json` must point to writable pointer storage.
#[no_mangle]
pub unsafe extern "C" fn vantage_model_advise(
    model: *const vantage_model_t,
    plan_json: *const c_char,
    advice_json: *mut *mut c_char,
) -> vantage_status_t {
    guarded(|| {
        if model.is_null() {
            return Err(Error::BadConfig("model must not be null".into()));
        }
        let model = &*model;
        let plan_json = str_arg(plan_json, "plan_json")?;
        let slot = out_arg(advice_json, "advice_json")?;
        let plan = TaskPlan::from_reader(plan_json.as_bytes())?;
        let advice = advise(&plan, &model.models, &model.viewpoints)?;
        let rendered = serde_json::to_string_pretty(&advice)?;
        let cstring = CString::new(rendered)
            .map_err(|e| Error::BadConfig(format!("advice contains NUL: {e}")))?;
        *slot = cstring.into_raw();
        Ok(())
    })
}

/// Releases a string produced by this library. Null is a no-op.
///
/// # Safety
/// `s` must be null or a string returned through an out-pointer of this
/// library that has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn vantage_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
