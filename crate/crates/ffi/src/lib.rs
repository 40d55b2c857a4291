//! C ABI over the acceptgen pipeline.
//!
//! Every function returns an [`AgStatus`]. Results come back through out
//! pointers. Strings handed out by the library are NUL-terminated UTF-8 and
//! must be released with [`ag_string_free`]; handles have their own `_free`
//! functions. After a failed call, [`ag_last_error`] describes the failure
//! on the calling thread.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use acceptgen::gherkin::validate_feature;
use acceptgen::pageobject::{lint_page_object, LintContext};
use acceptgen::pipeline::{self, PipelineConfig, PipelineError, PipelineReport, RunOptions};

/// Result of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Ingest = 4,
    UnknownPage = 5,
    NoWork = 6,
    Provider = 7,
    Template = 8,
    UiTest = 9,
    Io = 10,
    /// The input was read but breaks a rule; details are in the JSON output.
    Violations = 11,
    Panic = 12,
}

impl From<&PipelineError> for AgStatus {
    fn from(e: &PipelineError) -> Self {
        match e {
            PipelineError::Config(_) => AgStatus::Config,
            PipelineError::Ingest(_) => AgStatus::Ingest,
            PipelineError::UnknownPage(_) => AgStatus::UnknownPage,
            PipelineError::NoWork { .. } => AgStatus::NoWork,
            PipelineError::Provider { .. } => AgStatus::Provider,
            PipelineError::Template(_) => AgStatus::Template,
            PipelineError::UiTest(_) => AgStatus::UiTest,
            PipelineError::Io { .. } => AgStatus::Io,
        }
    }
}

/// Opaque pipeline configuration.
pub struct AgConfig {
    inner: PipelineConfig,
}

/// Opaque result of a pipeline run.
pub struct AgReport {
    report: PipelineReport,
    out_dir: String,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Fail(AgStatus);

type Outcome = Result<AgStatus, Fail>;

fn fail(status: AgStatus, msg: impl Into<String>) -> Fail {
    set_error(msg);
    Fail(status)
}

fn guard(f: impl FnOnce() -> Outcome) -> AgStatus {
    clear_error();
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err(Fail(s))) => s,
        Err(_) => {
            set_error("internal panic");
            AgStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(fail(AgStatus::NullArgument, format!("`{name}` is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(AgStatus::InvalidUtf8, format!("`{name}` is not UTF-8")))
}

fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Fail> {
    // SAFETY: callers pass either null or a valid, writable pointer.
    unsafe { p.as_mut() }.ok_or_else(|| fail(AgStatus::NullArgument, format!("`{name}` is null")))
}

fn to_c(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("NUL bytes replaced").into_raw()
}

fn pipeline_fail(e: &PipelineError) -> Fail {
    fail(AgStatus::from(e), e.to_string())
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn ag_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn ag_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ag_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a TOML configuration file. Relative paths inside it resolve
/// against the file's directory.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ag_config_load(path: *const c_char, out: *mut *mut AgConfig) -> AgStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let out = out_arg(out, "out")?;
        let inner = PipelineConfig::load(Path::new(path)).map_err(|e| fail(AgStatus::Config, e.to_string()))?;
        *out = Box::into_raw(Box::new(AgConfig { inner }));
        Ok(AgStatus::Ok)
    })
}

/// Parses configuration text, resolving relative paths against `base_dir`.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ag_config_from_toml(
    text: *const c_char,
    base_dir: *const c_char,
    out: *mut *mut AgConfig,
) -> AgStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        let base = Path::new(str_arg(base_dir, "base_dir")?);
        let out = out_arg(out, "out")?;
        let mut inner = PipelineConfig::from_toml(text, &base.join("<inline>"))
            .map_err(|e| fail(AgStatus::Config, e.to_string()))?;
        inner.resolve_paths(base);
        *out = Box::into_raw(Box::new(AgConfig { inner }));
        Ok(AgStatus::Ok)
    })
}

/// Redirects artifacts of later runs to `dir`.
///
/// # Safety
/// `cfg` must be a live handle; `dir` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ag_config_set_output_dir(cfg: *mut AgConfig, dir: *const c_char) -> AgStatus {
    guard(|| {
        let cfg = out_arg(cfg, "cfg")?;
        cfg.inner.output_dir = str_arg(dir, "dir")?.into();
        Ok(AgStatus::Ok)
    })
}

/// Checks the configuration without running anything.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ag_config_validate(cfg: *const AgConfig) -> AgStatus {
    guard(|| {
        let cfg = cfg.as_ref().ok_or_else(|| fail(AgStatus::NullArgument, "`cfg` is null"))?;
        cfg.inner.validate().map_err(|e| fail(AgStatus::Config, e.to_string()))?;
        Ok(AgStatus::Ok)
    })
}

/// # Safety
/// `cfg` must come from this library and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ag_config_free(cfg: *mut AgConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Runs the pipeline for one issue. `issue` is the issue JSON and
/// `changes` either change-set JSON or a newline-separated path list.
/// Failures that still write a report (no work, provider failure) return
/// their status with `out` left null.
///
/// # Safety
/// `cfg` must be a live handle, strings NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ag_run(
    cfg: *const AgConfig,
    issue: *const c_char,
    changes: *const c_char,
    dry_run: bool,
    install: bool,
    out: *mut *mut AgReport,
) -> AgStatus {
    guard(|| {
        let cfg = cfg.as_ref().ok_or_else(|| fail(AgStatus::NullArgument, "`cfg` is null"))?;
        let issue = str_arg(issue, "issue")?;
        let changes = str_arg(changes, "changes")?;
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let run = pipeline::run_pipeline(&cfg.inner, issue, changes, RunOptions { dry_run, install })
            .map_err(|e| pipeline_fail(&e))?;
        *out = Box::into_raw(Box::new(AgReport {
            report: run.report,
            out_dir: run.out_dir.to_string_lossy().into_owned(),
        }));
        Ok(AgStatus::Ok)
    })
}

/// The run report as JSON. Free the result with [`ag_string_free`].
///
/// # Safety
/// `report` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ag_report_json(report: *const AgReport, out: *mut *mut c_char) -> AgStatus {
    guard(|| {
        let report = report.as_ref().ok_or_else(|| fail(AgStatus::NullArgument, "`report` is null"))?;
        *out_arg(out, "out")? = to_c(report.report.to_json());
        Ok(AgStatus::Ok)
    })
}

/// Directory the run wrote to. Free the result with [`ag_string_free`].
///
/// # Safety
/// `report` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ag_report_out_dir(report: *const AgReport, out: *mut *mut c_char) -> AgStatus {
    guard(|| {
        let report = report.as_ref().ok_or_else(|| fail(AgStatus::NullArgument, "`report` is null"))?;
        *out_arg(out, "out")? = to_c(report.out_dir.clone());
        Ok(AgStatus::Ok)
    })
}

/// # Safety
/// `report` must come from this library and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ag_report_free(report: *mut AgReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Ranked navigation paths from the entry page to `target`, as text.
///
/// # Safety
/// `cfg` must be a live handle, `target` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ag_explain(cfg: *const AgConfig, target: *const c_char, out: *mut *mut c_char) -> AgStatus {
    guard(|| {
        let cfg = cfg.as_ref().ok_or_else(|| fail(AgStatus::NullArgument, "`cfg` is null"))?;
        let target = str_arg(target, "target")?;
        let out = out_arg(out, "out")?;
        let text = pipeline::explain(&cfg.inner, target).map_err(|e| pipeline_fail(&e))?;
        *out = to_c(text);
        Ok(AgStatus::Ok)
    })
}

/// Validates a Gherkin feature. `out` receives the parsed feature as JSON
/// on success, or the violation list with [`AgStatus::Violations`].
///
/// # Safety
/// `text` must be NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ag_validate_feature(text: *const c_char, out: *mut *mut c_char) -> AgStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        let out = out_arg(out, "out")?;
        let (json, status) = match validate_feature(text) {
            Ok(f) => (serde_json::to_string(&f), AgStatus::Ok),
            Err(v) => (serde_json::to_string(&v), AgStatus::Violations),
        };
        *out = to_c(json.expect("serialisable"));
        Ok(status)
    })
}

/// Lints page-object source against the default conventions. `out`
/// receives the violation list as JSON, empty when compliant.
///
/// # Safety
/// `text` must be NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ag_lint_page_object(text: *const c_char, out: *mut *mut c_char) -> AgStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        let out = out_arg(out, "out")?;
        let ctx = LintContext::from_config(&Default::default());
        let violations = lint_page_object(text, &ctx);
        *out = to_c(serde_json::to_string(&violations).expect("serialisable"));
        Ok(if violations.is_empty() { AgStatus::Ok } else { AgStatus::Violations })
    })
}
