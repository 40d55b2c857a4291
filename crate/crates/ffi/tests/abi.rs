use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use acceptgen_ffi::*;

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/drivers_guide")
}

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take(p: *mut c_char) -> String {
    let s = CStr::from_ptr(p).to_str().unwrap().to_string();
    ag_string_free(p);
    s
}

fn last_error() -> String {
    let p = ag_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn load(out_dir: &Path) -> *mut AgConfig {
    let mut cfg = ptr::null_mut();
    let path = c(fixture().join("acceptgen.toml").to_str().unwrap());
    unsafe {
        assert_eq!(ag_config_load(path.as_ptr(), &mut cfg), AgStatus::Ok);
        let dir = c(out_dir.to_str().unwrap());
        assert_eq!(ag_config_set_output_dir(cfg, dir.as_ptr()), AgStatus::Ok);
    }
    cfg
}

#[test]
fn run_and_read_report() {
    let out = tempfile::tempdir().unwrap();
    let cfg = load(out.path());
    let issue = c(&std::fs::read_to_string(fixture().join("issue.json")).unwrap());
    let changes = c(&std::fs::read_to_string(fixture().join("changes.json")).unwrap());
    unsafe {
        assert_eq!(ag_config_validate(cfg), AgStatus::Ok);
        let mut report = ptr::null_mut();
        assert_eq!(ag_run(cfg, issue.as_ptr(), changes.as_ptr(), false, false, &mut report), AgStatus::Ok);
        let mut json = ptr::null_mut();
        assert_eq!(ag_report_json(report, &mut json), AgStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(&take(json)).unwrap();
        assert_eq!(v["issue_key"], "NWAP-165701");
        assert_eq!(v["counts"]["scenarios_retained"], 2);
        let mut dir = ptr::null_mut();
        assert_eq!(ag_report_out_dir(report, &mut dir), AgStatus::Ok);
        assert!(Path::new(&take(dir)).join("report.json").is_file());
        ag_report_free(report);

        let empty = c("");
        let mut none = ptr::null_mut();
        assert_eq!(ag_run(cfg, issue.as_ptr(), empty.as_ptr(), false, false, &mut none), AgStatus::NoWork);
        assert!(none.is_null());
        assert!(last_error().contains("no affected pages"));

        let target = c("DriversGuidePage");
        let mut text = ptr::null_mut();
        assert_eq!(ag_explain(cfg, target.as_ptr(), &mut text), AgStatus::Ok);
        assert!(take(text).starts_with("Path 1:\n  VehicleTabPage\n  -> ElectricMobilityPage (via charging)"));
        let nowhere = c("NowherePage");
        assert_eq!(ag_explain(cfg, nowhere.as_ptr(), &mut text), AgStatus::UnknownPage);
        ag_config_free(cfg);
    }
}

#[test]
fn argument_errors() {
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(ag_config_load(ptr::null(), &mut cfg), AgStatus::NullArgument);
        assert!(last_error().contains("path"));
        let missing = c("/nonexistent/acceptgen.toml");
        assert_eq!(ag_config_load(missing.as_ptr(), &mut cfg), AgStatus::Config);
        let bad = [0xffu8, 0];
        assert_eq!(ag_config_load(bad.as_ptr().cast(), &mut cfg), AgStatus::InvalidUtf8);
        let text = c("entry_page = \"HomePage\"\nbogus = 1\n");
        let base = c("/tmp");
        assert_eq!(ag_config_from_toml(text.as_ptr(), base.as_ptr(), &mut cfg), AgStatus::Config);
        ag_config_free(ptr::null_mut());
        ag_report_free(ptr::null_mut());
        ag_string_free(ptr::null_mut());
    }
    let version = unsafe { CStr::from_ptr(ag_version()) };
    assert_eq!(version.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn inline_config_resolves_against_base() {
    let base = c(fixture().to_str().unwrap());
    let text = c("source_root = \"app\"\ntest_root = \"uitests\"\nentry_page = \"VehicleTabPage\"\n[packages]\nmybmw = \"lib\"\n");
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(ag_config_from_toml(text.as_ptr(), base.as_ptr(), &mut cfg), AgStatus::Ok);
        assert_eq!(ag_config_validate(cfg), AgStatus::Ok);
        ag_config_free(cfg);
    }
}

#[test]
fn validators() {
    let sample = c(&std::fs::read_to_string(fixture().join("scenarios.feature")).unwrap());
    let broken = c("Feature: x\n\nScenario: y\n  Given a\n  When b\n");
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(ag_validate_feature(sample.as_ptr(), &mut out), AgStatus::Ok);
        let f: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
        assert_eq!(f["scenarios"].as_array().unwrap().len(), 2);
        assert_eq!(ag_validate_feature(broken.as_ptr(), &mut out), AgStatus::Violations);
        let v: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
        assert_eq!(v[0]["kind"], "missing-then");

        let po = c("class BrokenPage(previousPage: BasePage?) : Activity(previousPage) {\n}\n");
        assert_eq!(ag_lint_page_object(po.as_ptr(), &mut out), AgStatus::Violations);
        let v: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
        assert!(v.as_array().unwrap().len() >= 2);
    }
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "acceptgen.h"

int main(int argc, char **argv) {
    AgConfig *cfg = NULL;
    if (ag_config_load(argv[1], &cfg) != AG_STATUS_OK) {
        fprintf(stderr, "load: %s\n", ag_last_error());
        return 1;
    }
    char *paths = NULL;
    if (ag_explain(cfg, "DriversGuidePage", &paths) != AG_STATUS_OK) {
        fprintf(stderr, "explain: %s\n", ag_last_error());
        return 1;
    }
    fputs(paths, stdout);
    ag_string_free(paths);
    char *out = NULL;
    AgStatus s = ag_validate_feature("Feature: f\n", &out);
    printf("status %d %s\n", (int)s, out);
    ag_string_free(out);
    ag_config_free(cfg);
    return s == AG_STATUS_VIOLATIONS ? 0 : 1;
}
"#;

fn static_lib() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let profile_dir = exe.parent()?.parent()?;
    let lib = profile_dir.join("libacceptgen_ffi.a");
    lib.is_file().then_some(lib)
}

#[test]
fn c_program_links_against_header() {
    let Some(lib) = static_lib() else {
        panic!("static library not found next to the test binary");
    };
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("smoke.c");
    let bin = tmp.path().join("smoke");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(&cc)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .expect("C compiler available");
    assert!(status.success());
    let out = Command::new(&bin).arg(fixture().join("acceptgen.toml")).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout.starts_with("Path 1:\n  VehicleTabPage"), "{stdout}");
    assert!(stdout.contains("status 11"));
}
