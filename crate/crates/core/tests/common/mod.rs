#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use acceptgen::pipeline::PipelineConfig;

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/drivers_guide")
}

pub fn fixture_doc(name: &str) -> String {
    fs::read_to_string(fixture_dir().join(name)).unwrap()
}

/// The drivers-guide fixture configuration, writing into `out`.
pub fn fixture_config(out: &Path) -> PipelineConfig {
    let mut cfg = PipelineConfig::load(&fixture_dir().join("acceptgen.toml")).unwrap();
    cfg.output_dir = out.to_path_buf();
    cfg
}

/// Relative path to contents for every file below `root`.
pub fn snapshot(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    if !root.exists() {
        return out;
    }
    for e in walkdir::WalkDir::new(root).sort_by_file_name() {
        let e = e.unwrap();
        if e.file_type().is_file() {
            let rel = e.path().strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
            out.insert(rel, fs::read(e.path()).unwrap());
        }
    }
    out
}

/// Report JSON with wall-clock timings removed.
pub fn report_without_timings(bytes: &[u8]) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_slice(bytes).unwrap();
    v.as_object_mut().unwrap().remove("stage_seconds");
    v
}

/// Snapshot with report timings stripped, for byte comparisons.
pub fn comparable(root: &Path) -> BTreeMap<String, Vec<u8>> {
    snapshot(root)
        .into_iter()
        .map(|(k, v)| {
            if k.ends_with("report.json") {
                let stripped = serde_json::to_vec_pretty(&report_without_timings(&v)).unwrap();
                (k, stripped)
            } else {
                (k, v)
            }
        })
        .collect()
}
