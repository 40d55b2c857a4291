use serde::{Deserialize, Serialize};

use crate::diagnostics::Diagnostic;
use crate::llm::{aggregate_usage, UsageTable};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Wall-clock seconds per stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageSeconds {
    pub page_objects: f64,
    pub gherkin: f64,
    pub ui_tests: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactCounts {
    pub page_objects: usize,
    pub features: usize,
    /// Feature candidates returned by the generator, valid or not.
    pub candidates: usize,
    pub scenarios_generated: usize,
    pub scenarios_retained: usize,
    pub tests_generated: usize,
    pub tests_retained: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    /// `page_object`, `feature` or `test`.
    pub kind: String,
    /// Relative to the issue's output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub schema_version: u32,
    pub issue_key: String,
    pub affected_pages: Vec<String>,
    pub stage_seconds: StageSeconds,
    pub usage: UsageTable,
    pub counts: ArtifactCounts,
    pub artifacts: Vec<Artifact>,
    pub diagnostics: Vec<Diagnostic>,
}

impl PipelineReport {
    pub fn empty(issue_key: &str) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            issue_key: issue_key.to_string(),
            affected_pages: Vec::new(),
            stage_seconds: StageSeconds::default(),
            usage: aggregate_usage(&[]),
            counts: ArtifactCounts::default(),
            artifacts: Vec::new(),
            diagnostics: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Artifact listing written instead of the artifacts in a dry run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub issue_key: String,
    pub artifacts: Vec<Artifact>,
}
