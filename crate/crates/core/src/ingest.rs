//! Issue and change-set ingestion plus the UI-relevance filter.
//!
//! Issues and change sets are read from files rather than live trackers.
//! The issue document is JSON with `key`, `summary`, `labels`,
//! `acceptanceCriteria` and `description`; unknown fields are ignored
//! because tracker exports vary. A change set is either JSON
//! (`issueKey`, `commits`, `files`) or a plain newline-separated path list as
//! produced by `git diff --name-only`.

use std::collections::HashSet;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IngestError {
    #[error("malformed {document} at line {line}, column {column}: {message}")]
    Malformed { document: &'static str, line: usize, column: usize, message: String },
    #[error("issue document has no `key` field")]
    MissingKey,
    #[error("issue key `{0}` does not match PROJECT-123 form")]
    InvalidKey(String),
    #[error("path `{0}` escapes the repository root")]
    PathEscapesRoot(String),
    #[error("hunk references `{0}`, which is not among the changed files")]
    HunkWithoutFile(String),
    #[error("invalid filter rules: {0}")]
    InvalidRules(String),
}

fn issue_key_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^[A-Z][A-Z0-9]*-[0-9]+$").unwrap())
}

pub fn is_valid_issue_key(key: &str) -> bool {
    issue_key_re().is_match(key)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IssueRecord {
    pub key: String,
    #[serde(default)]
    pub summary: String,
    #[serde(default)]
    pub labels: Vec<String>,
    #[serde(default)]
    pub acceptance_criteria: Vec<String>,
    #[serde(default)]
    pub description: String,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct RawIssue {
    key: Option<String>,
    #[serde(default)]
    summary: Option<String>,
    #[serde(default)]
    labels: Option<Vec<String>>,
    #[serde(default)]
    acceptance_criteria: Option<Vec<String>>,
    #[serde(default)]
    description: Option<String>,
}

fn malformed(document: &'static str, e: &serde_json::Error) -> IngestError {
    IngestError::Malformed { document, line: e.line(), column: e.column(), message: e.to_string() }
}

/// Parses an issue document. Missing optional fields become empty values.
pub fn parse_issue(source: &str) -> Result<IssueRecord, IngestError> {
    let raw: RawIssue = serde_json::from_str(source).map_err(|e| malformed("issue document", &e))?;
    let key = raw.key.ok_or(IngestError::MissingKey)?;
    let key = key.trim().to_string();
    if !is_valid_issue_key(&key) {
        return Err(IngestError::InvalidKey(key));
    }
    Ok(IssueRecord {
        key,
        summary: raw.summary.unwrap_or_default(),
        labels: raw.labels.unwrap_or_default(),
        acceptance_criteria: raw.acceptance_criteria.unwrap_or_default(),
        description: raw.description.unwrap_or_default(),
    })
}

/// Inverse of [`parse_issue`].
pub fn render_issue(issue: &IssueRecord) -> String {
    let mut text = serde_json::to_string_pretty(issue).expect("issue serialises");
    text.push('\n');
    text
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hunk {
    pub file: String,
    #[serde(default)]
    pub added: Vec<String>,
    #[serde(default)]
    pub removed: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ChangeSet {
    pub issue_key: String,
    pub commits: Vec<String>,
    pub changed_files: Vec<String>,
    pub hunks: Vec<Hunk>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawCommit {
    Id(String),
    Detailed {
        id: String,
        #[serde(default)]
        files: Vec<String>,
    },
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct RawChangeSet {
    #[serde(default)]
    issue_key: String,
    #[serde(default)]
    commits: Vec<RawCommit>,
    #[serde(default)]
    files: Vec<String>,
    #[serde(default)]
    hunks: Vec<Hunk>,
}

/// Normalises a repository-relative path: forward slashes, no `.` or `..`
/// segments, no leading `./`. Absolute paths and paths climbing above the
/// root are rejected.
pub fn normalize_path(path: &str) -> Result<String, IngestError> {
    let unified = path.trim().replace('\\', "/");
    if unified.starts_with('/') || unified.as_bytes().get(1) == Some(&b':') {
        return Err(IngestError::PathEscapesRoot(path.to_string()));
    }
    let mut parts: Vec<&str> = Vec::new();
    for seg in unified.split('/') {
        match seg {
            "" | "." => {}
            ".." => {
                if parts.pop().is_none() {
                    return Err(IngestError::PathEscapesRoot(path.to_string()));
                }
            }
            s => parts.push(s),
        }
    }
    Ok(parts.join("/"))
}

fn push_unique(out: &mut Vec<String>, seen: &mut HashSet<String>, path: &str) -> Result<(), IngestError> {
    let norm = normalize_path(path)?;
    if !norm.is_empty() && seen.insert(norm.clone()) {
        out.push(norm);
    }
    Ok(())
}

/// Parses a JSON change-set document. Files listed at top level and under
/// detailed commit entries are merged in first-appearance order.
pub fn parse_changeset(source: &str) -> Result<ChangeSet, IngestError> {
    let raw: RawChangeSet = serde_json::from_str(source).map_err(|e| malformed("changeset document", &e))?;
    let mut seen = HashSet::new();
    let mut files = Vec::new();
    let mut commits = Vec::new();
    for f in &raw.files {
        push_unique(&mut files, &mut seen, f)?;
    }
    for c in raw.commits {
        match c {
            RawCommit::Id(id) => commits.push(id),
            RawCommit::Detailed { id, files: cf } => {
                commits.push(id);
                for f in &cf {
                    push_unique(&mut files, &mut seen, f)?;
                }
            }
        }
    }
    let mut hunks = Vec::with_capacity(raw.hunks.len());
    for mut h in raw.hunks {
        h.file = normalize_path(&h.file)?;
        if !seen.contains(&h.file) {
            return Err(IngestError::HunkWithoutFile(h.file));
        }
        hunks.push(h);
    }
    Ok(ChangeSet { issue_key: raw.issue_key, commits, changed_files: files, hunks })
}

/// Parses a newline-separated path list (`git diff --name-only` output).
/// Blank lines and `#` comments are skipped.
pub fn parse_path_list(issue_key: &str, source: &str) -> Result<ChangeSet, IngestError> {
    let mut seen = HashSet::new();
    let mut files = Vec::new();
    for line in source.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        push_unique(&mut files, &mut seen, line)?;
    }
    Ok(ChangeSet { issue_key: issue_key.to_string(), changed_files: files, ..ChangeSet::default() })
}

/// Rules deciding which changed files are UI-relevant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterRules {
    /// Substrings matched against `/` + the normalised path.
    pub exclude_path_fragments: Vec<String>,
    /// Suffixes excluded even when the file is Dart.
    pub exclude_extensions: Vec<String>,
    pub page_suffix: String,
}

impl Default for FilterRules {
    fn default() -> Self {
        Self {
            exclude_path_fragments: vec!["/test/".into(), "/utils/".into(), "/repository/".into()],
            // Configuration-file suffixes are a guess; projects should pin their own.
            exclude_extensions: vec![".yaml".into(), ".json".into(), ".arb".into(), ".lock".into()],
            page_suffix: "_page.dart".into(),
        }
    }
}

impl FilterRules {
    pub fn validate(&self) -> Result<(), IngestError> {
        if self.page_suffix.len() <= ".dart".len() || !self.page_suffix.ends_with(".dart") {
            return Err(IngestError::InvalidRules(format!(
                "page_suffix `{}` must be non-empty and end with .dart",
                self.page_suffix
            )));
        }
        Ok(())
    }

    /// True when `path` (already normalised) is a UI-relevant Dart file.
    pub fn accepts(&self, path: &str) -> bool {
        if !path.ends_with(".dart") {
            return false;
        }
        if self.exclude_extensions.iter().any(|ext| path.ends_with(ext.as_str())) {
            return false;
        }
        let anchored = format!("/{path}");
        !self.exclude_path_fragments.iter().any(|frag| anchored.contains(frag.as_str()))
    }

    pub fn is_page_file(&self, path: &str) -> bool {
        path.ends_with(&self.page_suffix)
    }
}

/// Keeps the UI-relevant changed files, in input order.
pub fn filter_ui_files(cs: &ChangeSet, rules: &FilterRules) -> Vec<String> {
    filter_paths(&cs.changed_files, rules)
}

pub fn filter_paths(paths: &[String], rules: &FilterRules) -> Vec<String> {
    paths.iter().filter(|p| rules.accepts(p)).cloned().collect()
}
