//! Completion-provider abstraction.
//!
//! Every generative step talks to a [`Provider`] through an [`LlmClient`],
//! which routes each request's [`Role`] to a configured model name, caps the
//! number of in-flight calls, records token usage per pipeline [`Stage`] and
//! appends to the audit log. Providers:
//!
//! * [`StubProvider`]: deterministic, referentially transparent, no I/O.
//! * [`HttpProvider`]: JSON over HTTP, either the `/api/generate` shape of
//!   common local model servers or a chat-completions endpoint.
//! * [`RecordingProvider`] / [`ReplayProvider`]: capture live responses to a
//!   fixture file and serve them back byte-for-byte.

mod audit;
mod client;
mod http;
mod record;
mod stub;
mod usage;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use audit::{AuditLog, AuditRecord, Decision};
pub use client::LlmClient;
pub use http::{HttpApi, HttpProvider};
pub use record::{Fixture, FixtureEntry, RecordingProvider, ReplayProvider};
pub use stub::{identifier_digest, StubBehavior, StubProvider};
pub use usage::{aggregate_usage, UsageRecord, UsageRow, UsageTable};

/// Line that separates instructions from source text in summarisation
/// prompts. The stub digests only what follows it.
pub const SOURCE_MARKER: &str = "<<<SOURCE>>>";
/// Prefix of each scenario line in review prompts: `[[scenario 2]] title`.
pub const SCENARIO_MARKER: &str = "[[scenario ";
/// Prefix of each function line in cross-check prompts: `[[function]] name`.
pub const FUNCTION_MARKER: &str = "[[function]] ";

pub const DEFAULT_TEMPERATURE: f64 = 0.2;
pub const DEFAULT_MAX_OUTPUT_TOKENS: u32 = 2048;
pub const DEFAULT_TIMEOUT_SECS: u64 = 120;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Reasoner,
    Coder,
    Summarizer,
    Reviewer,
}

impl Role {
    pub const ALL: [Role; 4] = [Role::Reasoner, Role::Coder, Role::Summarizer, Role::Reviewer];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Reasoner => "reasoner",
            Role::Coder => "coder",
            Role::Summarizer => "summarizer",
            Role::Reviewer => "reviewer",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Pipeline stages that consume completions, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    PageObjects,
    Gherkin,
    UiTests,
}

impl Stage {
    pub const ALL: [Stage; 3] = [Stage::PageObjects, Stage::Gherkin, Stage::UiTests];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::PageObjects => "page_objects",
            Stage::Gherkin => "gherkin",
            Stage::UiTests => "ui_tests",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    RefinePageObject,
    Summarize,
    GenerateScenarios,
    ReviewScenarios,
    CrosscheckTests,
}

impl Task {
    pub fn stage(self) -> Stage {
        match self {
            Task::RefinePageObject => Stage::PageObjects,
            Task::Summarize | Task::GenerateScenarios | Task::ReviewScenarios => Stage::Gherkin,
            Task::CrosscheckTests => Stage::UiTests,
        }
    }

    pub fn default_role(self) -> Role {
        match self {
            Task::RefinePageObject | Task::CrosscheckTests => Role::Coder,
            Task::Summarize => Role::Summarizer,
            Task::GenerateScenarios => Role::Reasoner,
            Task::ReviewScenarios => Role::Reviewer,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Task::RefinePageObject => "refine-page-object",
            Task::Summarize => "summarize",
            Task::GenerateScenarios => "generate-scenarios",
            Task::ReviewScenarios => "review-scenarios",
            Task::CrosscheckTests => "crosscheck-tests",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub task: Task,
    pub role: Role,
    pub prompt: String,
    pub max_output_tokens: u32,
    pub temperature: f64,
}

impl CompletionRequest {
    pub fn new(task: Task, prompt: impl Into<String>) -> Self {
        Self {
            task,
            role: task.default_role(),
            prompt: prompt.into(),
            max_output_tokens: DEFAULT_MAX_OUTPUT_TOKENS,
            temperature: DEFAULT_TEMPERATURE,
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if self.prompt.trim().is_empty() {
            return Err(LlmError::InvalidRequest("prompt is empty".into()));
        }
        if self.max_output_tokens == 0 {
            return Err(LlmError::InvalidRequest("max_output_tokens must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionResponse {
    pub text: String,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub latency_s: f64,
    /// Token counts come from [`estimate_tokens`] rather than the backend.
    pub estimated: bool,
}

impl CompletionResponse {
    /// Builds a response with estimated token counts.
    pub fn estimated(prompt: &str, text: String, latency_s: f64) -> Self {
        Self {
            input_tokens: estimate_tokens(prompt),
            output_tokens: estimate_tokens(&text),
            text,
            latency_s,
            estimated: true,
        }
    }
}

/// Whitespace-separated token count, used whenever a backend does not
/// report usage.
pub fn estimate_tokens(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LlmError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("request timed out after {0} s")]
    Timeout(u64),
    #[error("backend returned status {status}: {body}")]
    Backend { status: u16, body: String },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("no model configured for role `{0}`")]
    UnmappedRole(Role),
    #[error("no recorded response for {task} request {key}")]
    ReplayMiss { task: &'static str, key: String },
    #[error("fixture error: {0}")]
    Fixture(String),
}

pub trait Provider: Send + Sync {
    fn name(&self) -> &str;
    fn complete(&self, model: &str, req: &CompletionRequest) -> Result<CompletionResponse, LlmError>;
}

/// Role to model-name routing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelMap(pub BTreeMap<Role, String>);

impl Default for ModelMap {
    fn default() -> Self {
        Self(
            [
                (Role::Reasoner, "deepseek-r1"),
                (Role::Coder, "deepseek-coder-v2"),
                (Role::Summarizer, "gemma3:1b"),
                (Role::Reviewer, "deepseek-r1"),
            ]
            .into_iter()
            .map(|(r, m)| (r, m.to_string()))
            .collect(),
        )
    }
}

impl ModelMap {
    pub fn model_for(&self, role: Role) -> Result<&str, LlmError> {
        self.0.get(&role).map(String::as_str).ok_or(LlmError::UnmappedRole(role))
    }
}

pub(crate) fn sha256_hex(text: &str) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Returns the body of the last ```-fenced block in `text`.
pub fn last_fenced_block(text: &str) -> Option<&str> {
    fenced_blocks(text).pop()
}

/// Returns the body of the first ```-fenced block in `text`.
pub fn first_fenced_block(text: &str) -> Option<&str> {
    fenced_blocks(text).into_iter().next()
}

/// Bodies of all ```-fenced blocks in `text`, in order.
pub fn fenced_blocks(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = text;
    let mut offset = 0;
    while let Some(open) = rest.find("```") {
        let after_fence = open + 3;
        let Some(nl) = rest[after_fence..].find('\n') else { break };
        let body_start = after_fence + nl + 1;
        let Some(close) = find_closing_fence(&rest[body_start..]) else { break };
        out.push(&text[offset + body_start..offset + body_start + close]);
        let consumed = body_start + close + 3;
        offset += consumed;
        rest = &rest[consumed..];
    }
    out
}

// A closing fence starts a line.
fn find_closing_fence(s: &str) -> Option<usize> {
    if s.starts_with("```") {
        return Some(0);
    }
    s.match_indices("\n```").next().map(|(i, _)| i + 1)
}


/// Section delimiters of the scenario-generation prompt.
pub mod sections {
    pub const ISSUE: &str = "=== ISSUE ===";
    pub const CODE: &str = "=== CODE SUMMARIES ===";
    pub const PATHS: &str = "=== NAVIGATION PATHS ===";
    pub const END: &str = "=== END ===";
}
