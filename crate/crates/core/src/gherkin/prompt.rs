use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::diagnostics::Diagnostic;
use crate::ingest::IssueRecord;
use crate::llm::{identifier_digest, sections, CompletionRequest, LlmClient, Task, SOURCE_MARKER};
use crate::navmap::{render_paths, NavigationPath};

pub const EMPTY_FILE_SUMMARY: &str = "empty file";
pub const DEFAULT_SUMMARY_TOKEN_BUDGET: usize = 120;
pub const DEFAULT_PROMPT_CHAR_CAP: usize = 24_000;

const TRUNCATED: &str = "[truncated]";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeSummary {
    pub file: String,
    pub summary: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptLimits {
    /// Words kept per summary.
    pub summary_token_budget: usize,
    /// Upper bound on the scenario prompt, in characters.
    pub prompt_char_cap: usize,
}

impl Default for PromptLimits {
    fn default() -> Self {
        Self { summary_token_budget: DEFAULT_SUMMARY_TOKEN_BUDGET, prompt_char_cap: DEFAULT_PROMPT_CHAR_CAP }
    }
}

fn clip_words(text: &str, budget: usize) -> String {
    let words: Vec<&str> = text.split_whitespace().collect();
    if words.len() <= budget {
        return words.join(" ");
    }
    let mut s = words[..budget].join(" ");
    s.push_str(" …");
    s
}

/// One summary per file, in input order. Empty files get a fixed summary
/// without a provider call; failed calls fall back to an identifier digest.
pub fn summarize_sources(
    files: &[(String, String)],
    client: &LlmClient,
    limits: PromptLimits,
) -> (Vec<CodeSummary>, Vec<Diagnostic>) {
    let budget = limits.summary_token_budget.max(1);
    let pending: Vec<usize> = (0..files.len()).filter(|&i| !files[i].1.trim().is_empty()).collect();
    let reqs: Vec<CompletionRequest> = pending
        .iter()
        .map(|&i| {
            let (path, text) = &files[i];
            CompletionRequest::new(
                Task::Summarize,
                format!(
                    "Summarise the UI-relevant behaviour of `{path}` in at most {budget} words. Name the widgets, \
                     keys and navigation it defines.\n{SOURCE_MARKER}\n{text}"
                ),
            )
        })
        .collect();
    let results = client.complete_many(&reqs);

    let mut out: Vec<CodeSummary> = files
        .iter()
        .map(|(path, _)| CodeSummary { file: path.clone(), summary: EMPTY_FILE_SUMMARY.to_string() })
        .collect();
    let mut diags = Vec::new();
    for (&i, result) in pending.iter().zip(results) {
        let (path, text) = &files[i];
        let summary = match result {
            Ok(r) if !r.text.trim().is_empty() => r.text,
            Ok(_) => {
                diags
                    .push(Diagnostic::warning("summary-fallback", "provider returned an empty summary").at(path, None));
                identifier_digest(text, budget)
            }
            Err(e) => {
                diags.push(Diagnostic::warning("summary-fallback", format!("summariser failed: {e}")).at(path, None));
                identifier_digest(text, budget)
            }
        };
        out[i].summary = clip_words(&summary, budget);
    }
    (out, diags)
}

fn issue_section(issue: &IssueRecord) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "Key: {}", issue.key);
    let _ = writeln!(s, "Summary: {}", issue.summary);
    if !issue.labels.is_empty() {
        let _ = writeln!(s, "Labels: {}", issue.labels.join(", "));
    }
    if !issue.description.trim().is_empty() {
        let _ = writeln!(s, "Description:\n{}", issue.description.trim_end());
    }
    if !issue.acceptance_criteria.is_empty() {
        s.push_str("Acceptance criteria:\n");
        for (i, c) in issue.acceptance_criteria.iter().enumerate() {
            let _ = writeln!(s, "{}. {}", i + 1, c.trim());
        }
    }
    s
}

fn code_section(summaries: &[CodeSummary]) -> String {
    let mut s = String::new();
    for c in summaries {
        let _ = writeln!(s, "--- {} ---\n{}", c.file, c.summary.trim_end());
    }
    s
}

fn truncate_to(text: &str, max_chars: usize) -> String {
    if text.chars().count() <= max_chars {
        return text.to_string();
    }
    let marker = TRUNCATED.chars().count() + 2;
    if max_chars < marker {
        return String::new();
    }
    let mut s: String = text.chars().take(max_chars - marker).collect();
    s.push('\n');
    s.push_str(TRUNCATED);
    s.push('\n');
    s
}

const INSTRUCTIONS: &str = "Write Gherkin acceptance scenarios for the issue below. Use the code summaries to name \
real screens and widgets and the navigation paths to describe how the user reaches them. Produce one Feature with \
every plausible Scenario; each Scenario needs Given, When and Then steps.\n";

/// Three delimited sections (issue, code summaries, navigation paths)
/// followed by an end marker. When the text exceeds the cap the summaries
/// are cut first, then the paths; the issue section is never cut.
pub fn build_scenario_prompt(
    issue: &IssueRecord,
    summaries: &[CodeSummary],
    paths: &[NavigationPath],
    limits: PromptLimits,
) -> String {
    let issue_text = issue_section(issue);
    let mut code = code_section(summaries);
    let mut nav = render_paths(paths);
    let assemble = |code: &str, nav: &str| {
        format!(
            "{INSTRUCTIONS}\n{}\n{issue_text}{}\n{code}{}\n{nav}{}\n",
            sections::ISSUE,
            sections::CODE,
            sections::PATHS,
            sections::END
        )
    };
    let cap = limits.prompt_char_cap;
    let fixed = assemble("", "").chars().count();
    if fixed + code.chars().count() + nav.chars().count() > cap {
        let room = cap.saturating_sub(fixed + nav.chars().count());
        code = truncate_to(&code, room);
        let excess = (fixed + code.chars().count() + nav.chars().count()).saturating_sub(cap);
        if excess > 0 {
            code.clear();
            let room = cap.saturating_sub(fixed);
            nav = truncate_to(&nav, room);
        }
    }
    assemble(&code, &nav)
}
