use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::OnceLock;

use regex::Regex;

use super::{
    last_fenced_block, sections, CompletionRequest, CompletionResponse, LlmError, Provider, Task, FUNCTION_MARKER,
    SCENARIO_MARKER, SOURCE_MARKER,
};

const DART_WORDS: &[&str] = &[
    "abstract",
    "as",
    "async",
    "await",
    "bool",
    "break",
    "case",
    "catch",
    "class",
    "const",
    "continue",
    "default",
    "double",
    "dynamic",
    "else",
    "enum",
    "extends",
    "factory",
    "false",
    "final",
    "for",
    "get",
    "if",
    "implements",
    "import",
    "in",
    "int",
    "is",
    "late",
    "library",
    "mixin",
    "new",
    "null",
    "override",
    "part",
    "required",
    "return",
    "set",
    "static",
    "super",
    "switch",
    "this",
    "throw",
    "true",
    "try",
    "var",
    "void",
    "while",
    "with",
    "String",
];

/// First `limit` distinct identifiers of `text`, in order of appearance,
/// skipping Dart keywords and directive lines. Used by the stub summariser
/// and as the fallback summary when a provider fails.
pub fn identifier_digest(text: &str, limit: usize) -> String {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"[A-Za-z_][A-Za-z0-9_]*").unwrap());
    let mut seen = HashSet::new();
    let mut ids = Vec::new();
    'lines: for line in text.lines() {
        let t = line.trim_start();
        if ["import ", "export ", "part ", "library "].iter().any(|p| t.starts_with(p)) {
            continue;
        }
        for m in re.find_iter(line) {
            let w = m.as_str();
            if DART_WORDS.contains(&w) || !seen.insert(w) {
                continue;
            }
            ids.push(w);
            if ids.len() >= limit {
                break 'lines;
            }
        }
    }
    if ids.is_empty() {
        "No identifiers.".to_string()
    } else {
        format!("Identifiers: {}", ids.join(", "))
    }
}

/// Knobs for the deterministic stub.
#[derive(Debug, Clone, Default)]
pub struct StubBehavior {
    /// Verbatim responses per task, overriding the built-in behaviour.
    pub canned: BTreeMap<Task, String>,
    /// Scenario titles the reviewer drops.
    pub drop_scenarios: BTreeSet<String>,
    /// Test-function names the cross-check drops.
    pub drop_tests: BTreeSet<String>,
    /// Identifier limit for summaries; 0 means 32.
    pub digest_limit: usize,
}

/// Deterministic provider. The same request always yields the same bytes,
/// latency is reported as zero and token counts are estimated.
#[derive(Debug, Clone, Default)]
pub struct StubProvider {
    behavior: StubBehavior,
}

impl StubProvider {
    pub fn new(behavior: StubBehavior) -> Self {
        Self { behavior }
    }

    fn respond(&self, req: &CompletionRequest) -> String {
        if let Some(text) = self.behavior.canned.get(&req.task) {
            return text.clone();
        }
        match req.task {
            Task::Summarize => {
                let source = req.prompt.split_once(SOURCE_MARKER).map_or(req.prompt.as_str(), |(_, s)| s);
                let limit = if self.behavior.digest_limit == 0 { 32 } else { self.behavior.digest_limit };
                identifier_digest(source, limit)
            }
            Task::RefinePageObject => match last_fenced_block(&req.prompt) {
                Some(code) => format!("```kotlin\n{code}```\n"),
                None => req.prompt.clone(),
            },
            Task::GenerateScenarios => scenarios_from_prompt(&req.prompt),
            Task::ReviewScenarios => verdicts(&req.prompt, SCENARIO_MARKER, &self.behavior.drop_scenarios, |rest| {
                rest.split_once("]] ").map_or(rest, |(_, title)| title)
            }),
            Task::CrosscheckTests => verdicts(&req.prompt, FUNCTION_MARKER, &self.behavior.drop_tests, |rest| rest),
        }
    }
}

impl Provider for StubProvider {
    fn name(&self) -> &str {
        "stub"
    }

    fn complete(&self, _model: &str, req: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        req.validate()?;
        Ok(CompletionResponse::estimated(&req.prompt, self.respond(req), 0.0))
    }
}

fn verdicts(prompt: &str, marker: &str, drop: &BTreeSet<String>, subject: impl Fn(&str) -> &str) -> String {
    let mut out = String::new();
    for (i, line) in prompt.lines().filter_map(|l| l.trim().strip_prefix(marker)).enumerate() {
        let name = subject(line).trim();
        let verdict = if drop.contains(name) { "drop" } else { "keep" };
        out.push_str(&format!("{}: {verdict}\n", i + 1));
    }
    out
}

// Builds one scenario per acceptance criterion from the structured prompt,
// walking the first navigation path listed.
fn scenarios_from_prompt(prompt: &str) -> String {
    let issue = section(prompt, sections::ISSUE);
    let paths = section(prompt, sections::PATHS);
    let summary = issue
        .lines()
        .find_map(|l| l.strip_prefix("Summary:"))
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .unwrap_or("Generated acceptance scenarios");
    let mut criteria = Vec::new();
    let mut in_criteria = false;
    for line in issue.lines() {
        if line.starts_with("Acceptance criteria:") {
            in_criteria = true;
            continue;
        }
        if in_criteria {
            match line.trim().split_once(". ") {
                Some((n, text)) if n.chars().all(|c| c.is_ascii_digit()) => criteria.push(text.trim().to_string()),
                _ => break,
            }
        }
    }
    let mut start = None;
    let mut actions = Vec::new();
    let mut terminal = None;
    for line in paths.lines().skip_while(|l| !l.starts_with("Path 1:")).skip(1) {
        let t = line.trim();
        if t.starts_with("Path ") || t.is_empty() {
            break;
        }
        if let Some(rest) = t.strip_prefix("-> ") {
            if let Some((page, via)) = rest.split_once(" (via ") {
                terminal = Some(page.to_string());
                actions.push(via.trim_end_matches(')').to_string());
            }
        } else if start.is_none() {
            start = Some(t.to_string());
        }
    }
    let start = start.unwrap_or_else(|| "start".to_string());
    let when = if actions.is_empty() {
        format!("the user stays on the {start} screen")
    } else {
        format!("the user navigates via {}", actions.join(", then "))
    };
    if criteria.is_empty() {
        criteria.push(format!("the {} screen is displayed", terminal.as_deref().unwrap_or(start.as_str())));
    }
    let mut out = format!("Feature: {summary}\n");
    for (i, c) in criteria.iter().enumerate() {
        let title: String = c.chars().take(60).collect();
        out.push_str(&format!(
            "\nScenario: {} {}\n  Given the user is on the {start} screen\n  When {when}\n  Then {c}\n",
            i + 1,
            title.trim_end()
        ));
    }
    out
}

fn section<'a>(prompt: &'a str, header: &str) -> &'a str {
    let Some((_, rest)) = prompt.split_once(header) else { return "" };
    match rest.find("\n=== ") {
        Some(end) => &rest[..end],
        None => rest,
    }
}
