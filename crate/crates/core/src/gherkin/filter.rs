use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::{validate_feature, GherkinFeature, Scenario};
use crate::diagnostics::Diagnostic;
use crate::ingest::IssueRecord;
use crate::llm::{
    fenced_blocks, AuditLog, CompletionRequest, Decision, LlmClient, LlmError, Stage, Task, SCENARIO_MARKER,
};

pub const DEFAULT_DEDUP_THRESHOLD: f64 = 0.85;

/// Asks the provider for scenarios and splits the answer into one candidate
/// per `Feature:` block. Text without any feature header is passed through
/// as a single candidate so that validation can reject it.
pub fn generate_scenarios(prompt: &str, client: &LlmClient) -> Result<Vec<String>, LlmError> {
    let resp = client.complete(&CompletionRequest::new(Task::GenerateScenarios, prompt))?;
    let fenced = fenced_blocks(&resp.text).concat();
    let text = if fenced.trim().is_empty() { resp.text } else { fenced };
    Ok(split_features(&text))
}

fn split_features(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut tags = String::new();
    for line in text.lines() {
        let t = line.trim_start();
        if t.starts_with('@') {
            tags.push_str(line);
            tags.push('\n');
            continue;
        }
        if t.starts_with("Feature:") && current.lines().any(|l| l.trim_start().starts_with("Feature:")) {
            out.push(std::mem::take(&mut current));
        }
        current.push_str(&tags);
        tags.clear();
        current.push_str(line);
        current.push('\n');
    }
    current.push_str(&tags);
    if !current.trim().is_empty() {
        out.push(current);
    }
    out
}

/// Validates raw candidates. Invalid ones are logged as rejected and
/// returned as diagnostics; valid ones are returned parsed.
pub fn validate_candidates(candidates: &[String], audit: &AuditLog) -> (Vec<GherkinFeature>, Vec<Diagnostic>) {
    let mut kept = Vec::new();
    let mut diags = Vec::new();
    for (i, c) in candidates.iter().enumerate() {
        match validate_feature(c) {
            Ok(f) => kept.push(f),
            Err(vs) => {
                let reason = vs.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ");
                audit.decision(Decision {
                    stage: Stage::Gherkin,
                    subject_kind: "candidate".into(),
                    subject: format!("candidate {}", i + 1),
                    action: "reject".into(),
                    reason: format!("invalid Gherkin: {reason}"),
                    score: None,
                });
                diags.push(Diagnostic::warning("invalid-feature", format!("candidate {}: {reason}", i + 1)));
            }
        }
    }
    (kept, diags)
}

fn tokens(s: &Scenario) -> BTreeSet<String> {
    std::iter::once(s.title.as_str())
        .chain(s.steps.iter().map(|st| st.text.as_str()))
        .flat_map(|t| t.split(|c: char| !c.is_alphanumeric()))
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}

/// Token-set Jaccard similarity over a scenario's title and step texts.
pub fn scenario_similarity(a: &Scenario, b: &Scenario) -> f64 {
    jaccard(&tokens(a), &tokens(b))
}

/// Drops scenarios at least `threshold`-similar to an earlier kept one.
/// Features left without scenarios are removed.
pub fn dedup_scenarios(features: &[GherkinFeature], threshold: f64, audit: &AuditLog) -> Vec<GherkinFeature> {
    let threshold = threshold.clamp(f64::MIN_POSITIVE, 1.0);
    let mut kept: Vec<(BTreeSet<String>, String)> = Vec::new();
    let mut out = Vec::new();
    for f in features {
        let mut g = f.clone();
        g.scenarios.clear();
        for sc in &f.scenarios {
            let t = tokens(sc);
            let best = kept.iter().map(|(k, title)| (jaccard(&t, k), title)).fold(
                None::<(f64, &String)>,
                |acc, (s, title)| match acc {
                    Some((b, _)) if b >= s => acc,
                    _ => Some((s, title)),
                },
            );
            match best {
                Some((score, title)) if score >= threshold => audit.decision(Decision {
                    stage: Stage::Gherkin,
                    subject_kind: "scenario".into(),
                    subject: sc.title.clone(),
                    action: "drop".into(),
                    reason: format!("duplicate of `{title}`"),
                    score: Some(score),
                }),
                _ => {
                    kept.push((t, sc.title.clone()));
                    g.scenarios.push(sc.clone());
                }
            }
        }
        if !g.scenarios.is_empty() {
            out.push(g);
        }
    }
    out
}

pub fn review_prompt(features: &[GherkinFeature], issue: &IssueRecord) -> String {
    let mut p = format!(
        "Review the scenarios for issue {} ({}). Drop scenarios that are infeasible, redundant or do not match \
         the acceptance criteria. Answer one line per scenario as `<number>: keep` or `<number>: drop`.\n",
        issue.key, issue.summary
    );
    if !issue.acceptance_criteria.is_empty() {
        p.push_str("Acceptance criteria:\n");
        for (i, c) in issue.acceptance_criteria.iter().enumerate() {
            let _ = writeln!(p, "{}. {c}", i + 1);
        }
    }
    let mut n = 0;
    for f in features {
        for sc in &f.scenarios {
            n += 1;
            let _ = writeln!(p, "\n{SCENARIO_MARKER}{n}]] {}", sc.title);
            for st in &sc.steps {
                let _ = writeln!(p, "  {} {}", st.keyword.as_str(), st.text);
            }
        }
    }
    p
}

#[derive(Debug, Clone)]
pub struct ReviewOutcome {
    pub features: Vec<GherkinFeature>,
    pub diagnostics: Vec<Diagnostic>,
}

fn parse_verdicts(text: &str) -> BTreeMap<usize, bool> {
    let mut out = BTreeMap::new();
    for line in text.lines() {
        let t = line.trim().trim_start_matches(['-', '*', ' ']);
        let Some((n, v)) = t.split_once(':') else { continue };
        let Ok(n) = n.trim().trim_start_matches('#').parse::<usize>() else { continue };
        let v = v.trim().to_ascii_lowercase();
        if v.starts_with("keep") {
            out.insert(n, true);
        } else if v.starts_with("drop") {
            out.insert(n, false);
        }
    }
    out
}

/// Provider review with keep/drop verdicts. Missing or unreadable verdicts
/// keep the scenario; provider failure keeps everything.
pub fn review_scenarios(features: &[GherkinFeature], issue: &IssueRecord, client: &LlmClient) -> ReviewOutcome {
    let total: usize = features.iter().map(|f| f.scenarios.len()).sum();
    if total == 0 {
        return ReviewOutcome { features: Vec::new(), diagnostics: Vec::new() };
    }
    let mut diagnostics = Vec::new();
    let verdicts = match client.complete(&CompletionRequest::new(Task::ReviewScenarios, review_prompt(features, issue)))
    {
        Ok(r) => parse_verdicts(&r.text),
        Err(e) => {
            diagnostics.push(Diagnostic::warning("review-failed", format!("scenario review failed: {e}; keeping all")));
            BTreeMap::new()
        }
    };
    if diagnostics.is_empty() && verdicts.len() < total {
        let missing = if verdicts.is_empty() {
            "no readable verdicts".to_string()
        } else {
            format!("{} of {total} verdicts missing", total - verdicts.len())
        };
        diagnostics.push(Diagnostic::warning("review-unparsed", format!("{missing}; unmatched scenarios kept")));
    }
    let mut n = 0;
    let mut out = Vec::new();
    for f in features {
        let mut g = f.clone();
        g.scenarios.clear();
        for sc in &f.scenarios {
            n += 1;
            if verdicts.get(&n) == Some(&false) {
                client.audit().decision(Decision {
                    stage: Stage::Gherkin,
                    subject_kind: "scenario".into(),
                    subject: sc.title.clone(),
                    action: "drop".into(),
                    reason: "reviewer verdict".into(),
                    score: None,
                });
            } else {
                g.scenarios.push(sc.clone());
            }
        }
        if !g.scenarios.is_empty() {
            out.push(g);
        }
    }
    ReviewOutcome { features: out, diagnostics }
}
