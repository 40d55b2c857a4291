use super::lint::{lint_page_object, LintContext};
use crate::diagnostics::Diagnostic;
use crate::llm::{last_fenced_block, CompletionRequest, Decision, LlmClient, Stage, Task};

#[derive(Debug, Clone, PartialEq)]
pub struct RefineOutcome {
    pub text: String,
    /// The provider's text was kept.
    pub accepted: bool,
    pub reason: Option<String>,
    pub diagnostics: Vec<Diagnostic>,
}

pub fn refine_prompt(rendered: &str, example: &str) -> String {
    format!(
        "Refine the draft page object so it follows the conventions of the example: same base-class \
         inheritance, an ensurePageVisible override, selector constants and navigation methods that \
         return the destination page object. Keep every selector and method of the draft. Reply with \
         the complete class in one fenced block.\n\nExample:\n```kotlin\n{example}```\n\nDraft:\n```kotlin\n{rendered}```\n"
    )
}

fn method_present(text: &str, name: &str) -> bool {
    text.lines().any(|l| {
        let t = l.trim_start();
        t.contains(&format!("fun {name}("))
    })
}

/// Asks the provider to polish `rendered`. The answer is kept only when it
/// lints clean and still declares every method the context expects;
/// otherwise `rendered` is returned and the rejection is logged.
pub fn refine_page_object(
    page_id: &str,
    rendered: &str,
    example: &str,
    ctx: &LintContext,
    client: &LlmClient,
) -> RefineOutcome {
    let req = CompletionRequest::new(Task::RefinePageObject, refine_prompt(rendered, example));
    let fallback = |reason: String, diagnostics: Vec<Diagnostic>| {
        client.audit().decision(Decision {
            stage: Stage::PageObjects,
            subject_kind: "page_object".into(),
            subject: page_id.to_string(),
            action: "reject".into(),
            reason: reason.clone(),
            score: None,
        });
        RefineOutcome { text: rendered.to_string(), accepted: false, reason: Some(reason), diagnostics }
    };

    let resp = match client.complete(&req) {
        Ok(r) => r,
        Err(e) => {
            let d = Diagnostic::warning("refine-failed", format!("{page_id}: {e}; keeping deterministic rendering"));
            return fallback(format!("provider error: {e}"), vec![d]);
        }
    };
    let mut text = last_fenced_block(&resp.text).unwrap_or(resp.text.as_str()).to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    let violations = lint_page_object(&text, ctx);
    if let Some(v) = violations.first() {
        return fallback(format!("lint {} at line {}: {}", v.rule, v.line, v.message), Vec::new());
    }
    if let Some(missing) = ctx.expected_returns.keys().find(|m| !method_present(&text, m)) {
        return fallback(format!("method `{missing}` was removed"), Vec::new());
    }
    RefineOutcome { text, accepted: true, reason: None, diagnostics: Vec::new() }
}
