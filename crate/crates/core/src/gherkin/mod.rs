//! Gherkin scenarios: prompt assembly, candidate generation, validation
//! and filtering.
//!
//! Validation is deliberately lenient. It checks that the required keywords
//! are present (a feature, at least one scenario, and Given, When and Then
//! blocks in every scenario) and treats other text as description. `And`
//! and `But` continue whichever block precedes them, and Given steps of a
//! `Background` count for every scenario.

mod filter;
mod prompt;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use filter::{
    dedup_scenarios, generate_scenarios, review_prompt, review_scenarios, scenario_similarity, validate_candidates,
    ReviewOutcome, DEFAULT_DEDUP_THRESHOLD,
};
pub use prompt::{
    build_scenario_prompt, summarize_sources, CodeSummary, PromptLimits, DEFAULT_PROMPT_CHAR_CAP,
    DEFAULT_SUMMARY_TOKEN_BUDGET, EMPTY_FILE_SUMMARY,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepKeyword {
    Given,
    When,
    Then,
    And,
    But,
}

impl StepKeyword {
    pub const ALL: [StepKeyword; 5] =
        [StepKeyword::Given, StepKeyword::When, StepKeyword::Then, StepKeyword::And, StepKeyword::But];

    pub fn as_str(self) -> &'static str {
        match self {
            StepKeyword::Given => "Given",
            StepKeyword::When => "When",
            StepKeyword::Then => "Then",
            StepKeyword::And => "And",
            StepKeyword::But => "But",
        }
    }

    fn is_continuation(self) -> bool {
        matches!(self, StepKeyword::And | StepKeyword::But)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub keyword: StepKeyword,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub title: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<String>,
    pub steps: Vec<Step>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GherkinFeature {
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub description: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub background: Option<Vec<Step>>,
    pub scenarios: Vec<Scenario>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    MissingFeature,
    DuplicateFeature,
    MissingScenario,
    MissingGiven,
    MissingWhen,
    MissingThen,
    EmptyBackground,
    ContinuationOpensScenario,
    StepOutsideScenario,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::MissingFeature => "missing Feature",
            ViolationKind::DuplicateFeature => "more than one Feature",
            ViolationKind::MissingScenario => "missing Scenario",
            ViolationKind::MissingGiven => "missing Given",
            ViolationKind::MissingWhen => "missing When",
            ViolationKind::MissingThen => "missing Then",
            ViolationKind::EmptyBackground => "empty Background",
            ViolationKind::ContinuationOpensScenario => "And/But opens a scenario",
            ViolationKind::StepOutsideScenario => "step outside a scenario",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureViolation {
    pub kind: ViolationKind,
    /// 1-based scenario index, where the violation belongs to one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<usize>,
    pub line: usize,
}

impl fmt::Display for FeatureViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.scenario {
            Some(i) => write!(f, "{} in scenario {i} (line {})", self.kind, self.line),
            None => write!(f, "{} (line {})", self.kind, self.line),
        }
    }
}

enum Section {
    Preamble,
    Feature,
    Background,
    Scenario,
    Examples,
}

fn step_of(line: &str) -> Option<Step> {
    StepKeyword::ALL.iter().find_map(|&k| {
        let rest = line.strip_prefix(k.as_str())?;
        let text = rest.strip_prefix(' ').or_else(|| rest.is_empty().then_some(""))?;
        Some(Step { keyword: k, text: text.trim().to_string() })
    })
}

fn header<'a>(line: &'a str, keywords: &[&str]) -> Option<&'a str> {
    keywords.iter().find_map(|k| line.strip_prefix(k)).map(str::trim)
}

/// Which of Given/When/Then the steps cover, with continuations attached
/// to the preceding block.
fn blocks(steps: &[Step], mut current: Option<StepKeyword>) -> [bool; 3] {
    let mut seen = [false; 3];
    for s in steps {
        let block = if s.keyword.is_continuation() { current } else { Some(s.keyword) };
        match block {
            Some(StepKeyword::Given) => seen[0] = true,
            Some(StepKeyword::When) => seen[1] = true,
            Some(StepKeyword::Then) => seen[2] = true,
            _ => {}
        }
        current = block;
    }
    seen
}

/// Parses and checks a feature. Violations name the missing keyword and
/// the scenario they belong to.
pub fn validate_feature(text: &str) -> Result<GherkinFeature, Vec<FeatureViolation>> {
    let mut violations = Vec::new();
    let mut feature: Option<GherkinFeature> = None;
    let mut feature_line = 0;
    let mut section = Section::Preamble;
    let mut pending_tags: Vec<String> = Vec::new();
    let mut scenario_lines: Vec<usize> = Vec::new();
    let mut background_line = 0;
    let mut in_docstring = false;

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.starts_with("\"\"\"") || line.starts_with("```") {
            in_docstring = !in_docstring;
            continue;
        }
        if in_docstring || line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line.starts_with('@') {
            pending_tags.extend(line.split_whitespace().map(str::to_string));
            continue;
        }
        if let Some(name) = header(line, &["Feature:"]) {
            if feature.is_some() {
                violations.push(FeatureViolation {
                    kind: ViolationKind::DuplicateFeature,
                    scenario: None,
                    line: lineno,
                });
                continue;
            }
            feature = Some(GherkinFeature {
                name: name.to_string(),
                tags: std::mem::take(&mut pending_tags),
                description: Vec::new(),
                background: None,
                scenarios: Vec::new(),
            });
            feature_line = lineno;
            section = Section::Feature;
            continue;
        }
        let Some(f) = feature.as_mut() else {
            if step_of(line).is_some() {
                violations.push(FeatureViolation {
                    kind: ViolationKind::StepOutsideScenario,
                    scenario: None,
                    line: lineno,
                });
            }
            continue;
        };
        if header(line, &["Background:"]).is_some() {
            f.background.get_or_insert_with(Vec::new);
            background_line = lineno;
            section = Section::Background;
            continue;
        }
        if let Some(title) = header(line, &["Scenario Outline:", "Scenario Template:", "Scenario:", "Example:"]) {
            f.scenarios.push(Scenario {
                title: title.to_string(),
                tags: std::mem::take(&mut pending_tags),
                steps: Vec::new(),
            });
            scenario_lines.push(lineno);
            section = Section::Scenario;
            continue;
        }
        if header(line, &["Examples:", "Scenarios:"]).is_some() {
            section = Section::Examples;
            continue;
        }
        if line.starts_with('|') {
            continue;
        }
        match (step_of(line), &section) {
            (Some(step), Section::Background) => f.background.get_or_insert_with(Vec::new).push(step),
            (Some(step), Section::Scenario) => {
                let index = f.scenarios.len();
                let sc = f.scenarios.last_mut().expect("scenario section has a scenario");
                if sc.steps.is_empty() && step.keyword.is_continuation() {
                    violations.push(FeatureViolation {
                        kind: ViolationKind::ContinuationOpensScenario,
                        scenario: Some(index),
                        line: lineno,
                    });
                }
                let reopens = step.keyword == StepKeyword::Given
                    && sc.steps.iter().any(|s| matches!(s.keyword, StepKeyword::When | StepKeyword::Then));
                if reopens {
                    violations.push(FeatureViolation {
                        kind: ViolationKind::StepOutsideScenario,
                        scenario: Some(index),
                        line: lineno,
                    });
                }
                sc.steps.push(step);
            }
            (Some(_), _) => violations.push(FeatureViolation {
                kind: ViolationKind::StepOutsideScenario,
                scenario: None,
                line: lineno,
            }),
            (None, Section::Feature) if f.scenarios.is_empty() && f.background.is_none() => {
                f.description.push(line.to_string());
            }
            (None, _) => {}
        }
    }

    let Some(f) = feature else {
        violations.push(FeatureViolation { kind: ViolationKind::MissingFeature, scenario: None, line: 1 });
        violations.sort_by_key(|v| (v.line, v.kind));
        return Err(violations);
    };
    let background = f.background.as_deref().unwrap_or(&[]);
    if f.background.as_ref().is_some_and(Vec::is_empty) {
        violations.push(FeatureViolation {
            kind: ViolationKind::EmptyBackground,
            scenario: None,
            line: background_line,
        });
    }
    if f.scenarios.is_empty() {
        violations.push(FeatureViolation { kind: ViolationKind::MissingScenario, scenario: None, line: feature_line });
    }
    let bg = blocks(background, None);
    for (i, sc) in f.scenarios.iter().enumerate() {
        let own = blocks(&sc.steps, None);
        let line = scenario_lines[i];
        let checks = [
            (bg[0] || own[0], ViolationKind::MissingGiven),
            (own[1], ViolationKind::MissingWhen),
            (own[2], ViolationKind::MissingThen),
        ];
        for (ok, kind) in checks {
            if !ok {
                violations.push(FeatureViolation { kind, scenario: Some(i + 1), line });
            }
        }
    }
    if violations.is_empty() {
        Ok(f)
    } else {
        violations.sort_by_key(|v| (v.line, v.kind));
        Err(violations)
    }
}

fn push_steps(out: &mut String, steps: &[Step]) {
    for s in steps {
        out.push_str("  ");
        out.push_str(s.keyword.as_str());
        if !s.text.is_empty() {
            out.push(' ');
            out.push_str(&s.text);
        }
        out.push('\n');
    }
}

/// Canonical text form; [`validate_feature`] parses it back to `f`.
pub fn render_feature(f: &GherkinFeature) -> String {
    let mut out = String::new();
    if !f.tags.is_empty() {
        out.push_str(&f.tags.join(" "));
        out.push('\n');
    }
    out.push_str("Feature: ");
    out.push_str(&f.name);
    out.push('\n');
    for d in &f.description {
        out.push_str("  ");
        out.push_str(d);
        out.push('\n');
    }
    if let Some(bg) = &f.background {
        out.push_str("\nBackground:\n");
        push_steps(&mut out, bg);
    }
    for sc in &f.scenarios {
        out.push('\n');
        if !sc.tags.is_empty() {
            out.push_str(&sc.tags.join(" "));
            out.push('\n');
        }
        out.push_str("Scenario: ");
        out.push_str(&sc.title);
        out.push('\n');
        push_steps(&mut out, &sc.steps);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) const DRIVERS_GUIDE: &str = "Feature: Add link to BMW Driver's Guide

Scenario: User has BMW Driver's Guide installed
  Given The user clicks on the \"Add Adapter\" button in the About Adapters widget
  When The BMW driver's guide link appears in the About Adapters widget
  Then The user is redirected to the BMW Driver's Guide app with correct language displayed

Scenario: User does not have BMW Driver's Guide installed
  Given The user clicks on the \"Add Adapter\" button in the About Adapters widget
  When The BMW driver's guide link appears in the About Adapters widget
  Then The user is redirected to the App Store with correct language displayed
";

    fn kinds(text: &str) -> Vec<(ViolationKind, Option<usize>)> {
        validate_feature(text).unwrap_err().into_iter().map(|v| (v.kind, v.scenario)).collect()
    }

    #[test]
    fn given_after_then_needs_a_header() {
        let text = "Feature: f\n\nScenario: a\n  Given x\n  When y\n  Then z\n  Given w\n  When v\n  Then u\n";
        assert_eq!(kinds(text), vec![(ViolationKind::StepOutsideScenario, Some(1))]);
        let ok = "Feature: f\n\nScenario: a\n  Given x\n  And w\n  When y\n  Then z\n  When v\n  Then u\n";
        assert!(validate_feature(ok).is_ok());
    }

    #[test]
    fn drivers_guide_is_valid() {
        let f = validate_feature(DRIVERS_GUIDE).unwrap();
        assert_eq!(f.name, "Add link to BMW Driver's Guide");
        assert_eq!(f.scenarios.len(), 2);
        for sc in &f.scenarios {
            let ks: Vec<_> = sc.steps.iter().map(|s| s.keyword).collect();
            assert_eq!(ks, vec![StepKeyword::Given, StepKeyword::When, StepKeyword::Then]);
        }
    }

    #[test]
    fn deleting_givens() {
        let text: String =
            DRIVERS_GUIDE.lines().filter(|l| !l.trim_start().starts_with("Given")).map(|l| format!("{l}\n")).collect();
        assert_eq!(kinds(&text), vec![(ViolationKind::MissingGiven, Some(1)), (ViolationKind::MissingGiven, Some(2))]);
    }

    #[test]
    fn background_then_missing() {
        let text = "Feature: F\nBackground:\n  Given the app is open\nScenario: s\n  When x\n";
        assert_eq!(kinds(text), vec![(ViolationKind::MissingThen, Some(1))]);
        let ok = "Feature: F\nBackground:\n  Given the app is open\nScenario: s\n  When x\n  Then y\n";
        assert!(validate_feature(ok).is_ok());
        let empty_bg = "Feature: F\nBackground:\nScenario: s\n  Given a\n  When x\n  Then y\n";
        assert_eq!(kinds(empty_bg), vec![(ViolationKind::EmptyBackground, None)]);
    }

    #[test]
    fn continuations_attach_to_previous_block() {
        let ok = "Feature: F\nScenario: s\n  Given a\n  When b\n  And c\n  Then d\n  But e\n";
        assert!(validate_feature(ok).is_ok());
        let bad = "Feature: F\nScenario: s\n  And a\n  When b\n  Then d\n";
        assert_eq!(
            kinds(bad),
            vec![(ViolationKind::MissingGiven, Some(1)), (ViolationKind::ContinuationOpensScenario, Some(1))]
        );
    }

    #[test]
    fn prose_and_structure() {
        assert_eq!(kinds("Here are some scenarios you might like."), vec![(ViolationKind::MissingFeature, None)]);
        assert_eq!(kinds("Feature: lonely\n  just words\n"), vec![(ViolationKind::MissingScenario, None)]);
        let f =
            validate_feature("@smoke\nFeature: F\n  As a user\nScenario: s\n  Given a\n  When b\n  Then c\n").unwrap();
        assert_eq!(f.tags, vec!["@smoke"]);
        assert_eq!(f.description, vec!["As a user"]);
    }

    #[test]
    fn outline_tables_are_skipped() {
        let text = "Feature: F\nScenario Outline: s\n  Given <a>\n  When b\n  Then c\nExamples:\n  | a |\n  | 1 |\n";
        assert_eq!(validate_feature(text).unwrap().scenarios.len(), 1);
    }

    #[test]
    fn render_round_trip_on_drivers_guide() {
        let f = validate_feature(DRIVERS_GUIDE).unwrap();
        assert_eq!(render_feature(&f), DRIVERS_GUIDE);
    }

    fn word() -> impl Strategy<Value = String> {
        "[a-z][a-z0-9']{0,7}"
    }

    fn text() -> impl Strategy<Value = String> {
        prop::collection::vec(word(), 1..6).prop_map(|w| w.join(" "))
    }

    fn step(k: StepKeyword) -> impl Strategy<Value = Step> {
        text().prop_map(move |text| Step { keyword: k, text })
    }

    fn block(k: StepKeyword) -> impl Strategy<Value = Vec<Step>> {
        (step(k), prop::collection::vec(prop_oneof![step(StepKeyword::And), step(StepKeyword::But)], 0..2))
            .prop_map(|(first, rest)| std::iter::once(first).chain(rest).collect())
    }

    fn scenario() -> impl Strategy<Value = Scenario> {
        (text(), block(StepKeyword::Given), block(StepKeyword::When), block(StepKeyword::Then)).prop_map(
            |(title, g, w, t)| Scenario { title, tags: Vec::new(), steps: g.into_iter().chain(w).chain(t).collect() },
        )
    }

    proptest! {
        #[test]
        fn valid_features_round_trip(
            name in text(),
            bg in prop::option::of(block(StepKeyword::Given)),
            scenarios in prop::collection::vec(scenario(), 1..4),
        ) {
            let f = GherkinFeature { name, tags: Vec::new(), description: Vec::new(), background: bg, scenarios };
            let parsed = validate_feature(&render_feature(&f)).unwrap();
            prop_assert_eq!(parsed, f);
        }
    }
}
