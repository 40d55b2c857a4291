//! UI test classes built from navigation paths.
//!
//! Each path becomes one test function that walks forward through the page
//! objects and then unwinds with `back()` calls to the entry page. Actions
//! that leave the app are configured as non-reversible and are not unwound.
//! A provider cross-check may drop functions or add comments; any other
//! change to the returned code is rejected.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::Diagnostic;
use crate::gherkin::{render_feature, GherkinFeature};
use crate::ingest::IssueRecord;
use crate::llm::{fenced_blocks, CompletionRequest, Decision, LlmClient, Stage, Task, FUNCTION_MARKER};
use crate::navmap::{NavigationMap, NavigationPath, Step};
use crate::pageobject::PageRegistry;
use crate::template::{Template, TemplateError, Vars};

pub const UI_TEST_SECTIONS: &[&str] = &["class", "import", "test", "call", "assert_visible"];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum UiTestError {
    #[error("path step {index}: `{page}` has no action `{action}`")]
    UnknownAction { index: usize, page: String, action: String },
    #[error("path step {index} starts on `{found}` but the previous step ends on `{expected}`")]
    Broken { index: usize, expected: String, found: String },
    #[error(transparent)]
    Template(#[from] TemplateError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct UiTestConfig {
    pub package_prefix: String,
    pub base_class: String,
    pub priority_tag: String,
    pub retries: u32,
    /// Actions that hand off outside the app and cannot be undone with `back()`.
    pub non_reversible: BTreeSet<String>,
    pub imports: Vec<String>,
    pub test_root: String,
    pub extension: String,
}

impl Default for UiTestConfig {
    fn default() -> Self {
        Self {
            package_prefix: "uitest".into(),
            base_class: "BaseUiTest".into(),
            priority_tag: "@Priority1".into(),
            retries: 2,
            non_reversible: BTreeSet::new(),
            imports: vec![
                "org.junitpioneer.jupiter.RetryingTest".into(),
                "uitest.base.BaseUiTest".into(),
                "uitest.base.Priority1".into(),
            ],
            test_root: "uitest".into(),
            extension: "kt".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackStep {
    /// Page reached after going back.
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestFunction {
    pub name: String,
    pub forward_actions: Vec<Step>,
    pub terminal: String,
    pub return_actions: Vec<BackStep>,
    pub comment: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestScript {
    pub class_name: String,
    pub issue_key: String,
    pub package: String,
    pub priority_tag: String,
    /// Entry page the setup opens.
    pub setup: String,
    pub imports: Vec<String>,
    pub tests: Vec<TestFunction>,
}

impl TestScript {
    pub fn file_name(&self, cfg: &UiTestConfig) -> String {
        format!("{}.{}", self.class_name, cfg.extension)
    }
}

pub fn default_template() -> &'static Template {
    static T: OnceLock<Template> = OnceLock::new();
    T.get_or_init(|| Template::parse("ui_test.kt.tmpl", include_str!("../templates/ui_test.kt.tmpl")))
}

fn capitalize(w: &str) -> String {
    let mut cs = w.chars();
    match cs.next() {
        Some(c) => c.to_uppercase().chain(cs).collect(),
        None => String::new(),
    }
}

fn lower_first(w: &str) -> String {
    let mut cs = w.chars();
    match cs.next() {
        Some(c) => c.to_lowercase().chain(cs).collect(),
        None => String::new(),
    }
}

/// `Add link to Driver's Guide` → `AddLinkToDriversGuide`.
pub fn class_name_for(issue: &IssueRecord) -> String {
    let name: String = issue
        .summary
        .split_whitespace()
        .map(|w| capitalize(&w.chars().filter(char::is_ascii_alphanumeric).collect::<String>()))
        .collect();
    match name.chars().next() {
        Some(c) if c.is_ascii_alphabetic() => name,
        _ => {
            let key: String = issue.key.chars().filter(char::is_ascii_alphanumeric).collect();
            format!("Issue{key}{name}")
        }
    }
}

fn function_stem(terminal: &str) -> String {
    let base = terminal.strip_suffix("Page").filter(|s| !s.is_empty()).unwrap_or(terminal);
    let clean: String = base.chars().filter(char::is_ascii_alphanumeric).collect();
    format!("{}Test", lower_first(&clean))
}

/// One test function for a path: the forward chain, then one `back()` per
/// reversible transition in reverse order.
pub fn generate_test(
    path: &NavigationPath,
    map: &NavigationMap,
    cfg: &UiTestConfig,
    name: &str,
) -> Result<TestFunction, UiTestError> {
    let pages = path.pages();
    for (i, s) in path.steps.iter().enumerate() {
        if i > 0 && s.page != pages[i] {
            return Err(UiTestError::Broken { index: i, expected: pages[i].to_string(), found: s.page.clone() });
        }
        if map.edge(&s.page, &s.action, pages[i + 1]).is_none() {
            return Err(UiTestError::UnknownAction { index: i, page: s.page.clone(), action: s.action.clone() });
        }
    }
    let return_actions = path
        .steps
        .iter()
        .enumerate()
        .rev()
        .filter(|(_, s)| !cfg.non_reversible.contains(&s.action))
        .map(|(i, _)| BackStep { to: pages[i].to_string() })
        .collect();
    let comment = if path.is_empty() {
        format!("{} is visible on start", path.terminal)
    } else {
        format!("Reaches {} from {} via {}", path.terminal, path.entry(), path.actions().join(", "))
    };
    Ok(TestFunction {
        name: name.to_string(),
        forward_actions: path.steps.clone(),
        terminal: path.terminal.clone(),
        return_actions,
        comment,
    })
}

/// Builds the test class for an issue. Function names derive from the
/// terminal page and are numbered when several paths share a terminal.
pub fn build_test_script(
    issue: &IssueRecord,
    entry: &str,
    paths: &[NavigationPath],
    map: &NavigationMap,
    registry: &PageRegistry,
    cfg: &UiTestConfig,
) -> Result<(TestScript, Vec<Diagnostic>), UiTestError> {
    let mut used: BTreeMap<String, usize> = BTreeMap::new();
    let mut tests = Vec::new();
    let mut referenced: BTreeSet<&str> = BTreeSet::from([entry]);
    for p in paths {
        let stem = function_stem(&p.terminal);
        let n = used.entry(stem.clone()).or_default();
        *n += 1;
        let name = if *n == 1 { stem } else { format!("{stem}{n}") };
        tests.push(generate_test(p, map, cfg, &name)?);
        referenced.extend(p.pages());
    }
    let mut imports: BTreeSet<String> = cfg.imports.iter().cloned().collect();
    for page in referenced {
        if let Some(r) = registry.get(page) {
            if r.package.is_empty() {
                continue;
            }
            imports.insert(format!("{}.{page}", r.package));
        }
    }
    let entry_pkg: String = entry.strip_suffix("Page").unwrap_or(entry).to_ascii_lowercase();
    let package = [cfg.package_prefix.as_str(), entry_pkg.as_str()]
        .iter()
        .filter(|s| !s.is_empty())
        .copied()
        .collect::<Vec<_>>()
        .join(".");
    let mut diags = Vec::new();
    if tests.is_empty() {
        diags.push(Diagnostic::warning(
            "empty-test-class",
            format!("no navigation path for {}; class has setup only", issue.key),
        ));
    }
    let script = TestScript {
        class_name: class_name_for(issue),
        issue_key: issue.key.clone(),
        package,
        priority_tag: cfg.priority_tag.clone(),
        setup: entry.to_string(),
        imports: imports.into_iter().collect(),
        tests,
    };
    Ok((script, diags))
}

fn vars<'a>(pairs: &[(&'a str, &str)]) -> Vars<'a> {
    pairs.iter().map(|(k, v)| (*k, v.to_string())).collect()
}

fn render_function(t: &TestFunction, entry_var: &str, retries: &str, tpl: &Template) -> Result<String, TemplateError> {
    let mut chain = Vec::new();
    if t.forward_actions.is_empty() {
        chain.push(tpl.render("assert_visible", &Vars::new())?);
    }
    let mut pages =
        t.forward_actions.iter().map(|s| s.page.as_str()).skip(1).chain(std::iter::once(t.terminal.as_str()));
    for s in &t.forward_actions {
        let to = pages.next().unwrap_or_default();
        chain.push(tpl.render("call", &vars(&[("action", &s.action), ("note", &format!("to {to}"))]))?);
    }
    for b in &t.return_actions {
        chain.push(tpl.render("call", &vars(&[("action", "back"), ("note", &format!("back to {}", b.to))]))?);
    }
    tpl.render(
        "test",
        &vars(&[
            ("comment", &t.comment),
            ("retries", retries),
            ("name", &t.name),
            ("entry_var", entry_var),
            ("chain", &chain.join("\n")),
        ]),
    )
}

pub fn render_test_class(script: &TestScript, cfg: &UiTestConfig, tpl: &Template) -> Result<String, TemplateError> {
    tpl.require(UI_TEST_SECTIONS)?;
    let entry_var = lower_first(&script.setup);
    let retries = cfg.retries.to_string();
    let imports = script
        .imports
        .iter()
        .map(|i| tpl.render("import", &vars(&[("path", i)])))
        .collect::<Result<Vec<_>, _>>()?
        .join("\n");
    let mut tests = String::new();
    for t in &script.tests {
        tests.push_str(&render_function(t, &entry_var, &retries, tpl)?);
        tests.push('\n');
    }
    let mut out = tpl.render(
        "class",
        &vars(&[
            ("package", &script.package),
            ("imports", &imports),
            ("priority_tag", &script.priority_tag),
            ("class_name", &script.class_name),
            ("base_class", &cfg.base_class),
            ("entry_var", &entry_var),
            ("entry_page", &script.setup),
            ("tests", &tests),
        ]),
    )?;
    if !out.ends_with('\n') {
        out.push('\n');
    }
    Ok(out)
}

/// Source with comments and blank lines removed and lines trimmed, used to
/// decide whether returned code changed anything but comments.
pub fn code_structure(src: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut in_block = false;
    for line in src.lines() {
        let mut kept = String::new();
        let mut chars = line.chars().peekable();
        let mut in_str = false;
        while let Some(c) = chars.next() {
            if in_block {
                if c == '*' && chars.peek() == Some(&'/') {
                    chars.next();
                    in_block = false;
                }
                continue;
            }
            match c {
                '"' => {
                    in_str = !in_str;
                    kept.push(c);
                }
                '/' if !in_str && chars.peek() == Some(&'/') => break,
                '/' if !in_str && chars.peek() == Some(&'*') => {
                    chars.next();
                    in_block = true;
                }
                _ => kept.push(c),
            }
        }
        let t = kept.trim();
        if !t.is_empty() {
            out.push(t.to_string());
        }
    }
    out
}

pub fn crosscheck_prompt(rendered: &str, script: &TestScript, features: &[GherkinFeature]) -> String {
    let mut p = String::from(
        "Check each test function against the scenarios. Drop functions unrelated to every scenario. Answer one \
         line per function as `<number>: keep` or `<number>: drop`. You may return the class in a fenced block \
         with added comments; do not change code.\n\n",
    );
    p.push_str("Scenarios:\n");
    for f in features {
        p.push_str(&render_feature(f));
    }
    p.push_str("\nFunctions:\n");
    for t in &script.tests {
        p.push_str(FUNCTION_MARKER);
        p.push_str(&t.name);
        p.push('\n');
    }
    p.push_str("\nTest class:\n```kotlin\n");
    p.push_str(rendered);
    p.push_str("```\n");
    p
}

#[derive(Debug, Clone)]
pub struct CrosscheckOutcome {
    pub script: TestScript,
    /// Final source: provider text when only comments changed, else the
    /// deterministic rendering of the retained functions.
    pub text: String,
    pub dropped: Vec<String>,
    pub diagnostics: Vec<Diagnostic>,
}

fn parse_verdicts(text: &str) -> BTreeMap<usize, bool> {
    let mut out = BTreeMap::new();
    for line in text.lines() {
        let t = line.trim().trim_start_matches(['-', '*', ' ']);
        let Some((n, v)) = t.split_once(':') else { continue };
        let Ok(n) = n.trim().parse::<usize>() else { continue };
        let v = v.trim().to_ascii_lowercase();
        if v.starts_with("keep") {
            out.insert(n, true);
        } else if v.starts_with("drop") {
            out.insert(n, false);
        }
    }
    out
}

/// Provider cross-check of each script against the retained scenarios.
/// Fail-open: a failed call or unreadable answer keeps every function.
pub fn crosscheck_tests(
    scripts: &[TestScript],
    features: &[GherkinFeature],
    cfg: &UiTestConfig,
    tpl: &Template,
    client: &LlmClient,
) -> Result<Vec<CrosscheckOutcome>, TemplateError> {
    let rendered: Vec<String> = scripts.iter().map(|s| render_test_class(s, cfg, tpl)).collect::<Result<_, _>>()?;
    let reqs: Vec<CompletionRequest> = scripts
        .iter()
        .zip(&rendered)
        .map(|(s, r)| CompletionRequest::new(Task::CrosscheckTests, crosscheck_prompt(r, s, features)))
        .collect();
    let responses = if scripts.iter().any(|s| !s.tests.is_empty()) { client.complete_many(&reqs) } else { Vec::new() };
    let mut out = Vec::new();
    for (i, script) in scripts.iter().enumerate() {
        let mut diagnostics = Vec::new();
        if script.tests.is_empty() {
            out.push(CrosscheckOutcome {
                script: script.clone(),
                text: rendered[i].clone(),
                dropped: Vec::new(),
                diagnostics,
            });
            continue;
        }
        let (verdicts, returned) = match responses.get(i) {
            Some(Ok(r)) => (parse_verdicts(&r.text), fenced_blocks(&r.text).last().map(|b| b.to_string())),
            Some(Err(e)) => {
                diagnostics.push(Diagnostic::warning(
                    "crosscheck-failed",
                    format!("{}: {e}; keeping all tests", script.class_name),
                ));
                (BTreeMap::new(), None)
            }
            None => (BTreeMap::new(), None),
        };
        if diagnostics.is_empty() && verdicts.len() < script.tests.len() {
            diagnostics.push(Diagnostic::warning(
                "crosscheck-unparsed",
                format!(
                    "{}: {} of {} verdicts readable; the rest kept",
                    script.class_name,
                    verdicts.len(),
                    script.tests.len()
                ),
            ));
        }
        let mut kept = script.clone();
        kept.tests.clear();
        let mut dropped = Vec::new();
        for (j, t) in script.tests.iter().enumerate() {
            if verdicts.get(&(j + 1)) == Some(&false) {
                client.audit().decision(Decision {
                    stage: Stage::UiTests,
                    subject_kind: "test".into(),
                    subject: format!("{}.{}", script.class_name, t.name),
                    action: "drop".into(),
                    reason: "cross-check verdict".into(),
                    score: None,
                });
                dropped.push(t.name.clone());
            } else {
                kept.tests.push(t.clone());
            }
        }
        let base = if dropped.is_empty() { rendered[i].clone() } else { render_test_class(&kept, cfg, tpl)? };
        let text = match returned {
            Some(r) if code_structure(&r) == code_structure(&base) => {
                if r.ends_with('\n') {
                    r
                } else {
                    format!("{r}\n")
                }
            }
            Some(_) => {
                client.audit().decision(Decision {
                    stage: Stage::UiTests,
                    subject_kind: "test_class".into(),
                    subject: script.class_name.clone(),
                    action: "reject".into(),
                    reason: "returned code changes more than comments".into(),
                    score: None,
                });
                diagnostics.push(Diagnostic::warning(
                    "crosscheck-edit-rejected",
                    format!(
                        "{}: returned code altered the test structure; deterministic rendering kept",
                        script.class_name
                    ),
                ));
                base
            }
            None => base,
        };
        out.push(CrosscheckOutcome { script: kept, text, dropped, diagnostics });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{StubBehavior, StubProvider};
    use crate::navmap::NodeKind;
    use crate::pageobject::PageObjectConfig;

    fn issue() -> IssueRecord {
        IssueRecord {
            key: "NWAP-165701".into(),
            summary: "Add link to Driver's Guide".into(),
            labels: vec![],
            acceptance_criteria: vec![],
            description: String::new(),
        }
    }

    fn map() -> NavigationMap {
        let mut m = NavigationMap::new();
        for (f, t, a) in [
            ("VehicleTabPage", "ElectricMobilityPage", "charging"),
            ("ElectricMobilityPage", "AdaptersMainPage", "adaptersConfiguration"),
            ("AdaptersMainPage", "DriversGuidePage", "openDriversGuide"),
        ] {
            m.add_node(f, NodeKind::Page);
            m.add_edge(f, t, a);
        }
        m
    }

    fn path1() -> NavigationPath {
        NavigationPath {
            steps: vec![
                Step { page: "VehicleTabPage".into(), action: "charging".into() },
                Step { page: "ElectricMobilityPage".into(), action: "adaptersConfiguration".into() },
                Step { page: "AdaptersMainPage".into(), action: "openDriversGuide".into() },
            ],
            terminal: "DriversGuidePage".into(),
        }
    }

    fn cfg() -> UiTestConfig {
        UiTestConfig { non_reversible: BTreeSet::from(["openDriversGuide".to_string()]), ..UiTestConfig::default() }
    }

    fn registry() -> PageRegistry {
        let mut r = PageRegistry::new(PageObjectConfig::default());
        r.register("lib/vehicle/vehicle_tab_page.dart").unwrap();
        r.register("lib/charging/electric_mobility_page.dart").unwrap();
        r
    }

    #[test]
    fn class_names() {
        assert_eq!(class_name_for(&issue()), "AddLinkToDriversGuide");
        let odd = IssueRecord { summary: "2nd try!".into(), ..issue() };
        assert_eq!(class_name_for(&odd), "IssueNWAP1657012ndTry");
    }

    #[test]
    fn drivers_guide_path_unwinds_twice() {
        let t = generate_test(&path1(), &map(), &cfg(), "driversGuideTest").unwrap();
        assert_eq!(t.forward_actions.len(), 3);
        let backs: Vec<&str> = t.return_actions.iter().map(|b| b.to.as_str()).collect();
        assert_eq!(backs, vec!["ElectricMobilityPage", "VehicleTabPage"]);
        let all = generate_test(&path1(), &map(), &UiTestConfig::default(), "x").unwrap();
        assert_eq!(all.return_actions.len(), 3);
    }

    #[test]
    fn unknown_action_named() {
        let mut p = path1();
        p.steps[1].action = "nope".into();
        let err = generate_test(&p, &map(), &cfg(), "x").unwrap_err();
        assert_eq!(
            err,
            UiTestError::UnknownAction { index: 1, page: "ElectricMobilityPage".into(), action: "nope".into() }
        );
    }

    #[test]
    fn render_drivers_guide_class() {
        let (script, diags) =
            build_test_script(&issue(), "VehicleTabPage", &[path1()], &map(), &registry(), &cfg()).unwrap();
        assert!(diags.is_empty());
        assert_eq!(script.package, "uitest.vehicletab");
        assert_eq!(script.tests[0].name, "driversGuideTest");
        let text = render_test_class(&script, &cfg(), default_template()).unwrap();
        assert!(text.contains("class AddLinkToDriversGuide : BaseUiTest() {"));
        assert!(text.contains("@RetryingTest(2)"));
        assert!(text.contains("@Priority1\n"));
        assert!(text.contains("import pages.vehicle.VehicleTabPage\n"));
        let chain: Vec<&str> = text
            .lines()
            .filter(|l| l.trim_start().starts_with('.'))
            .map(|l| l.trim().split(' ').next().unwrap())
            .collect();
        assert_eq!(chain, vec![".charging()", ".adaptersConfiguration()", ".openDriversGuide()", ".back()", ".back()"]);
        assert_eq!(text, render_test_class(&script, &cfg(), default_template()).unwrap());
    }

    #[test]
    fn empty_path_and_empty_class() {
        let p = NavigationPath { steps: vec![], terminal: "VehicleTabPage".into() };
        let (script, _) = build_test_script(&issue(), "VehicleTabPage", &[p], &map(), &registry(), &cfg()).unwrap();
        let text = render_test_class(&script, &cfg(), default_template()).unwrap();
        assert!(text.contains("            .ensurePageVisible()"));
        let (empty, diags) = build_test_script(&issue(), "VehicleTabPage", &[], &map(), &registry(), &cfg()).unwrap();
        assert_eq!(diags[0].code, "empty-test-class");
        let text = render_test_class(&empty, &cfg(), default_template()).unwrap();
        assert!(text.contains("override fun setup()"));
        assert!(!text.contains("@RetryingTest"));
    }

    #[test]
    fn duplicate_terminals_are_numbered() {
        let mut m = map();
        m.add_edge("VehicleTabPage", "ElectricMobilityPage", "openCharging");
        let p2 = NavigationPath {
            steps: vec![Step { page: "VehicleTabPage".into(), action: "openCharging".into() }],
            terminal: "ElectricMobilityPage".into(),
        };
        let p1 = NavigationPath { steps: vec![path1().steps[0].clone()], terminal: "ElectricMobilityPage".into() };
        let (s, _) = build_test_script(&issue(), "VehicleTabPage", &[p1, p2], &m, &registry(), &cfg()).unwrap();
        let names: Vec<&str> = s.tests.iter().map(|t| t.name.as_str()).collect();
        assert_eq!(names, vec!["electricMobilityTest", "electricMobilityTest2"]);
    }

    fn script() -> TestScript {
        build_test_script(&issue(), "VehicleTabPage", &[path1()], &map(), &registry(), &cfg()).unwrap().0
    }

    #[test]
    fn crosscheck_keep_all_is_identity() {
        let client = LlmClient::simple(StubProvider::default());
        let out = crosscheck_tests(&[script()], &[], &cfg(), default_template(), &client).unwrap();
        assert_eq!(out[0].script, script());
        assert_eq!(out[0].text, render_test_class(&script(), &cfg(), default_template()).unwrap());
        assert!(out[0].diagnostics.is_empty());
    }

    #[test]
    fn crosscheck_comment_edit_accepted_structure_edit_rejected() {
        let original = render_test_class(&script(), &cfg(), default_template()).unwrap();
        let commented =
            original.replace("    @RetryingTest(2)", "    // Matches both scenarios.\n    @RetryingTest(2)");
        let mut b = StubBehavior::default();
        b.canned.insert(Task::CrosscheckTests, format!("1: keep\n```kotlin\n{commented}```\n"));
        let client = LlmClient::simple(StubProvider::new(b));
        let out = crosscheck_tests(&[script()], &[], &cfg(), default_template(), &client).unwrap();
        assert_eq!(out[0].text, commented);

        let altered = original.replace("            .back() // back to VehicleTabPage\n", "");
        let mut b = StubBehavior::default();
        b.canned.insert(Task::CrosscheckTests, format!("1: keep\n```kotlin\n{altered}```\n"));
        let client = LlmClient::simple(StubProvider::new(b));
        let out = crosscheck_tests(&[script()], &[], &cfg(), default_template(), &client).unwrap();
        assert_eq!(out[0].text, original);
        assert_eq!(out[0].diagnostics[0].code, "crosscheck-edit-rejected");
        assert!(client
            .audit()
            .records()
            .iter()
            .any(|r| matches!(r, crate::llm::AuditRecord::Decision(d) if d.action == "reject")));
    }

    #[test]
    fn crosscheck_drop_and_fail_open() {
        let mut b = StubBehavior::default();
        b.drop_tests.insert("driversGuideTest".into());
        let client = LlmClient::simple(StubProvider::new(b));
        let out = crosscheck_tests(&[script()], &[], &cfg(), default_template(), &client).unwrap();
        assert!(out[0].script.tests.is_empty());
        assert_eq!(out[0].dropped, vec!["driversGuideTest"]);
        assert_eq!(client.audit().drop_count(Stage::UiTests), 1);

        let mut b = StubBehavior::default();
        b.canned.insert(Task::CrosscheckTests, "lgtm".into());
        let client = LlmClient::simple(StubProvider::new(b));
        let out = crosscheck_tests(&[script()], &[], &cfg(), default_template(), &client).unwrap();
        assert_eq!(out[0].script.tests.len(), 1);
        assert_eq!(out[0].diagnostics[0].code, "crosscheck-unparsed");
    }

    #[test]
    fn structure_ignores_comments() {
        assert_eq!(code_structure("a // x\n\n  /* y */ b\n"), vec!["a", "b"]);
        assert_eq!(code_structure("s(\"// not a comment\")"), vec!["s(\"// not a comment\")"]);
    }
}
