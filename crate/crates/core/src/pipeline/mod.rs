//! End-to-end run: ingest, static analysis, page objects, navigation,
//! Gherkin, UI tests and the report, in that order.
//!
//! Every run writes into `<output_dir>/<ISSUE-KEY>/`:
//!
//! ```text
//! pageobjects/<mirrored path>.kt
//! features/<ISSUE-KEY>.feature
//! tests/<ClassName>.kt
//! report.json  audit.jsonl  diagnostics.jsonl
//! ```
//!
//! A dry run writes only `report.json` and `manifest.json`.

mod config;
mod report;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use sha2::{Digest, Sha256};
use thiserror::Error;

pub use config::{
    ConfigError, Mode, Overrides, PipelineConfig, ProviderConfig, StubConfig, TemplatePaths, LLM_URL_ENV,
};
pub use report::{Artifact, ArtifactCounts, Manifest, PipelineReport, StageSeconds, REPORT_SCHEMA_VERSION};

use crate::depgraph::{
    affected_screens, build_dependency_graph, extract_widget_keys, scan_sources, screen_closure, DependencyGraph,
    KeyScanOptions, ScanConfig, SourceIndex,
};
use crate::diagnostics::{self, Diagnostic};
use crate::gherkin::{
    build_scenario_prompt, dedup_scenarios, generate_scenarios, render_feature, review_scenarios, summarize_sources,
    validate_candidates, GherkinFeature,
};
use crate::ingest::{filter_ui_files, parse_changeset, parse_issue, parse_path_list, ChangeSet, IngestError};
use crate::llm::{
    AuditLog, HttpProvider, LlmClient, LlmError, Provider, RecordingProvider, ReplayProvider, StubBehavior,
    StubProvider,
};
use crate::navmap::{build_navigation_map, find_paths, render_paths, validate_map, NavMapError, NavigationMap};
use crate::pageobject::{
    lint_page_object, page_identity, refine_page_object, render_page_object, synthesize_page_object, LintContext,
    PageObjectSpec, PageRegistry, EXAMPLE_PAGE_OBJECT,
};
use crate::template::{Template, TemplateError};
use crate::uitest::{build_test_script, crosscheck_tests, UiTestError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("unknown page `{0}`")]
    UnknownPage(String),
    #[error("no affected pages for {issue_key}; report written to {}", report.display())]
    NoWork { issue_key: String, report: PathBuf },
    #[error("scenario generation failed: {source}")]
    Provider { source: LlmError, report: Option<PathBuf> },
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    UiTest(#[from] UiTestError),
    #[error("{context}: {source}")]
    Io { context: String, source: io::Error },
}

impl PipelineError {
    /// Process exit status for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::UnknownPage(_) | PipelineError::Template(_) => 2,
            PipelineError::Ingest(_) => 3,
            PipelineError::NoWork { .. } => 4,
            PipelineError::Provider { .. } => 5,
            PipelineError::UiTest(_) | PipelineError::Io { .. } => 1,
        }
    }
}

fn io_err(context: impl Into<String>) -> impl FnOnce(io::Error) -> PipelineError {
    let context = context.into();
    move |source| PipelineError::Io { context, source }
}

fn write_file(path: &Path, contents: &str) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(format!("creating {}", dir.display())))?;
    }
    fs::write(path, contents).map_err(io_err(format!("writing {}", path.display())))
}

fn read_optional(path: &Path) -> Result<Option<String>, PipelineError> {
    match fs::read_to_string(path) {
        Ok(t) => Ok(Some(t)),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(PipelineError::Io { context: format!("reading {}", path.display()), source: e }),
    }
}

fn read_required(path: &Path) -> Result<String, ConfigError> {
    fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })
}

/// Static model of the application: sources, imports, one page-object spec
/// per page file and the navigation map they induce.
pub struct AppModel {
    pub index: SourceIndex,
    pub graph: DependencyGraph,
    pub registry: PageRegistry,
    pub specs: BTreeMap<String, PageObjectSpec>,
    pub map: NavigationMap,
    pub diagnostics: Vec<Diagnostic>,
}

pub fn build_app_model(cfg: &PipelineConfig) -> Result<AppModel, PipelineError> {
    let scan = ScanConfig { packages: cfg.packages.clone() };
    let index = scan_sources(&cfg.source_root, &scan).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let graph = build_dependency_graph(&index);
    let (registry, mut diags) =
        PageRegistry::from_files(cfg.page_objects.clone(), graph.nodes().iter().map(String::as_str));
    let suffix = cfg.page_objects.page_suffix.as_str();
    let opts = KeyScanOptions::default();

    let mut specs = BTreeMap::new();
    let ids: Vec<String> = registry.page_ids().map(str::to_string).collect();
    for id in ids {
        let page_file = registry.get(&id).expect("registered").source_file.clone();
        let closure = screen_closure(&page_file, &graph, suffix, Some(&cfg.filter))
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let mut files = vec![page_file.clone()];
        files.extend(closure.into_iter().filter(|f| *f != page_file));
        let keys = extract_widget_keys(&files, &index, &opts);
        diags.extend(keys.diagnostics);

        let identity = page_identity(&page_file, registry.config()).expect("registered pages conform");
        let prior = read_optional(&cfg.test_root.join(&identity.output_path))?;
        match synthesize_page_object(&page_file, &keys.keys, prior.as_deref(), &registry) {
            Ok(s) => {
                diags.extend(s.diagnostics);
                specs.insert(id, s.spec);
            }
            Err(e) => diags.push(Diagnostic::warning("page-object-skipped", e.to_string()).at(page_file, None)),
        }
    }
    let list: Vec<PageObjectSpec> = specs.values().cloned().collect();
    let (map, d) = build_navigation_map(&list);
    diags.extend(d);
    Ok(AppModel { index, graph, registry, specs, map, diagnostics: dedup_diagnostics(diags) })
}

fn dedup_diagnostics(diags: Vec<Diagnostic>) -> Vec<Diagnostic> {
    let mut seen = HashSet::new();
    diags.into_iter().filter(|d| seen.insert(serde_json::to_string(d).expect("diagnostic serializes"))).collect()
}

/// Path listing for `target`, as printed by `explain`.
pub fn explain(cfg: &PipelineConfig, target: &str) -> Result<String, PipelineError> {
    cfg.validate()?;
    let model = build_app_model(cfg)?;
    explain_in(&model.map, cfg, target)
}

pub fn explain_in(map: &NavigationMap, cfg: &PipelineConfig, target: &str) -> Result<String, PipelineError> {
    let entry = cfg.entry_page.as_str();
    for page in [entry, target] {
        if !map.contains(page) {
            return Err(PipelineError::UnknownPage(page.to_string()));
        }
    }
    if target == entry {
        return Ok(format!("Path 1: {entry} (length 0)\n"));
    }
    let search = find_paths(map, entry, &BTreeSet::from([target.to_string()]), cfg.path_query())
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    if search.paths.is_empty() {
        return Ok(format!("no paths within depth {}\n", cfg.depth_limit));
    }
    Ok(render_paths(&search.paths))
}

struct Templates {
    page_object: Template,
    ui_test: Template,
    example: String,
}

fn load_templates(cfg: &PipelineConfig) -> Result<Templates, PipelineError> {
    let page_object = match &cfg.templates.page_object {
        Some(p) => Template::load(p)?,
        None => crate::pageobject::default_template().clone(),
    };
    let ui_test = match &cfg.templates.ui_test {
        Some(p) => Template::load(p)?,
        None => crate::uitest::default_template().clone(),
    };
    let example = match &cfg.templates.example {
        Some(p) => read_required(p)?,
        None => EXAMPLE_PAGE_OBJECT.to_string(),
    };
    Ok(Templates { page_object, ui_test, example })
}

fn stub_behavior(cfg: &StubConfig) -> Result<StubBehavior, ConfigError> {
    let mut canned = BTreeMap::new();
    for (task, path) in &cfg.canned {
        canned.insert(*task, read_required(path)?);
    }
    Ok(StubBehavior {
        canned,
        drop_scenarios: cfg.drop_scenarios.clone(),
        drop_tests: cfg.drop_tests.clone(),
        digest_limit: cfg.digest_limit,
    })
}

/// The client for `cfg.mode`, plus the recorder to save in record mode.
pub fn build_client(cfg: &PipelineConfig) -> Result<(LlmClient, Option<Arc<RecordingProvider>>), PipelineError> {
    let p = &cfg.provider;
    let http = || HttpProvider::new(p.base_url.clone(), p.api, p.timeout_secs);
    let mut recorder = None;
    let provider: Arc<dyn Provider> = match cfg.mode {
        Mode::Stub => Arc::new(StubProvider::new(stub_behavior(&cfg.stub)?)),
        Mode::Live => Arc::new(http()),
        Mode::Record => {
            let r = Arc::new(RecordingProvider::new(Box::new(http())));
            recorder = Some(Arc::clone(&r));
            r
        }
        Mode::Replay => {
            let fixture = p.fixture.as_deref().expect("validated");
            Arc::new(ReplayProvider::load(fixture).map_err(|e| ConfigError::Invalid(e.to_string()))?)
        }
    };
    let audit = Arc::new(AuditLog::new(p.redact));
    Ok((LlmClient::new(provider, p.model_map(), p.concurrency, audit), recorder))
}

/// JSON change sets start with `{`; anything else is a path list.
pub fn parse_changes(issue_key: &str, doc: &str) -> Result<ChangeSet, IngestError> {
    if doc.trim_start().starts_with('{') {
        parse_changeset(doc)
    } else {
        parse_path_list(issue_key, doc)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub dry_run: bool,
    /// Also copy page objects and tests into the test root.
    pub install: bool,
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub report: PipelineReport,
    /// `<output_dir>/<ISSUE-KEY>`.
    pub out_dir: PathBuf,
}

struct Output {
    kind: &'static str,
    rel: String,
    text: String,
    install: Option<PathBuf>,
}

fn artifact(o: &Output) -> Artifact {
    Artifact {
        kind: o.kind.to_string(),
        path: o.rel.clone(),
        sha256: hex::encode(Sha256::digest(o.text.as_bytes())),
        bytes: o.text.len(),
    }
}

fn merge_features(features: &[GherkinFeature]) -> Option<GherkinFeature> {
    let kept: Vec<&GherkinFeature> = features.iter().filter(|f| !f.scenarios.is_empty()).collect();
    let (first, rest) = kept.split_first()?;
    let mut merged = (*first).clone();
    if rest.is_empty() {
        return Some(merged);
    }
    let shared = rest.iter().all(|f| f.background == first.background);
    merged.scenarios.clear();
    if !shared {
        merged.background = None;
    }
    for f in &kept {
        for s in &f.scenarios {
            let mut s = s.clone();
            if !shared {
                if let Some(bg) = &f.background {
                    s.steps.splice(0..0, bg.iter().cloned());
                }
            }
            merged.scenarios.push(s);
        }
    }
    Some(merged)
}

fn test_install_dir(cfg: &PipelineConfig, package: &str) -> PathBuf {
    let prefix = cfg.ui_tests.package_prefix.as_str();
    let rest = package.strip_prefix(prefix).map_or(package, |r| r.trim_start_matches('.'));
    let mut dir = cfg.test_root.join(&cfg.ui_tests.test_root);
    for part in rest.split('.').filter(|p| !p.is_empty()) {
        dir.push(part);
    }
    dir
}

fn finish(
    report: &PipelineReport,
    out_dir: &Path,
    diags: &[Diagnostic],
    audit: &AuditLog,
    dry_run: bool,
) -> Result<PathBuf, PipelineError> {
    let report_path = out_dir.join("report.json");
    write_file(&report_path, &report.to_json())?;
    if dry_run {
        let manifest = Manifest {
            schema_version: REPORT_SCHEMA_VERSION,
            issue_key: report.issue_key.clone(),
            artifacts: report.artifacts.clone(),
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        write_file(&out_dir.join("manifest.json"), &text)?;
        return Ok(report_path);
    }
    let mut buf = Vec::new();
    audit.write_jsonl(&mut buf).map_err(io_err("serializing audit log"))?;
    write_file(&out_dir.join("audit.jsonl"), &String::from_utf8(buf).expect("utf-8 json"))?;
    let mut buf = Vec::new();
    diagnostics::write_jsonl(&mut buf, diags).map_err(io_err("serializing diagnostics"))?;
    write_file(&out_dir.join("diagnostics.jsonl"), &String::from_utf8(buf).expect("utf-8 json"))?;
    Ok(report_path)
}

/// Runs every stage for one issue. Non-fatal problems end up in the
/// report's diagnostics; only the failures listed in [`PipelineError`]
/// stop the run.
pub fn run_pipeline(
    cfg: &PipelineConfig,
    issue_doc: &str,
    changes_doc: &str,
    opts: RunOptions,
) -> Result<PipelineRun, PipelineError> {
    cfg.validate()?;
    let issue = parse_issue(issue_doc)?;
    let changes = parse_changes(&issue.key, changes_doc)?;
    let templates = load_templates(cfg)?;
    let (client, recorder) = build_client(cfg)?;
    let out_dir = cfg.output_dir.join(&issue.key);
    let mut report = PipelineReport::empty(&issue.key);
    let mut diags = Vec::new();
    if !changes.issue_key.is_empty() && changes.issue_key != issue.key {
        diags.push(Diagnostic::warning(
            "issue-key-mismatch",
            format!("change set belongs to {}, issue is {}", changes.issue_key, issue.key),
        ));
    }

    // Page objects.
    let clock = Instant::now();
    let model = build_app_model(cfg)?;
    diags.extend(model.diagnostics.iter().cloned());
    let suffix = cfg.page_objects.page_suffix.as_str();
    let ui_changed = filter_ui_files(&changes, &cfg.filter);
    let (affected_files, d) = affected_screens(&ui_changed, &model.graph, suffix);
    diags.extend(d);
    let affected: Vec<&PageObjectSpec> =
        model.specs.values().filter(|s| affected_files.contains(&s.source_page_file)).collect();
    report.affected_pages = affected.iter().map(|s| s.page_id.clone()).collect();
    log::info!("{}: {} changed UI files, affected pages {:?}", issue.key, ui_changed.len(), report.affected_pages);
    if affected.is_empty() {
        diags.push(Diagnostic::error("no-affected-pages", "no changed file belongs to any page"));
        report.diagnostics = dedup_diagnostics(diags);
        let path = finish(&report, &out_dir, &report.diagnostics, client.audit(), opts.dry_run)?;
        return Err(PipelineError::NoWork { issue_key: issue.key, report: path });
    }

    let mut outputs = Vec::new();
    for spec in &affected {
        let rendered = render_page_object(spec, &templates.page_object)?;
        let ctx = LintContext::for_spec(spec, &cfg.page_objects);
        let text = if cfg.refine {
            let o = refine_page_object(&spec.page_id, &rendered, &templates.example, &ctx, &client);
            diags.extend(o.diagnostics);
            o.text
        } else {
            rendered
        };
        for v in lint_page_object(&text, &ctx) {
            diags.push(
                Diagnostic::warning("lint-violation", format!("{}: {}", v.rule, v.message))
                    .at(spec.output_path.clone(), Some(v.line)),
            );
        }
        outputs.push(Output {
            kind: "page_object",
            rel: format!("pageobjects/{}", spec.output_path),
            text,
            install: Some(cfg.test_root.join(&spec.output_path)),
        });
    }
    report.counts.page_objects = outputs.len();
    report.stage_seconds.page_objects = clock.elapsed().as_secs_f64();

    // Navigation and Gherkin.
    let clock = Instant::now();
    let entry = cfg.entry_page.as_str();
    if !model.map.contains(entry) {
        return Err(PipelineError::UnknownPage(entry.to_string()));
    }
    diags.extend(validate_map(&model.map, entry));
    let mut targets: BTreeSet<String> = report.affected_pages.iter().cloned().collect();
    let changed_keys = extract_widget_keys(
        &ui_changed.iter().filter(|f| model.index.text(f).is_some()).cloned().collect::<Vec<_>>(),
        &model.index,
        &KeyScanOptions::default(),
    );
    targets
        .extend(changed_keys.keys.iter().filter_map(|k| k.key.target_page.clone()).filter(|p| model.map.contains(p)));
    let search = find_paths(&model.map, entry, &targets, cfg.path_query()).map_err(|e| match e {
        NavMapError::UnknownEntry(p) => PipelineError::UnknownPage(p),
        other => ConfigError::Invalid(other.to_string()).into(),
    })?;
    diags.extend(search.diagnostics);
    let paths = search.paths;
    log::info!("{} navigation paths to {} targets", paths.len(), targets.len());

    let sources: Vec<(String, String)> =
        ui_changed.iter().filter_map(|f| model.index.text(f).map(|t| (f.clone(), t.to_string()))).collect();
    let (summaries, d) = summarize_sources(&sources, &client, cfg.prompt);
    diags.extend(d);
    let prompt = build_scenario_prompt(&issue, &summaries, &paths, cfg.prompt);
    let candidates = match generate_scenarios(&prompt, &client) {
        Ok(c) => c,
        Err(e) => {
            diags.push(Diagnostic::error("generation-failed", format!("scenario generation failed: {e}")));
            report.usage = crate::llm::aggregate_usage(&client.usage());
            report.stage_seconds.gherkin = clock.elapsed().as_secs_f64();
            report.diagnostics = dedup_diagnostics(diags);
            let path = finish(&report, &out_dir, &report.diagnostics, client.audit(), opts.dry_run)?;
            return Err(PipelineError::Provider { source: e, report: Some(path) });
        }
    };
    report.counts.candidates = candidates.len();
    log::info!("{} feature candidates", candidates.len());
    let (valid, d) = validate_candidates(&candidates, client.audit());
    diags.extend(d);
    report.counts.scenarios_generated = valid.iter().map(|f| f.scenarios.len()).sum();
    let unique = dedup_scenarios(&valid, cfg.dedup_threshold, client.audit());
    let reviewed = review_scenarios(&unique, &issue, &client);
    diags.extend(reviewed.diagnostics);
    let feature = merge_features(&reviewed.features);
    report.counts.scenarios_retained = feature.as_ref().map_or(0, |f| f.scenarios.len());
    if let Some(f) = &feature {
        outputs.push(Output {
            kind: "feature",
            rel: format!("features/{}.feature", issue.key),
            text: render_feature(f),
            install: None,
        });
        report.counts.features = 1;
    } else {
        diags.push(Diagnostic::warning("no-scenarios", "no scenario survived validation and review"));
    }
    report.stage_seconds.gherkin = clock.elapsed().as_secs_f64();

    // UI tests.
    let clock = Instant::now();
    let (script, d) = build_test_script(&issue, entry, &paths, &model.map, &model.registry, &cfg.ui_tests)?;
    diags.extend(d);
    report.counts.tests_generated = script.tests.len();
    let features: Vec<GherkinFeature> = feature.into_iter().collect();
    let mut outcomes =
        crosscheck_tests(std::slice::from_ref(&script), &features, &cfg.ui_tests, &templates.ui_test, &client)?;
    let outcome = outcomes.remove(0);
    diags.extend(outcome.diagnostics);
    report.counts.tests_retained = script.tests.len() - outcome.dropped.len();
    if report.counts.tests_retained > 0 {
        let file = script.file_name(&cfg.ui_tests);
        outputs.push(Output {
            kind: "test",
            rel: format!("tests/{file}"),
            install: Some(test_install_dir(cfg, &script.package).join(&file)),
            text: outcome.text,
        });
    }
    report.stage_seconds.ui_tests = clock.elapsed().as_secs_f64();

    report.usage = crate::llm::aggregate_usage(&client.usage());
    report.artifacts = outputs.iter().map(artifact).collect();
    report.diagnostics = dedup_diagnostics(diags);

    if !opts.dry_run {
        for o in &outputs {
            write_file(&out_dir.join(&o.rel), &o.text)?;
            if opts.install {
                if let Some(target) = &o.install {
                    write_file(target, &o.text)?;
                }
            }
        }
        if let (Some(rec), Some(path)) = (&recorder, &cfg.provider.fixture) {
            rec.fixture().save(path).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
    }
    finish(&report, &out_dir, &report.diagnostics, client.audit(), opts.dry_run)?;
    Ok(PipelineRun { report, out_dir })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gherkin::{Scenario, Step, StepKeyword};

    fn feature(name: &str, bg: Option<&str>, titles: &[&str]) -> GherkinFeature {
        let step = |k, t: &str| Step { keyword: k, text: t.to_string() };
        GherkinFeature {
            name: name.into(),
            tags: Vec::new(),
            description: Vec::new(),
            background: bg.map(|b| vec![step(StepKeyword::Given, b)]),
            scenarios: titles
                .iter()
                .map(|t| Scenario {
                    title: t.to_string(),
                    tags: Vec::new(),
                    steps: vec![step(StepKeyword::When, "x"), step(StepKeyword::Then, "y")],
                })
                .collect(),
        }
    }

    #[test]
    fn merge_inlines_differing_backgrounds() {
        let m = merge_features(&[feature("A", Some("logged in"), &["one"]), feature("B", None, &["two"])]).unwrap();
        assert_eq!(m.name, "A");
        assert!(m.background.is_none());
        assert_eq!(m.scenarios[0].steps[0].text, "logged in");
        assert_eq!(m.scenarios[1].steps.len(), 2);
        crate::gherkin::validate_feature(&render_feature(&m)).unwrap_err();
    }

    #[test]
    fn merge_keeps_shared_background() {
        let m =
            merge_features(&[feature("A", Some("bg"), &["one"]), feature("B", Some("bg"), &["two", "three"])]).unwrap();
        assert_eq!(m.background.as_ref().unwrap().len(), 1);
        assert_eq!(m.scenarios.len(), 3);
        crate::gherkin::validate_feature(&render_feature(&m)).unwrap();
        assert!(merge_features(&[feature("A", None, &[])]).is_none());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(PipelineError::UnknownPage("X".into()).exit_code(), 2);
        assert_eq!(PipelineError::Ingest(IngestError::MissingKey).exit_code(), 3);
        let nw = PipelineError::NoWork { issue_key: "A-1".into(), report: PathBuf::new() };
        assert_eq!(nw.exit_code(), 4);
        let p = PipelineError::Provider { source: LlmError::Timeout(1), report: None };
        assert_eq!(p.exit_code(), 5);
    }

    #[test]
    fn install_dir_mirrors_package() {
        let cfg = PipelineConfig { test_root: PathBuf::from("/t"), ..PipelineConfig::default() };
        assert_eq!(test_install_dir(&cfg, "uitest.vehicletab"), PathBuf::from("/t/uitest/vehicletab"));
    }
}
