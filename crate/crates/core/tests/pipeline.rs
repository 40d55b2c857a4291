mod common;

use std::fs;

use acceptgen::gherkin::validate_feature;
use acceptgen::llm::Task;
use acceptgen::pipeline::{self, explain, Mode, PipelineError, RunOptions};
use common::{comparable, fixture_config, fixture_doc, snapshot};

const KEY: &str = "NWAP-165701";

fn audit_actions(dir: &std::path::Path, action: &str, stage: &str) -> usize {
    fs::read_to_string(dir.join("audit.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap())
        .filter(|v| v["event"] == "decision" && v["action"] == action && v["stage"] == stage)
        .count()
}

#[test]
fn drivers_guide_stub_run() {
    let out = tempfile::tempdir().unwrap();
    let cfg = fixture_config(out.path());
    let run =
        pipeline::run_pipeline(&cfg, &fixture_doc("issue.json"), &fixture_doc("changes.json"), RunOptions::default())
            .unwrap();
    let r = &run.report;
    assert_eq!(r.affected_pages, ["AboutAdaptersPage", "AdaptersMainPage", "AddAdapterPage"]);
    assert_eq!(r.counts.page_objects, 3);
    assert_eq!(r.counts.features, 1);
    assert_eq!(r.counts.scenarios_retained, 2);
    assert!(r.counts.tests_retained >= 1);
    let stages: Vec<&str> = r.usage.rows.iter().map(|row| row.stage.as_str()).collect();
    assert_eq!(stages, ["page_objects", "gherkin", "ui_tests"]);

    let dir = out.path().join(KEY);
    let feature = fs::read_to_string(dir.join(format!("features/{KEY}.feature"))).unwrap();
    assert_eq!(validate_feature(&feature).unwrap().scenarios.len(), 2);
    for a in &r.artifacts {
        assert!(dir.join(&a.path).is_file(), "{}", a.path);
    }
    assert!(dir.join("audit.jsonl").is_file());
    assert!(dir.join("diagnostics.jsonl").is_file());

    let gherkin_drops = audit_actions(&dir, "drop", "gherkin");
    assert_eq!(r.counts.scenarios_generated - r.counts.scenarios_retained, gherkin_drops);
    let test_drops = audit_actions(&dir, "drop", "ui_tests");
    assert_eq!(r.counts.tests_generated - r.counts.tests_retained, test_drops);
}

#[test]
fn reruns_rewrite_identical_bytes() {
    let out = tempfile::tempdir().unwrap();
    let cfg = fixture_config(out.path());
    let run = || {
        pipeline::run_pipeline(&cfg, &fixture_doc("issue.json"), &fixture_doc("changes.json"), RunOptions::default())
            .unwrap()
    };
    run();
    let first = comparable(out.path());
    run();
    assert_eq!(first, comparable(out.path()));
}

#[test]
fn path_list_matches_json_changeset() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let list = "# git diff --name-only\n\
        lib/charging_equipments/adapters_configuration/adapters_configuration_cubit.dart\n\
        lib/charging_equipments/adapters_configuration/drivers_guide_link.dart\n\
        lib/charging_equipments/adapters_configuration/widgets/about_adapters_widget.dart\n\
        lib/charging_equipments/adapters_configuration/widgets/adapter_list_item.dart\n";
    pipeline::run_pipeline(
        &fixture_config(a.path()),
        &fixture_doc("issue.json"),
        &fixture_doc("changes.json"),
        RunOptions::default(),
    )
    .unwrap();
    pipeline::run_pipeline(&fixture_config(b.path()), &fixture_doc("issue.json"), list, RunOptions::default()).unwrap();
    assert_eq!(comparable(a.path()), comparable(b.path()));
}

#[test]
fn dry_run_writes_only_report_and_manifest() {
    let out = tempfile::tempdir().unwrap();
    let root = tempfile::tempdir().unwrap();
    let mut cfg = fixture_config(out.path());
    cfg.test_root = root.path().to_path_buf();
    let source_before = snapshot(&cfg.source_root);
    let opts = RunOptions { dry_run: true, install: true };
    let run = pipeline::run_pipeline(&cfg, &fixture_doc("issue.json"), &fixture_doc("changes.json"), opts).unwrap();
    let written: Vec<String> = snapshot(out.path()).into_keys().collect();
    assert_eq!(written, [format!("{KEY}/manifest.json"), format!("{KEY}/report.json")]);
    assert!(snapshot(root.path()).is_empty());
    assert_eq!(snapshot(&cfg.source_root), source_before);
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(out.path().join(KEY).join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["artifacts"].as_array().unwrap().len(), run.report.artifacts.len());
}

#[test]
fn install_mirrors_into_test_root_and_updates_in_place() {
    let out = tempfile::tempdir().unwrap();
    let root = tempfile::tempdir().unwrap();
    let mut cfg = fixture_config(out.path());
    cfg.test_root = root.path().to_path_buf();
    let opts = RunOptions { dry_run: false, install: true };
    let run = || pipeline::run_pipeline(&cfg, &fixture_doc("issue.json"), &fixture_doc("changes.json"), opts).unwrap();
    run();
    let po = root.path().join("pages/charging_equipments/adapters_configuration/AddAdapterPage.kt");
    let test = root.path().join("uitest/vehicletab/AddLinkToDriversGuide.kt");
    assert!(po.is_file());
    assert!(test.is_file());
    let installed = snapshot(root.path());

    // Second run reads the installed page objects as prior sources.
    run();
    assert_eq!(snapshot(root.path()), installed);
}

#[test]
fn empty_changeset_is_no_work() {
    let out = tempfile::tempdir().unwrap();
    let cfg = fixture_config(out.path());
    let err = pipeline::run_pipeline(&cfg, &fixture_doc("issue.json"), "", RunOptions::default()).unwrap_err();
    assert_eq!(err.exit_code(), 4);
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(out.path().join(KEY).join("report.json")).unwrap()).unwrap();
    assert_eq!(report["counts"]["page_objects"], 0);
    assert_eq!(report["artifacts"].as_array().unwrap().len(), 0);
}

#[test]
fn non_ui_changes_are_no_work() {
    let out = tempfile::tempdir().unwrap();
    let cfg = fixture_config(out.path());
    let changes = "lib/utils/deeplink_launcher.dart\nlib/repository/adapter_repository.dart\npubspec.yaml\n";
    let err = pipeline::run_pipeline(&cfg, &fixture_doc("issue.json"), changes, RunOptions::default()).unwrap_err();
    assert!(matches!(err, PipelineError::NoWork { .. }), "{err}");
}

#[test]
fn document_and_config_errors() {
    let out = tempfile::tempdir().unwrap();
    let cfg = fixture_config(out.path());
    let err = pipeline::run_pipeline(&cfg, "{\"summary\": \"no key\"}", "", RunOptions::default()).unwrap_err();
    assert_eq!(err.exit_code(), 3);
    let err =
        pipeline::run_pipeline(&cfg, &fixture_doc("issue.json"), "{\"files\": [\"../x.dart\"]}", RunOptions::default())
            .unwrap_err();
    assert_eq!(err.exit_code(), 3);

    let mut bad = cfg.clone();
    bad.mode = Mode::Replay;
    let err =
        pipeline::run_pipeline(&bad, &fixture_doc("issue.json"), &fixture_doc("changes.json"), RunOptions::default())
            .unwrap_err();
    assert_eq!(err.exit_code(), 2);
    let mut bad = cfg.clone();
    bad.entry_page = "GaragePage".into();
    let err =
        pipeline::run_pipeline(&bad, &fixture_doc("issue.json"), &fixture_doc("changes.json"), RunOptions::default())
            .unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn unreachable_backend_fails_generation_only() {
    let out = tempfile::tempdir().unwrap();
    let mut cfg = fixture_config(out.path());
    cfg.mode = Mode::Live;
    cfg.provider.base_url = "http://127.0.0.1:9".into();
    cfg.provider.timeout_secs = 2;
    let err =
        pipeline::run_pipeline(&cfg, &fixture_doc("issue.json"), &fixture_doc("changes.json"), RunOptions::default())
            .unwrap_err();
    assert_eq!(err.exit_code(), 5);
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(out.path().join(KEY).join("report.json")).unwrap()).unwrap();
    let codes: Vec<&str> =
        report["diagnostics"].as_array().unwrap().iter().map(|d| d["code"].as_str().unwrap()).collect();
    assert!(codes.contains(&"refine-failed"));
    assert!(codes.contains(&"summary-fallback"));
    assert!(codes.contains(&"generation-failed"));
    assert_eq!(report["counts"]["page_objects"], 3);
}

#[test]
fn stub_drops_are_audited() {
    let out = tempfile::tempdir().unwrap();
    let mut cfg = fixture_config(out.path());
    cfg.stub.drop_scenarios.insert("User does not have BMW Driver's Guide installed".into());
    cfg.stub.drop_tests.insert("driversGuideTest2".into());
    cfg.stub.drop_tests.insert("aboutAdaptersTest".into());
    let run =
        pipeline::run_pipeline(&cfg, &fixture_doc("issue.json"), &fixture_doc("changes.json"), RunOptions::default())
            .unwrap();
    let c = run.report.counts;
    assert_eq!((c.scenarios_generated, c.scenarios_retained), (2, 1));
    assert_eq!(c.tests_generated - c.tests_retained, 2);
    assert_eq!(audit_actions(&run.out_dir, "drop", "gherkin"), 1);
    assert_eq!(audit_actions(&run.out_dir, "drop", "ui_tests"), 2);
    let test = fs::read_to_string(run.out_dir.join("tests/AddLinkToDriversGuide.kt")).unwrap();
    assert!(!test.contains("fun driversGuideTest2()"));
    assert!(test.contains("fun driversGuideTest()"));
}

#[test]
fn canned_scenarios_may_be_fenced() {
    let out = tempfile::tempdir().unwrap();
    let mut cfg = fixture_config(out.path());
    let fenced = out.path().join("fenced.md");
    fs::write(&fenced, format!("Here you go:\n```gherkin\n{}```\n", fixture_doc("scenarios.feature"))).unwrap();
    cfg.stub.canned.insert(Task::GenerateScenarios, fenced);
    let run =
        pipeline::run_pipeline(&cfg, &fixture_doc("issue.json"), &fixture_doc("changes.json"), RunOptions::default())
            .unwrap();
    assert_eq!(run.report.counts.scenarios_retained, 2);
}

#[test]
fn explain_listings() {
    let out = tempfile::tempdir().unwrap();
    let cfg = fixture_config(out.path());
    let text = explain(&cfg, "DriversGuidePage").unwrap();
    let blocks: Vec<&str> = text.split("\n\n").collect();
    assert_eq!(blocks.len(), 3);
    assert_eq!(
        blocks[0],
        "Path 1:\n  VehicleTabPage\n  -> ElectricMobilityPage (via charging)\n  -> AdaptersMainPage (via adaptersConfiguration)\n  -> DriversGuidePage (via openDriversGuide)"
    );
    let lens: Vec<usize> = blocks.iter().map(|b| b.matches("->").count()).collect();
    assert!(lens.windows(2).all(|w| w[0] <= w[1]), "{lens:?}");

    assert_eq!(explain(&cfg, "VehicleTabPage").unwrap(), "Path 1: VehicleTabPage (length 0)\n");
    let mut shallow = cfg.clone();
    shallow.depth_limit = 1;
    assert_eq!(explain(&shallow, "SettingsPage").unwrap(), "no paths within depth 1\n");
    assert_eq!(explain(&cfg, "NowherePage").unwrap_err().exit_code(), 2);
}
