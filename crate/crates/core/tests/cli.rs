mod common;

use std::fs;
use std::process::Command;

use common::fixture_dir;

fn acceptgen() -> Command {
    Command::new(env!("CARGO_BIN_EXE_acceptgen"))
}

#[test]
fn run_then_check_outputs() {
    let out = tempfile::tempdir().unwrap();
    let dir = fixture_dir();
    let status = acceptgen()
        .arg("run")
        .arg("--config")
        .arg(dir.join("acceptgen.toml"))
        .arg("--issue")
        .arg(dir.join("issue.json"))
        .arg("--changes")
        .arg(dir.join("changes.json"))
        .arg("--out")
        .arg(out.path())
        .arg("--redact")
        .status()
        .unwrap();
    assert!(status.success());
    let base = out.path().join("NWAP-165701");
    let audit = fs::read_to_string(base.join("audit.jsonl")).unwrap();
    assert!(audit.contains("prompt_sha256"));
    assert!(!audit.contains("\"prompt\":"), "redacted log keeps texts");

    let feature = base.join("features/NWAP-165701.feature");
    let o = acceptgen().arg("validate-feature").arg(&feature).output().unwrap();
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("2 scenario(s)"));

    let po = base.join("pageobjects/pages/charging_equipments/adapters_configuration/AddAdapterPage.kt");
    assert!(acceptgen().arg("lint-po").arg(&po).status().unwrap().success());
}

#[test]
fn violations_exit_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let feature = tmp.path().join("broken.feature");
    fs::write(&feature, "Feature: x\n\nScenario: y\n  Given a\n  When b\n").unwrap();
    let o = acceptgen().arg("validate-feature").arg(&feature).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("missing Then"), "{}", String::from_utf8_lossy(&o.stdout));

    let po = tmp.path().join("Broken.kt");
    fs::write(&po, "class BrokenPage(previousPage: BasePage?) : Activity(previousPage) {\n}\n").unwrap();
    let o = acceptgen().arg("lint-po").arg(&po).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = fixture_dir();
    let empty = tmp.path().join("empty.txt");
    fs::write(&empty, "").unwrap();
    let run = |changes: &std::path::Path, config: &std::path::Path| {
        acceptgen()
            .args(["run", "--out"])
            .arg(tmp.path())
            .arg("--config")
            .arg(config)
            .arg("--issue")
            .arg(dir.join("issue.json"))
            .arg("--changes")
            .arg(changes)
            .status()
            .unwrap()
            .code()
    };
    assert_eq!(run(&empty, &dir.join("acceptgen.toml")), Some(4));
    assert_eq!(run(&empty, &tmp.path().join("missing.toml")), Some(2));
    assert_eq!(run(&tmp.path().join("missing.json"), &dir.join("acceptgen.toml")), Some(3));

    let code = acceptgen()
        .args(["explain", "--target", "NowherePage", "--config"])
        .arg(dir.join("acceptgen.toml"))
        .status()
        .unwrap()
        .code();
    assert_eq!(code, Some(2));
}

#[test]
fn navmap_export_round_trips() {
    let dir = fixture_dir();
    let o = acceptgen()
        .args(["navmap", "export", "--format", "dot", "--config"])
        .arg(dir.join("acceptgen.toml"))
        .output()
        .unwrap();
    assert!(o.status.success());
    let dot = String::from_utf8(o.stdout).unwrap();
    let map = acceptgen::navmap::from_dot(&dot).unwrap();
    assert!(map.edge("VehicleTabPage", "charging", "ElectricMobilityPage").is_some());
    assert_eq!(map.kind("DriversGuidePage"), Some(acceptgen::navmap::NodeKind::External));
}
