use std::path::Path;
use std::process::{Command, Output};

fn intentdrive(root: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_intentdrive"))
        .env("DEEPGOAL_DATA", root)
        .args(args)
        .output()
        .unwrap()
}

fn ok(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn simulate_plan_eval_round() {
    let root = tempfile::tempdir().unwrap();
    let sim = ok(&intentdrive(
        root.path(),
        &["simulate", "--world", "bundled:straight", "--route", "main", "--seed", "3", "--export-stride", "10"],
    ));
    assert!(sim["frames"].as_u64().unwrap() > 100);
    let run = root.path().join("runs/straight-main-s3");
    assert!(run.join("manifest.jsonl").is_file());

    // run given by name under the data root
    let plan = ok(&intentdrive(root.path(), &["plan", "straight-main-s3"]));
    assert_eq!(plan["name"], "oracle-r7-none");
    let held = ok(&intentdrive(
        root.path(),
        &["plan", "straight-main-s3", "--delay", "6", "--baseline", "hold-last", "--resolution", "11"],
    ));
    assert_eq!(held["name"], "oracle-r11-none-d6-hold_last");
    ok(&intentdrive(root.path(), &["plan", run.to_str().unwrap(), "--reference"]));

    let summaries = ok(&intentdrive(root.path(), &["eval", "straight-main-s3"]));
    assert_eq!(summaries.as_array().unwrap().len(), 3);
    let csv = std::fs::read_to_string(run.join("eval/accuracy.csv")).unwrap();
    assert!(csv.starts_with("plan,offset_level,resolution,delta_g,accuracy\n"));
    assert!(csv.contains("reference,none,7,0,100\n"));

    let only = root.path().join("only");
    let one = ok(&intentdrive(
        root.path(),
        &["eval", "straight-main-s3", "--plan", "reference", "--out", only.to_str().unwrap()],
    ));
    assert_eq!(one.as_array().unwrap().len(), 1);
    assert!(only.join("summary.json").is_file());
}

#[test]
fn config_file_and_flags_combine() {
    let root = tempfile::tempdir().unwrap();
    let cfg = root.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"world": "bundled:straight", "route": "main", "export_stride": 50, "seed": 9}"#).unwrap();
    let out = root.path().join("a");
    ok(&intentdrive(
        root.path(),
        &["simulate", "--config", cfg.to_str().unwrap(), "--seed", "4", "--out", out.to_str().unwrap()],
    ));
    let written: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("config.json")).unwrap()).unwrap();
    assert_eq!(written["seed"], 4);
    assert_eq!(written["export_stride"], 50);

    std::fs::write(&cfg, r#"{"wrold": "bundled:straight"}"#).unwrap();
    let bad = intentdrive(root.path(), &["simulate", "--config", cfg.to_str().unwrap()]);
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("wrold"));
}

#[test]
fn align_and_annotate_verbs() {
    let root = tempfile::tempdir().unwrap();
    let run = root.path().join("r");
    ok(&intentdrive(
        root.path(),
        &["simulate", "--world", "bundled:straight", "--route", "main", "--export-stride", "20", "--out", run.to_str().unwrap()],
    ));
    let aligned = root.path().join("align.jsonl");
    let s = ok(&intentdrive(
        root.path(),
        &[
            "align",
            "--track",
            run.join("poses.jsonl").to_str().unwrap(),
            "--route",
            run.join("route.jsonl").to_str().unwrap(),
            "--out",
            aligned.to_str().unwrap(),
        ],
    ));
    assert!(s["max_distance"].as_f64().unwrap() < 0.6);
    assert_eq!(std::fs::read(aligned).unwrap(), std::fs::read(run.join("alignment.jsonl")).unwrap());

    let a = ok(&intentdrive(root.path(), &["annotate", run.to_str().unwrap(), "--frame", "0", "--frame", "20"]));
    assert_eq!(a["annotated"], 2);
    assert_eq!(
        std::fs::read(run.join("annotations/0020.mask.dgrid")).unwrap(),
        std::fs::read(run.join("frames/0020.mask.dgrid")).unwrap()
    );
}

#[test]
fn off_road_route_fails_with_frame() {
    let root = tempfile::tempdir().unwrap();
    let world = r#"{
        "roads": [{"name": "r", "width": 6.0, "points": [[-10.0, 0.0], [80.0, 0.0]]}],
        "routes": {"astray": [[0.0, 0.0], [20.0, 0.0], [30.0, 40.0]]}
    }"#;
    std::fs::write(root.path().join("w.json"), world).unwrap();
    let out = intentdrive(root.path(), &["simulate", "--world", "w.json", "--route", "astray"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error: "), "{err}");
    assert!(err.contains("frame"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn plan_needs_a_run() {
    let root = tempfile::tempdir().unwrap();
    let out = intentdrive(root.path(), &["plan", "nowhere"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing"));
}

#[test]
fn masks_and_reference_conflict() {
    let root = tempfile::tempdir().unwrap();
    let out = intentdrive(root.path(), &["plan", "x", "--masks", "m", "--reference"]);
    assert_eq!(out.status.code(), Some(2));
}
