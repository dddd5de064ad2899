use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mpa(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mpa"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

const TRIMS: &str = r#"{"trims": [
    {"id": 1, "v": 0.0, "delta": 0.0},
    {"id": 7, "v": 0.8, "delta": 0.0},
    {"id": 8, "v": 0.8, "delta": 0.12}
]}"#;

const PAIRS: &str = r#"{"pairs": [[1, 7], [7, 1], [7, 8], [8, 7]]}"#;

#[test]
fn build_and_restrict() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("trims.json"), TRIMS).unwrap();
    fs::write(d.join("pairs.json"), PAIRS).unwrap();
    let out = mpa(
        d,
        &[
            "build-automaton",
            "--trims",
            "trims.json",
            "--objectives",
            "J2,J3",
            "--connectivity",
            "pairs.json",
            "--out",
            "ua.json",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let ua = mpa_core::automaton::load_automaton(&d.join("ua.json")).unwrap();
    assert_eq!(ua.trims.len(), 3);
    assert_eq!(ua.maneuvers.len(), 8);

    // the presets need all twelve trims
    let out = mpa(
        d,
        &[
            "subgraph",
            "--automaton",
            "ua.json",
            "--preset",
            "D",
            "--out",
            "d.json",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn bad_inputs_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("broken.json"),
        "{\"format\": \"motion-primitive-automaton\", \"version\": 9}",
    )
    .unwrap();
    let out = mpa(
        d,
        &["subgraph", "--automaton", "broken.json", "--preset", "C"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("version 9"));

    let out = mpa(
        d,
        &["subgraph", "--automaton", "broken.json", "--preset", "E"],
    );
    assert!(!out.status.success());

    fs::write(d.join("pairs.json"), r#"{"pairs": [[1, 7]], "extra": 1}"#).unwrap();
    let out = mpa(d, &["build-automaton", "--connectivity", "pairs.json"]);
    assert_eq!(out.status.code(), Some(2));

    let out = mpa(d, &["report", "--log", "missing"]);
    assert_eq!(out.status.code(), Some(1));

    fs::write(
        d.join("scenario.json"),
        r#"{"name": "x", "map_extent": [1, 1], "steps": 1, "step_duration": 0.2, "vehicles": []}"#,
    )
    .unwrap();
    let out = mpa(
        d,
        &[
            "simulate",
            "--scenario",
            "scenario.json",
            "--automaton",
            "broken.json",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn pareto_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = mpa(
        d,
        &[
            "pareto",
            "--from",
            "7",
            "--to",
            "8",
            "--weights",
            "5",
            "--out",
            "front",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(d.join("front/front.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("w,J1,J2,J3"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert!(!rows.is_empty());
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r.len(), 4);
        assert!((r[3] - 0.5 * (r[1] + r[2])).abs() < 1e-12);
        assert!(d.join(format!("front/trajectory_{i}.csv")).exists());
    }
    for svg in ["front.svg", "traces.svg"] {
        assert!(fs::read_to_string(d.join("front").join(svg))
            .unwrap()
            .starts_with("<svg"));
    }
}

#[test]
fn simulate_plan_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = mpa(d, &["build-automaton", "--out", "ua.json"]);
    assert!(out.status.success());
    assert!(mpa(d, &["scenario", "--out", "scenario.json"])
        .status
        .success());

    let out = mpa(
        d,
        &[
            "plan",
            "--automaton",
            "ua.json",
            "--scenario",
            "scenario.json",
            "--vehicle",
            "blue",
            "--steps",
            "1",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let plan: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(plan["vehicle"], "blue");
    assert_eq!(plan["steps"].as_array().unwrap().len(), 8);
    assert!(d.join("plan.svg").exists());

    let out = mpa(
        d,
        &[
            "simulate",
            "--scenario",
            "scenario.json",
            "--automaton",
            "ua.json",
            "--preset-map",
            "red=A,blue=C,green=C",
            "--steps",
            "10",
            "--out",
            "run",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let printed = String::from_utf8_lossy(&out.stdout).to_string();
    assert!(printed.lines().nth(1).unwrap().starts_with("red,A,"));

    let out = mpa(d, &["report", "--log", "run"]);
    assert!(out.status.success());
    // timings survive the CSV round trip, so the recomputed table is identical
    assert_eq!(String::from_utf8_lossy(&out.stdout), printed);

    let out = mpa(
        d,
        &[
            "simulate",
            "--automaton",
            "ua.json",
            "--preset-map",
            "purple=A",
            "--steps",
            "1",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}
