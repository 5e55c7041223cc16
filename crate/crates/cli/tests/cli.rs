use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

fn cvflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvflow"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cvflow-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn write_doc(name: &str, text: &str) -> PathBuf {
    let p = scratch(name);
    fs::write(&p, text).unwrap();
    p
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_running_example() {
    let o = cvflow(&["validate", path(&data("running_example.json"))]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("15 simplices"), "{}", stdout(&o));
}

#[test]
fn validate_rejects_missing_faces_when_strict() {
    let doc = write_doc(
        "open.json",
        r#"{"vertices": ["A", "B", "C"], "simplices": [["A","B","C"], ["A","B"], ["A"], ["B"], ["C"]]}"#,
    );
    assert_eq!(
        cvflow(&["validate", path(&doc), "--complete-critical"])
            .status
            .code(),
        Some(0)
    );
    let o = cvflow(&["validate", path(&doc), "--strict", "--complete-critical"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("AC"));
}

#[test]
fn validate_rejects_non_facet_arrow() {
    let doc = write_doc(
        "bad_arrow.json",
        r#"{"vertices": ["A", "B", "C"], "simplices": [["A","B","C"]],
            "field": {"critical": [], "arrows": [[["A"], ["A","B","C"]]]}}"#,
    );
    assert_eq!(
        cvflow(&["validate", path(&doc), "--complete-critical"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn morse_dot_has_three_nodes() {
    let o = cvflow(&["morse", path(&data("running_example.json")), "--dot"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.matches("label=").count(), 3, "{text}");
    assert_eq!(text.matches("->").count(), 2, "{text}");
    for p in ["p(t)=1\"", "p(t)=t\"", "p(t)=t^2\""] {
        assert!(text.contains(p), "{p} missing from {text}");
    }
}

#[test]
fn morse_critical_triangle_has_seven_nodes() {
    let o = cvflow(&[
        "morse",
        path(&data("critical_triangle.json")),
        "--dot",
        "--complete-critical",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).matches("label=").count(), 7);
}

#[test]
fn morse_periodic_triangle_is_one_cycle() {
    let o = cvflow(&["morse", path(&data("periodic_triangle.json")), "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let nodes = v["nodes"].as_array().unwrap();
    assert_eq!(nodes.len(), 1, "{v}");
    assert!(v.to_string().contains("1 + t"), "{v}");
}

#[test]
fn index_of_edge_pair_sets() {
    let doc = data("edge_pair.json");
    let o = cvflow(&["index", path(&doc), "--set", "EF"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("p(t) = t"), "{}", stdout(&o));
    let o = cvflow(&["index", path(&doc), "--set", "EF,E"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("p(t) = 0"), "{}", stdout(&o));
    assert_eq!(
        cvflow(&["index", path(&doc), "--set", "F"]).status.code(),
        Some(1)
    );
}

#[test]
fn verify_passes_and_corruption_fails() {
    let doc = data("running_example.json");
    let small = ["--samples", "40", "--field-samples", "500"];
    let o = cvflow(&[&["verify", path(&doc)][..], &small].concat());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["ok"], true);
    let o = cvflow(&[&["verify", path(&doc), "--corrupt-field"][..], &small].concat());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_with_no_samples_warns() {
    let o = cvflow(&[
        "verify",
        path(&data("running_example.json")),
        "--samples",
        "0",
        "--field-samples",
        "100",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("no samples"), "{}", stdout(&o));
}

#[test]
fn simulate_at_barycenter_is_constant() {
    let third = 1.0 / 3.0;
    let from = format!("A={third},B={third},D={}", 1.0 - 2.0 * third);
    let out = scratch("bary.csv");
    let o = cvflow(&[
        "simulate",
        path(&data("running_example.json")),
        "--from",
        &from,
        "--tmax",
        "1",
        "--out",
        path(&out),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let csv = fs::read_to_string(&out).unwrap();
    let mut rows = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').skip(1).collect::<Vec<_>>());
    let first = rows.next().unwrap();
    assert!(rows.all(|r| r == first));
    let events = fs::read_to_string(out.with_extension("events.jsonl")).unwrap();
    assert!(events.trim().is_empty());
}

#[test]
fn simulate_from_near_e_ends_in_f() {
    let o = cvflow(&[
        "simulate",
        path(&data("running_example.json")),
        "--from",
        "E=0.95,D=0.05",
        "--tmax",
        "30",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let last = text.lines().last().unwrap();
    assert!(last.ends_with(",F"), "{last}");
}

#[test]
fn simulate_rejects_bad_points() {
    let doc = data("running_example.json");
    for from in ["A=x", "A=0.5,B=0.4", "A=0.5,C=0.5", "Q=1"] {
        let o = cvflow(&["simulate", path(&doc), "--from", from]);
        assert_eq!(o.status.code(), Some(2), "{from}");
    }
}

#[test]
fn bad_epsilon_is_a_usage_error() {
    let doc = data("running_example.json");
    assert_eq!(
        cvflow(&["morse", path(&doc), "--eps", "0.1"]).status.code(),
        Some(2)
    );
    assert_eq!(
        cvflow(&["verify", path(&doc), "--eps", "1/30"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(cvflow(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn outputs_are_deterministic() {
    let doc = data("running_example.json");
    let runs = [
        vec!["morse", path(&doc), "--json"],
        vec![
            "simulate",
            path(&doc),
            "--from",
            "E=0.95,D=0.05",
            "--tmax",
            "5",
        ],
        vec![
            "verify",
            path(&doc),
            "--samples",
            "10",
            "--field-samples",
            "100",
        ],
    ];
    for args in runs {
        let a = cvflow(&args);
        let b = cvflow(&args);
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}
