use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_congest-sim"))
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json report")
}

#[test]
fn spanner_seq_on_path_passes_verification() {
    let out = run(&["spanner-seq", "--graph", "gen:path:n=50", "--seed", "0", "--verify"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert_eq!(r["passed"], true);
    let run = &r["runs"][0];
    assert!(run["stretch_max"].as_u64().unwrap() <= 6);
    // a tree has no removable edge
    assert_eq!(run["edges_H"], 49);
}

#[test]
fn wbfs_stabilizes_within_budget() {
    let out = run(&["wbfs", "--graph", &fixture("grid3.txt"), "--sources", "0", "--verify"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let run = &report(&out)["runs"][0];
    // D = 4 on a 3x3 grid
    assert_eq!(run["budget"], 4);
    assert!(run["round_stabilized"].as_u64().unwrap() <= run["budget"].as_u64().unwrap());
    assert_eq!(run["complete"], true);
}

#[test]
fn short_budget_is_a_check_failure() {
    let out = run(&["wbfs", "--graph", "gen:path:n=8", "--sources", "0", "--rounds", "6"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(report(&out)["runs"][0]["complete"], false);
}

#[test]
fn malformed_file_exits_2_with_line_number() {
    let out = run(&["wbfs", "--graph", &fixture("bad_edge.txt")]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn empty_seed_list_exits_2() {
    let out = run(&["spanner-seq", "--graph", "gen:path:n=10", "--seeds", ""]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["trend", "--graph", "gen:gnp:p=0.3", "--sizes", "16", "--seeds", "5..5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_parameters_exit_2() {
    assert_eq!(
        run(&["spanner-seq", "--graph", "gen:path:n=10", "--c", "1.5"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["wbfs", "--graph", "gen:path:n=10", "--sources", "10"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["wbfs", "--graph", "/nonexistent/g.txt"]).status.code(), Some(2));
    assert_eq!(
        run(&["trend", "--graph", "gen:gnp:p=0.3", "--sizes", "32,16"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn reports_are_byte_identical() {
    let args = [
        "spanner-dist",
        "--graph",
        "gen:gnp:n=40,p=0.2",
        "--seeds",
        "0..3",
        "--verify",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let csv_a = run(&[&args[..], &["--format", "csv"]].concat());
    let csv_b = run(&[&args[..], &["--format", "csv"]].concat());
    assert_eq!(csv_a.stdout, csv_b.stdout);
    assert_eq!(String::from_utf8_lossy(&csv_a.stdout).lines().count(), 4);
}

#[test]
fn single_size_trend_has_one_positive_row() {
    let out = run(&[
        "trend",
        "--graph",
        "gen:gnp:p=0.3",
        "--sizes",
        "24",
        "--seeds",
        "1",
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 1);
    for col in [2, 4] {
        let v: f64 = rows[0][col].parse().unwrap();
        assert!(v.is_finite() && v > 0.0, "column {col} = {v}");
    }
}

#[test]
fn exported_spanner_verifies() {
    let dir = std::env::temp_dir().join(format!("congest-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let h = dir.join("h.txt");
    let g = "gen:gnp:n=30,p=0.3";
    let out = run(&[
        "spanner-seq",
        "--graph",
        g,
        "--seed",
        "4",
        "--export-edges",
        h.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let out = run(&["verify", "--graph", g, "--seed", "4", "--subgraph", h.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    // dropping all but one edge breaks connectivity, which verify reports as a failure
    let text = std::fs::read_to_string(&h).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap().split_whitespace().collect();
    let first = lines.next().unwrap();
    std::fs::write(&h, format!("{} 1 {}\n{first}\n", header[0], header[2])).unwrap();
    let out = run(&["verify", "--graph", g, "--seed", "4", "--subgraph", h.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn detection_and_trace_output() {
    let dir = std::env::temp_dir().join(format!("congest-trace-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let t = dir.join("t.jsonl");
    let out = run(&[
        "wbfs",
        "--graph",
        &fixture("grid3.txt"),
        "--sources",
        "0,8",
        "--verify",
        "--trace",
        t.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let trace = std::fs::read_to_string(&t).unwrap();
    for line in trace.lines() {
        serde_json::from_str::<Value>(line).expect("jsonl");
    }
    assert!(trace.lines().count() > 1);

    let out = run(&[
        "detection",
        "--graph",
        &fixture("grid3.txt"),
        "--sources",
        "all",
        "--d",
        "2",
        "--k",
        "3",
        "--verify",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let answers = &report(&out)["runs"][0]["answers"];
    assert_eq!(answers.as_array().unwrap().len(), 9);
    std::fs::remove_dir_all(&dir).ok();
}
