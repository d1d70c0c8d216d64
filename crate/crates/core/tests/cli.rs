use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rotor-escape"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key}= in {text}"))
        .to_string()
}

#[test]
fn green_on_p3() {
    let o = bin(&["green", "--path", "3"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert_eq!(field(&s, "alpha").parse::<f64>().unwrap(), 0.5);
    assert_eq!(field(&s, "green_origin").parse::<f64>().unwrap(), 2.0);
}

#[test]
fn green_on_lattice_reports_small_residual() {
    let o = bin(&["green", "--lattice", "d=3", "r=8"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    assert!(field(&s, "residual").parse::<f64>().unwrap() <= 1e-12);
    let alpha: f64 = field(&s, "alpha").parse().unwrap();
    assert!(alpha > 0.6 && alpha < 0.75);
}

#[test]
fn missing_edge_file_is_a_usage_error() {
    let o = bin(&[
        "green",
        "--edges",
        "/nonexistent/graph.txt",
        "--origin",
        "0",
        "--sinks",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}

#[test]
fn two_graphs_is_a_usage_error() {
    let o = bin(&["green", "--path", "3", "--star", "2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn rho_min_on_p3() {
    let o = bin(&["rho-min", "--path", "3"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.starts_with("vertex_label,rotor_index\n"), "{s}");
    assert_eq!(field(&s, "ties"), "0");
}

#[test]
fn run_on_p3_gives_rate_one_half() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let csv = dir.path().join("rates.csv");
    let o = bin(&[
        "run",
        "--path",
        "3",
        "--config",
        "rho-min",
        "--n",
        "2,4,8",
        "--report",
        report.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    for r in json["rates"].as_array().unwrap() {
        assert_eq!(r.as_f64().unwrap(), 0.5);
    }
    assert_eq!(json["invariant_ok"], true);
    let table = fs::read_to_string(&csv).unwrap();
    assert_eq!(table.lines().count(), 4);
    assert!(table.starts_with("n,rate,alpha,gap,steps,max_invariant_dev"));
}

#[test]
fn seeded_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let p = dir.path().join(name);
        let o = bin(&[
            "run",
            "--lattice",
            "d=2",
            "r=4",
            "--seed-config",
            "42",
            "--n",
            "10,100",
            "--report",
            p.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        fs::read(p).unwrap()
    };
    assert_eq!(run("a.json"), run("b.json"));
}

#[test]
fn descending_n_is_rejected() {
    let o = bin(&["run", "--path", "3", "--n", "8,4"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn step_cap_exits_with_code_3() {
    let o = bin(&[
        "run",
        "--lattice",
        "d=2",
        "r=6",
        "--n",
        "1000",
        "--max-steps",
        "10",
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn trace_files_per_n() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("trace.csv");
    let o = bin(&[
        "run",
        "--path",
        "3",
        "--n",
        "2,4",
        "--check-invariant",
        "every",
        "--trace",
        base.to_str().unwrap(),
        "--report",
        dir.path().join("r.json").to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let t2 = fs::read_to_string(dir.path().join("trace-n2.csv")).unwrap();
    let mut lines = t2.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,mover,from_label,to_label,status_change,survivors,invariant"
    );
    // four steps settle two particles on P3
    assert_eq!(lines.count(), 4);
    assert!(Path::new(&dir.path().join("trace-n4.csv")).exists());
}

#[test]
fn run_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("run.toml");
    fs::write(&spec, "[graph]\nfamily = \"path:3\"\n\n[run]\nn = [2, 4]\n").unwrap();
    let o = bin(&["run", "--spec", spec.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(json["n_values"], serde_json::json!([2, 4]));

    let o = bin(&["run", "--spec", spec.to_str().unwrap(), "--n", "6"]);
    let json: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(json["n_values"], serde_json::json!([6]));
}

#[test]
fn run_file_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("bad.toml");
    fs::write(&spec, "[graph]\nfamliy = \"path:3\"\n").unwrap();
    let o = bin(&["green", "--spec", spec.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn edge_list_input() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("p3.txt");
    fs::write(&edges, "# path\n10 20\n20 30\n").unwrap();
    let o = bin(&[
        "green",
        "--edges",
        edges.to_str().unwrap(),
        "--origin",
        "10",
        "--sinks",
        "30",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(field(&stdout(&o), "alpha").parse::<f64>().unwrap(), 0.5);
}

#[test]
fn verify_quick_passes() {
    let o = bin(&["verify", "--quick"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("all checks passed"));
}

#[test]
fn verify_single_graph() {
    let o = bin(&["verify", "--graph", "path:3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn verify_detects_corrupted_weights() {
    let o = bin(&[
        "verify",
        "--quick",
        "--graph",
        "path:5",
        "--inject-corrupt-weights",
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL"));
}
