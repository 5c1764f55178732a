use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_oblivroute");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("failed to spawn binary")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("terminated by signal")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn build(graph: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["build", p(graph), "-o", p(out), "--delta", "1e-3"];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn single_edge_build_eval_route() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "k2.el", "0 1\n");
    let s = dir.path().join("k2.scheme");
    let out = build(&g, &s, &[]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("T 1"));
    assert!(dir.path().join("k2.scheme.manifest.json").exists());

    let out = run(&["eval", p(&g), p(&s)]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let max: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("max_load "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((max - 1.0).abs() < 1e-12);
    assert!(text.contains("PASS"));

    let out = run(&["eval", p(&g), p(&s), "--json"]);
    let line: serde_json::Value = serde_json::from_str(stdout(&out).lines().next().unwrap()).unwrap();
    assert_eq!(line["edge"], 0);
    assert_eq!(line["pass"], true);

    let pairs = write(dir.path(), "pairs.txt", "0 1 1.0\n");
    let out = run(&["route", p(&g), p(&s), "--pairs", p(&pairs)]);
    assert_eq!(code(&out), 0);
    let flow: f64 = stdout(&out).split_whitespace().nth(2).unwrap().parse().unwrap();
    assert!((flow - 1.0).abs() < 1e-9);

    let empty = write(dir.path(), "empty.txt", "");
    let out = run(&["route", p(&g), p(&s), "--pairs", p(&empty)]);
    assert_eq!(code(&out), 0);
    let flow: f64 = stdout(&out).split_whitespace().nth(2).unwrap().parse().unwrap();
    assert_eq!(flow, 0.0);

    let bad = write(dir.path(), "bad.txt", "0 2 1.0\n");
    assert_eq!(code(&run(&["route", p(&g), p(&s), "--pairs", p(&bad)])), 1);
}

#[test]
fn route_through_a_table_matches_direct_routing() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.el");
    let gen = run(&["generate", "connected", "--n", "12", "--extra", "8", "--seed", "3", "-o", p(&g)]);
    assert_eq!(code(&gen), 0);
    let s = dir.path().join("g.scheme");
    assert_eq!(code(&build(&g, &s, &["--seed", "1"])), 0);
    let pairs = write(dir.path(), "pairs.txt", "0 5 2.0\n3 7 -1.0\n");
    let direct = stdout(&run(&["route", p(&g), p(&s), "--pairs", p(&pairs)]));
    let table = dir.path().join("g.table");
    let args = ["route", p(&g), p(&s), "--pairs", p(&pairs), "--table", p(&table), "--target", "4"];
    let first = stdout(&run(&args));
    assert!(table.exists());
    let second = stdout(&run(&args));
    assert_eq!(first, second);
    let values = |t: &str| -> Vec<f64> { t.lines().map(|l| l.split_whitespace().nth(2).unwrap().parse().unwrap()).collect() };
    for (a, b) in values(&direct).iter().zip(values(&first)) {
        assert!((a - b).abs() <= 1e-6);
    }
}

#[test]
fn rejects_bad_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let disconnected = write(dir.path(), "d.el", "0 1\n2 3\n");
    assert_eq!(code(&build(&disconnected, &dir.path().join("d.scheme"), &[])), 1);
    let looped = write(dir.path(), "l.el", "0 0\n");
    assert_eq!(code(&build(&looped, &dir.path().join("l.scheme"), &[])), 1);

    let g = write(dir.path(), "tri.el", "0 1\n1 2\n0 2\n");
    let s = dir.path().join("tri.scheme");
    assert_eq!(code(&build(&g, &s, &[])), 0);
    let other = write(dir.path(), "path.el", "0 1\n1 2\n");
    assert_eq!(code(&run(&["eval", p(&other), p(&s)])), 1);

    assert_eq!(code(&run(&["build"])), 1);
    assert_eq!(code(&run(&["build", p(&g), "-o", p(&s), "--eps", "2"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn builds_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.el");
    assert_eq!(code(&run(&["generate", "cycle", "--n", "10", "-o", p(&g)])), 0);
    let a = dir.path().join("a.scheme");
    let b = dir.path().join("b.scheme");
    assert_eq!(code(&build(&g, &a, &["--seed", "7"])), 0);
    assert_eq!(code(&build(&g, &b, &["--seed", "7"])), 0);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let c = dir.path().join("c.scheme");
    let out = build(&g, &c, &["--exact-loads", "--solver", "exact", "--norm", "l1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&["eval", p(&g), p(&c)]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("max_stretch"));
}

#[test]
fn bench_handles_empty_and_single_graph_ladders() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["bench", p(dir.path()), "--delta", "1e-3"]);
    assert_eq!(code(&out), 0);

    write(dir.path(), "k3.el", "0 1\n1 2\n0 2\n");
    let out = run(&["bench", p(dir.path()), "--delta", "1e-3", "--json"]);
    assert_eq!(code(&out), 0);
    let row: serde_json::Value = serde_json::from_str(stdout(&out).lines().next().unwrap()).unwrap();
    assert_eq!(row["m"], 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("no fit"));
    assert!(dir.path().join("bench.manifest.json").exists());

    assert_eq!(code(&run(&["bench", p(&dir.path().join("missing"))])), 1);
}

#[test]
fn check_reports_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.el");
    assert_eq!(code(&run(&["generate", "regular", "--n", "16", "--degree", "3", "-o", p(&g)])), 0);
    let out = run(&["check", p(&g), "--samples", "10"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).lines().filter(|l| l.starts_with("PASS")).count(), 5);
}
