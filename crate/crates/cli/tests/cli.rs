use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dyadsum"))
}

fn problem(name: &str) -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "..", "..", "problems", name].iter().collect()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn verify(name: &str) -> Output {
    run(&["verify", problem(name).to_str().unwrap()])
}

#[test]
fn stage4_is_bounded() {
    let o = verify("stage4.dsum");
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("-1/4"));
}

#[test]
fn stage1_diverges_at_fixed_parameter() {
    let o = verify("stage1.dsum");
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("divergent at fixed parameter"));
}

#[test]
fn empty_region_is_bounded() {
    let o = verify("empty.dsum");
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("empty region"));
}

#[test]
fn elementary_sum_grows_linearly() {
    let o = verify("elementary.dsum");
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("Unbounded exponent=1 "), "{}", stdout(&o));
}

#[test]
fn json_report_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let file = problem("stage3.dsum");
    for out in [&a, &b] {
        let o = run(&["verify", file.to_str().unwrap(), "--json", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(1));
    }
    let (a, b) = (std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn parse_error_exits_65() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.dsum");
    std::fs::write(&f, "param N\nvar A\nsum A^(1/2\n").unwrap();
    let o = run(&["verify", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(65));
    assert!(String::from_utf8_lossy(&o.stderr).contains("column 7"), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn missing_file_exits_66() {
    assert_eq!(run(&["verify", "/nonexistent/x.dsum"]).status.code(), Some(66));
}

#[test]
fn bad_dimension_is_a_usage_error() {
    let o = run(&["paper", "--kind", "cucv", "--n", "4", "--s", "-1/2", "--theta", "5/8"]);
    assert_eq!(o.status.code(), Some(64));
    assert_eq!(run(&["verify"]).status.code(), Some(64));
}

#[test]
fn worked_triple_matches_reference() {
    let o = run(&["paper", "--kind", "cucv", "--n", "2", "--s", "-1/2", "--theta", "5/8"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("admissible=true"), "{out}");
    assert!(out.contains("match"), "{out}");
}

#[test]
fn coherence_triple_is_unbounded() {
    let o = run(&["paper", "--kind", "cuv", "--n", "2", "--s", "-3/10", "--theta", "11/20"]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("23ts=false"), "{out}");
    assert!(out.contains("(++-)2"), "{out}");
}

#[test]
fn two_point_sweep_writes_two_rows() {
    let o = run(&["sweep", "--kind", "cucv", "--n", "2", "--s", "-1/2:-2/5:1/10", "--theta", "5/8"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "n,s,theta,kind,verdict,exponent,log_degree,reference,match");
    assert_eq!(lines.len(), 3);
}

#[test]
fn repl_reads_commands_from_stdin() {
    let mut child = bin()
        .args(["repl", problem("stage3.dsum").to_str().unwrap(), "--engine", "symbolic"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"run\nadd where Lmax ~ Nmax^2\nrun\nbogus\nhistory\n").unwrap();
    let o = child.wait_with_output().unwrap();
    let out = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{out}");
    assert!(out.contains("stage 1: Unbounded exponent=1/8"), "{out}");
    assert!(out.contains("stage 2: Bounded exponent=-1/4"), "{out}");
    assert!(out.contains("error: unknown command `bogus`"), "{out}");
}

#[test]
fn repl_replay_reproduces_stages() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("s.txt");
    std::fs::write(&script, "run\nadd where Lmax ~ Nmax^2\nrun\n").unwrap();
    let o = bin()
        .args(["repl", problem("stage3.dsum").to_str().unwrap(), "--engine", "symbolic", "--replay", script.to_str().unwrap()])
        .stdin(Stdio::null())
        .output()
        .unwrap();
    let out = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{out}");
    assert!(out.contains("stage 2: Bounded exponent=-1/4"), "{out}");
}
