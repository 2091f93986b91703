use std::path::PathBuf;

use esst_core::frontend::Program;
use esst_mc::cli::{EXIT_ERROR, EXIT_SAFE, EXIT_UNSAFE};
use esst_mc::kv::Record;
use esst_mc::run_cli;
use esst_mc::trace::parse_structured;

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus").join(format!("{}.tp", name))
}

fn run(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("esst-mc").chain(args.iter().copied());
    let code = run_cli(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn exit_codes_follow_verdicts() {
    let safe = corpus("fact1");
    let (code, out, _) = run(&["check", safe.to_str().unwrap()]);
    assert_eq!(code, EXIT_SAFE, "{}", out);
    assert!(out.contains("SAFE"));

    let bug = corpus("fact1-bug");
    let (code, out, _) = run(&["check", bug.to_str().unwrap(), "--oracle=default"]);
    assert_eq!(code, EXIT_UNSAFE);
    assert!(out.contains("UNSAFE"));

    let (code, _, err) = run(&["check", "/nonexistent/missing.tp"]);
    assert_eq!(code, EXIT_ERROR);
    assert!(err.contains("missing.tp"));
    assert_eq!(run(&["check", safe.to_str().unwrap(), "--bogus"]).0, EXIT_ERROR);
    assert_eq!(run(&["--help"]).0, EXIT_SAFE);
}

#[test]
fn syntax_errors_exit_with_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.tp");
    std::fs::write(&path, "thread main { x := ; }").unwrap();
    let (code, _, err) = run(&["check", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_ERROR);
    assert!(err.starts_with("error:"));
}

#[test]
fn report_and_dump_files() {
    let dir = tempfile::tempdir().unwrap();
    let (report, dot, smt) = (dir.path().join("r.kv"), dir.path().join("arf.dot"), dir.path().join("preds.smt"));
    let bug = corpus("fact1-bug");
    let code = run(&[
        "check",
        bug.to_str().unwrap(),
        "--por=none",
        "--report",
        report.to_str().unwrap(),
        "--dump-arf",
        dot.to_str().unwrap(),
        "--dump-smt",
        smt.to_str().unwrap(),
    ])
    .0;
    assert_eq!(code, EXIT_UNSAFE);
    let text = std::fs::read_to_string(&report).unwrap();
    let records: Vec<Record> = text.lines().map(|l| Record::parse(l).unwrap()).collect();
    let run = &records[0];
    assert_eq!(run.get("record"), Some("run"));
    assert_eq!(run.get("program"), Some("fact1-bug"));
    assert_eq!(run.get("mode"), Some("none"));
    assert_eq!(run.get("verdict"), Some("UNSAFE"));
    let steps: usize = run.parse_field("trace_steps").unwrap();
    assert_eq!(records.iter().filter(|r| r.get("record") == Some("step")).count(), steps);
    assert!(std::fs::read_to_string(&dot).unwrap().starts_with("digraph"));
    assert!(std::fs::read_to_string(&smt).unwrap().lines().all(|l| l.starts_with('(') || l.starts_with(';')));
}

#[test]
fn structured_trace_round_trips() {
    let bug = corpus("fact1-bug");
    let (code, out, _) = run(&["check", bug.to_str().unwrap(), "--trace-format=structured"]);
    assert_eq!(code, EXIT_UNSAFE);
    let records: String = out.lines().filter(|l| l.starts_with("record=step")).map(|l| format!("{}\n", l)).collect();
    assert!(!records.is_empty());
    let p = Program::from_source(&std::fs::read_to_string(&bug).unwrap()).unwrap();
    let t = parse_structured(&p, &records).unwrap();
    assert!(t.last().is_error(&p));
    assert_eq!(t.steps.len(), records.lines().count());
}

#[test]
fn oracle_argument_syntax() {
    let safe = corpus("fact1");
    assert_eq!(run(&["check", safe.to_str().unwrap(), "--oracle=0,1:20"]).0, EXIT_SAFE);
    assert_eq!(run(&["check", safe.to_str().unwrap(), "--oracle=0,x:20"]).0, EXIT_ERROR);
    assert_eq!(run(&["check", safe.to_str().unwrap(), "--oracle=0,1"]).0, EXIT_ERROR);
}
