use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const TEXAMPLE: &str = "tbox:\nA <= B\nA & B <= C\nC <= exists r . Top\nexists r . Top <= D\nabox:\nA(a)\n";
const TPRIME: &str = "tbox:\nexists r . A & exists s . A <= A\nabox:\nr(a, b)\ns(a, b)\nA(b)\n";

fn strata(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_strata"))
        .args(args)
        .env("STRATA_COLOR", "0")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn ask_texample_is_true() {
    let dir = TempDir::new().unwrap();
    let kb = write(&dir, "texample.kb", TEXAMPLE);
    let out = strata(&["ask", s(&kb), "--query", "D(a)"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("answer: true"), "{text}");
    assert!(text.contains("consistent: true"));
}

#[test]
fn ask_every_engine_agrees() {
    let dir = TempDir::new().unwrap();
    let kb = write(&dir, "texample.kb", TEXAMPLE);
    for engine in ["collapsed", "naive", "oracle"] {
        for (q, code) in [("D(a)", 0), ("C(a)", 0), ("A(a)", 0), ("Unknown(a)", 1)] {
            let out = strata(&["ask", s(&kb), "--query", q, "--engine", engine]);
            assert_eq!(out.status.code(), Some(code), "{engine} {q}");
        }
    }
}

#[test]
fn ask_witness_prints_a_run() {
    let dir = TempDir::new().unwrap();
    let kb = write(&dir, "texample.kb", TEXAMPLE);
    let out = strata(&["ask", s(&kb), "--query", "D(a)", "--witness"]);
    let text = stdout(&out);
    assert!(text.contains("witness_steps:"));
    assert!(text.contains("run aut(D) from a"));
}

#[test]
fn ask_on_inconsistent_kb_is_true() {
    let dir = TempDir::new().unwrap();
    let kb = write(&dir, "bad.kb", "tbox:\nA <= Bot\nabox:\nA(a)\nTop(b)\n");
    let out = strata(&["ask", s(&kb), "--query", "Z(b)"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("consistent: false"));
    assert!(text.contains("reason: inconsistent knowledge base"));
}

#[test]
fn check_tprime_is_rejected() {
    let dir = TempDir::new().unwrap();
    let kb = write(&dir, "tprime.kb", TPRIME);
    let out = strata(&["check", s(&kb)]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.starts_with("status: REJECTED\n"), "{text}");
    assert!(text.contains("violation: conjunction rule"), "{text}");
    assert!(text.contains("violation: existential premise rule"), "{text}");
}

#[test]
fn check_texample_prints_heights_and_note() {
    let dir = TempDir::new().unwrap();
    let kb = write(&dir, "texample.kb", TEXAMPLE);
    let out = strata(&["check", s(&kb)]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("status: ACCEPTED\n"), "{text}");
    for line in [
        "height concept A: 0",
        "height concept B: 0",
        "height concept C: 1",
        "height concept D: 1",
        "height role r: 1",
    ] {
        assert!(text.contains(line), "missing {line}:\n{text}");
    }
    assert!(text.contains("note: `exists r . Top <= D`"));
}

#[test]
fn check_with_order_section() {
    let dir = TempDir::new().unwrap();
    let good = write(&dir, "good.kb", &format!("{TEXAMPLE}order:\nA\nB\nC r\nD\n"));
    let out = strata(&["check", s(&good)]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("heights: order"));
    let flat = write(&dir, "flat.kb", &format!("{TEXAMPLE}order:\nA B C D r\n"));
    let out = strata(&["check", s(&flat)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("violation: conjunction rule"));
}

#[test]
fn rewrite_text_and_dot() {
    let dir = TempDir::new().unwrap();
    let kb = write(&dir, "loop.kb", "tbox:\nexists r . A <= A\nabox:\nA(a)\n");
    let out = strata(&["rewrite", s(&kb), "--for", "A"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("automaton: A\n"));
    assert!(text.contains("states: 2\n"));
    let dot = dir.path().join("a.dot");
    let out = strata(&["rewrite", s(&kb), "--for", "A", "--dot", s(&dot)]);
    assert_eq!(out.status.code(), Some(0));
    let written = std::fs::read_to_string(&dot).unwrap();
    assert!(written.starts_with("digraph"));
    let out = strata(&["rewrite", s(&kb), "--for", "A", "--dot", "-"]);
    assert_eq!(stdout(&out), written);
}

#[test]
fn rewrite_unknown_concept_is_an_error() {
    let dir = TempDir::new().unwrap();
    let kb = write(&dir, "texample.kb", TEXAMPLE);
    assert_eq!(strata(&["rewrite", s(&kb), "--for", "Nope"]).status.code(), Some(2));
}

#[test]
fn oracle_trace() {
    let dir = TempDir::new().unwrap();
    let kb = write(&dir, "texample.kb", TEXAMPLE);
    let out = strata(&["oracle", s(&kb), "--ask", "D(a)", "--trace"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("answer: true"));
    assert!(text.contains("trace_steps: 4"), "{text}");
    let out = strata(&["oracle", s(&kb), "--ask", "Q(a)"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn fuzz_default_run_passes() {
    let out = strata(&["fuzz", "--cases", "1000", "--seed", "42"]);
    let text = stdout(&out);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(text.contains("status: PASS"));
}

#[test]
fn bench_qbf_emits_files() {
    let dir = TempDir::new().unwrap();
    let emit = dir.path().join("qbf");
    let out = strata(&["bench", "qbf", "--n", "2", "--m", "2", "--count", "12", "--seed", "7", "--emit-dir", s(&emit)]);
    let text = stdout(&out);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(text.contains("passed: 12/12"));
    assert_eq!(std::fs::read_dir(&emit).unwrap().count(), 12);
    let first = emit.join("qbf_0000.kb");
    let out = strata(&["check", s(&first)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("heights: order"));
}

#[test]
fn output_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let kb = write(&dir, "texample.kb", TEXAMPLE);
    let runs = [
        vec!["ask", s(&kb), "--query", "D(a)", "--witness"],
        vec!["check", s(&kb)],
        vec!["rewrite", s(&kb), "--for", "D"],
        vec!["fuzz", "--cases", "50", "--seed", "3"],
        vec!["bench", "qbf", "--n", "2", "--m", "2", "--count", "5"],
    ];
    for args in runs {
        let a = strata(&args);
        let b = strata(&args);
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        assert!(!stdout(&a).contains("ms\n"), "timing line without --timings");
    }
    let timed = strata(&["check", s(&kb), "--timings"]);
    assert!(stdout(&timed).contains("time_check: "));
}

#[test]
fn usage_and_input_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let kb = write(&dir, "texample.kb", TEXAMPLE);
    let broken = write(&dir, "broken.kb", "tbox:\nA <= <=\n");
    assert_eq!(strata(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(strata(&["check", "/nonexistent/x.kb"]).status.code(), Some(2));
    assert_eq!(strata(&["check", s(&broken)]).status.code(), Some(2));
    assert_eq!(strata(&["ask", s(&kb), "--query", "D(zz)"]).status.code(), Some(2));
    assert_eq!(strata(&["ask", s(&kb), "--query", "nonsense"]).status.code(), Some(2));
    assert_eq!(strata(&["ask", s(&kb)]).status.code(), Some(2));
    let err = String::from_utf8(strata(&["check", s(&broken)]).stderr).unwrap();
    assert!(err.contains("broken.kb:2:"), "{err}");
}
