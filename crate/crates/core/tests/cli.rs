use std::io::Write;
use std::process::{Command, Output, Stdio};

const BIN: &str = env!("CARGO_BIN_EXE_xlat");

fn rules(name: &str) -> String {
    format!("{}/rules/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn xlat(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("spawn xlat")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn reads_external_text() {
    let py = rules("translate_python.dsl");
    let o = xlat(&["translate", "--rules", &py, "--from-external", "not True"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "¬ True : Prop");
}

#[test]
fn renders_term_from_argument_and_stdin() {
    let py = rules("translate_python.dsl");
    let o = xlat(&["translate", "--rules", &py, "--to-external", "False"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "False");

    let mut child = Command::new(BIN)
        .args(["translate", "--rules", &py, "--to-external"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"Not True\n").unwrap();
    let o = child.wait_with_output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "not True");
}

#[test]
fn one_way_rule_reads() {
    let r = rules("translate_python_one_way.dsl");
    let o = xlat(&["translate", "--rules", &r, "--from-external", "(True, False)[0]"]);
    assert_eq!(stdout(&o).trim(), "True : Prop");
}

#[test]
fn custom_env() {
    let o = xlat(&[
        "translate",
        "--rules",
        &rules("logic.dsl"),
        "--env",
        &rules("demo.env"),
        "--from-external",
        "P /\\ Q",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).trim(), "P ∧ Q : Prop");
}

#[test]
fn translation_errors_exit_one() {
    let py = rules("translate_python.dsl");
    let o = xlat(&["translate", "--rules", &py, "--from-external", "not not"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error: "));

    let o = xlat(&["translate", "--rules", &py, "--to-external", "Or True True"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(xlat(&["translate", "--rules", "/nonexistent.dsl", "--from-external", "x"]).status.code(), Some(2));
    assert_eq!(xlat(&["translate", "--rules", &rules("arith.dsl")]).status.code(), Some(2));
    assert_eq!(xlat(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn lint_reports_warnings_and_priority() {
    let o = xlat(&["lint-rules", "--rules", &rules("irreversible.dsl")]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(out.matches("warning:").count(), 1, "{out}");
    assert!(out.contains("to-term"));

    let out = stdout(&xlat(&["lint-rules", "--rules", &rules("with_identity.dsl")]));
    assert!(out.contains("low priority: r4 (line 7) \"id(\" x \")\""), "{out}");
    assert!(out.contains("grouping"));
}

#[test]
fn roundtrip_is_deterministic() {
    let py = rules("translate_python.dsl");
    let args = ["roundtrip", "--rules", &py, "--seed", "5", "--count", "40"];
    let a = xlat(&args);
    let b = xlat(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&b));
    assert!(stdout(&a).contains("passed 40, failed 0, skipped 0"), "{}", stdout(&a));
}

#[test]
fn roundtrip_with_no_cases() {
    let o = xlat(&["roundtrip", "--rules", &rules("arith.dsl"), "--count", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("passed 0, failed 0, skipped 0"));
}
