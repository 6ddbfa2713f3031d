use std::path::PathBuf;
use std::process::{Command, Output};

fn sample(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../samples")
        .join(name)
        .display()
        .to_string()
}

fn dex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dex")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn answer(setting: &str, facts: &str, query: &str, mode: &str, extra: &[&str]) -> Output {
    let (s, f, q) = (sample(setting), sample(facts), sample(query));
    let mut args = vec!["answer", "--setting", &s, "--facts", &f, "--query", &q, "--mode", mode];
    args.extend_from_slice(extra);
    dex(&args)
}

#[test]
fn orders_in_every_mode() {
    for mode in ["exact", "asp", "approx"] {
        let o = answer("orders.dex", "orders.facts", "unpaid.query", mode, &[]);
        assert_eq!(o.status.code(), Some(0));
        let guarantee = if mode == "approx" { "under-approximation" } else { "exact" };
        assert_eq!(stdout(&o), format!("% mode={mode} guarantee={guarantee}\n2\n"));
    }
}

#[test]
fn classical_mode_rejects_negation() {
    let o = answer("orders.dex", "orders.facts", "unpaid.query", "classical", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("positive query"));
}

#[test]
fn employees_answers_are_empty() {
    for mode in ["exact", "asp", "approx"] {
        let o = answer("employees.dex", "employees.facts", "different-cities.query", mode, &["--fresh", "1"]);
        assert_eq!(o.status.code(), Some(0));
        assert_eq!(stdout(&o).lines().count(), 1);
    }
}

#[test]
fn boolean_answers_print_truth_values() {
    let triangle = answer("coloring.dex", "triangle.facts", "not-colored.query", "exact", &[]);
    assert!(stdout(&triangle).ends_with("\nfalse\n"));
    let small = answer("coloring.dex", "triangle.facts", "not-colored.query", "exact", &["--fresh", "1"]);
    assert_eq!(small.status.code(), Some(3));
}

#[test]
fn check_reports_weak_acyclicity() {
    let (s, f) = (sample("orders.dex"), sample("orders.facts"));
    let o = dex(&["check", "--setting", &s, "--facts", &f]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "weakly-acyclic: yes\nsolutions: exist\n");
    let nonwa = sample("nonwa.dex");
    let o = dex(&["check", "--setting", &nonwa, "--dot"]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.starts_with("weakly-acyclic: no\n"));
    assert!(out.contains("digraph"));
}

#[test]
fn malformed_setting_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.dex");
    std::fs::write(&bad, "source A/1.\ntarget B/1.\nst: A(x) -> B(x").unwrap();
    let o = dex(&["check", "--setting", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.dex:3:16"));
}

#[test]
fn solutions_are_separated_blocks() {
    let (s, f) = (sample("employees.dex"), sample("employees.facts"));
    let o = dex(&["solutions", "--setting", &s, "--facts", &f, "--fresh", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let blocks: Vec<&str> = out.split("---\n").collect();
    assert_eq!(blocks.len(), 4);
    assert!(blocks.iter().any(|b| b.contains("EmpC(\"mary\",\"c1\")")));
    assert!(blocks.iter().any(|b| b.contains("SameC(\"john\",\"mary\")")));
}

#[test]
fn unsatisfiable_setting_has_no_solutions() {
    let dir = tempfile::tempdir().unwrap();
    let setting = dir.path().join("clash.dex");
    let facts = dir.path().join("clash.facts");
    std::fs::write(&setting, "source S/2.\ntarget T/2.\nst: S(x,y) -> T(x,y).\nt: T(x,y) -> x = y.").unwrap();
    std::fs::write(&facts, "S(\"a\",\"b\").").unwrap();
    let o = dex(&["solutions", "--setting", setting.to_str().unwrap(), "--facts", facts.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o), "no supported solutions\n");
}

#[test]
fn emit_asp_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("employees.lp");
    let (s, f) = (sample("employees.dex"), sample("employees.facts"));
    let o = dex(&["emit-asp", "--setting", &s, "--facts", &f, "--fresh", "1", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("choice((X),(Z))"));
    let expanded = dex(&["emit-asp", "--setting", &s, "--facts", &f, "--fresh", "1", "--expand-choice"]);
    let expanded = stdout(&expanded);
    assert!(expanded.contains("diffChoice_st1(X,Z) :- chosen_st1(X,W1), range_st1(Z), Z != W1."));
    assert!(!expanded.contains("choice(("));
}

#[test]
fn conditional_chase_output() {
    let (s, f) = (sample("chain.dex"), sample("chain.facts"));
    let o = dex(&["chase", "--conditional", "--setting", &s, "--facts", &f]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        stdout(&o),
        "R(\"a\",_1) :: true\nS(\"b1\") :: true\nS(\"b2\") :: true\nT(\"a\") :: _1 = \"b1\"\nT(\"a\") :: _1 = \"b2\"\n"
    );
}

#[test]
fn chase_cap_exit_code() {
    let (s, f) = (sample("nonwa.dex"), sample("nonwa.facts"));
    let o = dex(&["chase", "--setting", &s, "--facts", &f, "--cap", "20"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn external_solver_output_is_parsed() {
    let dir = tempfile::tempdir().unwrap();
    let solver = dir.path().join("fake-solver.sh");
    std::fs::write(
        &solver,
        "#!/bin/sh\necho 'Answer: 1'\necho 'allOrd(1) allOrd(2) paid(1) ord(1,yes) ord(2,no)'\necho SATISFIABLE\n",
    )
    .unwrap();
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        std::fs::set_permissions(&solver, std::fs::Permissions::from_mode(0o755)).unwrap();
    }
    let o = answer(
        "orders.dex",
        "orders.facts",
        "unpaid.query",
        "asp",
        &["--external-solver", solver.to_str().unwrap(), "--solver-arg", "0"],
    );
    assert_eq!(stdout(&o), "% mode=asp guarantee=exact\n2\n");
}
