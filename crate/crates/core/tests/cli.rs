use std::process::Command;

use chc2vmt::cli::run;

const WORKED: &str = include_str!("data/worked_example.smt2");
const WORKED_PATH: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/worked_example.smt2");

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn cli(args: &[&str], stdin: &str) -> Outcome {
    let mut argv = vec!["chc2vmt"];
    argv.extend_from_slice(args);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(argv, &mut stdin.as_bytes(), &mut out, &mut err);
    Outcome { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

#[test]
fn translate_worked_example() {
    let o = cli(&["translate", WORKED_PATH], "");
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert!(o.stdout.contains(":invar-property 0"));
    assert_eq!(o.stderr, "");

    let inline = cli(&["translate", "--simplify", "-"], WORKED);
    assert_eq!(inline.stdout, include_str!("data/worked_example.inline.vmt"));
}

#[test]
fn identical_invocations_identical_output() {
    let a = cli(&["translate", WORKED_PATH], "");
    let b = cli(&["translate", WORKED_PATH], "");
    assert_eq!(a.stdout, b.stdout);
    let a = cli(&["check", "--random", "20", "--seed", "3"], "");
    let b = cli(&["check", "--random", "20", "--seed", "3"], "");
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn output_file() {
    let dir = std::env::temp_dir().join(format!("chc2vmt-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("out.vmt");
    let o = cli(&["translate", WORKED_PATH, "-o", path.to_str().unwrap()], "");
    assert_eq!(o.code, 0);
    assert_eq!(o.stdout, "");
    assert!(std::fs::read_to_string(&path).unwrap().contains(":trans true"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn stats_worked_example() {
    let o = cli(&["stats", WORKED_PATH], "");
    assert_eq!(o.code, 0);
    assert_eq!(o.stdout, "relations=4\nsum_arity=2\nclauses=5\nstate_vars=6\ninputs=3\ndisjuncts=5\n");
    let o = cli(&["stats", "--simplify", WORKED_PATH], "");
    assert!(o.stdout.contains("inputs=0\n"));
}

#[test]
fn check_worked_example() {
    let o = cli(&["check", "--domain", "0:16", "--depth", "10", WORKED_PATH], "");
    assert_eq!(o.code, 0, "{}{}", o.stdout, o.stderr);
    assert!(o.stdout.contains("fact L(6) derive=4 reach=4 ok\n"));
    assert!(o.stdout.contains("fact M(6) derive=5 reach=5 ok\n"));
}

#[test]
fn check_random_suite() {
    let o = cli(&["check", "--random", "200", "--seed", "7"], "");
    assert_eq!(o.code, 0, "{}", o.stdout);
    assert!(o.stdout.ends_with("0 failures\n"));
}

#[test]
fn corrupted_translation_exits_4() {
    // Disjunct 2 is L(x) /\ x < 5 => L(x + 3); frame conjunct 3 keeps M's place.
    let o = cli(&["check", "--domain", "0:16", "--depth", "10", "--drop-frame", "2:3", WORKED_PATH], "");
    assert_eq!(o.code, 4, "{}", o.stdout);
    assert!(o.stdout.contains("NOT equivalent"));
    let o = cli(&["check", "--drop-frame", "2:99", WORKED_PATH], "");
    assert_eq!(o.code, 1);
}

#[test]
fn budget_exceeded_exits_5() {
    let o = cli(&["check", "--domain", "0:16", "--depth", "10", "--max-states", "3", WORKED_PATH], "");
    assert_eq!(o.code, 5);
    assert!(o.stderr.starts_with("error: budget exceeded"));
}

#[test]
fn nonlinear_exits_2() {
    let src = "(set-logic HORN)\n(declare-fun A (Int) Bool)\n\
               (assert (forall ((x Int) (y Int)) (=> (and (A x) (A y)) (A (+ x y)))))\n";
    let o = cli(&["translate"], src);
    assert_eq!(o.code, 2);
    assert!(o.stderr.starts_with("error: <stdin>:3:"), "{}", o.stderr);
    assert_eq!(o.stderr.lines().count(), 1);
}

#[test]
fn unsupported_logic_and_sort_exit_3() {
    assert_eq!(cli(&["translate"], "(set-logic ALL)").code, 3);
    assert_eq!(cli(&["translate"], "(declare-fun A (Int) Bool)").code, 3);
    let o = cli(&["translate"], "(set-logic HORN)\n(declare-fun A (Real) Bool)");
    assert_eq!(o.code, 3);
    assert!(o.stderr.starts_with("error: <stdin>:2:"), "{}", o.stderr);
}

#[test]
fn parse_errors_exit_1() {
    let o = cli(&["translate"], "(set-logic HORN)\n(assert (and true)");
    assert_eq!(o.code, 1);
    assert!(o.stderr.starts_with("error: <stdin>:"));
    assert_eq!(cli(&["translate"], "(set-logic HORN)(assert (Q 1))").code, 1);
    assert_eq!(cli(&["translate", "/nonexistent/file.smt2"], "").code, 1);
    assert_eq!(cli(&["frobnicate"], "").code, 1);
    assert_eq!(cli(&["check", "--domain", "5:1"], "").code, 1);
    assert_eq!(cli(&["bmc", "--k", "-1", WORKED_PATH], "").code, 1);
}

#[test]
fn help_and_version_exit_0() {
    let o = cli(&["--help"], "");
    assert_eq!(o.code, 0);
    assert!(o.stdout.contains("--simplify"));
    assert!(!o.stdout.contains("drop-frame"));
    assert_eq!(cli(&["--version"], "").code, 0);
}

#[test]
fn bmc_script() {
    let o = cli(&["bmc", "--k", "2", WORKED_PATH], "");
    assert_eq!(o.code, 0);
    assert!(o.stdout.starts_with("(set-logic QF_LIA)\n"));
    assert!(o.stdout.ends_with("(check-sat)\n(exit)\n"));
    let o = cli(&["bmc", "--k", "0", WORKED_PATH], "");
    assert!(o.stdout.contains("(assert (not (not flag.q.U@0)))"));
}

#[test]
fn query_option_uses_existing_relation() {
    let src = "(set-logic HORN)(declare-fun Bad () Bool)(declare-fun A (Int) Bool)
               (assert (A 0))
               (assert (forall ((x Int)) (=> (and (A x) (> x 3)) Bad)))";
    let o = cli(&["stats", "--query", "Bad"], src);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert!(o.stdout.starts_with("relations=2\n"));
    let o = cli(&["translate", "--query", "Bad"], src);
    assert!(o.stdout.contains("(! (not flag.Bad) :invar-property 0)"));
    assert_eq!(cli(&["stats", "--query", "A"], src).code, 1);
}

#[test]
fn binary_end_to_end() {
    let out = Command::new(env!("CARGO_BIN_EXE_chc2vmt")).args(["stats", WORKED_PATH]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("state_vars=6"));

    let out =
        Command::new(env!("CARGO_BIN_EXE_chc2vmt")).args(["translate", "/nonexistent"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("error: /nonexistent"));
}
