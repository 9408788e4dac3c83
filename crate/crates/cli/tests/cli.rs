use std::path::PathBuf;
use std::process::{Command, Output};

use rexpand::{parse_calculus, parse_formula, parse_spec, Formula};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn rexpand(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rexpand")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn path(name: &str) -> String {
    fixture(name).to_string_lossy().into_owned()
}

#[test]
fn strengthen_reproduces_golden_tables() {
    for stem in ["example1", "example7"] {
        let o = rexpand(&["strengthen", &path(&format!("{stem}.lf"))]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let text = stdout(&o);
        assert!(text.contains("# value "), "profile comments missing");
        let got = parse_spec(&text).unwrap().matrix;
        let want = parse_spec(&std::fs::read_to_string(fixture(&format!("{stem}.sharp.lf"))).unwrap()).unwrap().matrix;
        assert!(got.same_up_to_labels(&want), "{stem}");
    }
}

#[test]
fn strengthen_is_byte_stable_and_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sharp.lf");
    let out = out.to_string_lossy();
    assert_eq!(code(&rexpand(&["strengthen", &path("example4.lf"), "-o", &out])), 0);
    let first = std::fs::read_to_string(&*out).unwrap();
    assert_eq!(stdout(&rexpand(&["strengthen", &path("example4.lf")])), first);
}

#[test]
fn no_axioms_gives_back_the_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("b.lf");
    let base = "\
signature { imp/2 neg/1 }
det { imp }
values { 0 1 }
designated { 1 }
table imp { (0,0)->{1} (0,1)->{1} (1,0)->{0} (1,1)->{1} }
table neg { (0)->{0,1} (1)->{0,1} }
";
    std::fs::write(&input, base).unwrap();
    let o = rexpand(&["strengthen", &input.to_string_lossy()]);
    assert_eq!(code(&o), 0);
    let got = parse_spec(&stdout(&o)).unwrap().matrix;
    assert!(got.same_up_to_labels(&parse_spec(base).unwrap().matrix));
}

#[test]
fn consequence_verdicts_and_exit_codes() {
    let args = ["--gamma", "p1, neg(p1)", "--delta", "p2"];
    let o = rexpand(&[&["consequence", &path("example1.sharp.lf")], &args[..]].concat());
    assert_eq!((code(&o), stdout(&o)), (0, "holds\n".to_string()));

    let o = rexpand(&[&["consequence", &path("example1.lf")], &args[..]].concat());
    assert_eq!(code(&o), 1);
    let text = stdout(&o);
    assert!(text.starts_with("fails\n") && text.contains("p2 = 0"), "{text}");

    let o = rexpand(&[&["consequence", &path("example1.lf"), "--axioms-oracle"], &args[..]].concat());
    assert_eq!(code(&o), 0);

    let o = rexpand(&["consequence", &path("example1.lf"), "--gamma", "p1", "--delta", "p1"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn refinements_of_the_explosive_matrix() {
    let o = rexpand(&["refinements", &path("example1.sharp.lf")]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "{00, 01, 10}\n{11}\n");
}

#[test]
fn calculus_for_double_negation_has_excluded_middle_and_elimination() {
    let o = rexpand(&["calculus", &path("example3.lf")]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let calc = parse_calculus(&stdout(&o)).unwrap();
    let f = |s: &str| parse_formula(s, &calc.sig).unwrap();
    let has = |prem: Vec<Formula>, conc: Vec<Formula>| {
        calc.rules.iter().any(|r| r.premises == prem && r.conclusions == conc)
    };
    assert!(has(vec![], vec![f("p1"), f("neg(p1)")]));
    assert!(has(vec![f("neg(neg(p1))")], vec![f("p1")]));
}

#[test]
fn separators_print_the_partition_table() {
    let o = rexpand(&["separators", &path("example7.sharp.lf")]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "0: omega {neg(p1)} mho {p1}\n1/2: omega {} mho {p1, neg(p1)}\n1: omega {p1} mho {}\n");
}

#[test]
fn prove_renders_and_reports_failure() {
    let calc = path("example1.listed.calc");
    let o = rexpand(&["prove", &calc, "--delta", "imp(p1, imp(neg(p1), p2))", "--render", "dot"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), std::fs::read_to_string(fixture("example1.proof.dot")).unwrap());

    let o = rexpand(&["prove", &calc, "--gamma", "p1", "--delta", "p2"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).starts_with("no proof"));
}

#[test]
fn verify_finds_no_disagreement() {
    let o = rexpand(&["--jobs", "1", "verify", &path("example1.lf")]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("disagreements 0"));
}

#[test]
fn input_errors_exit_with_two() {
    assert_eq!(code(&rexpand(&["refinements", &path("missing.lf")])), 2);
    let o = rexpand(&["consequence", &path("example1.lf"), "--gamma", "and(p1)"]);
    assert_eq!(code(&o), 2);

    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.lf");
    let text = std::fs::read_to_string(fixture("example1.lf")).unwrap();
    let (head, _) = text.split_once("axioms").unwrap();
    std::fs::write(&input, format!("{head}axioms {{ neg(imp(p1, p1)) }}\n")).unwrap();
    let o = rexpand(&["strengthen", &input.to_string_lossy()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("not a simple axiom"));
}

#[test]
fn resource_cap_exits_with_three() {
    let o = rexpand(&["prove", &path("example6.listed.calc"), "--delta", "imp(box(p1), box(p1))", "--max-nodes", "1"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}
