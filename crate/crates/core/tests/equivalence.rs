use std::path::PathBuf;

use rexpand::{
    parse_spec, sharp_construct, sharp_semantic_probe, verify_equivalence, OracleOptions, SpecFile, StrengthenOptions,
    SuiteBounds,
};

fn fixture(name: &str) -> SpecFile {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    parse_spec(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn check(name: &str) {
    let spec = fixture(name);
    let sharp = sharp_construct(&spec.matrix, spec.projection.as_ref(), &spec.axioms, StrengthenOptions::default()).unwrap();
    let t = std::time::Instant::now();
    let report = verify_equivalence(&spec.matrix, &spec.axioms, &sharp, SuiteBounds::default(), OracleOptions::default()).unwrap();
    eprintln!(
        "{name}: checked {} hold {} fail {} inconclusive {} disagree {} in {:?}",
        report.checked,
        report.both_hold,
        report.both_fail,
        report.inconclusive,
        report.disagreements.len(),
        t.elapsed()
    );
    for d in report.disagreements.iter().take(3) {
        eprintln!("  {} : {}", d.sequent.display(spec.sig()), d.reason);
    }
    assert!(report.ok(), "{name}");
}

#[test]
fn example1() { check("example1.lf"); }
#[test]
fn example2() { check("example2.lf"); }
#[test]
fn example3() { check("example3.lf"); }
#[test]
fn example3n() { check("example3n.lf"); }
#[test]
fn example6() { check("example6.lf"); }
#[test]
fn example7() { check("example7.lf"); }

// the three slow examples run under the acceptance target

#[test]
fn probes() {
    for name in ["example1.lf", "example3.lf"] {
        let spec = fixture(name);
        let sharp = sharp_construct(&spec.matrix, spec.projection.as_ref(), &spec.axioms, StrengthenOptions::default()).unwrap();
        let probe = sharp_semantic_probe(&spec.matrix, &spec.axioms, 3, 100_000).unwrap();
        let got: std::collections::BTreeSet<Vec<usize>> = sharp.profiles.iter().cloned().collect();
        eprintln!("{name}: probe {} sharp {}", probe.len(), got.len());
        assert!(got.is_subset(&probe));
        assert_eq!(probe.len(), 4);
    }
}
