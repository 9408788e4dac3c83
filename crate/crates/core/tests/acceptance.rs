//! One line per acceptance criterion; exits non-zero if any fails.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::{config, displayed, golden, loaded, listed, partitions, shape, Loaded, STEMS};
use proptest::prelude::*;
use proptest::test_runner::TestRunner;
use rexpand::{
    calculus_for, check_proof, find_separators, flat_slice, parse_formula, prove, sequents, verify_equivalence,
    AxiomOracle, Calculus, Discriminator, OracleOptions, PNMatrix, ProofOptions, SearchOutcome, Sequent, SuiteBounds,
};

type Check = fn() -> Result<String, String>;

fn main() {
    let criteria: [(&str, Duration, Check); 8] = [
        ("golden tables", Duration::from_secs(10), golden_tables),
        ("refinement structure", Duration::from_secs(10), refinement_structure),
        ("discriminators", Duration::from_secs(60), discriminators),
        ("calculus equivalence", Duration::from_secs(300), calculus_equivalence),
        ("golden proofs", Duration::from_secs(30), golden_proofs),
        ("oracle equivalence", Duration::from_secs(900), oracle_equivalence),
        ("invariant suites", Duration::from_secs(300), invariant_suites),
        ("exclusions and flat slices", Duration::from_secs(120), exclusions),
    ];
    let mut failed = 0;
    for (i, (name, limit, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panic: {}", msg.unwrap_or_default()))
        });
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(_) if took > *limit => Err(format!("took {took:.1?}, limit {limit:?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail}; {took:.1?})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({detail}; {took:.1?})", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn by_stem(stem: &str) -> &'static Loaded {
    loaded().iter().find(|l| l.stem == stem).expect("known example")
}

/// Entry of a connective, by labels.
fn entry(m: &PNMatrix, conn: &str, args: &[&str]) -> BTreeSet<String> {
    let c = m.signature().require(conn).unwrap();
    let xs: Vec<usize> = args.iter().map(|a| m.value_by_label(a).unwrap_or_else(|| panic!("no value {a}"))).collect();
    m.entry(c, &xs).iter().map(|&y| m.label(y).to_string()).collect()
}

fn set(labels: &[&str]) -> BTreeSet<String> {
    labels.iter().map(|s| s.to_string()).collect()
}

fn golden_tables() -> Result<String, String> {
    for l in loaded() {
        let got = displayed(&l.spec, &l.sharp);
        ensure(golden(l.stem).same_up_to_labels(&got), || format!("{} differs from its golden tables", l.stem))?;
    }
    let m1 = displayed(&by_stem("example1").spec, &by_stem("example1").sharp);
    let m2 = displayed(&by_stem("example2").spec, &by_stem("example2").sharp);
    let spot = [
        (&m1, "imp", vec!["11", "00"], set(&[])),
        (&m1, "neg", vec!["10"], set(&["00", "01"])),
        (&m2, "imp", vec!["01", "11"], set(&["11"])),
        (&m2, "neg", vec!["01"], set(&["10", "11"])),
    ];
    for (m, conn, args, want) in spot {
        let got = entry(m, conn, &args);
        ensure(got == want, || format!("{conn}{args:?} = {got:?}, expected {want:?}"))?;
    }
    let sizes: Vec<usize> = loaded().iter().map(|l| l.sharp.matrix.len()).collect();
    Ok(format!("{} examples exact, value counts {sizes:?}", loaded().len()))
}

fn refinement_labels(l: &Loaded) -> BTreeSet<BTreeSet<String>> {
    let m = displayed(&l.spec, &l.sharp);
    m.total_refinements()
        .iter()
        .map(|r| r.iter().map(|&x| m.label(x).to_string()).collect())
        .collect()
}

fn refinement_structure() -> Result<String, String> {
    let expected: [(&str, &[&[&str]]); 4] = [
        ("example1", &[&["00", "01", "10"], &["11"]]),
        ("example2", &[&["00", "01", "10"], &["01", "11"]]),
        ("example4", &[&["011", "101", "110"], &["111"]]),
        ("example5x", &[&["00", "01", "10"], &["11"]]),
    ];
    let mut wrong = Vec::new();
    for (stem, want) in expected {
        let want: BTreeSet<BTreeSet<String>> = want.iter().map(|r| set(r)).collect();
        let got = refinement_labels(by_stem(stem));
        if got != want {
            wrong.push(format!("{stem}: computed {got:?}, expected {want:?}"));
        }
    }
    // the printed example 4 tables have and(101, 110) empty, so the expected
    // three-valued set cannot be total under them
    ensure(wrong.is_empty(), || wrong.join("; "))?;
    Ok("examples 1, 2, 4 and 5 with explosion exact".into())
}

fn discriminators() -> Result<String, String> {
    for stem in STEMS {
        let m = golden(stem);
        let d = Discriminator::from_separators(&m, &listed(stem).separators)
            .map_err(|pairs| format!("{stem}: listed separators leave {pairs:?} apart"))?;
        ensure(d.table(&m) == partitions(stem), || format!("{stem}: partition table differs:\n{}", d.table(&m)))?;
        let found = find_separators(&m, 2).map_err(|p| format!("{stem}: no separators for {p:?}"))?;
        ensure(found.table(&m) == partitions(stem), || format!("{stem}: searched separators partition differently"))?;
    }
    Ok(format!("{} tables exact under listed and searched separators", STEMS.len()))
}

fn proves(calc: &Calculus, s: &Sequent) -> Result<bool, String> {
    match prove(calc, s, ProofOptions::default()).map_err(|e| e.to_string())? {
        SearchOutcome::Proved(t) => {
            check_proof(&t, calc, s).map_err(|e| format!("bad proof: {e}"))?;
            Ok(true)
        }
        SearchOutcome::Saturated(_) => Ok(false),
    }
}

fn calculus_equivalence() -> Result<String, String> {
    let mut total = 0;
    for l in loaded() {
        let m = &l.sharp.matrix;
        let disc = find_separators(m, 2).map_err(|p| format!("{}: no separators for {p:?}", l.stem))?;
        let gen = calculus_for(m, &disc).map_err(|e| e.to_string())?;
        let listed = listed(l.stem);
        for (from, to, what) in [(&listed, &gen, "listed"), (&gen, &listed, "generated")] {
            for r in &from.rules {
                let s = Sequent::new(r.premises.iter().cloned(), r.conclusions.iter().cloned());
                ensure(proves(to, &s)?, || format!("{}: {what} rule {} underivable", l.stem, r.name))?;
            }
        }
        for s in sequents(m.signature(), SuiteBounds::default()) {
            let holds = m.consequence(&s).holds();
            for (calc, what) in [(&gen, "generated"), (&listed, "listed")] {
                ensure(proves(calc, &s)? == holds, || {
                    format!("{}: {what} calculus disagrees on {}", l.stem, s.display(m.signature()))
                })?;
            }
            total += 1;
        }
    }
    Ok(format!("rules mutually derivable, {total} suite sequents agree"))
}

fn golden_proofs() -> Result<String, String> {
    let goals = [
        ("example1", "imp(p1, imp(neg(p1), p2))", 0),
        ("example6", "imp(neg(box(neg(imp(p1, p2)))), imp(box(p1), neg(box(neg(p2)))))", 1),
        ("example7", "imp(imp(imp(p1, neg(p1)), p1), p1)", 0),
    ];
    let mut sizes = Vec::new();
    for (stem, goal, closed) in goals {
        let start = Instant::now();
        let calc = listed(stem);
        let s = Sequent::new([], [parse_formula(goal, &calc.sig).unwrap()]);
        let SearchOutcome::Proved(t) = prove(&calc, &s, ProofOptions::default()).map_err(|e| e.to_string())? else {
            return Err(format!("{stem}: no proof"));
        };
        check_proof(&t, &calc, &s).map_err(|e| format!("{stem}: {e}"))?;
        ensure(t.closed_branches() >= closed, || format!("{stem}: no closed branch"))?;
        ensure(start.elapsed() < Duration::from_secs(10), || format!("{stem}: slow proof"))?;
        sizes.push(t.size());
    }
    Ok(format!("checked proofs of sizes {sizes:?}"))
}

fn oracle_equivalence() -> Result<String, String> {
    let mut parts = Vec::new();
    for l in loaded() {
        let r = verify_equivalence(&l.spec.matrix, &l.spec.axioms, &l.sharp, SuiteBounds::default(), OracleOptions::default())
            .map_err(|e| format!("{}: {e}", l.stem))?;
        ensure(r.ok(), || {
            let first = r.disagreements.first().map(|d| d.sequent.display(l.spec.sig()).to_string());
            format!("{}: {} disagreements, first {first:?}", l.stem, r.disagreements.len())
        })?;
        parts.push(format!("{} {}/{}/{}", l.stem, r.both_hold, r.both_fail, r.inconclusive));
    }
    Ok(format!("0 disagreements; hold/fail/inconclusive: {}", parts.join(", ")))
}

fn run<S: Strategy>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String> {
    TestRunner::new(config(cases)).run(&strategy, test).map_err(|e| e.to_string())
}

fn invariant_suites() -> Result<String, String> {
    for l in loaded() {
        run(1000, (shape(2, 3), prop::collection::vec(any::<usize>(), 2)), |(s, args)| {
            common::designation_agreement(l, &s, &args)
        })
        .map_err(|e| format!("{}: designation: {e}", l.stem))?;
        let walks = (shape(2, 3), prop::collection::vec(any::<usize>(), 2), prop::collection::vec(any::<usize>(), 1..8));
        run(1000, walks, |(s, args, seeds)| common::epsilon_projection(l, &s, &args, &seeds))
            .map_err(|e| format!("{}: projection: {e}", l.stem))?;
        for m in [&l.spec.matrix, &l.sharp.matrix] {
            run(200, any::<u64>(), |mask| common::downward_closure(m, mask))
                .map_err(|e| format!("{}: downward closure: {e}", l.stem))?;
            let sides = || prop::collection::vec(shape(2, 2), 0..=2);
            run(200, (sides(), sides(), shape(2, 2), shape(2, 2)), |(g, d, a, b)| common::dilution(m, &g, &d, &a, &b))
                .map_err(|e| format!("{}: dilution: {e}", l.stem))?;
        }
    }
    Ok(format!("{} examples, 1000 designation and 1000 projection probes each", loaded().len()))
}

fn exclusions() -> Result<String, String> {
    let l = by_stem("example1");
    let oracle = AxiomOracle::new(&l.spec.matrix, &l.spec.axioms);
    let opts = OracleOptions { depth: 0, ..OracleOptions::default() };
    let bounds = SuiteBounds { max_depth: 1, ..SuiteBounds::default() };
    let mut n = 0;
    for s in sequents(l.spec.sig(), bounds) {
        let u = oracle.universe(&s, opts).map_err(|e| e.to_string())?;
        let slice = flat_slice(&l.spec.matrix, &l.spec.axioms, &u).map_err(|e| e.to_string())?;
        ensure(slice.consequence(&s).holds() == oracle.check_in(&s, &u).holds(), || {
            format!("slice and oracle differ on {}", s.display(l.spec.sig()))
        })?;
        n += 1;
    }
    Ok(format!(
        "infinite characterisations and complexity bounds excluded; flat slice agrees with the oracle on {n} sequents"
    ))
}
