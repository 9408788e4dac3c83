//! Fixture loading and formula generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::sync::OnceLock;

use proptest::prelude::*;
use proptest::test_runner::{RngSeed, TestCaseError};
use rexpand::{
    parse_calculus, parse_spec, sharp_construct, subformulas_bottom_up, Calculus, ConnId, Formula, PNMatrix, Sharp,
    Sequent, Signature, SpecFile, StrengthenOptions, Value,
};

pub const STEMS: [&str; 9] = [
    "example1", "example2", "example3", "example3n", "example4", "example5", "example5x", "example6", "example7",
];

pub fn read(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn bless(name: &str, text: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    std::fs::write(&path, text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
}

pub fn fixture(name: &str) -> SpecFile {
    parse_spec(&read(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// The expected strengthened matrix of an example.
pub fn golden(stem: &str) -> PNMatrix {
    fixture(&format!("{stem}.sharp.lf")).matrix
}

/// The calculus listed for an example, with its separators.
pub fn listed(stem: &str) -> Calculus {
    parse_calculus(&read(&format!("{stem}.listed.calc"))).unwrap()
}

pub fn strengthen(stem: &str) -> (SpecFile, Sharp) {
    let spec = fixture(&format!("{stem}.lf"));
    let sharp = sharp_construct(&spec.matrix, spec.projection.as_ref(), &spec.axioms, StrengthenOptions::default())
        .unwrap_or_else(|e| panic!("{stem}: {e}"));
    (spec, sharp)
}

/// Result relabelled by the fixture's display strings, if any. The second
/// stage of the double negation example names values by their full profile
/// over the stage-one values; the first two symbols give the printed names.
pub fn displayed(spec: &SpecFile, sharp: &Sharp) -> PNMatrix {
    if spec.projection.is_some() {
        let short: Vec<String> = sharp.matrix.labels().iter().map(|l| l.chars().take(2).collect()).collect();
        return sharp.matrix.clone().with_labels(short).unwrap();
    }
    if spec.display.is_empty() {
        return sharp.matrix.clone();
    }
    let labels = sharp.display_labels(&spec.matrix, &spec.display).unwrap();
    sharp.matrix.clone().with_labels(labels).unwrap()
}

const BOOLEAN_PAIRS: &str = "\
00: omega {} mho {p1, neg(p1)}
01: omega {neg(p1)} mho {p1}
10: omega {p1} mho {neg(p1)}
11: omega {p1, neg(p1)} mho {}
";

/// Partition tables under the listed separators.
pub fn partitions(stem: &str) -> &'static str {
    match stem {
        "example1" | "example2" => BOOLEAN_PAIRS,
        "example3" => "\
010: omega {} mho {p1}
101: omega {p1} mho {neg(p1)}
110: omega {p1, neg(p1)} mho {neg(neg(p1))}
111: omega {p1, neg(p1), neg(neg(p1))} mho {}
",
        "example3n" => "\
01: omega {} mho {p1}
10: omega {p1} mho {neg(p1)}
11: omega {p1, neg(p1)} mho {}
",
        "example4" => "\
011: omega {} mho {p1}
101: omega {p1} mho {neg(p1)}
110: omega {p1, neg(p1)} mho {circ(p1)}
111: omega {p1, neg(p1), circ(p1)} mho {}
",
        "example5" | "example5x" => "\
00: omega {} mho {p1, sim(p1)}
01: omega {sim(p1)} mho {p1}
10: omega {p1} mho {sim(p1)}
11: omega {p1, sim(p1)} mho {}
",
        "example6" => "\
000: omega {} mho {p1, box(neg(p1))}
001: omega {box(neg(p1))} mho {p1}
100: omega {p1} mho {box(p1)}
110: omega {p1, box(p1)} mho {}
",
        "example7" => "\
0: omega {neg(p1)} mho {p1}
1/2: omega {} mho {p1, neg(p1)}
1: omega {p1} mho {}
",
        _ => panic!("no partition table for {stem}"),
    }
}

/// Fixed seed unless `PROPTEST_RNG_SEED` picks another.
pub fn config(cases: u32) -> ProptestConfig {
    let base = ProptestConfig::default();
    let rng_seed = match base.rng_seed {
        RngSeed::Random => RngSeed::Fixed(0x5eed),
        fixed => fixed,
    };
    ProptestConfig { cases, rng_seed, failure_persistence: None, ..base }
}

/// Shape of a formula, mapped onto a concrete signature by [`realise`].
#[derive(Debug, Clone)]
pub enum Shape {
    Var(u32),
    Node(usize, Vec<Shape>),
}

pub fn shape(vars: u32, depth: u32) -> impl Strategy<Value = Shape> {
    let leaf = (1..=vars).prop_map(Shape::Var);
    leaf.prop_recursive(depth, 24, 2, |inner| {
        (any::<usize>(), prop::collection::vec(inner, 0..=2)).prop_map(|(c, kids)| Shape::Node(c, kids))
    })
}

pub fn realise(s: &Shape, sig: &Signature) -> Formula {
    let all: Vec<ConnId> = (0..sig.len()).collect();
    realise_over(s, sig, &all)
}

/// As [`realise`], using only the connectives `conns`.
pub fn realise_over(s: &Shape, sig: &Signature, conns: &[ConnId]) -> Formula {
    match s {
        Shape::Var(i) => Formula::var(*i),
        Shape::Node(c, kids) => {
            let c = conns[c % conns.len()];
            let args = (0..sig.arity(c))
                .map(|i| kids.get(i).map_or(Formula::var(1), |k| realise_over(k, sig, conns)))
                .collect();
            Formula::app(c, args)
        }
    }
}

/// A valuation of `sub(f)` in `m`, choosing among the allowed outputs by
/// the seeds. `None` when the matrix is partial along the way.
pub fn walk(m: &PNMatrix, f: &Formula, args: &[Value], seeds: &[usize]) -> Option<BTreeMap<Formula, Value>> {
    let mut out = BTreeMap::new();
    for (i, g) in subformulas_bottom_up([f]).into_iter().enumerate() {
        let y = match &g {
            Formula::Var(v) => args[(*v as usize - 1) % args.len()],
            Formula::App(c, xs) => {
                let xs: Vec<Value> = xs.iter().map(|a| out[a]).collect();
                let set = m.entry(*c, &xs);
                if set.is_empty() {
                    return None;
                }
                set[seeds[i % seeds.len()] % set.len()]
            }
        };
        out.insert(g, y);
    }
    Some(out)
}

pub struct Loaded {
    pub stem: &'static str,
    pub spec: SpecFile,
    pub sharp: Sharp,
}

/// Every example with its strengthened matrix, built once.
pub fn loaded() -> &'static [Loaded] {
    static ALL: OnceLock<Vec<Loaded>> = OnceLock::new();
    ALL.get_or_init(|| {
        STEMS
            .iter()
            .map(|&stem| {
                let (spec, sharp) = strengthen(stem);
                Loaded { stem, spec, sharp }
            })
            .collect()
    })
}

/// Over the deterministic connectives every value a formula takes on a
/// tuple of strengthened values has the same designation, and projects into
/// what the formula takes on the projected tuple.
pub fn designation_agreement(l: &Loaded, s: &Shape, args: &[usize]) -> Result<(), TestCaseError> {
    let (m, sh) = (&l.spec.matrix, &l.sharp);
    let det: Vec<ConnId> = m.signature().det().iter().copied().collect();
    if det.is_empty() {
        return Ok(());
    }
    let f = realise_over(s, m.signature(), &det);
    let args: Vec<Value> = args.iter().map(|a| a % sh.matrix.len()).collect();
    let eps = sh.epsilon_projection();
    let ys = sh.matrix.eval_formula(&f, &args);
    let designated: BTreeSet<bool> = ys.iter().map(|&y| sh.matrix.is_designated(y)).collect();
    prop_assert!(designated.len() <= 1, "{}: mixed designation", l.stem);
    let base: Vec<Value> = args.iter().map(|&x| eps[x]).collect();
    let zs = m.eval_formula(&f, &base);
    for y in ys {
        prop_assert_eq!(sh.matrix.is_designated(y), m.is_designated(eps[y]));
        prop_assert!(zs.contains(&eps[y]), "{}: projection leaves the base", l.stem);
    }
    Ok(())
}

/// A valuation of the strengthened matrix projects to one of the input.
pub fn epsilon_projection(l: &Loaded, s: &Shape, args: &[usize], seeds: &[usize]) -> Result<(), TestCaseError> {
    let (m, sh) = (&l.spec.matrix, &l.sharp);
    let eps = sh.epsilon_projection();
    let f = realise(s, m.signature());
    let args: Vec<Value> = args.iter().map(|a| a % sh.matrix.len()).collect();
    if let Some(v) = walk(&sh.matrix, &f, &args, seeds) {
        prop_assert!(sh.matrix.respects(&v));
        let projected: BTreeMap<Formula, Value> = v.into_iter().map(|(g, y)| (g, eps[y])).collect();
        prop_assert!(m.respects(&projected), "{}: projection is not a valuation", l.stem);
    }
    Ok(())
}

/// Subsets of jointly realisable value sets are realisable.
pub fn downward_closure(m: &PNMatrix, mask: u64) -> Result<(), TestCaseError> {
    let xs: Vec<Value> = m.values().filter(|&x| mask >> (x % 64) & 1 == 1).collect();
    if m.t_m_contains(&xs) {
        for i in 0..xs.len() {
            let mut ys = xs.clone();
            ys.remove(i);
            prop_assert!(m.t_m_contains(&ys));
        }
    }
    Ok(())
}

/// Adding formulas to either side keeps a consequence.
pub fn dilution(m: &PNMatrix, g: &[Shape], d: &[Shape], a: &Shape, b: &Shape) -> Result<(), TestCaseError> {
    let sig = m.signature();
    let g: Vec<Formula> = g.iter().map(|s| realise(s, sig)).collect();
    let d: Vec<Formula> = d.iter().map(|s| realise(s, sig)).collect();
    if m.consequence(&Sequent::new(g.clone(), d.clone())).holds() {
        let wider = Sequent::new(g.into_iter().chain([realise(a, sig)]), d.into_iter().chain([realise(b, sig)]));
        prop_assert!(m.consequence(&wider).holds());
    }
    Ok(())
}
