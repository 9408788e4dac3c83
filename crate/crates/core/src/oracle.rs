//! Bounded semantic checks of `⊳^Ax` used to cross-check the strengthened
//! matrix: a SAT-backed axiom oracle, finite slices of the flat
//! construction and a profile probe.
//!
//! The oracle only constrains the axiom instances that fall inside a finite
//! universe, so its `Holds` is exact while a `Candidate` countermodel may
//! still be killed by an instance outside the universe.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use varisat::{ExtendFormula, Lit, Solver, Var};

use crate::error::{Error, Result};
use crate::matrix::{Countermodel, PNMatrix, Sequent, Value, Verdict};
use crate::strengthen::{decompose_all, Sharp};
use crate::suite::{formulas_up_to, sequents, SuiteBounds};
use crate::syntax::{lookahead_set, subformulas, Formula, LookaheadString};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleOptions {
    /// Rounds of look-ahead application to the sequent's subformulas.
    pub depth: usize,
    /// Add axiom instances whose variables range over `sub(Γ∪Δ)`.
    pub instantiate: bool,
    pub max_universe: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            depth: 1,
            instantiate: true,
            max_universe: 50_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleVerdict {
    Holds,
    /// Countermodel on the universe, restricted to `sub(Γ∪Δ)`.
    Candidate(Countermodel),
}

impl OracleVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, OracleVerdict::Holds)
    }
}

/// `⊳_M` restricted to valuations designating every axiom instance.
#[derive(Debug, Clone)]
pub struct AxiomOracle<'a> {
    m: &'a PNMatrix,
    axioms: Vec<Formula>,
    theta: Vec<LookaheadString>,
    refinements: Vec<Vec<Value>>,
}

impl<'a> AxiomOracle<'a> {
    pub fn new(m: &'a PNMatrix, axioms: &[Formula]) -> Self {
        // non-simple axioms still constrain; they just contribute no look-aheads
        let theta = decompose_all(axioms, m.signature())
            .map(|s| lookahead_set(&s).into_iter().filter(|w| !w.is_empty()).collect())
            .unwrap_or_default();
        AxiomOracle {
            m,
            axioms: axioms.to_vec(),
            theta,
            refinements: m.total_refinements(),
        }
    }

    pub fn universe(&self, s: &Sequent, opts: OracleOptions) -> Result<BTreeSet<Formula>> {
        let base = subformulas(s.formulas());
        let mut u = base.clone();
        for _ in 0..opts.depth {
            let next: Vec<Formula> = u
                .iter()
                .flat_map(|a| self.theta.iter().map(move |w| w.apply_unchecked(a)))
                .collect();
            u.extend(subformulas(&next));
            self.cap(&u, opts)?;
        }
        if opts.instantiate {
            let pool: Vec<&Formula> = base.iter().collect();
            for ax in &self.axioms {
                let vars: Vec<u32> = ax.vars().into_iter().collect();
                if pool.is_empty() && !vars.is_empty() {
                    continue;
                }
                let mut idx = vec![0usize; vars.len()];
                loop {
                    let sigma: BTreeMap<u32, Formula> =
                        vars.iter().zip(&idx).map(|(&v, &i)| (v, pool[i].clone())).collect();
                    u.extend(ax.substitute(&sigma).subformulas());
                    if !crate::matrix::bump(&mut idx, pool.len()) {
                        break;
                    }
                }
                self.cap(&u, opts)?;
            }
        }
        Ok(u)
    }

    fn cap(&self, u: &BTreeSet<Formula>, opts: OracleOptions) -> Result<()> {
        if u.len() > opts.max_universe {
            return Err(Error::Resource(format!("oracle universe exceeds {} formulas", opts.max_universe)));
        }
        Ok(())
    }

    pub fn is_instance(&self, f: &Formula) -> bool {
        self.axioms.iter().any(|ax| ax.match_into(f, &mut BTreeMap::new()))
    }

    pub fn check(&self, s: &Sequent, opts: OracleOptions) -> Result<OracleVerdict> {
        let u = self.universe(s, opts)?;
        Ok(self.solve(s, &u, &BTreeMap::new()))
    }

    /// Decide over a caller-chosen universe; `sub(Γ∪Δ)` is always added.
    pub fn check_in(&self, s: &Sequent, universe: &BTreeSet<Formula>) -> OracleVerdict {
        let mut u = subformulas(universe);
        u.extend(subformulas(s.formulas()));
        self.solve(s, &u, &BTreeMap::new())
    }

    /// As [`AxiomOracle::check`] with some formulas' values fixed; a
    /// candidate means the partial assignment extends over the universe.
    pub fn check_fixed(&self, s: &Sequent, fixed: &BTreeMap<Formula, Value>, opts: OracleOptions) -> Result<OracleVerdict> {
        let u = self.universe(s, opts)?;
        Ok(self.solve(s, &u, fixed))
    }

    fn solve(&self, s: &Sequent, u: &BTreeSet<Formula>, fixed: &BTreeMap<Formula, Value>) -> OracleVerdict {
        if self.refinements.is_empty() {
            return OracleVerdict::Holds;
        }
        let m = self.m;
        let n = m.len();
        let order: Vec<&Formula> = u.iter().collect();
        let pos: BTreeMap<&Formula, usize> = order.iter().enumerate().map(|(i, f)| (*f, i)).collect();
        let x = |i: usize, v: Value| Var::from_index(i * n + v);
        let sel = |r: usize| Var::from_index(order.len() * n + r);
        let mut solver = Solver::new();
        let selectors: Vec<Lit> = (0..self.refinements.len()).map(|r| sel(r).positive()).collect();
        solver.add_clause(&selectors);
        for (r, keep) in self.refinements.iter().enumerate() {
            for v in (0..n).filter(|v| !keep.contains(v)) {
                for i in 0..order.len() {
                    solver.add_clause(&[sel(r).negative(), x(i, v).negative()]);
                }
            }
        }
        for (i, f) in order.iter().enumerate() {
            let some: Vec<Lit> = (0..n).map(|v| x(i, v).positive()).collect();
            solver.add_clause(&some);
            for a in 0..n {
                for b in a + 1..n {
                    solver.add_clause(&[x(i, a).negative(), x(i, b).negative()]);
                }
            }
            if let Formula::App(c, args) = f {
                let ai: Vec<usize> = args.iter().map(|a| pos[a]).collect();
                for tuple in m.tuples(args.len()) {
                    let mut clause: Vec<Lit> = ai.iter().zip(&tuple).map(|(&j, &v)| x(j, v).negative()).collect();
                    clause.extend(m.entry(*c, &tuple).iter().map(|&y| x(i, y).positive()));
                    solver.add_clause(&clause);
                }
            }
            let des = s.gamma.contains(*f) || self.is_instance(f);
            if des {
                let clause: Vec<Lit> = (0..n).filter(|&v| m.is_designated(v)).map(|v| x(i, v).positive()).collect();
                solver.add_clause(&clause);
            }
            if s.delta.contains(*f) {
                for v in (0..n).filter(|&v| m.is_designated(v)) {
                    solver.add_clause(&[x(i, v).negative()]);
                }
            }
            if let Some(&v) = fixed.get(*f) {
                solver.add_clause(&[x(i, v).positive()]);
            }
        }
        // the solver only fails on resource limits, none of which are set
        if !solver.solve().unwrap_or(false) {
            return OracleVerdict::Holds;
        }
        let model: BTreeSet<Lit> = solver.model().unwrap_or_default().into_iter().collect();
        let value_of = |i: usize| (0..n).find(|&v| model.contains(&x(i, v).positive())).unwrap_or(0);
        let refinement = (0..self.refinements.len())
            .find(|&r| model.contains(&sel(r).positive()))
            .map(|r| self.refinements[r].clone())
            .unwrap_or_default();
        let assignment = subformulas(s.formulas())
            .into_iter()
            .map(|f| {
                let v = value_of(pos[&f]);
                (f, v)
            })
            .collect();
        OracleVerdict::Candidate(Countermodel { refinement, assignment })
    }
}

/// One-shot form of [`AxiomOracle::check`].
pub fn axiom_consequence_oracle(m: &PNMatrix, axioms: &[Formula], s: &Sequent, depth: usize) -> Result<OracleVerdict> {
    AxiomOracle::new(m, axioms).check(s, OracleOptions { depth, ..OracleOptions::default() })
}

/// The flat construction restricted to a subformula-closed universe. Values
/// are pairs `(x, A)`; a pair whose formula is a recognised axiom instance
/// must carry a designated `x`.
#[derive(Debug, Clone)]
pub struct FlatSlice {
    pub matrix: PNMatrix,
    pub pairs: Vec<(Value, Formula)>,
    pub universe: BTreeSet<Formula>,
}

impl FlatSlice {
    /// `Γ ⊳ Δ` over assignments of the whole universe into the slice. There
    /// is no totality requirement since every table is partial at the
    /// universe's edge.
    pub fn consequence(&self, s: &Sequent) -> Verdict {
        let all: Vec<Value> = self.matrix.values().collect();
        self.matrix.consequence_within(s, &self.universe, &[all])
    }
}

pub fn flat_slice(m: &PNMatrix, axioms: &[Formula], universe: &BTreeSet<Formula>) -> Result<FlatSlice> {
    if subformulas(universe) != *universe {
        return Err(Error::InvalidMatrix("slice universe is not closed under subformulas".into()));
    }
    let oracle = AxiomOracle::new(m, axioms);
    let mut pairs = Vec::new();
    for a in universe {
        let inst = oracle.is_instance(a);
        for x in m.values() {
            if !inst || m.is_designated(x) {
                pairs.push((x, a.clone()));
            }
        }
    }
    let index: BTreeMap<(Value, &Formula), Value> = pairs.iter().enumerate().map(|(i, (x, a))| ((*x, a), i)).collect();
    let sig = m.signature();
    let labels: Vec<String> = pairs.iter().map(|(x, a)| format!("{}:{}", m.label(*x), a.display(sig))).collect();
    let designated: Vec<Value> = (0..pairs.len()).filter(|&i| m.is_designated(pairs[i].0)).collect();
    let matrix = PNMatrix::from_fn(sig.clone(), labels, &designated, |c, tuple| {
        let args: Vec<Formula> = tuple.iter().map(|&i| pairs[i].1.clone()).collect();
        let xs: Vec<Value> = tuple.iter().map(|&i| pairs[i].0).collect();
        let target = Formula::app(c, args);
        m.entry(c, &xs)
            .iter()
            .filter_map(|&y| index.get(&(y, &target)).copied())
            .collect()
    })?;
    Ok(FlatSlice {
        matrix,
        pairs,
        universe: universe.clone(),
    })
}

/// Look-ahead profiles of `p1` that some bounded assignment realises while
/// designating every axiom instance in the universe: all formulas over `p1`
/// up to `depth` plus the look-ahead applications to `p1`. Since instances
/// outside the universe are unconstrained this over-approximates the
/// strengthened value set, and shrinks as `depth` grows.
pub fn sharp_semantic_probe(m: &PNMatrix, axioms: &[Formula], depth: usize, max_universe: usize) -> Result<BTreeSet<Vec<Value>>> {
    if depth == 0 {
        return Err(Error::Resource("probe depth must be positive".into()));
    }
    let sig = m.signature();
    let simple = decompose_all(axioms, sig)?;
    let theta: Vec<LookaheadString> = lookahead_set(&simple).into_iter().collect();
    let p = Formula::var(1);
    let mut u: BTreeSet<Formula> = formulas_up_to(sig, 1, depth).into_iter().collect();
    u.extend(subformulas(theta.iter().map(|w| w.apply_unchecked(&p)).collect::<Vec<_>>().iter()));
    if u.len() > max_universe {
        return Err(Error::Resource(format!("probe universe exceeds {max_universe} formulas")));
    }
    let oracle = AxiomOracle::new(m, axioms);
    let empty = Sequent::new(Vec::new(), Vec::new());
    let theta_set: BTreeSet<LookaheadString> = theta.iter().cloned().collect();
    let candidates = crate::strengthen::chain_candidates(m, &theta_set);
    let found = candidates
        .into_par_iter()
        .filter(|f| {
            let fixed: BTreeMap<Formula, Value> =
                theta.iter().zip(f).map(|(w, &v)| (w.apply_unchecked(&p), v)).collect();
            !oracle.solve(&empty, &u, &fixed).holds()
        })
        .collect();
    Ok(found)
}

#[derive(Debug, Clone)]
pub struct Disagreement {
    pub sequent: Sequent,
    pub sharp: Verdict,
    pub oracle: OracleVerdict,
    pub reason: &'static str,
}

/// Outcome of comparing `⊳_{M♯}` with the axiom oracle over a suite.
#[derive(Debug, Clone, Default)]
pub struct EquivalenceReport {
    pub checked: usize,
    pub both_hold: usize,
    /// `M♯` countermodel confirmed to extend over the oracle universe.
    pub both_fail: usize,
    /// `M♯` holds but the oracle only has a candidate countermodel.
    pub inconclusive: usize,
    pub disagreements: Vec<Disagreement>,
}

impl EquivalenceReport {
    pub fn ok(&self) -> bool {
        self.disagreements.is_empty()
    }
}

/// Compare the strengthened matrix against the oracle on every suite
/// sequent. A disagreement is either the oracle proving a sequent the
/// strengthened matrix refutes, or a strengthened countermodel whose
/// ε-projection does not extend over the oracle universe.
pub fn verify_equivalence(
    m: &PNMatrix,
    axioms: &[Formula],
    sharp: &Sharp,
    bounds: SuiteBounds,
    opts: OracleOptions,
) -> Result<EquivalenceReport> {
    let oracle = AxiomOracle::new(m, axioms);
    let refinements = sharp.matrix.total_refinements();
    let eps = sharp.epsilon_projection();
    let suite = sequents(m.signature(), bounds);
    let rows: Vec<(Sequent, Verdict, OracleVerdict, Option<bool>)> = suite
        .into_par_iter()
        .map(|s| {
            let v = sharp.matrix.consequence_in(&s, &refinements);
            // a confirmed countermodel is already an oracle candidate, which
            // saves the unconstrained solve
            let (o, confirmed) = match &v {
                Verdict::Fails(cm) => {
                    let projected = cm.assignment.iter().map(|(f, &y)| (f.clone(), eps[y])).collect();
                    match oracle.check_fixed(&s, &projected, opts)? {
                        o @ OracleVerdict::Candidate(_) => (o, Some(true)),
                        OracleVerdict::Holds => (oracle.check(&s, opts)?, Some(false)),
                    }
                }
                Verdict::Holds { .. } => (oracle.check(&s, opts)?, None),
            };
            Ok((s, v, o, confirmed))
        })
        .collect::<Result<_>>()?;
    let mut report = EquivalenceReport::default();
    for (s, v, o, confirmed) in rows {
        report.checked += 1;
        let reason = match (v.holds(), o.holds(), confirmed) {
            (true, true, _) => {
                report.both_hold += 1;
                continue;
            }
            (true, false, _) => {
                report.inconclusive += 1;
                continue;
            }
            (false, true, _) => "oracle proves a sequent the strengthened matrix refutes",
            (false, false, Some(true)) => {
                report.both_fail += 1;
                continue;
            }
            (false, false, _) => "strengthened countermodel does not extend over the oracle universe",
        };
        report.disagreements.push(Disagreement {
            sequent: s,
            sharp: v,
            oracle: o,
            reason,
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_spec;
    use crate::syntax::parse_formula;

    const B: &str = "\
signature { imp/2 neg/1 }
det { imp }
values { 0 1 }
designated { 1 }
table imp { (0,0)->{1} (0,1)->{1} (1,0)->{0} (1,1)->{1} }
table neg { (0)->{0,1} (1)->{0,1} }
";

    fn seq(m: &PNMatrix, g: &[&str], d: &[&str]) -> Sequent {
        let p = |x: &&str| parse_formula(x, m.signature()).unwrap();
        Sequent::new(g.iter().map(p), d.iter().map(p))
    }

    #[test]
    fn explosion_needs_the_axiom() {
        let m = parse_spec(B).unwrap().matrix;
        let exp = parse_formula("imp(p1, imp(neg(p1), p2))", m.signature()).unwrap();
        let s = seq(&m, &["p1", "neg(p1)"], &["p2"]);
        assert!(!axiom_consequence_oracle(&m, &[], &s, 1).unwrap().holds());
        assert!(axiom_consequence_oracle(&m, &[exp], &s, 1).unwrap().holds());
    }

    #[test]
    fn no_axioms_matches_consequence() {
        let m = parse_spec(B).unwrap().matrix;
        let s = seq(&m, &["imp(p1, p2)", "p1"], &["p2"]);
        assert!(axiom_consequence_oracle(&m, &[], &s, 0).unwrap().holds());
        let t = seq(&m, &["neg(neg(p1))"], &["p1"]);
        match axiom_consequence_oracle(&m, &[], &t, 0).unwrap() {
            OracleVerdict::Candidate(cm) => assert!(m.respects(&cm.assignment)),
            OracleVerdict::Holds => panic!("double negation is not valid in B"),
        }
    }

    #[test]
    fn slice_drops_undesignated_instances() {
        let m = parse_spec(B).unwrap().matrix;
        let exp = parse_formula("imp(p1, imp(neg(p1), p2))", m.signature()).unwrap();
        let u = exp.subformulas();
        let slice = flat_slice(&m, std::slice::from_ref(&exp), &u).unwrap();
        assert!(!slice.pairs.contains(&(0, exp.clone())));
        assert!(slice.pairs.contains(&(1, exp.clone())));
        assert_eq!(slice.pairs.len(), 2 * u.len() - 1);
        let s = seq(&m, &["p1", "neg(p1)"], &["p2"]);
        assert!(slice.consequence(&s).holds());
        assert!(AxiomOracle::new(&m, &[exp]).check_in(&s, &u).holds());
    }
}
