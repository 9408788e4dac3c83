//! Monadic separators, discriminators and the analytic multiple-conclusion
//! calculus they induce.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::matrix::{PNMatrix, Sequent, Value};
use crate::rules::{Calculus, Rule, RuleTag};
use crate::strengthen::Sharp;
use crate::suite::formulas_up_to;
use crate::syntax::Formula;

/// Which side of the designation split `S_M(x)` falls on, if it is pure.
fn side(m: &PNMatrix, profile: &BTreeSet<Value>) -> Option<bool> {
    if profile.is_empty() {
        None
    } else if profile.iter().all(|&y| m.is_designated(y)) {
        Some(true)
    } else if profile.iter().all(|&y| !m.is_designated(y)) {
        Some(false)
    } else {
        None
    }
}

/// Per value, the side of each separator (`None` when impure or empty).
fn sides(m: &PNMatrix, s: &Formula, refinements: &[Vec<Value>]) -> Option<Vec<Option<bool>>> {
    let mut out = Vec::with_capacity(m.len());
    for x in m.values() {
        let profile = m.eval_formula_in(s, &[x], refinements);
        if profile.is_empty() {
            return None;
        }
        out.push(side(m, &profile));
    }
    Some(out)
}

fn separates(sides: &[Option<bool>], x: Value, y: Value) -> bool {
    matches!((sides[x], sides[y]), (Some(a), Some(b)) if a != b)
}

/// One separator per unordered pair of values, and the partition
/// `Ω_x`/`℧_x` it induces on each value's separators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Discriminator {
    pub separators: Vec<Formula>,
    /// `(x, y)` with `x < y` to an index into `separators`.
    pub pairs: BTreeMap<(Value, Value), usize>,
    /// Per separator and value, whether `S_M(x) ⊆ D`.
    designates: Vec<Vec<Option<bool>>>,
}

impl Discriminator {
    /// Indices of the separators in `S̃_x`, in separator order.
    pub fn assigned(&self, x: Value) -> BTreeSet<usize> {
        self.pairs
            .iter()
            .filter(|((a, b), _)| *a == x || *b == x)
            .map(|(_, &i)| i)
            .collect()
    }

    pub fn omega(&self, x: Value) -> Vec<&Formula> {
        self.part(x, true)
    }

    pub fn mho(&self, x: Value) -> Vec<&Formula> {
        self.part(x, false)
    }

    fn part(&self, x: Value, designated: bool) -> Vec<&Formula> {
        self.assigned(x)
            .into_iter()
            .filter(|&i| self.designates[i][x] == Some(designated))
            .map(|i| &self.separators[i])
            .collect()
    }

    /// Pick, for every pair, the first listed formula separating it.
    /// Unused formulas are dropped. Fails with the inseparable pairs.
    pub fn from_separators(m: &PNMatrix, candidates: &[Formula]) -> std::result::Result<Self, Vec<(Value, Value)>> {
        let refinements = m.total_refinements();
        let mut todo: Vec<(Value, Value)> = pairs(m.len());
        let mut chosen: Vec<(Formula, Vec<Option<bool>>)> = Vec::new();
        let mut pairs_out = BTreeMap::new();
        for s in candidates {
            if todo.is_empty() {
                break;
            }
            let Some(sd) = sides(m, s, &refinements) else { continue };
            let hit: Vec<(Value, Value)> = todo.iter().copied().filter(|&(x, y)| separates(&sd, x, y)).collect();
            if hit.is_empty() {
                continue;
            }
            todo.retain(|p| !hit.contains(p));
            for p in hit {
                pairs_out.insert(p, chosen.len());
            }
            chosen.push((s.clone(), sd));
        }
        if !todo.is_empty() {
            return Err(todo);
        }
        let (separators, designates) = chosen.into_iter().unzip();
        Ok(Discriminator {
            separators,
            pairs: pairs_out,
            designates,
        })
    }

    /// Recompute every profile and check each pair is really separated.
    pub fn validate(&self, m: &PNMatrix) -> Result<()> {
        let refinements = m.total_refinements();
        let fresh: Vec<Option<Vec<Option<bool>>>> = self.separators.iter().map(|s| sides(m, s, &refinements)).collect();
        for (x, y) in pairs(m.len()) {
            let Some(&i) = self.pairs.get(&(x, y)) else {
                return Err(Error::Discriminator(format!("no separator for {} and {}", m.label(x), m.label(y))));
            };
            let ok = fresh[i].as_ref().is_some_and(|sd| separates(sd, x, y));
            if !ok || fresh[i].as_ref() != Some(&self.designates[i]) {
                return Err(Error::Discriminator(format!(
                    "`{}` does not separate {} and {}",
                    self.separators[i].display(m.signature()),
                    m.label(x),
                    m.label(y)
                )));
            }
        }
        Ok(())
    }

    /// Human-readable partition table, one value per line.
    pub fn table(&self, m: &PNMatrix) -> String {
        let sig = m.signature();
        let show = |xs: Vec<&Formula>| xs.iter().map(|f| f.display(sig).to_string()).collect::<Vec<_>>().join(", ");
        let mut out = String::new();
        for x in m.values() {
            out.push_str(&format!("{}: omega {{{}}} mho {{{}}}\n", m.label(x), show(self.omega(x)), show(self.mho(x))));
        }
        out
    }
}

fn pairs(n: usize) -> Vec<(Value, Value)> {
    (0..n).flat_map(|x| (x + 1..n).map(move |y| (x, y))).collect()
}

/// Single-variable formulas of exactly this depth, by size then structure.
fn layer(m: &PNMatrix, depth: usize) -> Vec<Formula> {
    let mut fs: Vec<Formula> = formulas_up_to(m.signature(), 1, depth)
        .into_iter()
        .filter(|f| f.depth() == depth)
        .collect();
    fs.sort_by(|a, b| a.size().cmp(&b.size()).then_with(|| a.cmp(b)));
    fs
}

/// Iterative deepening over single-variable formulas. On failure returns
/// the pairs still inseparable at `max_depth`.
pub fn find_separators(m: &PNMatrix, max_depth: usize) -> std::result::Result<Discriminator, Vec<(Value, Value)>> {
    let mut candidates = Vec::new();
    let mut last = Err(pairs(m.len()));
    for d in 0..=max_depth {
        candidates.extend(layer(m, d));
        last = Discriminator::from_separators(m, &candidates);
        if last.is_ok() {
            break;
        }
    }
    last
}

/// Separators for `M♯` read off a discriminator of the base: two values
/// differing at look-ahead `w` are split by `S(w p)` where `S` separates
/// their entries at `w`. Proposals are validated on `M♯`; pairs with no
/// valid proposal fall back to a search up to `fallback_depth`.
pub fn transfer_discriminator(
    base_disc: &Discriminator,
    sharp: &Sharp,
    fallback_depth: usize,
) -> Result<Discriminator> {
    let m = &sharp.matrix;
    let p = Formula::var(1);
    let mut proposals: Vec<Formula> = Vec::new();
    for (f, g) in pairs(m.len()) {
        for (k, w) in sharp.theta.iter().enumerate() {
            let (a, b) = (sharp.profiles[f][k], sharp.profiles[g][k]);
            if a == b {
                continue;
            }
            let key = (a.min(b), a.max(b));
            if let Some(&i) = base_disc.pairs.get(&key) {
                let s = base_disc.separators[i].instantiate_single(&w.apply_unchecked(&p));
                if !proposals.contains(&s) {
                    proposals.push(s);
                }
            }
        }
    }
    proposals.sort_by(|a, b| a.depth().cmp(&b.depth()).then(a.size().cmp(&b.size())).then_with(|| a.cmp(b)));
    let mut candidates = proposals;
    match Discriminator::from_separators(m, &candidates) {
        Ok(d) => Ok(d),
        Err(_) => {
            for d in 0..=fallback_depth {
                candidates.extend(layer(m, d));
            }
            Discriminator::from_separators(m, &candidates).map_err(|left| {
                Error::Discriminator(format!("{} pair(s) of values have no separator up to depth {fallback_depth}", left.len()))
            })
        }
    }
}

fn apply_all(seps: &[&Formula], arg: &Formula) -> Vec<Formula> {
    seps.iter().map(|s| s.instantiate_single(arg)).collect()
}

fn rule_name(parts: &[&str]) -> String {
    parts
        .iter()
        .map(|p| p.chars().map(|c| if c.is_whitespace() || "#{}".contains(c) { '_' } else { c }).collect::<String>())
        .collect::<Vec<_>>()
        .join("_")
}

/// All choice sets hitting every listed family once.
fn hitting_sets(families: &[Vec<&Formula>]) -> Vec<BTreeSet<Formula>> {
    let mut out = vec![BTreeSet::new()];
    for fam in families {
        let mut next = Vec::new();
        for acc in &out {
            if fam.iter().any(|f| acc.contains(*f)) {
                next.push(acc.clone());
                continue;
            }
            for f in fam {
                let mut s = acc.clone();
                s.insert((*f).clone());
                next.push(s);
            }
        }
        out = next;
    }
    out.sort();
    out.dedup();
    out
}

/// The four rule families for `M` under `disc`, before simplification.
/// Trivial instances of the first two families are not emitted.
pub fn generate_calculus(m: &PNMatrix, disc: &Discriminator) -> Result<Calculus> {
    disc.validate(m)?;
    let sig = m.signature();
    let p = Formula::var(1);
    let n = m.len();
    let mut rules = Vec::new();
    let mut push = |r: Rule| {
        if !r.is_trivial() {
            rules.push(r);
        }
    };
    // existence
    let mut counter = 0;
    for mask in 0..(1usize << n) {
        let inside: Vec<Value> = (0..n).filter(|x| mask >> x & 1 == 1).collect();
        let outside: Vec<Value> = (0..n).filter(|x| mask >> x & 1 == 0).collect();
        let mhos: Vec<Vec<&Formula>> = inside.iter().map(|&x| disc.mho(x)).collect();
        let omegas: Vec<Vec<&Formula>> = outside.iter().map(|&x| disc.omega(x)).collect();
        if mhos.iter().chain(&omegas).any(Vec::is_empty) {
            continue;
        }
        for prem in hitting_sets(&mhos) {
            for conc in hitting_sets(&omegas) {
                let prem: Vec<&Formula> = prem.iter().collect();
                let conc: Vec<&Formula> = conc.iter().collect();
                counter += 1;
                push(Rule::new(
                    format!("ex{counter}"),
                    apply_all(&prem, &p),
                    apply_all(&conc, &p),
                    RuleTag::Exists,
                ));
            }
        }
    }
    // designation
    for x in m.values() {
        let (mut prem, mut conc) = (apply_all(&disc.omega(x), &p), apply_all(&disc.mho(x), &p));
        if m.is_designated(x) {
            conc.insert(0, p.clone());
        } else {
            prem.push(p.clone());
        }
        push(Rule::new(rule_name(&["d", m.label(x)]), prem, conc, RuleTag::Designation(m.label(x).into())));
    }
    // connectives
    for c in 0..sig.len() {
        let k = sig.arity(c);
        let vars: Vec<Formula> = (1..=k as u32).map(Formula::var).collect();
        let head = Formula::app(c, vars.clone());
        for xs in m.tuples(k) {
            let entry = m.entry(c, &xs);
            for y in m.values().filter(|y| !entry.contains(y)) {
                let mut prem = Vec::new();
                let mut conc = Vec::new();
                for (x, v) in xs.iter().zip(&vars) {
                    prem.extend(apply_all(&disc.omega(*x), v));
                    conc.extend(apply_all(&disc.mho(*x), v));
                }
                prem.extend(apply_all(&disc.omega(y), &head));
                conc.extend(apply_all(&disc.mho(y), &head));
                let labels: Vec<&str> = xs.iter().map(|&x| m.label(x)).collect();
                let mut name = vec![sig.name(c)];
                name.extend(&labels);
                name.push("not");
                name.push(m.label(y));
                push(Rule::new(
                    rule_name(&name),
                    prem,
                    conc,
                    RuleTag::Sigma {
                        conn: sig.name(c).into(),
                        args: labels.iter().map(|s| s.to_string()).collect(),
                        excluded: m.label(y).into(),
                    },
                ));
            }
        }
    }
    // incompatible value sets: only the minimal ones
    let refinements = m.total_refinements();
    for mask in 1..(1usize << n) {
        let xs: Vec<Value> = (0..n).filter(|x| mask >> x & 1 == 1).collect();
        if m.t_m_contains_in(&xs, &refinements) {
            continue;
        }
        let minimal = (0..xs.len()).all(|skip| {
            let sub: Vec<Value> = xs.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &x)| x).collect();
            m.t_m_contains_in(&sub, &refinements)
        });
        if !minimal {
            continue;
        }
        let mut prem = Vec::new();
        let mut conc = Vec::new();
        for (i, &x) in xs.iter().enumerate() {
            let v = Formula::var(i as u32 + 1);
            prem.extend(apply_all(&disc.omega(x), &v));
            conc.extend(apply_all(&disc.mho(x), &v));
        }
        let labels: Vec<&str> = xs.iter().map(|&x| m.label(x)).collect();
        let mut name = vec!["t"];
        name.extend(&labels);
        push(Rule::new(
            rule_name(&name),
            prem,
            conc,
            RuleTag::Incompatible(labels.iter().map(|s| s.to_string()).collect()),
        ));
    }
    Ok(Calculus {
        sig: sig.clone(),
        separators: disc.separators.clone(),
        rules,
    })
}

/// Rename variables to `p1, p2, …` in order of first occurrence, premises
/// first.
fn canonical(r: &Rule) -> (Vec<Formula>, Vec<Formula>) {
    let mut order: Vec<u32> = Vec::new();
    for f in r.premises.iter().chain(&r.conclusions) {
        collect_vars(f, &mut order);
    }
    let map: BTreeMap<u32, u32> = order.iter().enumerate().map(|(i, &v)| (v, i as u32 + 1)).collect();
    let rename = |f: &Formula| f.rename(&|v| map[&v]);
    let mut prem: Vec<Formula> = r.premises.iter().map(rename).collect();
    let mut conc: Vec<Formula> = r.conclusions.iter().map(rename).collect();
    prem.sort();
    conc.sort();
    (prem, conc)
}

fn collect_vars(f: &Formula, out: &mut Vec<u32>) {
    match f {
        Formula::Var(v) => {
            if !out.contains(v) {
                out.push(*v);
            }
        }
        Formula::App(_, args) => args.iter().for_each(|a| collect_vars(a, out)),
    }
}

/// Whether some substitution maps `general`'s premises into `specific`'s
/// premises and its conclusions into `specific`'s conclusions, so that
/// `specific` follows from `general` by one application plus dilution.
pub fn subsumes(general: &Rule, specific: &Rule) -> bool {
    let pattern: Vec<(&Formula, &[Formula])> = general
        .premises
        .iter()
        .map(|f| (f, specific.premises.as_slice()))
        .chain(general.conclusions.iter().map(|f| (f, specific.conclusions.as_slice())))
        .collect();
    fn go(pattern: &[(&Formula, &[Formula])], binding: &BTreeMap<u32, Formula>) -> bool {
        let Some(((f, targets), rest)) = pattern.split_first() else {
            return true;
        };
        targets.iter().any(|t| {
            let mut b = binding.clone();
            f.match_into(t, &mut b) && go(rest, &b)
        })
    }
    go(&pattern, &BTreeMap::new())
}

/// Cut two rules on a shared formula: `Γ1, A / Δ1` and `Γ2 / Δ2, A` give
/// `Γ1, Γ2 / Δ1, Δ2`.
fn cut(with_premise: &Rule, with_conclusion: &Rule, a: &Formula) -> Rule {
    let premises = with_premise
        .premises
        .iter()
        .filter(|f| *f != a)
        .chain(&with_conclusion.premises)
        .cloned()
        .collect();
    let conclusions = with_premise
        .conclusions
        .iter()
        .chain(with_conclusion.conclusions.iter().filter(|f| *f != a))
        .cloned()
        .collect();
    Rule::new(with_premise.name.clone(), premises, conclusions, with_premise.tag.clone())
}

/// Drop trivial and duplicate rules, strengthen rules by cuts whose result
/// subsumes a parent, then drop rules subsumed by another. The result is
/// sorted by tag, then name.
pub fn simplify(rules: &[Rule]) -> Vec<Rule> {
    let mut seen = BTreeSet::new();
    let mut rs: Vec<Rule> = rules
        .iter()
        .filter(|r| !r.is_trivial())
        .filter(|r| seen.insert(canonical(r)))
        .cloned()
        .collect();
    loop {
        let strengthened = strengthen_once(&mut rs);
        let before = rs.len();
        rs = drop_subsumed(rs);
        if !strengthened && rs.len() == before {
            break;
        }
    }
    rs.sort_by(|a, b| a.tag.cmp(&b.tag).then_with(|| a.name.cmp(&b.name)));
    rs
}

/// Replace one rule by a cut of it with another when the cut subsumes it.
fn strengthen_once(rs: &mut [Rule]) -> bool {
    for i in 0..rs.len() {
        for j in (0..rs.len()).filter(|&j| j != i) {
            for a in rs[i].premises.iter().filter(|a| rs[j].conclusions.contains(a)) {
                let r = cut(&rs[i], &rs[j], a);
                if !r.is_trivial() && subsumes(&r, &rs[i]) && !subsumes(&rs[i], &r) {
                    rs[i] = r;
                    return true;
                }
            }
        }
    }
    false
}

/// Keep the earlier of two rules subsuming each other.
fn drop_subsumed(rs: Vec<Rule>) -> Vec<Rule> {
    let mut keep: Vec<Rule> = Vec::new();
    for r in rs {
        if !keep.iter().any(|k| subsumes(k, &r)) {
            keep.retain(|k| !subsumes(&r, k));
            keep.push(r);
        }
    }
    keep
}

/// Semantic soundness of each rule for `⊳_M`: the rules whose premises can
/// all be designated while no conclusion is.
pub fn unsound_rules<'a>(m: &PNMatrix, rules: &'a [Rule]) -> Vec<&'a Rule> {
    let refinements = m.total_refinements();
    rules
        .iter()
        .filter(|r| {
            let s = Sequent::new(r.premises.iter().cloned(), r.conclusions.iter().cloned());
            !m.consequence_in(&s, &refinements).holds()
        })
        .collect()
}

/// Drop premises and conclusions one at a time, last first, as long as the
/// rule stays sound for `⊳_M`. A stronger sound rule derives the original by
/// dilution inside the same universe, so completeness and analyticity are
/// kept.
pub fn minimize(m: &PNMatrix, rule: &Rule) -> Rule {
    let refinements = m.total_refinements();
    let sound = |prem: &[Formula], conc: &[Formula]| {
        let s = Sequent::new(prem.iter().cloned(), conc.iter().cloned());
        m.consequence_in(&s, &refinements).holds()
    };
    let mut prem = rule.premises.clone();
    let mut conc = rule.conclusions.clone();
    for i in (0..conc.len()).rev() {
        let mut fewer = conc.clone();
        fewer.remove(i);
        if sound(&prem, &fewer) {
            conc = fewer;
        }
    }
    for i in (0..prem.len()).rev() {
        let mut fewer = prem.clone();
        fewer.remove(i);
        if sound(&fewer, &conc) {
            prem = fewer;
        }
    }
    Rule::new(rule.name.clone(), prem, conc, rule.tag.clone())
}

/// Generate, simplify and minimize, checking soundness of the result.
pub fn calculus_for(m: &PNMatrix, disc: &Discriminator) -> Result<Calculus> {
    let raw = generate_calculus(m, disc)?;
    let minimized: Vec<Rule> = simplify(&raw.rules).iter().map(|r| minimize(m, r)).collect();
    let rules = simplify(&minimized);
    if let Some(r) = unsound_rules(m, &rules).first() {
        return Err(Error::Discriminator(format!("generated rule `{}` is unsound", r.display(m.signature()))));
    }
    Ok(Calculus { rules, ..raw })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_spec;
    use crate::syntax::parse_formula;

    const EXP: &str = "\
signature { imp/2 neg/1 }
det { imp }
values { 00 01 10 11 }
designated { 10 11 }
table imp {
  (00,00)->{10} (00,01)->{10} (00,10)->{10} (00,11)->{}
  (01,00)->{10} (01,01)->{10} (01,10)->{10} (01,11)->{}
  (10,00)->{00,01} (10,01)->{00,01} (10,10)->{10} (10,11)->{}
  (11,00)->{} (11,01)->{} (11,10)->{} (11,11)->{11}
}
table neg { (00)->{00,01} (01)->{10} (10)->{00,01} (11)->{11} }
";

    fn names(m: &PNMatrix, fs: Vec<&Formula>) -> Vec<String> {
        fs.iter().map(|f| f.display(m.signature()).to_string()).collect()
    }

    #[test]
    fn explosion_partition() {
        let m = parse_spec(EXP).unwrap().matrix;
        let d = find_separators(&m, 2).unwrap();
        assert_eq!(names(&m, d.separators.iter().collect()), ["p1", "neg(p1)"]);
        assert!(d.omega(0).is_empty());
        assert_eq!(names(&m, d.mho(0)), ["p1", "neg(p1)"]);
        assert_eq!(names(&m, d.omega(1)), ["neg(p1)"]);
        assert_eq!(names(&m, d.omega(3)), ["p1", "neg(p1)"]);
        d.validate(&m).unwrap();
    }

    #[test]
    fn one_value_needs_nothing() {
        let m = parse_spec("signature { neg/1 }\nvalues { 1 }\ndesignated { 1 }\ntable neg { (1)->{1} }\n")
            .unwrap()
            .matrix;
        let d = find_separators(&m, 1).unwrap();
        assert!(d.separators.is_empty());
    }

    #[test]
    fn explosion_rule_survives_simplification() {
        let m = parse_spec(EXP).unwrap().matrix;
        let d = find_separators(&m, 2).unwrap();
        let calc = calculus_for(&m, &d).unwrap();
        let sig = m.signature();
        let f = |s: &str| parse_formula(s, sig).unwrap();
        let exp = Rule::user("exp", vec![f("p1"), f("neg(p1)")], vec![f("p2")]);
        assert!(calc.rules.iter().any(|r| subsumes(r, &exp) && subsumes(&exp, r)));
        let mp = Rule::user("mp", vec![f("p1"), f("imp(p1, p2)")], vec![f("p2")]);
        assert!(calc.rules.iter().any(|r| subsumes(r, &mp) && subsumes(&mp, r)));
        assert!(calc.rules.iter().all(|r| !r.is_trivial()));
    }

    #[test]
    fn subsumption_by_substitution() {
        let m = parse_spec(EXP).unwrap().matrix;
        let f = |s: &str| parse_formula(s, m.signature()).unwrap();
        let general = Rule::user("a", vec![f("p1"), f("neg(p1)")], vec![f("p2")]);
        let specific = Rule::user("b", vec![f("p2"), f("neg(p2)"), f("p1")], vec![f("neg(p1)")]);
        assert!(subsumes(&general, &specific));
        assert!(!subsumes(&specific, &general));
    }

    #[test]
    fn trivial_rules_are_dropped() {
        let m = parse_spec(EXP).unwrap().matrix;
        let f = |s: &str| parse_formula(s, m.signature()).unwrap();
        let r = Rule::user("t", vec![f("p1")], vec![f("p1"), f("p2")]);
        assert!(simplify(&[r]).is_empty());
    }
}
