//! Branching proofs in multiple-conclusion calculi: analytic search,
//! checking and rendering.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};
use crate::matrix::Sequent;
use crate::rules::{Calculus, Rule};
use crate::syntax::{s_subformulas, Formula, Signature};

pub type Substitution = BTreeMap<u32, Formula>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProofTree {
    /// The branch already contains this goal from `Δ`.
    Leaf { goal: Formula },
    /// A rule with no conclusions discontinued the branch.
    Closed { rule: String, instance: Substitution },
    /// One child per instantiated conclusion, in rule order.
    Expansion {
        rule: String,
        instance: Substitution,
        children: Vec<(Formula, ProofTree)>,
    },
}

impl ProofTree {
    pub fn size(&self) -> usize {
        match self {
            ProofTree::Expansion { children, .. } => 1 + children.iter().map(|(_, c)| c.size()).sum::<usize>(),
            _ => 1,
        }
    }

    /// Leaves in left-to-right order.
    pub fn branches(&self) -> Vec<&ProofTree> {
        match self {
            ProofTree::Expansion { children, .. } => children.iter().flat_map(|(_, c)| c.branches()).collect(),
            leaf => vec![leaf],
        }
    }

    pub fn closed_branches(&self) -> usize {
        self.branches().iter().filter(|b| matches!(b, ProofTree::Closed { .. })).count()
    }

    /// Names of the rules used, depth first, left to right.
    pub fn rules_used(&self) -> Vec<&str> {
        match self {
            ProofTree::Leaf { .. } => Vec::new(),
            ProofTree::Closed { rule, .. } => vec![rule],
            ProofTree::Expansion { rule, children, .. } => {
                let mut out = vec![rule.as_str()];
                for (_, c) in children {
                    out.extend(c.rules_used());
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProofOptions {
    pub max_nodes: usize,
}

impl Default for ProofOptions {
    fn default() -> Self {
        ProofOptions { max_nodes: 200_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchOutcome {
    Proved(ProofTree),
    /// A branch closed under every rule instance within the universe, with
    /// no goal and no closing rule: the calculus does not derive the
    /// sequent.
    Saturated(BTreeSet<Formula>),
}

impl SearchOutcome {
    pub fn proved(&self) -> bool {
        matches!(self, SearchOutcome::Proved(_))
    }
}

struct Instance {
    rule: usize,
    sigma: Substitution,
    premises: Vec<usize>,
    conclusions: Vec<usize>,
}

/// Every substitution placing all of the rule's formulas inside `u`.
fn instances_of(rule: &Rule, u: &[Formula]) -> Vec<Substitution> {
    let mut pattern: Vec<&Formula> = rule.premises.iter().chain(&rule.conclusions).collect();
    pattern.sort_by_key(|f| std::cmp::Reverse(f.size()));
    pattern.dedup();
    let mut out = Vec::new();
    fn go(pattern: &[&Formula], u: &[Formula], binding: &Substitution, out: &mut Vec<Substitution>) {
        let Some((f, rest)) = pattern.split_first() else {
            out.push(binding.clone());
            return;
        };
        if f.as_var().is_some_and(|v| binding.contains_key(&v)) {
            if u.binary_search(&f.substitute(binding)).is_ok() {
                go(rest, u, binding, out);
            }
            return;
        }
        for t in u {
            let mut b = binding.clone();
            if f.match_into(t, &mut b) {
                go(rest, u, &b, out);
            }
        }
    }
    go(&pattern, u, &BTreeMap::new(), &mut out);
    out.sort();
    out.dedup();
    out
}

struct Search<'a> {
    calc: &'a Calculus,
    u: Vec<Formula>,
    instances: Vec<Instance>,
    goals: Vec<usize>,
    failed: HashMap<FixedBitSet, FixedBitSet>,
    nodes: usize,
    max_nodes: usize,
}

impl<'a> Search<'a> {
    fn new(calc: &'a Calculus, s: &Sequent, opts: ProofOptions) -> Self {
        let u: Vec<Formula> = s_subformulas(s.formulas(), &calc.separators).into_iter().collect();
        let pos = |f: &Formula| u.binary_search(f).expect("instance formula lies in the universe");
        let mut instances = Vec::new();
        for (ri, rule) in calc.rules.iter().enumerate() {
            for sigma in instances_of(rule, &u) {
                let mut premises: Vec<usize> = rule.premises.iter().map(|f| pos(&f.substitute(&sigma))).collect();
                premises.sort_unstable();
                premises.dedup();
                let mut conclusions: Vec<usize> = Vec::new();
                for f in &rule.conclusions {
                    let i = pos(&f.substitute(&sigma));
                    if !conclusions.contains(&i) {
                        conclusions.push(i);
                    }
                }
                instances.push(Instance {
                    rule: ri,
                    sigma,
                    premises,
                    conclusions,
                });
            }
        }
        // fewest conclusions first, so closing rules and plain inferences
        // come before branching
        instances.sort_by_key(|i| i.conclusions.len());
        let goals = s.delta.iter().map(pos).collect();
        Search {
            calc,
            u,
            instances,
            goals,
            failed: HashMap::new(),
            nodes: 0,
            max_nodes: opts.max_nodes,
        }
    }

    fn go(&mut self, state: &FixedBitSet) -> Result<std::result::Result<ProofTree, FixedBitSet>> {
        if let Some(&g) = self.goals.iter().find(|&&g| state.contains(g)) {
            return Ok(Ok(ProofTree::Leaf { goal: self.u[g].clone() }));
        }
        if let Some(sat) = self.failed.get(state) {
            return Ok(Err(sat.clone()));
        }
        self.nodes += 1;
        if self.nodes > self.max_nodes {
            return Err(Error::Resource(format!("proof search exceeded {} nodes", self.max_nodes)));
        }
        // closing rules first, then the fewest branches that do not end in
        // a goal at once
        let pick = self
            .instances
            .iter()
            .enumerate()
            .filter(|(_, i)| {
                i.premises.iter().all(|&p| state.contains(p)) && i.conclusions.iter().all(|&c| !state.contains(c))
            })
            .min_by_key(|(k, i)| {
                let open = i.conclusions.iter().filter(|c| !self.goals.contains(c)).count();
                (!i.conclusions.is_empty(), open, i.conclusions.len(), *k)
            })
            .map(|(k, _)| k);
        let Some(k) = pick else {
            self.failed.insert(state.clone(), state.clone());
            return Ok(Err(state.clone()));
        };
        let inst = &self.instances[k];
        let rule = self.calc.rules[inst.rule].name.clone();
        let sigma = inst.sigma.clone();
        if inst.conclusions.is_empty() {
            return Ok(Ok(ProofTree::Closed { rule, instance: sigma }));
        }
        let conclusions = inst.conclusions.clone();
        let mut children = Vec::with_capacity(conclusions.len());
        for c in conclusions {
            let mut next = state.clone();
            next.insert(c);
            match self.go(&next)? {
                Ok(t) => children.push((self.u[c].clone(), t)),
                Err(sat) => {
                    self.failed.insert(state.clone(), sat.clone());
                    return Ok(Err(sat));
                }
            }
        }
        Ok(Ok(ProofTree::Expansion {
            rule,
            instance: sigma,
            children,
        }))
    }
}

/// Search for a proof of `Δ` from `Γ` using only formulas of
/// `sub_S(Γ ∪ Δ)`. Complete within that universe: a saturated branch
/// means no such proof exists.
pub fn prove(calc: &Calculus, s: &Sequent, opts: ProofOptions) -> Result<SearchOutcome> {
    let mut search = Search::new(calc, s, opts);
    let mut state = FixedBitSet::with_capacity(search.u.len());
    for f in &s.gamma {
        state.insert(search.u.binary_search(f).expect("premise lies in the universe"));
    }
    Ok(match search.go(&state)? {
        Ok(tree) => SearchOutcome::Proved(prune(tree, calc)),
        Err(sat) => SearchOutcome::Saturated(sat.ones().map(|i| search.u[i].clone()).collect()),
    })
}

/// Replace each expansion by the first child whose subtree never uses the
/// formula it introduced; that subtree is already a proof one level up.
fn prune(tree: ProofTree, calc: &Calculus) -> ProofTree {
    let ProofTree::Expansion { rule, instance, children } = tree else {
        return tree;
    };
    let children: Vec<(Formula, ProofTree)> = children.into_iter().map(|(f, c)| (f, prune(c, calc))).collect();
    if let Some(i) = children.iter().position(|(f, c)| !uses(c, f, calc)) {
        return children.into_iter().nth(i).map(|(_, c)| c).expect("index in range");
    }
    ProofTree::Expansion { rule, instance, children }
}

fn uses(tree: &ProofTree, f: &Formula, calc: &Calculus) -> bool {
    let in_premises = |rule: &str, sigma: &Substitution| {
        calc.rule(rule)
            .is_some_and(|r| r.premises.iter().any(|p| p.substitute(sigma) == *f))
    };
    match tree {
        ProofTree::Leaf { goal } => goal == f,
        ProofTree::Closed { rule, instance } => in_premises(rule, instance),
        ProofTree::Expansion { rule, instance, children } => {
            in_premises(rule, instance) || children.iter().any(|(_, c)| uses(c, f, calc))
        }
    }
}

/// Validate a tree against the calculus and sequent, reporting the first
/// violation.
pub fn check_proof(tree: &ProofTree, calc: &Calculus, s: &Sequent) -> Result<()> {
    let u = s_subformulas(s.formulas(), &calc.separators);
    let mut path: BTreeSet<Formula> = s.gamma.clone();
    check_node(tree, calc, s, &u, &mut path)
}

fn instantiate(rule: &Rule, sigma: &Substitution, u: &BTreeSet<Formula>, sig: &Signature) -> Result<(Vec<Formula>, Vec<Formula>)> {
    if let Some(v) = rule.vars().into_iter().find(|v| !sigma.contains_key(v)) {
        return Err(Error::Instance(format!("rule `{}` needs a value for p{v}", rule.name)));
    }
    let (prem, conc) = rule.instantiate(sigma);
    if let Some(f) = prem.iter().chain(&conc).find(|f| !u.contains(*f)) {
        return Err(Error::InvalidProof(format!(
            "`{}` from rule `{}` is outside the analytic universe",
            f.display(sig),
            rule.name
        )));
    }
    Ok((prem, conc))
}

fn check_node(
    tree: &ProofTree,
    calc: &Calculus,
    s: &Sequent,
    u: &BTreeSet<Formula>,
    path: &mut BTreeSet<Formula>,
) -> Result<()> {
    let sig = &calc.sig;
    let applied = |rule: &str, sigma: &Substitution, path: &BTreeSet<Formula>| -> Result<Vec<Formula>> {
        let r = calc.rule(rule).ok_or_else(|| Error::UnknownRule(rule.to_string()))?;
        let (prem, conc) = instantiate(r, sigma, u, sig)?;
        if let Some(f) = prem.iter().find(|f| !path.contains(*f)) {
            return Err(Error::InvalidProof(format!(
                "premise `{}` of `{rule}` is not on the branch",
                f.display(sig)
            )));
        }
        Ok(conc)
    };
    match tree {
        ProofTree::Leaf { goal } => {
            if !s.delta.contains(goal) {
                return Err(Error::InvalidProof(format!("leaf `{}` is not a goal", goal.display(sig))));
            }
            if !path.contains(goal) {
                return Err(Error::InvalidProof(format!("goal `{}` is not on the branch", goal.display(sig))));
            }
            Ok(())
        }
        ProofTree::Closed { rule, instance } => {
            if !applied(rule, instance, path)?.is_empty() {
                return Err(Error::InvalidProof(format!("`{rule}` has conclusions and cannot close a branch")));
            }
            Ok(())
        }
        ProofTree::Expansion { rule, instance, children } => {
            let conc = applied(rule, instance, path)?;
            let mut expected: Vec<Formula> = Vec::new();
            for f in conc {
                if !expected.contains(&f) {
                    expected.push(f);
                }
            }
            let got: Vec<&Formula> = children.iter().map(|(f, _)| f).collect();
            if got != expected.iter().collect::<Vec<_>>() {
                return Err(Error::InvalidProof(format!("children of `{rule}` do not match its conclusions")));
            }
            for (f, child) in children {
                let fresh = path.insert(f.clone());
                let r = check_node(child, calc, s, u, path);
                if fresh {
                    path.remove(f);
                }
                r?;
            }
            Ok(())
        }
    }
}

fn show_instance(sigma: &Substitution, sig: &Signature) -> String {
    sigma
        .iter()
        .map(|(v, f)| format!("p{v}:={}", f.display(sig)))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Indented text: one line per node, `*` marking closed branches.
pub fn render_text(tree: &ProofTree, sig: &Signature) -> String {
    let mut out = String::new();
    text_node(tree, sig, 0, &mut out);
    out
}

fn text_node(tree: &ProofTree, sig: &Signature, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    match tree {
        ProofTree::Leaf { goal } => {
            let _ = writeln!(out, "{pad}done: {}", goal.display(sig));
        }
        ProofTree::Closed { rule, instance } => {
            let _ = writeln!(out, "{pad}* by {rule} [{}]", show_instance(instance, sig));
        }
        ProofTree::Expansion { rule, instance, children } => {
            let _ = writeln!(out, "{pad}{rule} [{}]", show_instance(instance, sig));
            for (f, c) in children {
                let _ = writeln!(out, "{pad}- {}", f.display(sig));
                text_node(c, sig, depth + 1, out);
            }
        }
    }
}

/// Graphviz: the root holds `Γ`, each further node one inferred formula,
/// edges are labelled by rule, and closed branches end in `*`.
pub fn render_dot(tree: &ProofTree, s: &Sequent, sig: &Signature) -> String {
    let mut out = String::from("digraph proof {\n  node [shape=plaintext];\n");
    let mut gamma = s.gamma.iter().map(|f| f.display(sig).to_string()).collect::<Vec<_>>().join(", ");
    if gamma.is_empty() {
        gamma.push('∅');
    }
    let _ = writeln!(out, "  n0 [label=\"{}\"];", escape(&gamma));
    let mut next = 1;
    dot_node(tree, sig, 0, &mut next, &mut out);
    out.push_str("}\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn dot_node(tree: &ProofTree, sig: &Signature, parent: usize, next: &mut usize, out: &mut String) {
    match tree {
        ProofTree::Leaf { .. } => {}
        ProofTree::Closed { rule, .. } => {
            let id = *next;
            *next += 1;
            let _ = writeln!(out, "  n{id} [label=\"*\"];");
            let _ = writeln!(out, "  n{parent} -> n{id} [label=\"{}\"];", escape(rule));
        }
        ProofTree::Expansion { rule, children, .. } => {
            for (f, c) in children {
                let id = *next;
                *next += 1;
                let _ = writeln!(out, "  n{id} [label=\"{}\"];", escape(&f.display(sig).to_string()));
                let _ = writeln!(out, "  n{parent} -> n{id} [label=\"{}\"];", escape(rule));
                dot_node(c, sig, id, next, out);
            }
        }
    }
}
