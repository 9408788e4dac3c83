//! Finite PNmatrices: validation, refinements, expansions, formula
//! evaluation and multiple-conclusion consequence.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::ops::ControlFlow;

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};
use crate::syntax::{subformulas, subformulas_bottom_up, ConnId, Formula, Signature};

/// Dense value id.
pub type Value = usize;

/// A multiple-conclusion sequent `Γ ⊳ Δ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Sequent {
    pub gamma: BTreeSet<Formula>,
    pub delta: BTreeSet<Formula>,
}

impl Sequent {
    pub fn new<G, D>(gamma: G, delta: D) -> Self
    where
        G: IntoIterator<Item = Formula>,
        D: IntoIterator<Item = Formula>,
    {
        Sequent {
            gamma: gamma.into_iter().collect(),
            delta: delta.into_iter().collect(),
        }
    }

    pub fn formulas(&self) -> impl Iterator<Item = &Formula> {
        self.gamma.iter().chain(self.delta.iter())
    }

    pub fn display<'a>(&'a self, sig: &'a Signature) -> impl fmt::Display + 'a {
        struct D<'a>(&'a Sequent, &'a Signature);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let side = |s: &BTreeSet<Formula>| {
                    s.iter()
                        .map(|a| a.display(self.1).to_string())
                        .collect::<Vec<_>>()
                        .join(", ")
                };
                write!(f, "{} |- {}", side(&self.0.gamma), side(&self.0.delta))
            }
        }
        D(self, sig)
    }
}

/// Truth table of one connective; rows are indexed by the tuple read as a
/// base-|V| number with the first argument most significant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    arity: usize,
    entries: Vec<Vec<Value>>,
}

impl Table {
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn rows(&self) -> &[Vec<Value>] {
        &self.entries
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PNMatrix {
    sig: Signature,
    labels: Vec<String>,
    designated: Vec<bool>,
    tables: Vec<Table>,
}

/// A countermodel to a sequent: the maximal total refinement it lives in and
/// the value of each subformula.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Countermodel {
    pub refinement: Vec<Value>,
    pub assignment: BTreeMap<Formula, Value>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Holds {
        /// Set when the matrix has no valuations at all.
        vacuous: bool,
    },
    Fails(Countermodel),
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds { .. })
    }
}

impl PNMatrix {
    /// Build a matrix from per-connective entry functions.
    pub fn from_fn<F>(sig: Signature, labels: Vec<String>, designated: &[Value], mut entry: F) -> Result<Self>
    where
        F: FnMut(ConnId, &[Value]) -> Vec<Value>,
    {
        let n = labels.len();
        let mut tables = Vec::with_capacity(sig.len());
        for c in 0..sig.len() {
            let k = sig.arity(c);
            let rows = n.checked_pow(k as u32).ok_or_else(|| Error::Resource("table size".into()))?;
            let mut entries = Vec::with_capacity(rows);
            let mut tuple = vec![0; k];
            for r in 0..rows {
                decode_into(r, n, &mut tuple);
                let mut e = entry(c, &tuple);
                e.sort_unstable();
                e.dedup();
                entries.push(e);
            }
            tables.push(Table { arity: k, entries });
        }
        let mut d = vec![false; n];
        for &x in designated {
            if x >= n {
                return Err(Error::InvalidMatrix(format!("designated value {x} out of range")));
            }
            d[x] = true;
        }
        let m = PNMatrix {
            sig,
            labels,
            designated: d,
            tables,
        };
        m.validate()?;
        Ok(m)
    }

    /// Build from explicit rows (one `Vec<Vec<Value>>` per connective, rows
    /// in tuple order).
    pub fn from_rows(sig: Signature, labels: Vec<String>, designated: &[Value], rows: Vec<Vec<Vec<Value>>>) -> Result<Self> {
        let n = labels.len();
        if rows.len() != sig.len() {
            return Err(Error::InvalidMatrix("one table per connective required".into()));
        }
        for (c, r) in rows.iter().enumerate() {
            let want = n.pow(sig.arity(c) as u32);
            if r.len() != want {
                return Err(Error::InvalidMatrix(format!(
                    "table `{}` has {} rows, expected {want}",
                    sig.name(c),
                    r.len()
                )));
            }
        }
        PNMatrix::from_fn(sig, labels, designated, |c, t| rows[c][encode(t, n)].clone())
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.labels.len();
        let mut seen = HashSet::new();
        for l in &self.labels {
            if !seen.insert(l) {
                return Err(Error::InvalidMatrix(format!("duplicate value label `{l}`")));
            }
        }
        for (c, t) in self.tables.iter().enumerate() {
            if t.arity != self.sig.arity(c) || t.entries.len() != n.pow(t.arity as u32) {
                return Err(Error::InvalidMatrix(format!("malformed table `{}`", self.sig.name(c))));
            }
            if t.entries.iter().flatten().any(|&y| y >= n) {
                return Err(Error::InvalidMatrix(format!("table `{}` mentions an unknown value", self.sig.name(c))));
            }
        }
        Ok(())
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn values(&self) -> std::ops::Range<Value> {
        0..self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, x: Value) -> &str {
        &self.labels[x]
    }

    pub fn value_by_label(&self, label: &str) -> Option<Value> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn is_designated(&self, x: Value) -> bool {
        self.designated[x]
    }

    pub fn designated(&self) -> Vec<Value> {
        self.values().filter(|&x| self.designated[x]).collect()
    }

    pub fn table(&self, c: ConnId) -> &Table {
        &self.tables[c]
    }

    pub fn entry(&self, c: ConnId, args: &[Value]) -> &[Value] {
        &self.tables[c].entries[encode(args, self.len())]
    }

    /// Every tuple of the given arity, in table order.
    pub fn tuples(&self, arity: usize) -> impl Iterator<Item = Vec<Value>> + '_ {
        let n = self.len();
        (0..n.pow(arity as u32)).map(move |r| {
            let mut t = vec![0; arity];
            decode_into(r, n, &mut t);
            t
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::InvalidMatrix("label count mismatch".into()));
        }
        self.labels = labels;
        self.validate()?;
        Ok(self)
    }

    pub fn with_signature(mut self, sig: Signature) -> Result<Self> {
        if sig.connectives() != self.sig.connectives() {
            return Err(Error::InvalidMatrix("signature mismatch".into()));
        }
        self.sig = sig;
        Ok(self)
    }

    fn conns(&self, names: Option<&[ConnId]>) -> Vec<ConnId> {
        match names {
            Some(c) => c.to_vec(),
            None => (0..self.sig.len()).collect(),
        }
    }

    /// No empty entry for the given connectives (all when `None`).
    pub fn is_total(&self, conns: Option<&[ConnId]>) -> bool {
        self.conns(conns)
            .into_iter()
            .all(|c| self.tables[c].entries.iter().all(|e| !e.is_empty()))
    }

    /// Every entry has at most one element, for the given connectives.
    pub fn is_deterministic(&self, conns: Option<&[ConnId]>) -> bool {
        self.conns(conns)
            .into_iter()
            .all(|c| self.tables[c].entries.iter().all(|e| e.len() <= 1))
    }

    /// Same checks by connective name.
    pub fn is_total_named(&self, names: &[&str]) -> Result<bool> {
        let ids = names.iter().map(|n| self.sig.require(n)).collect::<Result<Vec<_>>>()?;
        Ok(self.is_total(Some(&ids)))
    }

    pub fn is_deterministic_named(&self, names: &[&str]) -> Result<bool> {
        let ids = names.iter().map(|n| self.sig.require(n)).collect::<Result<Vec<_>>>()?;
        Ok(self.is_deterministic(Some(&ids)))
    }

    /// The refinement with values `keep` (ids are renumbered in the order
    /// given, which must be increasing).
    pub fn simple_refinement(&self, keep: &[Value]) -> PNMatrix {
        let mut index = vec![usize::MAX; self.len()];
        for (i, &x) in keep.iter().enumerate() {
            index[x] = i;
        }
        let labels = keep.iter().map(|&x| self.labels[x].clone()).collect();
        let designated: Vec<Value> = keep
            .iter()
            .enumerate()
            .filter(|(_, &x)| self.designated[x])
            .map(|(i, _)| i)
            .collect();
        let mut orig = Vec::new();
        PNMatrix::from_fn(self.sig.clone(), labels, &designated, |c, t| {
            orig.clear();
            orig.extend(t.iter().map(|&i| keep[i]));
            self.entry(c, &orig)
                .iter()
                .filter_map(|&y| (index[y] != usize::MAX).then_some(index[y]))
                .collect()
        })
        .expect("simple refinement of a valid matrix is valid")
    }

    /// A tuple over `set` whose entry misses `set`, if any.
    fn untotal_witness(&self, set: &FixedBitSet) -> Option<Vec<Value>> {
        let members: Vec<Value> = set.ones().collect();
        for (c, t) in self.tables.iter().enumerate() {
            let k = t.arity;
            if k > 0 && members.is_empty() {
                continue;
            }
            let mut idx = vec![0usize; k];
            loop {
                let tuple: Vec<Value> = idx.iter().map(|&i| members[i]).collect();
                if !self.entry(c, &tuple).iter().any(|&y| set.contains(y)) {
                    return Some(tuple);
                }
                if !bump(&mut idx, members.len()) {
                    break;
                }
            }
        }
        None
    }

    /// All ⊆-maximal non-empty `V′` such that the simple refinement to `V′`
    /// is total. Sorted by decreasing size, then by members.
    pub fn total_refinements(&self) -> Vec<Vec<Value>> {
        let mut found: Vec<FixedBitSet> = Vec::new();
        let mut seen: HashSet<FixedBitSet> = HashSet::new();
        let mut all = FixedBitSet::with_capacity(self.len());
        all.insert_range(..);
        let mut stack = vec![all];
        while let Some(s) = stack.pop() {
            if s.is_clear() || !seen.insert(s.clone()) {
                continue;
            }
            if found.iter().any(|f| s.is_subset(f)) {
                continue;
            }
            match self.untotal_witness(&s) {
                None => {
                    found.retain(|f| !f.is_subset(&s));
                    found.push(s);
                }
                Some(tuple) => {
                    let mut distinct = tuple.clone();
                    distinct.sort_unstable();
                    distinct.dedup();
                    for x in distinct.into_iter().rev() {
                        let mut t = s.clone();
                        t.set(x, false);
                        stack.push(t);
                    }
                }
            }
        }
        let mut out: Vec<Vec<Value>> = found.iter().map(|f| f.ones().collect()).collect();
        out.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        out
    }

    /// Whether `xs` lies inside some non-empty total simple refinement.
    pub fn t_m_contains(&self, xs: &[Value]) -> bool {
        self.t_m_contains_in(xs, &self.total_refinements())
    }

    pub fn t_m_contains_in(&self, xs: &[Value], refinements: &[Vec<Value>]) -> bool {
        xs.is_empty() || refinements.iter().any(|r| xs.iter().all(|x| r.binary_search(x).is_ok()))
    }

    /// `A_M(x1, ..., xn)`: the values `A` takes under valuations sending
    /// `p_i` to `x_i`.
    pub fn eval_formula(&self, formula: &Formula, args: &[Value]) -> BTreeSet<Value> {
        self.eval_formula_in(formula, args, &self.total_refinements())
    }

    pub fn eval_formula_in(&self, formula: &Formula, args: &[Value], refinements: &[Vec<Value>]) -> BTreeSet<Value> {
        let order = subformulas_bottom_up([formula]);
        let plan = Plan::new(&order);
        let root = order.len() - 1;
        let mut out = BTreeSet::new();
        for r in refinements {
            if !args.iter().all(|x| r.binary_search(x).is_ok()) {
                continue;
            }
            let allowed = bitset_of(r, self.len());
            let fixed = |i: u32| args.get(i as usize - 1).copied();
            let _ = plan.search(self, &allowed, &fixed, &|_, _| true, &mut |vals| {
                out.insert(vals[root]);
                ControlFlow::Continue(())
            });
        }
        out
    }

    /// Decide `Γ ⊳_M Δ`.
    pub fn consequence(&self, sequent: &Sequent) -> Verdict {
        self.consequence_in(sequent, &self.total_refinements())
    }

    pub fn consequence_in(&self, sequent: &Sequent, refinements: &[Vec<Value>]) -> Verdict {
        self.consequence_within(sequent, &BTreeSet::new(), refinements)
    }

    /// Like [`PNMatrix::consequence_in`], but assignments must also cover
    /// `extra` (closed under subformulas by the search). The countermodel is
    /// reported on `sub(Γ∪Δ)` only.
    pub fn consequence_within(&self, sequent: &Sequent, extra: &BTreeSet<Formula>, refinements: &[Vec<Value>]) -> Verdict {
        if refinements.is_empty() {
            return Verdict::Holds { vacuous: true };
        }
        if sequent.gamma.intersection(&sequent.delta).next().is_some() {
            return Verdict::Holds { vacuous: false };
        }
        let order = subformulas_bottom_up(sequent.formulas().chain(extra));
        let plan = Plan::new(&order);
        let side: Vec<u8> = order
            .iter()
            .map(|f| u8::from(sequent.gamma.contains(f)) | (u8::from(sequent.delta.contains(f)) << 1))
            .collect();
        let prune = |i: usize, x: Value| match side[i] {
            1 => self.designated[x],
            2 => !self.designated[x],
            _ => true,
        };
        for r in refinements {
            let allowed = bitset_of(r, self.len());
            let mut found = None;
            let _ = plan.search(self, &allowed, &|_| None, &prune, &mut |vals| {
                found = Some(vals.to_vec());
                ControlFlow::Break(())
            });
            if let Some(vals) = found {
                let own = subformulas(sequent.formulas());
                return Verdict::Fails(Countermodel {
                    refinement: r.clone(),
                    assignment: order.iter().cloned().zip(vals).filter(|(f, _)| own.contains(f)).collect(),
                });
            }
        }
        Verdict::Holds { vacuous: false }
    }

    /// Whether `assignment` (closed under subformulas) respects the tables.
    pub fn respects(&self, assignment: &BTreeMap<Formula, Value>) -> bool {
        assignment.iter().all(|(f, &y)| match f {
            Formula::Var(_) => y < self.len(),
            Formula::App(c, args) => {
                let xs: Option<Vec<Value>> = args.iter().map(|a| assignment.get(a).copied()).collect();
                xs.is_some_and(|xs| self.entry(*c, &xs).contains(&y))
            }
        })
    }

    /// The E-expansion.
    pub fn expand(&self, e: &ExpansionFunction) -> Result<PNMatrix> {
        if e.images.len() != self.len() {
            return Err(Error::InvalidExpansion("one image per value required".into()));
        }
        let contraction = e.contraction();
        let designated: Vec<Value> = (0..e.universe).filter(|&y| self.designated[contraction[y]]).collect();
        let mut orig = Vec::new();
        PNMatrix::from_fn(self.sig.clone(), e.labels.clone(), &designated, |c, t| {
            orig.clear();
            orig.extend(t.iter().map(|&y| contraction[y]));
            self.entry(c, &orig)
                .iter()
                .flat_map(|&x| e.images[x].iter().copied())
                .collect()
        })
    }

    /// A refinement on the subset `keep` with entries given by `entry`
    /// (in terms of original ids); fails if any entry grows.
    pub fn refine<F>(&self, keep: &[Value], mut entry: F) -> Result<PNMatrix>
    where
        F: FnMut(ConnId, &[Value]) -> Vec<Value>,
    {
        let mut index = vec![usize::MAX; self.len()];
        for (i, &x) in keep.iter().enumerate() {
            if x >= self.len() || index[x] != usize::MAX {
                return Err(Error::Refinement(format!("bad value {x} in refinement")));
            }
            index[x] = i;
        }
        let labels = keep.iter().map(|&x| self.labels[x].clone()).collect();
        let designated: Vec<Value> = (0..keep.len()).filter(|&i| self.designated[keep[i]]).collect();
        let mut err = None;
        let mut orig = Vec::new();
        let m = PNMatrix::from_fn(self.sig.clone(), labels, &designated, |c, t| {
            orig.clear();
            orig.extend(t.iter().map(|&i| keep[i]));
            let allowed = self.entry(c, &orig);
            let mut out = Vec::new();
            for y in entry(c, &orig) {
                if !allowed.contains(&y) || index.get(y).is_none_or(|&i| i == usize::MAX) {
                    err.get_or_insert_with(|| {
                        format!("entry of `{}` gains value {}", self.sig.name(c), self.labels.get(y).map_or("?", |s| s))
                    });
                } else {
                    out.push(index[y]);
                }
            }
            out
        })?;
        match err {
            Some(e) => Err(Error::Refinement(e)),
            None => Ok(m),
        }
    }

    /// Check that `self` is a rexpansion of `base` witnessed by `projection`
    /// (value of `self` to value of `base`): designation is reflected and
    /// every entry projects into the base entry.
    pub fn check_rexpansion_of(&self, base: &PNMatrix, projection: &[Value]) -> Result<()> {
        if projection.len() != self.len() || projection.iter().any(|&x| x >= base.len()) {
            return Err(Error::InvalidExpansion("projection must map every value into the base".into()));
        }
        if self.sig.connectives() != base.sig.connectives() {
            return Err(Error::InvalidExpansion("signature mismatch".into()));
        }
        for y in self.values() {
            if self.designated[y] != base.designated[projection[y]] {
                return Err(Error::InvalidExpansion(format!("designation of `{}` disagrees with its projection", self.labels[y])));
            }
        }
        let mut proj = Vec::new();
        for c in 0..self.sig.len() {
            for t in self.tuples(self.sig.arity(c)) {
                proj.clear();
                proj.extend(t.iter().map(|&y| projection[y]));
                let allowed = base.entry(c, &proj);
                if let Some(&bad) = self.entry(c, &t).iter().find(|&&y| !allowed.contains(&projection[y])) {
                    return Err(Error::InvalidExpansion(format!(
                        "`{}` entry contains `{}` outside the base entry",
                        self.sig.name(c),
                        self.labels[bad]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Structural equality up to a value bijection given as a map from
    /// `self` ids to `other` ids.
    pub fn isomorphic_via(&self, other: &PNMatrix, map: &[Value]) -> bool {
        if self.len() != other.len() || map.len() != self.len() || self.sig.connectives() != other.sig.connectives() {
            return false;
        }
        let mut seen = vec![false; other.len()];
        for &y in map {
            if y >= other.len() || std::mem::replace(&mut seen[y], true) {
                return false;
            }
        }
        self.values().all(|x| self.designated[x] == other.designated[map[x]])
            && (0..self.sig.len()).all(|c| {
                self.tuples(self.sig.arity(c)).all(|t| {
                    let mapped: Vec<Value> = t.iter().map(|&x| map[x]).collect();
                    let mut a: Vec<Value> = self.entry(c, &t).iter().map(|&y| map[y]).collect();
                    a.sort_unstable();
                    a == other.entry(c, &mapped)
                })
            })
    }

    /// Isomorphism check matching values by label.
    pub fn same_up_to_labels(&self, other: &PNMatrix) -> bool {
        let map: Option<Vec<Value>> = self.labels.iter().map(|l| other.value_by_label(l)).collect();
        map.is_some_and(|m| self.isomorphic_via(other, &m))
    }
}

/// `E : V → ℘(V′)` with non-empty, pairwise disjoint images.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpansionFunction {
    images: Vec<Vec<Value>>,
    universe: usize,
    labels: Vec<String>,
}

impl ExpansionFunction {
    pub fn new(images: Vec<Vec<Value>>, labels: Vec<String>) -> Result<Self> {
        let universe = labels.len();
        let mut owner = vec![None; universe];
        for (x, img) in images.iter().enumerate() {
            if img.is_empty() {
                return Err(Error::InvalidExpansion(format!("image of value {x} is empty")));
            }
            for &y in img {
                if y >= universe {
                    return Err(Error::InvalidExpansion(format!("image value {y} out of range")));
                }
                if owner[y].replace(x).is_some() {
                    return Err(Error::InvalidExpansion(format!("images overlap at `{}`", labels[y])));
                }
            }
        }
        if let Some(y) = owner.iter().position(Option::is_none) {
            return Err(Error::InvalidExpansion(format!("`{}` is not in any image", labels[y])));
        }
        Ok(ExpansionFunction { images, universe, labels })
    }

    /// `E(x) = {x}`, keeping the labels of `m`.
    pub fn identity(m: &PNMatrix) -> Self {
        ExpansionFunction {
            images: m.values().map(|x| vec![x]).collect(),
            universe: m.len(),
            labels: m.labels.clone(),
        }
    }

    pub fn images(&self) -> &[Vec<Value>] {
        &self.images
    }

    /// `Ẽ`, indexed by new value.
    pub fn contraction(&self) -> Vec<Value> {
        let mut out = vec![0; self.universe];
        for (x, img) in self.images.iter().enumerate() {
            for &y in img {
                out[y] = x;
            }
        }
        out
    }
}

pub(crate) fn encode(tuple: &[Value], n: usize) -> usize {
    tuple.iter().fold(0, |acc, &x| acc * n + x)
}

pub(crate) fn decode_into(mut r: usize, n: usize, out: &mut [Value]) {
    for slot in out.iter_mut().rev() {
        *slot = r % n;
        r /= n;
    }
}

/// Odometer increment; false on wrap-around.
pub(crate) fn bump(idx: &mut [usize], base: usize) -> bool {
    for slot in idx.iter_mut().rev() {
        *slot += 1;
        if *slot < base {
            return true;
        }
        *slot = 0;
    }
    false
}

pub(crate) fn bitset_of(xs: &[Value], n: usize) -> FixedBitSet {
    let mut b = FixedBitSet::with_capacity(n);
    for &x in xs {
        b.insert(x);
    }
    b
}

/// A subformula-closed list in bottom-up order, compiled for backtracking
/// search over table-respecting assignments.
pub(crate) struct Plan {
    nodes: Vec<Node>,
}

enum Node {
    Var(u32),
    App(ConnId, Vec<usize>),
}

impl Plan {
    pub(crate) fn new(order: &[Formula]) -> Plan {
        let pos: HashMap<&Formula, usize> = order.iter().enumerate().map(|(i, f)| (f, i)).collect();
        let nodes = order
            .iter()
            .map(|f| match f {
                Formula::Var(i) => Node::Var(*i),
                Formula::App(c, args) => Node::App(*c, args.iter().map(|a| pos[a]).collect()),
            })
            .collect();
        Plan { nodes }
    }

    /// Depth-first enumeration of assignments into `allowed`, with variables
    /// optionally fixed and a per-node value filter.
    pub(crate) fn search(
        &self,
        m: &PNMatrix,
        allowed: &FixedBitSet,
        fixed: &dyn Fn(u32) -> Option<Value>,
        keep: &dyn Fn(usize, Value) -> bool,
        visit: &mut dyn FnMut(&[Value]) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        let mut vals = vec![0; self.nodes.len()];
        self.go(0, m, allowed, fixed, keep, visit, &mut vals)
    }

    #[allow(clippy::too_many_arguments)]
    fn go(
        &self,
        i: usize,
        m: &PNMatrix,
        allowed: &FixedBitSet,
        fixed: &dyn Fn(u32) -> Option<Value>,
        keep: &dyn Fn(usize, Value) -> bool,
        visit: &mut dyn FnMut(&[Value]) -> ControlFlow<()>,
        vals: &mut Vec<Value>,
    ) -> ControlFlow<()> {
        if i == self.nodes.len() {
            return visit(vals);
        }
        let options: Vec<Value> = match &self.nodes[i] {
            Node::Var(v) => match fixed(*v) {
                Some(x) => vec![x],
                None => allowed.ones().collect(),
            },
            Node::App(c, args) => {
                let xs: Vec<Value> = args.iter().map(|&a| vals[a]).collect();
                m.entry(*c, &xs).to_vec()
            }
        };
        for x in options {
            if allowed.contains(x) && keep(i, x) {
                vals[i] = x;
                self.go(i + 1, m, allowed, fixed, keep, visit, vals)?;
            }
        }
        ControlFlow::Continue(())
    }
}
