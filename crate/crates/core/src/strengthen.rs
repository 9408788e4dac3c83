//! Strengthening a PNmatrix by a set of simple axioms.
//!
//! Values of the result are profiles `f : Θ → V` recording, for a formula
//! `A`, the value of `wA` for every look-ahead string `w ∈ Θ`. A set of
//! profiles is *good* when no axiom instance built from its members fails
//! and every connective applied to members has a compatible successor
//! inside the set. A profile belongs to the result iff it lies in a good
//! set, and `g ∈ ©(f1..fk)` iff `g` is a compatible successor of the tuple
//! and `{f1..fk, g}` extends to a good set.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};
use crate::format::Projection;
use crate::matrix::{encode, PNMatrix, Value};
use crate::syntax::{
    decompose_simple, lookahead_set, suffix_closure, Binding, ConnId, Formula, LookaheadString,
    Signature, SimpleAxiom,
};

/// The deterministic Σᵈ skeleton a matrix rexpands, reached through a
/// value projection.
#[derive(Debug, Clone)]
pub struct Base {
    pub labels: Vec<String>,
    pub designated: Vec<bool>,
    /// Projection of each matrix value.
    pub map: Vec<Value>,
    tables: HashMap<ConnId, Vec<Option<Value>>>,
}

impl Base {
    /// Derive the base of `m` along `projection` (identity when `None`).
    pub fn derive(m: &PNMatrix, projection: Option<&Projection>) -> Result<Base> {
        let sig = m.signature();
        let (labels, map) = match projection {
            Some(p) => {
                if p.map.len() != m.len() || p.map.iter().any(|&b| b >= p.base_labels.len()) {
                    return Err(Error::InvalidExpansion("projection does not cover the matrix".into()));
                }
                (p.base_labels.clone(), p.map.clone())
            }
            None => (m.labels().to_vec(), m.values().collect()),
        };
        let nb = labels.len();
        let mut designated: Vec<Option<bool>> = vec![None; nb];
        for x in m.values() {
            let d = m.is_designated(x);
            match designated[map[x]].replace(d) {
                Some(prev) if prev != d => {
                    return Err(Error::InvalidExpansion(format!(
                        "values projected to `{}` disagree on designation",
                        labels[map[x]]
                    )))
                }
                _ => {}
            }
        }
        let mut tables = HashMap::new();
        for &c in sig.det() {
            let k = sig.arity(c);
            let mut t: Vec<Option<Value>> = vec![None; nb.pow(k as u32)];
            for tuple in m.tuples(k) {
                let row = encode(&tuple.iter().map(|&x| map[x]).collect::<Vec<_>>(), nb);
                for &y in m.entry(c, &tuple) {
                    match t[row].replace(map[y]) {
                        Some(prev) if prev != map[y] => return Err(Error::NotDeterministic(sig.name(c).to_string())),
                        _ => {}
                    }
                }
            }
            tables.insert(c, t);
        }
        Ok(Base {
            labels,
            designated: designated.into_iter().map(|d| d.unwrap_or(false)).collect(),
            map,
            tables,
        })
    }

    /// Deterministic evaluation of a Σᵈ formula on base values; `None`
    /// when some entry is empty.
    pub fn eval(&self, f: &Formula, args: &dyn Fn(u32) -> Value) -> Option<Value> {
        match f {
            Formula::Var(i) => Some(args(*i)),
            Formula::App(c, xs) => {
                let vals = xs.iter().map(|a| self.eval(a, args)).collect::<Option<Vec<_>>>()?;
                self.tables.get(c)?[encode(&vals, self.labels.len())]
            }
        }
    }

    /// Whether a structure formula evaluates to a designated value when its
    /// placeholders take the given matrix values.
    fn holds(&self, structure: &Formula, binding_values: &[Value]) -> bool {
        self.eval(structure, &|i| self.map[binding_values[i as usize - 1]])
            .is_some_and(|y| self.designated[y])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StrengthenOptions {
    /// Cap on search nodes of the good-set search.
    pub max_nodes: usize,
}

impl Default for StrengthenOptions {
    fn default() -> Self {
        StrengthenOptions { max_nodes: 2_000_000 }
    }
}

/// The strengthened matrix plus everything needed to interpret it.
#[derive(Debug, Clone)]
pub struct Sharp {
    pub matrix: PNMatrix,
    pub theta: Vec<LookaheadString>,
    /// Per value, its profile over `theta` in input value ids.
    pub profiles: Vec<Vec<Value>>,
    /// Projection of the result onto the deterministic base.
    pub projection: Projection,
    pub axioms: Vec<SimpleAxiom>,
    pub warnings: Vec<String>,
}

impl Sharp {
    /// `f ↦ f(ε)` as input value ids.
    pub fn epsilon_projection(&self) -> Vec<Value> {
        self.profiles.iter().map(|p| p[0]).collect()
    }

    /// Relabel values by reading their profile at the given strings.
    pub fn display_labels(&self, input: &PNMatrix, strings: &[LookaheadString]) -> Result<Vec<String>> {
        let pos: HashMap<&LookaheadString, usize> = self.theta.iter().enumerate().map(|(i, w)| (w, i)).collect();
        let idx = strings
            .iter()
            .map(|w| {
                pos.get(w).copied().ok_or_else(|| {
                    Error::InvalidMatrix(format!("display string {} is not a look-ahead", w.display(input.signature())))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let labels: Vec<String> = self
            .profiles
            .iter()
            .map(|p| join_labels(idx.iter().map(|&i| input.label(p[i])), input))
            .collect();
        let distinct: HashSet<&String> = labels.iter().collect();
        if distinct.len() != labels.len() {
            return Err(Error::InvalidMatrix("display strings do not separate the values".into()));
        }
        Ok(labels)
    }
}

fn join_labels<'a>(parts: impl Iterator<Item = &'a str>, input: &PNMatrix) -> String {
    let uniform = input.labels().windows(2).all(|w| w[0].chars().count() == w[1].chars().count());
    let parts: Vec<&str> = parts.collect();
    if uniform {
        parts.concat()
    } else {
        parts.join(".")
    }
}

/// Decompose axioms, reporting the first that is not simple.
pub fn decompose_all(axioms: &[Formula], sig: &Signature) -> Result<Vec<SimpleAxiom>> {
    axioms.iter().map(|a| decompose_simple(a, sig)).collect()
}

/// Build the strengthened matrix.
pub fn sharp_construct(
    m: &PNMatrix,
    projection: Option<&Projection>,
    axioms: &[Formula],
    opts: StrengthenOptions,
) -> Result<Sharp> {
    let sig = m.signature();
    let simple = decompose_all(axioms, sig)?;
    let base = Base::derive(m, projection)?;
    let mut warnings = Vec::new();
    for ax in &simple {
        if ax.base_by_preference {
            warnings.push(format!(
                "axiom `{}` taken as based on `{}` by arity preference",
                ax.source.display(sig),
                sig.name(ax.base)
            ));
        }
    }
    let theta_set = lookahead_set(&simple);
    let theta: Vec<LookaheadString> = theta_set.iter().cloned().collect();
    let candidates = chain_candidates(m, &theta_set);
    let mut engine = Engine::new(m, &base, &simple, &theta, candidates, opts);
    engine.compute_bad_sets();
    let members = engine.realisable()?;
    if members.is_empty() {
        warnings.push("no value survives: the strengthened matrix is empty".into());
    }
    let index: HashMap<usize, Value> = members.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut rows: Vec<Vec<Vec<Value>>> = Vec::with_capacity(sig.len());
    for c in 0..sig.len() {
        let k = sig.arity(c);
        let n = members.len();
        let mut table = Vec::with_capacity(n.pow(k as u32));
        let mut idx = vec![0usize; k];
        for _ in 0..n.pow(k as u32) {
            let tuple: Vec<usize> = idx.iter().map(|&i| members[i]).collect();
            let mut entry = Vec::new();
            for g in engine.successors(c, &tuple) {
                if !index.contains_key(&g) {
                    continue;
                }
                let mut s = engine.empty();
                s.extend(tuple.iter().copied());
                s.insert(g);
                if engine.extend(s)?.is_some() {
                    entry.push(index[&g]);
                }
            }
            table.push(entry);
            crate::matrix::bump(&mut idx, n);
        }
        rows.push(table);
    }
    let profiles: Vec<Vec<Value>> = members.iter().map(|&c| engine.cands[c].clone()).collect();
    let labels: Vec<String> = profiles
        .iter()
        .map(|p| join_labels(p.iter().map(|&x| m.label(x)), m))
        .collect();
    let designated: Vec<Value> = (0..profiles.len()).filter(|&i| m.is_designated(profiles[i][0])).collect();
    let matrix = PNMatrix::from_rows(sig.clone(), labels, &designated, rows)?;
    let projection = Projection {
        base_labels: base.labels.clone(),
        map: profiles.iter().map(|p| base.map[p[0]]).collect(),
    };
    Ok(Sharp {
        matrix,
        theta,
        profiles,
        projection,
        axioms: simple,
        warnings,
    })
}

/// All `f : Θ → V` admitting a chain witness over the suffix closure.
pub fn chain_candidates(m: &PNMatrix, theta: &BTreeSet<LookaheadString>) -> Vec<Vec<Value>> {
    let suf: Vec<LookaheadString> = suffix_closure(theta).into_iter().collect();
    let pos: HashMap<&LookaheadString, usize> = suf.iter().enumerate().map(|(i, w)| (w, i)).collect();
    // parent[i] = (b, index of s) for suf[i] = b·s
    let parent: Vec<Option<(ConnId, usize)>> = suf
        .iter()
        .map(|w| w.split_first().map(|(b, s)| (b, pos[&s])))
        .collect();
    let picks: Vec<usize> = theta.iter().map(|w| pos[w]).collect();
    let mut out = BTreeSet::new();
    let mut h = vec![0; suf.len()];
    fn go(
        i: usize,
        m: &PNMatrix,
        parent: &[Option<(ConnId, usize)>],
        picks: &[usize],
        h: &mut Vec<Value>,
        out: &mut BTreeSet<Vec<Value>>,
    ) {
        if i == parent.len() {
            out.insert(picks.iter().map(|&p| h[p]).collect());
            return;
        }
        let options: Vec<Value> = match parent[i] {
            None => m.values().collect(),
            Some((b, s)) => m.entry(b, &[h[s]]).to_vec(),
        };
        for x in options {
            h[i] = x;
            go(i + 1, m, parent, picks, h, out);
        }
    }
    go(0, m, &parent, &picks, &mut h, &mut out);
    out.into_iter().collect()
}

/// An axiom's structure formula with its bindings resolved to
/// (is_base, position in Θ, variable).
type ResolvedAxiom = (Formula, Vec<(bool, usize, u32)>);

struct Engine<'a> {
    m: &'a PNMatrix,
    base: &'a Base,
    sig: &'a Signature,
    theta_pos: HashMap<LookaheadString, usize>,
    cands: Vec<Vec<Value>>,
    /// Per look-ahead connective: (u, u·©) position pairs.
    shifts: HashMap<ConnId, Vec<(usize, usize)>>,
    /// Axioms with a base term, by base connective.
    r_axioms: HashMap<ConnId, Vec<ResolvedAxiom>>,
    m0_axioms: Vec<&'a SimpleAxiom>,
    bad_single: Vec<bool>,
    bad_pair: Vec<FixedBitSet>,
    bad_more: Vec<Vec<usize>>,
    succ_cache: HashMap<(ConnId, Vec<usize>), Vec<usize>>,
    good: Vec<FixedBitSet>,
    failed: HashSet<FixedBitSet>,
    nodes: usize,
    opts: StrengthenOptions,
}

impl<'a> Engine<'a> {
    fn new(
        m: &'a PNMatrix,
        base: &'a Base,
        axioms: &'a [SimpleAxiom],
        theta: &[LookaheadString],
        cands: Vec<Vec<Value>>,
        opts: StrengthenOptions,
    ) -> Self {
        let sig = m.signature();
        let theta_pos: HashMap<LookaheadString, usize> = theta.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect();
        let mut shifts: HashMap<ConnId, Vec<(usize, usize)>> = HashMap::new();
        for b in sig.lookahead_connectives() {
            let pairs = theta
                .iter()
                .filter_map(|u| theta_pos.get(&u.push_back(b)).map(|&ub| (theta_pos[u], ub)))
                .collect();
            shifts.insert(b, pairs);
        }
        let mut r_axioms: HashMap<ConnId, Vec<_>> = HashMap::new();
        let mut m0_axioms = Vec::new();
        for ax in axioms {
            if ax.has_base_terms() {
                let bindings = ax
                    .bindings
                    .iter()
                    .map(|b| match b {
                        Binding::Var { lookahead, var } => (false, theta_pos[lookahead], *var),
                        Binding::Base { lookahead } => (true, theta_pos[lookahead], 0),
                    })
                    .collect();
                r_axioms.entry(ax.base).or_default().push((ax.structure.clone(), bindings));
            } else {
                m0_axioms.push(ax);
            }
        }
        let n = cands.len();
        Engine {
            m,
            base,
            sig,
            theta_pos,
            cands,
            shifts,
            r_axioms,
            m0_axioms,
            bad_single: vec![false; n],
            bad_pair: vec![FixedBitSet::with_capacity(n); n],
            bad_more: Vec::new(),
            succ_cache: HashMap::new(),
            good: Vec::new(),
            failed: HashSet::new(),
            nodes: 0,
            opts,
        }
    }

    fn empty(&self) -> FixedBitSet {
        FixedBitSet::with_capacity(self.cands.len())
    }

    /// Minimal sets of candidates that jointly falsify an axiom instance
    /// without base terms. A variable may read a host's profile shifted by
    /// an offset `w0` as long as every string it is read at stays in Θ.
    fn compute_bad_sets(&mut self) {
        let mut found: BTreeSet<Vec<usize>> = BTreeSet::new();
        let suf: Vec<LookaheadString> = suffix_closure(&self.theta_pos.keys().cloned().collect()).into_iter().collect();
        for ax in &self.m0_axioms {
            let needs = ax.var_lookaheads();
            let vars: Vec<u32> = needs.keys().copied().collect();
            // Per variable: value vector over its needed strings -> hosts.
            let mut slots: Vec<BTreeMap<Vec<Value>, BTreeSet<usize>>> = Vec::new();
            let mut order: Vec<Vec<LookaheadString>> = Vec::new();
            for v in &vars {
                let ws: Vec<LookaheadString> = needs[v].iter().cloned().collect();
                let mut table: BTreeMap<Vec<Value>, BTreeSet<usize>> = BTreeMap::new();
                for w0 in &suf {
                    let positions: Option<Vec<usize>> =
                        ws.iter().map(|w| self.theta_pos.get(&w.concat(w0)).copied()).collect();
                    let Some(positions) = positions else { continue };
                    for (h, f) in self.cands.iter().enumerate() {
                        table.entry(positions.iter().map(|&p| f[p]).collect()).or_default().insert(h);
                    }
                }
                slots.push(table);
                order.push(ws);
            }
            let keyed: Vec<Vec<(&Vec<Value>, &BTreeSet<usize>)>> = slots.iter().map(|t| t.iter().collect()).collect();
            if keyed.iter().any(Vec::is_empty) {
                continue;
            }
            let mut idx = vec![0usize; vars.len()];
            loop {
                let values = |b: &Binding| -> Value {
                    let Binding::Var { lookahead, var } = b else { unreachable!() };
                    let t = vars.iter().position(|v| v == var).unwrap();
                    let k = order[t].iter().position(|w| w == lookahead).unwrap();
                    keyed[t][idx[t]].0[k]
                };
                let binding_values: Vec<Value> = ax.bindings.iter().map(values).collect();
                if !self.base.holds(&ax.structure, &binding_values) {
                    let host_lists: Vec<&BTreeSet<usize>> = (0..vars.len()).map(|t| keyed[t][idx[t]].1).collect();
                    let mut hidx = vec![0usize; vars.len()];
                    let lists: Vec<Vec<usize>> = host_lists.iter().map(|l| l.iter().copied().collect()).collect();
                    loop {
                        let mut set: Vec<usize> = (0..vars.len()).map(|t| lists[t][hidx[t]]).collect();
                        set.sort_unstable();
                        set.dedup();
                        found.insert(set);
                        if !bump_mixed(&mut hidx, &lists.iter().map(Vec::len).collect::<Vec<_>>()) {
                            break;
                        }
                    }
                }
                if !bump_mixed(&mut idx, &keyed.iter().map(Vec::len).collect::<Vec<_>>()) {
                    break;
                }
            }
        }
        for set in found {
            match set.as_slice() {
                [a] => self.bad_single[*a] = true,
                [a, b] => {
                    self.bad_pair[*a].insert(*b);
                    self.bad_pair[*b].insert(*a);
                }
                _ => self.bad_more.push(set),
            }
        }
    }

    /// Adding `g` to `s` would complete a bad set.
    fn conflicts(&self, g: usize, s: &FixedBitSet) -> bool {
        self.bad_single[g]
            || !self.bad_pair[g].is_disjoint(s)
            || self
                .bad_more
                .iter()
                .any(|b| b.contains(&g) && b.iter().all(|&x| x == g || s.contains(x)))
    }

    fn has_bad_subset(&self, s: &FixedBitSet) -> bool {
        s.ones().any(|g| self.bad_single[g] || !self.bad_pair[g].is_disjoint(s))
            || self.bad_more.iter().any(|b| b.iter().all(|&x| s.contains(x)))
    }

    /// Candidates `g` compatible as `©(tuple)`.
    fn successors(&mut self, c: ConnId, tuple: &[usize]) -> Vec<usize> {
        let key = (c, tuple.to_vec());
        if let Some(s) = self.succ_cache.get(&key) {
            return s.clone();
        }
        let eps: Vec<Value> = tuple.iter().map(|&t| self.cands[t][0]).collect();
        let root = self.m.entry(c, &eps);
        let out: Vec<usize> = (0..self.cands.len())
            .filter(|&g| {
                let gp = &self.cands[g];
                if !root.contains(&gp[0]) {
                    return false;
                }
                if let Some(pairs) = self.shifts.get(&c) {
                    let f1 = &self.cands[tuple[0]];
                    if pairs.iter().any(|&(u, ub)| gp[u] != f1[ub]) {
                        return false;
                    }
                }
                if let Some(axs) = self.r_axioms.get(&c) {
                    for (structure, bindings) in axs {
                        let vals: Vec<Value> = bindings
                            .iter()
                            .map(|&(is_base, p, var)| {
                                if is_base {
                                    gp[p]
                                } else {
                                    self.cands[tuple[var as usize - 1]][p]
                                }
                            })
                            .collect();
                        if !self.base.holds(structure, &vals) {
                            return false;
                        }
                    }
                }
                true
            })
            .collect();
        self.succ_cache.insert(key, out.clone());
        out
    }

    /// Some good superset of `s`, if any.
    fn extend(&mut self, s: FixedBitSet) -> Result<Option<FixedBitSet>> {
        if let Some(g) = self.good.iter().find(|g| s.is_subset(g)) {
            return Ok(Some(g.clone()));
        }
        if self.failed.contains(&s) || self.has_bad_subset(&s) {
            return Ok(None);
        }
        self.extend_inner(s)
    }

    fn extend_inner(&mut self, s: FixedBitSet) -> Result<Option<FixedBitSet>> {
        if let Some(g) = self.good.iter().find(|g| s.is_subset(g)) {
            return Ok(Some(g.clone()));
        }
        if self.failed.contains(&s) {
            return Ok(None);
        }
        self.nodes += 1;
        if self.nodes > self.opts.max_nodes {
            return Err(Error::Resource(format!(
                "good-set search exceeded {} nodes",
                self.opts.max_nodes
            )));
        }
        let members: Vec<usize> = s.ones().collect();
        let mut best: Option<Vec<usize>> = None;
        'conns: for c in 0..self.sig.len() {
            let k = self.sig.arity(c);
            let mut idx = vec![0usize; k];
            loop {
                let tuple: Vec<usize> = idx.iter().map(|&i| members[i]).collect();
                let succ = self.successors(c, &tuple);
                if !succ.iter().any(|&g| s.contains(g)) {
                    let opts: Vec<usize> = succ.into_iter().filter(|&g| !self.conflicts(g, &s)).collect();
                    if opts.is_empty() {
                        best = Some(opts);
                        break 'conns;
                    }
                    if best.as_ref().is_none_or(|b| opts.len() < b.len()) {
                        best = Some(opts);
                    }
                }
                if !crate::matrix::bump(&mut idx, members.len()) {
                    break;
                }
            }
        }
        let Some(options) = best else {
            self.good.push(s.clone());
            return Ok(Some(s));
        };
        for g in options {
            let mut t = s.clone();
            t.insert(g);
            if let Some(x) = self.extend_inner(t)? {
                return Ok(Some(x));
            }
        }
        self.failed.insert(s);
        Ok(None)
    }

    /// Candidates lying in some good set, in candidate order.
    fn realisable(&mut self) -> Result<Vec<usize>> {
        let mut covered = self.empty();
        for f in 0..self.cands.len() {
            if covered.contains(f) || self.bad_single[f] {
                continue;
            }
            let mut s = self.empty();
            s.insert(f);
            if let Some(g) = self.extend(s)? {
                covered.union_with(&g);
            }
        }
        Ok(covered.ones().collect())
    }
}

fn bump_mixed(idx: &mut [usize], sizes: &[usize]) -> bool {
    for (slot, &n) in idx.iter_mut().zip(sizes).rev() {
        *slot += 1;
        if *slot < n {
            return true;
        }
        *slot = 0;
    }
    false
}
