//! Signatures, formulas, substitutions and look-ahead strings.
//!
//! Formulas are plain trees. Connectives are referred to by their index in
//! the [`Signature`] (declaration order), which is also the order used
//! whenever something has to be enumerated deterministically.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::error::{Error, ParseError, Result};

/// Index of a connective inside its [`Signature`].
pub type ConnId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Connective {
    pub name: String,
    pub arity: usize,
}

/// A finite propositional signature together with its deterministic part.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    connectives: Vec<Connective>,
    det: BTreeSet<ConnId>,
    by_name: HashMap<String, ConnId>,
}

impl Signature {
    pub fn new<S: AsRef<str>>(connectives: &[(S, usize)], det: &[S]) -> Result<Self> {
        let mut sig = Signature {
            connectives: Vec::new(),
            det: BTreeSet::new(),
            by_name: HashMap::new(),
        };
        for (name, arity) in connectives {
            let name = name.as_ref();
            if !is_identifier(name) || is_variable_name(name) {
                return Err(Error::InvalidMatrix(format!("bad connective name `{name}`")));
            }
            if sig.by_name.contains_key(name) {
                return Err(Error::DuplicateConnective(name.to_string()));
            }
            sig.by_name.insert(name.to_string(), sig.connectives.len());
            sig.connectives.push(Connective {
                name: name.to_string(),
                arity: *arity,
            });
        }
        for name in det {
            let id = sig.require(name.as_ref())?;
            sig.det.insert(id);
        }
        Ok(sig)
    }

    /// Same connectives, different deterministic part.
    pub fn with_det<S: AsRef<str>>(&self, det: &[S]) -> Result<Self> {
        let mut sig = self.clone();
        sig.det.clear();
        for name in det {
            let id = sig.require(name.as_ref())?;
            sig.det.insert(id);
        }
        Ok(sig)
    }

    pub fn len(&self) -> usize {
        self.connectives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.connectives.is_empty()
    }

    pub fn connectives(&self) -> &[Connective] {
        &self.connectives
    }

    pub fn lookup(&self, name: &str) -> Option<ConnId> {
        self.by_name.get(name).copied()
    }

    pub fn require(&self, name: &str) -> Result<ConnId> {
        self.lookup(name)
            .ok_or_else(|| Error::UnknownConnective(name.to_string()))
    }

    pub fn name(&self, id: ConnId) -> &str {
        &self.connectives[id].name
    }

    pub fn arity(&self, id: ConnId) -> usize {
        self.connectives[id].arity
    }

    pub fn det(&self) -> &BTreeSet<ConnId> {
        &self.det
    }

    pub fn is_det(&self, id: ConnId) -> bool {
        self.det.contains(&id)
    }

    /// One-place connectives outside the deterministic part; the alphabet of
    /// look-ahead strings.
    pub fn lookahead_connectives(&self) -> Vec<ConnId> {
        (0..self.len()).filter(|&c| self.is_lookahead(c)).collect()
    }

    pub fn is_lookahead(&self, id: ConnId) -> bool {
        self.connectives[id].arity == 1 && !self.det.contains(&id)
    }
}

/// A propositional formula. Variables are `p1, p2, ...` and are stored by
/// their (1-based) index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Var(u32),
    App(ConnId, Vec<Formula>),
}

impl Formula {
    pub fn var(index: u32) -> Formula {
        assert!(index >= 1, "variables are numbered from 1");
        Formula::Var(index)
    }

    pub fn app(conn: ConnId, args: Vec<Formula>) -> Formula {
        Formula::App(conn, args)
    }

    pub fn unary(conn: ConnId, arg: Formula) -> Formula {
        Formula::App(conn, vec![arg])
    }

    pub fn binary(conn: ConnId, left: Formula, right: Formula) -> Formula {
        Formula::App(conn, vec![left, right])
    }

    pub fn as_var(&self) -> Option<u32> {
        match self {
            Formula::Var(i) => Some(*i),
            Formula::App(..) => None,
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::Var(_) => 0,
            Formula::App(_, args) => 1 + args.iter().map(Formula::depth).max().unwrap_or(0),
        }
    }

    /// Number of connective occurrences plus variable occurrences.
    pub fn size(&self) -> usize {
        match self {
            Formula::Var(_) => 1,
            Formula::App(_, args) => 1 + args.iter().map(Formula::size).sum::<usize>(),
        }
    }

    pub fn vars(&self) -> BTreeSet<u32> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<u32>) {
        match self {
            Formula::Var(i) => {
                out.insert(*i);
            }
            Formula::App(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    pub fn max_var(&self) -> u32 {
        match self {
            Formula::Var(i) => *i,
            Formula::App(_, args) => args.iter().map(Formula::max_var).max().unwrap_or(0),
        }
    }

    pub fn connectives_used(&self) -> BTreeSet<ConnId> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            if let Formula::App(c, _) = f {
                out.insert(*c);
            }
        });
        out
    }

    fn visit<F: FnMut(&Formula)>(&self, f: &mut F) {
        f(self);
        if let Formula::App(_, args) = self {
            for a in args {
                a.visit(f);
            }
        }
    }

    pub fn subformulas(&self) -> BTreeSet<Formula> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            out.insert(f.clone());
        });
        out
    }

    /// Homomorphic image under `sigma`; unmapped variables are kept.
    pub fn substitute(&self, sigma: &BTreeMap<u32, Formula>) -> Formula {
        self.substitute_with(&|i| sigma.get(&i).cloned())
    }

    pub fn substitute_with<F: Fn(u32) -> Option<Formula>>(&self, sigma: &F) -> Formula {
        match self {
            Formula::Var(i) => sigma(*i).unwrap_or(Formula::Var(*i)),
            Formula::App(c, args) => {
                Formula::App(*c, args.iter().map(|a| a.substitute_with(sigma)).collect())
            }
        }
    }

    /// `self(p1 := arg)`, the instance of a one-variable formula.
    pub fn instantiate_single(&self, arg: &Formula) -> Formula {
        self.substitute_with(&|i| (i == 1).then(|| arg.clone()))
    }

    /// Variables renamed by `f`.
    pub fn rename(&self, f: &impl Fn(u32) -> u32) -> Formula {
        self.substitute_with(&|i| Some(Formula::Var(f(i))))
    }

    /// Match `self` (a pattern) against `target`, extending `binding`.
    pub fn match_into(&self, target: &Formula, binding: &mut BTreeMap<u32, Formula>) -> bool {
        match (self, target) {
            (Formula::Var(i), _) => match binding.get(i) {
                Some(bound) => bound == target,
                None => {
                    binding.insert(*i, target.clone());
                    true
                }
            },
            (Formula::App(c, args), Formula::App(d, targs)) => {
                c == d
                    && args.len() == targs.len()
                    && args
                        .iter()
                        .zip(targs)
                        .all(|(a, t)| a.match_into(t, binding))
            }
            _ => false,
        }
    }

    pub fn display<'a>(&'a self, sig: &'a Signature) -> FormulaDisplay<'a> {
        FormulaDisplay { formula: self, sig }
    }

    /// Checks every application against the signature's arities.
    pub fn check(&self, sig: &Signature) -> Result<()> {
        match self {
            Formula::Var(0) => Err(Error::InvalidMatrix("variable index 0".into())),
            Formula::Var(_) => Ok(()),
            Formula::App(c, args) => {
                if *c >= sig.len() {
                    return Err(Error::UnknownConnective(format!("#{c}")));
                }
                if sig.arity(*c) != args.len() {
                    return Err(Error::Arity {
                        name: sig.name(*c).to_string(),
                        expected: sig.arity(*c),
                        found: args.len(),
                    });
                }
                args.iter().try_for_each(|a| a.check(sig))
            }
        }
    }
}

pub struct FormulaDisplay<'a> {
    formula: &'a Formula,
    sig: &'a Signature,
}

impl fmt::Display for FormulaDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.formula {
            Formula::Var(i) => write!(f, "p{i}"),
            Formula::App(c, args) => {
                f.write_str(self.sig.name(*c))?;
                if args.is_empty() {
                    return Ok(());
                }
                f.write_str("(")?;
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{}", a.display(self.sig))?;
                }
                f.write_str(")")
            }
        }
    }
}

/// All subformulas of a set of formulas.
pub fn subformulas<'a, I: IntoIterator<Item = &'a Formula>>(formulas: I) -> BTreeSet<Formula> {
    let mut out = BTreeSet::new();
    for f in formulas {
        out.extend(f.subformulas());
    }
    out
}

/// Subformula closure sorted so that every formula comes after its
/// immediate subformulas.
pub fn subformulas_bottom_up<'a, I: IntoIterator<Item = &'a Formula>>(formulas: I) -> Vec<Formula> {
    let mut out: Vec<Formula> = subformulas(formulas).into_iter().collect();
    out.sort_by_key(|f| f.size());
    out
}

/// `sub(Γ) ∪ { S(B) : S ∈ separators, B ∈ sub(Γ) }`.
pub fn s_subformulas<'a, I: IntoIterator<Item = &'a Formula>>(
    formulas: I,
    separators: &[Formula],
) -> BTreeSet<Formula> {
    let base = subformulas(formulas);
    let mut out = base.clone();
    for s in separators {
        for b in &base {
            out.insert(s.instantiate_single(b));
        }
    }
    out
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub(crate) fn is_variable_name(s: &str) -> bool {
    let Some(digits) = s.strip_prefix('p') else {
        return false;
    };
    !digits.is_empty() && !digits.starts_with('0') && digits.chars().all(|c| c.is_ascii_digit())
}

// ---------------------------------------------------------------------------
// Parsing

/// Parse a formula in prefix notation: `imp(p1, neg(p2))`.
pub fn parse_formula(text: &str, sig: &Signature) -> Result<Formula> {
    let mut p = FormulaParser { text, pos: 0, sig };
    let f = p.formula()?;
    p.skip_ws();
    if p.pos != text.len() {
        return Err(p.error("trailing input").into());
    }
    Ok(f)
}

/// Parse a whitespace- or comma-separated list of formulas.
pub fn parse_formula_list(text: &str, sig: &Signature) -> Result<Vec<Formula>> {
    let mut p = FormulaParser { text, pos: 0, sig };
    let mut out = Vec::new();
    loop {
        p.skip_ws();
        if p.peek() == Some(',') {
            p.pos += 1;
            continue;
        }
        if p.pos == text.len() {
            return Ok(out);
        }
        out.push(p.formula()?);
    }
}

pub(crate) struct FormulaParser<'a> {
    pub(crate) text: &'a str,
    pub(crate) pos: usize,
    pub(crate) sig: &'a Signature,
}

impl FormulaParser<'_> {
    pub(crate) fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn error(&self, msg: impl Into<String>) -> ParseError {
        ParseError::at(self.text, self.pos, msg)
    }

    fn ident(&mut self) -> Option<&str> {
        let start = self.pos;
        let rest = &self.text[start..];
        let mut end = 0;
        for (i, c) in rest.char_indices() {
            let ok = if i == 0 {
                c.is_ascii_alphabetic() || c == '_'
            } else {
                c.is_ascii_alphanumeric() || c == '_'
            };
            if !ok {
                break;
            }
            end = i + c.len_utf8();
        }
        if end == 0 {
            return None;
        }
        self.pos += end;
        Some(&self.text[start..start + end])
    }

    pub(crate) fn formula(&mut self) -> Result<Formula> {
        self.skip_ws();
        let start = self.pos;
        let Some(name) = self.ident() else {
            return Err(self.error("expected a formula").into());
        };
        if is_variable_name(name) {
            let index: u32 = name[1..]
                .parse()
                .map_err(|_| ParseError::at(self.text, start, "variable index out of range"))?;
            return Ok(Formula::Var(index));
        }
        let name = name.to_string();
        let Some(conn) = self.sig.lookup(&name) else {
            return Err(ParseError::at(self.text, start, format!("unknown connective `{name}`")).into());
        };
        let arity = self.sig.arity(conn);
        let save = self.pos;
        self.skip_ws();
        let mut args = Vec::new();
        if self.peek() == Some('(') {
            self.pos += 1;
            loop {
                args.push(self.formula()?);
                self.skip_ws();
                match self.peek() {
                    Some(',') => self.pos += 1,
                    Some(')') => {
                        self.pos += 1;
                        break;
                    }
                    _ => return Err(self.error("expected `,` or `)`").into()),
                }
            }
        } else {
            self.pos = save;
        }
        if args.len() != arity {
            return Err(ParseError::at(
                self.text,
                start,
                format!("connective `{name}` expects {arity} argument(s), got {}", args.len()),
            )
            .into());
        }
        Ok(Formula::App(conn, args))
    }
}

// ---------------------------------------------------------------------------
// Look-ahead strings

/// A finite string over the look-ahead connectives, outermost symbol first:
/// applying `b1 b2 ... bn` to `A` gives `b1(b2(...bn(A)))`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct LookaheadString(Vec<ConnId>);

impl LookaheadString {
    pub fn empty() -> Self {
        LookaheadString(Vec::new())
    }

    pub fn new(symbols: Vec<ConnId>) -> Self {
        LookaheadString(symbols)
    }

    pub fn symbols(&self) -> &[ConnId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `self · other`
    pub fn concat(&self, other: &LookaheadString) -> LookaheadString {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        LookaheadString(v)
    }

    pub fn push_back(&self, symbol: ConnId) -> LookaheadString {
        let mut v = self.0.clone();
        v.push(symbol);
        LookaheadString(v)
    }

    /// All prefixes, including the empty string and the string itself.
    pub fn prefixes(&self) -> impl Iterator<Item = LookaheadString> + '_ {
        (0..=self.0.len()).map(|n| LookaheadString(self.0[..n].to_vec()))
    }

    pub fn suffixes(&self) -> impl Iterator<Item = LookaheadString> + '_ {
        (0..=self.0.len()).map(|n| LookaheadString(self.0[n..].to_vec()))
    }

    /// Split off the outermost symbol.
    pub fn split_first(&self) -> Option<(ConnId, LookaheadString)> {
        self.0
            .split_first()
            .map(|(b, rest)| (*b, LookaheadString(rest.to_vec())))
    }

    /// If `self = u · suffix`, return `u`.
    pub fn strip_suffix(&self, suffix: &LookaheadString) -> Option<LookaheadString> {
        self.0
            .strip_suffix(suffix.0.as_slice())
            .map(|u| LookaheadString(u.to_vec()))
    }

    pub fn apply(&self, formula: &Formula, sig: &Signature) -> Result<Formula> {
        for &b in &self.0 {
            if b >= sig.len() || !sig.is_lookahead(b) {
                let name = sig.connectives().get(b).map_or("?", |c| c.name.as_str());
                return Err(Error::NotLookahead(name.to_string()));
            }
        }
        Ok(self.apply_unchecked(formula))
    }

    pub(crate) fn apply_unchecked(&self, formula: &Formula) -> Formula {
        self.0
            .iter()
            .rev()
            .fold(formula.clone(), |acc, &b| Formula::App(b, vec![acc]))
    }

    pub fn display<'a>(&'a self, sig: &'a Signature) -> impl fmt::Display + 'a {
        struct D<'a>(&'a LookaheadString, &'a Signature);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                if self.0.is_empty() {
                    return f.write_str("ε");
                }
                let names: Vec<&str> = self.0 .0.iter().map(|&c| self.1.name(c)).collect();
                f.write_str(&names.join("."))
            }
        }
        D(self, sig)
    }
}

impl PartialOrd for LookaheadString {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Shorter strings first, then lexicographic by declaration order.
impl Ord for LookaheadString {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

/// Parse `neg.circ` (or `ε` / empty) into a look-ahead string.
pub fn parse_lookahead(text: &str, sig: &Signature) -> Result<LookaheadString> {
    let t = text.trim();
    if t.is_empty() || t == "ε" || t == "eps" {
        return Ok(LookaheadString::empty());
    }
    let mut symbols = Vec::new();
    for name in t.split('.') {
        let id = sig.require(name.trim())?;
        if !sig.is_lookahead(id) {
            return Err(Error::NotLookahead(name.to_string()));
        }
        symbols.push(id);
    }
    Ok(LookaheadString(symbols))
}

// ---------------------------------------------------------------------------
// Simple axioms

/// What a placeholder of the structure formula stands for.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Binding {
    /// `w · p_j`
    Var { lookahead: LookaheadString, var: u32 },
    /// `u · ©(p1, ..., pk)` for the axiom's base connective `©`.
    Base { lookahead: LookaheadString },
}

impl Binding {
    pub fn lookahead(&self) -> &LookaheadString {
        match self {
            Binding::Var { lookahead, .. } | Binding::Base { lookahead } => lookahead,
        }
    }
}

/// An axiom decomposed as a deterministic structure formula applied to
/// look-ahead terms.
///
/// Placeholder `Var(i)` of `structure` stands for `bindings[i - 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimpleAxiom {
    pub source: Formula,
    pub base: ConnId,
    pub structure: Formula,
    pub bindings: Vec<Binding>,
    /// True when `base` was picked by the arity preference rule rather than
    /// forced by an occurrence of `u · ©(p1, ..., pk)`.
    pub base_by_preference: bool,
}

impl SimpleAxiom {
    pub fn has_base_terms(&self) -> bool {
        self.bindings
            .iter()
            .any(|b| matches!(b, Binding::Base { .. }))
    }

    /// Look-ahead strings each axiom variable is read at.
    pub fn var_lookaheads(&self) -> BTreeMap<u32, BTreeSet<LookaheadString>> {
        let mut out: BTreeMap<u32, BTreeSet<LookaheadString>> = BTreeMap::new();
        for b in &self.bindings {
            if let Binding::Var { lookahead, var } = b {
                out.entry(*var).or_default().insert(lookahead.clone());
            }
        }
        out
    }

    /// Rebuild the formula from structure and bindings.
    pub fn resubstitute(&self, sig: &Signature) -> Formula {
        let k = sig.arity(self.base) as u32;
        let base_term = Formula::App(self.base, (1..=k).map(Formula::Var).collect());
        self.structure.substitute_with(&|i| {
            self.bindings.get(i as usize - 1).map(|b| match b {
                Binding::Var { lookahead, var } => lookahead.apply_unchecked(&Formula::Var(*var)),
                Binding::Base { lookahead } => lookahead.apply_unchecked(&base_term),
            })
        })
    }

    pub fn lookaheads(&self) -> impl Iterator<Item = &LookaheadString> {
        self.bindings.iter().map(Binding::lookahead)
    }
}

/// Recognise `formula` as a simple axiom over the deterministic part of `sig`.
pub fn decompose_simple(formula: &Formula, sig: &Signature) -> Result<SimpleAxiom> {
    formula.check(sig)?;
    let show = || formula.display(sig).to_string();
    let mut bindings: Vec<Binding> = Vec::new();
    let mut base: Option<ConnId> = None;
    let structure = peel(formula, sig, &mut bindings, &mut base).map_err(|why| Error::NotSimple(show(), why))?;
    let max_var = formula.max_var() as usize;
    let (base, by_preference) = match base {
        Some(c) => {
            if sig.arity(c) < max_var {
                return Err(Error::NotSimple(
                    show(),
                    format!("variable p{max_var} exceeds the arity of `{}`", sig.name(c)),
                ));
            }
            (c, false)
        }
        None => {
            let pick = (0..sig.len())
                .filter(|&c| sig.arity(c) >= max_var)
                .min_by_key(|&c| (sig.arity(c), c));
            match pick {
                Some(c) => (c, true),
                None => {
                    return Err(Error::NotSimple(
                        show(),
                        format!("no connective has arity ≥ {max_var}"),
                    ))
                }
            }
        }
    };
    Ok(SimpleAxiom {
        source: formula.clone(),
        base,
        structure,
        bindings,
        base_by_preference: by_preference,
    })
}

fn peel(
    f: &Formula,
    sig: &Signature,
    bindings: &mut Vec<Binding>,
    base: &mut Option<ConnId>,
) -> std::result::Result<Formula, String> {
    if let Formula::App(c, args) = f {
        if sig.is_det(*c) {
            let args = args
                .iter()
                .map(|a| peel(a, sig, bindings, base))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            return Ok(Formula::App(*c, args));
        }
    }
    // A maximal non-deterministic subtree: w · p_j or u · ©(p1, ..., pk).
    let mut symbols = Vec::new();
    let mut cur = f;
    while let Formula::App(c, args) = cur {
        if sig.is_lookahead(*c) {
            symbols.push(*c);
            cur = &args[0];
        } else {
            break;
        }
    }
    let lookahead = LookaheadString(symbols);
    let binding = match cur {
        Formula::Var(j) => Binding::Var {
            lookahead,
            var: *j,
        },
        Formula::App(c, args) => {
            let pattern_ok = args
                .iter()
                .enumerate()
                .all(|(i, a)| *a == Formula::Var(i as u32 + 1));
            if !pattern_ok {
                return Err(format!(
                    "`{}` is not applied to p1..p{} in order",
                    sig.name(*c),
                    args.len()
                ));
            }
            match base {
                Some(b) if b != c => {
                    return Err(format!(
                        "two different base connectives `{}` and `{}`",
                        sig.name(*b),
                        sig.name(*c)
                    ))
                }
                _ => *base = Some(*c),
            }
            Binding::Base { lookahead }
        }
    };
    let index = match bindings.iter().position(|b| *b == binding) {
        Some(i) => i,
        None => {
            bindings.push(binding);
            bindings.len() - 1
        }
    };
    Ok(Formula::Var(index as u32 + 1))
}

/// `{ε}` together with every prefix of every look-ahead used by the axioms.
pub fn lookahead_set(axioms: &[SimpleAxiom]) -> BTreeSet<LookaheadString> {
    let mut out = BTreeSet::new();
    out.insert(LookaheadString::empty());
    for ax in axioms {
        for w in ax.lookaheads() {
            out.extend(w.prefixes());
        }
    }
    out
}

/// Every suffix of every member.
pub fn suffix_closure(set: &BTreeSet<LookaheadString>) -> BTreeSet<LookaheadString> {
    set.iter().flat_map(|w| w.suffixes().collect::<Vec<_>>()).collect()
}
