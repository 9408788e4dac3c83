//! Text formats for matrices (with axioms and separators) and calculi.
//!
//! Both are sequences of `name [arg] { ... }` sections; `#` starts a line
//! comment.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use crate::error::{Error, ParseError, Result};
use crate::matrix::{PNMatrix, Value};
use crate::rules::{Calculus, Rule};
use crate::syntax::{parse_lookahead, ConnId, Formula, FormulaParser, LookaheadString, Signature};

/// Values of a matrix mapped onto the values of a deterministic base it
/// rexpands.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Projection {
    pub base_labels: Vec<String>,
    pub map: Vec<Value>,
}

/// A matrix file: the matrix plus the optional blocks used by the tools.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecFile {
    pub matrix: PNMatrix,
    pub axioms: Vec<Formula>,
    pub separators: Vec<Formula>,
    pub projection: Option<Projection>,
    pub display: Vec<LookaheadString>,
}

impl SpecFile {
    pub fn new(matrix: PNMatrix) -> Self {
        SpecFile {
            matrix,
            axioms: Vec::new(),
            separators: Vec::new(),
            projection: None,
            display: Vec::new(),
        }
    }

    pub fn sig(&self) -> &Signature {
        self.matrix.signature()
    }
}

struct Section {
    name: String,
    arg: Option<String>,
    at: usize,
    body_start: usize,
    body: String,
}

/// Blank out comments so byte offsets stay valid.
fn strip_comments(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut in_comment = false;
    for c in text.chars() {
        match c {
            '\n' => {
                in_comment = false;
                out.push(c);
            }
            '#' => {
                in_comment = true;
                out.push(' ');
            }
            _ if in_comment => out.extend(std::iter::repeat_n(' ', c.len_utf8())),
            _ => out.push(c),
        }
    }
    out
}

fn sections(text: &str) -> Result<Vec<Section>> {
    let clean = strip_comments(text);
    let bytes = clean.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |at: usize, m: &str| Error::from(ParseError::at(text, at, m));
    loop {
        while i < bytes.len() && (bytes[i] as char).is_whitespace() {
            i += 1;
        }
        if i >= bytes.len() {
            return Ok(out);
        }
        let at = i;
        let Some(open) = clean[i..].find('{').map(|k| i + k) else {
            return Err(err(at, "expected `name {`"));
        };
        let head: Vec<&str> = clean[i..open].split_whitespace().collect();
        let (name, arg) = match head.as_slice() {
            [n] => (n.to_string(), None),
            [n, a] => (n.to_string(), Some(a.to_string())),
            _ => return Err(err(at, "expected a section header")),
        };
        let mut depth = 0usize;
        let mut close = None;
        for (k, b) in bytes.iter().enumerate().skip(open) {
            match b {
                b'{' => depth += 1,
                b'}' => {
                    depth -= 1;
                    if depth == 0 {
                        close = Some(k);
                        break;
                    }
                }
                _ => {}
            }
        }
        let Some(close) = close else {
            return Err(err(open, "unclosed `{`"));
        };
        out.push(Section {
            name,
            arg,
            at,
            body_start: open + 1,
            body: clean[open + 1..close].to_string(),
        });
        i = close + 1;
    }
}

fn words(body: &str, start: usize) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut cur: Option<usize> = None;
    for (k, c) in body.char_indices().chain(std::iter::once((body.len(), ' '))) {
        let sep = c.is_whitespace() || c == ',';
        match (cur, sep) {
            (None, false) => cur = Some(k),
            (Some(s), true) => {
                out.push((start + s, &body[s..k]));
                cur = None;
            }
            _ => {}
        }
    }
    out
}

fn formulas(text: &str, s: &Section, sig: &Signature) -> Result<Vec<Formula>> {
    let mut p = FormulaParser { text, pos: s.body_start, sig };
    let end = s.body_start + s.body.len();
    let mut out = Vec::new();
    loop {
        p.skip_ws();
        while p.pos < end && text[p.pos..].starts_with(',') {
            p.pos += 1;
            p.skip_ws();
        }
        if p.pos >= end {
            return Ok(out);
        }
        out.push(p.formula()?);
        if p.pos > end {
            return Err(ParseError::at(text, end, "formula runs past the end of the section").into());
        }
    }
}

fn signature_from(text: &str, secs: &[Section]) -> Result<Signature> {
    let find = |n: &str| secs.iter().find(|s| s.name == n);
    let sig_sec = find("signature").ok_or_else(|| ParseError::at(text, 0, "missing `signature` section"))?;
    let mut conns = Vec::new();
    for (at, w) in words(&sig_sec.body, sig_sec.body_start) {
        let Some((name, arity)) = w.split_once('/') else {
            return Err(ParseError::at(text, at, "expected `name/arity`").into());
        };
        let arity: usize = arity
            .parse()
            .map_err(|_| ParseError::at(text, at, "bad arity"))?;
        conns.push((name.to_string(), arity));
    }
    let det: Vec<String> = find("det")
        .map(|s| words(&s.body, s.body_start).into_iter().map(|(_, w)| w.to_string()).collect())
        .unwrap_or_default();
    Signature::new(&conns, &det)
}

fn check_sections(text: &str, secs: &[Section], allowed: &[&str]) -> Result<()> {
    let mut seen = HashMap::new();
    for s in secs {
        if !allowed.contains(&s.name.as_str()) {
            return Err(ParseError::at(text, s.at, format!("unknown section `{}`", s.name)).into());
        }
        let key = (s.name.clone(), s.arg.clone());
        if seen.insert(key, ()).is_some() && !matches!(s.name.as_str(), "rule") {
            return Err(ParseError::at(text, s.at, format!("duplicate section `{}`", s.name)).into());
        }
        let wants_arg = matches!(s.name.as_str(), "table" | "rule");
        if wants_arg != s.arg.is_some() {
            return Err(ParseError::at(text, s.at, format!("bad header for `{}`", s.name)).into());
        }
    }
    Ok(())
}

/// Parse a matrix file.
pub fn parse_spec(text: &str) -> Result<SpecFile> {
    let secs = sections(text)?;
    let clean = strip_comments(text);
    check_sections(
        text,
        &secs,
        &["signature", "det", "values", "designated", "table", "axioms", "separators", "projection", "display"],
    )?;
    let sig = signature_from(text, &secs)?;
    let find = |n: &str| secs.iter().find(|s| s.name == n);
    let vals_sec = find("values").ok_or_else(|| ParseError::at(text, 0, "missing `values` section"))?;
    let labels: Vec<String> = words(&vals_sec.body, vals_sec.body_start)
        .into_iter()
        .map(|(_, w)| w.to_string())
        .collect();
    let index: HashMap<&str, Value> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    if index.len() != labels.len() {
        return Err(ParseError::at(text, vals_sec.at, "duplicate value").into());
    }
    let value = |at: usize, w: &str| -> Result<Value> {
        index
            .get(w)
            .copied()
            .ok_or_else(|| ParseError::at(text, at, format!("unknown value `{w}`")).into())
    };
    let mut designated = Vec::new();
    if let Some(s) = find("designated") {
        for (at, w) in words(&s.body, s.body_start) {
            designated.push(value(at, w)?);
        }
    }
    let n = labels.len();
    let mut rows: Vec<Vec<Option<Vec<Value>>>> = (0..sig.len()).map(|c| vec![None; n.pow(sig.arity(c) as u32)]).collect();
    let mut have_table = vec![false; sig.len()];
    for s in secs.iter().filter(|s| s.name == "table") {
        let name = s.arg.as_deref().unwrap_or_default();
        let c = sig
            .lookup(name)
            .ok_or_else(|| ParseError::at(text, s.at, format!("table for unknown connective `{name}`")))?;
        have_table[c] = true;
        parse_table(text, s, c, &sig, &value, n, &mut rows[c])?;
    }
    for c in 0..sig.len() {
        if !have_table[c] {
            return Err(ParseError::at(text, text.len(), format!("missing table for `{}`", sig.name(c))).into());
        }
        if let Some(r) = rows[c].iter().position(Option::is_none) {
            let mut t = vec![0; sig.arity(c)];
            crate::matrix::decode_into(r, n, &mut t);
            let shown: Vec<&str> = t.iter().map(|&x| labels[x].as_str()).collect();
            return Err(ParseError::at(
                text,
                text.len(),
                format!("table `{}` is missing row ({})", sig.name(c), shown.join(",")),
            )
            .into());
        }
    }
    let rows: Vec<Vec<Vec<Value>>> = rows
        .into_iter()
        .map(|t| t.into_iter().map(Option::unwrap).collect())
        .collect();
    let matrix = PNMatrix::from_rows(sig.clone(), labels.clone(), &designated, rows)?;
    let axioms = match find("axioms") {
        Some(s) => formulas(&clean, s, &sig)?,
        None => Vec::new(),
    };
    let separators = match find("separators") {
        Some(s) => formulas(&clean, s, &sig)?,
        None => Vec::new(),
    };
    let projection = match find("projection") {
        Some(s) => Some(parse_projection(text, s, &value, n)?),
        None => None,
    };
    let display = match find("display") {
        Some(s) => words(&s.body, s.body_start)
            .into_iter()
            .map(|(_, w)| parse_lookahead(w, &sig))
            .collect::<Result<Vec<_>>>()?,
        None => Vec::new(),
    };
    Ok(SpecFile {
        matrix,
        axioms,
        separators,
        projection,
        display,
    })
}

fn parse_table(
    text: &str,
    s: &Section,
    c: ConnId,
    sig: &Signature,
    value: &dyn Fn(usize, &str) -> Result<Value>,
    nvals: usize,
    rows: &mut [Option<Vec<Value>>],
) -> Result<()> {
    let body = &s.body;
    let base = s.body_start;
    let err = |k: usize, m: &str| -> Error { ParseError::at(text, base + k, m).into() };
    let mut k = 0;
    let skip = |k: &mut usize| {
        while *k < body.len() && body[*k..].starts_with(char::is_whitespace) {
            *k += body[*k..].chars().next().map_or(1, char::len_utf8);
        }
    };
    loop {
        skip(&mut k);
        if k >= body.len() {
            return Ok(());
        }
        let row_at = k;
        if !body[k..].starts_with('(') {
            return Err(err(k, "expected `(`"));
        }
        let close = body[k..].find(')').map(|j| k + j).ok_or_else(|| err(k, "missing `)`"))?;
        let args: Vec<(usize, &str)> = words(&body[k + 1..close], base + k + 1);
        if args.len() != sig.arity(c) {
            return Err(err(row_at, &format!("row needs {} argument(s)", sig.arity(c))));
        }
        let tuple = args.iter().map(|&(at, w)| value(at, w)).collect::<Result<Vec<_>>>()?;
        k = close + 1;
        skip(&mut k);
        if !body[k..].starts_with("->") {
            return Err(err(k, "expected `->`"));
        }
        k += 2;
        skip(&mut k);
        if !body[k..].starts_with('{') {
            return Err(err(k, "expected `{`"));
        }
        let end = body[k..].find('}').map(|j| k + j).ok_or_else(|| err(k, "missing `}`"))?;
        let entry = words(&body[k + 1..end], base + k + 1)
            .into_iter()
            .map(|(at, w)| value(at, w))
            .collect::<Result<Vec<_>>>()?;
        k = end + 1;
        let r = crate::matrix::encode(&tuple, nvals);
        if rows[r].replace(entry).is_some() {
            return Err(err(row_at, "duplicate row"));
        }
    }
}

fn parse_projection(
    text: &str,
    s: &Section,
    value: &dyn Fn(usize, &str) -> Result<Value>,
    n: usize,
) -> Result<Projection> {
    let ws = words(&s.body, s.body_start);
    let mut base_labels: Vec<String> = Vec::new();
    let mut map = vec![None; n];
    let mut i = 0;
    while i < ws.len() {
        let (at, from) = ws[i];
        if ws.get(i + 1).map(|w| w.1) != Some("->") || i + 2 >= ws.len() {
            return Err(ParseError::at(text, at, "expected `value -> base`").into());
        }
        let x = value(at, from)?;
        let to = ws[i + 2].1;
        let b = match base_labels.iter().position(|l| l == to) {
            Some(b) => b,
            None => {
                base_labels.push(to.to_string());
                base_labels.len() - 1
            }
        };
        if map[x].replace(b).is_some() {
            return Err(ParseError::at(text, at, "value projected twice").into());
        }
        i += 3;
    }
    let map = map
        .into_iter()
        .enumerate()
        .map(|(x, b)| b.ok_or_else(|| Error::InvalidExpansion(format!("value #{x} has no projection"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(Projection { base_labels, map })
}

fn braced(items: &str) -> String {
    if items.is_empty() {
        "{ }".to_string()
    } else {
        format!("{{ {items} }}")
    }
}

fn join_formulas(fs: &[Formula], sig: &Signature) -> String {
    fs.iter().map(|f| f.display(sig).to_string()).collect::<Vec<_>>().join(" ")
}

fn write_signature(out: &mut String, sig: &Signature) {
    let conns: Vec<String> = sig.connectives().iter().map(|c| format!("{}/{}", c.name, c.arity)).collect();
    let _ = writeln!(out, "signature {{ {} }}", conns.join(" "));
    let det: Vec<&str> = sig.det().iter().map(|&c| sig.name(c)).collect();
    let _ = writeln!(out, "det {}", braced(&det.join(" ")));
}

/// Render a matrix file; `comments` are emitted as leading `#` lines.
pub fn write_spec(spec: &SpecFile, comments: &[String]) -> String {
    let m = &spec.matrix;
    let sig = m.signature();
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    write_signature(&mut out, sig);
    let _ = writeln!(out, "values {}", braced(&m.labels().join(" ")));
    let d: Vec<&str> = m.designated().into_iter().map(|x| m.label(x)).collect();
    let _ = writeln!(out, "designated {}", braced(&d.join(" ")));
    for c in 0..sig.len() {
        let k = sig.arity(c);
        let rows: Vec<String> = m
            .tuples(k)
            .map(|t| {
                let args: Vec<&str> = t.iter().map(|&x| m.label(x)).collect();
                let ys: Vec<&str> = m.entry(c, &t).iter().map(|&y| m.label(y)).collect();
                format!("({})->{{{}}}", args.join(","), ys.join(","))
            })
            .collect();
        if rows.len() <= 4 {
            let _ = writeln!(out, "table {} {{ {} }}", sig.name(c), rows.join(" "));
        } else {
            let per_line = if k >= 2 { m.len().pow(k as u32 - 1) } else { 4 };
            let _ = writeln!(out, "table {} {{", sig.name(c));
            for chunk in rows.chunks(per_line.max(1)) {
                let _ = writeln!(out, "  {}", chunk.join(" "));
            }
            let _ = writeln!(out, "}}");
        }
    }
    if !spec.axioms.is_empty() {
        let _ = writeln!(out, "axioms {{ {} }}", join_formulas(&spec.axioms, sig));
    }
    if !spec.separators.is_empty() {
        let _ = writeln!(out, "separators {{ {} }}", join_formulas(&spec.separators, sig));
    }
    if let Some(p) = &spec.projection {
        let pairs: Vec<String> = m
            .values()
            .map(|x| format!("{} -> {}", m.label(x), p.base_labels[p.map[x]]))
            .collect();
        let _ = writeln!(out, "projection {{ {} }}", pairs.join("  "));
    }
    if !spec.display.is_empty() {
        let ws: Vec<String> = spec.display.iter().map(|w| lookahead_token(w, sig)).collect();
        let _ = writeln!(out, "display {{ {} }}", ws.join(" "));
    }
    out
}

fn lookahead_token(w: &LookaheadString, sig: &Signature) -> String {
    if w.is_empty() {
        "eps".to_string()
    } else {
        w.symbols().iter().map(|&c| sig.name(c)).collect::<Vec<_>>().join(".")
    }
}

/// Parse a calculus file: `signature`, optional `det` and `separators`,
/// then `rule <name> { premises { ... } conclusions { ... } }` sections.
pub fn parse_calculus(text: &str) -> Result<Calculus> {
    let secs = sections(text)?;
    let text = &strip_comments(text);
    check_sections(text, &secs, &["signature", "det", "separators", "rule"])?;
    let sig = signature_from(text, &secs)?;
    let separators = match secs.iter().find(|s| s.name == "separators") {
        Some(s) => formulas(text, s, &sig)?,
        None => Vec::new(),
    };
    let mut rules = Vec::new();
    let mut names = BTreeMap::new();
    for s in secs.iter().filter(|s| s.name == "rule") {
        let name = s.arg.clone().unwrap_or_default();
        if names.insert(name.clone(), ()).is_some() {
            return Err(ParseError::at(text, s.at, format!("duplicate rule `{name}`")).into());
        }
        let inner = sections(&s.body).map_err(|e| shift(e, text, s.body_start))?;
        let mut premises = None;
        let mut conclusions = None;
        for part in &inner {
            let sub = Section {
                name: part.name.clone(),
                arg: None,
                at: s.body_start + part.at,
                body_start: s.body_start + part.body_start,
                body: part.body.clone(),
            };
            let slot = match (part.name.as_str(), &part.arg) {
                ("premises", None) => &mut premises,
                ("conclusions", None) => &mut conclusions,
                _ => return Err(ParseError::at(text, sub.at, "expected `premises` or `conclusions`").into()),
            };
            if slot.replace(formulas(text, &sub, &sig)?).is_some() {
                return Err(ParseError::at(text, sub.at, "duplicate block").into());
            }
        }
        rules.push(Rule::user(name, premises.unwrap_or_default(), conclusions.unwrap_or_default()));
    }
    Ok(Calculus { sig, separators, rules })
}

fn shift(e: Error, text: &str, offset: usize) -> Error {
    match e {
        Error::Parse(_) => ParseError::at(text, offset, "malformed rule body").into(),
        other => other,
    }
}

pub fn write_calculus(calc: &Calculus, comments: &[String]) -> String {
    let sig = &calc.sig;
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    write_signature(&mut out, sig);
    if !calc.separators.is_empty() {
        let _ = writeln!(out, "separators {{ {} }}", join_formulas(&calc.separators, sig));
    }
    for r in &calc.rules {
        let _ = writeln!(
            out,
            "rule {} {{ premises {} conclusions {} }}",
            r.name,
            braced(&join_formulas(&r.premises, sig)),
            braced(&join_formulas(&r.conclusions, sig))
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const B: &str = "\
signature { imp/2 neg/1 }
det { imp }
values { 0 1 }
designated { 1 }
table imp { (0,0)->{1} (0,1)->{1} (1,0)->{0} (1,1)->{1} }
table neg { (0)->{0,1} (1)->{0,1} }
";

    #[test]
    fn parses_reference_matrix() {
        let spec = parse_spec(B).unwrap();
        let m = &spec.matrix;
        assert_eq!(m.labels(), ["0", "1"]);
        assert_eq!(m.designated(), vec![1]);
        assert_eq!(m.entry(0, &[1, 0]), &[0]);
        assert_eq!(m.entry(1, &[0]), &[0, 1]);
        assert!(spec.axioms.is_empty());
    }

    #[test]
    fn round_trip_is_stable() {
        let spec = parse_spec(B).unwrap();
        let text = write_spec(&spec, &[]);
        assert_eq!(text, B);
        assert_eq!(parse_spec(&text).unwrap(), spec);
    }

    #[test]
    fn comments_empty_entries_and_odd_labels() {
        let text = "# header\nsignature { neg/1 } # trailing\nvalues { 0 1/2 1 }\ndesignated { 1 }\n\
                    table neg { (0)->{1} (1/2)->{} (1)->{0} }\naxioms { neg(neg(p1)) }\n";
        let spec = parse_spec(text).unwrap();
        assert_eq!(spec.matrix.entry(0, &[1]), &[] as &[usize]);
        assert_eq!(spec.axioms.len(), 1);
        let again = parse_spec(&write_spec(&spec, &["note".into()])).unwrap();
        assert_eq!(again, spec);
    }

    #[test]
    fn missing_row_rejected() {
        let text = B.replace("(1,1)->{1} ", "");
        let e = parse_spec(&text).unwrap_err();
        assert!(e.to_string().contains("missing row (1,1)"), "{e}");
    }

    #[test]
    fn duplicate_row_and_unknown_value_rejected() {
        assert!(parse_spec(&B.replace("(1,1)->{1}", "(1,0)->{1}")).is_err());
        let e = parse_spec(&B.replace("(1,1)->{1}", "(1,1)->{7}")).unwrap_err();
        assert!(e.to_string().contains("unknown value `7`"), "{e}");
        match e {
            Error::Parse(p) => assert_eq!(p.line, 5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn projection_and_display_round_trip() {
        let text = format!("{B}projection {{ 0 -> a  1 -> b }}\ndisplay {{ eps neg }}\n");
        let spec = parse_spec(&text).unwrap();
        let p = spec.projection.clone().unwrap();
        assert_eq!(p.base_labels, ["a", "b"]);
        assert_eq!(p.map, vec![0, 1]);
        assert_eq!(spec.display.len(), 2);
        assert_eq!(write_spec(&spec, &[]), text);
    }

    #[test]
    fn calculus_round_trip() {
        let text = "\
signature { imp/2 neg/1 }
det { imp }
separators { p1 neg(p1) }
rule r1 { premises { p2 } conclusions { imp(p1, p2) } }
rule exp { premises { p1 neg(p1) } conclusions { p2 } }
rule star { premises { p1 neg(p1) } conclusions { } }
";
        let calc = parse_calculus(text).unwrap();
        assert_eq!(calc.rules.len(), 3);
        assert!(calc.rules[2].conclusions.is_empty());
        assert_eq!(write_calculus(&calc, &[]), text);
    }

    #[test]
    fn calculus_errors() {
        let bad = "signature { neg/1 }\nrule a { premises { neg(p1) } oops { } }\n";
        assert!(parse_calculus(bad).is_err());
        let dup = "signature { neg/1 }\nrule a { }\nrule a { }\n";
        assert!(parse_calculus(dup).is_err());
    }
}
