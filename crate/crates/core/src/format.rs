//! Line-oriented text formats for instances, patterns and traces.
//!
//! Instances:
//!
//! ```text
//! bcsp 1
//! vars 2
//! dom 0 : 0 1
//! dom 1 : 0 1
//! con 0 1
//! 0 1
//! 1 0
//! end
//! ```
//!
//! Pairs without a `con` block are unconstrained. `elim <i>` marks a
//! variable as eliminated. `#` starts a comment.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::engine::{ElimRecord, EliminationTrace, RuleId};
use crate::model::{Assignment, Constraint, Instance, ModelError, Value, VarId};
use crate::pattern::{Pattern, PatternError, ValueMapping};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormatError {
    #[error("line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("line {line}: {msg}")]
    Semantic { line: usize, msg: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error("trace fingerprint {found} does not match instance fingerprint {expected}")]
    FingerprintMismatch { expected: String, found: String },
}

struct Tok<'a> {
    line: usize,
    col: usize,
    text: &'a str,
}

/// Non-empty lines with comments stripped, split into positioned tokens.
fn lines(text: &str) -> Vec<(usize, Vec<Tok<'_>>)> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("");
        let mut toks = Vec::new();
        let mut start = None;
        for (pos, ch) in body.char_indices().chain(std::iter::once((body.len(), ' '))) {
            match (ch.is_whitespace(), start) {
                (false, None) => start = Some(pos),
                (true, Some(s)) => {
                    toks.push(Tok { line: i + 1, col: body[..s].chars().count() + 1, text: &body[s..pos] });
                    start = None;
                }
                _ => {}
            }
        }
        if !toks.is_empty() {
            out.push((i + 1, toks));
        }
    }
    out
}

fn syntax(t: &Tok<'_>, msg: impl Into<String>) -> FormatError {
    FormatError::Syntax { line: t.line, col: t.col, msg: msg.into() }
}

fn eol(line: usize, toks: &[Tok<'_>], msg: &str) -> FormatError {
    let last = toks.last().expect("non-empty line");
    FormatError::Syntax { line, col: last.col + last.text.chars().count(), msg: msg.to_string() }
}

fn num(t: &Tok<'_>) -> Result<usize, FormatError> {
    t.text.parse().map_err(|_| syntax(t, format!("expected a non-negative integer, found {:?}", t.text)))
}

fn expect_header(lines: &[(usize, Vec<Tok<'_>>)], word: &str) -> Result<(), FormatError> {
    let Some((line, toks)) = lines.first() else {
        return Err(FormatError::Syntax { line: 1, col: 1, msg: format!("missing `{word} 1` header") });
    };
    if toks[0].text != word {
        return Err(syntax(&toks[0], format!("expected `{word}`")));
    }
    match toks.get(1) {
        Some(t) if t.text == "1" && toks.len() == 2 => Ok(()),
        Some(t) => Err(syntax(t, "unsupported version")),
        None => Err(eol(*line, toks, "missing version")),
    }
}

/// Reads `vars <n>` and the `dom <i> : ...` lines shared by both formats.
struct Header {
    count: usize,
    domains: Vec<Option<Vec<Value>>>,
}

impl Header {
    fn vars(line: usize, toks: &[Tok<'_>]) -> Result<Header, FormatError> {
        if toks.len() != 2 {
            return Err(eol(line, toks, "expected `vars <n>`"));
        }
        let count = num(&toks[1])?;
        Ok(Header { count, domains: vec![None; count] })
    }

    fn var(&self, t: &Tok<'_>) -> Result<VarId, FormatError> {
        let v = num(t)?;
        if v >= self.count {
            return Err(syntax(t, format!("variable {v} out of range (vars {})", self.count)));
        }
        Ok(v)
    }

    fn dom(&mut self, line: usize, toks: &[Tok<'_>]) -> Result<(), FormatError> {
        if toks.len() < 3 || toks[2].text != ":" {
            return Err(eol(line, toks, "expected `dom <i> : <values>`"));
        }
        let v = self.var(&toks[1])?;
        let mut values = Vec::new();
        for t in &toks[3..] {
            let a = num(t)?;
            if values.contains(&a) {
                return Err(syntax(t, format!("value {a} listed twice")));
            }
            values.push(a);
        }
        if values.is_empty() {
            return Err(FormatError::Semantic { line, msg: format!("variable {v} has an empty domain") });
        }
        if self.domains[v].replace(values).is_some() {
            return Err(FormatError::Semantic { line, msg: format!("second domain for variable {v}") });
        }
        Ok(())
    }

    fn finish(self) -> Result<Vec<Vec<Value>>, FormatError> {
        self.domains
            .into_iter()
            .enumerate()
            .map(|(v, d)| d.ok_or(FormatError::Semantic { line: 0, msg: format!("variable {v} has no domain") }))
            .collect()
    }
}

/// A `con` block: its line, the pair and the tuples with their lines.
type ConBlock = (usize, VarId, VarId, Vec<(usize, Value, Value)>);

pub fn parse_instance(text: &str) -> Result<Instance, FormatError> {
    let lines = lines(text);
    expect_header(&lines, "bcsp")?;
    let mut header: Option<Header> = None;
    let mut elim: Vec<VarId> = Vec::new();
    let mut blocks: Vec<ConBlock> = Vec::new();
    let mut it = lines.iter().skip(1);
    while let Some((line, toks)) = it.next() {
        let line = *line;
        if toks[0].text == "vars" {
            if header.is_some() {
                return Err(syntax(&toks[0], "second `vars` line"));
            }
            header = Some(Header::vars(line, toks)?);
            continue;
        }
        let h = header.as_mut().ok_or_else(|| syntax(&toks[0], "expected `vars <n>` first"))?;
        match toks[0].text {
            "dom" => h.dom(line, toks)?,
            "elim" => {
                if toks.len() != 2 {
                    return Err(eol(line, toks, "expected `elim <i>`"));
                }
                elim.push(h.var(&toks[1])?);
            }
            "con" => {
                if toks.len() != 3 {
                    return Err(eol(line, toks, "expected `con <i> <j>`"));
                }
                let (v, w) = (h.var(&toks[1])?, h.var(&toks[2])?);
                if v == w {
                    return Err(FormatError::Semantic { line, msg: format!("constraint repeats variable {v}") });
                }
                let mut tuples = Vec::new();
                let mut closed = false;
                for (tl, tt) in it.by_ref() {
                    if tt[0].text == "end" {
                        if tt.len() != 1 {
                            return Err(syntax(&tt[1], "unexpected token after `end`"));
                        }
                        closed = true;
                        break;
                    }
                    if tt.len() != 2 {
                        return Err(eol(*tl, tt, "expected an allowed tuple `<a> <b>` or `end`"));
                    }
                    tuples.push((*tl, num(&tt[0])?, num(&tt[1])?));
                }
                if !closed {
                    return Err(eol(line, toks, "constraint block is missing `end`"));
                }
                blocks.push((line, v, w, tuples));
            }
            other => return Err(syntax(&toks[0], format!("unknown directive {other:?}"))),
        }
    }
    let header = header.ok_or(FormatError::Syntax { line: 1, col: 1, msg: "missing `vars` line".into() })?;
    let domains = header.finish()?;
    let mut seen = BTreeSet::new();
    let mut constraints = Vec::new();
    for (line, v, w, tuples) in blocks {
        if !seen.insert((v.min(w), v.max(w))) {
            return Err(FormatError::Semantic { line, msg: format!("duplicate constraint on {v} and {w}") });
        }
        for &(tl, a, b) in &tuples {
            for (var, val) in [(v, a), (w, b)] {
                if !domains[var].contains(&val) {
                    return Err(FormatError::Semantic {
                        line: tl,
                        msg: format!("value {val} is not in the domain of variable {var}"),
                    });
                }
            }
        }
        constraints.push(Constraint::new(v, w, tuples.into_iter().map(|(_, a, b)| (a, b))));
    }
    let mut inst = Instance::new(domains, constraints)?;
    for v in elim {
        if inst.is_active(v) {
            inst.remove_variable(v);
        }
    }
    Ok(inst)
}

/// Canonical text: variables ascending, live values only, relations that
/// allow every pair of live values omitted, tuples in lexicographic order.
pub fn serialize_instance(inst: &Instance) -> String {
    let mut out = String::from("bcsp 1\n");
    writeln!(out, "vars {}", inst.var_count()).unwrap();
    for v in 0..inst.var_count() {
        let values: Vec<String> = inst.domain(v).values().map(|a| a.to_string()).collect();
        writeln!(out, "dom {v} : {}", values.join(" ")).unwrap();
        if !inst.is_active(v) {
            writeln!(out, "elim {v}").unwrap();
        }
    }
    for (v, w, _) in inst.relations() {
        if !inst.is_nontrivial(v, w) {
            continue;
        }
        writeln!(out, "con {v} {w}").unwrap();
        for a in inst.domain(v).values() {
            for b in inst.domain(w).values() {
                if inst.compatible(v, a, w, b) {
                    writeln!(out, "{a} {b}").unwrap();
                }
            }
        }
        out.push_str("end\n");
    }
    out
}

/// First 16 hex digits of the SHA-256 of the canonical serialization.
pub fn fingerprint(inst: &Instance) -> String {
    let digest = Sha256::digest(serialize_instance(inst).as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

pub fn parse_pattern(text: &str) -> Result<Pattern, FormatError> {
    let lines = lines(text);
    expect_header(&lines, "pattern")?;
    let mut header: Option<Header> = None;
    let mut edges: Vec<(usize, Assignment, Assignment, bool)> = Vec::new();
    let mut evar: Option<(usize, VarId)> = None;
    let mut evals: Vec<(usize, VarId, Value)> = Vec::new();
    let mut dval: Option<(usize, VarId, Value)> = None;
    for (line, toks) in lines.iter().skip(1) {
        let line = *line;
        if toks[0].text == "vars" {
            if header.is_some() {
                return Err(syntax(&toks[0], "second `vars` line"));
            }
            header = Some(Header::vars(line, toks)?);
            continue;
        }
        let h = header.as_mut().ok_or_else(|| syntax(&toks[0], "expected `vars <n>` first"))?;
        match toks[0].text {
            "dom" => h.dom(line, toks)?,
            "edge" => {
                if toks.len() != 6 {
                    return Err(eol(line, toks, "expected `edge +|- <i> <a> <j> <b>`"));
                }
                let sign = match toks[1].text {
                    "+" => true,
                    "-" => false,
                    _ => return Err(syntax(&toks[1], "expected `+` or `-`")),
                };
                let p = Assignment::new(h.var(&toks[2])?, num(&toks[3])?);
                let q = Assignment::new(h.var(&toks[4])?, num(&toks[5])?);
                edges.push((line, p, q, sign));
            }
            "evar" => {
                if toks.len() != 2 {
                    return Err(eol(line, toks, "expected `evar <i>`"));
                }
                if evar.is_some() {
                    return Err(FormatError::Semantic { line, msg: "second `evar` line".into() });
                }
                evar = Some((line, h.var(&toks[1])?));
            }
            "eval" | "dval" => {
                if toks.len() != 3 {
                    return Err(eol(line, toks, "expected `<i> <a>`"));
                }
                let entry = (line, h.var(&toks[1])?, num(&toks[2])?);
                if toks[0].text == "eval" {
                    evals.push(entry);
                } else if dval.replace(entry).is_some() {
                    return Err(FormatError::Semantic { line, msg: "second `dval` line".into() });
                }
            }
            other => return Err(syntax(&toks[0], format!("unknown directive {other:?}"))),
        }
    }
    let header = header.ok_or(FormatError::Syntax { line: 1, col: 1, msg: "missing `vars` line".into() })?;
    let mut p = Pattern::new(header.finish()?)?;
    for (line, a, b, sign) in edges {
        p.add_edge(a, b, sign).map_err(|e| FormatError::Semantic { line, msg: e.to_string() })?;
    }
    for &(line, v, _) in evals.iter().chain(dval.iter()) {
        if evar.map(|(_, x)| x) != Some(v) {
            return Err(FormatError::Semantic {
                line,
                msg: format!("existential value on variable {v}, which is not the distinguished variable"),
            });
        }
    }
    if let Some((line, x)) = evar {
        p.quantify(Some(x), evals.iter().map(|e| e.2), dval.map(|d| d.2))
            .map_err(|e| FormatError::Semantic { line, msg: e.to_string() })?;
    }
    Ok(p)
}

pub fn serialize_pattern(p: &Pattern) -> String {
    let mut out = String::from("pattern 1\n");
    writeln!(out, "vars {}", p.var_count()).unwrap();
    for v in 0..p.var_count() {
        let values: Vec<String> = p.domain(v).iter().map(|a| a.to_string()).collect();
        writeln!(out, "dom {v} : {}", values.join(" ")).unwrap();
    }
    for (q, r, t) in p.edges() {
        writeln!(out, "edge {} {} {} {} {}", if t { "+" } else { "-" }, q.var, q.val, r.var, r.val).unwrap();
    }
    if let Some(x) = p.distinguished_var() {
        writeln!(out, "evar {x}").unwrap();
        for a in p.existential() {
            writeln!(out, "eval {x} {a}").unwrap();
        }
        if let Some(b) = p.distinguished_val() {
            writeln!(out, "dval {x} {b}").unwrap();
        }
    }
    out
}

pub fn serialize_trace(trace: &EliminationTrace) -> String {
    let mut out = format!("bcsp-trace 1 {}\n", trace.fingerprint);
    for rec in &trace.records {
        match rec {
            ElimRecord::Var { var, rule, mapping, .. } => writeln!(out, "var {var} rule={rule} m={mapping}"),
            ElimRecord::Val { var, val, rule, mapping } => writeln!(out, "val {var} {val} rule={rule} m={mapping}"),
            ElimRecord::Ac { var, val } => writeln!(out, "ac {var} {val}"),
        }
        .unwrap();
    }
    out
}

fn mapping(t: &Tok<'_>) -> Result<ValueMapping, FormatError> {
    let body = t.text.strip_prefix("m=").ok_or_else(|| syntax(t, "expected `m=<a>:<d>,...`"))?;
    let mut pairs = BTreeMap::new();
    for part in body.split(',').filter(|p| !p.is_empty()) {
        let (a, d) = part.split_once(':').ok_or_else(|| syntax(t, format!("bad mapping entry {part:?}")))?;
        let a: Value = a.parse().map_err(|_| syntax(t, format!("bad mapping entry {part:?}")))?;
        let d: Value = d.parse().map_err(|_| syntax(t, format!("bad mapping entry {part:?}")))?;
        pairs.insert(a, d);
    }
    Ok(ValueMapping::new(pairs))
}

fn rule(t: &Tok<'_>) -> Result<RuleId, FormatError> {
    let name = t.text.strip_prefix("rule=").ok_or_else(|| syntax(t, "expected `rule=<name>`"))?;
    name.parse().map_err(|_| syntax(t, format!("unknown rule {name:?}")))
}

/// Reads a trace and rehydrates it against `original`, the instance it was
/// recorded on: variable records regain the relations they removed.
pub fn parse_trace(text: &str, original: &Instance) -> Result<EliminationTrace, FormatError> {
    let lines = lines(text);
    let Some((line, toks)) = lines.first() else {
        return Err(FormatError::Syntax { line: 1, col: 1, msg: "missing `bcsp-trace 1 <fingerprint>` header".into() });
    };
    if toks.len() != 3 || toks[0].text != "bcsp-trace" || toks[1].text != "1" {
        return Err(eol(*line, toks, "expected `bcsp-trace 1 <fingerprint>`"));
    }
    let expected = fingerprint(original);
    if toks[2].text != expected {
        return Err(FormatError::FingerprintMismatch { expected, found: toks[2].text.to_string() });
    }
    let mut inst = original.clone();
    let mut trace = EliminationTrace::new(expected);
    for (line, toks) in lines.iter().skip(1) {
        let line = *line;
        let rec = match (toks[0].text, toks.len()) {
            ("var", 4) => {
                let var = num(&toks[1])?;
                let (rule, mapping) = (rule(&toks[2])?, mapping(&toks[3])?);
                if var >= inst.var_count() || !inst.is_active(var) {
                    return Err(FormatError::Semantic { line, msg: format!("variable {var} is not active") });
                }
                ElimRecord::Var { var, rule, mapping, removed: inst.remove_variable(var) }
            }
            ("val", 5) => {
                let (var, val) = (num(&toks[1])?, num(&toks[2])?);
                let rec = ElimRecord::Val { var, val, rule: rule(&toks[3])?, mapping: mapping(&toks[4])? };
                apply_value(&mut inst, line, rec)?
            }
            ("ac", 3) => apply_value(&mut inst, line, ElimRecord::Ac { var: num(&toks[1])?, val: num(&toks[2])? })?,
            ("var" | "val" | "ac", _) => return Err(eol(line, toks, "wrong number of fields")),
            (other, _) => return Err(syntax(&toks[0], format!("unknown record kind {other:?}"))),
        };
        trace.records.push(rec);
    }
    Ok(trace)
}

fn apply_value(inst: &mut Instance, line: usize, rec: ElimRecord) -> Result<ElimRecord, FormatError> {
    let var = rec.var();
    if var >= inst.var_count() {
        return Err(FormatError::Semantic { line, msg: format!("variable {var} out of range") });
    }
    rec.apply(inst).map_err(|e| FormatError::Semantic { line, msg: e.to_string() })?;
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::get_pattern;

    const I2: &str = "bcsp 1\nvars 2\ndom 0 : 0\ndom 1 : 0\ncon 0 1\n0 0\nend\n";

    #[test]
    fn minimal_document() {
        let inst = parse_instance(I2).unwrap();
        assert_eq!(inst.var_count(), 2);
        assert!(inst.compatible(0, 0, 1, 0));
        assert_eq!(inst.nontrivial_constraint_count(), 0);
    }

    #[test]
    fn omitted_pair_is_complete() {
        let inst = parse_instance("bcsp 1\nvars 2 # two\ndom 0 : 0 1\ndom 1 : 0 1\n").unwrap();
        assert!((0..2).all(|a| (0..2).all(|b| inst.compatible(0, a, 1, b))));
    }

    #[test]
    fn malformed_domain_line_has_location() {
        let err = parse_instance("bcsp 1\nvars 1\ndom 0 0 1\n").unwrap_err();
        assert!(matches!(err, FormatError::Syntax { line: 3, .. }), "{err}");
        let err = parse_instance("bcsp 1\nvars 1\ndom 0 : x\n").unwrap_err();
        assert_eq!(err, FormatError::Syntax { line: 3, col: 9, msg: "expected a non-negative integer, found \"x\"".into() });
    }

    #[test]
    fn semantic_errors() {
        let out_of_domain = "bcsp 1\nvars 2\ndom 0 : 0\ndom 1 : 0\ncon 0 1\n0 1\nend\n";
        assert!(matches!(parse_instance(out_of_domain), Err(FormatError::Semantic { line: 6, .. })));
        let dup = "bcsp 1\nvars 2\ndom 0 : 0\ndom 1 : 0\ncon 0 1\nend\ncon 1 0\nend\n";
        assert!(matches!(parse_instance(dup), Err(FormatError::Semantic { line: 7, .. })));
    }

    #[test]
    fn instance_round_trip_with_tombstones() {
        let mut inst = parse_instance("bcsp 1\nvars 3\ndom 0 : 0 1 2\ndom 1 : 0 1\ndom 2 : 0\ncon 0 1\n0 0\n1 1\n2 0\nend\n").unwrap();
        inst.remove_value(0, 2);
        let text = serialize_instance(&inst);
        assert!(text.contains("dom 0 : 0 1\n"));
        assert_eq!(parse_instance(&text).unwrap(), inst);
        inst.remove_variable(2);
        let text = serialize_instance(&inst);
        assert!(text.contains("elim 2\n"));
        let back = parse_instance(&text).unwrap();
        assert_eq!(back, inst);
        assert_eq!(serialize_instance(&back), text);
    }

    #[test]
    fn catalog_patterns_round_trip() {
        for e in crate::catalog::all_entries() {
            let text = serialize_pattern(&e.pattern);
            assert_eq!(parse_pattern(&text).unwrap(), e.pattern, "{}", e.id);
        }
        let btp = get_pattern("BTP").unwrap().pattern;
        assert!(serialize_pattern(&btp).contains("evar 0\n"));
    }

    #[test]
    fn partial_and_misquantified_patterns() {
        let partial = "pattern 1\nvars 2\ndom 0 : 0 1\ndom 1 : 0\nedge + 0 0 1 0\n";
        let p = parse_pattern(partial).unwrap();
        assert_eq!(p.edge(Assignment::new(0, 1), Assignment::new(1, 0)), None);
        let wrong = "pattern 1\nvars 2\ndom 0 : 0 1\ndom 1 : 0\nevar 0\neval 1 0\n";
        assert!(matches!(parse_pattern(wrong), Err(FormatError::Semantic { line: 6, .. })));
    }
}
