//! Named patterns: the elimination rules and the patterns used as
//! counterexamples.
//!
//! Variables are numbered x = 0, y = 1, z = 2 wherever the pattern has a
//! distinguished variable x. Values of x are a = 0, b = 1; a second value of
//! y is p = 0, q = 1. Elsewhere two-valued variables use lo = 0, hi = 1.

use thiserror::Error;

use crate::pattern::Pattern;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PatternKind {
    VarElim,
    ValElim,
    NonElim,
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub id: &'static str,
    pub name: &'static str,
    pub kind: PatternKind,
    pub pattern: Pattern,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown pattern {0:?}")]
pub struct UnknownPattern(pub String);

/// Catalog ids grouped by role.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogListing {
    pub var_elim: Vec<&'static str>,
    pub flattened: Vec<&'static str>,
    pub substitution: &'static str,
    pub val_elim: Vec<&'static str>,
    pub non_elim: Vec<&'static str>,
}

const X: usize = 0;
const Y: usize = 1;
const Z: usize = 2;
const A: usize = 0;
const B: usize = 1;
const P: usize = 0;
const Q: usize = 1;
const LO: usize = 0;
const HI: usize = 1;
const T: bool = true;
const F: bool = false;

type Edge = (usize, usize, usize, usize, bool);

fn build(domains: &[&[usize]], edges: &[Edge], quant: Option<(usize, &[usize], Option<usize>)>) -> Pattern {
    Pattern::build(domains.iter().map(|d| d.to_vec()).collect(), edges, quant).expect("catalog pattern is well formed")
}

const FLAT: Option<(usize, &[usize], Option<usize>)> = Some((X, &[], None));
const EXISTS_A: Option<(usize, &[usize], Option<usize>)> = Some((X, &[A], None));
const EXISTS_AB: Option<(usize, &[usize], Option<usize>)> = Some((X, &[A, B], Some(B)));

fn btp() -> Pattern {
    build(
        &[&[A, B], &[0], &[0]],
        &[(Y, 0, Z, 0, T), (Y, 0, X, B, T), (Z, 0, X, A, T), (Y, 0, X, A, F), (Z, 0, X, B, F)],
        FLAT,
    )
}

fn exists_sub_btp() -> Pattern {
    build(&[&[A, B], &[0], &[0]], &[(Y, 0, Z, 0, T), (Y, 0, X, B, T), (Y, 0, X, A, F), (Z, 0, X, B, F)], EXISTS_A)
}

fn exists_inv_sub_btp() -> Pattern {
    build(&[&[A], &[P, Q], &[0]], &[(Y, Q, X, A, T), (Z, 0, X, A, T), (Y, P, X, A, F), (Z, 0, Y, Q, F)], EXISTS_A)
}

fn exists_snake() -> Pattern {
    build(&[&[A], &[P, Q], &[0]], &[(Y, Q, X, A, T), (Y, P, Z, 0, T), (Y, P, X, A, F), (Z, 0, Y, Q, F)], EXISTS_A)
}

fn ns() -> Pattern {
    build(&[&[A, B], &[0]], &[(Y, 0, X, B, T), (Y, 0, X, A, F)], EXISTS_AB)
}

fn exists2_triangle() -> Pattern {
    build(&[&[A, B], &[0], &[0]], &[(Y, 0, Z, 0, T), (Y, 0, X, B, T), (Z, 0, X, B, T), (Y, 0, X, A, F)], EXISTS_AB)
}

fn exists2_inv_sub_btp() -> Pattern {
    build(
        &[&[A, B], &[P, Q], &[0]],
        &[(Y, P, X, B, T), (Y, Q, X, A, T), (Z, 0, X, A, T), (Y, P, X, A, F), (Z, 0, Y, Q, F)],
        EXISTS_AB,
    )
}

fn exists2_snake() -> Pattern {
    build(
        &[&[A, B], &[P, Q], &[0]],
        &[(Y, P, X, B, T), (Y, Q, X, A, T), (Y, P, Z, 0, T), (Y, P, X, A, F), (Z, 0, Y, Q, F)],
        EXISTS_AB,
    )
}

fn pivot_sym() -> Pattern {
    build(&[&[0], &[0], &[0]], &[(X, 0, Y, 0, F), (X, 0, Z, 0, F)], FLAT)
}

fn pivot_asym() -> Pattern {
    build(&[&[0], &[0], &[0]], &[(Z, 0, Y, 0, F), (Y, 0, X, 0, F)], FLAT)
}

fn cycle3() -> Pattern {
    build(&[&[LO, HI], &[LO, HI], &[LO, HI]], &[(0, HI, 1, HI, F), (0, LO, 2, HI, F), (1, LO, 2, LO, F)], None)
}

fn kite_sym() -> Pattern {
    build(
        &[&[0], &[LO, HI], &[LO, HI]],
        &[(Y, LO, X, 0, T), (Y, LO, Z, HI, T), (Y, HI, Z, LO, T), (Z, LO, X, 0, T), (Y, HI, Z, HI, F)],
        FLAT,
    )
}

fn kite_asym() -> Pattern {
    build(
        &[&[LO, HI], &[LO, HI], &[0]],
        &[(Y, LO, X, HI, T), (Y, LO, Z, 0, T), (Y, HI, X, LO, T), (Z, 0, X, LO, T), (Y, HI, X, HI, F)],
        FLAT,
    )
}

fn rot_sub_btp() -> Pattern {
    build(
        &[&[0], &[LO, HI], &[0]],
        &[(Y, HI, Z, 0, T), (Z, 0, Y, LO, F), (Y, HI, X, 0, F), (Z, 0, X, 0, T)],
        FLAT,
    )
}

fn v_plus_minus() -> Pattern {
    build(&[&[A, B], &[0]], &[(Y, 0, X, A, T), (Y, 0, X, B, F)], EXISTS_A)
}

fn triangle_asym() -> Pattern {
    build(&[&[A], &[0], &[0]], &[(Y, 0, X, A, F), (Y, 0, Z, 0, T), (Z, 0, X, A, T)], EXISTS_A)
}

fn triangle() -> Pattern {
    build(&[&[0], &[0], &[0]], &[(0, 0, 1, 0, T), (0, 0, 2, 0, T), (1, 0, 2, 0, T)], None)
}

fn diamond() -> Pattern {
    build(
        &[&[0], &[LO, HI], &[0]],
        &[(1, LO, 2, 0, T), (1, HI, 2, 0, T), (1, LO, 0, 0, T), (1, HI, 0, 0, F)],
        None,
    )
}

fn z_pattern() -> Pattern {
    build(
        &[&[LO, HI], &[LO, HI]],
        &[(0, HI, 1, LO, F), (0, HI, 1, HI, T), (0, LO, 1, HI, T), (0, LO, 1, LO, T)],
        None,
    )
}

fn xl() -> Pattern {
    build(
        &[&[LO, HI], &[0], &[LO, HI]],
        &[(0, HI, 2, HI, F), (1, 0, 0, LO, F), (0, HI, 2, LO, T), (0, LO, 2, HI, T), (1, 0, 2, LO, T)],
        None,
    )
}

// The counterexample patterns for value elimination have a single
// existential value b, which is also the distinguished value.
const EXISTS_B0: Option<(usize, &[usize], Option<usize>)> = Some((X, &[0], Some(0)));

fn i_minus() -> Pattern {
    build(&[&[0], &[0]], &[(Y, 0, X, 0, F)], EXISTS_B0)
}

fn l_minus() -> Pattern {
    build(&[&[LO, HI], &[0], &[0]], &[(Y, 0, X, HI, F), (Z, 0, X, LO, F)], FLAT)
}

fn l_plus_minus() -> Pattern {
    build(&[&[0], &[0], &[0]], &[(Y, 0, X, 0, T), (Y, 0, Z, 0, F)], EXISTS_B0)
}

fn triangle1() -> Pattern {
    build(
        &[&[LO, HI], &[0], &[0]],
        &[(Y, 0, X, LO, T), (Y, 0, X, HI, F), (Y, 0, Z, 0, T), (Z, 0, X, HI, T)],
        EXISTS_B0,
    )
}

fn triangle2() -> Pattern {
    build(
        &[&[LO, HI], &[LO, HI], &[0]],
        &[(Y, HI, X, HI, T), (Y, LO, X, LO, T), (Y, LO, X, HI, F), (Y, HI, Z, 0, T), (Z, 0, X, HI, T)],
        EXISTS_B0,
    )
}

fn exists_kite() -> Pattern {
    build(
        &[&[0], &[LO, HI], &[LO, HI]],
        &[(Y, LO, X, 0, T), (Y, HI, Z, HI, F), (Y, HI, Z, LO, T), (Y, LO, Z, HI, T), (Z, LO, X, 0, T)],
        EXISTS_B0,
    )
}

fn exists_kite_asym() -> Pattern {
    build(
        &[&[LO, HI], &[LO, HI], &[0]],
        &[(Y, LO, X, HI, T), (Y, HI, X, HI, F), (Y, HI, X, LO, T), (Y, LO, Z, 0, T), (Z, 0, X, LO, T)],
        EXISTS_B0,
    )
}

fn exists_kite1() -> Pattern {
    build(
        &[&[LO, HI], &[LO, HI], &[LO, HI]],
        &[
            (Y, LO, X, LO, T),
            (Y, LO, Z, HI, T),
            (Y, LO, X, HI, F),
            (Y, HI, Z, HI, F),
            (Y, HI, Z, LO, T),
            (Z, LO, X, HI, T),
        ],
        EXISTS_B0,
    )
}

type Row = (&'static str, &'static str, PatternKind, fn() -> Pattern);

const ROWS: &[Row] = &[
    ("BTP", "BTP", PatternKind::VarElim, btp),
    ("ExistsSubBTP", "∃subBTP", PatternKind::VarElim, exists_sub_btp),
    ("ExistsInvSubBTP", "∃invsubBTP", PatternKind::VarElim, exists_inv_sub_btp),
    ("ExistsSnake", "∃snake", PatternKind::VarElim, exists_snake),
    ("InvSubBTP", "invsubBTP", PatternKind::VarElim, || exists_inv_sub_btp().flattened()),
    ("Snake", "snake", PatternKind::VarElim, || exists_snake().flattened()),
    ("NS", "NS", PatternKind::ValElim, ns),
    ("Exists2Triangle", "∃2triangle", PatternKind::ValElim, exists2_triangle),
    ("Exists2InvSubBTP", "∃2invsubBTP", PatternKind::ValElim, exists2_inv_sub_btp),
    ("Exists2Snake", "∃2snake", PatternKind::ValElim, exists2_snake),
    ("PivotSym", "Pivot(sym)", PatternKind::NonElim, pivot_sym),
    ("PivotAsym", "Pivot(asym)", PatternKind::NonElim, pivot_asym),
    ("Cycle3", "Cycle(3)", PatternKind::NonElim, cycle3),
    ("KiteSym", "Kite(sym)", PatternKind::NonElim, kite_sym),
    ("KiteAsym", "Kite(asym)", PatternKind::NonElim, kite_asym),
    ("RotSubBTP", "rotsubBTP", PatternKind::NonElim, rot_sub_btp),
    ("VPlusMinus", "V(+−)", PatternKind::NonElim, v_plus_minus),
    ("TriangleAsym", "Triangle(asym)", PatternKind::NonElim, triangle_asym),
    ("Triangle", "Triangle", PatternKind::NonElim, triangle),
    ("Diamond", "Diamond", PatternKind::NonElim, diamond),
    ("Z", "Z", PatternKind::NonElim, z_pattern),
    ("XL", "XL", PatternKind::NonElim, xl),
    ("IMinus", "I(−)", PatternKind::NonElim, i_minus),
    ("LMinus", "L(−)", PatternKind::NonElim, l_minus),
    ("LPlusMinus", "L(+−)", PatternKind::NonElim, l_plus_minus),
    ("Triangle1", "triangle1", PatternKind::NonElim, triangle1),
    ("Triangle2", "triangle2", PatternKind::NonElim, triangle2),
    ("ExistsKite", "∃Kite", PatternKind::NonElim, exists_kite),
    ("ExistsKiteAsym", "∃Kite(asym)", PatternKind::NonElim, exists_kite_asym),
    ("ExistsKite1", "∃Kite1", PatternKind::NonElim, exists_kite1),
];

/// Folds the spellings people actually type ("∃2snake", "Exists2Snake",
/// "V(+-)", "pivot_sym") onto one key.
pub fn normalize_name(name: &str) -> String {
    name.replace('∃', "exists")
        .replace('+', "plus")
        .replace(['−', '-'], "minus")
        .chars()
        .filter(|c| !matches!(c, '(' | ')' | '_' | ' '))
        .collect::<String>()
        .to_lowercase()
}

fn entry(row: &Row) -> CatalogEntry {
    CatalogEntry { id: row.0, name: row.1, kind: row.2, pattern: (row.3)() }
}

pub fn get_pattern(name: &str) -> Result<CatalogEntry, UnknownPattern> {
    let key = normalize_name(name);
    ROWS.iter()
        .find(|r| normalize_name(r.0) == key || normalize_name(r.1) == key)
        .map(entry)
        .ok_or_else(|| UnknownPattern(name.to_string()))
}

pub fn all_entries() -> Vec<CatalogEntry> {
    ROWS.iter().map(entry).collect()
}

pub fn list_catalog() -> CatalogListing {
    CatalogListing {
        var_elim: vec!["BTP", "ExistsSubBTP", "ExistsInvSubBTP", "ExistsSnake"],
        flattened: vec!["InvSubBTP", "Snake"],
        substitution: "NS",
        val_elim: vec!["Exists2Triangle", "Exists2InvSubBTP", "Exists2Snake"],
        non_elim: ROWS.iter().filter(|r| r.2 == PatternKind::NonElim).map(|r| r.0).collect(),
    }
}

/// The worked sub-pattern and reduction examples: `P1`, `P2`, `P3`, `P4`
/// and the quantified copy `P2'` of `P2` with e = {a}.
pub fn example_pattern(name: &str) -> Result<Pattern, UnknownPattern> {
    let p1_edges = [(Y, 0, X, B, F), (Y, 0, Z, 0, F)];
    let p = match name {
        "P1" => build(&[&[B], &[0], &[0]], &p1_edges, None),
        "P2" | "P2'" => {
            let mut edges = p1_edges.to_vec();
            edges.push((Z, 0, X, A, T));
            let quant = if name == "P2'" { EXISTS_A } else { None };
            build(&[&[A, B], &[0], &[0]], &edges, quant)
        }
        "P3" => build(
            &[&[A, B], &[0], &[0]],
            &[(Y, 0, X, B, F), (Y, 0, Z, 0, F), (Z, 0, X, A, T), (Z, 0, X, B, F)],
            None,
        ),
        "P4" => build(&[&[B], &[0], &[0]], &[(Z, 0, X, B, T), (Y, 0, X, B, F), (Y, 0, Z, 0, F)], None),
        _ => return Err(UnknownPattern(name.to_string())),
    };
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::{equivalent, is_irreducible, is_sub_pattern};

    #[test]
    fn listing_sizes() {
        let l = list_catalog();
        assert_eq!(l.var_elim.len(), 4);
        assert_eq!(l.val_elim.len(), 3);
        assert_eq!(l.non_elim.len(), 20);
        for id in l.var_elim.iter().chain(&l.flattened).chain(&l.val_elim).chain(&l.non_elim) {
            assert!(get_pattern(id).is_ok(), "{id}");
        }
    }

    #[test]
    fn lookup_accepts_symbols() {
        assert_eq!(get_pattern("∃2snake").unwrap().id, "Exists2Snake");
        assert_eq!(get_pattern("∃2snake").unwrap().kind, PatternKind::ValElim);
        assert_eq!(get_pattern("V(+-)").unwrap().id, "VPlusMinus");
        assert_eq!(get_pattern("Pivot(sym)").unwrap().id, "PivotSym");
        assert_eq!(get_pattern("triangle").unwrap().id, "Triangle");
        assert!(get_pattern("nope").is_err());
    }

    #[test]
    fn elimination_patterns_are_irreducible() {
        for id in ["BTP", "ExistsSubBTP", "ExistsInvSubBTP", "ExistsSnake", "Exists2Triangle", "Exists2InvSubBTP", "Exists2Snake"] {
            assert!(is_irreducible(&get_pattern(id).unwrap().pattern), "{id}");
        }
    }

    #[test]
    fn kinds_respect_quantification() {
        for e in all_entries() {
            match e.kind {
                PatternKind::VarElim => {
                    assert!(e.pattern.is_quantified() && e.pattern.existential().len() <= 1, "{}", e.id)
                }
                PatternKind::ValElim => {
                    assert!(e.pattern.existential().len() == 2 && e.pattern.distinguished_val().is_some(), "{}", e.id)
                }
                PatternKind::NonElim => {}
            }
        }
    }

    #[test]
    fn flattened_versions_differ_only_in_quantification() {
        for (flat, ex) in [("InvSubBTP", "ExistsInvSubBTP"), ("Snake", "ExistsSnake")] {
            let f = get_pattern(flat).unwrap().pattern;
            let e = get_pattern(ex).unwrap().pattern;
            assert!(f.is_flat());
            assert_eq!(f.distinguished_var(), e.distinguished_var());
            assert!(f.edges().eq(e.edges()));
            assert!(is_sub_pattern(&f, &e));
        }
    }

    #[test]
    fn no_two_entries_are_equivalent() {
        let all = all_entries();
        for (i, p) in all.iter().enumerate() {
            for q in &all[i + 1..] {
                assert!(!equivalent(&p.pattern, &q.pattern), "{} ~ {}", p.id, q.id);
            }
        }
    }

    #[test]
    fn btp_and_sub_btp_differ() {
        assert!(!equivalent(&get_pattern("BTP").unwrap().pattern, &get_pattern("ExistsSubBTP").unwrap().pattern));
    }
}
