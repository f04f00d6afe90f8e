//! Sub-patterns, merge and dangling reductions, and equivalence.

use std::collections::BTreeMap;

use super::{Pattern, PatternError};
use crate::model::{Assignment, Value, VarId};

/// Identity-embedding sub-pattern test: `pp` uses a subset of `p`'s
/// variables and assignments under the same labels and agrees with `p`
/// wherever it defines an edge.
pub fn is_sub_pattern(pp: &Pattern, p: &Pattern) -> bool {
    if pp.var_count() > p.var_count() {
        return false;
    }
    if (0..pp.var_count()).any(|v| !pp.domain(v).is_subset(p.domain(v))) {
        return false;
    }
    if pp.edges().any(|(u, w, t)| p.edge(u, w) != Some(t)) {
        return false;
    }
    if let Some(x) = pp.distinguished_var() {
        if p.distinguished_var() != Some(x) || !pp.existential().is_subset(p.existential()) {
            return false;
        }
        if pp.distinguished_val().is_some() && pp.distinguished_val() != p.distinguished_val() {
            return false;
        }
    }
    true
}

/// Whether `a` can be merged into `b` in the domain of `var`.
pub fn mergeable(p: &Pattern, var: VarId, a: Value, b: Value) -> bool {
    let (pa, pb) = (Assignment::new(var, a), Assignment::new(var, b));
    if a == b || !p.contains(pa) || !p.contains(pb) {
        return false;
    }
    if p.distinguished_var() == Some(var) && p.existential().contains(&a) && !p.existential().contains(&b) {
        return false;
    }
    p.edges_at(pa).all(|(q, t)| p.edge(pb, q).is_none_or(|u| u == t))
}

/// Merges `a` into `b`: `<var,a>` disappears and `<var,b>` inherits its
/// edges wherever its own are undefined.
///
/// When `a` is the distinguished value, the distinguished value moves to `b`.
pub fn merge(p: &Pattern, var: VarId, a: Value, b: Value) -> Result<Pattern, PatternError> {
    if !mergeable(p, var, a, b) {
        return Err(PatternError::NotMergeable { var, a, b });
    }
    let (pa, pb) = (Assignment::new(var, a), Assignment::new(var, b));
    let mut out = p.clone();
    for (q, t) in p.edges_at(pa) {
        if p.edge(pb, q).is_none() {
            out.edges.insert(super::edge_key(pb, q), t);
        }
    }
    out.remove_assignment(pa);
    if p.distinguished_var() == Some(var) {
        out.existential.remove(&a);
        if out.distinguished_val == Some(a) {
            out.distinguished_val = Some(b);
        }
    }
    Ok(out)
}

pub fn is_dangling(p: &Pattern, q: Assignment) -> bool {
    if !p.contains(q) {
        return false;
    }
    if p.distinguished_var() == Some(q.var) && p.existential().contains(&q.val) {
        return false;
    }
    let mut edges = p.edges_at(q);
    match (edges.next(), edges.next()) {
        (None, _) => true,
        (Some((_, t)), None) => t,
        _ => false,
    }
}

/// Removes a dangling assignment. A reduction may not empty a domain.
pub fn dangling_reduce(p: &Pattern, q: Assignment) -> Result<Pattern, PatternError> {
    if !is_dangling(p, q) {
        return Err(PatternError::NotDangling(q));
    }
    if p.domain(q.var).len() == 1 {
        return Err(PatternError::WouldEmptyDomain(q));
    }
    let mut out = p.clone();
    out.remove_assignment(q);
    Ok(out)
}

/// Every pattern reachable from `p` by one merge or dangling reduction.
pub fn one_step_reductions(p: &Pattern) -> Vec<Pattern> {
    steps(p, false)
}

fn steps(p: &Pattern, keep_existentials_apart: bool) -> Vec<Pattern> {
    let mut out = Vec::new();
    for v in 0..p.var_count() {
        let vals: Vec<Value> = p.domain(v).iter().copied().collect();
        for &a in &vals {
            for &b in &vals {
                let both_existential = p.distinguished_var() == Some(v)
                    && p.existential().contains(&a)
                    && p.existential().contains(&b);
                if keep_existentials_apart && both_existential {
                    continue;
                }
                if let Ok(r) = merge(p, v, a, b) {
                    out.push(r);
                }
            }
        }
    }
    for q in p.assignments() {
        if let Ok(r) = dangling_reduce(p, q) {
            out.push(r);
        }
    }
    out
}

pub fn is_irreducible(p: &Pattern) -> bool {
    one_step_reductions(p).is_empty()
}

/// All reductions of `p` (including `p` itself), one representative per
/// equivalence class.
///
/// With `keep_existentials_apart`, two existential values are never merged
/// and representatives are taken up to renamings that fix existential
/// labels; this is the closure relevant to occurrence under an injective
/// value mapping.
pub fn reduction_closure(p: &Pattern, keep_existentials_apart: bool) -> Result<Vec<Pattern>, PatternError> {
    let mut seen: BTreeMap<Signature, Vec<usize>> = BTreeMap::new();
    let mut all = vec![p.clone()];
    seen.entry(signature(p)).or_default().push(0);
    let mut next = 0;
    while next < all.len() {
        for r in steps(&all[next], keep_existentials_apart) {
            let bucket = seen.entry(signature(&r)).or_default();
            if bucket.iter().any(|&i| isomorphic(&all[i], &r, keep_existentials_apart)) {
                continue;
            }
            if all.len() >= super::CLOSURE_LIMIT {
                return Err(PatternError::SizeLimit(format!(
                    "reduction closure exceeds {} patterns",
                    super::CLOSURE_LIMIT
                )));
            }
            bucket.push(all.len());
            all.push(r);
        }
        next += 1;
    }
    Ok(all)
}

/// Equality up to injective renaming of variables and values, preserving
/// the distinguished variable, the existential set and the distinguished
/// value.
pub fn equivalent(p: &Pattern, q: &Pattern) -> bool {
    isomorphic(p, q, false)
}

type Signature = (usize, usize, usize, bool, usize, bool, Vec<VarSig>);
type VarSig = (bool, usize, usize, usize);

fn var_sig(p: &Pattern, v: VarId) -> VarSig {
    let (mut t, mut f) = (0, 0);
    for (a, b, c) in p.edges() {
        if a.var == v || b.var == v {
            if c {
                t += 1;
            } else {
                f += 1;
            }
        }
    }
    (p.distinguished_var() == Some(v), p.domain(v).len(), t, f)
}

fn signature(p: &Pattern) -> Signature {
    let mut vars: Vec<VarSig> = (0..p.var_count()).map(|v| var_sig(p, v)).collect();
    vars.sort();
    (
        p.var_count(),
        p.assignment_count(),
        p.edge_count(),
        p.is_quantified(),
        p.existential().len(),
        p.distinguished_val().is_some(),
        vars,
    )
}

pub(crate) fn isomorphic(p: &Pattern, q: &Pattern, fix_existential: bool) -> bool {
    if signature(p) != signature(q) {
        return false;
    }
    if fix_existential && (p.existential() != q.existential() || p.distinguished_val() != q.distinguished_val()) {
        return false;
    }
    let n = p.var_count();
    let psig: Vec<VarSig> = (0..n).map(|v| var_sig(p, v)).collect();
    let qsig: Vec<VarSig> = (0..n).map(|v| var_sig(q, v)).collect();
    let mut iso = Iso {
        p,
        q,
        fix_existential,
        perm: vec![usize::MAX; n],
        used: vec![false; n],
        vals: vec![BTreeMap::new(); n],
    };
    iso.vars(0, &psig, &qsig)
}

struct Iso<'a> {
    p: &'a Pattern,
    q: &'a Pattern,
    fix_existential: bool,
    perm: Vec<VarId>,
    used: Vec<bool>,
    vals: Vec<BTreeMap<Value, Value>>,
}

impl Iso<'_> {
    fn vars(&mut self, v: VarId, psig: &[VarSig], qsig: &[VarSig]) -> bool {
        let n = self.p.var_count();
        if v == n {
            return self.values(0);
        }
        for w in 0..n {
            if self.used[w] || psig[v] != qsig[w] {
                continue;
            }
            self.perm[v] = w;
            self.used[w] = true;
            if self.vars(v + 1, psig, qsig) {
                return true;
            }
            self.used[w] = false;
        }
        false
    }

    fn values(&mut self, v: VarId) -> bool {
        if v == self.p.var_count() {
            return true;
        }
        let w = self.perm[v];
        let src: Vec<Value> = self.p.domain(v).iter().copied().collect();
        let dst: Vec<Value> = self.q.domain(w).iter().copied().collect();
        let mut found = false;
        for_each_injection(&src, &dst, &mut |image| {
            let map: BTreeMap<Value, Value> = src.iter().copied().zip(image.iter().copied()).collect();
            if !self.quantification_ok(v, &map) || !self.edges_ok(v, &map) {
                return false;
            }
            self.vals[v] = map;
            found = self.values(v + 1);
            found
        });
        found
    }

    fn quantification_ok(&self, v: VarId, map: &BTreeMap<Value, Value>) -> bool {
        if self.p.distinguished_var() != Some(v) {
            return true;
        }
        let e = self.p.existential();
        if self.fix_existential {
            return e.iter().all(|a| map[a] == *a);
        }
        map.iter().all(|(a, b)| e.contains(a) == self.q.existential().contains(b))
            && self.p.distinguished_val().map(|a| map[&a]) == self.q.distinguished_val()
    }

    fn edges_ok(&self, v: VarId, map: &BTreeMap<Value, Value>) -> bool {
        let w = self.perm[v];
        for (&a, &b) in map {
            for u in 0..v {
                let wu = self.perm[u];
                for (&c, &d) in &self.vals[u] {
                    let pe = self.p.edge(Assignment::new(v, a), Assignment::new(u, c));
                    let qe = self.q.edge(Assignment::new(w, b), Assignment::new(wu, d));
                    if pe != qe {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// Calls `f` on every injective map from `src` positions into `dst`, given
/// as the image sequence, until `f` returns true.
pub(crate) fn for_each_injection(src: &[Value], dst: &[Value], f: &mut dyn FnMut(&[Value]) -> bool) -> bool {
    fn rec(k: usize, n: usize, dst: &[Value], used: &mut [bool], img: &mut Vec<Value>, f: &mut dyn FnMut(&[Value]) -> bool) -> bool {
        if k == n {
            return f(img);
        }
        for (i, &d) in dst.iter().enumerate() {
            if used[i] {
                continue;
            }
            used[i] = true;
            img.push(d);
            let done = rec(k + 1, n, dst, used, img, f);
            img.pop();
            used[i] = false;
            if done {
                return true;
            }
        }
        false
    }
    if src.len() > dst.len() {
        return false;
    }
    rec(0, src.len(), dst, &mut vec![false; dst.len()], &mut Vec::with_capacity(src.len()), f)
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: Value = 0;
    const B: Value = 1;

    // x = 0 (a, b), y = 1 (c), z = 2 (d)
    fn p1() -> Pattern {
        Pattern::build(vec![vec![B], vec![0], vec![0]], &[(1, 0, 0, B, false), (1, 0, 2, 0, false)], None).unwrap()
    }

    fn p2() -> Pattern {
        Pattern::build(
            vec![vec![A, B], vec![0], vec![0]],
            &[(1, 0, 0, B, false), (1, 0, 2, 0, false), (2, 0, 0, A, true)],
            None,
        )
        .unwrap()
    }

    fn p3() -> Pattern {
        let mut p = p2();
        p.add_edge(Assignment::new(2, 0), Assignment::new(0, B), false).unwrap();
        p
    }

    fn p4() -> Pattern {
        Pattern::build(
            vec![vec![B], vec![0], vec![0]],
            &[(2, 0, 0, B, true), (1, 0, 0, B, false), (1, 0, 2, 0, false)],
            None,
        )
        .unwrap()
    }

    fn p2q() -> Pattern {
        let mut p = p2();
        p.quantify(Some(0), [A], None).unwrap();
        p
    }

    #[test]
    fn sub_pattern_chain() {
        assert!(is_sub_pattern(&p1(), &p2()));
        assert!(is_sub_pattern(&p2(), &p3()));
        assert!(is_sub_pattern(&p2(), &p2q()));
        assert!(!is_sub_pattern(&p2q(), &p2()));
        for p in [p1(), p2(), p3(), p4(), p2q()] {
            assert!(is_sub_pattern(&p, &p));
        }
    }

    #[test]
    fn mergeability() {
        assert!(mergeable(&p2(), 0, A, B));
        assert!(!mergeable(&p3(), 0, A, B));
        assert!(mergeable(&p2q(), 0, B, A));
        assert!(!mergeable(&p2q(), 0, A, B));
        assert!(matches!(merge(&p3(), 0, A, B), Err(PatternError::NotMergeable { .. })));
    }

    #[test]
    fn merge_produces_p4() {
        let m = merge(&p2(), 0, A, B).unwrap();
        assert!(equivalent(&m, &p4()));
        assert!(!is_sub_pattern(&m, &p2()));
    }

    #[test]
    fn merging_an_isolated_value_only_shrinks_the_domain() {
        let p = Pattern::build(vec![vec![0, 1], vec![0]], &[(1, 0, 0, 1, true)], None).unwrap();
        let m = merge(&p, 0, 0, 1).unwrap();
        assert_eq!(m.domain(0).len(), 1);
        assert_eq!(m.edge_count(), 1);
    }

    #[test]
    fn dangling_assignments() {
        assert!(is_dangling(&p2(), Assignment::new(0, A)));
        assert!(!is_dangling(&p2q(), Assignment::new(0, A)));
        assert!(!is_dangling(&p1(), Assignment::new(0, B)), "single FALSE edge");
        let r = dangling_reduce(&p2(), Assignment::new(0, A)).unwrap();
        assert!(equivalent(&r, &p1()));
        assert_eq!(r.var_count(), p2().var_count());
    }

    #[test]
    fn dangling_reduction_never_empties_a_domain() {
        let p = Pattern::new(vec![vec![0]]).unwrap();
        assert!(is_dangling(&p, Assignment::new(0, 0)));
        assert_eq!(dangling_reduce(&p, Assignment::new(0, 0)), Err(PatternError::WouldEmptyDomain(Assignment::new(0, 0))));
        assert!(is_irreducible(&p));
    }

    #[test]
    fn irreducibility_of_fig1() {
        assert!(!is_irreducible(&p2()));
        assert!(!is_irreducible(&p3()), "<x,a> has a single TRUE edge");
        assert!(is_irreducible(&p1()));
    }

    #[test]
    fn equivalence_under_relabelling() {
        let p = p3();
        let q = p.permuted(&[2, 0, 1]).relabel_values(2, &BTreeMap::from([(A, 7), (B, 5)]));
        assert!(equivalent(&p, &q));
        assert!(equivalent(&q, &p));
        assert!(!equivalent(&p, &p2()));
        assert!(!equivalent(&p2(), &p2q()));
    }

    #[test]
    fn closure_of_p2_contains_p1_and_p4() {
        let c = reduction_closure(&p2(), false).unwrap();
        assert!(c.iter().any(|r| equivalent(r, &p1())));
        assert!(c.iter().any(|r| equivalent(r, &p4())));
        for r in &c {
            assert!(r.assignment_count() <= p2().assignment_count());
        }
    }

    #[test]
    fn injections_are_enumerated() {
        let mut n = 0;
        for_each_injection(&[0, 1], &[0, 1, 2], &mut |_| {
            n += 1;
            false
        });
        assert_eq!(n, 6);
    }
}
