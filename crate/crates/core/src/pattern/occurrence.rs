//! Pattern occurrence: a direct homomorphism search against instances, and
//! the reduction-closure formulation used to cross-check it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::algebra::{for_each_injection, reduction_closure};
use super::{Pattern, PatternError};
use crate::model::{Assignment, Instance, Value, VarId};

/// Injective map from the existential values of a pattern to values of the
/// target variable.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ValueMapping(BTreeMap<Value, Value>);

impl ValueMapping {
    pub fn new(pairs: impl IntoIterator<Item = (Value, Value)>) -> Self {
        ValueMapping(pairs.into_iter().collect())
    }

    pub fn empty() -> Self {
        ValueMapping::default()
    }

    pub fn get(&self, a: Value) -> Option<Value> {
        self.0.get(&a).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Value, Value)> + '_ {
        self.0.iter().map(|(&a, &b)| (a, b))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_injective(&self) -> bool {
        self.0.values().collect::<BTreeSet<_>>().len() == self.0.len()
    }

    fn validate(&self, p: &Pattern, inst: &Instance, x: VarId) -> Result<(), PatternError> {
        if !p.is_quantified() {
            return Err(PatternError::NotQuantified);
        }
        if !inst.is_active(x) {
            return Err(PatternError::InactiveTarget(x));
        }
        if !self.0.keys().eq(p.existential().iter()) {
            return Err(PatternError::InvalidMapping(format!(
                "domain {:?} differs from the existential values {:?}",
                self.0.keys().collect::<Vec<_>>(),
                p.existential()
            )));
        }
        if !self.is_injective() {
            return Err(PatternError::InvalidMapping(format!("{self} is not injective")));
        }
        if let Some((_, d)) = self.iter().find(|&(_, d)| !inst.domain(x).contains(d)) {
            return Err(PatternError::InvalidMapping(format!("value {d} is not in the domain of {x}")));
        }
        Ok(())
    }
}

impl fmt::Display for ValueMapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.iter().map(|(a, d)| format!("{a}:{d}")).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Variable map `phi` and per-variable value maps `psi` of an occurrence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccurrenceWitness {
    pub phi: Vec<VarId>,
    pub psi: Vec<BTreeMap<Value, Value>>,
}

/// Searches for an occurrence of quantified `p` at `x` with existential
/// values placed by `m`.
///
/// Pattern variables are tried distinguished variable first, then in index
/// order; targets and values ascending. The first witness found is returned.
pub fn occurs_at(
    p: &Pattern,
    inst: &Instance,
    x: VarId,
    m: &ValueMapping,
) -> Result<Option<OccurrenceWitness>, PatternError> {
    m.validate(p, inst, x)?;
    Ok(Search::new(p, inst, Some((x, m))).run())
}

/// Occurrence of a non-quantified pattern anywhere in `inst`.
pub fn occurs_anywhere(p: &Pattern, inst: &Instance) -> Result<Option<OccurrenceWitness>, PatternError> {
    if p.is_quantified() {
        return Err(PatternError::Quantified);
    }
    Ok(Search::new(p, inst, None).run())
}

/// Re-checks a witness independently of the search that produced it.
pub fn verify_witness(
    p: &Pattern,
    inst: &Instance,
    anchor: Option<(VarId, &ValueMapping)>,
    w: &OccurrenceWitness,
) -> bool {
    let n = p.var_count();
    if w.phi.len() != n || w.psi.len() != n {
        return false;
    }
    if w.phi.iter().collect::<BTreeSet<_>>().len() != n || w.phi.iter().any(|&t| !inst.is_active(t)) {
        return false;
    }
    for v in 0..n {
        if !w.psi[v].keys().eq(p.domain(v).iter()) {
            return false;
        }
        if w.psi[v].values().any(|&t| !inst.domain(w.phi[v]).contains(t)) {
            return false;
        }
    }
    if let Some((x, m)) = anchor {
        let Some(dv) = p.distinguished_var() else { return false };
        if w.phi[dv] != x || m.iter().any(|(a, d)| w.psi[dv].get(&a) != Some(&d)) {
            return false;
        }
    }
    p.edges().all(|(u, v, t)| {
        inst.compatible(w.phi[u.var], w.psi[u.var][&u.val], w.phi[v.var], w.psi[v.var][&v.val]) == t
    })
}

struct Search<'a> {
    p: &'a Pattern,
    inst: &'a Instance,
    anchor: Option<(VarId, VarId, &'a ValueMapping)>,
    order: Vec<VarId>,
    vals: Vec<Vec<Value>>,
    phi: Vec<Option<VarId>>,
    psi: Vec<BTreeMap<Value, Value>>,
    used: Vec<bool>,
}

impl<'a> Search<'a> {
    fn new(p: &'a Pattern, inst: &'a Instance, anchor: Option<(VarId, &'a ValueMapping)>) -> Self {
        let dv = p.distinguished_var();
        let anchor = anchor.map(|(x, m)| (dv.expect("quantified"), x, m));
        let mut order: Vec<VarId> = dv.into_iter().collect();
        order.extend((0..p.var_count()).filter(|&v| Some(v) != dv));
        Search {
            p,
            inst,
            anchor,
            order,
            vals: (0..p.var_count()).map(|v| p.domain(v).iter().copied().collect()).collect(),
            phi: vec![None; p.var_count()],
            psi: vec![BTreeMap::new(); p.var_count()],
            used: vec![false; inst.var_count()],
        }
    }

    fn run(mut self) -> Option<OccurrenceWitness> {
        if self.p.var_count() > self.inst.active_count() {
            return None;
        }
        if self.var_step(0) {
            Some(OccurrenceWitness { phi: self.phi.iter().map(|t| t.unwrap()).collect(), psi: self.psi })
        } else {
            None
        }
    }

    fn candidates(&self, v: VarId) -> Vec<VarId> {
        if let Some((dv, x, _)) = self.anchor {
            if v == dv {
                return vec![x];
            }
        }
        // A FALSE edge can only land on a pair of constrained variables.
        let forced = self.vals[v].iter().find_map(|&a| {
            self.p
                .edges_at(Assignment::new(v, a))
                .find(|&(q, t)| !t && self.phi[q.var].is_some())
                .map(|(q, _)| self.phi[q.var].unwrap())
        });
        let pool: Vec<VarId> = match forced {
            Some(u) => self.inst.neighbours(u).iter().copied().collect(),
            None => self.inst.active_vars().collect(),
        };
        pool.into_iter().filter(|&w| self.inst.is_active(w) && !self.used[w]).collect()
    }

    fn var_step(&mut self, k: usize) -> bool {
        if k == self.order.len() {
            return true;
        }
        let v = self.order[k];
        for w in self.candidates(v) {
            self.phi[v] = Some(w);
            self.used[w] = true;
            if self.val_step(k, 0) {
                return true;
            }
            self.used[w] = false;
            self.phi[v] = None;
        }
        false
    }

    fn val_step(&mut self, k: usize, i: usize) -> bool {
        let v = self.order[k];
        if i == self.vals[v].len() {
            return self.var_step(k + 1);
        }
        let a = self.vals[v][i];
        let w = self.phi[v].unwrap();
        let targets: Vec<Value> = match self.anchor {
            Some((dv, _, m)) if dv == v && m.get(a).is_some() => vec![m.get(a).unwrap()],
            _ => self.inst.domain(w).values().collect(),
        };
        for t in targets {
            if self.consistent(v, a, w, t) {
                self.psi[v].insert(a, t);
                if self.val_step(k, i + 1) {
                    return true;
                }
                self.psi[v].remove(&a);
            }
        }
        false
    }

    fn consistent(&self, v: VarId, a: Value, w: VarId, t: Value) -> bool {
        self.p.edges_at(Assignment::new(v, a)).all(|(q, want)| match (self.phi[q.var], self.psi[q.var].get(&q.val)) {
            (Some(wq), Some(&tq)) if q.var != v => self.inst.compatible(w, t, wq, tq) == want,
            _ => true,
        })
    }
}

/// Generic occurrence between patterns: some reduction of `p` is
/// equivalent to a sub-pattern of `q`.
pub fn occurs_generic(p: &Pattern, q: &Pattern) -> Result<bool, PatternError> {
    let closure = reduction_closure(p, false)?;
    Ok(closure.iter().any(|r| embeds(r, q, None)))
}

/// Generic occurrence at `x` of an instance with value mapping `m`.
/// The instance is viewed as a pattern quantified at `x` whose existential
/// values are the image of `m`.
pub fn occurs_generic_at(p: &Pattern, inst: &Instance, x: VarId, m: &ValueMapping) -> Result<bool, PatternError> {
    m.validate(p, inst, x)?;
    let mut q = instance_pattern(inst)?;
    let qx = inst.active_vars().position(|v| v == x).expect("active");
    let dval = p.distinguished_val().and_then(|b| m.get(b));
    q.quantify(Some(qx), m.iter().map(|(_, d)| d), dval)?;
    let closure = reduction_closure(p, true)?;
    Ok(closure.iter().any(|r| embeds(r, &q, Some(m))))
}

/// Generic occurrence of a non-quantified pattern anywhere in
/// `inst`.
pub fn occurs_generic_anywhere(p: &Pattern, inst: &Instance) -> Result<bool, PatternError> {
    if p.is_quantified() {
        return Err(PatternError::Quantified);
    }
    occurs_generic(p, &instance_pattern(inst)?)
}

const GENERIC_TARGET_LIMIT: usize = 64;

fn instance_pattern(inst: &Instance) -> Result<Pattern, PatternError> {
    let size: usize = inst.active_vars().map(|v| inst.domain(v).len()).sum();
    if size > GENERIC_TARGET_LIMIT {
        return Err(PatternError::SizeLimit(format!(
            "target has {size} assignments (limit {GENERIC_TARGET_LIMIT})"
        )));
    }
    Ok(Pattern::from_instance(inst).0)
}

/// Injective embedding of `p` into `q` preserving every defined edge of
/// `p` and the quantification fields; `anchor` additionally pins the images
/// of `p`'s existential values.
fn embeds(p: &Pattern, q: &Pattern, anchor: Option<&ValueMapping>) -> bool {
    if p.var_count() > q.var_count() {
        return false;
    }
    if p.is_quantified() && !q.is_quantified() {
        return false;
    }
    let dv = p.distinguished_var();
    let mut order: Vec<VarId> = dv.into_iter().collect();
    order.extend((0..p.var_count()).filter(|&v| Some(v) != dv));
    let mut e = Embed {
        p,
        q,
        anchor,
        order,
        phi: vec![None; p.var_count()],
        psi: vec![BTreeMap::new(); p.var_count()],
        used: vec![false; q.var_count()],
    };
    e.step(0)
}

struct Embed<'a> {
    p: &'a Pattern,
    q: &'a Pattern,
    anchor: Option<&'a ValueMapping>,
    order: Vec<VarId>,
    phi: Vec<Option<VarId>>,
    psi: Vec<BTreeMap<Value, Value>>,
    used: Vec<bool>,
}

impl Embed<'_> {
    fn step(&mut self, k: usize) -> bool {
        if k == self.order.len() {
            return true;
        }
        let v = self.order[k];
        let is_dv = self.p.distinguished_var() == Some(v);
        let targets: Vec<VarId> = if is_dv {
            vec![self.q.distinguished_var().unwrap()]
        } else {
            (0..self.q.var_count()).filter(|&w| !self.used[w]).collect()
        };
        let src: Vec<Value> = self.p.domain(v).iter().copied().collect();
        for w in targets {
            let dst: Vec<Value> = self.q.domain(w).iter().copied().collect();
            self.phi[v] = Some(w);
            self.used[w] = true;
            let mut found = false;
            for_each_injection(&src, &dst, &mut |img| {
                let map: BTreeMap<Value, Value> = src.iter().copied().zip(img.iter().copied()).collect();
                if is_dv && !self.quantification_ok(&map) {
                    return false;
                }
                if !self.edges_ok(v, w, &map) {
                    return false;
                }
                self.psi[v] = map;
                found = self.step(k + 1);
                found
            });
            if found {
                return true;
            }
            self.psi[v].clear();
            self.used[w] = false;
            self.phi[v] = None;
        }
        false
    }

    fn quantification_ok(&self, map: &BTreeMap<Value, Value>) -> bool {
        if let Some(m) = self.anchor {
            if m.iter().any(|(a, d)| map.get(&a) != Some(&d)) {
                return false;
            }
        }
        self.p.existential().iter().all(|a| self.q.existential().contains(&map[a]))
            && self.p.distinguished_val().is_none_or(|a| self.q.distinguished_val() == Some(map[&a]))
    }

    fn edges_ok(&self, v: VarId, w: VarId, map: &BTreeMap<Value, Value>) -> bool {
        map.iter().all(|(&a, &b)| {
            self.p.edges_at(Assignment::new(v, a)).all(|(u, t)| match self.phi[u.var] {
                Some(wu) if u.var != v => {
                    let img = self.psi[u.var][&u.val];
                    self.q.edge(Assignment::new(w, b), Assignment::new(wu, img)) == Some(t)
                }
                _ => true,
            })
        })
    }
}
