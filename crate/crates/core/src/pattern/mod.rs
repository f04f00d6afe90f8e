//! Patterns: partial binary CSPs with optional quantification.
//!
//! A pattern is quantified when it has a distinguished variable. Quantified
//! patterns may carry existential values of that variable and, for value
//! elimination, one distinguished existential value.

mod algebra;
mod occurrence;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::model::{Assignment, Instance, Value, VarId};

pub use algebra::{
    dangling_reduce, equivalent, is_dangling, is_irreducible, is_sub_pattern, merge, mergeable, one_step_reductions,
    reduction_closure,
};
pub use occurrence::{
    occurs_anywhere, occurs_at, occurs_generic, occurs_generic_anywhere, occurs_generic_at, verify_witness,
    OccurrenceWitness, ValueMapping,
};

/// Upper bound on the number of patterns a reduction closure may hold.
pub const CLOSURE_LIMIT: usize = 20_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PatternError {
    #[error("variable {var} has an empty domain")]
    EmptyDomain { var: VarId },
    #[error("variable {var} is out of range")]
    VarOutOfRange { var: VarId },
    #[error("assignment {0} is not part of the pattern")]
    UnknownAssignment(Assignment),
    #[error("edge between two assignments to variable {var}")]
    SameVariableEdge { var: VarId },
    #[error("edge {0}-{1} is defined twice with different values")]
    ConflictingEdge(Assignment, Assignment),
    #[error("existential values require a distinguished variable")]
    ExistentialWithoutDistinguished,
    #[error("existential value {val} is not in the domain of the distinguished variable")]
    ExistentialOutsideDomain { val: Value },
    #[error("distinguished value {val} is not existential")]
    DistinguishedValueNotExistential { val: Value },
    #[error("values {a} and {b} of variable {var} cannot be merged in that direction")]
    NotMergeable { var: VarId, a: Value, b: Value },
    #[error("assignment {0} is not dangling")]
    NotDangling(Assignment),
    #[error("removing {0} would empty its variable's domain")]
    WouldEmptyDomain(Assignment),
    #[error("pattern is not quantified")]
    NotQuantified,
    #[error("pattern is quantified; give a variable and a value mapping")]
    Quantified,
    #[error("invalid value mapping: {0}")]
    InvalidMapping(String),
    #[error("target variable {0} is not active")]
    InactiveTarget(VarId),
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),
}

/// A partial binary CSP, optionally quantified.
///
/// Equality is structural (identical variable indices and value labels); use
/// [`equivalent`] for equality up to renaming.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pattern {
    domains: Vec<BTreeSet<Value>>,
    edges: BTreeMap<(Assignment, Assignment), bool>,
    distinguished_var: Option<VarId>,
    existential: BTreeSet<Value>,
    distinguished_val: Option<Value>,
}

fn edge_key(p: Assignment, q: Assignment) -> (Assignment, Assignment) {
    if p <= q {
        (p, q)
    } else {
        (q, p)
    }
}

impl Pattern {
    /// A non-quantified pattern with the given domains and no edges.
    pub fn new(domains: Vec<Vec<Value>>) -> Result<Pattern, PatternError> {
        let domains: Vec<BTreeSet<Value>> = domains.into_iter().map(|d| d.into_iter().collect()).collect();
        if let Some(var) = domains.iter().position(BTreeSet::is_empty) {
            return Err(PatternError::EmptyDomain { var });
        }
        Ok(Pattern {
            domains,
            edges: BTreeMap::new(),
            distinguished_var: None,
            existential: BTreeSet::new(),
            distinguished_val: None,
        })
    }

    /// Builds a pattern in one go. Each edge is `(v, a, w, b, compatible)`.
    pub fn build(
        domains: Vec<Vec<Value>>,
        edges: &[(VarId, Value, VarId, Value, bool)],
        quantification: Option<(VarId, &[Value], Option<Value>)>,
    ) -> Result<Pattern, PatternError> {
        let mut p = Pattern::new(domains)?;
        for &(v, a, w, b, t) in edges {
            p.add_edge(Assignment::new(v, a), Assignment::new(w, b), t)?;
        }
        if let Some((x, e, dval)) = quantification {
            p.quantify(Some(x), e.iter().copied(), dval)?;
        }
        Ok(p)
    }

    pub fn add_edge(&mut self, p: Assignment, q: Assignment, compatible: bool) -> Result<(), PatternError> {
        for r in [p, q] {
            if !self.contains(r) {
                return Err(PatternError::UnknownAssignment(r));
            }
        }
        if p.var == q.var {
            return Err(PatternError::SameVariableEdge { var: p.var });
        }
        match self.edges.insert(edge_key(p, q), compatible) {
            Some(old) if old != compatible => Err(PatternError::ConflictingEdge(p, q)),
            _ => Ok(()),
        }
    }

    /// Sets (or clears, with `None`) the quantification fields.
    pub fn quantify(
        &mut self,
        var: Option<VarId>,
        existential: impl IntoIterator<Item = Value>,
        distinguished_val: Option<Value>,
    ) -> Result<(), PatternError> {
        let existential: BTreeSet<Value> = existential.into_iter().collect();
        match var {
            None if !existential.is_empty() || distinguished_val.is_some() => {
                return Err(PatternError::ExistentialWithoutDistinguished)
            }
            None => {}
            Some(x) => {
                if x >= self.var_count() {
                    return Err(PatternError::VarOutOfRange { var: x });
                }
                if let Some(&val) = existential.iter().find(|v| !self.domains[x].contains(v)) {
                    return Err(PatternError::ExistentialOutsideDomain { val });
                }
                if let Some(val) = distinguished_val.filter(|v| !existential.contains(v)) {
                    return Err(PatternError::DistinguishedValueNotExistential { val });
                }
            }
        }
        self.distinguished_var = var;
        self.existential = existential;
        self.distinguished_val = distinguished_val;
        Ok(())
    }

    /// The pattern made of all live assignments of the active variables of
    /// `inst`, with every compatibility defined. The second component maps
    /// pattern variables to instance variables; value labels are kept.
    pub fn from_instance(inst: &Instance) -> (Pattern, Vec<VarId>) {
        let vars: Vec<VarId> = inst.active_vars().collect();
        let domains = vars.iter().map(|&v| inst.domain(v).values().collect()).collect();
        let mut edges = BTreeMap::new();
        for (i, &v) in vars.iter().enumerate() {
            for (j, &w) in vars.iter().enumerate().skip(i + 1) {
                for a in inst.domain(v).values() {
                    for b in inst.domain(w).values() {
                        edges.insert((Assignment::new(i, a), Assignment::new(j, b)), inst.compatible(v, a, w, b));
                    }
                }
            }
        }
        let p = Pattern {
            domains,
            edges,
            distinguished_var: None,
            existential: BTreeSet::new(),
            distinguished_val: None,
        };
        (p, vars)
    }

    pub fn var_count(&self) -> usize {
        self.domains.len()
    }

    pub fn domain(&self, var: VarId) -> &BTreeSet<Value> {
        &self.domains[var]
    }

    pub fn contains(&self, p: Assignment) -> bool {
        self.domains.get(p.var).is_some_and(|d| d.contains(&p.val))
    }

    pub fn assignments(&self) -> impl Iterator<Item = Assignment> + '_ {
        self.domains.iter().enumerate().flat_map(|(v, d)| d.iter().map(move |&a| Assignment::new(v, a)))
    }

    pub fn assignment_count(&self) -> usize {
        self.domains.iter().map(BTreeSet::len).sum()
    }

    pub fn edge(&self, p: Assignment, q: Assignment) -> Option<bool> {
        self.edges.get(&edge_key(p, q)).copied()
    }

    /// Defined edges as `(p, q, compatible)` with `p < q`.
    pub fn edges(&self) -> impl Iterator<Item = (Assignment, Assignment, bool)> + '_ {
        self.edges.iter().map(|(&(p, q), &t)| (p, q, t))
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Defined edges touching `p`, as `(other endpoint, compatible)`.
    pub fn edges_at(&self, p: Assignment) -> impl Iterator<Item = (Assignment, bool)> + '_ {
        self.edges.iter().filter_map(move |(&(u, w), &t)| {
            if u == p {
                Some((w, t))
            } else if w == p {
                Some((u, t))
            } else {
                None
            }
        })
    }

    pub fn distinguished_var(&self) -> Option<VarId> {
        self.distinguished_var
    }

    pub fn existential(&self) -> &BTreeSet<Value> {
        &self.existential
    }

    pub fn distinguished_val(&self) -> Option<Value> {
        self.distinguished_val
    }

    pub fn is_quantified(&self) -> bool {
        self.distinguished_var.is_some()
    }

    /// Quantified with no existential values.
    pub fn is_flat(&self) -> bool {
        self.is_quantified() && self.existential.is_empty()
    }

    /// The same pattern with its existential values (and distinguished
    /// value) dropped; the distinguished variable is kept.
    pub fn flattened(&self) -> Pattern {
        Pattern { existential: BTreeSet::new(), distinguished_val: None, ..self.clone() }
    }

    /// Renames variable `v` to `perm[v]`. `perm` must be a permutation.
    pub fn permuted(&self, perm: &[VarId]) -> Pattern {
        let n = self.var_count();
        assert_eq!(perm.len(), n);
        let mut domains = vec![BTreeSet::new(); n];
        for (v, d) in self.domains.iter().enumerate() {
            domains[perm[v]] = d.clone();
        }
        let edges = self
            .edges
            .iter()
            .map(|(&(p, q), &t)| {
                let p = Assignment::new(perm[p.var], p.val);
                let q = Assignment::new(perm[q.var], q.val);
                (edge_key(p, q), t)
            })
            .collect();
        Pattern {
            domains,
            edges,
            distinguished_var: self.distinguished_var.map(|x| perm[x]),
            existential: self.existential.clone(),
            distinguished_val: self.distinguished_val,
        }
    }

    /// Renames values of `var` through `map` (which must be injective on the
    /// variable's domain).
    pub fn relabel_values(&self, var: VarId, map: &BTreeMap<Value, Value>) -> Pattern {
        let f = |p: Assignment| if p.var == var { Assignment::new(var, map[&p.val]) } else { p };
        let mut out = self.clone();
        out.domains[var] = self.domains[var].iter().map(|a| map[a]).collect();
        out.edges = self.edges.iter().map(|(&(p, q), &t)| (edge_key(f(p), f(q)), t)).collect();
        if self.distinguished_var == Some(var) {
            out.existential = self.existential.iter().map(|a| map[a]).collect();
            out.distinguished_val = self.distinguished_val.map(|a| map[&a]);
        }
        out
    }

    fn remove_assignment(&mut self, p: Assignment) {
        self.domains[p.var].remove(&p.val);
        self.edges.retain(|&(u, w), _| u != p && w != p);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_malformed_patterns() {
        assert_eq!(Pattern::new(vec![vec![0], vec![]]).unwrap_err(), PatternError::EmptyDomain { var: 1 });
        let mut p = Pattern::new(vec![vec![0, 1], vec![0]]).unwrap();
        assert!(matches!(
            p.add_edge(Assignment::new(0, 0), Assignment::new(0, 1), true),
            Err(PatternError::SameVariableEdge { .. })
        ));
        assert!(p.add_edge(Assignment::new(0, 0), Assignment::new(1, 0), true).is_ok());
        assert!(matches!(
            p.add_edge(Assignment::new(1, 0), Assignment::new(0, 0), false),
            Err(PatternError::ConflictingEdge(..))
        ));
        assert_eq!(p.quantify(None, [0], None), Err(PatternError::ExistentialWithoutDistinguished));
        assert_eq!(p.quantify(Some(1), [1], None), Err(PatternError::ExistentialOutsideDomain { val: 1 }));
        assert_eq!(
            p.quantify(Some(0), [0], Some(1)),
            Err(PatternError::DistinguishedValueNotExistential { val: 1 })
        );
    }

    #[test]
    fn edge_lookup_is_symmetric() {
        let p = Pattern::build(vec![vec![0, 1], vec![0]], &[(1, 0, 0, 1, false)], None).unwrap();
        let (x, y) = (Assignment::new(0, 1), Assignment::new(1, 0));
        assert_eq!(p.edge(x, y), Some(false));
        assert_eq!(p.edge(y, x), Some(false));
        assert_eq!(p.edge(Assignment::new(0, 0), y), None);
    }

    #[test]
    fn permuting_twice_restores() {
        let p = Pattern::build(
            vec![vec![0, 1], vec![0], vec![0]],
            &[(1, 0, 2, 0, true), (1, 0, 0, 0, false)],
            Some((0, &[0], None)),
        )
        .unwrap();
        let q = p.permuted(&[2, 0, 1]);
        assert_eq!(q.distinguished_var(), Some(2));
        assert_eq!(q.permuted(&[1, 2, 0]), p);
    }
}
