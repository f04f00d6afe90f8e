//! Binary CSP instances, assignments and partial solutions.
//!
//! Values are dense per-variable indices. A variable's domain is a set of
//! such indices below a per-variable bound; removing a value tombstones it so
//! indices stay stable for the lifetime of the instance. Pairs of variables
//! without a stored relation are unconstrained (every pair of values is
//! compatible).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

pub type VarId = usize;
pub type Value = usize;

/// A variable-value pair `<v, a>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Assignment {
    pub var: VarId,
    pub val: Value,
}

impl Assignment {
    pub fn new(var: VarId, val: Value) -> Self {
        Assignment { var, val }
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{},{}>", self.var, self.val)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("variable {var} has an empty domain")]
    EmptyDomain { var: VarId },
    #[error("variable {var} is out of range (instance has {count} variables)")]
    VariableOutOfRange { var: VarId, count: usize },
    #[error("value {val} is not in the domain of variable {var}")]
    ValueOutOfDomain { var: VarId, val: Value },
    #[error("duplicate constraint on variables {0} and {1}")]
    DuplicateConstraint(VarId, VarId),
    #[error("constraint scope repeats variable {0}")]
    SelfConstraint(VarId),
}

/// Domain of one variable: the values it started with and those still alive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Domain {
    initial: Vec<bool>,
    alive: Vec<bool>,
    len: usize,
}

impl Domain {
    pub fn new(values: impl IntoIterator<Item = Value>) -> Domain {
        let values: BTreeSet<Value> = values.into_iter().collect();
        let bound = values.iter().next_back().map_or(0, |v| v + 1);
        let mut alive = vec![false; bound];
        for &v in &values {
            alive[v] = true;
        }
        Domain { initial: alive.clone(), alive, len: values.len() }
    }

    /// One past the largest value index this domain can ever contain.
    pub fn bound(&self) -> usize {
        self.alive.len()
    }

    pub fn contains(&self, val: Value) -> bool {
        self.alive.get(val).copied().unwrap_or(false)
    }

    pub fn was_initially(&self, val: Value) -> bool {
        self.initial.get(val).copied().unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn values(&self) -> impl DoubleEndedIterator<Item = Value> + '_ {
        self.alive.iter().enumerate().filter(|(_, &a)| a).map(|(v, _)| v)
    }

    pub fn first(&self) -> Option<Value> {
        self.values().next()
    }

    fn remove(&mut self, val: Value) -> bool {
        if self.contains(val) {
            self.alive[val] = false;
            self.len -= 1;
            true
        } else {
            false
        }
    }

    fn restore(&mut self, val: Value) -> bool {
        if self.was_initially(val) && !self.alive[val] {
            self.alive[val] = true;
            self.len += 1;
            true
        } else {
            false
        }
    }
}

/// Allowed-pair matrix between two variables; rows index the first
/// variable's values, columns the second's.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    rows: usize,
    cols: usize,
    allowed: Vec<bool>,
}

impl Relation {
    pub fn forbidding_all(rows: usize, cols: usize) -> Relation {
        Relation { rows, cols, allowed: vec![false; rows * cols] }
    }

    pub fn allows(&self, a: Value, b: Value) -> bool {
        a < self.rows && b < self.cols && self.allowed[a * self.cols + b]
    }

    pub fn set(&mut self, a: Value, b: Value, allowed: bool) {
        self.allowed[a * self.cols + b] = allowed;
    }

    pub fn transposed(&self) -> Relation {
        let mut t = Relation::forbidding_all(self.cols, self.rows);
        for a in 0..self.rows {
            for b in 0..self.cols {
                t.set(b, a, self.allows(a, b));
            }
        }
        t
    }
}

/// Allowed tuples on a pair of variables, as supplied to [`Instance::new`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub scope: (VarId, VarId),
    pub allowed: Vec<(Value, Value)>,
}

impl Constraint {
    pub fn new(v: VarId, w: VarId, allowed: impl IntoIterator<Item = (Value, Value)>) -> Self {
        Constraint { scope: (v, w), allowed: allowed.into_iter().collect() }
    }

    /// Builds the constraint from a predicate over the two domains.
    pub fn from_fn(
        v: VarId,
        dom_v: impl IntoIterator<Item = Value>,
        w: VarId,
        dom_w: impl IntoIterator<Item = Value> + Clone,
        allowed: impl Fn(Value, Value) -> bool,
    ) -> Self {
        let mut tuples = Vec::new();
        for a in dom_v {
            for b in dom_w.clone() {
                if allowed(a, b) {
                    tuples.push((a, b));
                }
            }
        }
        Constraint { scope: (v, w), allowed: tuples }
    }
}

/// State detached from an instance when a variable is eliminated: every
/// relation on the variable, oriented with the eliminated variable as rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemovedVariable {
    pub relations: Vec<(VarId, Relation)>,
}

/// A binary CSP instance with a total compatibility function.
#[derive(Debug, Clone)]
pub struct Instance {
    domains: Vec<Domain>,
    active: Vec<bool>,
    relations: BTreeMap<(VarId, VarId), Relation>,
    neighbours: Vec<BTreeSet<VarId>>,
}

impl Instance {
    /// Materialises an instance. Pairs not covered by any constraint get the
    /// complete relation.
    pub fn new(domains: Vec<Vec<Value>>, constraints: Vec<Constraint>) -> Result<Instance, ModelError> {
        let count = domains.len();
        let domains: Vec<Domain> = domains.into_iter().map(Domain::new).collect();
        if let Some(var) = domains.iter().position(Domain::is_empty) {
            return Err(ModelError::EmptyDomain { var });
        }
        let mut relations = BTreeMap::new();
        let mut neighbours = vec![BTreeSet::new(); count];
        for c in constraints {
            let (v, w) = c.scope;
            for var in [v, w] {
                if var >= count {
                    return Err(ModelError::VariableOutOfRange { var, count });
                }
            }
            if v == w {
                return Err(ModelError::SelfConstraint(v));
            }
            let key = (v.min(w), v.max(w));
            if relations.contains_key(&key) {
                return Err(ModelError::DuplicateConstraint(key.0, key.1));
            }
            let mut rel = Relation::forbidding_all(domains[key.0].bound(), domains[key.1].bound());
            for (a, b) in c.allowed {
                if !domains[v].contains(a) {
                    return Err(ModelError::ValueOutOfDomain { var: v, val: a });
                }
                if !domains[w].contains(b) {
                    return Err(ModelError::ValueOutOfDomain { var: w, val: b });
                }
                if v < w {
                    rel.set(a, b, true);
                } else {
                    rel.set(b, a, true);
                }
            }
            relations.insert(key, rel);
            neighbours[key.0].insert(key.1);
            neighbours[key.1].insert(key.0);
        }
        Ok(Instance { active: vec![true; count], domains, relations, neighbours })
    }

    /// Number of variables, including eliminated ones (indices stay stable).
    pub fn var_count(&self) -> usize {
        self.domains.len()
    }

    pub fn is_active(&self, var: VarId) -> bool {
        self.active.get(var).copied().unwrap_or(false)
    }

    pub fn active_vars(&self) -> impl Iterator<Item = VarId> + '_ {
        (0..self.var_count()).filter(|&v| self.active[v])
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    pub fn domain(&self, var: VarId) -> &Domain {
        &self.domains[var]
    }

    pub fn max_domain_size(&self) -> usize {
        self.active_vars().map(|v| self.domains[v].len()).max().unwrap_or(0)
    }

    /// Active variables sharing a stored relation with `var`.
    pub fn neighbours(&self, var: VarId) -> &BTreeSet<VarId> {
        &self.neighbours[var]
    }

    /// Compatibility of `<v,a>` and `<w,b>`; `v` and `w` must differ.
    #[inline]
    pub fn compatible(&self, v: VarId, a: Value, w: VarId, b: Value) -> bool {
        debug_assert!(v != w, "compatibility is undefined on a single variable");
        if v < w {
            self.relations.get(&(v, w)).is_none_or(|r| r.allows(a, b))
        } else {
            self.relations.get(&(w, v)).is_none_or(|r| r.allows(b, a))
        }
    }

    /// Symmetric compatibility lookup.
    ///
    /// Panics when both assignments are on the same variable: the
    /// compatibility function is only defined across variables.
    pub fn is_compatible(&self, p: Assignment, q: Assignment) -> bool {
        assert!(p.var != q.var, "is_compatible called on two assignments to variable {}", p.var);
        self.compatible(p.var, p.val, q.var, q.val)
    }

    /// Stored relations as `(v, w, relation)` with `v < w`, rows indexing `v`.
    pub fn relations(&self) -> impl Iterator<Item = (VarId, VarId, &Relation)> {
        self.relations.iter().map(|(&(v, w), r)| (v, w, r))
    }

    /// True iff the relation on `(v, w)` forbids some pair of live values.
    pub fn is_nontrivial(&self, v: VarId, w: VarId) -> bool {
        let key = (v.min(w), v.max(w));
        let Some(rel) = self.relations.get(&key) else {
            return false;
        };
        self.domains[key.0]
            .values()
            .any(|a| self.domains[key.1].values().any(|b| !rel.allows(a, b)))
    }

    pub fn nontrivial_constraint_count(&self) -> usize {
        self.relations.keys().filter(|&&(v, w)| self.is_nontrivial(v, w)).count()
    }

    pub fn is_partial_solution(&self, s: &PartialAssignment) -> bool {
        if s.assigned().any(|(v, a)| !self.is_active(v) || !self.domains[v].contains(a)) {
            return false;
        }
        self.relations.iter().all(|(&(v, w), rel)| match (s.get(v), s.get(w)) {
            (Some(a), Some(b)) => rel.allows(a, b),
            _ => true,
        })
    }

    /// A partial solution assigning every active variable.
    pub fn is_solution(&self, s: &PartialAssignment) -> bool {
        self.active_vars().all(|v| s.get(v).is_some())
            && s.assigned().all(|(v, _)| self.is_active(v))
            && self.is_partial_solution(s)
    }

    /// Tombstones `val` in `var`'s domain. Returns false if it was not alive.
    pub fn remove_value(&mut self, var: VarId, val: Value) -> bool {
        self.domains[var].remove(val)
    }

    pub fn restore_value(&mut self, var: VarId, val: Value) -> bool {
        self.domains[var].restore(val)
    }

    /// Deletes `var` together with every relation on it. Its domain is kept
    /// (tombstones included) so it can be restored later.
    pub fn remove_variable(&mut self, var: VarId) -> RemovedVariable {
        assert!(self.is_active(var), "variable {var} is not active");
        let mut relations = Vec::new();
        for w in std::mem::take(&mut self.neighbours[var]) {
            self.neighbours[w].remove(&var);
            if var < w {
                relations.push((w, self.relations.remove(&(var, w)).expect("relation")));
            } else {
                relations.push((w, self.relations.remove(&(w, var)).expect("relation").transposed()));
            }
        }
        self.active[var] = false;
        RemovedVariable { relations }
    }

    pub fn restore_variable(&mut self, var: VarId, removed: RemovedVariable) {
        assert!(!self.is_active(var), "variable {var} is already active");
        for (w, rel) in removed.relations {
            if var < w {
                self.relations.insert((var, w), rel);
            } else {
                self.relations.insert((w, var), rel.transposed());
            }
            self.neighbours[var].insert(w);
            self.neighbours[w].insert(var);
        }
        self.active[var] = true;
    }
}

impl Instance {
    /// Field-for-field equality, tombstones and eliminated variables included.
    pub fn identical(&self, other: &Instance) -> bool {
        self.domains == other.domains
            && self.active == other.active
            && self.relations == other.relations
            && self.neighbours == other.neighbours
    }
}

/// Semantic equality: same active variables, same live domains and the same
/// compatibilities between live values.
impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        if self.var_count() != other.var_count() || self.active != other.active {
            return false;
        }
        for v in self.active_vars() {
            if !self.domains[v].values().eq(other.domains[v].values()) {
                return false;
            }
        }
        let pairs: BTreeSet<(VarId, VarId)> =
            self.relations.keys().chain(other.relations.keys()).copied().collect();
        pairs.into_iter().all(|(v, w)| {
            self.domains[v].values().all(|a| {
                self.domains[w].values().all(|b| self.compatible(v, a, w, b) == other.compatible(v, a, w, b))
            })
        })
    }
}

/// Mapping from a subset of the variables to values.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PartialAssignment {
    values: Vec<Option<Value>>,
}

/// A partial assignment covering every active variable of its instance.
pub type Solution = PartialAssignment;

impl PartialAssignment {
    pub fn empty(var_count: usize) -> Self {
        PartialAssignment { values: vec![None; var_count] }
    }

    pub fn from_values(values: impl IntoIterator<Item = Value>) -> Self {
        PartialAssignment { values: values.into_iter().map(Some).collect() }
    }

    pub fn from_options(values: Vec<Option<Value>>) -> Self {
        PartialAssignment { values }
    }

    pub fn var_count(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, var: VarId) -> Option<Value> {
        self.values.get(var).copied().flatten()
    }

    pub fn set(&mut self, var: VarId, val: Value) {
        self.values[var] = Some(val);
    }

    pub fn unset(&mut self, var: VarId) {
        self.values[var] = None;
    }

    pub fn assigned(&self) -> impl Iterator<Item = (VarId, Value)> + '_ {
        self.values.iter().enumerate().filter_map(|(v, a)| a.map(|a| (v, a)))
    }

    pub fn as_slice(&self) -> &[Option<Value>] {
        &self.values
    }
}

impl fmt::Display for PartialAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> =
            self.values.iter().map(|v| v.map_or_else(|| "_".to_string(), |a| a.to_string())).collect();
        write!(f, "{}", parts.join(" "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k3_2col() -> Instance {
        let cons = [(0, 1), (0, 2), (1, 2)]
            .into_iter()
            .map(|(v, w)| Constraint::from_fn(v, 0..2, w, 0..2, |a, b| a != b))
            .collect();
        Instance::new(vec![vec![0, 1]; 3], cons).unwrap()
    }

    fn k4_colour() -> Instance {
        let doms = vec![vec![0, 1, 2, 3], vec![0, 1], vec![0, 2], vec![0, 3]];
        let mut cons = Vec::new();
        for v in 0..4 {
            for w in v + 1..4 {
                cons.push(Constraint::from_fn(v, doms[v].clone(), w, doms[w].clone(), |a, b| a != b));
            }
        }
        Instance::new(doms, cons).unwrap()
    }

    #[test]
    fn singleton_instance_has_one_solution() {
        let inst = Instance::new(vec![vec![0], vec![0]], vec![Constraint::new(0, 1, [(0, 0)])]).unwrap();
        assert!(inst.is_solution(&PartialAssignment::from_values([0, 0])));
    }

    #[test]
    fn compatibility_follows_disequality() {
        let inst = k3_2col();
        assert!(inst.is_compatible(Assignment::new(0, 0), Assignment::new(1, 1)));
        assert!(!inst.is_compatible(Assignment::new(0, 0), Assignment::new(1, 0)));
        for p in [(0, 0), (0, 1), (2, 1)] {
            for q in [(1, 0), (1, 1)] {
                let (p, q) = (Assignment::new(p.0, p.1), Assignment::new(q.0, q.1));
                assert_eq!(inst.is_compatible(p, q), inst.is_compatible(q, p));
            }
        }
    }

    #[test]
    #[should_panic]
    fn same_variable_compatibility_is_a_contract_violation() {
        k3_2col().is_compatible(Assignment::new(0, 0), Assignment::new(0, 1));
    }

    #[test]
    fn partial_solutions_of_k3() {
        let inst = k3_2col();
        let mut s = PartialAssignment::empty(3);
        assert!(inst.is_partial_solution(&s));
        s.set(0, 0);
        s.set(1, 1);
        assert!(inst.is_partial_solution(&s));
        for bits in 0..8usize {
            let s = PartialAssignment::from_values((0..3).map(|i| (bits >> i) & 1));
            assert!(!inst.is_solution(&s));
        }
    }

    #[test]
    fn counts_nontrivial_constraints() {
        assert_eq!(k3_2col().nontrivial_constraint_count(), 3);
        assert_eq!(k4_colour().nontrivial_constraint_count(), 6);
        let free = Instance::new(
            vec![vec![0, 1], vec![0, 1]],
            vec![Constraint::from_fn(0, 0..2, 1, 0..2, |_, _| true)],
        )
        .unwrap();
        assert_eq!(free.nontrivial_constraint_count(), 0);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(Instance::new(vec![vec![0], vec![]], vec![]).unwrap_err(), ModelError::EmptyDomain { var: 1 });
        let dup = vec![Constraint::new(0, 1, [(0, 0)]), Constraint::new(1, 0, [(0, 0)])];
        assert_eq!(
            Instance::new(vec![vec![0], vec![0]], dup).unwrap_err(),
            ModelError::DuplicateConstraint(0, 1)
        );
        let out = vec![Constraint::new(0, 1, [(0, 3)])];
        assert_eq!(
            Instance::new(vec![vec![0], vec![0]], out).unwrap_err(),
            ModelError::ValueOutOfDomain { var: 1, val: 3 }
        );
    }

    #[test]
    fn unlisted_pairs_are_complete() {
        let inst = Instance::new(vec![vec![0, 1]; 3], vec![Constraint::new(0, 1, [(0, 1)])]).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                assert!(inst.compatible(0, a, 2, b));
                assert!(inst.compatible(1, a, 2, b));
            }
        }
    }

    #[test]
    fn variable_removal_round_trips() {
        let mut inst = k4_colour();
        let before = inst.clone();
        let removed = inst.remove_variable(2);
        assert_eq!(inst.active_count(), 3);
        assert!(!inst.neighbours(0).contains(&2));
        assert_eq!(removed.relations.len(), 3);
        inst.restore_variable(2, removed);
        assert_eq!(inst, before);
        assert_eq!(inst.relations().count(), before.relations().count());
    }

    #[test]
    fn tombstoned_values_keep_their_index() {
        let mut inst = k4_colour();
        assert!(inst.remove_value(0, 2));
        assert!(!inst.remove_value(0, 2));
        assert_eq!(inst.domain(0).values().collect::<Vec<_>>(), vec![0, 1, 3]);
        assert!(!inst.restore_value(2, 1), "value 1 was never in the domain of x2");
        assert!(inst.restore_value(0, 2));
        assert_eq!(inst.domain(0).len(), 4);
    }
}
