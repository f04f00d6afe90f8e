//! Brute-force ground truth: plain chronological backtracking and naive
//! pattern-occurrence enumeration. Nothing here is clever on purpose.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::{Instance, PartialAssignment, Solution, Value, VarId};
use crate::pattern::{Pattern, PatternError, ValueMapping};

pub const DEFAULT_NODE_LIMIT: u64 = 20_000_000;
pub const NODE_LIMIT_ENV: &str = "CSPPRUNE_NODE_LIMIT";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("oracle node limit of {0} exceeded")]
    NodeLimit(u64),
    #[error(transparent)]
    Pattern(#[from] PatternError),
}

/// The node limit, honouring `CSPPRUNE_NODE_LIMIT` when it parses.
pub fn node_limit() -> u64 {
    std::env::var(NODE_LIMIT_ENV).ok().and_then(|s| s.trim().parse().ok()).unwrap_or(DEFAULT_NODE_LIMIT)
}

/// Sorted, duplicate-free set of solutions.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SolutionSet {
    solutions: Vec<Solution>,
}

impl SolutionSet {
    pub fn new(solutions: impl IntoIterator<Item = Solution>) -> Self {
        let mut solutions: Vec<Solution> = solutions.into_iter().collect();
        solutions.sort();
        solutions.dedup();
        SolutionSet { solutions }
    }

    pub fn len(&self) -> usize {
        self.solutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Solution> {
        self.solutions.iter()
    }

    pub fn contains(&self, s: &Solution) -> bool {
        self.solutions.binary_search(s).is_ok()
    }

    pub fn into_vec(self) -> Vec<Solution> {
        self.solutions
    }
}

struct Backtrack<'a> {
    inst: &'a Instance,
    vars: Vec<VarId>,
    current: PartialAssignment,
    nodes: u64,
    limit: u64,
}

impl Backtrack<'_> {
    /// Calls `visit` on each solution over `vars` in lexicographic order;
    /// `visit` returns false to stop.
    fn run(&mut self, k: usize, visit: &mut dyn FnMut(&PartialAssignment) -> bool) -> Result<bool, OracleError> {
        if k == self.vars.len() {
            return Ok(visit(&self.current));
        }
        let v = self.vars[k];
        let values: Vec<Value> = self.inst.domain(v).values().collect();
        for a in values {
            self.nodes += 1;
            if self.nodes > self.limit {
                return Err(OracleError::NodeLimit(self.limit));
            }
            let consistent = self.vars[..k].iter().all(|&w| {
                let b = self.current.get(w).expect("assigned");
                self.inst.compatible(v, a, w, b)
            });
            if !consistent {
                continue;
            }
            self.current.set(v, a);
            let go_on = self.run(k + 1, visit)?;
            self.current.unset(v);
            if !go_on {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

fn search(
    inst: &Instance,
    vars: Vec<VarId>,
    limit: u64,
    visit: &mut dyn FnMut(&PartialAssignment) -> bool,
) -> Result<(), OracleError> {
    let mut bt = Backtrack { inst, vars, current: PartialAssignment::empty(inst.var_count()), nodes: 0, limit };
    bt.run(0, visit).map(|_| ())
}

/// Lexicographically least partial solution on `vars` (active variables).
pub fn solve_on(inst: &Instance, vars: &[VarId]) -> Result<Option<PartialAssignment>, OracleError> {
    let mut found = None;
    search(inst, vars.to_vec(), node_limit(), &mut |s| {
        found = Some(s.clone());
        false
    })?;
    Ok(found)
}

/// Lexicographically least solution.
pub fn solve(inst: &Instance) -> Result<Option<Solution>, OracleError> {
    solve_on(inst, &inst.active_vars().collect::<Vec<_>>())
}

pub fn is_satisfiable(inst: &Instance) -> Result<bool, OracleError> {
    Ok(solve(inst)?.is_some())
}

pub fn count_solutions(inst: &Instance) -> Result<u64, OracleError> {
    let mut count = 0u64;
    search(inst, inst.active_vars().collect(), node_limit(), &mut |_| {
        count += 1;
        true
    })?;
    Ok(count)
}

pub fn enumerate_solutions(inst: &Instance) -> Result<SolutionSet, OracleError> {
    let mut all = Vec::new();
    search(inst, inst.active_vars().collect(), node_limit(), &mut |s| {
        all.push(s.clone());
        true
    })?;
    Ok(SolutionSet::new(all))
}

/// Occurrence of quantified `p` at `x` with mapping `m`, by enumerating
/// every injective variable map sending the distinguished variable to `x`
/// and every value map agreeing with `m`, then checking all edges.
pub fn brute_occurs(p: &Pattern, inst: &Instance, x: VarId, m: &ValueMapping) -> Result<bool, OracleError> {
    let dv = p.distinguished_var().ok_or(PatternError::NotQuantified)?;
    if !inst.is_active(x) {
        return Err(PatternError::InactiveTarget(x).into());
    }
    if !m.iter().map(|(a, _)| a).eq(p.existential().iter().copied()) || !m.is_injective() {
        return Err(PatternError::InvalidMapping(format!("{m} does not fit the pattern")).into());
    }
    if m.iter().any(|(_, d)| !inst.domain(x).contains(d)) {
        return Err(PatternError::InvalidMapping(format!("{m} leaves the domain of {x}")).into());
    }
    brute(p, inst, Some((dv, x, m)))
}

/// Occurrence of a non-quantified pattern anywhere, by the same naive
/// enumeration.
pub fn brute_occurs_anywhere(p: &Pattern, inst: &Instance) -> Result<bool, OracleError> {
    if p.is_quantified() {
        return Err(PatternError::Quantified.into());
    }
    brute(p, inst, None)
}

fn brute(p: &Pattern, inst: &Instance, anchor: Option<(VarId, VarId, &ValueMapping)>) -> Result<bool, OracleError> {
    let limit = node_limit();
    let targets: Vec<VarId> = inst.active_vars().collect();
    let k = p.var_count();
    let mut nodes = 0u64;
    let mut found = false;
    let mut phi = Vec::with_capacity(k);
    for_each_injection(&targets, k, &mut phi, &mut |phi| {
        if let Some((dv, x, _)) = anchor {
            if phi[dv] != x {
                return Ok(true);
            }
        }
        // Enumerate every value map, variable by variable, as one odometer.
        let slots: Vec<(VarId, Value, Vec<Value>)> = (0..k)
            .flat_map(|v| {
                let choices: Vec<Value> = inst.domain(phi[v]).values().collect();
                p.domain(v).iter().map(move |&a| (v, a, choices.clone()))
            })
            .map(|(v, a, choices)| match anchor {
                Some((dv, _, m)) if v == dv && m.get(a).is_some() => (v, a, vec![m.get(a).unwrap()]),
                _ => (v, a, choices),
            })
            .collect();
        if slots.iter().any(|(_, _, choices)| choices.is_empty()) {
            return Ok(true);
        }
        let mut idx = vec![0usize; slots.len()];
        loop {
            nodes += 1;
            if nodes > limit {
                return Err(OracleError::NodeLimit(limit));
            }
            let mut psi: Vec<BTreeMap<Value, Value>> = vec![BTreeMap::new(); k];
            for (s, &(v, a, ref choices)) in slots.iter().enumerate() {
                psi[v].insert(a, choices[idx[s]]);
            }
            let ok = p.edges().all(|(q, r, want)| {
                inst.compatible(phi[q.var], psi[q.var][&q.val], phi[r.var], psi[r.var][&r.val]) == want
            });
            if ok {
                found = true;
                return Ok(false);
            }
            let mut s = 0;
            loop {
                if s == slots.len() {
                    return Ok(true);
                }
                idx[s] += 1;
                if idx[s] < slots[s].2.len() {
                    break;
                }
                idx[s] = 0;
                s += 1;
            }
        }
    })?;
    Ok(found)
}

/// Calls `f` on every injective sequence of length `k` drawn from `targets`;
/// `f` returns `Ok(false)` to stop.
fn for_each_injection(
    targets: &[VarId],
    k: usize,
    phi: &mut Vec<VarId>,
    f: &mut dyn FnMut(&[VarId]) -> Result<bool, OracleError>,
) -> Result<bool, OracleError> {
    if phi.len() == k {
        return f(phi);
    }
    for &t in targets {
        if phi.contains(&t) {
            continue;
        }
        phi.push(t);
        let go_on = for_each_injection(targets, k, phi, f)?;
        phi.pop();
        if !go_on {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::get_pattern;
    use crate::model::Constraint;

    fn k3_2col() -> Instance {
        let cons = [(0, 1), (0, 2), (1, 2)]
            .into_iter()
            .map(|(v, w)| Constraint::from_fn(v, 0..2, w, 0..2, |a, b| a != b))
            .collect();
        Instance::new(vec![vec![0, 1]; 3], cons).unwrap()
    }

    #[test]
    fn k3_has_no_solution_but_partial_ones() {
        let inst = k3_2col();
        assert_eq!(solve(&inst).unwrap(), None);
        assert_eq!(count_solutions(&inst).unwrap(), 0);
        assert!(enumerate_solutions(&inst).unwrap().is_empty());
        assert_eq!(solve_on(&inst, &[0, 1]).unwrap(), Some(PartialAssignment::from_options(vec![Some(0), Some(1), None])));
    }

    #[test]
    fn equality_on_two_booleans() {
        let inst = Instance::new(vec![vec![0, 1]; 2], vec![Constraint::new(0, 1, [(0, 0), (1, 1)])]).unwrap();
        let all: Vec<Solution> = enumerate_solutions(&inst).unwrap().into_vec();
        assert_eq!(all, vec![PartialAssignment::from_values([0, 0]), PartialAssignment::from_values([1, 1])]);
    }

    #[test]
    fn single_variable_takes_least_value() {
        let inst = Instance::new(vec![vec![2, 5]], vec![]).unwrap();
        assert_eq!(solve(&inst).unwrap(), Some(PartialAssignment::from_values([2])));
    }

    #[test]
    fn brute_btp_in_k3() {
        let inst = k3_2col();
        let btp = get_pattern("BTP").unwrap().pattern;
        assert!(brute_occurs(&btp, &inst, 0, &ValueMapping::empty()).unwrap());
        let two = Instance::new(vec![vec![0, 1]; 2], vec![]).unwrap();
        assert!(!brute_occurs(&btp, &two, 0, &ValueMapping::empty()).unwrap());
    }
}
