//! Solutions of the original instance from solutions of the reduced one.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::engine::{ElimRecord, EliminationTrace, EngineError, RuleId};
use crate::format::fingerprint;
use crate::model::{Instance, PartialAssignment, Solution, Value, VarId};
use crate::oracle::SolutionSet;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReconstructError {
    #[error("trace was recorded on instance {trace}, not {instance}")]
    FingerprintMismatch { trace: String, instance: String },
    #[error("assignment {0} is not a solution of the reduced instance")]
    NotAReducedSolution(String),
    #[error("no value of variable {var} extends the solution ({rule})")]
    NoExtension { var: VarId, rule: RuleId },
    #[error("variable {z} has no value compatible with <{x},{d}>")]
    MissingSupport { x: VarId, d: Value, z: VarId },
    #[error("reconstructed assignment {0} is not a solution of the original instance")]
    Invalid(String),
    #[error("all-solutions recovery does not support rule {0}")]
    UnsupportedRule(&'static str),
    #[error("the reduced instance still has {0} variables")]
    ResidualNotTrivial(usize),
    #[error(transparent)]
    Replay(#[from] EngineError),
}

/// The sets used to reinstate a variable removed by ∃invsubBTP or ∃snake.
///
/// Only neighbours of `x` are listed; every other variable is compatible
/// with `<x,d>` and belongs to Y.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtensionContext {
    pub x: VarId,
    pub d: Value,
    pub y: Vec<VarId>,
    pub ybar: Vec<VarId>,
    pub t: BTreeMap<VarId, Value>,
}

pub fn extension_context(
    inst: &Instance,
    x: VarId,
    s: &PartialAssignment,
    d: Value,
) -> Result<ExtensionContext, ReconstructError> {
    let mut ctx = ExtensionContext { x, d, y: Vec::new(), ybar: Vec::new(), t: BTreeMap::new() };
    for &z in inst.neighbours(x) {
        let Some(sz) = s.get(z) else { continue };
        if inst.compatible(z, sz, x, d) {
            ctx.y.push(z);
        } else {
            let tz = inst
                .domain(z)
                .values()
                .find(|&v| inst.compatible(z, v, x, d))
                .ok_or(ReconstructError::MissingSupport { x, d, z })?;
            ctx.ybar.push(z);
            ctx.t.insert(z, tz);
        }
    }
    Ok(ctx)
}

fn fits(inst: &Instance, x: VarId, d: Value, s: &PartialAssignment) -> bool {
    inst.neighbours(x).iter().all(|&z| s.get(z).is_none_or(|sz| inst.compatible(x, d, z, sz)))
}

/// Extends `s` with the least value of `x` compatible with all of it.
pub fn extend_btp(inst: &Instance, x: VarId, s: &PartialAssignment) -> Option<Solution> {
    let d = inst.domain(x).values().find(|&d| fits(inst, x, d, s))?;
    let mut out = s.clone();
    out.set(x, d);
    Some(out)
}

/// Sets `x` to `d` and moves every neighbour in conflict with `<x,d>` to its
/// value `t(z)`.
pub fn extend_via_t(inst: &Instance, x: VarId, s: &PartialAssignment, d: Value) -> Result<Solution, ReconstructError> {
    let ctx = extension_context(inst, x, s, d)?;
    let mut out = s.clone();
    out.set(x, d);
    for (&z, &tz) in &ctx.t {
        out.set(z, tz);
    }
    Ok(out)
}

fn reduced_state(original: &Instance, trace: &EliminationTrace) -> Result<Instance, ReconstructError> {
    let fp = fingerprint(original);
    if fp != trace.fingerprint {
        return Err(ReconstructError::FingerprintMismatch { trace: trace.fingerprint.clone(), instance: fp });
    }
    let mut inst = original.clone();
    trace.replay(&mut inst)?;
    Ok(inst)
}

/// One solution of `original` from a solution `s` of the reduced instance.
pub fn recover_one(original: &Instance, trace: &EliminationTrace, s: &Solution) -> Result<Solution, ReconstructError> {
    let mut inst = reduced_state(original, trace)?;
    if s.var_count() != inst.var_count() || !inst.is_solution(s) {
        return Err(ReconstructError::NotAReducedSolution(s.to_string()));
    }
    let mut s = s.clone();
    for rec in trace.records.iter().rev() {
        rec.undo(&mut inst)?;
        if let ElimRecord::Var { var, rule, mapping, .. } = rec {
            s = match rule {
                RuleId::ExistsInvSubBtp | RuleId::ExistsSnake => {
                    let d = mapping.get(0).ok_or(ReconstructError::NoExtension { var: *var, rule: *rule })?;
                    extend_via_t(&inst, *var, &s, d)?
                }
                _ => extend_btp(&inst, *var, &s).ok_or(ReconstructError::NoExtension { var: *var, rule: *rule })?,
            };
        }
    }
    if !original.is_solution(&s) {
        return Err(ReconstructError::Invalid(s.to_string()));
    }
    Ok(s)
}

/// Every solution of `original` from every solution of the reduced instance.
/// Only traces built from BTP, ∃subBTP, NS and ∃2triangle are accepted.
pub fn recover_all(
    original: &Instance,
    trace: &EliminationTrace,
    solutions: &SolutionSet,
) -> Result<SolutionSet, ReconstructError> {
    if let Some(rule) = trace.records.iter().filter_map(ElimRecord::rule).find(|r| {
        !matches!(r, RuleId::Btp | RuleId::ExistsSubBtp | RuleId::Ns | RuleId::Exists2Triangle)
    }) {
        return Err(ReconstructError::UnsupportedRule(rule.display_name()));
    }
    let mut inst = reduced_state(original, trace)?;
    if let Some(s) = solutions.iter().find(|s| s.var_count() != inst.var_count() || !inst.is_solution(s)) {
        return Err(ReconstructError::NotAReducedSolution(s.to_string()));
    }
    let mut current: Vec<Solution> = solutions.iter().cloned().collect();
    for rec in trace.records.iter().rev() {
        rec.undo(&mut inst)?;
        match rec {
            ElimRecord::Ac { .. } => {}
            ElimRecord::Val { var, val, mapping, .. } => {
                let a = mapping.get(0).expect("value records map a");
                let mut extra = Vec::new();
                for s in current.iter().filter(|s| s.get(*var) == Some(a)) {
                    if fits(&inst, *var, *val, s) {
                        let mut v = s.clone();
                        v.set(*var, *val);
                        extra.push(v);
                    }
                }
                current.extend(extra);
            }
            ElimRecord::Var { var, .. } => {
                let mut next = Vec::with_capacity(current.len());
                for s in &current {
                    for d in inst.domain(*var).values().filter(|&d| fits(&inst, *var, d, s)) {
                        let mut v = s.clone();
                        v.set(*var, d);
                        next.push(v);
                    }
                }
                current = next;
            }
        }
    }
    Ok(SolutionSet::new(current))
}

/// Solves an instance that preprocessing reduced to at most one variable:
/// pick any value of the survivor, then reinstate the eliminated variables.
pub fn greedy_solve(original: &Instance, trace: &EliminationTrace) -> Result<Option<Solution>, ReconstructError> {
    let reduced = reduced_state(original, trace)?;
    if reduced.active_vars().any(|v| reduced.domain(v).is_empty()) {
        return Ok(None);
    }
    let active: Vec<VarId> = reduced.active_vars().collect();
    if active.len() > 1 {
        return Err(ReconstructError::ResidualNotTrivial(active.len()));
    }
    let mut s = PartialAssignment::empty(reduced.var_count());
    for v in active {
        s.set(v, reduced.domain(v).first().expect("non-empty"));
    }
    recover_one(original, trace, &s).map(Some)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{preprocess, EngineConfig};
    use crate::model::Constraint;
    use crate::oracle::enumerate_solutions;

    fn path(n: usize) -> Instance {
        let cons = (1..n).map(|v| Constraint::from_fn(v - 1, 0..3, v, 0..3, |a, b| a != b)).collect();
        Instance::new(vec![vec![0, 1, 2]; n], cons).unwrap()
    }

    #[test]
    fn empty_trace_returns_input() {
        let inst = path(3);
        let trace = EliminationTrace::new(fingerprint(&inst));
        let s = PartialAssignment::from_values([0, 1, 0]);
        assert_eq!(recover_one(&inst, &trace, &s).unwrap(), s);
        let set = enumerate_solutions(&inst).unwrap();
        assert_eq!(recover_all(&inst, &trace, &set).unwrap(), set);
    }

    #[test]
    fn path_is_solved_greedily_and_fully() {
        let inst = path(5);
        let pre = preprocess(&inst, &EngineConfig::with_rules([RuleId::Btp])).unwrap();
        assert!(pre.instance.active_count() <= 1);
        let s = greedy_solve(&inst, &pre.trace).unwrap().unwrap();
        assert!(inst.is_solution(&s));
        let reduced = enumerate_solutions(&pre.instance).unwrap();
        assert_eq!(recover_all(&inst, &pre.trace, &reduced).unwrap(), enumerate_solutions(&inst).unwrap());
    }

    #[test]
    fn wrong_instance_is_rejected() {
        let trace = EliminationTrace::new(fingerprint(&path(3)));
        let err = recover_one(&path(4), &trace, &PartialAssignment::from_values([0, 1, 0, 1])).unwrap_err();
        assert!(matches!(err, ReconstructError::FingerprintMismatch { .. }));
    }
}
