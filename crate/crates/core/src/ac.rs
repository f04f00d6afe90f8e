//! Arc consistency.

use std::collections::BTreeSet;

use crate::model::{Assignment, Instance, Value, VarId};

/// Outcome of [`enforce_ac`]: removals in the order they happened and, if a
/// domain emptied, the variable it belonged to.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AcResult {
    pub removed: Vec<Assignment>,
    pub wipeout: Option<VarId>,
}

fn has_support(inst: &Instance, v: VarId, a: Value, w: VarId) -> bool {
    inst.domain(w).values().any(|b| inst.compatible(v, a, w, b))
}

/// Removes every value lacking support until a fixpoint or a wipeout.
///
/// Changed variables are processed smallest index first, and within a
/// revision values are removed in ascending order, so the removal sequence
/// is fully determined by the instance.
pub fn enforce_ac(inst: &mut Instance) -> AcResult {
    let mut result = AcResult::default();
    if let Some(v) = inst.active_vars().find(|&v| inst.domain(v).is_empty()) {
        result.wipeout = Some(v);
        return result;
    }
    let mut queue: BTreeSet<VarId> = inst.active_vars().collect();
    while let Some(w) = queue.pop_first() {
        let neighbours: Vec<VarId> = inst.neighbours(w).iter().copied().collect();
        for v in neighbours {
            let dead: Vec<Value> = inst.domain(v).values().filter(|&a| !has_support(inst, v, a, w)).collect();
            if dead.is_empty() {
                continue;
            }
            for a in dead {
                inst.remove_value(v, a);
                result.removed.push(Assignment::new(v, a));
            }
            if inst.domain(v).is_empty() {
                result.wipeout = Some(v);
                return result;
            }
            queue.insert(v);
        }
    }
    result
}

pub fn is_arc_consistent(inst: &Instance) -> bool {
    inst.active_vars().all(|v| {
        !inst.domain(v).is_empty()
            && inst.neighbours(v).iter().all(|&w| inst.domain(v).values().all(|a| has_support(inst, v, a, w)))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Constraint;

    fn neq(v: VarId, dv: &[Value], w: VarId, dw: &[Value]) -> Constraint {
        Constraint::from_fn(v, dv.to_vec(), w, dw.to_vec(), |a, b| a != b)
    }

    fn k3_2col() -> Instance {
        Instance::new(vec![vec![0, 1]; 3], vec![neq(0, &[0, 1], 1, &[0, 1]), neq(0, &[0, 1], 2, &[0, 1]), neq(1, &[0, 1], 2, &[0, 1])])
            .unwrap()
    }

    fn k4_colour() -> Instance {
        let doms: Vec<Vec<Value>> = vec![vec![0, 1, 2, 3], vec![0, 1], vec![0, 2], vec![0, 3]];
        let mut cons = Vec::new();
        for v in 0..4 {
            for w in v + 1..4 {
                cons.push(neq(v, &doms[v], w, &doms[w]));
            }
        }
        Instance::new(doms, cons).unwrap()
    }

    #[test]
    fn ac_instance_is_a_fixpoint() {
        let mut inst = k3_2col();
        assert!(is_arc_consistent(&inst));
        assert_eq!(enforce_ac(&mut inst), AcResult::default());
    }

    #[test]
    fn k3_wipes_out_after_losing_a_value() {
        let mut inst = k3_2col();
        inst.remove_value(0, 1);
        let r = enforce_ac(&mut inst);
        assert!(r.wipeout.is_some());
    }

    #[test]
    fn k4_collapses_to_singletons() {
        let mut inst = k4_colour();
        for a in [1, 2, 3] {
            inst.remove_value(0, a);
        }
        let r = enforce_ac(&mut inst);
        assert_eq!(r.wipeout, None);
        let doms: Vec<Vec<Value>> = (0..4).map(|v| inst.domain(v).values().collect()).collect();
        assert_eq!(doms, vec![vec![0], vec![1], vec![2], vec![3]]);
        assert_eq!(r.removed, vec![Assignment::new(1, 0), Assignment::new(2, 0), Assignment::new(3, 0)]);
        assert!(is_arc_consistent(&inst));
    }

    #[test]
    fn unsupported_value_is_detected() {
        let inst = Instance::new(vec![vec![0, 1], vec![0]], vec![Constraint::new(0, 1, [(0, 0)])]).unwrap();
        assert!(!is_arc_consistent(&inst));
        let mut inst = inst;
        assert_eq!(enforce_ac(&mut inst).removed, vec![Assignment::new(0, 1)]);
        assert!(enforce_ac(&mut inst).removed.is_empty());
    }
}
