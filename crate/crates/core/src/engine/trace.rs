use crate::model::{Instance, RemovedVariable, Value, VarId};
use crate::pattern::ValueMapping;

use super::{EngineError, RuleId};

/// One step of preprocessing.
///
/// Value records keep no edges: removed values are tombstoned, so their
/// compatibilities stay in the instance and come back with the value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ElimRecord {
    Var { var: VarId, rule: RuleId, mapping: ValueMapping, removed: RemovedVariable },
    Val { var: VarId, val: Value, rule: RuleId, mapping: ValueMapping },
    Ac { var: VarId, val: Value },
}

impl ElimRecord {
    pub fn var(&self) -> VarId {
        match *self {
            ElimRecord::Var { var, .. } | ElimRecord::Val { var, .. } | ElimRecord::Ac { var, .. } => var,
        }
    }

    pub fn rule(&self) -> Option<RuleId> {
        match *self {
            ElimRecord::Var { rule, .. } | ElimRecord::Val { rule, .. } => Some(rule),
            ElimRecord::Ac { .. } => None,
        }
    }

    /// Applies the record to `inst`, which must be in the state the record
    /// was taken from.
    pub fn apply(&self, inst: &mut Instance) -> Result<(), EngineError> {
        match *self {
            ElimRecord::Var { var, .. } => {
                if !inst.is_active(var) {
                    return Err(EngineError::Replay(format!("variable {var} is not active")));
                }
                inst.remove_variable(var);
            }
            ElimRecord::Val { var, val, .. } | ElimRecord::Ac { var, val } => {
                if !inst.is_active(var) || !inst.remove_value(var, val) {
                    return Err(EngineError::Replay(format!("value <{var},{val}> is not alive")));
                }
            }
        }
        Ok(())
    }

    /// Reverts [`ElimRecord::apply`].
    pub fn undo(&self, inst: &mut Instance) -> Result<(), EngineError> {
        match self {
            ElimRecord::Var { var, removed, .. } => {
                if inst.is_active(*var) {
                    return Err(EngineError::Replay(format!("variable {var} is already active")));
                }
                inst.restore_variable(*var, removed.clone());
            }
            &ElimRecord::Val { var, val, .. } | &ElimRecord::Ac { var, val } => {
                if !inst.restore_value(var, val) {
                    return Err(EngineError::Replay(format!("value <{var},{val}> cannot be restored")));
                }
            }
        }
        Ok(())
    }
}

/// Ordered record of a preprocessing run, tied to the instance it started
/// from by `fingerprint`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EliminationTrace {
    pub fingerprint: String,
    pub records: Vec<ElimRecord>,
}

impl EliminationTrace {
    pub fn new(fingerprint: String) -> Self {
        EliminationTrace { fingerprint, records: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn replay(&self, inst: &mut Instance) -> Result<(), EngineError> {
        self.records.iter().try_for_each(|r| r.apply(inst))
    }

    pub fn undo(&self, inst: &mut Instance) -> Result<(), EngineError> {
        self.records.iter().rev().try_for_each(|r| r.undo(inst))
    }

    pub fn var_records(&self) -> usize {
        self.records.iter().filter(|r| matches!(r, ElimRecord::Var { .. })).count()
    }

    pub fn val_records(&self) -> usize {
        self.records.iter().filter(|r| matches!(r, ElimRecord::Val { .. })).count()
    }

    pub fn ac_records(&self) -> usize {
        self.records.iter().filter(|r| matches!(r, ElimRecord::Ac { .. })).count()
    }
}
