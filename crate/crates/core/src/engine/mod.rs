//! The elimination engine: applies the variable and value elimination rules
//! to a fixpoint and records what it did.

mod detect;
mod trace;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use trace::{ElimRecord, EliminationTrace};

use crate::ac::{enforce_ac, is_arc_consistent};
use crate::catalog::{get_pattern, normalize_name};
use crate::format::fingerprint;
use crate::model::{Instance, Value, VarId};
use crate::pattern::{Pattern, ValueMapping};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RuleId {
    Btp,
    ExistsSubBtp,
    ExistsInvSubBtp,
    ExistsSnake,
    Ns,
    Exists2Triangle,
    Exists2InvSubBtp,
    Exists2Snake,
}

impl RuleId {
    pub const ALL: [RuleId; 8] = [
        RuleId::Btp,
        RuleId::ExistsSubBtp,
        RuleId::ExistsInvSubBtp,
        RuleId::ExistsSnake,
        RuleId::Ns,
        RuleId::Exists2Triangle,
        RuleId::Exists2InvSubBtp,
        RuleId::Exists2Snake,
    ];
    pub const VAR_RULES: [RuleId; 4] = [RuleId::Btp, RuleId::ExistsSubBtp, RuleId::ExistsInvSubBtp, RuleId::ExistsSnake];
    pub const VAL_RULES: [RuleId; 4] = [RuleId::Ns, RuleId::Exists2Triangle, RuleId::Exists2InvSubBtp, RuleId::Exists2Snake];

    /// ASCII name, also the catalog id of the rule's pattern.
    pub fn name(self) -> &'static str {
        match self {
            RuleId::Btp => "BTP",
            RuleId::ExistsSubBtp => "ExistsSubBTP",
            RuleId::ExistsInvSubBtp => "ExistsInvSubBTP",
            RuleId::ExistsSnake => "ExistsSnake",
            RuleId::Ns => "NS",
            RuleId::Exists2Triangle => "Exists2Triangle",
            RuleId::Exists2InvSubBtp => "Exists2InvSubBTP",
            RuleId::Exists2Snake => "Exists2Snake",
        }
    }

    /// Name in the usual mathematical spelling.
    pub fn display_name(self) -> &'static str {
        get_pattern(self.name()).expect("rule pattern is in the catalog").name
    }

    pub fn is_var_rule(self) -> bool {
        self < RuleId::Ns
    }

    pub fn pattern(self) -> Pattern {
        get_pattern(self.name()).expect("rule pattern is in the catalog").pattern
    }

    fn bit(self) -> u8 {
        1 << (self as u8)
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RuleId {
    type Err = EngineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = normalize_name(s);
        RuleId::ALL
            .into_iter()
            .find(|r| normalize_name(r.name()) == key || normalize_name(r.display_name()) == key)
            .ok_or_else(|| EngineError::UnknownRule(s.to_string()))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("unknown rule {0:?}")]
    UnknownRule(String),
    #[error("{0} is not a variable elimination rule")]
    NotVarRule(RuleId),
    #[error("{0} is not a value elimination rule")]
    NotValRule(RuleId),
    #[error("variable {0} is not active")]
    InactiveVariable(VarId),
    #[error("value {val} is not in the domain of variable {var}")]
    ValueNotInDomain { var: VarId, val: Value },
    #[error("mapping {mapping} does not fit rule {rule}")]
    BadMapping { rule: RuleId, mapping: String },
    #[error("{rule} occurs at variable {var} under mapping {mapping}")]
    NotEliminable { rule: RuleId, var: VarId, mapping: String },
    #[error("invalid order script: {0}")]
    InvalidScript(String),
    #[error("trace replay failed: {0}")]
    Replay(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhasePolicy {
    #[default]
    VarsFirst,
    ValuesFirst,
}

/// An elimination imposed before the canonical order takes over. `d` pins
/// the image of the existential value a; otherwise the least valid one is
/// used.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ForcedStep {
    Var { var: VarId, rule: RuleId, d: Option<Value> },
    Val { var: VarId, val: Value, rule: RuleId, d: Option<Value> },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Order {
    #[default]
    Canonical,
    Explicit(Vec<ForcedStep>),
}

impl Order {
    /// Parses `var <x> <rule> [a=<d>]` and `val <x> <b> <rule> [a=<d>]`
    /// steps separated by `;`.
    pub fn parse_script(script: &str) -> Result<Order, EngineError> {
        let mut steps = Vec::new();
        for part in script.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let tokens: Vec<&str> = part.split_whitespace().collect();
            let bad = || EngineError::InvalidScript(format!("cannot read step {part:?}"));
            let num = |t: &str| t.parse::<usize>().map_err(|_| bad());
            let (head, rest) = tokens.split_first().ok_or_else(bad)?;
            let (fixed, d) = match rest.last() {
                Some(t) if t.starts_with("a=") => (&rest[..rest.len() - 1], Some(num(&t[2..])?)),
                _ => (rest, None),
            };
            let step = match (*head, fixed) {
                ("var", [x, rule]) => ForcedStep::Var { var: num(x)?, rule: rule.parse()?, d },
                ("val", [x, b, rule]) => ForcedStep::Val { var: num(x)?, val: num(b)?, rule: rule.parse()?, d },
                _ => return Err(bad()),
            };
            steps.push(step);
        }
        Ok(Order::Explicit(steps))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EngineConfig {
    /// Enabled rules; each phase tries them in catalog order.
    pub rules: Vec<RuleId>,
    pub phase_policy: PhasePolicy,
    /// Upper bound on variable and value eliminations (AC removals excluded).
    pub max_steps: Option<usize>,
    pub order: Order,
    /// Remember which (variable, rule) pairs failed until something within
    /// distance two of the variable changes.
    pub cache: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            rules: RuleId::ALL.to_vec(),
            phase_policy: PhasePolicy::default(),
            max_steps: None,
            order: Order::Canonical,
            cache: true,
        }
    }
}

impl EngineConfig {
    pub fn with_rules(rules: impl IntoIterator<Item = RuleId>) -> Self {
        EngineConfig { rules: rules.into_iter().collect(), ..EngineConfig::default() }
    }

    pub fn without_var_rules(mut self) -> Self {
        self.rules.retain(|r| !r.is_var_rule());
        self
    }

    pub fn without_val_rules(mut self) -> Self {
        self.rules.retain(|r| r.is_var_rule());
        self
    }

    fn enabled(&self, var_rules: bool) -> Vec<RuleId> {
        RuleId::ALL.into_iter().filter(|r| r.is_var_rule() == var_rules && self.rules.contains(r)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// Fixpoint (or step limit) reached with every domain non-empty.
    Reduced,
    /// Arc consistency emptied the domain of `wipeout`.
    Unsatisfiable { wipeout: VarId },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stats {
    pub var_elims: BTreeMap<RuleId, usize>,
    pub val_elims: BTreeMap<RuleId, usize>,
    pub ac_removals: usize,
    pub step_limit_hit: bool,
}

#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub instance: Instance,
    pub trace: EliminationTrace,
    pub outcome: Outcome,
    pub stats: Stats,
}

/// Records of one value elimination and the arc consistency pass it
/// triggered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValueStep {
    pub records: Vec<ElimRecord>,
    pub wipeout: Option<VarId>,
}

fn check_active(inst: &Instance, x: VarId) -> Result<(), EngineError> {
    if x < inst.var_count() && inst.is_active(x) {
        Ok(())
    } else {
        Err(EngineError::InactiveVariable(x))
    }
}

/// The least `d` such that `rule` does not occur at `x` under `{a -> d}`
/// (the empty mapping for BTP).
pub fn var_eliminable(inst: &Instance, x: VarId, rule: RuleId) -> Result<Option<ValueMapping>, EngineError> {
    if !rule.is_var_rule() {
        return Err(EngineError::NotVarRule(rule));
    }
    check_active(inst, x)?;
    if rule == RuleId::Btp {
        return Ok((!detect::occurs(inst, rule, x, 0, 0)).then(ValueMapping::empty));
    }
    Ok(inst.domain(x).values().find(|&d| !detect::occurs(inst, rule, x, d, 0)).map(|d| ValueMapping::new([(0, d)])))
}

/// The least `d != b` such that `rule` does not occur at `x` under
/// `{a -> d, b -> b}`.
pub fn val_eliminable(inst: &Instance, x: VarId, b: Value, rule: RuleId) -> Result<Option<ValueMapping>, EngineError> {
    if rule.is_var_rule() {
        return Err(EngineError::NotValRule(rule));
    }
    check_active(inst, x)?;
    if !inst.domain(x).contains(b) {
        return Err(EngineError::ValueNotInDomain { var: x, val: b });
    }
    Ok(inst
        .domain(x)
        .values()
        .filter(|&d| d != b)
        .find(|&d| !detect::occurs(inst, rule, x, d, b))
        .map(|d| ValueMapping::new([(0, d), (1, b)])))
}

/// Direct occurrence test of a rule's pattern at `x` under `m`, using the
/// specialised checks. `m` uses the catalog labels a = 0, b = 1.
pub fn rule_occurs(inst: &Instance, rule: RuleId, x: VarId, m: &ValueMapping) -> Result<bool, EngineError> {
    check_active(inst, x)?;
    let (d, b) = mapping_images(inst, rule, x, m)?;
    Ok(detect::occurs(inst, rule, x, d, b))
}

fn mapping_images(inst: &Instance, rule: RuleId, x: VarId, m: &ValueMapping) -> Result<(Value, Value), EngineError> {
    let bad = || EngineError::BadMapping { rule, mapping: m.to_string() };
    let keys: Vec<Value> = m.iter().map(|(a, _)| a).collect();
    let want: &[Value] = match rule {
        RuleId::Btp => &[],
        r if r.is_var_rule() => &[0],
        _ => &[0, 1],
    };
    if keys != want || !m.is_injective() || m.iter().any(|(_, v)| !inst.domain(x).contains(v)) {
        return Err(bad());
    }
    Ok((m.get(0).unwrap_or(0), m.get(1).unwrap_or(0)))
}

/// Removes `x`, after re-checking that `rule` does not occur under `m`.
pub fn eliminate_variable(
    inst: &mut Instance,
    x: VarId,
    rule: RuleId,
    m: &ValueMapping,
) -> Result<ElimRecord, EngineError> {
    if !rule.is_var_rule() {
        return Err(EngineError::NotVarRule(rule));
    }
    if rule_occurs(inst, rule, x, m)? {
        return Err(EngineError::NotEliminable { rule, var: x, mapping: m.to_string() });
    }
    let removed = inst.remove_variable(x);
    debug_assert!(is_arc_consistent(inst), "variable elimination broke arc consistency");
    Ok(ElimRecord::Var { var: x, rule, mapping: m.clone(), removed })
}

/// Removes `b` from the domain of `x`, then re-establishes arc consistency
/// unless the rule is neighbourhood substitution.
pub fn eliminate_value(
    inst: &mut Instance,
    x: VarId,
    b: Value,
    rule: RuleId,
    m: &ValueMapping,
) -> Result<ValueStep, EngineError> {
    if rule.is_var_rule() {
        return Err(EngineError::NotValRule(rule));
    }
    if m.get(1) != Some(b) {
        return Err(EngineError::BadMapping { rule, mapping: m.to_string() });
    }
    if rule_occurs(inst, rule, x, m)? {
        return Err(EngineError::NotEliminable { rule, var: x, mapping: m.to_string() });
    }
    inst.remove_value(x, b);
    let mut records = vec![ElimRecord::Val { var: x, val: b, rule, mapping: m.clone() }];
    if rule == RuleId::Ns {
        debug_assert!(is_arc_consistent(inst), "neighbourhood substitution broke arc consistency");
        return Ok(ValueStep { records, wipeout: None });
    }
    let ac = enforce_ac(inst);
    records.extend(ac.removed.into_iter().map(|p| ElimRecord::Ac { var: p.var, val: p.val }));
    Ok(ValueStep { records, wipeout: ac.wipeout })
}

struct Run<'a> {
    cfg: &'a EngineConfig,
    inst: Instance,
    trace: EliminationTrace,
    stats: Stats,
    var_rules: Vec<RuleId>,
    val_rules: Vec<RuleId>,
    blocked: Vec<u8>,
    steps: usize,
}

impl Run<'_> {
    fn invalidate_around(&mut self, v: VarId) {
        self.blocked[v] = 0;
        for &y in self.inst.neighbours(v) {
            self.blocked[y] = 0;
            for &z in self.inst.neighbours(y) {
                self.blocked[z] = 0;
            }
        }
    }

    fn record_var(&mut self, rec: ElimRecord) {
        *self.stats.var_elims.entry(rec.rule().expect("rule")).or_default() += 1;
        self.steps += 1;
        self.trace.records.push(rec);
    }

    fn record_val(&mut self, step: ValueStep) -> Option<VarId> {
        for rec in &step.records {
            match rec {
                ElimRecord::Val { rule, .. } => {
                    *self.stats.val_elims.entry(*rule).or_default() += 1;
                    self.steps += 1;
                }
                ElimRecord::Ac { .. } => self.stats.ac_removals += 1,
                ElimRecord::Var { .. } => unreachable!("value steps hold no variable records"),
            }
        }
        for rec in &step.records {
            self.invalidate_around(rec.var());
        }
        self.trace.records.extend(step.records);
        step.wipeout
    }

    fn eliminate_var(&mut self, x: VarId, rule: RuleId, m: &ValueMapping) -> Result<(), EngineError> {
        self.invalidate_around(x);
        let rec = eliminate_variable(&mut self.inst, x, rule, m)?;
        self.record_var(rec);
        Ok(())
    }

    fn eliminate_val(&mut self, x: VarId, b: Value, rule: RuleId, m: &ValueMapping) -> Result<Option<VarId>, EngineError> {
        let step = eliminate_value(&mut self.inst, x, b, rule, m)?;
        Ok(self.record_val(step))
    }

    fn var_phase(&mut self) -> Result<bool, EngineError> {
        let vars: Vec<VarId> = self.inst.active_vars().collect();
        for x in vars {
            for rule in self.var_rules.clone() {
                if self.cfg.cache && self.blocked[x] & rule.bit() != 0 {
                    continue;
                }
                match var_eliminable(&self.inst, x, rule)? {
                    Some(m) => {
                        self.eliminate_var(x, rule, &m)?;
                        return Ok(true);
                    }
                    None => self.blocked[x] |= rule.bit(),
                }
            }
        }
        Ok(false)
    }

    /// Returns the step taken, if any, and a wipeout it caused.
    fn val_phase(&mut self) -> Result<Option<Option<VarId>>, EngineError> {
        let vars: Vec<VarId> = self.inst.active_vars().collect();
        for x in vars {
            let values: Vec<Value> = self.inst.domain(x).values().collect();
            for b in values {
                for rule in self.val_rules.clone() {
                    if let Some(m) = val_eliminable(&self.inst, x, b, rule)? {
                        return Ok(Some(self.eliminate_val(x, b, rule, &m)?));
                    }
                }
            }
        }
        Ok(None)
    }

    fn forced(&mut self, step: &ForcedStep) -> Result<Option<VarId>, EngineError> {
        match *step {
            ForcedStep::Var { var, rule, d } => {
                let m = match (rule, d) {
                    (RuleId::Btp, _) => ValueMapping::empty(),
                    (_, Some(d)) => ValueMapping::new([(0, d)]),
                    (_, None) => var_eliminable(&self.inst, var, rule)?.ok_or_else(|| EngineError::NotEliminable {
                        rule,
                        var,
                        mapping: "any".into(),
                    })?,
                };
                self.eliminate_var(var, rule, &m)?;
                Ok(None)
            }
            ForcedStep::Val { var, val, rule, d } => {
                let m = match d {
                    Some(d) => ValueMapping::new([(0, d), (1, val)]),
                    None => val_eliminable(&self.inst, var, val, rule)?.ok_or_else(|| EngineError::NotEliminable {
                        rule,
                        var,
                        mapping: "any".into(),
                    })?,
                };
                self.eliminate_val(var, val, rule, &m)
            }
        }
    }

    fn step(&mut self) -> Result<Option<Option<VarId>>, EngineError> {
        let vars_first = self.cfg.phase_policy == PhasePolicy::VarsFirst;
        if vars_first && self.var_phase()? {
            return Ok(Some(None));
        }
        if let Some(w) = self.val_phase()? {
            return Ok(Some(w));
        }
        if !vars_first && self.var_phase()? {
            return Ok(Some(None));
        }
        Ok(None)
    }

    fn finish(self, outcome: Outcome) -> Preprocessed {
        Preprocessed { instance: self.inst, trace: self.trace, outcome, stats: self.stats }
    }
}

/// Establishes arc consistency, applies any forced steps, then eliminates
/// in canonical order until nothing applies.
pub fn preprocess(original: &Instance, cfg: &EngineConfig) -> Result<Preprocessed, EngineError> {
    let mut run = Run {
        cfg,
        inst: original.clone(),
        trace: EliminationTrace::new(fingerprint(original)),
        stats: Stats::default(),
        var_rules: cfg.enabled(true),
        val_rules: cfg.enabled(false),
        blocked: vec![0; original.var_count()],
        steps: 0,
    };
    let ac = enforce_ac(&mut run.inst);
    run.stats.ac_removals += ac.removed.len();
    run.trace.records.extend(ac.removed.iter().map(|p| ElimRecord::Ac { var: p.var, val: p.val }));
    if let Some(wipeout) = ac.wipeout {
        return Ok(run.finish(Outcome::Unsatisfiable { wipeout }));
    }
    if let Order::Explicit(steps) = &cfg.order {
        for step in steps {
            if let Some(wipeout) = run.forced(step)? {
                return Ok(run.finish(Outcome::Unsatisfiable { wipeout }));
            }
        }
    }
    loop {
        if cfg.max_steps.is_some_and(|limit| run.steps >= limit) {
            run.stats.step_limit_hit = true;
            break;
        }
        match run.step()? {
            None => break,
            Some(Some(wipeout)) => return Ok(run.finish(Outcome::Unsatisfiable { wipeout })),
            Some(None) => {}
        }
    }
    Ok(run.finish(Outcome::Reduced))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Constraint;

    fn neq_clique(doms: Vec<Vec<Value>>) -> Instance {
        let n = doms.len();
        let mut cons = Vec::new();
        for v in 0..n {
            for w in v + 1..n {
                cons.push(Constraint::from_fn(v, doms[v].clone(), w, doms[w].clone(), |a, b| a != b));
            }
        }
        Instance::new(doms, cons).unwrap()
    }

    #[test]
    fn rule_names_round_trip() {
        for r in RuleId::ALL {
            assert_eq!(r.name().parse::<RuleId>().unwrap(), r);
            assert_eq!(r.display_name().parse::<RuleId>().unwrap(), r);
        }
        assert!("Cycle3".parse::<RuleId>().is_err());
    }

    #[test]
    fn k3_btp_occurs_everywhere() {
        let inst = neq_clique(vec![vec![0, 1]; 3]);
        for x in 0..3 {
            assert_eq!(var_eliminable(&inst, x, RuleId::Btp).unwrap(), None);
        }
    }

    #[test]
    fn two_variable_instances_always_eliminate() {
        let inst = neq_clique(vec![vec![0, 1]; 2]);
        for rule in RuleId::VAR_RULES {
            assert!(var_eliminable(&inst, 0, rule).unwrap().is_some());
        }
    }

    #[test]
    fn k4_exists2snake_mapping() {
        let inst = neq_clique(vec![vec![0, 1, 2, 3], vec![0, 1], vec![0, 2], vec![0, 3]]);
        assert_eq!(
            val_eliminable(&inst, 0, 1, RuleId::Exists2Snake).unwrap(),
            Some(ValueMapping::new([(0, 0), (1, 1)]))
        );
    }

    #[test]
    fn script_parses() {
        let order = Order::parse_script("val 2 0 Exists2Snake a=2; var 0 ∃snake").unwrap();
        assert_eq!(
            order,
            Order::Explicit(vec![
                ForcedStep::Val { var: 2, val: 0, rule: RuleId::Exists2Snake, d: Some(2) },
                ForcedStep::Var { var: 0, rule: RuleId::ExistsSnake, d: None },
            ])
        );
        assert!(Order::parse_script("val 2 Exists2Snake").is_err());
        assert!(Order::parse_script("drop 1").is_err());
    }

    #[test]
    fn mismatched_calls_are_rejected() {
        let mut inst = neq_clique(vec![vec![0, 1]; 3]);
        assert_eq!(var_eliminable(&inst, 0, RuleId::Ns), Err(EngineError::NotVarRule(RuleId::Ns)));
        assert!(matches!(
            eliminate_variable(&mut inst, 0, RuleId::Btp, &ValueMapping::empty()),
            Err(EngineError::NotEliminable { .. })
        ));
        assert!(val_eliminable(&inst, 0, 5, RuleId::Ns).is_err());
    }
}
