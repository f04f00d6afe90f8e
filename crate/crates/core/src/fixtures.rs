//! Named instances from the worked examples and counterexamples, each with
//! the properties it is expected to have, plus seeded random generators.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ac::{enforce_ac, is_arc_consistent};
use crate::catalog::{get_pattern, normalize_name};
use crate::engine::{eliminate_value, val_eliminable, RuleId};
use crate::model::{Assignment, Constraint, Instance, PartialAssignment, Solution, Value, VarId};
use crate::oracle::{brute_occurs, brute_occurs_anywhere, count_solutions, solve, solve_on};
use crate::pattern::{occurs_anywhere, occurs_at, Pattern, ValueMapping};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FixtureError {
    #[error("unknown fixture {0:?}")]
    Unknown(String),
    #[error("bad parameters for {name}: {msg}")]
    BadParams { name: &'static str, msg: String },
    #[error("no arc-consistent instance after {0} draws")]
    Exhausted(usize),
}

/// A pattern referred to by a claim, with the name used in reports.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamedPattern {
    pub name: String,
    pub pattern: Pattern,
}

impl NamedPattern {
    fn catalog(name: &str) -> NamedPattern {
        let e = get_pattern(name).expect("catalog pattern");
        NamedPattern { name: e.name.to_string(), pattern: e.pattern }
    }
}

/// Two incompatibility edges in one constraint that cannot be merged away.
/// Quantified at its first variable with e = {a, b} and distinguished value
/// b when `quantified`, otherwise a plain two-variable pattern.
pub fn two_negative(quantified: bool) -> NamedPattern {
    let edges = [(0, 0, 1, 0, false), (0, 1, 1, 1, false), (0, 0, 1, 1, true), (0, 1, 1, 0, true)];
    let quant: Option<(VarId, &[Value], Option<Value>)> = if quantified { Some((0, &[0, 1], Some(1))) } else { None };
    let pattern = Pattern::build(vec![vec![0, 1], vec![0, 1]], &edges, quant).expect("well formed");
    let name = if quantified { "∃TwoNegative" } else { "TwoNegative" };
    NamedPattern { name: name.to_string(), pattern }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Claim {
    ArcConsistent,
    Satisfiable(bool),
    SolutionCount(u64),
    IsSolution(Solution),
    IsPartialSolution(PartialAssignment),
    /// A partial solution on every variable except this one exists.
    PartialSolutionWithout(VarId),
    SolutionWith(Assignment),
    /// Deleting the value leaves no solution.
    UnsatWithout(Assignment),
    /// The pattern occurs at `x` under none of `mappings`.
    AbsentAt { pattern: NamedPattern, x: VarId, mappings: Vec<ValueMapping> },
    AbsentAnywhere(NamedPattern),
    /// No value rule can delete this value.
    NotValEliminable(Assignment),
    /// Deleting `at` by `rule` under `mapping`, then arc consistency, leaves
    /// exactly one solution with every domain a singleton.
    UniqueAfterElimination { at: Assignment, rule: RuleId, mapping: ValueMapping },
}

impl fmt::Display for Claim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Claim::ArcConsistent => write!(f, "arc consistent"),
            Claim::Satisfiable(true) => write!(f, "satisfiable"),
            Claim::Satisfiable(false) => write!(f, "unsatisfiable"),
            Claim::SolutionCount(n) => write!(f, "exactly {n} solutions"),
            Claim::IsSolution(s) => write!(f, "({s}) is a solution"),
            Claim::IsPartialSolution(s) => write!(f, "({s}) is a partial solution"),
            Claim::PartialSolutionWithout(x) => write!(f, "partial solution on all variables but {x}"),
            Claim::SolutionWith(p) => write!(f, "a solution contains {p}"),
            Claim::UnsatWithout(p) => write!(f, "unsatisfiable once {p} is deleted"),
            Claim::AbsentAt { pattern, x, mappings } => {
                let ms: Vec<String> = mappings.iter().map(|m| format!("{{{m}}}")).collect();
                write!(f, "{} absent at {x} under {}", pattern.name, ms.join(" "))
            }
            Claim::AbsentAnywhere(p) => write!(f, "{} absent everywhere", p.name),
            Claim::NotValEliminable(p) => write!(f, "{p} is not eliminable by any value rule"),
            Claim::UniqueAfterElimination { at, rule, mapping } => {
                write!(f, "deleting {at} by {rule} {{{mapping}}} leaves a unique solution")
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub params: Vec<usize>,
    pub source: &'static str,
    pub instance: Instance,
    pub claims: Vec<Claim>,
}

/// Outcome of checking one claim.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClaimCheck {
    pub claim: String,
    pub result: Result<(), String>,
}

struct Entry {
    name: &'static str,
    defaults: &'static [usize],
    source: &'static str,
    build: fn(&[usize]) -> Built,
}

const ENTRIES: &[Entry] = &[
    Entry { name: "K3_2COL", defaults: &[], source: "2-colouring on three variables", build: k3_2col },
    Entry { name: "I∃4", defaults: &[], source: "counterexample for V(+−) and Triangle(asym)", build: i_exists4 },
    Entry { name: "I4", defaults: &[], source: "counterexample for Kite(sym)", build: i4 },
    Entry { name: "IZOA4", defaults: &[], source: "counterexample for Kite(asym)", build: izoa4 },
    Entry { name: "I7", defaults: &[], source: "counterexample for rotsubBTP", build: i7 },
    Entry { name: "ISAT4", defaults: &[], source: "counterexample for Pivot(sym)", build: isat4 },
    Entry { name: "ISAT6", defaults: &[], source: "counterexample for Cycle(3) and Pivot(asym)", build: isat6 },
    Entry { name: "I4K", defaults: &[5], source: "counterexample for |e| > 1", build: i4k },
    Entry { name: "ISAT3", defaults: &[5], source: "counterexample for I(−)", build: isat3 },
    Entry { name: "ISAT2K1", defaults: &[2], source: "counterexample for two incompatibilities in one constraint", build: isat2k1 },
    Entry { name: "I3", defaults: &[3], source: "counterexample for L(+−), triangle2, ∃Kite1", build: i3 },
    Entry { name: "I3PLUS", defaults: &[3], source: "counterexample for L(−)", build: i3plus },
    Entry { name: "I32K", defaults: &[2], source: "counterexample for triangle1, ∃Kite, ∃Kite(asym), Diamond, Z", build: i32k },
    Entry { name: "I2", defaults: &[], source: "single solution, nothing to eliminate", build: i2 },
    Entry { name: "K4_COLOUR", defaults: &[], source: "list colouring of K4", build: k4_colour },
    Entry { name: "BOOL3", defaults: &[], source: "three Boolean variables", build: bool3 },
    Entry { name: "NONCONF", defaults: &[], source: "non-confluent value elimination", build: nonconf },
    Entry { name: "STAR", defaults: &[4], source: "2-colouring of a star", build: star },
    Entry { name: "IJ", defaults: &[3, 2, 1], source: "second-solution gadget around a random J", build: ij },
];

/// Names of the counterexample fixtures for variable elimination.
pub const VAR_COUNTEREXAMPLES: [&str; 8] = ["K3_2COL", "I∃4", "I4", "IZOA4", "I7", "ISAT4", "ISAT6", "I4K"];
/// Names of the counterexample fixtures for value elimination.
pub const VAL_COUNTEREXAMPLES: [&str; 6] = ["ISAT3", "ISAT2K1", "I3", "I3PLUS", "I32K", "I2"];

pub fn fixture_names() -> Vec<&'static str> {
    ENTRIES.iter().map(|e| e.name).collect()
}

/// Builds a fixture; empty `params` selects the defaults.
pub fn fixture(name: &str, params: &[usize]) -> Result<Fixture, FixtureError> {
    let key = normalize_name(name);
    let entry = ENTRIES
        .iter()
        .find(|e| normalize_name(e.name) == key || normalize_name(&e.name.replace('∃', "E")) == key)
        .ok_or_else(|| FixtureError::Unknown(name.to_string()))?;
    let params: Vec<usize> = if params.is_empty() { entry.defaults.to_vec() } else { params.to_vec() };
    if params.len() != entry.defaults.len() {
        return Err(FixtureError::BadParams {
            name: entry.name,
            msg: format!("expected {} parameters, got {}", entry.defaults.len(), params.len()),
        });
    }
    let (instance, claims) = (entry.build)(&params)?;
    Ok(Fixture { name: entry.name, params, source: entry.source, instance, claims })
}

fn inst(domains: Vec<Vec<Value>>, constraints: Vec<Constraint>) -> Instance {
    Instance::new(domains, constraints).expect("fixture is well formed")
}

fn rel(
    v: VarId,
    dv: impl IntoIterator<Item = Value>,
    w: VarId,
    dw: impl IntoIterator<Item = Value> + Clone,
    f: impl Fn(Value, Value) -> bool,
) -> Constraint {
    Constraint::from_fn(v, dv, w, dw, f)
}

/// Boolean clause over two literals; a positive literal is the value 1.
fn clause(v: VarId, pos_v: bool, w: VarId, pos_w: bool) -> Constraint {
    rel(v, 0..2, w, 0..2, move |a, b| (a == 1) == pos_v || (b == 1) == pos_w)
}

fn equiv(v: VarId, w: VarId) -> Constraint {
    rel(v, 0..2, w, 0..2, |a, b| a == b)
}

fn table(v: VarId, w: VarId, tuples: &[(Value, Value)]) -> Constraint {
    Constraint::new(v, w, tuples.iter().copied())
}

fn m1(d: Value) -> Vec<ValueMapping> {
    vec![ValueMapping::new([(0, d)])]
}

fn flat() -> Vec<ValueMapping> {
    vec![ValueMapping::empty()]
}

/// Every injective mapping of `pattern`'s existential values into `range`
/// that agrees with `pinned`.
fn mappings(pattern: &Pattern, range: &[Value], pinned: &[(Value, Value)]) -> Vec<ValueMapping> {
    let free: Vec<Value> = pattern.existential().iter().copied().filter(|a| !pinned.iter().any(|p| p.0 == *a)).collect();
    let mut out = Vec::new();
    let mut chosen: Vec<Value> = Vec::new();
    fn rec(
        free: &[Value],
        range: &[Value],
        pinned: &[(Value, Value)],
        chosen: &mut Vec<Value>,
        out: &mut Vec<ValueMapping>,
    ) {
        if chosen.len() == free.len() {
            out.push(ValueMapping::new(pinned.iter().copied().chain(free.iter().copied().zip(chosen.iter().copied()))));
            return;
        }
        for &d in range {
            if chosen.contains(&d) || pinned.iter().any(|p| p.1 == d) {
                continue;
            }
            chosen.push(d);
            rec(free, range, pinned, chosen, out);
            chosen.pop();
        }
    }
    rec(&free, range, pinned, &mut chosen, &mut out);
    out
}

fn absent(name: &str, x: VarId, mappings: Vec<ValueMapping>) -> Claim {
    Claim::AbsentAt { pattern: NamedPattern::catalog(name), x, mappings }
}

fn anywhere(name: &str) -> Claim {
    Claim::AbsentAnywhere(NamedPattern::catalog(name))
}

fn var_counterexample(x: VarId, mut extra: Vec<Claim>) -> Vec<Claim> {
    let mut claims = vec![Claim::ArcConsistent, Claim::PartialSolutionWithout(x), Claim::Satisfiable(false)];
    claims.append(&mut extra);
    claims
}

fn val_counterexample(solution: Vec<Value>, x: VarId, b: Value, mut extra: Vec<Claim>) -> Vec<Claim> {
    let mut claims = vec![
        Claim::ArcConsistent,
        Claim::IsSolution(PartialAssignment::from_values(solution)),
        Claim::SolutionWith(Assignment::new(x, b)),
        Claim::UnsatWithout(Assignment::new(x, b)),
    ];
    claims.append(&mut extra);
    claims
}

fn param(name: &'static str, params: &[usize], i: usize, min: usize) -> Result<usize, FixtureError> {
    let v = params[i];
    if v < min {
        return Err(FixtureError::BadParams { name, msg: format!("parameter {} must be at least {min}", i + 1) });
    }
    Ok(v)
}

type Built = Result<(Instance, Vec<Claim>), FixtureError>;

fn k3_2col(_: &[usize]) -> Built {
    let cons = [(0, 1), (0, 2), (1, 2)].into_iter().map(|(v, w)| rel(v, 0..2, w, 0..2, |a, b| a != b)).collect();
    let claims = var_counterexample(
        0,
        vec![anywhere("Diamond"), anywhere("Z"), anywhere("XL"), anywhere("Triangle")],
    );
    Ok((inst(vec![vec![0, 1]; 3], cons), claims))
}

fn i_exists4(_: &[usize]) -> Built {
    let r = [(0, 0), (1, 2), (2, 1)];
    let mut cons = vec![table(0, 1, &r), table(0, 2, &r), table(1, 2, &r)];
    for i in 0..3 {
        cons.push(rel(i, 0..3, 3, 0..4, move |a, b| a > 0 || b == i + 1));
    }
    let claims = var_counterexample(3, vec![absent("V(+−)", 3, m1(0)), absent("Triangle(asym)", 3, m1(0))]);
    Ok((inst(vec![vec![0, 1, 2], vec![0, 1, 2], vec![0, 1, 2], vec![0, 1, 2, 3]], cons), claims))
}

fn i4(_: &[usize]) -> Built {
    let mut cons = vec![clause(0, true, 1, true), clause(0, true, 2, true), clause(1, true, 2, true)];
    for i in 0..3 {
        cons.push(rel(i, 0..2, 3, 1..4, move |a, b| (a == 1) == (b == i + 1)));
    }
    let claims = var_counterexample(3, vec![absent("Kite(sym)", 3, flat())]);
    Ok((inst(vec![vec![0, 1], vec![0, 1], vec![0, 1], vec![1, 2, 3]], cons), claims))
}

fn izoa4(_: &[usize]) -> Built {
    let mut cons = vec![
        rel(0, 1..4, 1, 1..4, |a, b| a == b),
        rel(0, 1..4, 2, 1..4, |a, b| a == b),
        rel(1, 1..4, 2, 1..4, |a, b| a == b),
    ];
    for i in 0..3 {
        cons.push(rel(i, 1..4, 3, 1..4, move |a, b| a == i + 1 || b == i + 1));
    }
    let claims = var_counterexample(3, vec![absent("Kite(asym)", 3, flat())]);
    Ok((inst(vec![vec![1, 2, 3]; 4], cons), claims))
}

fn i7(_: &[usize]) -> Built {
    let r = [(0, 0), (1, 2), (2, 1)];
    let r0 = [(0, 0), (1, 1), (2, 1)];
    let r1 = [(0, 1), (1, 0), (2, 0)];
    let mut cons = Vec::new();
    for group in [[0, 1, 2], [3, 4, 5]] {
        for i in 0..3 {
            for j in i + 1..3 {
                cons.push(table(group[i], group[j], &r));
            }
        }
    }
    for i in 0..3 {
        cons.push(table(i, 6, &r0));
        cons.push(table(i + 3, 6, &r1));
    }
    let mut domains = vec![vec![0, 1, 2]; 6];
    domains.push(vec![0, 1]);
    let claims = var_counterexample(6, vec![absent("rotsubBTP", 6, flat())]);
    Ok((inst(domains, cons), claims))
}

fn isat4(_: &[usize]) -> Built {
    let cons = vec![equiv(0, 1), equiv(0, 2), clause(1, true, 2, true), clause(1, false, 3, true), clause(2, false, 3, false)];
    let claims = var_counterexample(3, vec![absent("Pivot(sym)", 3, flat())]);
    Ok((inst(vec![vec![0, 1]; 4], cons), claims))
}

fn isat6(_: &[usize]) -> Built {
    let cons = vec![
        clause(0, false, 1, false),
        clause(0, false, 3, false),
        clause(0, true, 2, false),
        clause(0, true, 4, false),
        clause(1, true, 5, false),
        clause(3, true, 5, true),
        clause(2, true, 5, false),
        clause(4, true, 5, true),
    ];
    let claims = var_counterexample(
        5,
        vec![anywhere("Cycle(3)"), absent("Pivot(asym)", 5, flat()), Claim::AbsentAnywhere(two_negative(false))],
    );
    Ok((inst(vec![vec![0, 1]; 6], cons), claims))
}

fn i4k(params: &[usize]) -> Built {
    let k = param("I4K", params, 0, 5)?;
    let mut cons = vec![
        rel(0, 0..3, 1, 0..3, |a, b| a == 2 - b),
        rel(0, 0..3, 2, 0..3, |a, b| a == 2 - b),
        rel(1, 0..3, 2, 0..3, |a, b| a == 2 - b),
    ];
    for i in 0..3 {
        cons.push(rel(i, 0..3, 3, 1..=k, move |a, b| a != 1 || b == i + 1));
    }
    let range: Vec<Value> = (4..=k).collect();
    let mut claims =
        var_counterexample(3, vec![Claim::IsPartialSolution(PartialAssignment::from_options(vec![Some(1), Some(1), Some(1), None]))]);
    for r in RuleId::VAL_RULES {
        let p = NamedPattern::catalog(r.name());
        let ms = mappings(&p.pattern, &range, &[]);
        claims.push(Claim::AbsentAt { pattern: p, x: 3, mappings: ms });
    }
    Ok((inst(vec![vec![0, 1, 2], vec![0, 1, 2], vec![0, 1, 2], (1..=k).collect()], cons), claims))
}

fn isat3(params: &[usize]) -> Built {
    let k = param("ISAT3", params, 0, 1)?;
    let cons = vec![
        clause(0, false, 1, false),
        rel(0, 0..2, 2, 0..=k, |a, b| a == 1 || b == 0),
        rel(1, 0..2, 2, 0..=k, |a, b| a == 1 || b == 0),
    ];
    let claims = val_counterexample(vec![0, 0, 0], 2, 0, vec![absent("I(−)", 2, m1(0))]);
    Ok((inst(vec![vec![0, 1], vec![0, 1], (0..=k).collect()], cons), claims))
}

fn isat2k1(params: &[usize]) -> Built {
    let k = param("ISAT2K1", params, 0, 1)?;
    let x = 2 * k;
    let mut cons = Vec::new();
    for i in 1..=k {
        let (u, v) = (2 * i - 2, 2 * i - 1);
        cons.push(clause(u, false, v, false));
        cons.push(rel(u, 0..2, x, 0..=k, move |a, b| a == 1 || b != i));
        cons.push(rel(v, 0..2, x, 0..=k, move |a, b| a == 1 || b != i));
    }
    let mut domains = vec![vec![0, 1]; 2 * k];
    domains.push((0..=k).collect());
    let quantified = two_negative(true);
    let range: Vec<Value> = (0..=k).collect();
    let ms = mappings(&quantified.pattern, &range, &[(1, 0)]);
    let claims = val_counterexample(
        vec![0; 2 * k + 1],
        x,
        0,
        vec![Claim::AbsentAnywhere(two_negative(false)), Claim::AbsentAt { pattern: quantified, x, mappings: ms }],
    );
    Ok((inst(domains, cons), claims))
}

fn i3(params: &[usize]) -> Built {
    let k = param("I3", params, 0, 1)?;
    let cons = vec![
        rel(0, 0..=k, 1, 0..=k, |a, b| a == 0 || b == 0),
        rel(0, 0..=k, 2, 0..=k, |a, b| a == b),
        rel(1, 0..=k, 2, 0..=k, |a, b| a == b),
    ];
    let claims = val_counterexample(
        vec![0, 0, 0],
        2,
        0,
        vec![absent("L(+−)", 2, m1(0)), absent("triangle2", 2, m1(0)), absent("∃Kite1", 2, m1(0))],
    );
    Ok((inst(vec![(0..=k).collect(); 3], cons), claims))
}

fn i3plus(params: &[usize]) -> Built {
    let k = param("I3PLUS", params, 0, 1)?;
    let cons = vec![
        rel(0, 0..=k, 1, 0..=k, |a, b| a == 0 || b == 0),
        rel(0, 0..=k, 2, 0..=k, |a, b| a == b),
        rel(1, 0..=k, 2, 0..=k, |a, b| a == b),
        rel(2, 0..=k, 3, 0..=k, |a, b| a == b),
    ];
    let claims = val_counterexample(vec![0, 0, 0, 0], 3, 0, vec![absent("L(−)", 3, flat())]);
    Ok((inst(vec![(0..=k).collect(); 4], cons), claims))
}

fn i32k(params: &[usize]) -> Built {
    let k = param("I32K", params, 0, 1)?;
    let top = 2 * k;
    let cons = vec![
        rel(0, 0..=top, 1, 0..=top, move |a, b| a + b == top),
        rel(0, 0..=top, 2, 0..=top, |a, b| a == b),
        rel(1, 0..=top, 2, 0..=top, |a, b| a == b),
    ];
    let claims = val_counterexample(
        vec![k, k, k],
        2,
        k,
        vec![
            absent("triangle1", 2, m1(k)),
            absent("∃Kite", 2, m1(k)),
            absent("∃Kite(asym)", 2, m1(k)),
            anywhere("Diamond"),
            anywhere("Z"),
        ],
    );
    Ok((inst(vec![(0..=top).collect(); 3], cons), claims))
}

fn i2(_: &[usize]) -> Built {
    let claims = vec![
        Claim::ArcConsistent,
        Claim::SolutionCount(1),
        Claim::NotValEliminable(Assignment::new(0, 0)),
        Claim::NotValEliminable(Assignment::new(1, 0)),
    ];
    Ok((inst(vec![vec![0], vec![0]], vec![table(0, 1, &[(0, 0)])]), claims))
}

fn k4_colour(_: &[usize]) -> Built {
    let doms: Vec<Vec<Value>> = vec![vec![0, 1, 2, 3], vec![0, 1], vec![0, 2], vec![0, 3]];
    let mut cons = Vec::new();
    for v in 0..4 {
        for w in v + 1..4 {
            cons.push(rel(v, doms[v].clone(), w, doms[w].clone(), |a, b| a != b));
        }
    }
    Ok((inst(doms, cons), vec![Claim::ArcConsistent, Claim::Satisfiable(true)]))
}

fn bool3(_: &[usize]) -> Built {
    // x = 0, y = 1, z = 2: z or not x, z or y, not y or not x.
    let cons = vec![clause(0, false, 2, true), clause(1, true, 2, true), clause(0, false, 1, false)];
    Ok((inst(vec![vec![0, 1]; 3], cons), vec![Claim::ArcConsistent, Claim::Satisfiable(true)]))
}

fn nonconf(_: &[usize]) -> Built {
    let r = [(0, 0), (0, 2), (1, 1), (2, 1), (2, 2)];
    let cons = vec![rel(0, 0..3, 1, 0..3, |a, b| a != 2 || b != 2), table(0, 2, &r), table(1, 2, &r)];
    Ok((inst(vec![vec![0, 1, 2]; 3], cons), vec![Claim::ArcConsistent, Claim::Satisfiable(true)]))
}

fn star(params: &[usize]) -> Built {
    let n = param("STAR", params, 0, 2)?;
    let cons = (1..n).map(|v| rel(0, 0..2, v, 0..2, |a, b| a != b)).collect();
    Ok((inst(vec![vec![0, 1]; n], cons), vec![Claim::ArcConsistent, Claim::SolutionCount(2)]))
}

/// The gadget around `j`: a new last variable x with domain {0, 1}, every
/// old value shifted up by one and a fresh value 0 added to every old
/// variable.
pub fn ij_from(j: &Instance) -> Instance {
    let n = j.var_count();
    let mut domains: Vec<Vec<Value>> =
        (0..n).map(|v| std::iter::once(0).chain(j.domain(v).values().map(|a| a + 1)).collect()).collect();
    domains.push(vec![0, 1]);
    let mut cons = Vec::new();
    for (v, w, _) in j.relations() {
        let tuples = domains[v]
            .iter()
            .flat_map(|&a| domains[w].iter().map(move |&b| (a, b)))
            .filter(|&(a, b)| a == 0 || b == 0 || j.compatible(v, a - 1, w, b - 1));
        cons.push(Constraint::new(v, w, tuples.collect::<Vec<_>>()));
    }
    for (v, dom) in domains.iter().enumerate().take(n) {
        cons.push(rel(v, dom.clone(), n, 0..2, |a, b| (a == 0) == (b == 0)));
    }
    inst(domains, cons)
}

fn ij(params: &[usize]) -> Built {
    let n = param("IJ", params, 0, 1)?;
    let d = param("IJ", params, 1, 1)?;
    let j = random_instance(n, d, 0.6, 0.4, params[2] as u64)?;
    let count_j = count_solutions(&j).map_err(|e| FixtureError::BadParams { name: "IJ", msg: e.to_string() })?;
    let inst = ij_from(&j);
    let x = n;
    let m = ValueMapping::new([(0, 0), (1, 1)]);
    let claims = vec![
        Claim::ArcConsistent,
        Claim::SolutionCount(1 + count_j),
        absent("∃2invsubBTP", x, vec![m.clone()]),
        absent("∃2snake", x, vec![m.clone()]),
        Claim::UniqueAfterElimination { at: Assignment::new(x, 1), rule: RuleId::Exists2InvSubBtp, mapping: m.clone() },
        Claim::UniqueAfterElimination { at: Assignment::new(x, 1), rule: RuleId::Exists2Snake, mapping: m },
    ];
    Ok((inst, claims))
}

/// Copy of an instance whose domains are exactly the live values.
fn compacted(inst: &Instance) -> Instance {
    let domains: Vec<Vec<Value>> = (0..inst.var_count()).map(|v| inst.domain(v).values().collect()).collect();
    let cons = inst
        .relations()
        .map(|(v, w, _)| {
            let tuples: Vec<(Value, Value)> = domains[v]
                .iter()
                .flat_map(|&a| domains[w].iter().map(move |&b| (a, b)))
                .filter(|&(a, b)| inst.compatible(v, a, w, b))
                .collect();
            Constraint::new(v, w, tuples)
        })
        .collect();
    Instance::new(domains, cons).expect("compacted instance is well formed")
}

const MAX_DRAWS: usize = 1000;

fn draw_until_ac(
    seed: u64,
    mut draw: impl FnMut(&mut ChaCha8Rng) -> Instance,
) -> Result<Instance, FixtureError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_DRAWS {
        let mut inst = draw(&mut rng);
        if enforce_ac(&mut inst).wipeout.is_none() {
            return Ok(compacted(&inst));
        }
    }
    Err(FixtureError::Exhausted(MAX_DRAWS))
}

fn random_relation(rng: &mut ChaCha8Rng, v: VarId, w: VarId, d: usize, tightness: f64) -> Constraint {
    let tuples: Vec<(Value, Value)> =
        (0..d).flat_map(|a| (0..d).map(move |b| (a, b))).filter(|_| rng.gen::<f64>() >= tightness).collect();
    Constraint::new(v, w, tuples)
}

fn check_unit(name: &'static str, what: &str, x: f64) -> Result<(), FixtureError> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(FixtureError::BadParams { name, msg: format!("{what} must lie in [0, 1]") })
    }
}

/// Random instance on `n` variables with domains `0..d`. Each pair is
/// constrained with probability `density`, and each tuple of a constrained
/// pair is forbidden with probability `tightness`. Draws that arc
/// consistency wipes out are discarded; the survivor is returned with arc
/// consistency enforced.
pub fn random_instance(n: usize, d: usize, density: f64, tightness: f64, seed: u64) -> Result<Instance, FixtureError> {
    if n == 0 || d == 0 {
        return Err(FixtureError::BadParams { name: "random", msg: "n and d must be positive".into() });
    }
    check_unit("random", "density", density)?;
    check_unit("random", "tightness", tightness)?;
    draw_until_ac(seed, |rng| {
        let mut cons = Vec::new();
        for v in 0..n {
            for w in v + 1..n {
                if rng.gen::<f64>() < density {
                    cons.push(random_relation(rng, v, w, d, tightness));
                }
            }
        }
        inst(vec![(0..d).collect(); n], cons)
    })
}

/// Random tree-structured instance: variable `i > 0` is constrained with a
/// uniformly chosen earlier variable.
pub fn random_tree(n: usize, d: usize, tightness: f64, seed: u64) -> Result<Instance, FixtureError> {
    if n == 0 || d == 0 {
        return Err(FixtureError::BadParams { name: "tree", msg: "n and d must be positive".into() });
    }
    check_unit("tree", "tightness", tightness)?;
    draw_until_ac(seed, |rng| {
        let cons = (1..n)
            .map(|v| {
                let parent = rng.gen_range(0..v);
                random_relation(rng, parent, v, d, tightness)
            })
            .collect();
        inst(vec![(0..d).collect(); n], cons)
    })
}

fn ok_if(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn check_claim(inst: &Instance, claim: &Claim) -> Result<(), String> {
    let oracle = |e: crate::oracle::OracleError| e.to_string();
    match claim {
        Claim::ArcConsistent => ok_if(is_arc_consistent(inst), || "not arc consistent".into()),
        Claim::Satisfiable(want) => {
            let got = solve(inst).map_err(oracle)?.is_some();
            ok_if(got == *want, || format!("oracle says satisfiable = {got}"))
        }
        Claim::SolutionCount(want) => {
            let got = count_solutions(inst).map_err(oracle)?;
            ok_if(got == *want, || format!("oracle counts {got}"))
        }
        Claim::IsSolution(s) => ok_if(inst.is_solution(s), || "not a solution".into()),
        Claim::IsPartialSolution(s) => ok_if(inst.is_partial_solution(s), || "not a partial solution".into()),
        Claim::PartialSolutionWithout(x) => {
            let vars: Vec<VarId> = inst.active_vars().filter(|v| v != x).collect();
            ok_if(solve_on(inst, &vars).map_err(oracle)?.is_some(), || "no partial solution".into())
        }
        Claim::SolutionWith(p) => {
            let mut restricted = inst.clone();
            for a in inst.domain(p.var).values().filter(|&a| a != p.val) {
                restricted.remove_value(p.var, a);
            }
            ok_if(solve(&restricted).map_err(oracle)?.is_some(), || "no solution with it".into())
        }
        Claim::UnsatWithout(p) => {
            let mut restricted = inst.clone();
            restricted.remove_value(p.var, p.val);
            ok_if(solve(&restricted).map_err(oracle)?.is_none(), || "still satisfiable".into())
        }
        Claim::AbsentAt { pattern, x, mappings } => {
            if mappings.is_empty() {
                return Err("no mapping to check".into());
            }
            for m in mappings {
                let found = occurs_at(&pattern.pattern, inst, *x, m).map_err(|e| e.to_string())?;
                let brute = brute_occurs(&pattern.pattern, inst, *x, m).map_err(oracle)?;
                if found.is_some() != brute {
                    return Err(format!("search and brute force disagree under {{{m}}}"));
                }
                if let Some(w) = found {
                    return Err(format!("occurs under {{{m}}} via variables {:?}", w.phi));
                }
            }
            Ok(())
        }
        Claim::AbsentAnywhere(p) => {
            let found = occurs_anywhere(&p.pattern, inst).map_err(|e| e.to_string())?;
            let brute = brute_occurs_anywhere(&p.pattern, inst).map_err(oracle)?;
            if found.is_some() != brute {
                return Err("search and brute force disagree".into());
            }
            ok_if(found.is_none(), || format!("occurs via variables {:?}", found.unwrap().phi))
        }
        Claim::NotValEliminable(p) => {
            for rule in RuleId::VAL_RULES {
                if let Some(m) = val_eliminable(inst, p.var, p.val, rule).map_err(|e| e.to_string())? {
                    return Err(format!("{rule} eliminates it under {{{m}}}"));
                }
            }
            Ok(())
        }
        Claim::UniqueAfterElimination { at, rule, mapping } => {
            let mut reduced = inst.clone();
            let step = eliminate_value(&mut reduced, at.var, at.val, *rule, mapping).map_err(|e| e.to_string())?;
            if step.wipeout.is_some() {
                return Err("arc consistency wiped out a domain".into());
            }
            let singletons = reduced.active_vars().all(|v| reduced.domain(v).len() == 1);
            let count = count_solutions(&reduced).map_err(oracle)?;
            ok_if(singletons && count == 1, || format!("{count} solutions remain, singletons = {singletons}"))
        }
    }
}

/// Checks every claim of the fixture against the oracle and the pattern
/// search.
pub fn verify(f: &Fixture) -> Vec<ClaimCheck> {
    f.claims.iter().map(|c| ClaimCheck { claim: c.to_string(), result: check_claim(&f.instance, c) }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::serialize_instance;

    #[test]
    fn names_resolve() {
        for name in fixture_names() {
            assert_eq!(fixture(name, &[]).unwrap().name, name);
        }
        assert_eq!(fixture("IEXISTS4", &[]).unwrap().name, "I∃4");
        assert_eq!(fixture("i_e4", &[]).unwrap().name, "I∃4");
        assert!(fixture("nope", &[]).is_err());
        assert!(fixture("STAR", &[1]).is_err());
        assert!(fixture("STAR", &[3, 4]).is_err());
    }

    #[test]
    fn random_is_reproducible() {
        let a = serialize_instance(&random_instance(5, 3, 0.5, 0.3, 7).unwrap());
        let b = serialize_instance(&random_instance(5, 3, 0.5, 0.3, 7).unwrap());
        assert_eq!(a, b);
        assert!(is_arc_consistent(&random_instance(5, 3, 0.5, 0.3, 7).unwrap()));
    }

    #[test]
    fn hopeless_draws_are_reported() {
        assert_eq!(random_instance(4, 3, 1.0, 1.0, 1).unwrap_err(), FixtureError::Exhausted(MAX_DRAWS));
        assert_eq!(count_solutions(&random_instance(1, 3, 1.0, 1.0, 1).unwrap()).unwrap(), 3);
    }
}
