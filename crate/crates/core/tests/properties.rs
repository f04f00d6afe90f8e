use proptest::prelude::*;

use cspprune::ac::{enforce_ac, is_arc_consistent};
use cspprune::catalog::{all_entries, get_pattern};
use cspprune::engine::{preprocess, rule_occurs, val_eliminable, var_eliminable, ElimRecord, EngineConfig, PhasePolicy, RuleId};
use cspprune::fixtures::{fixture, fixture_names, random_instance};
use cspprune::format::{fingerprint, parse_instance, parse_pattern, parse_trace, serialize_instance, serialize_pattern, serialize_trace};
use cspprune::oracle::enumerate_solutions;
use cspprune::pattern::{equivalent, occurs_at, occurs_generic_at};
use cspprune::{Instance, ValueMapping};

fn instance() -> impl Strategy<Value = Instance> {
    (2usize..=5, 2usize..=4, 0.3f64..=1.0, 0.0f64..=0.5, any::<u64>())
        .prop_filter_map("wiped out", |(n, d, density, tightness, seed)| {
            random_instance(n, d, density, tightness, seed).ok()
        })
}

fn config() -> impl Strategy<Value = EngineConfig> {
    (any::<bool>(), any::<bool>(), any::<bool>()).prop_map(|(vars, vals, values_first)| {
        let mut cfg = match (vars, vals) {
            (false, true) => EngineConfig::default().without_var_rules(),
            (true, false) => EngineConfig::default().without_val_rules(),
            _ => EngineConfig::default(),
        };
        if values_first {
            cfg.phase_policy = PhasePolicy::ValuesFirst;
        }
        cfg
    })
}

#[test]
fn fixtures_round_trip_through_the_text_format() {
    for name in fixture_names() {
        let inst = fixture(name, &[]).unwrap().instance;
        let text = serialize_instance(&inst);
        let back = parse_instance(&text).unwrap();
        assert_eq!(back, inst, "{name}");
        assert_eq!(serialize_instance(&back), text, "{name}");
    }
}

#[test]
fn catalog_patterns_equal_their_relabellings() {
    for e in all_entries() {
        let p = &e.pattern;
        let n = p.var_count();
        let rev: Vec<usize> = (0..n).rev().collect();
        let q = p.permuted(&rev);
        assert!(equivalent(p, p), "{}", e.name);
        assert!(equivalent(p, &q) && equivalent(&q, p), "{}", e.name);
        assert!(equivalent(&parse_pattern(&serialize_pattern(p)).unwrap(), &q), "{}", e.name);
    }
    let btp = get_pattern("BTP").unwrap().pattern;
    let snake = get_pattern("∃snake").unwrap().pattern;
    assert!(!equivalent(&btp, &snake));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn instance_text_round_trips(inst in instance()) {
        let back = parse_instance(&serialize_instance(&inst)).unwrap();
        prop_assert_eq!(fingerprint(&back), fingerprint(&inst));
        prop_assert_eq!(back, inst);
    }

    #[test]
    fn ac_is_idempotent_and_keeps_solutions(inst in instance(), extra in 0usize..4) {
        let mut tightened = inst.clone();
        let vars: Vec<usize> = tightened.active_vars().collect();
        for v in vars.into_iter().take(extra) {
            let first = tightened.domain(v).first().unwrap();
            if tightened.domain(v).len() > 1 {
                tightened.remove_value(v, first);
            }
        }
        let before = enumerate_solutions(&tightened).unwrap();
        let r = enforce_ac(&mut tightened);
        if r.wipeout.is_none() {
            prop_assert!(is_arc_consistent(&tightened));
            prop_assert!(enforce_ac(&mut tightened.clone()).removed.is_empty());
            prop_assert_eq!(enumerate_solutions(&tightened).unwrap(), before);
        } else {
            prop_assert!(before.is_empty());
        }
    }

    #[test]
    fn cache_does_not_change_the_trace(inst in instance(), cfg in config()) {
        let cached = preprocess(&inst, &cfg).unwrap();
        let uncached = preprocess(&inst, &EngineConfig { cache: false, ..cfg }).unwrap();
        prop_assert_eq!(cached.trace, uncached.trace);
        prop_assert_eq!(cached.outcome, uncached.outcome);
    }

    #[test]
    fn traces_replay_undo_and_round_trip(inst in instance(), cfg in config()) {
        let pre = preprocess(&inst, &cfg).unwrap();
        let bound = inst.var_count() + inst.active_vars().map(|v| inst.domain(v).len()).sum::<usize>();
        prop_assert!(pre.trace.len() <= bound);
        let mut state = inst.clone();
        pre.trace.replay(&mut state).unwrap();
        prop_assert!(state.identical(&pre.instance));
        pre.trace.undo(&mut state).unwrap();
        prop_assert!(state.identical(&inst));
        let parsed = parse_trace(&serialize_trace(&pre.trace), &inst).unwrap();
        prop_assert_eq!(parsed, pre.trace);
    }

    #[test]
    fn var_elimination_keeps_arc_consistency(inst in instance()) {
        let pre = preprocess(&inst, &EngineConfig::default().without_val_rules()).unwrap();
        let mut state = inst.clone();
        for rec in &pre.trace.records {
            rec.apply(&mut state).unwrap();
            let is_var = matches!(rec, ElimRecord::Var { .. });
            prop_assert!(is_var);
            prop_assert!(is_arc_consistent(&state));
        }
    }

    #[test]
    fn reduced_instances_are_fixpoints(inst in instance()) {
        let pre = preprocess(&inst, &EngineConfig::default()).unwrap();
        prop_assume!(pre.outcome == cspprune::engine::Outcome::Reduced);
        let out = &pre.instance;
        for x in out.active_vars() {
            for rule in RuleId::VAR_RULES {
                prop_assert!(var_eliminable(out, x, rule).unwrap().is_none());
            }
            for b in out.domain(x).values() {
                for rule in RuleId::VAL_RULES {
                    prop_assert!(val_eliminable(out, x, b, rule).unwrap().is_none());
                }
            }
        }
    }

    #[test]
    fn detectors_agree_with_generic_search(inst in instance(), pick in any::<prop::sample::Index>()) {
        let x = pick.index(inst.var_count());
        let dom: Vec<_> = inst.domain(x).values().collect();
        for rule in RuleId::ALL {
            let p = rule.pattern();
            let maps: Vec<ValueMapping> = match p.existential().len() {
                0 => vec![ValueMapping::empty()],
                1 => dom.iter().map(|&d| ValueMapping::new([(0, d)])).collect(),
                _ => dom.iter().flat_map(|&d| dom.iter().filter(move |&&b| b != d).map(move |&b| ValueMapping::new([(0, d), (1, b)]))).collect(),
            };
            for m in maps {
                let fast = rule_occurs(&inst, rule, x, &m).unwrap();
                prop_assert_eq!(fast, occurs_at(&p, &inst, x, &m).unwrap().is_some(), "{} at {} under {}", rule, x, m);
                if rule != RuleId::Ns {
                    prop_assert_eq!(fast, occurs_generic_at(&p, &inst, x, &m).unwrap(), "generic {} at {} under {}", rule, x, m);
                }
            }
        }
    }
}
