use cspprune::fixtures::{fixture, fixture_names, verify, VAL_COUNTEREXAMPLES, VAR_COUNTEREXAMPLES};

#[test]
fn every_fixture_verifies() {
    let mut failures = Vec::new();
    for name in fixture_names() {
        let f = fixture(name, &[]).unwrap();
        for check in verify(&f) {
            if let Err(e) = &check.result {
                failures.push(format!("{name}: {}: {e}", check.claim));
            }
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

#[test]
fn parameterised_fixtures_verify_across_sizes() {
    let cases: &[(&str, &[usize])] = &[
        ("I4K", &[6]),
        ("ISAT3", &[1]),
        ("ISAT3", &[3]),
        ("ISAT2K1", &[1]),
        ("ISAT2K1", &[3]),
        ("I3", &[1]),
        ("I3", &[4]),
        ("I3PLUS", &[2]),
        ("I32K", &[1]),
        ("I32K", &[3]),
        ("STAR", &[7]),
        ("IJ", &[4, 3, 9]),
        ("IJ", &[3, 2, 2]),
    ];
    for (name, params) in cases {
        let f = fixture(name, params).unwrap();
        for check in verify(&f) {
            assert!(check.result.is_ok(), "{name}{params:?}: {}: {:?}", check.claim, check.result);
        }
    }
}

#[test]
fn counterexample_lists_cover_fourteen_fixtures() {
    assert_eq!(VAR_COUNTEREXAMPLES.len() + VAL_COUNTEREXAMPLES.len(), 14);
    for name in VAR_COUNTEREXAMPLES.iter().chain(VAL_COUNTEREXAMPLES.iter()) {
        assert!(fixture(name, &[]).is_ok());
    }
}
