use maxrep::scenarios::{run, RunParams, ScenarioError, ScenarioId};

fn small(id: ScenarioId) -> RunParams {
    let mut p = id.defaults();
    p.seed = 7;
    p.n_paths = p.n_paths.min(2_000);
    if id == ScenarioId::S4ContinuousDoob {
        p.n_paths = 400;
        p.n_inner = 500;
        p.dt = 1e-2;
    }
    if id == ScenarioId::S3Counterexample {
        p.n_inner = 10_000;
    }
    p
}

#[test]
fn every_scenario_matches_its_expected_verdicts() {
    for id in ScenarioId::ALL {
        let r = run(id, &small(id)).unwrap_or_else(|e| panic!("{id}: {e}"));
        let bad: Vec<_> = r.report.mismatches().iter().map(|c| c.name.clone()).collect();
        assert!(bad.is_empty(), "{id}: {bad:?}");
        assert_eq!(r.report.scenario, id.as_str());
    }
}

#[test]
fn reports_are_byte_identical_for_equal_configs() {
    for id in [ScenarioId::S1FirstJump, ScenarioId::S3Counterexample, ScenarioId::S7Interpolation] {
        let mut p = small(id);
        p.n_paths = 500;
        let a = run(id, &p).unwrap().report.to_json();
        let b = run(id, &p).unwrap().report.to_json();
        assert_eq!(a, b, "{id}");
    }
}

#[test]
fn refutation_scenarios_succeed_by_refuting() {
    let r = run(ScenarioId::S5Deterministic, &small(ScenarioId::S5Deterministic)).unwrap();
    assert!(r.report.matches_expected());
    assert!(r.report.checks.iter().any(|c| !c.pass && !c.expected));
    let s3 = run(ScenarioId::S3Counterexample, &small(ScenarioId::S3Counterexample)).unwrap();
    let cert = s3.report.check("candidate_gamma_a_certificate_valid").unwrap();
    assert!(!cert.pass && !cert.expected);
}

#[test]
fn s1_and_s2_share_s_for_equal_seeds() {
    let p = small(ScenarioId::S1FirstJump);
    let a = run(ScenarioId::S1FirstJump, &p).unwrap();
    let b = run(ScenarioId::S2Nonunique, &p).unwrap();
    assert_eq!(a.ensemble.scalars("S").unwrap(), b.ensemble.scalars("S").unwrap());
}

#[test]
fn jump_times_sit_on_the_lattice() {
    let r = run(ScenarioId::S2Nonunique, &small(ScenarioId::S2Nonunique)).unwrap();
    for name in ["S", "S_prime"] {
        for s in r.ensemble.scalars(name).unwrap() {
            assert_eq!(s, maxrep::scenarios::snap_to_lattice(s));
            assert!(s > 0.0);
        }
    }
}

#[test]
fn unknown_ids_and_bad_parameters_are_rejected() {
    assert!(matches!("s9_nothing".parse::<ScenarioId>(), Err(ScenarioError::UnknownId(_))));
    let mut p = ScenarioId::S1FirstJump.defaults();
    p.n_paths = 0;
    assert!(run(ScenarioId::S1FirstJump, &p).is_err());
    let mut p = ScenarioId::S1FirstJump.defaults();
    p.dt = -1.0;
    assert!(run(ScenarioId::S1FirstJump, &p).is_err());
    let mut p = ScenarioId::S4ContinuousDoob.defaults();
    p.horizon = 5.0;
    assert!(matches!(run(ScenarioId::S4ContinuousDoob, &p), Err(ScenarioError::BadParams(_))));
}
