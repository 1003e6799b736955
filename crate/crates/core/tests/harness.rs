use std::collections::BTreeSet;

use num::rational::Ratio;
use oee::harness::experiments::{bins_from_ticks, ErgodicityError};
use oee::harness::{
    bin_timeline, ergodicity_report, export, ingest, load_scenario, run, Engine, EventBody, ExportFormat, Scenario, ScenarioError,
    TraceError,
};
use oee::revision::ExtensionClass;
use oee::universe::{NatureConfig, NoveltyKind, UniverseGenerator};
use proptest::prelude::*;

fn scenario(json: &str) -> Scenario {
    Scenario::from_json(json).unwrap()
}

fn two_agents(seed: u64, ticks: u64) -> Scenario {
    scenario(&format!(
        r#"{{"nature": {{"seed": {seed}}},
            "agents": [{{"id": 1, "niche": [0, 1, 4, 6, 8]}}, {{"id": 2, "niche": [2, 3, 5, 7, 9], "strategy": "heuristic"}}],
            "run": {{"ticks": {ticks}}}}}"#
    ))
}

#[test]
fn runs_are_deterministic_and_replicates_differ() {
    let s = two_agents(3, 15);
    assert_eq!(run(&s, 0).unwrap().to_jsonl(), run(&s, 0).unwrap().to_jsonl());
    assert_ne!(run(&s, 0).unwrap().to_jsonl(), run(&s, 1).unwrap().to_jsonl());
}

#[test]
fn events_are_ordered_by_tick_and_sequence() {
    let t = run(&two_agents(4, 10), 0).unwrap();
    assert!(t.events.windows(2).all(|w| (w[0].tick, w[0].seq) < (w[1].tick, w[1].seq)));
    assert_eq!(t.ticks(), 10);
}

#[test]
fn single_emergence_tick() {
    let s =
        scenario(r#"{"nature": {"seed": 1, "weights": [0, 0, 1], "initial_predicates": 3}, "agents": [{"id": 1}], "run": {"ticks": 1}}"#);
    let t = run(&s, 0).unwrap();
    let count = |f: fn(&EventBody) -> bool| t.events.iter().filter(|e| f(&e.body)).count();
    assert_eq!(count(|b| matches!(b, EventBody::Reveal { .. })), 1);
    assert_eq!(count(|b| matches!(b, EventBody::Observation { .. })), 1);
    assert_eq!(
        count(|b| matches!(
            b,
            EventBody::Revision {
                class: ExtensionClass::Essential,
                ..
            }
        )),
        1
    );
    assert_eq!(count(|b| matches!(b, EventBody::Revision { .. })), 1);
}

#[test]
fn jsonl_round_trip_and_csv_export() {
    let dir = tempfile::tempdir().unwrap();
    let t = run(&two_agents(5, 8), 0).unwrap();
    let path = dir.path().join("trace.jsonl");
    export(&t, ExportFormat::Jsonl, &path).unwrap();
    assert_eq!(ingest(&path).unwrap(), t);

    let one = run(&scenario(r#"{"agents": [{"id": 1}], "run": {"ticks": 1}}"#), 0).unwrap();
    let csv = dir.path().join("metrics.csv");
    export(&one, ExportFormat::Csv, &csv).unwrap();
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "tick,agent,coverage,disjointness,adjacent,class");
}

#[test]
fn export_to_unwritable_path_is_io_error() {
    let t = run(&two_agents(5, 1), 0).unwrap();
    let err = export(&t, ExportFormat::Jsonl, "/nonexistent-dir/trace.jsonl").unwrap_err();
    assert!(matches!(err, TraceError::Io(_)));
}

#[test]
fn malformed_trace_line_reports_line_number() {
    let err = oee::harness::Trace::from_jsonl("{\"seq\":0}\n").unwrap_err();
    assert!(matches!(err, TraceError::Parse { line: 1, .. }));
}

#[test]
fn missing_scenario_is_io_error() {
    assert!(matches!(load_scenario("/nonexistent.json"), Err(ScenarioError::Io(_))));
}

#[test]
fn ergodicity_needs_two_equal_replicates() {
    let s = two_agents(6, 5);
    let a = run(&s, 0).unwrap();
    assert!(matches!(
        ergodicity_report(std::slice::from_ref(&a)),
        Err(ErgodicityError::LengthMismatch(_))
    ));
    let b = run(&two_agents(6, 6), 1).unwrap();
    assert!(matches!(
        ergodicity_report(&[a.clone(), b]),
        Err(ErgodicityError::LengthMismatch(_))
    ));
    let r = ergodicity_report(&[a, run(&s, 1).unwrap()]).unwrap();
    assert_eq!(r.replicates, 2);
    assert!(r.max_coverage() <= Ratio::from_integer(1));
}

#[test]
fn bins_end_at_every_revision_tick() {
    let t = run(&two_agents(7, 20), 0).unwrap();
    let bins = bin_timeline(&t);
    let revisions: BTreeSet<u64> = t
        .events
        .iter()
        .filter(|e| matches!(&e.body, EventBody::Revision { old_hash, new_hash, .. } if old_hash != new_hash))
        .map(|e| e.tick)
        .collect();
    let ends: BTreeSet<u64> = bins.iter().map(|b| b.1).collect();
    assert!(revisions.is_subset(&ends));
    assert_eq!(bins.first().unwrap().0, 1);
    assert_eq!(bins.last().unwrap().1, 20);
}

proptest! {
    #[test]
    fn bins_partition_the_timeline(ticks in prop::collection::btree_set(1u64..40, 0..12), extra in 0u64..5) {
        let end = ticks.iter().max().copied().unwrap_or(1) + extra;
        let bins = bins_from_ticks(&ticks, end);
        prop_assert_eq!(bins.first().unwrap().0, 1);
        prop_assert_eq!(bins.last().unwrap().1, end);
        prop_assert!(bins.windows(2).all(|w| w[1].0 == w[0].1 + 1));
        prop_assert!(bins.iter().all(|b| b.0 <= b.1));
        let ends: BTreeSet<u64> = bins.iter().map(|b| b.1).collect();
        prop_assert!(ticks.is_subset(&ends));
    }
}

#[test]
fn emergence_revisions_are_essential() {
    let mut checked = 0;
    for seed in 0..100 {
        let t = run(&two_agents(seed, 20), 0).unwrap();
        for e in &t.events {
            if let EventBody::Revision {
                class,
                new_predicates,
                retracted,
                ..
            } = &e.body
            {
                if !new_predicates.is_empty() && retracted.is_empty() {
                    assert_eq!(*class, ExtensionClass::Essential, "seed {seed} tick {}", e.tick);
                    checked += 1;
                }
            }
        }
    }
    assert!(checked >= 100, "only {checked} emergence revisions");
}

#[test]
fn agent_theory_differs_from_revealed_while_view_is_partial() {
    for seed in 0..30 {
        let s = two_agents(seed, 30);
        let mut engine = Engine::new(&s, 0).unwrap();
        for _ in 0..s.run.ticks {
            engine.step();
            let revealed = engine.universe().revealed();
            for a in engine.agents() {
                if a.predicates().len() < revealed.predicates().len() {
                    assert!(a.predicates().is_subset(revealed.predicates()));
                    assert_ne!(a.theory(), revealed);
                }
            }
        }
    }
}

#[test]
fn undecided_true_sentence_whenever_view_is_partial() {
    for seed in 0..30 {
        let s = two_agents(seed, 30);
        let mut engine = Engine::new(&s, 0).unwrap();
        for _ in 0..s.run.ticks {
            let from = engine.trace().events.len();
            engine.step();
            let revealed = engine.universe().revealed_predicates().clone();
            let partial: BTreeSet<u32> = engine
                .agents()
                .filter(|a| !revealed.is_subset(a.predicates()))
                .map(|a| a.id())
                .collect();
            for e in &engine.trace().events[from..] {
                if let (EventBody::Metrics(m), Some(id)) = (&e.body, e.agent) {
                    if partial.contains(&id) {
                        assert!(m.undecided_true >= 1 && m.coverage.0 < Ratio::from_integer(1));
                    }
                }
            }
        }
    }
}

#[test]
fn every_fifty_tick_run_has_an_emergence() {
    for seed in 0..100 {
        let config = NatureConfig {
            seed,
            weights: [Ratio::new(1, 2), Ratio::new(3, 10), Ratio::new(1, 5)],
            initial_predicates: 3,
            clause_arity: 2,
        };
        let mut u = UniverseGenerator::new(config).unwrap();
        let mut emerged = 0;
        for _ in 0..50 {
            if u.tick().kind() == NoveltyKind::Emergence {
                emerged += 1;
            }
            assert!(u.revealed().is_satisfied_by(u.actual()), "seed {seed}");
        }
        assert!(emerged >= 1, "seed {seed}");
    }
}
