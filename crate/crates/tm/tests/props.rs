//! Randomized invariants over generated models and the vending fixture.

use std::collections::BTreeSet;

use proptest::prelude::*;
use tm::dsl::{
    parse_events, parse_groups, parse_model, serialize_events, serialize_groups, serialize_model,
};
use tm::harness::enumerate_multisets;
use tm::synth::synth_model;
use tm::{
    build_behavior, carve_auto, carve_manual, conforms, contract_carving, simulate, BehavioralModel,
    InducedKind, Injection, SimError, ThingInstance, Value,
};

type EdgeKey = (String, String, InducedKind, String, String);

fn edge_set(behavior: &BehavioralModel) -> BTreeSet<EdgeKey> {
    behavior
        .edges
        .iter()
        .map(|e| (e.from.clone(), e.to.clone(), e.kind, e.from_node.clone(), e.to_node.clone()))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Serializing a model and parsing the text back is the identity.
    #[test]
    fn model_text_round_trips(seed in 0u64..2000) {
        let (model, events) = synth_model(seed);
        let reparsed = parse_model(&serialize_model(&model)).expect("serialized model parses");
        prop_assert_eq!(&reparsed, &model);
        let ev_reparsed =
            parse_events(&serialize_events(&events), &model).expect("serialized events parse");
        prop_assert_eq!(&ev_reparsed, &events);
    }

    /// Grouping files survive a serialize/parse cycle.
    #[test]
    fn groups_text_round_trips(seed in 0u64..2000, k in 1usize..6) {
        let (model, events) = synth_model(seed);
        let behavior = build_behavior(&model, &events).expect("behavior builds");
        let carving = carve_auto(&behavior, k);
        let groups: Vec<(String, Vec<String>)> =
            carving.parts.iter().map(|p| (p.name.clone(), p.members.clone())).collect();
        let reparsed = parse_groups(&serialize_groups(&groups)).expect("serialized groups parse");
        prop_assert_eq!(reparsed, groups);
    }

    /// Automatic grouping always yields a true partition whose boundary
    /// edges are transfer- or trigger-induced, never plain flows, and the
    /// same grouping passes the manual-grouping validator unchanged.
    #[test]
    fn carving_is_a_partition_with_legal_joints(seed in 0u64..2000, k in 1usize..8) {
        let (model, events) = synth_model(seed);
        let behavior = build_behavior(&model, &events).expect("behavior builds");
        let carving = carve_auto(&behavior, k);

        let all: BTreeSet<&str> = events.events.iter().map(|e| e.name.as_str()).collect();
        let mut covered = BTreeSet::new();
        for part in &carving.parts {
            prop_assert!(!part.members.is_empty(), "empty part {}", part.name);
            for m in &part.members {
                prop_assert!(covered.insert(m.as_str()), "event {} in two parts", m);
            }
        }
        prop_assert_eq!(&covered, &all);

        let part_of = carving.part_of();
        for joint in &carving.joints {
            prop_assert_ne!(joint.kind, InducedKind::PlainFlow);
            prop_assert_ne!(part_of.get(joint.from.as_str()), part_of.get(joint.to.as_str()));
        }

        let pairs: Vec<(String, Vec<String>)> =
            carving.parts.iter().map(|p| (p.name.clone(), p.members.clone())).collect();
        let manual = carve_manual(&behavior, &pairs).expect("auto grouping validates manually");
        prop_assert_eq!(&manual.parts, &carving.parts);
        prop_assert_eq!(&manual.joints, &carving.joints);

        let contracted = contract_carving(&behavior, &carving);
        prop_assert_eq!(contracted.events.events.len(), carving.parts.len());
        prop_assert_eq!(contracted.edges.len(), carving.joints.len());
    }

    /// The derived behavioral graph does not depend on the order events
    /// were declared in.
    #[test]
    fn behavior_ignores_event_declaration_order(seed in 0u64..2000) {
        let (model, events) = synth_model(seed);
        let behavior = build_behavior(&model, &events).expect("behavior builds");

        let mut reversed = events.clone();
        reversed.events.reverse();
        let behavior_rev = build_behavior(&model, &reversed).expect("behavior builds reversed");

        prop_assert_eq!(edge_set(&behavior), edge_set(&behavior_rev));
        prop_assert_eq!(&behavior.node_event, &behavior_rev.node_event);
        prop_assert_eq!(carve_auto(&behavior, 3).parts, carve_auto(&behavior_rev, 3).parts);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Runs are deterministic, conform to the derived event order, stop
    /// exactly at the budget boundary, and route every coin into the box
    /// matching its denomination.
    #[test]
    fn coin_runs_are_deterministic_and_conserving(
        coins in prop::collection::vec(prop::sample::select(vec![25i64, 50, 100]), 1..6),
    ) {
        let fx = tm::fixtures::load_fixture("vending").expect("vending fixture");
        let behavior = build_behavior(&fx.model, &fx.events).expect("behavior builds");

        let injections: Vec<Injection> = coins
            .iter()
            .map(|v| {
                let mut inst = ThingInstance::new("coin");
                inst.attrs.insert("value".into(), Value::Int(*v));
                Injection::new("u_coin_create", inst)
            })
            .collect();

        let trace = simulate(&fx.model, &injections, 10_000).expect("run completes");
        let again = simulate(&fx.model, &injections, 10_000).expect("run completes");
        prop_assert_eq!(&trace, &again);

        let n = trace.firings.len() as u64;
        let exact = simulate(&fx.model, &injections, n).expect("exact budget suffices");
        prop_assert_eq!(&exact, &trace);
        match simulate(&fx.model, &injections, n - 1) {
            Err(SimError::StepBudgetExhausted { trace: partial }) => {
                prop_assert_eq!(partial.firings.len() as u64, n - 1);
            }
            other => prop_assert!(false, "expected budget exhaustion, got {:?}", other),
        }

        let report = conforms(&trace, &behavior).expect("trace is covered");
        prop_assert!(report.violations.is_empty(), "violations: {:?}", report.violations);

        for denom in [25i64, 50, 100] {
            let expected = coins.iter().filter(|v| **v == denom).count();
            let node = format!("m_dep{denom}");
            let fired = trace.firings.iter().filter(|f| f.node == node).count();
            prop_assert_eq!(fired, expected, "box for {} coins", denom);
        }
    }
}

proptest! {
    /// Multiset enumeration agrees with a brute-force count-vector sweep
    /// and comes out sorted by size, then by per-value counts.
    #[test]
    fn multiset_enumeration_matches_brute_force(min in 0usize..4, max in 0usize..6) {
        let values = [Value::Int(25), Value::Int(50), Value::Int(100)];
        let got = enumerate_multisets(&values, min, max);

        let mut expected = BTreeSet::new();
        for a in 0..=max {
            for b in 0..=max {
                for c in 0..=max {
                    let size = a + b + c;
                    if size < min || size > max {
                        continue;
                    }
                    let mut ms = Vec::new();
                    ms.extend(std::iter::repeat(values[0].clone()).take(a));
                    ms.extend(std::iter::repeat(values[1].clone()).take(b));
                    ms.extend(std::iter::repeat(values[2].clone()).take(c));
                    expected.insert(ms);
                }
            }
        }
        let got_set: BTreeSet<Vec<Value>> = got.iter().cloned().collect();
        prop_assert_eq!(got_set.len(), got.len(), "enumeration repeats a multiset");
        prop_assert_eq!(&got_set, &expected);

        let key = |ms: &Vec<Value>| {
            let counts: Vec<usize> =
                values.iter().map(|v| ms.iter().filter(|m| *m == v).count()).collect();
            (ms.len(), counts)
        };
        for pair in got.windows(2) {
            prop_assert!(key(&pair[0]) < key(&pair[1]), "enumeration out of order");
        }
    }
}
