//! End-to-end runs of the bundled example models: load, check, derive the
//! behavioral graph, group it, simulate injection lists, and check traces
//! against the derived ordering.

use std::collections::BTreeSet;

use tm::dsl::{parse_injections, parse_scenario};
use tm::fixtures;
use tm::harness::{chain_scenarios, run_scenario, ExecMode, ScenarioContext};
use tm::model::Value;
use tm::{build_behavior, carve_auto, check_static, conforms, simulate, InducedKind, SimError};

fn part_sets(parts: &[(String, Vec<String>)]) -> BTreeSet<BTreeSet<&str>> {
    parts.iter().map(|(_, ms)| ms.iter().map(String::as_str).collect()).collect()
}

#[test]
fn vending_purchase_dispenses_drink_and_change() {
    let f = fixtures::load_fixture("vending").unwrap();
    assert!(check_static(&f.model).is_empty());
    let injections = parse_injections(fixtures::VENDING_COLA_INJ).unwrap();
    let trace = simulate(&f.model, &injections, 10_000).unwrap();

    let count = |n: &str| trace.firings.iter().filter(|fr| fr.node == n).count();
    assert_eq!(count("u_drink_rcv"), 1, "the drink reaches the user");
    assert_eq!(count("u_msg_rcv"), 0, "no shortfall message on exact payment");
    assert_eq!(count("pf_rec_retrieve"), 1, "cola is the first catalog record");
    assert_eq!(count("m_dep100"), 1, "the coin lands in the 100 box");

    let change = trace.firings.iter().find(|fr| fr.node == "m_change_create").unwrap();
    assert_eq!(change.produced[0].attrs["value"], Value::Int(0), "exact payment, zero change");

    let behavior = build_behavior(&f.model, &f.events).unwrap();
    let report = conforms(&trace, &behavior).unwrap();
    assert!(report.ok, "unexpected violations: {:?}", report.violations);
    assert_eq!(report.checked, trace.firings.len());
}

#[test]
fn vending_short_payment_sends_message() {
    let f = fixtures::load_fixture("vending").unwrap();
    let injections = parse_injections(fixtures::VENDING_SHORT_INJ).unwrap();
    let trace = simulate(&f.model, &injections, 10_000).unwrap();

    let count = |n: &str| trace.firings.iter().filter(|fr| fr.node == n).count();
    assert_eq!(count("u_msg_rcv"), 1);
    assert_eq!(count("u_drink_rcv"), 0);
    assert_eq!(count("m_change_create"), 0);
    let msg = trace.firings.iter().find(|fr| fr.node == "m_msg_create").unwrap();
    assert_eq!(msg.produced[0].attrs["text"], Value::Text("insufficient amount".into()));

    let behavior = build_behavior(&f.model, &f.events).unwrap();
    assert!(conforms(&trace, &behavior).unwrap().ok);
}

#[test]
fn vending_grouping_matches_shipped_groups() {
    let f = fixtures::load_fixture("vending").unwrap();
    let behavior = build_behavior(&f.model, &f.events).unwrap();
    let carving = carve_auto(&behavior, 3);
    assert!(carving.notices.is_empty(), "{:?}", carving.notices);

    let got: BTreeSet<BTreeSet<&str>> = carving
        .parts
        .iter()
        .map(|p| p.members.iter().map(String::as_str).collect())
        .collect();
    assert_eq!(got, part_sets(&f.groups));

    // The seams between the selection/pricing part and the comparison part:
    // one gate on the amount readout, one price hand-over.
    assert_eq!(carving.joints.len(), 2);
    let kinds: Vec<(&str, &str, InducedKind)> =
        carving.joints.iter().map(|j| (j.from.as_str(), j.to.as_str(), j.kind)).collect();
    assert!(kinds.contains(&("E8", "E13", InducedKind::Trigger)));
    assert!(kinds.contains(&("E9", "E14", InducedKind::TransferFlow)));
}

#[test]
fn shopping_grouping_matches_shipped_groups() {
    let f = fixtures::load_fixture("shopping").unwrap();
    let behavior = build_behavior(&f.model, &f.events).unwrap();
    let carving = carve_auto(&behavior, 5);
    assert!(carving.notices.is_empty(), "{:?}", carving.notices);
    let got: BTreeSet<BTreeSet<&str>> = carving
        .parts
        .iter()
        .map(|p| p.members.iter().map(String::as_str).collect())
        .collect();
    assert_eq!(got, part_sets(&f.groups));

    // Exactly the three cross-part transfers are severed, and no plain flow.
    let transfers =
        carving.joints.iter().filter(|j| j.kind == InducedKind::TransferFlow).count();
    assert_eq!(transfers, 3);
    assert!(carving.joints.iter().all(|j| j.kind != InducedKind::PlainFlow));
}

#[test]
fn shopping_order_reaches_online_processor() {
    let f = fixtures::load_fixture("shopping").unwrap();
    assert!(check_static(&f.model).is_empty());
    let injections = parse_injections(fixtures::SHOPPING_RUN_INJ).unwrap();
    let trace = simulate(&f.model, &injections, 10_000).unwrap();

    let count = |n: &str| trace.firings.iter().filter(|fr| fr.node == n).count();
    assert_eq!(count("op_inv_rcv"), 1, "the invoice arrives online");
    assert_eq!(count("br_inv_rcv"), 0, "the branch is not involved");
    assert_eq!(count("l_rec_retrieve"), 1, "alice is the first stored account");
    assert_eq!(count("d_crec_retrieve"), 2, "SAVE50 is the second stored code");

    let delivered = trace.firings.iter().find(|fr| fr.node == "op_inv_rcv").unwrap();
    assert_eq!(delivered.consumed[0].attrs["amount"], Value::Int(450), "500 less the 50 discount");

    let behavior = build_behavior(&f.model, &f.events).unwrap();
    let report = conforms(&trace, &behavior).unwrap();
    assert!(report.ok, "unexpected violations: {:?}", report.violations);
}

#[test]
fn shopping_login_retries_until_match() {
    let f = fixtures::load_fixture("shopping").unwrap();
    let text = fixtures::SHOPPING_RUN_INJ.replace("alice", "carol");
    let injections = parse_injections(&text).unwrap();
    let trace = simulate(&f.model, &injections, 10_000).unwrap();
    let count = |n: &str| trace.firings.iter().filter(|fr| fr.node == n).count();
    assert_eq!(count("l_rec_retrieve"), 3, "alice and bob are tried first");
    assert_eq!(count("l_ne_proc"), 2);
    assert_eq!(count("op_inv_rcv"), 1);
}

#[test]
fn unguarded_retry_loop_exhausts_budget() {
    let f = fixtures::load_fixture("shopping_no_account_guard").unwrap();
    assert!(check_static(&f.model).is_empty(), "the flaw is behavioral, not structural");
    let injections = parse_injections(fixtures::SHOPPING_RUN_INJ).unwrap();
    match simulate(&f.model, &injections, 2_000) {
        Err(SimError::StepBudgetExhausted { trace }) => {
            let retrievals =
                trace.firings.iter().filter(|fr| fr.node == "l_rec_retrieve").count();
            assert!(retrievals > 10, "the retry loop spins: {retrievals} retrievals");
        }
        other => panic!("expected a budget error, got {other:?}"),
    }
}

#[test]
fn vending_scenarios_chain_and_pass() {
    let f = fixtures::load_fixture("vending").unwrap();
    let behavior = build_behavior(&f.model, &f.events).unwrap();
    let carving = carve_auto(&behavior, 3);
    let ctx = ScenarioContext {
        model: &f.model,
        behavior: &behavior,
        carving: Some(&carving),
        max_steps: 10_000,
    };
    let scenarios: Vec<_> = ["drinks", "coins", "outputs"]
        .iter()
        .map(|n| parse_scenario(fixtures::scenario_text(n).unwrap()).unwrap())
        .collect();
    let reports = chain_scenarios(&ctx, &scenarios, ExecMode::Sequential).unwrap();
    assert_eq!(reports.len(), 3);
    for r in &reports {
        assert!(r.passed(), "{}: {:?}", r.scenario, r.failures);
    }
    assert_eq!(reports[0].cases_total, 10);
    assert_eq!(reports[1].cases_total, 55);
    assert_eq!(reports[2].cases_total, 190, "19 reachable totals x 10 prices");

    let amounts = &reports[1].outputs["amount"];
    assert_eq!(amounts.len(), 19);
    assert_eq!(amounts.first(), Some(&Value::Int(25)));
    assert_eq!(amounts.last(), Some(&Value::Int(500)));
}

#[test]
fn faulty_change_fails_only_the_output_scenario() {
    let good = fixtures::load_fixture("vending").unwrap();
    let bad = fixtures::load_fixture("vending_faulty_change").unwrap();
    let behavior = build_behavior(&bad.model, &bad.events).unwrap();
    let carving = carve_auto(&behavior, 3);
    let ctx = ScenarioContext {
        model: &bad.model,
        behavior: &behavior,
        carving: Some(&carving),
        max_steps: 10_000,
    };
    let scenarios: Vec<_> = ["drinks", "coins", "outputs"]
        .iter()
        .map(|n| parse_scenario(fixtures::scenario_text(n).unwrap()).unwrap())
        .collect();

    let drinks = run_scenario(&ctx, &scenarios[0], &[], ExecMode::Sequential).unwrap();
    let coins = run_scenario(&ctx, &scenarios[1], &[], ExecMode::Sequential).unwrap();
    assert!(drinks.passed() && coins.passed(), "the fault hides outside these stages");

    let outputs =
        run_scenario(&ctx, &scenarios[2], &[drinks.clone(), coins.clone()], ExecMode::Sequential)
            .unwrap();
    assert!(!outputs.passed());
    // Exactly the covered purchases break: change is asserted only when the
    // amount covers the price.
    let amounts = &coins.outputs["amount"];
    let prices = &drinks.outputs["price"];
    let expected_failures = amounts
        .iter()
        .flat_map(|a| prices.iter().map(move |p| (a, p)))
        .filter(|(a, p)| a >= p)
        .count();
    assert_eq!(outputs.cases_total - outputs.cases_passed, expected_failures);
    assert!(outputs.failures.iter().all(|fail| fail.case.contains("amount")));

    // The healthy model passes the same chained run.
    let behavior_ok = build_behavior(&good.model, &good.events).unwrap();
    let carving_ok = carve_auto(&behavior_ok, 3);
    let ctx_ok = ScenarioContext {
        model: &good.model,
        behavior: &behavior_ok,
        carving: Some(&carving_ok),
        max_steps: 10_000,
    };
    let reports = chain_scenarios(&ctx_ok, &scenarios, ExecMode::Sequential).unwrap();
    assert!(reports.iter().all(|r| r.passed()));
}

#[test]
fn parallel_and_sequential_reports_agree() {
    let f = fixtures::load_fixture("vending").unwrap();
    let behavior = build_behavior(&f.model, &f.events).unwrap();
    let carving = carve_auto(&behavior, 3);
    let ctx = ScenarioContext {
        model: &f.model,
        behavior: &behavior,
        carving: Some(&carving),
        max_steps: 10_000,
    };
    let coins = parse_scenario(fixtures::scenario_text("coins").unwrap()).unwrap();
    let mut seq = run_scenario(&ctx, &coins, &[], ExecMode::Sequential).unwrap();
    let mut par = run_scenario(&ctx, &coins, &[], ExecMode::Parallel).unwrap();
    // Wall time and the which-mode-actually-ran notice are run context,
    // not results; everything else must match exactly.
    seq.wall_ms = 0;
    par.wall_ms = 0;
    seq.notices.clear();
    par.notices.clear();
    assert_eq!(seq, par);
}
