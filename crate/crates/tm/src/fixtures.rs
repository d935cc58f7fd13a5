//! Built-in example models.
//!
//! Two worked systems ship with the library: a drink vending machine and an
//! online shopping flow. Each comes as model text, an event partition, a
//! named super-event grouping, and ready-made injection lists and scenario
//! scripts. Two deliberately broken variants support negative testing: one
//! miscomputes change, one drops the guard that stops the account-matching
//! loop.
//!
//! A modeling note on the vending machine: change is computed from the
//! running amount and the looked-up price, not by counting coins back out
//! of the denomination boxes. The box-processing stage still sits between
//! the comparison outcome and the change creation, so the stage ordering is
//! unchanged even though the boxes only collect.

use crate::dsl::{parse_events, parse_groups, parse_model};
use crate::events::EventsModel;
use crate::model::StaticModel;

pub const VENDING_TM: &str = include_str!("../fixtures/vending.tm");
pub const VENDING_EV: &str = include_str!("../fixtures/vending.ev");
pub const VENDING_GRP: &str = include_str!("../fixtures/vending.grp");
pub const VENDING_FAULTY_CHANGE_TM: &str = include_str!("../fixtures/vending_faulty_change.tm");
pub const VENDING_DRINKS_SC: &str = include_str!("../fixtures/vending_drinks.sc");
pub const VENDING_COINS_SC: &str = include_str!("../fixtures/vending_coins.sc");
pub const VENDING_OUTPUTS_SC: &str = include_str!("../fixtures/vending_outputs.sc");
pub const VENDING_COLA_INJ: &str = include_str!("../fixtures/vending_cola.inj");
pub const VENDING_SHORT_INJ: &str = include_str!("../fixtures/vending_short.inj");

pub const SHOPPING_TM: &str = include_str!("../fixtures/shopping.tm");
pub const SHOPPING_EV: &str = include_str!("../fixtures/shopping.ev");
pub const SHOPPING_GRP: &str = include_str!("../fixtures/shopping.grp");
pub const SHOPPING_NO_ACCOUNT_GUARD_TM: &str =
    include_str!("../fixtures/shopping_no_account_guard.tm");
pub const SHOPPING_RUN_INJ: &str = include_str!("../fixtures/shopping_run.inj");

/// Model names accepted by [`load_fixture`].
pub const NAMES: [&str; 4] =
    ["vending", "shopping", "vending_faulty_change", "shopping_no_account_guard"];

/// A parsed fixture: the model plus its event partition and super-event
/// grouping. Broken variants share the healthy model's events and groups.
pub struct FixtureSet {
    pub model: StaticModel,
    pub events: EventsModel,
    pub groups: Vec<(String, Vec<String>)>,
}

pub fn load_fixture(name: &str) -> Option<FixtureSet> {
    let (tm, ev, grp) = match name {
        "vending" => (VENDING_TM, VENDING_EV, VENDING_GRP),
        "vending_faulty_change" => (VENDING_FAULTY_CHANGE_TM, VENDING_EV, VENDING_GRP),
        "shopping" => (SHOPPING_TM, SHOPPING_EV, SHOPPING_GRP),
        "shopping_no_account_guard" => (SHOPPING_NO_ACCOUNT_GUARD_TM, SHOPPING_EV, SHOPPING_GRP),
        _ => return None,
    };
    let model = parse_model(tm).expect("embedded model text parses");
    let events = parse_events(ev, &model).expect("embedded events text parses");
    let groups = parse_groups(grp).expect("embedded groups text parses");
    Some(FixtureSet { model, events, groups })
}

/// Raw text of a built-in model, by the same names as [`load_fixture`].
pub fn model_source(name: &str) -> Option<&'static str> {
    match name {
        "vending" => Some(VENDING_TM),
        "vending_faulty_change" => Some(VENDING_FAULTY_CHANGE_TM),
        "shopping" => Some(SHOPPING_TM),
        "shopping_no_account_guard" => Some(SHOPPING_NO_ACCOUNT_GUARD_TM),
        _ => None,
    }
}

/// Raw text of the event partition belonging to a built-in model.
pub fn events_source(name: &str) -> Option<&'static str> {
    match name {
        "vending" | "vending_faulty_change" => Some(VENDING_EV),
        "shopping" | "shopping_no_account_guard" => Some(SHOPPING_EV),
        _ => None,
    }
}

/// Raw text of the super-event grouping belonging to a built-in model.
pub fn groups_source(name: &str) -> Option<&'static str> {
    match name {
        "vending" | "vending_faulty_change" => Some(VENDING_GRP),
        "shopping" | "shopping_no_account_guard" => Some(SHOPPING_GRP),
        _ => None,
    }
}

/// Every file shipped for a fixture family, as `(file name, text)` pairs.
pub fn fixture_files(family: &str) -> Option<Vec<(&'static str, &'static str)>> {
    match family {
        "vending" => Some(vec![
            ("vending.tm", VENDING_TM),
            ("vending.ev", VENDING_EV),
            ("vending.grp", VENDING_GRP),
            ("vending_drinks.sc", VENDING_DRINKS_SC),
            ("vending_coins.sc", VENDING_COINS_SC),
            ("vending_outputs.sc", VENDING_OUTPUTS_SC),
            ("vending_cola.inj", VENDING_COLA_INJ),
            ("vending_short.inj", VENDING_SHORT_INJ),
            ("vending_faulty_change.tm", VENDING_FAULTY_CHANGE_TM),
        ]),
        "shopping" => Some(vec![
            ("shopping.tm", SHOPPING_TM),
            ("shopping.ev", SHOPPING_EV),
            ("shopping.grp", SHOPPING_GRP),
            ("shopping_run.inj", SHOPPING_RUN_INJ),
            ("shopping_no_account_guard.tm", SHOPPING_NO_ACCOUNT_GUARD_TM),
        ]),
        _ => None,
    }
}

/// Look up a built-in injection list by name.
pub fn injection_list(name: &str) -> Option<&'static str> {
    match name {
        "vending_cola" => Some(VENDING_COLA_INJ),
        "vending_short" => Some(VENDING_SHORT_INJ),
        "shopping_run" => Some(SHOPPING_RUN_INJ),
        _ => None,
    }
}

/// Look up a built-in scenario script by name.
pub fn scenario_text(name: &str) -> Option<&'static str> {
    match name {
        "drinks" => Some(VENDING_DRINKS_SC),
        "coins" => Some(VENDING_COINS_SC),
        "outputs" => Some(VENDING_OUTPUTS_SC),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::validate_events;
    use crate::model::check_static;

    #[test]
    fn all_fixtures_load_clean() {
        for name in NAMES {
            let f = load_fixture(name).unwrap();
            let diags = check_static(&f.model);
            assert!(diags.is_empty(), "{name}: {diags:?}");
            let ev_diags = validate_events(&f.model, &f.events);
            assert!(ev_diags.is_empty(), "{name}: {ev_diags:?}");
        }
        assert!(load_fixture("nope").is_none());
    }

    #[test]
    fn fixture_shapes() {
        let vending = load_fixture("vending").unwrap();
        assert_eq!(vending.model.nodes.len(), 64);
        assert_eq!(vending.events.events.len(), 22);
        assert_eq!(vending.groups.len(), 3);
        let shopping = load_fixture("shopping").unwrap();
        assert_eq!(shopping.model.nodes.len(), 82);
        assert_eq!(shopping.events.events.len(), 25);
        assert_eq!(shopping.groups.len(), 5);
    }
}
