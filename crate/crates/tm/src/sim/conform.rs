//! Trace conformance against a behavioral model.
//!
//! A trace conforms when every firing of an event with behavioral
//! predecessors is preceded by some firing of at least one of those
//! predecessors. Injected firings are exempt — they are the run's external
//! starting points — and once an event has been injected, later ordinary
//! firings of the same event inherit that exemption (the outside world
//! already started it).

use super::{SimError, Trace};
use crate::events::BehavioralModel;
use crate::model::natural_cmp;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// One out-of-order firing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub step: u64,
    pub node: String,
    pub event: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConformanceReport {
    pub ok: bool,
    /// Number of firings examined.
    pub checked: usize,
    pub violations: Vec<Violation>,
}

/// Check every firing of `trace` against the event ordering that `behavior`
/// implies. Fails fast only on structural problems (a node the behavioral
/// model does not cover); ordering violations are collected, not fatal.
pub fn conforms(trace: &Trace, behavior: &BehavioralModel) -> Result<ConformanceReport, SimError> {
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    let mut injected_seen: BTreeSet<&str> = BTreeSet::new();
    let mut violations = Vec::new();

    for f in &trace.firings {
        let event = behavior
            .event_of(&f.node)
            .ok_or_else(|| SimError::UnknownTraceNode { step: f.step, node: f.node.clone() })?;
        if !f.injected && !injected_seen.contains(event) {
            let preds = behavior.predecessors(event);
            if !preds.is_empty() && !preds.iter().any(|p| seen.contains(*p)) {
                let mut names: Vec<&str> = preds.into_iter().collect();
                names.sort_by(|a, b| natural_cmp(a, b));
                violations.push(Violation {
                    step: f.step,
                    node: f.node.clone(),
                    event: event.to_string(),
                    message: format!(
                        "event {event} fired before any of its predecessors ({})",
                        names.join(", ")
                    ),
                });
            }
        }
        if f.injected {
            injected_seen.insert(event);
        }
        seen.insert(event);
    }

    Ok(ConformanceReport { ok: violations.is_empty(), checked: trace.firings.len(), violations })
}
