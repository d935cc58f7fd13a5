//! Events over a static model, and the behavioral model derived from them.
//!
//! An event is a named, connected region of the static graph together with a
//! prose description. Events cover every node; two events may share only
//! transfer nodes. Contracting each region to a single vertex and keeping
//! the edges that cross regions yields the behavioral model: a graph whose
//! vertices are events and whose edges say which event's activity feeds or
//! starts which other.

use crate::model::{natural_cmp, ActionKind, Diagnostic, DiagnosticCode, StaticModel};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};

/// A named region of the static model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub name: String,
    pub description: String,
    pub nodes: Vec<String>,
    /// Free-form timing annotation. Kept verbatim; the simulator ignores it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<String>,
}

/// The full event set declared over one static model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventsModel {
    /// Name of the static model these events partition.
    pub model: String,
    pub events: Vec<Event>,
}

impl EventsModel {
    pub fn event(&self, name: &str) -> Option<&Event> {
        self.events.iter().find(|e| e.name == name)
    }

    /// Event names in natural order (E2 before E10).
    pub fn names(&self) -> Vec<&str> {
        let mut names: Vec<&str> = self.events.iter().map(|e| e.name.as_str()).collect();
        names.sort_by(|a, b| natural_cmp(a, b));
        names
    }
}

/// What kind of static edge induced a behavioral edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InducedKind {
    /// A flow edge inside one thimac.
    PlainFlow,
    /// A transfer-out to transfer-in flow between thimacs.
    TransferFlow,
    /// A trigger edge.
    Trigger,
}

/// One derived edge between events, tagged with the static edge that
/// induced it. Several static edges crossing the same pair of events yield
/// several behavioral edges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BehaviorEdge {
    pub from: String,
    pub to: String,
    pub kind: InducedKind,
    /// Source node of the inducing static edge.
    pub from_node: String,
    /// Target node of the inducing static edge.
    pub to_node: String,
}

/// The behavioral model: events as vertices, crossing edges, and a resolved
/// node-to-event map for projecting simulation traces onto events.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BehavioralModel {
    pub events: EventsModel,
    pub edges: Vec<BehaviorEdge>,
    /// Every node's owning event. Nodes shared between two events are
    /// assigned to the event that also contains their flow predecessor,
    /// falling back to the naturally smallest event name.
    pub node_event: BTreeMap<String, String>,
}

impl BehavioralModel {
    pub fn event_of(&self, node: &str) -> Option<&str> {
        self.node_event.get(node).map(|s| s.as_str())
    }

    /// Events with at least one edge into `event`.
    pub fn predecessors(&self, event: &str) -> BTreeSet<&str> {
        self.edges
            .iter()
            .filter(|e| e.to == event)
            .map(|e| e.from.as_str())
            .collect()
    }

    /// Event names in natural order.
    pub fn event_names(&self) -> Vec<&str> {
        self.events.names()
    }
}

fn undirected_adjacency(model: &StaticModel) -> BTreeMap<&str, BTreeSet<&str>> {
    let mut adj: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for n in model.nodes.keys() {
        adj.entry(n.as_str()).or_default();
    }
    let mut pairs: Vec<(&str, &str)> = Vec::new();
    for f in &model.flows {
        pairs.push((f.from.as_str(), f.to.as_str()));
    }
    for t in &model.triggers {
        pairs.push((t.from.as_str(), t.to.as_str()));
    }
    for (a, b) in pairs {
        adj.entry(a).or_default().insert(b);
        adj.entry(b).or_default().insert(a);
    }
    adj
}

/// Check an event set against its static model: events must be non-empty,
/// reference only real nodes, be connected regions, jointly cover every
/// node, and pairwise overlap only at transfer nodes.
pub fn validate_events(model: &StaticModel, events: &EventsModel) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let adj = undirected_adjacency(model);

    let mut seen_names: BTreeSet<&str> = BTreeSet::new();
    for ev in &events.events {
        if !seen_names.insert(ev.name.as_str()) {
            out.push(Diagnostic {
                code: DiagnosticCode::DuplicateEvent,
                subject: ev.name.clone(),
                message: "event declared more than once".into(),
            });
        }
        if ev.nodes.is_empty() {
            out.push(Diagnostic {
                code: DiagnosticCode::EmptyEvent,
                subject: ev.name.clone(),
                message: "event contains no nodes".into(),
            });
            continue;
        }
        let mut members: BTreeSet<&str> = BTreeSet::new();
        for n in &ev.nodes {
            if !model.nodes.contains_key(n) {
                out.push(Diagnostic {
                    code: DiagnosticCode::EventUnknownNode,
                    subject: ev.name.clone(),
                    message: format!("event references unknown node {n:?}"),
                });
            } else {
                members.insert(n.as_str());
            }
        }
        if members.len() > 1 {
            // Breadth-first walk over flow and trigger edges, both
            // directions, restricted to the event.
            let start = *members.iter().next().unwrap();
            let mut reached: BTreeSet<&str> = BTreeSet::new();
            reached.insert(start);
            let mut queue = VecDeque::from([start]);
            while let Some(n) = queue.pop_front() {
                if let Some(next) = adj.get(n) {
                    for m in next {
                        if members.contains(m) && reached.insert(m) {
                            queue.push_back(m);
                        }
                    }
                }
            }
            if reached.len() != members.len() {
                let outside: Vec<&str> =
                    members.difference(&reached).copied().collect();
                out.push(Diagnostic {
                    code: DiagnosticCode::EventNotConnected,
                    subject: ev.name.clone(),
                    message: format!("event region is not connected; unreachable: {}", outside.join(", ")),
                });
            }
        }
    }

    // Coverage and overlap.
    let mut owners: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for ev in &events.events {
        for n in &ev.nodes {
            if model.nodes.contains_key(n) {
                owners.entry(n.as_str()).or_default().push(ev.name.as_str());
            }
        }
    }
    for (id, node) in &model.nodes {
        match owners.get(id.as_str()) {
            None => out.push(Diagnostic {
                code: DiagnosticCode::NodeNotCovered,
                subject: id.clone(),
                message: "node belongs to no event".into(),
            }),
            Some(evs) if evs.len() > 1 && !node.kind.is_transfer() => {
                out.push(Diagnostic {
                    code: DiagnosticCode::OverlapNotTransfer,
                    subject: id.clone(),
                    message: format!(
                        "{} node shared by events {}; only transfer nodes may be shared",
                        node.kind,
                        evs.join(", ")
                    ),
                });
            }
            Some(_) => {}
        }
    }

    out
}

/// Derive the behavioral model. Fails with the validation diagnostics when
/// the event set is not a legal cover of the static model.
pub fn build_behavior(
    model: &StaticModel,
    events: &EventsModel,
) -> Result<BehavioralModel, Vec<Diagnostic>> {
    let diags = validate_events(model, events);
    if !diags.is_empty() {
        return Err(diags);
    }

    let mut containing: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for ev in &events.events {
        for n in &ev.nodes {
            containing.entry(n.as_str()).or_default().push(ev.name.as_str());
        }
    }
    for regions in containing.values_mut() {
        regions.sort_by(|a, b| natural_cmp(a, b));
        regions.dedup();
    }
    let empty: Vec<&str> = Vec::new();

    let mut edges = Vec::new();
    for f in &model.flows {
        let kind = if model.nodes[&f.from].kind == ActionKind::TransferOut
            && model.nodes[&f.to].kind == ActionKind::TransferIn
        {
            InducedKind::TransferFlow
        } else {
            InducedKind::PlainFlow
        };
        for a in containing.get(f.from.as_str()).unwrap_or(&empty) {
            for b in containing.get(f.to.as_str()).unwrap_or(&empty) {
                if a != b {
                    edges.push(BehaviorEdge {
                        from: (*a).into(),
                        to: (*b).into(),
                        kind,
                        from_node: f.from.clone(),
                        to_node: f.to.clone(),
                    });
                }
            }
        }
    }
    for t in &model.triggers {
        for a in containing.get(t.from.as_str()).unwrap_or(&empty) {
            for b in containing.get(t.to.as_str()).unwrap_or(&empty) {
                if a != b {
                    edges.push(BehaviorEdge {
                        from: (*a).into(),
                        to: (*b).into(),
                        kind: InducedKind::Trigger,
                        from_node: t.from.clone(),
                        to_node: t.to.clone(),
                    });
                }
            }
        }
    }

    // Resolve shared nodes to a single owning event.
    let mut pred: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for f in &model.flows {
        pred.entry(f.to.as_str()).or_default().push(f.from.as_str());
    }
    let mut node_event = BTreeMap::new();
    for id in model.nodes.keys() {
        let regions = &containing[id.as_str()];
        let chosen = if regions.len() == 1 {
            regions[0]
        } else {
            let upstream = pred.get(id.as_str()).cloned().unwrap_or_default();
            regions
                .iter()
                .find(|r| {
                    let ev = events.event(r).unwrap();
                    upstream.iter().any(|p| ev.nodes.iter().any(|n| n == p))
                })
                .copied()
                .unwrap_or(regions[0])
        };
        node_event.insert(id.clone(), chosen.to_string());
    }

    Ok(BehavioralModel { events: events.clone(), edges, node_event })
}
