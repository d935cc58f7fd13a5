//! Grouping events into super-events.
//!
//! Plain flow between two events means neither is meaningful without the
//! other, so a grouping may only separate events along transfer or trigger
//! edges. Contracting every plain-flow edge first yields *blocks*; a
//! grouping is then a partition of the blocks, and the search below picks
//! the partition that severs the model along its strongest seams: as many
//! transfer edges as possible, as few trigger edges as possible.

use crate::events::{BehavioralModel, BehaviorEdge, Event, EventsModel, InducedKind};
use crate::model::{natural_cmp, Diagnostic, DiagnosticCode};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};

/// A named group of events.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuperEvent {
    pub name: String,
    /// Member event names in natural order.
    pub members: Vec<String>,
}

/// A complete grouping of a behavioral model's events, with the behavioral
/// edges that cross group boundaries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Carving {
    pub parts: Vec<SuperEvent>,
    /// Behavioral edges whose endpoints lie in different parts, in the
    /// behavioral model's edge order.
    pub joints: Vec<BehaviorEdge>,
    /// Human-readable caveats, e.g. when no grouping meets the requested
    /// part budget.
    pub notices: Vec<String>,
}

impl Carving {
    /// Part name owning each event.
    pub fn part_of(&self) -> BTreeMap<&str, &str> {
        let mut map = BTreeMap::new();
        for p in &self.parts {
            for m in &p.members {
                map.insert(m.as_str(), p.name.as_str());
            }
        }
        map
    }
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Dsu {
        Dsu { parent: (0..n).collect() }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Lower index wins so representatives stay stable.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Largest bundle graph the exhaustive search will take on. Both case
/// studies sit near a dozen bundles; anything beyond this is outside the
/// tool's desk-scale remit.
const MAX_BUNDLES: usize = 22;

fn joints_between(behavior: &BehavioralModel, part_of: &BTreeMap<&str, &str>) -> Vec<BehaviorEdge> {
    behavior
        .edges
        .iter()
        .filter(|e| part_of.get(e.from.as_str()) != part_of.get(e.to.as_str()))
        .cloned()
        .collect()
}

/// Split a behavioral model into at most `max_parts` super-events.
///
/// The result cuts only transfer and trigger edges, keeps every part
/// connected, and among all groupings with exactly `min(max_parts, blocks)`
/// parts prefers (1) the most transfer edges cut, (2) the fewest trigger
/// edges cut, (3) the partition whose sorted form is smallest in natural
/// event order. Parts are named SE1, SE2, … in that sorted form.
///
/// A graph with more connected components than the budget cannot meet it
/// without welding unrelated pieces together, so the budget is overridden:
/// one part per component, with a notice.
pub fn carve_auto(behavior: &BehavioralModel, max_parts: usize) -> Carving {
    let budget = max_parts.max(1);
    let mut names: Vec<String> =
        behavior.events.events.iter().map(|e| e.name.clone()).collect();
    names.sort_by(|a, b| natural_cmp(a, b));
    if names.is_empty() {
        return Carving { parts: Vec::new(), joints: Vec::new(), notices: Vec::new() };
    }
    let index: BTreeMap<&str, usize> =
        names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();

    // Contract plain flow: events welded by plain flow form blocks.
    let mut dsu = Dsu::new(names.len());
    for e in &behavior.edges {
        if e.kind == InducedKind::PlainFlow {
            dsu.union(index[e.from.as_str()], index[e.to.as_str()]);
        }
    }
    let mut block_of_event: Vec<usize> = vec![0; names.len()];
    let mut block_ids: Vec<usize> = Vec::new();
    for i in 0..names.len() {
        let root = dsu.find(i);
        let bid = match block_ids.iter().position(|&r| r == root) {
            Some(p) => p,
            None => {
                block_ids.push(root);
                block_ids.len() - 1
            }
        };
        block_of_event[i] = bid;
    }
    let n_blocks = block_ids.len();

    // Bundles: unordered block pairs with at least one crossing edge.
    let mut bundle_edges: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (i, e) in behavior.edges.iter().enumerate() {
        let a = block_of_event[index[e.from.as_str()]];
        let b = block_of_event[index[e.to.as_str()]];
        if a != b {
            let key = (a.min(b), a.max(b));
            bundle_edges.entry(key).or_default().push(i);
        }
    }
    let bundles: Vec<((usize, usize), Vec<usize>)> = bundle_edges.into_iter().collect();

    // Components of the block graph bound how few parts are possible.
    let mut comp_dsu = Dsu::new(n_blocks);
    for ((a, b), _) in &bundles {
        comp_dsu.union(*a, *b);
    }
    let n_components = {
        let mut roots = BTreeSet::new();
        for b in 0..n_blocks {
            roots.insert(comp_dsu.find(b));
        }
        roots.len()
    };

    let k = budget.min(n_blocks);
    let blocks_members = |assign: &dyn Fn(usize) -> usize, parts: usize| -> Vec<Vec<usize>> {
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); parts];
        for (ev, &blk) in block_of_event.iter().enumerate() {
            members[assign(blk)].push(ev);
        }
        members
    };
    let mut by_component = || -> Vec<Vec<usize>> {
        let mut root_part: BTreeMap<usize, usize> = BTreeMap::new();
        let mut part_of_block: Vec<usize> = Vec::with_capacity(n_blocks);
        for b in 0..n_blocks {
            let r = comp_dsu.find(b);
            let next = root_part.len();
            part_of_block.push(*root_part.entry(r).or_insert(next));
        }
        let mut parts = blocks_members(&|b| part_of_block[b], n_components);
        parts.iter_mut().for_each(|p| p.sort_unstable());
        parts.sort();
        parts
    };

    let mut notices = Vec::new();
    let chosen_partition: Vec<Vec<usize>>;
    let mut chosen_cut_edges: BTreeSet<usize> = BTreeSet::new();

    if budget < n_components {
        notices.push(format!(
            "no grouping into {budget} parts exists: the behavioral graph falls apart into {n_components} disconnected pieces; grouped by connected component instead"
        ));
        chosen_partition = by_component();
        // Joints recomputed below from the partition itself.
    } else if k == n_blocks {
        // Every block stands alone; all bundles are cut.
        chosen_partition = {
            let mut parts = blocks_members(&|b| b, n_blocks);
            parts.iter_mut().for_each(|p| p.sort_unstable());
            parts.sort();
            parts
        };
        for (_, edges) in &bundles {
            chosen_cut_edges.extend(edges.iter().copied());
        }
    } else if bundles.len() > MAX_BUNDLES {
        notices.push(format!(
            "behavioral graph has {} separable seams, beyond the exhaustive search bound of {MAX_BUNDLES}; grouped by connected component instead",
            bundles.len()
        ));
        chosen_partition = by_component();
        // Joints recomputed below from the partition itself.
    } else {
        // Exhaustive search over which bundles to sever.
        let mut best: Option<(usize, usize, Vec<Vec<usize>>, BTreeSet<usize>)> = None;
        for mask in 0u32..(1u32 << bundles.len()) {
            let mut d = Dsu::new(n_blocks);
            for (bi, ((a, b), _)) in bundles.iter().enumerate() {
                if mask & (1 << bi) == 0 {
                    d.union(*a, *b);
                }
            }
            let mut part_of_root: BTreeMap<usize, usize> = BTreeMap::new();
            let mut part_of_block: Vec<usize> = Vec::with_capacity(n_blocks);
            for b in 0..n_blocks {
                let r = d.find(b);
                let next = part_of_root.len();
                part_of_block.push(*part_of_root.entry(r).or_insert(next));
            }
            if part_of_root.len() != k {
                continue;
            }
            // A severed bundle must actually separate: both sides in
            // different parts, otherwise the cut is wasted.
            let mut wasted = false;
            for (bi, ((a, b), _)) in bundles.iter().enumerate() {
                if mask & (1 << bi) != 0 && d.find(*a) == d.find(*b) {
                    wasted = true;
                    break;
                }
            }
            if wasted {
                continue;
            }
            let mut transfers = 0usize;
            let mut triggers = 0usize;
            let mut cut_edges = BTreeSet::new();
            for (bi, (_, edges)) in bundles.iter().enumerate() {
                if mask & (1 << bi) != 0 {
                    for &ei in edges {
                        cut_edges.insert(ei);
                        match behavior.edges[ei].kind {
                            InducedKind::TransferFlow => transfers += 1,
                            InducedKind::Trigger => triggers += 1,
                            InducedKind::PlainFlow => unreachable!("plain flow never crosses blocks"),
                        }
                    }
                }
            }
            let partition = {
                let mut parts = blocks_members(&|b| part_of_block[b], k);
                parts.iter_mut().for_each(|p| p.sort_unstable());
                parts.sort();
                parts
            };
            let better = match &best {
                None => true,
                Some((bt, bg, bp, _)) => {
                    transfers > *bt
                        || (transfers == *bt && triggers < *bg)
                        || (transfers == *bt && triggers == *bg && partition < *bp)
                }
            };
            if better {
                best = Some((transfers, triggers, partition, cut_edges));
            }
        }
        let (_, _, partition, cut) =
            best.expect("a grouping always exists once the part budget covers every component");
        chosen_partition = partition;
        chosen_cut_edges = cut;
    }

    let parts: Vec<SuperEvent> = chosen_partition
        .iter()
        .enumerate()
        .map(|(i, members)| SuperEvent {
            name: format!("SE{}", i + 1),
            members: members.iter().map(|&ev| names[ev].clone()).collect(),
        })
        .collect();
    let carving = Carving { parts, joints: Vec::new(), notices };
    let part_of = carving.part_of();
    let joints = joints_between(behavior, &part_of);
    debug_assert!(
        chosen_cut_edges.is_empty()
            || joints.len() == chosen_cut_edges.len(),
        "joint bookkeeping out of step with the chosen cut"
    );
    Carving { joints, ..carving }
}

/// Validate a hand-written grouping against a behavioral model. The parts
/// must exactly partition the events, each part must be a connected region
/// of the behavioral graph, and no plain-flow edge may cross parts.
pub fn carve_manual(
    behavior: &BehavioralModel,
    parts: &[(String, Vec<String>)],
) -> Result<Carving, Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let known: BTreeSet<&str> =
        behavior.events.events.iter().map(|e| e.name.as_str()).collect();

    let mut part_names = BTreeSet::new();
    let mut owner: BTreeMap<&str, &str> = BTreeMap::new();
    for (name, members) in parts {
        if !part_names.insert(name.as_str()) {
            diags.push(Diagnostic {
                code: DiagnosticCode::CarveNotPartition,
                subject: name.clone(),
                message: "part declared more than once".into(),
            });
        }
        if members.is_empty() {
            diags.push(Diagnostic {
                code: DiagnosticCode::CarveNotPartition,
                subject: name.clone(),
                message: "part has no member events".into(),
            });
        }
        for m in members {
            if !known.contains(m.as_str()) {
                diags.push(Diagnostic {
                    code: DiagnosticCode::CarveUnknownEvent,
                    subject: name.clone(),
                    message: format!("part references unknown event {m:?}"),
                });
                continue;
            }
            match owner.get(m.as_str()) {
                Some(first) => diags.push(Diagnostic {
                    code: DiagnosticCode::CarveNotPartition,
                    subject: m.clone(),
                    message: format!("event assigned to both {first:?} and {name:?}"),
                }),
                None => {
                    owner.insert(m.as_str(), name.as_str());
                }
            }
        }
    }
    for e in &known {
        if !owner.contains_key(e) {
            diags.push(Diagnostic {
                code: DiagnosticCode::CarveNotPartition,
                subject: (*e).into(),
                message: "event assigned to no part".into(),
            });
        }
    }

    // Undirected adjacency over all behavioral edges.
    let mut adj: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for e in &behavior.edges {
        adj.entry(e.from.as_str()).or_default().insert(e.to.as_str());
        adj.entry(e.to.as_str()).or_default().insert(e.from.as_str());
    }
    for (name, members) in parts {
        let set: BTreeSet<&str> = members
            .iter()
            .map(|m| m.as_str())
            .filter(|m| known.contains(m))
            .collect();
        if set.len() < 2 {
            continue;
        }
        let start = *set.iter().next().unwrap();
        let mut reached = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(n) = queue.pop_front() {
            if let Some(next) = adj.get(n) {
                for m in next {
                    if set.contains(m) && reached.insert(m) {
                        queue.push_back(m);
                    }
                }
            }
        }
        if reached.len() != set.len() {
            let stranded: Vec<&str> = set.difference(&reached).copied().collect();
            diags.push(Diagnostic {
                code: DiagnosticCode::CarvePartNotConnected,
                subject: name.clone(),
                message: format!("part is not connected; unreachable: {}", stranded.join(", ")),
            });
        }
    }

    for e in &behavior.edges {
        if e.kind == InducedKind::PlainFlow {
            if let (Some(a), Some(b)) = (owner.get(e.from.as_str()), owner.get(e.to.as_str())) {
                if a != b {
                    diags.push(Diagnostic {
                        code: DiagnosticCode::CarveIllegalJoint,
                        subject: format!("{} -> {}", e.from, e.to),
                        message: format!(
                            "plain flow may not cross parts ({a:?} to {b:?}); only transfers and triggers can be joints"
                        ),
                    });
                }
            }
        }
    }

    if !diags.is_empty() {
        return Err(diags);
    }

    let supers: Vec<SuperEvent> = parts
        .iter()
        .map(|(name, members)| {
            let mut members = members.clone();
            members.sort_by(|a, b| natural_cmp(a, b));
            SuperEvent { name: name.clone(), members }
        })
        .collect();
    let carving = Carving { parts: supers, joints: Vec::new(), notices: Vec::new() };
    let part_of = carving.part_of();
    let joints = joints_between(behavior, &part_of);
    Ok(Carving { joints, ..carving })
}

/// Collapse each part to a single event, keeping only the joints. The
/// result is itself a behavioral model, so groupings can be layered.
pub fn contract_carving(behavior: &BehavioralModel, carving: &Carving) -> BehavioralModel {
    let part_of = carving.part_of();
    let events: Vec<Event> = carving
        .parts
        .iter()
        .map(|p| {
            let mut nodes = Vec::new();
            for m in &p.members {
                if let Some(ev) = behavior.events.event(m) {
                    nodes.extend(ev.nodes.iter().cloned());
                }
            }
            Event {
                name: p.name.clone(),
                description: p.members.join(", "),
                nodes,
                time: None,
            }
        })
        .collect();
    let edges: Vec<BehaviorEdge> = behavior
        .edges
        .iter()
        .filter_map(|e| {
            let a = part_of.get(e.from.as_str())?;
            let b = part_of.get(e.to.as_str())?;
            (a != b).then(|| BehaviorEdge {
                from: (*a).into(),
                to: (*b).into(),
                kind: e.kind,
                from_node: e.from_node.clone(),
                to_node: e.to_node.clone(),
            })
        })
        .collect();
    let node_event = behavior
        .node_event
        .iter()
        .filter_map(|(n, ev)| {
            part_of.get(ev.as_str()).map(|p| (n.clone(), (*p).to_string()))
        })
        .collect();
    BehavioralModel {
        events: EventsModel { model: behavior.events.model.clone(), events },
        edges,
        node_event,
    }
}
