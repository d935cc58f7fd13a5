//! Seeded random model generation.
//!
//! `synth_model` grows a static model plus a matching event set from a seed,
//! and only ever emits structures the checker accepts: token journeys run
//! create → process → release → transfer_out → transfer_in → receive →
//! process chains across thimacs, regions are contiguous runs of one
//! journey, and triggers connect journey tails to journey heads. The same
//! seed always yields the same model, so generated cases can be shrunk and
//! replayed. Generated models exercise the structural tooling; they are not
//! meant to be simulated.

use crate::events::{Event, EventsModel};
use crate::model::{
    build_model, ActionKind, ArithOp, AttrPath, CmpOp, Decl, Effect, Expr, Guard, Operand,
    StaticModel, Term, ThingInstance, Value,
};

struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    fn new(seed: u64) -> SplitMix64 {
        SplitMix64 { state: seed }
    }

    fn next(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `0..n`; n must be positive.
    fn below(&mut self, n: usize) -> usize {
        (self.next() % n as u64) as usize
    }

    fn chance(&mut self, pct: u64) -> bool {
        self.next() % 100 < pct
    }
}

struct Journey {
    /// Node ids in flow order.
    nodes: Vec<String>,
    /// Index of each node that may source a trigger (create/process).
    sources: Vec<usize>,
    /// The journey's head create node.
    head: String,
    thing: String,
}

/// Build a random well-formed model and a covering event set from a seed.
pub fn synth_model(seed: u64) -> (StaticModel, EventsModel) {
    let mut rng = SplitMix64::new(seed);
    let mut decls: Vec<Decl> = vec![Decl::Name(format!("synth{seed}"))];

    let n_thimacs = 2 + rng.below(3);
    let thimac_names: Vec<String> = (1..=n_thimacs).map(|i| format!("T{i}")).collect();
    for (i, name) in thimac_names.iter().enumerate() {
        let parent = if i > 0 && rng.chance(30) {
            Some(thimac_names[rng.below(i)].clone())
        } else {
            None
        };
        decls.push(Decl::Thimac { name: name.clone(), parent, store: false });
    }

    let n_things = 1 + rng.below(3);
    let thing_names: Vec<String> = (1..=n_things).map(|i| format!("t{i}")).collect();
    let mut thing_attrs: Vec<Vec<String>> = Vec::new();
    for name in &thing_names {
        let attrs: Vec<String> =
            ["a", "b"].iter().take(rng.below(3)).map(|s| s.to_string()).collect();
        thing_attrs.push(attrs.clone());
        decls.push(Decl::Thing { name: name.clone(), attrs });
    }

    let n_journeys = 1 + rng.below(4);
    let mut journeys: Vec<Journey> = Vec::new();
    for j in 0..n_journeys {
        let ti = rng.below(n_things);
        let thing = thing_names[ti].clone();
        let has_attrs = !thing_attrs[ti].is_empty();

        let hops = 1 + rng.below(3);
        let mut path = vec![rng.below(n_thimacs)];
        for _ in 1..hops {
            // The next thimac must differ from the current one.
            let mut next = rng.below(n_thimacs);
            if next == *path.last().expect("non-empty") {
                next = (next + 1) % n_thimacs;
            }
            if n_thimacs == 1 {
                break;
            }
            path.push(next);
        }

        let mut nodes: Vec<String> = Vec::new();
        let mut sources: Vec<usize> = Vec::new();
        let mut head = String::new();
        for (leg, &tm) in path.iter().enumerate() {
            let place = thimac_names[tm].clone();
            let node = |suffix: &str| format!("s{j}_{leg}_{suffix}");
            let push = |decls: &mut Vec<Decl>, nodes: &mut Vec<String>, id: String, kind: ActionKind| {
                decls.push(Decl::Node {
                    id: id.clone(),
                    kind,
                    thing_type: thing.clone(),
                    thimac: place.clone(),
                });
                nodes.push(id);
            };
            if leg == 0 {
                head = node("create");
                push(&mut decls, &mut nodes, head.clone(), ActionKind::Create);
                sources.push(nodes.len() - 1);
                if rng.chance(40) && has_attrs {
                    let attr = thing_attrs[ti][0].clone();
                    decls.push(Decl::Effect(Effect::Assign {
                        attr,
                        expr: Expr::lit(Value::Int(rng.below(100) as i64)),
                    }));
                }
            } else {
                push(&mut decls, &mut nodes, node("tin"), ActionKind::TransferIn);
                push(&mut decls, &mut nodes, node("rcv"), ActionKind::Receive);
            }
            if rng.chance(60) {
                push(&mut decls, &mut nodes, node("proc"), ActionKind::Process);
                sources.push(nodes.len() - 1);
            }
            if leg + 1 < path.len() {
                push(&mut decls, &mut nodes, node("rel"), ActionKind::Release);
                push(&mut decls, &mut nodes, node("tout"), ActionKind::TransferOut);
            }
        }
        for w in nodes.windows(2) {
            decls.push(Decl::Flow { from: w[0].clone(), to: w[1].clone() });
        }
        journeys.push(Journey { nodes, sources, head, thing });
    }

    // Triggers: tails of one journey start the head of another.
    if n_journeys > 1 {
        let n_triggers = rng.below(n_journeys + 1);
        for _ in 0..n_triggers {
            let from_j = rng.below(n_journeys);
            let mut to_j = rng.below(n_journeys);
            if to_j == from_j {
                to_j = (to_j + 1) % n_journeys;
            }
            let src_journey = &journeys[from_j];
            let src = &src_journey.nodes[src_journey.sources[rng.below(src_journey.sources.len())]];
            let dst = journeys[to_j].head.clone();
            let src_thing = &src_journey.thing;
            let src_ti = thing_names.iter().position(|t| t == src_thing).expect("declared");
            let guard = if rng.chance(40) && !thing_attrs[src_ti].is_empty() {
                Some(Guard {
                    lhs: Operand::Attr(AttrPath {
                        thing: src_thing.clone(),
                        attr: thing_attrs[src_ti][0].clone(),
                    }),
                    op: if rng.chance(50) { CmpOp::Ge } else { CmpOp::Lt },
                    rhs: Operand::Lit(Value::Int(rng.below(50) as i64)),
                })
            } else {
                None
            };
            decls.push(Decl::Trigger { from: src.clone(), to: dst, guard });
        }
    }

    // An occasional store: an accumulator attached to one journey's head,
    // seeded with the journey's own thing type.
    if rng.chance(30) {
        let j = rng.below(n_journeys);
        let ti = thing_names.iter().position(|t| t == &journeys[j].thing).expect("declared");
        decls.push(Decl::Thimac {
            name: "Store1".into(),
            parent: Some(thimac_names[0].clone()),
            store: true,
        });
        let mut inst = ThingInstance::new(journeys[j].thing.clone());
        for a in &thing_attrs[ti] {
            inst.attrs.insert(a.clone(), Value::Int(rng.below(10) as i64));
        }
        decls.push(Decl::Seed { store: "Store1".into(), instance: inst });
        // Rebuild the head node's declaration order: effects attach to the
        // most recent node declaration, so add a fresh accumulator node
        // instead of reopening the head.
        let place = thimac_names[rng.below(n_thimacs)].clone();
        let id = format!("store_keeper{j}");
        decls.push(Decl::Node {
            id: id.clone(),
            kind: ActionKind::Create,
            thing_type: journeys[j].thing.clone(),
            thimac: place,
        });
        decls.push(Decl::Effect(Effect::Pop { store: "Store1".into() }));
        if !thing_attrs[ti].is_empty() {
            decls.push(Decl::Effect(Effect::Assign {
                attr: thing_attrs[ti][0].clone(),
                expr: Expr {
                    first: Term::Attr(AttrPath {
                        thing: journeys[j].thing.clone(),
                        attr: thing_attrs[ti][0].clone(),
                    }),
                    rest: vec![(ArithOp::Add, Term::Lit(Value::Int(1)))],
                },
            }));
        }
        decls.push(Decl::Effect(Effect::Append { store: "Store1".into() }));
        // Some journey tail triggers the keeper so it is not an orphan.
        let src_journey = &journeys[rng.below(n_journeys)];
        let src = &src_journey.nodes[src_journey.sources[rng.below(src_journey.sources.len())]];
        decls.push(Decl::Trigger { from: src.clone(), to: id.clone(), guard: None });
        journeys.push(Journey {
            nodes: vec![id.clone()],
            sources: vec![0],
            head: id,
            thing: journeys[j].thing.clone(),
        });
    }

    let model = build_model(&decls).expect("generated declarations are well-formed");

    // Regions: contiguous runs along each journey.
    let mut events = Vec::new();
    for journey in &journeys {
        let mut i = 0;
        while i < journey.nodes.len() {
            let len = (1 + rng.below(3)).min(journey.nodes.len() - i);
            let nodes: Vec<String> = journey.nodes[i..i + len].to_vec();
            i += len;
            let n = events.len() + 1;
            events.push(Event {
                name: format!("E{n}"),
                description: format!("stage {n}"),
                nodes,
                time: if rng.chance(20) { Some(format!("t{n}")) } else { None },
            });
        }
    }
    let events = EventsModel { model: model.name.clone(), events };
    (model, events)
}
