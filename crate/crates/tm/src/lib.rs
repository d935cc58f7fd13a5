//! Thinging-machine conceptual models as executable artifacts.
//!
//! A model is a tree of *thimacs* (thing/machine units) containing typed
//! action nodes — create, process, release, transfer, receive — joined by
//! solid flow edges and dashed, optionally guarded trigger edges. On top of
//! the static graph this crate derives an events model (named connected
//! regions), a behavioral model (event precedence graph), and carvings of
//! the behavioral model into super-events whose boundary edges are all
//! transfer- or trigger-induced. A deterministic token simulator executes
//! models, a conformance checker validates traces against the behavioral
//! model, and a scenario harness enumerates inputs exhaustively and checks
//! them against independent arithmetic oracles.
//!
//! Text formats: `.tm` (static model), `.ev` (events), `.grp` (super-event
//! grouping), `.sc` (validation scenarios), plus a line-oriented injection
//! format for the simulator. See the `fixtures` module for two complete
//! worked examples.

pub mod carve;
pub mod dot;
pub mod dsl;
pub mod events;
pub mod fixtures;
pub mod harness;
pub mod model;
pub mod sim;
pub mod synth;

pub use carve::{carve_auto, carve_manual, contract_carving, Carving, SuperEvent};
pub use dot::{behavior_to_dot, carving_to_dot, model_to_dot};
pub use events::{build_behavior, validate_events, BehaviorEdge, BehavioralModel, Event, EventsModel, InducedKind};
pub use model::{
    build_model, check_static, ActionKind, ActionNode, BuildError, Decl, Diagnostic,
    DiagnosticCode, Effect, FlowEdge, Guard, StaticModel, Thimac, ThingDecl, ThingInstance,
    TriggerEdge, Value,
};
pub use sim::{conforms, simulate, ConformanceReport, Firing, Injection, SimError, Trace};
