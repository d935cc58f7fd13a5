//! Static-model data types, construction, and structural checking.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// The five stages a thing can pass through inside a thimac. Transfer is
/// split by direction, so six node kinds exist in practice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Create,
    Process,
    Release,
    TransferIn,
    TransferOut,
    Receive,
}

impl ActionKind {
    pub fn label(self) -> &'static str {
        match self {
            ActionKind::Create => "create",
            ActionKind::Process => "process",
            ActionKind::Release => "release",
            ActionKind::TransferIn => "transfer_in",
            ActionKind::TransferOut => "transfer_out",
            ActionKind::Receive => "receive",
        }
    }

    pub fn is_transfer(self) -> bool {
        matches!(self, ActionKind::TransferIn | ActionKind::TransferOut)
    }

    pub fn parse(s: &str) -> Option<ActionKind> {
        Some(match s {
            "create" => ActionKind::Create,
            "process" => ActionKind::Process,
            "release" => ActionKind::Release,
            "transfer_in" => ActionKind::TransferIn,
            "transfer_out" => ActionKind::TransferOut,
            "receive" => ActionKind::Receive,
            _ => return None,
        })
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Attribute values are integers (money in its smallest unit, counts) or
/// text (names, codes). Nothing else appears in the supported domain.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Text(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Text(s) => write!(f, "{s:?}"),
        }
    }
}

/// A concrete thing: an instance of a declared thing type with attribute
/// values. These are the tokens the simulator moves around and the contents
/// of store thimacs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThingInstance {
    pub thing_type: String,
    pub attrs: BTreeMap<String, Value>,
}

impl ThingInstance {
    pub fn new(thing_type: impl Into<String>) -> Self {
        ThingInstance { thing_type: thing_type.into(), attrs: BTreeMap::new() }
    }
}

/// A thing/machine unit. Thimacs nest in a tree; a store thimac holds an
/// ordered collection of instances and contains no action nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thimac {
    pub name: String,
    pub parent: Option<String>,
    pub is_store: bool,
    /// Initial contents; only store thimacs may be seeded.
    pub contents: Vec<ThingInstance>,
}

/// A declared thing type and the attribute names its instances may carry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThingDecl {
    pub name: String,
    pub attrs: Vec<String>,
}

/// A reference to an attribute of a thing type, written `thing.attr`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AttrPath {
    pub thing: String,
    pub attr: String,
}

impl AttrPath {
    pub fn key(&self) -> String {
        format!("{}.{}", self.thing, self.attr)
    }
}

impl fmt::Display for AttrPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.thing, self.attr)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn is_ordering(self) -> bool {
        matches!(self, CmpOp::Lt | CmpOp::Le | CmpOp::Gt | CmpOp::Ge)
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operand {
    Lit(Value),
    Attr(AttrPath),
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Lit(v) => write!(f, "{v}"),
            Operand::Attr(p) => write!(f, "{p}"),
        }
    }
}

/// A comparison attached to a trigger edge. The trigger only deposits its
/// control token when the guard evaluates to true over the firing's binding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Guard {
    pub lhs: Operand,
    pub op: CmpOp,
    pub rhs: Operand,
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.lhs, self.op, self.rhs)
    }
}

/// One term of an arithmetic expression.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    Lit(Value),
    Attr(AttrPath),
    /// Sum of one attribute over every instance currently in a store.
    SumStore { store: String, attr: String },
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Lit(v) => write!(f, "{v}"),
            Term::Attr(p) => write!(f, "{p}"),
            Term::SumStore { store, attr } => write!(f, "sum({store}.{attr})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArithOp {
    Add,
    Sub,
}

/// Left-associative chain of additions and subtractions over terms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expr {
    pub first: Term,
    pub rest: Vec<(ArithOp, Term)>,
}

impl Expr {
    pub fn lit(v: Value) -> Expr {
        Expr { first: Term::Lit(v), rest: Vec::new() }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.first)?;
        for (op, t) in &self.rest {
            let s = match op {
                ArithOp::Add => "+",
                ArithOp::Sub => "-",
            };
            write!(f, " {s} {t}")?;
        }
        Ok(())
    }
}

/// A computation a create or process node performs when it fires. Effects
/// run in declaration order against the firing's product instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Effect {
    /// Replace the product with the front instance of a store. A node whose
    /// effects pop a store is not enabled while that store is empty.
    Pop { store: String },
    /// Append a copy of the product to a store; the product is then routed
    /// to the store instead of the outgoing flow.
    Append { store: String },
    /// Set one attribute of the product.
    Assign { attr: String, expr: Expr },
    /// Produce an extra instance, forwarded along the outgoing flow when its
    /// type matches what that flow carries.
    Emit { thing_type: String, attrs: Vec<(String, Expr)> },
}

/// One stage instance in the graph: a node of a given kind, housed in a
/// thimac, handling one thing type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionNode {
    pub id: String,
    pub kind: ActionKind,
    pub thimac: String,
    pub thing_type: String,
    pub effects: Vec<Effect>,
}

/// Solid arrow: a thing moves from one stage to the next.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowEdge {
    pub from: String,
    pub to: String,
}

/// Dashed arrow: one flow's activity starts another, optionally guarded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriggerEdge {
    pub from: String,
    pub to: String,
    pub guard: Option<Guard>,
}

/// The complete static model: thimac tree, thing declarations, action
/// nodes, and the flow/trigger edges between them. Immutable once built;
/// all structural checking lives in [`check_static`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StaticModel {
    pub name: String,
    pub thimacs: BTreeMap<String, Thimac>,
    pub things: BTreeMap<String, ThingDecl>,
    pub nodes: BTreeMap<String, ActionNode>,
    pub flows: Vec<FlowEdge>,
    pub triggers: Vec<TriggerEdge>,
}

impl StaticModel {
    pub fn empty(name: impl Into<String>) -> StaticModel {
        StaticModel {
            name: name.into(),
            thimacs: BTreeMap::new(),
            things: BTreeMap::new(),
            nodes: BTreeMap::new(),
            flows: Vec::new(),
            triggers: Vec::new(),
        }
    }

    /// Store thimac names in order.
    pub fn stores(&self) -> impl Iterator<Item = &Thimac> {
        self.thimacs.values().filter(|t| t.is_store)
    }
}

/// One declaration consumed by [`build_model`]. Text parsing produces these;
/// they can also be assembled programmatically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decl {
    Name(String),
    Thimac { name: String, parent: Option<String>, store: bool },
    Thing { name: String, attrs: Vec<String> },
    Node { id: String, kind: ActionKind, thing_type: String, thimac: String },
    /// Attaches to the most recent Node declaration.
    Effect(Effect),
    Flow { from: String, to: String },
    Trigger { from: String, to: String, guard: Option<Guard> },
    Seed { store: String, instance: ThingInstance },
}

/// A failed resolution while assembling a model. `decl` indexes into the
/// declaration list so text front ends can map errors back to source lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuildError {
    pub decl: Option<usize>,
    pub message: String,
}

impl fmt::Display for BuildError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for BuildError {}

fn err(decl: usize, message: String) -> BuildError {
    BuildError { decl: Some(decl), message }
}

/// Assemble a model from declarations, resolving every name. Returns either
/// a complete model or the full list of resolution failures — never a
/// partial model.
pub fn build_model(decls: &[Decl]) -> Result<StaticModel, Vec<BuildError>> {
    let mut errors = Vec::new();
    let mut model = StaticModel::empty("model");
    let mut last_node: Option<String> = None;
    let mut effect_decls: Vec<(usize, String, Effect)> = Vec::new();

    // First pass: collect entities so later references resolve regardless of
    // declaration order for edges, effects, and seeds. Thimacs and things
    // must precede the nodes that use them; this keeps the text format
    // readable top-down without a full second pass over everything.
    for (i, decl) in decls.iter().enumerate() {
        match decl {
            Decl::Name(n) => model.name = n.clone(),
            Decl::Thimac { name, parent, store } => {
                if model.thimacs.contains_key(name) {
                    errors.push(err(i, format!("duplicate thimac name {name:?}")));
                    continue;
                }
                model.thimacs.insert(
                    name.clone(),
                    Thimac {
                        name: name.clone(),
                        parent: parent.clone(),
                        is_store: *store,
                        contents: Vec::new(),
                    },
                );
            }
            Decl::Thing { name, attrs } => {
                if model.things.contains_key(name) {
                    errors.push(err(i, format!("duplicate thing declaration {name:?}")));
                    continue;
                }
                model.things.insert(name.clone(), ThingDecl { name: name.clone(), attrs: attrs.clone() });
            }
            Decl::Node { id, kind, thing_type, thimac } => {
                if model.nodes.contains_key(id) {
                    errors.push(err(i, format!("duplicate node id {id:?}")));
                    last_node = Some(id.clone());
                    continue;
                }
                model.nodes.insert(
                    id.clone(),
                    ActionNode {
                        id: id.clone(),
                        kind: *kind,
                        thimac: thimac.clone(),
                        thing_type: thing_type.clone(),
                        effects: Vec::new(),
                    },
                );
                last_node = Some(id.clone());
            }
            Decl::Effect(effect) => match &last_node {
                Some(id) => effect_decls.push((i, id.clone(), effect.clone())),
                None => errors.push(err(i, "effect declared before any node".into())),
            },
            Decl::Flow { .. } | Decl::Trigger { .. } | Decl::Seed { .. } => {}
        }
    }

    // Second pass: resolve references.
    for (i, decl) in decls.iter().enumerate() {
        match decl {
            Decl::Thimac { name, parent: Some(p), .. } => {
                if !model.thimacs.contains_key(p) {
                    errors.push(err(i, format!("thimac {name:?} nested in unknown thimac {p:?}")));
                }
            }
            Decl::Node { id, thing_type, thimac, .. } => {
                if !model.thimacs.contains_key(thimac) {
                    errors.push(err(i, format!("node {id:?} placed in unknown thimac {thimac:?}")));
                }
                if !model.things.contains_key(thing_type) {
                    errors.push(err(i, format!("node {id:?} handles unknown thing {thing_type:?}")));
                }
            }
            Decl::Flow { from, to } => {
                let mut ok = true;
                for endpoint in [from, to] {
                    if !model.nodes.contains_key(endpoint) {
                        errors.push(err(i, format!("flow references unknown node {endpoint:?}")));
                        ok = false;
                    }
                }
                if ok {
                    model.flows.push(FlowEdge { from: from.clone(), to: to.clone() });
                }
            }
            Decl::Trigger { from, to, guard } => {
                let mut ok = true;
                for endpoint in [from, to] {
                    if !model.nodes.contains_key(endpoint) {
                        errors.push(err(i, format!("trigger references unknown node {endpoint:?}")));
                        ok = false;
                    }
                }
                if let Some(g) = guard {
                    for operand in [&g.lhs, &g.rhs] {
                        if let Operand::Attr(path) = operand {
                            if let Some(e) = check_attr_path(&model, path) {
                                errors.push(err(i, e));
                                ok = false;
                            }
                        }
                    }
                }
                if ok {
                    model.triggers.push(TriggerEdge { from: from.clone(), to: to.clone(), guard: guard.clone() });
                }
            }
            Decl::Seed { store, instance } => {
                match model.thimacs.get(store) {
                    None => errors.push(err(i, format!("seed targets unknown thimac {store:?}"))),
                    Some(t) if !t.is_store => {
                        errors.push(err(i, format!("seed targets non-store thimac {store:?}")))
                    }
                    Some(_) => {
                        if let Some(e) = check_instance(&model, instance) {
                            errors.push(err(i, e));
                        } else {
                            model.thimacs.get_mut(store).unwrap().contents.push(instance.clone());
                        }
                    }
                }
            }
            _ => {}
        }
    }

    // Effects, now that nodes/things/thimacs exist.
    for (i, node_id, effect) in effect_decls {
        let Some(node) = model.nodes.get(&node_id) else { continue };
        if !matches!(node.kind, ActionKind::Create | ActionKind::Process) {
            errors.push(err(i, format!("effect on {} node {:?}; only create and process nodes compute", node.kind, node_id)));
            continue;
        }
        let mut ok = true;
        match &effect {
            Effect::Pop { store } | Effect::Append { store } => match model.thimacs.get(store) {
                None => {
                    errors.push(err(i, format!("effect on {node_id:?} references unknown store {store:?}")));
                    ok = false;
                }
                Some(t) if !t.is_store => {
                    errors.push(err(i, format!("effect on {node_id:?} targets non-store thimac {store:?}")));
                    ok = false;
                }
                Some(_) => {}
            },
            Effect::Assign { attr, expr } => {
                let decl = &model.things[&node.thing_type];
                if !decl.attrs.contains(attr) {
                    errors.push(err(i, format!("node {node_id:?} assigns unknown attribute {attr:?} of thing {:?}", node.thing_type)));
                    ok = false;
                }
                if let Some(e) = check_expr(&model, expr) {
                    errors.push(err(i, e));
                    ok = false;
                }
            }
            Effect::Emit { thing_type, attrs } => {
                match model.things.get(thing_type) {
                    None => {
                        errors.push(err(i, format!("node {node_id:?} emits unknown thing {thing_type:?}")));
                        ok = false;
                    }
                    Some(decl) => {
                        for (attr, expr) in attrs {
                            if !decl.attrs.contains(attr) {
                                errors.push(err(i, format!("node {node_id:?} emits {thing_type:?} with unknown attribute {attr:?}")));
                                ok = false;
                            }
                            if let Some(e) = check_expr(&model, expr) {
                                errors.push(err(i, e));
                                ok = false;
                            }
                        }
                    }
                }
            }
        }
        if ok {
            model.nodes.get_mut(&node_id).unwrap().effects.push(effect);
        }
    }

    // Thimac nesting must form a tree.
    for (name, thimac) in &model.thimacs {
        let mut seen = BTreeSet::new();
        seen.insert(name.clone());
        let mut cursor = thimac.parent.clone();
        while let Some(p) = cursor {
            if !seen.insert(p.clone()) {
                errors.push(BuildError {
                    decl: None,
                    message: format!("thimac nesting cycle through {name:?}"),
                });
                break;
            }
            cursor = model.thimacs.get(&p).and_then(|t| t.parent.clone());
        }
    }

    if errors.is_empty() {
        Ok(model)
    } else {
        Err(errors)
    }
}

fn check_attr_path(model: &StaticModel, path: &AttrPath) -> Option<String> {
    match model.things.get(&path.thing) {
        None => Some(format!("reference to unknown thing {:?}", path.thing)),
        Some(decl) if !decl.attrs.contains(&path.attr) => {
            Some(format!("thing {:?} has no attribute {:?}", path.thing, path.attr))
        }
        Some(_) => None,
    }
}

fn check_expr(model: &StaticModel, expr: &Expr) -> Option<String> {
    let mut terms = vec![&expr.first];
    terms.extend(expr.rest.iter().map(|(_, t)| t));
    for term in terms {
        match term {
            Term::Lit(_) => {}
            Term::Attr(path) => {
                if let Some(e) = check_attr_path(model, path) {
                    return Some(e);
                }
            }
            Term::SumStore { store, .. } => match model.thimacs.get(store) {
                None => return Some(format!("sum over unknown store {store:?}")),
                Some(t) if !t.is_store => return Some(format!("sum over non-store thimac {store:?}")),
                Some(_) => {}
            },
        }
    }
    None
}

fn check_instance(model: &StaticModel, instance: &ThingInstance) -> Option<String> {
    match model.things.get(&instance.thing_type) {
        None => Some(format!("instance of unknown thing {:?}", instance.thing_type)),
        Some(decl) => {
            for attr in instance.attrs.keys() {
                if !decl.attrs.contains(attr) {
                    return Some(format!("thing {:?} has no attribute {attr:?}", instance.thing_type));
                }
            }
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticCode {
    // Static-model structure.
    IllegalFlow,
    UnmatchedTransferOut,
    AmbiguousRouting,
    FlowTypeMismatch,
    ProcessInputUntyped,
    IllegalTriggerSource,
    IllegalTriggerTarget,
    StoreHasNodes,
    FlowCycle,
    GuardTextOrdering,
    // Event partitioning over a static model.
    EmptyEvent,
    DuplicateEvent,
    EventUnknownNode,
    EventNotConnected,
    NodeNotCovered,
    OverlapNotTransfer,
    // Grouping of events into super-events.
    CarveUnknownEvent,
    CarveNotPartition,
    CarvePartNotConnected,
    CarveIllegalJoint,
}

/// A structural problem found by a checker. Diagnostics are collected, never
/// raised one at a time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub code: DiagnosticCode,
    /// The node, edge, or event the diagnostic is about, as display text.
    pub subject: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:?}] {}: {}", self.code, self.subject, self.message)
    }
}

fn flow_pair_legal(from: ActionKind, to: ActionKind, same_thimac: bool) -> bool {
    use ActionKind::*;
    if same_thimac {
        matches!(
            (from, to),
            (Create, Process)
                | (Create, Release)
                | (Receive, Process)
                | (Receive, Release)
                | (Process, Release)
                | (Release, TransferOut)
                | (TransferIn, Receive)
        )
    } else {
        matches!((from, to), (TransferOut, TransferIn))
    }
}

/// Check every edge of a built model against the stage-succession rules and
/// collect all structural diagnostics. An empty result means the model is
/// clean; the simulator and derivation passes assume a clean model.
pub fn check_static(model: &StaticModel) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    for (name, thimac) in &model.thimacs {
        if thimac.is_store {
            let residents: Vec<&str> = model
                .nodes
                .values()
                .filter(|n| &n.thimac == name)
                .map(|n| n.id.as_str())
                .collect();
            if !residents.is_empty() {
                out.push(Diagnostic {
                    code: DiagnosticCode::StoreHasNodes,
                    subject: name.clone(),
                    message: format!("store thimac contains action nodes: {}", residents.join(", ")),
                });
            }
        }
    }

    for flow in &model.flows {
        let from = &model.nodes[&flow.from];
        let to = &model.nodes[&flow.to];
        let same = from.thimac == to.thimac;
        let edge = format!("{} -> {}", flow.from, flow.to);
        if !flow_pair_legal(from.kind, to.kind, same) {
            let locality = if same { "within one thimac" } else { "across thimacs" };
            out.push(Diagnostic {
                code: DiagnosticCode::IllegalFlow,
                subject: edge.clone(),
                message: format!("illegal stage succession {} -> {} {locality}", from.kind, to.kind),
            });
        }
        // Pass-through stages carry exactly their declared type; a process
        // node may join several types, but what arrives is always what the
        // source stage handles.
        let pass_through = matches!(
            to.kind,
            ActionKind::Release | ActionKind::TransferIn | ActionKind::TransferOut | ActionKind::Receive
        );
        if pass_through && from.thing_type != to.thing_type {
            out.push(Diagnostic {
                code: DiagnosticCode::FlowTypeMismatch,
                subject: edge,
                message: format!(
                    "flow carries {:?} into a {} stage declared for {:?}",
                    from.thing_type, to.kind, to.thing_type
                ),
            });
        }
    }

    for node in model.nodes.values() {
        let outgoing: Vec<&FlowEdge> = model.flows.iter().filter(|f| f.from == node.id).collect();
        if outgoing.len() > 1 {
            out.push(Diagnostic {
                code: DiagnosticCode::AmbiguousRouting,
                subject: node.id.clone(),
                message: format!(
                    "node has {} outgoing flows for thing {:?}; forwarding would be ambiguous",
                    outgoing.len(),
                    node.thing_type
                ),
            });
        }
        if node.kind == ActionKind::TransferOut {
            let matched = outgoing
                .iter()
                .any(|f| model.nodes[&f.to].kind == ActionKind::TransferIn);
            if !matched {
                out.push(Diagnostic {
                    code: DiagnosticCode::UnmatchedTransferOut,
                    subject: node.id.clone(),
                    message: "transfer out has no matching transfer in".into(),
                });
            }
        }
        if node.kind == ActionKind::Process {
            let in_types: BTreeSet<&str> = model
                .flows
                .iter()
                .filter(|f| f.to == node.id)
                .map(|f| model.nodes[&f.from].thing_type.as_str())
                .collect();
            if !in_types.is_empty() && !in_types.contains(node.thing_type.as_str()) {
                out.push(Diagnostic {
                    code: DiagnosticCode::ProcessInputUntyped,
                    subject: node.id.clone(),
                    message: format!(
                        "process node declared for {:?} but no incoming flow carries it",
                        node.thing_type
                    ),
                });
            }
        }
    }

    for trigger in &model.triggers {
        let from = &model.nodes[&trigger.from];
        let to = &model.nodes[&trigger.to];
        let edge = format!("{} -> {}", trigger.from, trigger.to);
        if !matches!(from.kind, ActionKind::Create | ActionKind::Process) {
            out.push(Diagnostic {
                code: DiagnosticCode::IllegalTriggerSource,
                subject: edge.clone(),
                message: format!("illegal trigger source kind {}", from.kind),
            });
        }
        if !matches!(
            to.kind,
            ActionKind::Create | ActionKind::Process | ActionKind::Release | ActionKind::TransferIn | ActionKind::TransferOut
        ) {
            out.push(Diagnostic {
                code: DiagnosticCode::IllegalTriggerTarget,
                subject: edge.clone(),
                message: format!("illegal trigger target kind {}", to.kind),
            });
        }
        if let Some(g) = &trigger.guard {
            let textual = |op: &Operand| matches!(op, Operand::Lit(Value::Text(_)));
            if g.op.is_ordering() && (textual(&g.lhs) || textual(&g.rhs)) {
                out.push(Diagnostic {
                    code: DiagnosticCode::GuardTextOrdering,
                    subject: edge,
                    message: format!("ordering comparison {} on text operand", g.op),
                });
            }
        }
    }

    // Things may loop only through stores (pop/append), never through the
    // flow relation itself.
    out.extend(flow_cycles(model));

    out
}

fn flow_cycles(model: &StaticModel) -> Vec<Diagnostic> {
    let mut succ: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for f in &model.flows {
        succ.entry(f.from.as_str()).or_default().push(f.to.as_str());
    }
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut color: BTreeMap<&str, u8> = BTreeMap::new();
    let mut found = Vec::new();
    for start in model.nodes.keys() {
        if color.get(start.as_str()).copied().unwrap_or(0) != 0 {
            continue;
        }
        let mut stack: Vec<(&str, usize)> = vec![(start.as_str(), 0)];
        color.insert(start.as_str(), 1);
        while let Some((node, idx)) = stack.pop() {
            let next = succ.get(node).and_then(|s| s.get(idx)).copied();
            match next {
                Some(to) => {
                    stack.push((node, idx + 1));
                    match color.get(to).copied().unwrap_or(0) {
                        0 => {
                            color.insert(to, 1);
                            stack.push((to, 0));
                        }
                        1 => found.push(Diagnostic {
                            code: DiagnosticCode::FlowCycle,
                            subject: format!("{node} -> {to}"),
                            message: "flow edges form a cycle; loops may only pass through stores".into(),
                        }),
                        _ => {}
                    }
                }
                None => {
                    color.insert(node, 2);
                }
            }
        }
    }
    found
}

/// Order identifiers so that embedded numbers compare numerically: E2 sorts
/// before E10. Falls back to byte order for equal numeric runs.
pub fn natural_cmp(a: &str, b: &str) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    let ab = a.as_bytes();
    let bb = b.as_bytes();
    let (mut i, mut j) = (0, 0);
    while i < ab.len() && j < bb.len() {
        let ca = ab[i];
        let cb = bb[j];
        if ca.is_ascii_digit() && cb.is_ascii_digit() {
            let si = i;
            let sj = j;
            while i < ab.len() && ab[i].is_ascii_digit() {
                i += 1;
            }
            while j < bb.len() && bb[j].is_ascii_digit() {
                j += 1;
            }
            let na: u128 = a[si..i].parse().unwrap_or(u128::MAX);
            let nb: u128 = b[sj..j].parse().unwrap_or(u128::MAX);
            match na.cmp(&nb) {
                Ordering::Equal => match (i - si).cmp(&(j - sj)) {
                    // Distinguish 007 from 7 so ordering stays total.
                    Ordering::Equal => {}
                    other => return other,
                },
                other => return other,
            }
        } else {
            match ca.cmp(&cb) {
                Ordering::Equal => {
                    i += 1;
                    j += 1;
                }
                other => return other,
            }
        }
    }
    (ab.len() - i).cmp(&(bb.len() - j))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(id: &str, kind: ActionKind, thing: &str, thimac: &str) -> Decl {
        Decl::Node { id: id.into(), kind, thing_type: thing.into(), thimac: thimac.into() }
    }

    fn base_decls() -> Vec<Decl> {
        vec![
            Decl::Name("m".into()),
            Decl::Thimac { name: "A".into(), parent: None, store: false },
            Decl::Thing { name: "t".into(), attrs: vec!["x".into()] },
        ]
    }

    #[test]
    fn empty_model_builds() {
        let m = build_model(&[]).unwrap();
        assert_eq!(m.thimacs.len(), 0);
        assert_eq!(m.nodes.len(), 0);
        assert!(check_static(&m).is_empty());
    }

    #[test]
    fn dangling_flow_endpoint_is_named() {
        let mut decls = base_decls();
        decls.push(node("a", ActionKind::Create, "t", "A"));
        decls.push(Decl::Flow { from: "a".into(), to: "x9".into() });
        let errs = build_model(&decls).unwrap_err();
        assert!(errs.iter().any(|e| e.message.contains("x9")));
    }

    #[test]
    fn process_to_process_flagged() {
        let mut decls = base_decls();
        decls.push(node("p1", ActionKind::Process, "t", "A"));
        decls.push(node("p2", ActionKind::Process, "t", "A"));
        decls.push(Decl::Flow { from: "p1".into(), to: "p2".into() });
        let m = build_model(&decls).unwrap();
        let diags = check_static(&m);
        assert!(diags.iter().any(|d| d.code == DiagnosticCode::IllegalFlow
            && d.message.contains("illegal stage succession")));
    }

    #[test]
    fn trigger_from_release_flagged() {
        let mut decls = base_decls();
        decls.push(node("r", ActionKind::Release, "t", "A"));
        decls.push(node("p", ActionKind::Process, "t", "A"));
        decls.push(Decl::Trigger { from: "r".into(), to: "p".into(), guard: None });
        let m = build_model(&decls).unwrap();
        let diags = check_static(&m);
        assert!(diags.iter().any(|d| d.code == DiagnosticCode::IllegalTriggerSource));
    }

    #[test]
    fn flow_cycle_flagged() {
        let mut decls = base_decls();
        decls.push(node("c", ActionKind::Create, "t", "A"));
        decls.push(node("p", ActionKind::Process, "t", "A"));
        decls.push(node("r", ActionKind::Release, "t", "A"));
        decls.push(Decl::Flow { from: "c".into(), to: "p".into() });
        decls.push(Decl::Flow { from: "p".into(), to: "r".into() });
        // Deliberately illegal succession to close the loop; both the pair
        // and the cycle should be reported.
        decls.push(Decl::Flow { from: "r".into(), to: "p".into() });
        let m = build_model(&decls).unwrap();
        let diags = check_static(&m);
        assert!(diags.iter().any(|d| d.code == DiagnosticCode::FlowCycle));
    }

    #[test]
    fn effect_on_release_rejected() {
        let mut decls = base_decls();
        decls.push(node("r", ActionKind::Release, "t", "A"));
        decls.push(Decl::Effect(Effect::Assign {
            attr: "x".into(),
            expr: Expr::lit(Value::Int(1)),
        }));
        let errs = build_model(&decls).unwrap_err();
        assert!(errs.iter().any(|e| e.message.contains("only create and process")));
    }

    #[test]
    fn natural_order_numbers() {
        assert!(natural_cmp("E2", "E10").is_lt());
        assert!(natural_cmp("E10", "E10").is_eq());
        assert!(natural_cmp("E13", "E9").is_gt());
        assert!(natural_cmp("a2b", "a10a").is_lt());
    }
}
