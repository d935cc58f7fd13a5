//! Deterministic token simulator.
//!
//! Every action node owns one FIFO queue per incoming thing type, plus a FIFO
//! of *control tokens* if any trigger points at it. A node is enabled when all
//! of its input queues hold a token, its control queue holds one (if it is
//! trigger-gated), and every store it pops from has enough instances. Firing
//! consumes one token per input queue and one control token, runs the node's
//! effects in declared order, forwards the resulting instance along the node's
//! outgoing flow (unless an `append` routed it into a store), and evaluates
//! outgoing triggers, depositing the firing's full attribute scope as a
//! control token at each target whose guard holds.
//!
//! Work injected from outside the model (user choices, arriving payloads)
//! enters through `create` or `transfer_in` nodes and is replayed first, one
//! firing per injection, with effects skipped. After that the simulator picks
//! the enabled node that has been waiting longest (ties broken by node id)
//! until the model is quiescent or the step budget runs out.

mod conform;

pub use conform::{conforms, ConformanceReport, Violation};

use crate::model::{
    ActionKind, ActionNode, ArithOp, CmpOp, Expr, Guard, Operand, StaticModel, Term,
    ThingInstance, TriggerEdge, Value,
};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use thiserror::Error;

/// An instance handed to a node from outside the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Injection {
    pub node: String,
    pub instance: ThingInstance,
}

impl Injection {
    pub fn new(node: impl Into<String>, instance: ThingInstance) -> Injection {
        Injection { node: node.into(), instance }
    }
}

/// One node activation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Firing {
    /// 1-based position in the run.
    pub step: u64,
    pub node: String,
    /// True when this firing replays an injection rather than queued tokens.
    pub injected: bool,
    /// Instances taken from input queues, in thing-type order.
    pub consumed: Vec<ThingInstance>,
    /// Instances removed from stores by pop effects, in effect order.
    pub popped: Vec<ThingInstance>,
    /// Instances leaving the node: its product (if any), then emitted extras.
    pub produced: Vec<ThingInstance>,
}

/// A complete run, quiescent unless it arrived inside a budget error.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trace {
    pub firings: Vec<Firing>,
}

impl Trace {
    /// One JSON object per line, one line per firing.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for f in &self.firings {
            out.push_str(&serde_json::to_string(f).expect("firing serializes"));
            out.push('\n');
        }
        out
    }

    /// Inverse of [`Trace::to_jsonl`]. Blank lines are skipped.
    pub fn from_jsonl(text: &str) -> Result<Trace, SimError> {
        let mut firings = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let f: Firing = serde_json::from_str(line)
                .map_err(|e| SimError::TraceFormat { line: i + 1, message: e.to_string() })?;
            firings.push(f);
        }
        Ok(Trace { firings })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("injection {index}: unknown node `{node}`")]
    UnknownInjectionNode { index: usize, node: String },
    #[error("injection {index}: `{node}` is a {kind} node; only create and transfer_in accept injections")]
    IllegalInjectionKind { index: usize, node: String, kind: String },
    #[error("injection {index}: node `{node}` handles `{expected}`, instance is `{got}`")]
    InjectionTypeMismatch { index: usize, node: String, expected: String, got: String },
    #[error("node `{node}`: {message}")]
    Eval { node: String, message: String },
    #[error("step budget exhausted after {} firings with work remaining", trace.firings.len())]
    StepBudgetExhausted { trace: Trace },
    #[error("trace step {step}: node `{node}` is not covered by the behavioral model")]
    UnknownTraceNode { step: u64, node: String },
    #[error("trace line {line}: {message}")]
    TraceFormat { line: usize, message: String },
}

/// Per-node facts that do not change during a run.
struct NodeInfo<'a> {
    node: &'a ActionNode,
    /// Distinct thing types arriving on incoming flows.
    in_types: BTreeSet<&'a str>,
    /// Whether any trigger points here.
    gated: bool,
    /// Store name -> number of pop effects drawing on it.
    pops: BTreeMap<&'a str, usize>,
    out_flow: Option<&'a str>,
    /// Outgoing triggers, ordered by target id.
    out_triggers: Vec<&'a TriggerEdge>,
}

struct Machine<'a> {
    infos: BTreeMap<&'a str, NodeInfo<'a>>,
    /// node -> thing type -> waiting instances.
    queues: BTreeMap<&'a str, BTreeMap<&'a str, VecDeque<ThingInstance>>>,
    /// node -> waiting control tokens (attribute scopes from upstream firings).
    control: BTreeMap<&'a str, VecDeque<BTreeMap<String, Value>>>,
    stores: BTreeMap<&'a str, VecDeque<ThingInstance>>,
    /// node -> step at which it most recently became enabled.
    stamps: BTreeMap<&'a str, u64>,
    /// (stamp, node) pairs for every currently enabled node.
    ready: BTreeSet<(u64, &'a str)>,
}

/// Run `model` on `injections` until quiescent, or fail once `max_steps`
/// firings have happened and work still remains.
pub fn simulate(
    model: &StaticModel,
    injections: &[Injection],
    max_steps: u64,
) -> Result<Trace, SimError> {
    for (index, inj) in injections.iter().enumerate() {
        let node = model.nodes.get(&inj.node).ok_or_else(|| SimError::UnknownInjectionNode {
            index,
            node: inj.node.clone(),
        })?;
        if !matches!(node.kind, ActionKind::Create | ActionKind::TransferIn) {
            return Err(SimError::IllegalInjectionKind {
                index,
                node: inj.node.clone(),
                kind: node.kind.label().to_string(),
            });
        }
        if node.thing_type != inj.instance.thing_type {
            return Err(SimError::InjectionTypeMismatch {
                index,
                node: inj.node.clone(),
                expected: node.thing_type.clone(),
                got: inj.instance.thing_type.clone(),
            });
        }
    }

    let mut m = Machine::new(model);
    let mut trace = Trace::default();
    let mut step: u64 = 0;

    for inj in injections {
        if step >= max_steps {
            return Err(SimError::StepBudgetExhausted { trace });
        }
        step += 1;
        if let Err(message) = m.fire_injected(inj, step, &mut trace) {
            return Err(SimError::Eval { node: inj.node.clone(), message });
        }
        m.rescan(step);
    }
    m.rescan(step);

    loop {
        let Some(&(_, id)) = m.ready.iter().next() else {
            return Ok(trace);
        };
        if step >= max_steps {
            return Err(SimError::StepBudgetExhausted { trace });
        }
        step += 1;
        if let Err(message) = m.fire(id, step, &mut trace) {
            return Err(SimError::Eval { node: id.to_string(), message });
        }
        m.rescan(step);
    }
}

impl<'a> Machine<'a> {
    fn new(model: &'a StaticModel) -> Machine<'a> {
        let mut infos: BTreeMap<&str, NodeInfo> = model
            .nodes
            .values()
            .map(|n| {
                (
                    n.id.as_str(),
                    NodeInfo {
                        node: n,
                        in_types: BTreeSet::new(),
                        gated: false,
                        pops: BTreeMap::new(),
                        out_flow: None,
                        out_triggers: Vec::new(),
                    },
                )
            })
            .collect();
        for f in &model.flows {
            let from_type = model.nodes[&f.from].thing_type.as_str();
            if let Some(info) = infos.get_mut(f.to.as_str()) {
                info.in_types.insert(from_type);
            }
            if let Some(info) = infos.get_mut(f.from.as_str()) {
                info.out_flow = Some(f.to.as_str());
            }
        }
        for t in &model.triggers {
            if let Some(info) = infos.get_mut(t.to.as_str()) {
                info.gated = true;
            }
            if let Some(info) = infos.get_mut(t.from.as_str()) {
                info.out_triggers.push(t);
            }
        }
        for info in infos.values_mut() {
            info.out_triggers.sort_by(|a, b| a.to.cmp(&b.to));
            for eff in &info.node.effects {
                if let crate::model::Effect::Pop { store } = eff {
                    *info.pops.entry(store.as_str()).or_insert(0) += 1;
                }
            }
        }
        let stores = model
            .stores()
            .map(|t| (t.name.as_str(), t.contents.iter().cloned().collect()))
            .collect();
        let queues = model.nodes.keys().map(|id| (id.as_str(), BTreeMap::new())).collect();
        let control = model.nodes.keys().map(|id| (id.as_str(), VecDeque::new())).collect();
        Machine { infos, queues, control, stores, stamps: BTreeMap::new(), ready: BTreeSet::new() }
    }

    fn enabled(&self, id: &str) -> bool {
        let info = &self.infos[id];
        for (store, need) in &info.pops {
            if self.stores.get(store).map_or(0, VecDeque::len) < *need {
                return false;
            }
        }
        let has_control = !self.control[id].is_empty();
        match info.node.kind {
            // A create node runs only on a trigger; without one it is a pure
            // injection point.
            ActionKind::Create => info.gated && has_control,
            _ => {
                // A transfer_in with no incoming flow is an injection point;
                // an ungated node with no inputs at all can never run.
                if info.in_types.is_empty() && (info.node.kind == ActionKind::TransferIn || !info.gated) {
                    return false;
                }
                if info.gated && !has_control {
                    return false;
                }
                info.in_types
                    .iter()
                    .all(|t| self.queues[id].get(t).is_some_and(|q| !q.is_empty()))
            }
        }
    }

    /// Refresh the enabled set. Nodes keep their stamp while continuously
    /// enabled, lose it when disabled, and re-stamp at the current step when
    /// they come back — so the scheduler serves the longest-waiting node.
    fn rescan(&mut self, step: u64) {
        let ids: Vec<&'a str> = self.infos.keys().copied().collect();
        for id in ids {
            let e = self.enabled(id);
            match (e, self.stamps.get(id).copied()) {
                (true, None) => {
                    self.stamps.insert(id, step);
                    self.ready.insert((step, id));
                }
                (false, Some(s)) => {
                    self.stamps.remove(id);
                    self.ready.remove(&(s, id));
                }
                _ => {}
            }
        }
    }

    fn fire_injected(&mut self, inj: &'a Injection, step: u64, trace: &mut Trace) -> Result<(), String> {
        let info = &self.infos[inj.node.as_str()];
        let product = inj.instance.clone();
        let mut scope = BTreeMap::new();
        overlay(&mut scope, &product);
        if let Some(target) = info.out_flow {
            self.queues
                .get_mut(target)
                .expect("flow target exists")
                .entry(info.node.thing_type.as_str())
                .or_default()
                .push_back(product.clone());
        }
        let triggers = info.out_triggers.clone();
        let node_id = info.node.id.clone();
        for t in triggers {
            let pass = match &t.guard {
                None => true,
                Some(g) => eval_guard(g, &scope)?,
            };
            if pass {
                self.control.get_mut(t.to.as_str()).expect("trigger target exists").push_back(scope.clone());
            }
        }
        trace.firings.push(Firing {
            step,
            node: node_id,
            injected: true,
            consumed: Vec::new(),
            popped: Vec::new(),
            produced: vec![product],
        });
        Ok(())
    }

    fn fire(&mut self, id: &'a str, step: u64, trace: &mut Trace) -> Result<(), String> {
        // Drop the fired node's stamp; rescan() re-stamps it at the current
        // step if it is still enabled, sending it behind its peers.
        if let Some(s) = self.stamps.remove(id) {
            self.ready.remove(&(s, id));
        }

        let info = &self.infos[id];
        let kind = info.node.kind;
        let own_type = info.node.thing_type.clone();
        let in_types: Vec<&str> = info.in_types.iter().copied().collect();
        let out_flow = info.out_flow;
        let out_triggers = info.out_triggers.clone();
        let effects = info.node.effects.clone();

        let mut binding: BTreeMap<String, Value> = if info.gated {
            self.control.get_mut(id).unwrap().pop_front().expect("enabled gated node has control")
        } else {
            BTreeMap::new()
        };

        let mut consumed = Vec::new();
        for t in &in_types {
            let inst = self.queues.get_mut(id).unwrap().get_mut(t).unwrap().pop_front()
                .expect("enabled node has input");
            overlay(&mut binding, &inst);
            consumed.push(inst);
        }

        let mut product: Option<ThingInstance> = match kind {
            ActionKind::Create => Some(ThingInstance::new(own_type.clone())),
            ActionKind::Process => consumed.iter().find(|i| i.thing_type == own_type).cloned(),
            _ => consumed
                .iter()
                .find(|i| i.thing_type == own_type)
                .or_else(|| consumed.first())
                .cloned(),
        };

        let mut popped = Vec::new();
        let mut emitted = Vec::new();
        let mut store_routed = false;
        for eff in &effects {
            match eff {
                crate::model::Effect::Pop { store } => {
                    let inst = self
                        .stores
                        .get_mut(store.as_str())
                        .and_then(VecDeque::pop_front)
                        .ok_or_else(|| format!("pop from empty store `{store}`"))?;
                    popped.push(inst.clone());
                    product = Some(inst);
                }
                crate::model::Effect::Assign { attr, expr } => {
                    let v = eval_expr(expr, &binding, product.as_ref(), &self.stores)?;
                    let p = product.as_mut().ok_or("assign with nothing to assign to")?;
                    p.attrs.insert(attr.clone(), v);
                }
                crate::model::Effect::Append { store } => {
                    let p = product.clone().ok_or("append with nothing to append")?;
                    self.stores
                        .get_mut(store.as_str())
                        .ok_or_else(|| format!("unknown store `{store}`"))?
                        .push_back(p);
                    store_routed = true;
                }
                crate::model::Effect::Emit { thing_type, attrs } => {
                    let mut inst = ThingInstance::new(thing_type.clone());
                    for (attr, expr) in attrs {
                        let v = eval_expr(expr, &binding, product.as_ref(), &self.stores)?;
                        inst.attrs.insert(attr.clone(), v);
                    }
                    emitted.push(inst);
                }
            }
        }

        // The firing's full attribute scope: everything consumed, overlaid by
        // the final product. Downstream triggers see this as their control.
        let mut scope = binding;
        if let Some(p) = &product {
            overlay(&mut scope, p);
        }

        if let Some(target) = out_flow {
            let q = self.queues.get_mut(target).expect("flow target exists");
            if let Some(p) = &product {
                if !store_routed {
                    q.entry(own_type_key(&self.infos, id)).or_default().push_back(p.clone());
                }
            }
            for e in &emitted {
                if e.thing_type == own_type {
                    q.entry(own_type_key(&self.infos, id)).or_default().push_back(e.clone());
                }
            }
        }

        for t in &out_triggers {
            let pass = match &t.guard {
                None => true,
                Some(g) => eval_guard(g, &scope)?,
            };
            if pass {
                self.control.get_mut(t.to.as_str()).expect("trigger target exists").push_back(scope.clone());
            }
        }

        let mut produced = Vec::new();
        if let Some(p) = product {
            produced.push(p);
        }
        produced.extend(emitted);
        trace.firings.push(Firing {
            step,
            node: id.to_string(),
            injected: false,
            consumed,
            popped,
            produced,
        });
        Ok(())
    }
}

/// The interned thing-type key for a node's own type.
fn own_type_key<'a>(infos: &BTreeMap<&'a str, NodeInfo<'a>>, id: &str) -> &'a str {
    infos[id].node.thing_type.as_str()
}

fn overlay(scope: &mut BTreeMap<String, Value>, inst: &ThingInstance) {
    for (attr, v) in &inst.attrs {
        scope.insert(format!("{}.{}", inst.thing_type, attr), v.clone());
    }
}

fn lookup<'v>(
    thing: &str,
    attr: &str,
    scope: &'v BTreeMap<String, Value>,
    product: Option<&'v ThingInstance>,
) -> Result<&'v Value, String> {
    if let Some(p) = product {
        if p.thing_type == thing {
            if let Some(v) = p.attrs.get(attr) {
                return Ok(v);
            }
        }
    }
    scope
        .get(&format!("{thing}.{attr}"))
        .ok_or_else(|| format!("`{thing}.{attr}` is not in scope"))
}

fn eval_term(
    term: &Term,
    scope: &BTreeMap<String, Value>,
    product: Option<&ThingInstance>,
    stores: &BTreeMap<&str, VecDeque<ThingInstance>>,
) -> Result<Value, String> {
    match term {
        Term::Lit(v) => Ok(v.clone()),
        Term::Attr(path) => lookup(&path.thing, &path.attr, scope, product).cloned(),
        Term::SumStore { store, attr } => {
            let contents = stores.get(store.as_str()).ok_or_else(|| format!("unknown store `{store}`"))?;
            let mut total: i64 = 0;
            for inst in contents {
                match inst.attrs.get(attr) {
                    Some(Value::Int(n)) => {
                        total = total
                            .checked_add(*n)
                            .ok_or_else(|| format!("sum({store}.{attr}) overflows"))?;
                    }
                    Some(Value::Text(_)) => {
                        return Err(format!("sum({store}.{attr}) over text values"));
                    }
                    None => return Err(format!("store `{store}` holds an instance without `{attr}`")),
                }
            }
            Ok(Value::Int(total))
        }
    }
}

fn eval_expr(
    expr: &Expr,
    scope: &BTreeMap<String, Value>,
    product: Option<&ThingInstance>,
    stores: &BTreeMap<&str, VecDeque<ThingInstance>>,
) -> Result<Value, String> {
    let mut acc = eval_term(&expr.first, scope, product, stores)?;
    for (op, term) in &expr.rest {
        let rhs = eval_term(term, scope, product, stores)?;
        let (Value::Int(a), Value::Int(b)) = (&acc, &rhs) else {
            return Err("arithmetic over text values".to_string());
        };
        let r = match op {
            ArithOp::Add => a.checked_add(*b),
            ArithOp::Sub => a.checked_sub(*b),
        };
        acc = Value::Int(r.ok_or("arithmetic overflow")?);
    }
    Ok(acc)
}

fn eval_guard(guard: &Guard, scope: &BTreeMap<String, Value>) -> Result<bool, String> {
    let value_of = |op: &Operand| -> Result<Value, String> {
        match op {
            Operand::Lit(v) => Ok(v.clone()),
            Operand::Attr(path) => lookup(&path.thing, &path.attr, scope, None).cloned(),
        }
    };
    let lhs = value_of(&guard.lhs)?;
    let rhs = value_of(&guard.rhs)?;
    match (&lhs, &rhs) {
        (Value::Int(a), Value::Int(b)) => Ok(match guard.op {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }),
        (Value::Text(a), Value::Text(b)) => match guard.op {
            CmpOp::Eq => Ok(a == b),
            CmpOp::Ne => Ok(a != b),
            _ => Err(format!("ordering comparison `{}` on text values", guard.op.symbol())),
        },
        _ => Err(format!(
            "comparison `{} {} {}` mixes text and integer",
            guard.lhs, guard.op.symbol(), guard.rhs
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_model, Decl, Effect, Expr, Guard, Operand, Term, Value};

    fn decl_node(id: &str, kind: &str, thing: &str, thimac: &str) -> Decl {
        Decl::Node {
            id: id.into(),
            kind: ActionKind::parse(kind).unwrap(),
            thing_type: thing.into(),
            thimac: thimac.into(),
        }
    }

    fn attr(thing: &str, attr: &str) -> crate::model::AttrPath {
        crate::model::AttrPath { thing: thing.into(), attr: attr.into() }
    }

    /// doc -> release -> transfer_out -> transfer_in -> receive -> process,
    /// plus a trigger from the process into a create that reads the doc.
    fn pipeline() -> StaticModel {
        let decls = vec![
            Decl::Name("pipe".into()),
            Decl::Thimac { name: "A".into(), parent: None, store: false },
            Decl::Thimac { name: "B".into(), parent: None, store: false },
            Decl::Thing { name: "doc".into(), attrs: vec!["size".into()] },
            Decl::Thing { name: "ack".into(), attrs: vec!["size".into()] },
            decl_node("a_create", "create", "doc", "A"),
            decl_node("a_rel", "release", "doc", "A"),
            decl_node("a_out", "transfer_out", "doc", "A"),
            decl_node("b_in", "transfer_in", "doc", "B"),
            decl_node("b_rcv", "receive", "doc", "B"),
            decl_node("b_proc", "process", "doc", "B"),
            decl_node("b_ack", "create", "ack", "B"),
            Decl::Effect(Effect::Assign {
                attr: "size".into(),
                expr: Expr {
                    first: Term::Attr(attr("doc", "size")),
                    rest: vec![(ArithOp::Add, Term::Lit(Value::Int(1)))],
                },
            }),
            Decl::Flow { from: "a_create".into(), to: "a_rel".into() },
            Decl::Flow { from: "a_rel".into(), to: "a_out".into() },
            Decl::Flow { from: "a_out".into(), to: "b_in".into() },
            Decl::Flow { from: "b_in".into(), to: "b_rcv".into() },
            Decl::Flow { from: "b_rcv".into(), to: "b_proc".into() },
            Decl::Trigger {
                from: "b_proc".into(),
                to: "b_ack".into(),
                guard: Some(Guard {
                    lhs: Operand::Attr(attr("doc", "size")),
                    op: CmpOp::Ge,
                    rhs: Operand::Lit(Value::Int(10)),
                }),
            },
        ];
        build_model(&decls).unwrap()
    }

    fn doc(size: i64) -> ThingInstance {
        let mut i = ThingInstance::new("doc");
        i.attrs.insert("size".into(), Value::Int(size));
        i
    }

    #[test]
    fn runs_injection_to_quiescence() {
        let m = pipeline();
        let trace = simulate(&m, &[Injection::new("a_create", doc(12))], 100).unwrap();
        let nodes: Vec<&str> = trace.firings.iter().map(|f| f.node.as_str()).collect();
        assert_eq!(nodes, ["a_create", "a_rel", "a_out", "b_in", "b_rcv", "b_proc", "b_ack"]);
        assert!(trace.firings[0].injected);
        assert!(!trace.firings[1].injected);
        // The ack copies the doc size and adds one.
        let ack = &trace.firings[6].produced[0];
        assert_eq!(ack.attrs["size"], Value::Int(13));
    }

    #[test]
    fn guard_blocks_small_doc() {
        let m = pipeline();
        let trace = simulate(&m, &[Injection::new("a_create", doc(3))], 100).unwrap();
        let nodes: Vec<&str> = trace.firings.iter().map(|f| f.node.as_str()).collect();
        assert_eq!(nodes.last(), Some(&"b_proc"));
        assert!(!nodes.contains(&"b_ack"));
    }

    #[test]
    fn fifo_keeps_arrival_order() {
        let m = pipeline();
        let trace = simulate(
            &m,
            &[Injection::new("a_create", doc(20)), Injection::new("a_create", doc(21))],
            100,
        )
        .unwrap();
        let sizes: Vec<i64> = trace
            .firings
            .iter()
            .filter(|f| f.node == "b_proc")
            .map(|f| match f.produced[0].attrs["size"] {
                Value::Int(n) => n,
                _ => panic!(),
            })
            .collect();
        assert_eq!(sizes, [20, 21]);
    }

    #[test]
    fn budget_exhaustion_returns_partial_trace() {
        let m = pipeline();
        let err = simulate(&m, &[Injection::new("a_create", doc(1))], 3).unwrap_err();
        match err {
            SimError::StepBudgetExhausted { trace } => assert_eq!(trace.firings.len(), 3),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_injection_at_plain_node() {
        let m = pipeline();
        let err = simulate(&m, &[Injection::new("a_rel", doc(1))], 10).unwrap_err();
        assert!(matches!(err, SimError::IllegalInjectionKind { .. }));
    }

    #[test]
    fn rejects_mistyped_injection() {
        let m = pipeline();
        let mut wrong = ThingInstance::new("ack");
        wrong.attrs.insert("size".into(), Value::Int(1));
        let err = simulate(&m, &[Injection::new("a_create", wrong)], 10).unwrap_err();
        assert!(matches!(err, SimError::InjectionTypeMismatch { .. }));
    }

    /// A store-backed counter: each ping pops the running total, adds the
    /// ping's worth, and appends the new total back.
    fn accumulator() -> StaticModel {
        let decls = vec![
            Decl::Name("acc".into()),
            Decl::Thimac { name: "M".into(), parent: None, store: false },
            Decl::Thimac { name: "Reg".into(), parent: Some("M".into()), store: true },
            Decl::Thing { name: "ping".into(), attrs: vec!["worth".into()] },
            Decl::Thing { name: "total".into(), attrs: vec!["value".into()] },
            decl_node("p_in", "transfer_in", "ping", "M"),
            decl_node("p_rcv", "receive", "ping", "M"),
            decl_node("p_proc", "process", "ping", "M"),
            decl_node("t_upd", "create", "total", "M"),
            Decl::Effect(Effect::Pop { store: "Reg".into() }),
            Decl::Effect(Effect::Assign {
                attr: "value".into(),
                expr: Expr {
                    first: Term::Attr(attr("total", "value")),
                    rest: vec![(ArithOp::Add, Term::Attr(attr("ping", "worth")))],
                },
            }),
            Decl::Effect(Effect::Append { store: "Reg".into() }),
            Decl::Flow { from: "p_in".into(), to: "p_rcv".into() },
            Decl::Flow { from: "p_rcv".into(), to: "p_proc".into() },
            Decl::Trigger { from: "p_proc".into(), to: "t_upd".into(), guard: None },
            Decl::Seed {
                store: "Reg".into(),
                instance: {
                    let mut i = ThingInstance::new("total");
                    i.attrs.insert("value".into(), Value::Int(0));
                    i
                },
            },
        ];
        build_model(&decls).unwrap()
    }

    #[test]
    fn store_accumulates_across_firings() {
        let m = accumulator();
        let ping = |w: i64| {
            let mut i = ThingInstance::new("ping");
            i.attrs.insert("worth".into(), Value::Int(w));
            Injection::new("p_in", i)
        };
        let trace = simulate(&m, &[ping(5), ping(7), ping(11)], 100).unwrap();
        let totals: Vec<i64> = trace
            .firings
            .iter()
            .filter(|f| f.node == "t_upd")
            .map(|f| match f.produced[0].attrs["value"] {
                Value::Int(n) => n,
                _ => panic!(),
            })
            .collect();
        assert_eq!(totals, [5, 12, 23]);
        // The popped chain shows each firing consuming the prior total.
        let firsts: Vec<i64> = trace
            .firings
            .iter()
            .filter(|f| f.node == "t_upd")
            .map(|f| match f.popped[0].attrs["value"] {
                Value::Int(n) => n,
                _ => panic!(),
            })
            .collect();
        assert_eq!(firsts, [0, 5, 12]);
    }

    #[test]
    fn pop_on_empty_store_waits() {
        let mut m = accumulator();
        // Remove the seed: the counter can never run, control tokens pile up.
        m.thimacs.get_mut("Reg").unwrap().contents.clear();
        let ping = {
            let mut i = ThingInstance::new("ping");
            i.attrs.insert("worth".into(), Value::Int(5));
            Injection::new("p_in", i)
        };
        let trace = simulate(&m, &[ping], 100).unwrap();
        assert!(trace.firings.iter().all(|f| f.node != "t_upd"));
    }

    #[test]
    fn trace_round_trips_through_jsonl() {
        let m = pipeline();
        let trace = simulate(&m, &[Injection::new("a_create", doc(12))], 100).unwrap();
        let text = trace.to_jsonl();
        assert_eq!(Trace::from_jsonl(&text).unwrap(), trace);
    }
}
