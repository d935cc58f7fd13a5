//! Exhaustive scenario validation.
//!
//! A scenario binds input variables (explicit value lists, pairs, bounded
//! multisets, or values exported by an earlier scenario), injects instances
//! built from each input combination, simulates, and checks assertions about
//! which nodes or events fired and with what attribute values. Expected
//! values come from a small arithmetic expression language evaluated over
//! the case's inputs alone — never from the simulator — so the checks stay
//! independent of the machinery they validate.
//!
//! Every combination runs as its own case; a scenario passes only when every
//! case does. Failures carry the case's inputs, the first broken assertion,
//! and a trace excerpt focused on the scenario's target super-event.

use crate::carve::Carving;
use crate::events::BehavioralModel;
use crate::model::{CmpOp, StaticModel, ThingInstance, Value};
use crate::sim::{simulate, Injection, SimError, Trace};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::time::Instant;
use thiserror::Error;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Expected-value arithmetic over a case's inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum OracleExpr {
    Lit(Value),
    /// `$x` — a scalar input.
    Var(String),
    /// `sum($x)` — total of a multiset input.
    Sum(String),
    /// `count($x, v)` — occurrences of `v` in a multiset input.
    CountOf(String, Value),
    Add(Box<OracleExpr>, Box<OracleExpr>),
    Sub(Box<OracleExpr>, Box<OracleExpr>),
}

/// What an assertion talks about.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subject {
    Node(String),
    Event(String),
}

impl std::fmt::Display for Subject {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Subject::Node(n) => write!(f, "node {n}"),
            Subject::Event(e) => write!(f, "event {e}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CountOp {
    Exactly,
    AtMost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Assertion {
    /// Some firing of the subject produced an instance carrying all the
    /// given attribute values.
    Fires { subject: Subject, with: Vec<(String, OracleExpr)> },
    Never { subject: Subject },
    Count { subject: Subject, op: CountOp, expr: OracleExpr },
}

/// An assertion, optionally applied only when a comparison over the case's
/// inputs holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub when: Option<(OracleExpr, CmpOp, OracleExpr)>,
    pub assertion: Assertion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BindingDecl {
    /// `let x = values 1, 2, 3`
    Values { var: String, values: Vec<Value> },
    /// `let a, b = pairs (1, 2), (3, 4)` — two vars bound together.
    Pairs { vars: (String, String), pairs: Vec<(Value, Value)> },
    /// `let x = multiset of 25, 50 count 1..5` — every multiset drawn from
    /// the listed values whose size lies in the range.
    Multiset { var: String, values: Vec<Value>, min: usize, max: usize },
    /// `let x = upstream scenario.key` — the deduplicated values another
    /// scenario exported under `key`.
    Upstream { var: String, scenario: String, key: String },
}

/// One `inject` line. With `each`, the line runs once per element of the
/// named multiset input, binding `$item` to the element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectSpec {
    pub each: Option<String>,
    pub node: String,
    pub thing: String,
    pub attrs: Vec<(String, OracleExpr)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    /// Super-event whose activity failure excerpts focus on.
    pub target: Option<String>,
    pub bindings: Vec<BindingDecl>,
    pub injections: Vec<InjectSpec>,
    pub checks: Vec<Check>,
    /// Values published for downstream scenarios, per case.
    pub exports: Vec<(String, OracleExpr)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseFailure {
    /// The case's inputs, e.g. `drink="cola", price=100`.
    pub case: String,
    pub message: String,
    /// Firings of the target super-event around the failure.
    pub trace_excerpt: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub scenario: String,
    pub target: Option<String>,
    pub cases_total: usize,
    pub cases_passed: usize,
    pub failures: Vec<CaseFailure>,
    /// Exported values, deduplicated and sorted per key.
    pub outputs: BTreeMap<String, Vec<Value>>,
    pub notices: Vec<String>,
    /// Wall-clock run time; informational only, excluded from serialization.
    #[serde(skip)]
    pub wall_ms: u128,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.cases_passed == self.cases_total
    }

    pub fn summary_line(&self) -> String {
        format!("scenario {}: {}/{} passed", self.scenario, self.cases_passed, self.cases_total)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HarnessError {
    #[error("scenario `{scenario}`: no upstream report named `{upstream}`")]
    UnknownUpstream { scenario: String, upstream: String },
    #[error("scenario `{scenario}`: upstream `{upstream}` exports nothing under `{key}`")]
    UnknownUpstreamKey { scenario: String, upstream: String, key: String },
    #[error("scenario `{scenario}`: no super-event named `{target}` in the grouping")]
    UnknownTarget { scenario: String, target: String },
    #[error("scenario `{scenario}`: {message}")]
    Invalid { scenario: String, message: String },
}

/// How to spread cases over CPUs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecMode {
    Sequential,
    /// Run cases on a thread pool. Falls back to sequential when the
    /// `parallel` feature is disabled; results are identical either way.
    Parallel,
}

/// Everything a scenario run needs besides the scenario itself.
pub struct ScenarioContext<'a> {
    pub model: &'a StaticModel,
    pub behavior: &'a BehavioralModel,
    pub carving: Option<&'a Carving>,
    pub max_steps: u64,
}

/// One input combination: scalar or multiset values per variable.
#[derive(Debug, Clone, PartialEq)]
enum CaseValue {
    Scalar(Value),
    Multi(Vec<Value>),
}

type Case = BTreeMap<String, CaseValue>;

/// All multisets over `values` whose size lies in `min..=max`, ordered by
/// size then lexicographically by per-value counts. Elements within one
/// multiset keep the declared value order.
pub fn enumerate_multisets(values: &[Value], min: usize, max: usize) -> Vec<Vec<Value>> {
    fn count_vectors(slots: usize, total: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slots == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for c in 0..=total {
            prefix.push(c);
            count_vectors(slots - 1, total - c, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if values.is_empty() {
        return out;
    }
    for k in min..=max {
        let mut vectors = Vec::new();
        count_vectors(values.len(), k, &mut Vec::new(), &mut vectors);
        for counts in vectors {
            let mut ms = Vec::new();
            for (i, &c) in counts.iter().enumerate() {
                for _ in 0..c {
                    ms.push(values[i].clone());
                }
            }
            out.push(ms);
        }
    }
    out
}

fn value_order(a: &Value, b: &Value) -> std::cmp::Ordering {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => x.cmp(y),
        (Value::Int(_), Value::Text(_)) => std::cmp::Ordering::Less,
        (Value::Text(_), Value::Int(_)) => std::cmp::Ordering::Greater,
        (Value::Text(x), Value::Text(y)) => x.cmp(y),
    }
}

fn enumerate_cases(
    scenario: &Scenario,
    upstream: &[ValidationReport],
) -> Result<Vec<Case>, HarnessError> {
    let mut cases: Vec<Case> = vec![BTreeMap::new()];
    for b in &scenario.bindings {
        let options: Vec<Vec<(String, CaseValue)>> = match b {
            BindingDecl::Values { var, values } => values
                .iter()
                .map(|v| vec![(var.clone(), CaseValue::Scalar(v.clone()))])
                .collect(),
            BindingDecl::Pairs { vars, pairs } => pairs
                .iter()
                .map(|(a, b)| {
                    vec![
                        (vars.0.clone(), CaseValue::Scalar(a.clone())),
                        (vars.1.clone(), CaseValue::Scalar(b.clone())),
                    ]
                })
                .collect(),
            BindingDecl::Multiset { var, values, min, max } => {
                enumerate_multisets(values, *min, *max)
                    .into_iter()
                    .map(|ms| vec![(var.clone(), CaseValue::Multi(ms))])
                    .collect()
            }
            BindingDecl::Upstream { var, scenario: up, key } => {
                let report = upstream.iter().find(|r| r.scenario == *up).ok_or_else(|| {
                    HarnessError::UnknownUpstream {
                        scenario: scenario.name.clone(),
                        upstream: up.clone(),
                    }
                })?;
                let values = report.outputs.get(key).ok_or_else(|| {
                    HarnessError::UnknownUpstreamKey {
                        scenario: scenario.name.clone(),
                        upstream: up.clone(),
                        key: key.clone(),
                    }
                })?;
                values.iter().map(|v| vec![(var.clone(), CaseValue::Scalar(v.clone()))]).collect()
            }
        };
        let mut next = Vec::with_capacity(cases.len() * options.len());
        for case in &cases {
            for opt in &options {
                let mut c = case.clone();
                for (k, v) in opt {
                    c.insert(k.clone(), v.clone());
                }
                next.push(c);
            }
        }
        cases = next;
    }
    Ok(cases)
}

fn eval_oracle(e: &OracleExpr, case: &Case, item: Option<&Value>) -> Result<Value, String> {
    match e {
        OracleExpr::Lit(v) => Ok(v.clone()),
        OracleExpr::Var(x) => {
            if x == "item" {
                if let Some(v) = item {
                    return Ok(v.clone());
                }
            }
            match case.get(x) {
                Some(CaseValue::Scalar(v)) => Ok(v.clone()),
                Some(CaseValue::Multi(_)) => {
                    Err(format!("`${x}` is a multiset; use sum(${x}) or count(${x}, v)"))
                }
                None => Err(format!("`${x}` is not bound")),
            }
        }
        OracleExpr::Sum(x) => match case.get(x) {
            Some(CaseValue::Multi(vs)) => {
                let mut total: i64 = 0;
                for v in vs {
                    match v {
                        Value::Int(n) => {
                            total = total.checked_add(*n).ok_or("sum overflows")?;
                        }
                        Value::Text(_) => return Err(format!("sum(${x}) over text values")),
                    }
                }
                Ok(Value::Int(total))
            }
            Some(CaseValue::Scalar(_)) => Err(format!("sum(${x}) needs a multiset")),
            None => Err(format!("`${x}` is not bound")),
        },
        OracleExpr::CountOf(x, v) => match case.get(x) {
            Some(CaseValue::Multi(vs)) => {
                Ok(Value::Int(vs.iter().filter(|e| *e == v).count() as i64))
            }
            Some(CaseValue::Scalar(_)) => Err(format!("count(${x}, v) needs a multiset")),
            None => Err(format!("`${x}` is not bound")),
        },
        OracleExpr::Add(a, b) | OracleExpr::Sub(a, b) => {
            let (Value::Int(x), Value::Int(y)) =
                (eval_oracle(a, case, item)?, eval_oracle(b, case, item)?)
            else {
                return Err("arithmetic over text values".to_string());
            };
            let r = if matches!(e, OracleExpr::Add(..)) {
                x.checked_add(y)
            } else {
                x.checked_sub(y)
            };
            Ok(Value::Int(r.ok_or("arithmetic overflow")?))
        }
    }
}

fn compare_values(a: &Value, op: CmpOp, b: &Value) -> Result<bool, String> {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => Ok(match op {
            CmpOp::Eq => x == y,
            CmpOp::Ne => x != y,
            CmpOp::Lt => x < y,
            CmpOp::Le => x <= y,
            CmpOp::Gt => x > y,
            CmpOp::Ge => x >= y,
        }),
        (Value::Text(x), Value::Text(y)) => match op {
            CmpOp::Eq => Ok(x == y),
            CmpOp::Ne => Ok(x != y),
            _ => Err(format!("ordering comparison `{}` on text", op.symbol())),
        },
        _ => Err("comparison mixes text and integer".to_string()),
    }
}

fn case_label(scenario: &Scenario, case: &Case) -> String {
    let mut parts = Vec::new();
    for b in &scenario.bindings {
        let vars: Vec<&str> = match b {
            BindingDecl::Values { var, .. }
            | BindingDecl::Multiset { var, .. }
            | BindingDecl::Upstream { var, .. } => vec![var.as_str()],
            BindingDecl::Pairs { vars, .. } => vec![vars.0.as_str(), vars.1.as_str()],
        };
        for v in vars {
            let text = match case.get(v) {
                Some(CaseValue::Scalar(s)) => crate::dsl::write_value(s),
                Some(CaseValue::Multi(ms)) => {
                    let inner: Vec<String> = ms.iter().map(crate::dsl::write_value).collect();
                    format!("[{}]", inner.join(", "))
                }
                None => "?".to_string(),
            };
            parts.push(format!("{v}={text}"));
        }
    }
    parts.join(", ")
}

fn instance_text(i: &ThingInstance) -> String {
    if i.attrs.is_empty() {
        return i.thing_type.clone();
    }
    let attrs: Vec<String> =
        i.attrs.iter().map(|(a, v)| format!("{a}={}", crate::dsl::write_value(v))).collect();
    format!("{}{{{}}}", i.thing_type, attrs.join(", "))
}

/// Firing lines filtered to the target super-event's member events.
fn excerpt(trace: &Trace, ctx: &ScenarioContext, target: Option<&str>) -> Vec<String> {
    let members: Option<Vec<&str>> = target.and_then(|t| {
        ctx.carving.and_then(|c| {
            c.parts
                .iter()
                .find(|p| p.name == t)
                .map(|p| p.members.iter().map(String::as_str).collect())
        })
    });
    let mut lines = Vec::new();
    for f in &trace.firings {
        let event = ctx.behavior.event_of(&f.node).unwrap_or("?");
        if let Some(ms) = &members {
            if !ms.contains(&event) {
                continue;
            }
        }
        let mut line = format!("step {}: {} ({event})", f.step, f.node);
        if f.injected {
            line.push_str(" [injected]");
        }
        if !f.produced.is_empty() {
            let prods: Vec<String> = f.produced.iter().map(instance_text).collect();
            line.push_str(" -> ");
            line.push_str(&prods.join(", "));
        }
        lines.push(line);
        if lines.len() >= 40 {
            lines.push("...".to_string());
            break;
        }
    }
    lines
}

struct CaseOutcome {
    failure: Option<CaseFailure>,
    exports: Vec<(String, Value)>,
}

fn subject_matches(subject: &Subject, node: &str, ctx: &ScenarioContext) -> bool {
    match subject {
        Subject::Node(id) => node == id,
        Subject::Event(name) => ctx.behavior.event_of(node) == Some(name.as_str()),
    }
}

fn run_case(ctx: &ScenarioContext, scenario: &Scenario, case: &Case) -> CaseOutcome {
    let label = || case_label(scenario, case);
    let fail = |message: String, trace: Option<&Trace>| CaseOutcome {
        failure: Some(CaseFailure {
            case: label(),
            message,
            trace_excerpt: trace.map_or_else(Vec::new, |t| {
                excerpt(t, ctx, scenario.target.as_deref())
            }),
        }),
        exports: Vec::new(),
    };

    // Exports depend only on the case's inputs.
    let mut exports = Vec::new();
    for (key, expr) in &scenario.exports {
        match eval_oracle(expr, case, None) {
            Ok(v) => exports.push((key.clone(), v)),
            Err(e) => return fail(format!("export {key}: {e}"), None),
        }
    }

    let mut injections = Vec::new();
    for spec in &scenario.injections {
        let items: Vec<Option<&Value>> = match &spec.each {
            None => vec![None],
            Some(var) => match case.get(var) {
                Some(CaseValue::Multi(ms)) => ms.iter().map(Some).collect(),
                _ => return fail(format!("inject each ${var}: not a multiset input"), None),
            },
        };
        for item in items {
            let mut inst = ThingInstance::new(spec.thing.clone());
            for (attr, expr) in &spec.attrs {
                match eval_oracle(expr, case, item) {
                    Ok(v) => {
                        inst.attrs.insert(attr.clone(), v);
                    }
                    Err(e) => return fail(format!("inject {}: {e}", spec.node), None),
                }
            }
            injections.push(Injection { node: spec.node.clone(), instance: inst });
        }
    }

    let trace = match simulate(ctx.model, &injections, ctx.max_steps) {
        Ok(t) => t,
        Err(SimError::StepBudgetExhausted { trace }) => {
            return fail(
                format!("step budget ({}) exhausted with work remaining", ctx.max_steps),
                Some(&trace),
            );
        }
        Err(e) => return fail(e.to_string(), None),
    };

    for check in &scenario.checks {
        if let Some((lhs, op, rhs)) = &check.when {
            let holds = match (eval_oracle(lhs, case, None), eval_oracle(rhs, case, None)) {
                (Ok(a), Ok(b)) => match compare_values(&a, *op, &b) {
                    Ok(h) => h,
                    Err(e) => return fail(format!("when-clause: {e}"), Some(&trace)),
                },
                (Err(e), _) | (_, Err(e)) => return fail(format!("when-clause: {e}"), Some(&trace)),
            };
            if !holds {
                continue;
            }
        }
        match &check.assertion {
            Assertion::Fires { subject, with } => {
                let mut expected = Vec::new();
                for (attr, expr) in with {
                    match eval_oracle(expr, case, None) {
                        Ok(v) => expected.push((attr.clone(), v)),
                        Err(e) => return fail(format!("fires {subject}: {e}"), Some(&trace)),
                    }
                }
                let hit = trace.firings.iter().any(|f| {
                    subject_matches(subject, &f.node, ctx)
                        && (expected.is_empty()
                            || f.produced.iter().any(|inst| {
                                expected.iter().all(|(a, v)| inst.attrs.get(a) == Some(v))
                            }))
                });
                if !hit {
                    let detail = if expected.is_empty() {
                        String::new()
                    } else {
                        let parts: Vec<String> = expected
                            .iter()
                            .map(|(a, v)| format!("{a} = {}", crate::dsl::write_value(v)))
                            .collect();
                        format!(" with {}", parts.join(", "))
                    };
                    return fail(format!("expected a firing of {subject}{detail}"), Some(&trace));
                }
            }
            Assertion::Never { subject } => {
                if let Some(f) =
                    trace.firings.iter().find(|f| subject_matches(subject, &f.node, ctx))
                {
                    return fail(
                        format!("expected no firing of {subject}, but step {} fired {}", f.step, f.node),
                        Some(&trace),
                    );
                }
            }
            Assertion::Count { subject, op, expr } => {
                let n = trace
                    .firings
                    .iter()
                    .filter(|f| subject_matches(subject, &f.node, ctx))
                    .count() as i64;
                let expected = match eval_oracle(expr, case, None) {
                    Ok(Value::Int(v)) => v,
                    Ok(Value::Text(_)) => {
                        return fail(format!("count {subject}: expected an integer bound"), Some(&trace));
                    }
                    Err(e) => return fail(format!("count {subject}: {e}"), Some(&trace)),
                };
                let ok = match op {
                    CountOp::Exactly => n == expected,
                    CountOp::AtMost => n <= expected,
                };
                if !ok {
                    let rel = match op {
                        CountOp::Exactly => "=",
                        CountOp::AtMost => "<=",
                    };
                    return fail(
                        format!("count of {subject} is {n}, expected {rel} {expected}"),
                        Some(&trace),
                    );
                }
            }
        }
    }

    CaseOutcome { failure: None, exports }
}

fn validate_scenario(ctx: &ScenarioContext, scenario: &Scenario) -> Result<(), HarnessError> {
    let invalid = |message: String| HarnessError::Invalid {
        scenario: scenario.name.clone(),
        message,
    };
    if let (Some(target), Some(carving)) = (&scenario.target, ctx.carving) {
        if !carving.parts.iter().any(|p| p.name == *target) {
            return Err(HarnessError::UnknownTarget {
                scenario: scenario.name.clone(),
                target: target.clone(),
            });
        }
    }

    let mut declared: BTreeMap<&str, bool> = BTreeMap::new(); // var -> is multiset
    for b in &scenario.bindings {
        let vars: Vec<(&str, bool)> = match b {
            BindingDecl::Values { var, .. } | BindingDecl::Upstream { var, .. } => {
                vec![(var.as_str(), false)]
            }
            BindingDecl::Pairs { vars, .. } => {
                vec![(vars.0.as_str(), false), (vars.1.as_str(), false)]
            }
            BindingDecl::Multiset { var, min, max, values, .. } => {
                if min > max {
                    return Err(invalid(format!("multiset ${var}: empty range {min}..{max}")));
                }
                if values.is_empty() {
                    return Err(invalid(format!("multiset ${var}: no values")));
                }
                vec![(var.as_str(), true)]
            }
        };
        for (v, multi) in vars {
            if declared.insert(v, multi).is_some() {
                return Err(invalid(format!("variable ${v} declared twice")));
            }
        }
    }

    fn walk(
        e: &OracleExpr,
        declared: &BTreeMap<&str, bool>,
        allow_item: bool,
    ) -> Result<(), String> {
        match e {
            OracleExpr::Lit(_) => Ok(()),
            OracleExpr::Var(x) => {
                if x == "item" && allow_item {
                    return Ok(());
                }
                match declared.get(x.as_str()) {
                    Some(false) => Ok(()),
                    Some(true) => Err(format!("`${x}` is a multiset; use sum() or count()")),
                    None => Err(format!("`${x}` is not declared")),
                }
            }
            OracleExpr::Sum(x) | OracleExpr::CountOf(x, _) => match declared.get(x.as_str()) {
                Some(true) => Ok(()),
                Some(false) => Err(format!("`${x}` is not a multiset")),
                None => Err(format!("`${x}` is not declared")),
            },
            OracleExpr::Add(a, b) | OracleExpr::Sub(a, b) => {
                walk(a, declared, allow_item)?;
                walk(b, declared, allow_item)
            }
        }
    }

    for spec in &scenario.injections {
        match ctx.model.nodes.get(&spec.node) {
            None => return Err(invalid(format!("inject: unknown node `{}`", spec.node))),
            Some(n) => {
                if !matches!(n.kind, crate::model::ActionKind::Create | crate::model::ActionKind::TransferIn) {
                    return Err(invalid(format!(
                        "inject: node `{}` is a {} node",
                        spec.node,
                        n.kind.label()
                    )));
                }
                if n.thing_type != spec.thing {
                    return Err(invalid(format!(
                        "inject: node `{}` handles `{}`, not `{}`",
                        spec.node, n.thing_type, spec.thing
                    )));
                }
            }
        }
        if let Some(var) = &spec.each {
            if declared.get(var.as_str()) != Some(&true) {
                return Err(invalid(format!("inject each ${var}: not a multiset input")));
            }
        }
        for (_, e) in &spec.attrs {
            walk(e, &declared, spec.each.is_some()).map_err(&invalid)?;
        }
    }

    let subjects = scenario.checks.iter().map(|c| match &c.assertion {
        Assertion::Fires { subject, .. }
        | Assertion::Never { subject }
        | Assertion::Count { subject, .. } => subject,
    });
    for s in subjects {
        match s {
            Subject::Node(id) if !ctx.model.nodes.contains_key(id) => {
                return Err(invalid(format!("assertion names unknown node `{id}`")));
            }
            Subject::Event(name) if ctx.behavior.events.event(name).is_none() => {
                return Err(invalid(format!("assertion names unknown event `{name}`")));
            }
            _ => {}
        }
    }
    for c in &scenario.checks {
        if let Some((a, _, b)) = &c.when {
            walk(a, &declared, false).map_err(&invalid)?;
            walk(b, &declared, false).map_err(&invalid)?;
        }
        match &c.assertion {
            Assertion::Fires { with, .. } => {
                for (_, e) in with {
                    walk(e, &declared, false).map_err(&invalid)?;
                }
            }
            Assertion::Count { expr, .. } => walk(expr, &declared, false).map_err(&invalid)?,
            Assertion::Never { .. } => {}
        }
    }
    for (_, e) in &scenario.exports {
        walk(e, &declared, false).map_err(&invalid)?;
    }
    Ok(())
}

/// Run one scenario over every input combination.
pub fn run_scenario(
    ctx: &ScenarioContext,
    scenario: &Scenario,
    upstream: &[ValidationReport],
    mode: ExecMode,
) -> Result<ValidationReport, HarnessError> {
    validate_scenario(ctx, scenario)?;
    let started = Instant::now();
    let cases = enumerate_cases(scenario, upstream)?;
    let mut notices = Vec::new();

    let outcomes: Vec<CaseOutcome> = match mode {
        ExecMode::Sequential => cases.iter().map(|c| run_case(ctx, scenario, c)).collect(),
        ExecMode::Parallel => {
            #[cfg(feature = "parallel")]
            {
                cases.par_iter().map(|c| run_case(ctx, scenario, c)).collect()
            }
            #[cfg(not(feature = "parallel"))]
            {
                notices.push("parallel execution unavailable; ran sequentially".to_string());
                cases.iter().map(|c| run_case(ctx, scenario, c)).collect()
            }
        }
    };

    let mut failures = Vec::new();
    let mut outputs: BTreeMap<String, Vec<Value>> = BTreeMap::new();
    let mut passed = 0;
    for o in outcomes {
        match o.failure {
            None => {
                passed += 1;
                for (k, v) in o.exports {
                    outputs.entry(k).or_default().push(v);
                }
            }
            Some(f) => failures.push(f),
        }
    }
    for vs in outputs.values_mut() {
        vs.sort_by(value_order);
        vs.dedup();
    }
    if cases.is_empty() {
        notices.push("no cases enumerated".to_string());
    }

    Ok(ValidationReport {
        scenario: scenario.name.clone(),
        target: scenario.target.clone(),
        cases_total: cases.len(),
        cases_passed: passed,
        failures,
        outputs,
        notices,
        wall_ms: started.elapsed().as_millis(),
    })
}

/// Run scenarios in order, feeding each one the reports of those before it.
pub fn chain_scenarios(
    ctx: &ScenarioContext,
    scenarios: &[Scenario],
    mode: ExecMode,
) -> Result<Vec<ValidationReport>, HarnessError> {
    let mut reports: Vec<ValidationReport> = Vec::new();
    for s in scenarios {
        let r = run_scenario(ctx, s, &reports, mode)?;
        reports.push(r);
    }
    Ok(reports)
}
