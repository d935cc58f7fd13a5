//! The scenario (`.sc`) and injection-list text formats.
//!
//! ```text
//! scenario coins
//! target SE2
//! let coins = multiset of 25, 50, 100 count 1..5
//! inject each coins at u_coin_create coin { value = $item }
//! assert fires node m_amt_update with value = sum($coins)
//! assert count node m_dep25 = count($coins, 25)
//! when $amount >= $price assert never node m_msg_create
//! export amount = sum($coins)
//! ```
//!
//! An injection list is the `inject` form alone, with literal attribute
//! values:
//!
//! ```text
//! inject u_sel_create selection { name = "cola" }
//! ```

use super::model_text::parse_cmp;
use super::{tokenize_line, Cursor, ParseError, Tok};
use crate::harness::{
    Assertion, BindingDecl, Check, CountOp, InjectSpec, OracleExpr, Scenario, Subject,
};
use crate::model::{ThingInstance, Value};
use crate::sim::Injection;

pub fn parse_scenario(text: &str) -> Result<Scenario, Vec<ParseError>> {
    let mut errors = Vec::new();
    let mut name: Option<String> = None;
    let mut scenario = Scenario {
        name: String::new(),
        target: None,
        bindings: Vec::new(),
        injections: Vec::new(),
        checks: Vec::new(),
        exports: Vec::new(),
    };

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let toks = match tokenize_line(raw, lineno) {
            Ok(t) => t,
            Err(e) => {
                errors.push(e);
                continue;
            }
        };
        if toks.is_empty() {
            continue;
        }
        let mut c = Cursor::new(&toks, lineno);
        let result = (|| -> Result<(), ParseError> {
            match c.peek() {
                Some(Tok::Ident(kw)) if kw == "scenario" => {
                    c.keyword("scenario")?;
                    let n = c.ident("a scenario name")?;
                    if name.is_some() {
                        return Err(c.err("duplicate `scenario` line"));
                    }
                    name = Some(n);
                }
                Some(Tok::Ident(kw)) if kw == "target" => {
                    c.keyword("target")?;
                    let t = match c.peek() {
                        Some(Tok::Str(_)) => c.string()?,
                        _ => c.ident("a super-event name")?,
                    };
                    scenario.target = Some(t);
                }
                Some(Tok::Ident(kw)) if kw == "let" => {
                    scenario.bindings.push(parse_binding(&mut c)?);
                }
                Some(Tok::Ident(kw)) if kw == "inject" => {
                    scenario.injections.push(parse_inject_spec(&mut c)?);
                }
                Some(Tok::Ident(kw)) if kw == "assert" => {
                    c.keyword("assert")?;
                    scenario.checks.push(Check { when: None, assertion: parse_assertion(&mut c)? });
                }
                Some(Tok::Ident(kw)) if kw == "when" => {
                    c.keyword("when")?;
                    let lhs = parse_oracle_expr(&mut c)?;
                    let op = parse_cmp(&mut c)?;
                    let rhs = parse_oracle_expr(&mut c)?;
                    c.keyword("assert")?;
                    scenario
                        .checks
                        .push(Check { when: Some((lhs, op, rhs)), assertion: parse_assertion(&mut c)? });
                }
                Some(Tok::Ident(kw)) if kw == "export" => {
                    c.keyword("export")?;
                    let key = c.ident("an export key")?;
                    c.punct("=")?;
                    scenario.exports.push((key, parse_oracle_expr(&mut c)?));
                }
                Some(t) => return Err(c.err(format!("unexpected {t}"))),
                None => unreachable!("empty lines are skipped"),
            }
            c.finish()
        })();
        if let Err(e) = result {
            errors.push(e);
        }
    }

    match name {
        Some(n) => scenario.name = n,
        None => errors.push(ParseError::new(1, 1, "missing `scenario NAME` line")),
    }
    if errors.is_empty() {
        Ok(scenario)
    } else {
        Err(errors)
    }
}

fn parse_binding(c: &mut Cursor) -> Result<BindingDecl, ParseError> {
    c.keyword("let")?;
    let first = c.ident("a variable name")?;
    if c.eat_punct(",") {
        let second = c.ident("a variable name")?;
        c.punct("=")?;
        c.keyword("pairs")?;
        let mut pairs = Vec::new();
        loop {
            c.punct("(")?;
            let a = c.literal()?;
            c.punct(",")?;
            let b = c.literal()?;
            c.punct(")")?;
            pairs.push((a, b));
            if !c.eat_punct(",") {
                break;
            }
        }
        return Ok(BindingDecl::Pairs { vars: (first, second), pairs });
    }
    c.punct("=")?;
    let kind = c.ident("`values`, `multiset`, or `upstream`")?;
    match kind.as_str() {
        "values" => {
            let mut values = Vec::new();
            loop {
                values.push(c.literal()?);
                if !c.eat_punct(",") {
                    break;
                }
            }
            Ok(BindingDecl::Values { var: first, values })
        }
        "multiset" => {
            c.keyword("of")?;
            let mut values = Vec::new();
            loop {
                values.push(c.literal()?);
                if !c.eat_punct(",") {
                    break;
                }
            }
            c.keyword("count")?;
            let min = c.int()?;
            c.punct("..")?;
            let max = c.int()?;
            if min < 0 || max < 0 {
                return Err(c.err("multiset sizes must not be negative"));
            }
            Ok(BindingDecl::Multiset { var: first, values, min: min as usize, max: max as usize })
        }
        "upstream" => {
            let scenario = c.ident("a scenario name")?;
            c.punct(".")?;
            let key = c.ident("an export key")?;
            Ok(BindingDecl::Upstream { var: first, scenario, key })
        }
        other => Err(c.err(format!("unknown binding kind `{other}`"))),
    }
}

fn parse_inject_spec(c: &mut Cursor) -> Result<InjectSpec, ParseError> {
    c.keyword("inject")?;
    let each = if c.eat_keyword("each") {
        let var = c.ident("a multiset variable")?;
        c.keyword("at")?;
        Some(var)
    } else {
        None
    };
    let node = c.ident("a node id")?;
    let thing = c.ident("a thing type")?;
    let attrs = parse_attr_block(c)?;
    Ok(InjectSpec { each, node, thing, attrs })
}

/// `{ attr = EXPR, ... }`, or nothing for an attribute-free instance.
fn parse_attr_block(c: &mut Cursor) -> Result<Vec<(String, OracleExpr)>, ParseError> {
    let mut attrs = Vec::new();
    if !c.eat_punct("{") {
        return Ok(attrs);
    }
    if c.eat_punct("}") {
        return Ok(attrs);
    }
    loop {
        let attr = c.ident("an attribute name")?;
        c.punct("=")?;
        attrs.push((attr, parse_oracle_expr(c)?));
        if !c.eat_punct(",") {
            break;
        }
    }
    c.punct("}")?;
    Ok(attrs)
}

fn parse_subject(c: &mut Cursor) -> Result<Subject, ParseError> {
    if c.eat_keyword("node") {
        Ok(Subject::Node(c.ident("a node id")?))
    } else if c.eat_keyword("event") {
        Ok(Subject::Event(c.ident("an event name")?))
    } else {
        Err(c.err("expected `node` or `event`"))
    }
}

fn parse_assertion(c: &mut Cursor) -> Result<Assertion, ParseError> {
    let kw = c.ident("`fires`, `never`, or `count`")?;
    match kw.as_str() {
        "fires" => {
            let subject = parse_subject(c)?;
            let mut with = Vec::new();
            if c.eat_keyword("with") {
                loop {
                    let attr = c.ident("an attribute name")?;
                    c.punct("=")?;
                    with.push((attr, parse_oracle_expr(c)?));
                    if !c.eat_punct(",") {
                        break;
                    }
                }
            }
            Ok(Assertion::Fires { subject, with })
        }
        "never" => Ok(Assertion::Never { subject: parse_subject(c)? }),
        "count" => {
            let subject = parse_subject(c)?;
            let op = if c.eat_punct("=") {
                CountOp::Exactly
            } else if c.eat_punct("<=") {
                CountOp::AtMost
            } else {
                return Err(c.err("expected `=` or `<=`"));
            };
            Ok(Assertion::Count { subject, op, expr: parse_oracle_expr(c)? })
        }
        other => Err(c.err(format!("unknown assertion `{other}`"))),
    }
}

fn parse_oracle_primary(c: &mut Cursor) -> Result<OracleExpr, ParseError> {
    match c.peek() {
        Some(Tok::Int(_) | Tok::Str(_) | Tok::Punct("-")) => Ok(OracleExpr::Lit(c.literal()?)),
        Some(Tok::Punct("$")) => {
            c.punct("$")?;
            Ok(OracleExpr::Var(c.ident("a variable name")?))
        }
        Some(Tok::Ident(kw)) if kw == "sum" => {
            c.keyword("sum")?;
            c.punct("(")?;
            c.punct("$")?;
            let var = c.ident("a multiset variable")?;
            c.punct(")")?;
            Ok(OracleExpr::Sum(var))
        }
        Some(Tok::Ident(kw)) if kw == "count" => {
            c.keyword("count")?;
            c.punct("(")?;
            c.punct("$")?;
            let var = c.ident("a multiset variable")?;
            c.punct(",")?;
            let v = c.literal()?;
            c.punct(")")?;
            Ok(OracleExpr::CountOf(var, v))
        }
        Some(t) => Err(c.err(format!("expected an expression, found {t}"))),
        None => Err(c.err("expected an expression")),
    }
}

fn parse_oracle_expr(c: &mut Cursor) -> Result<OracleExpr, ParseError> {
    let mut acc = parse_oracle_primary(c)?;
    loop {
        if c.eat_punct("+") {
            acc = OracleExpr::Add(Box::new(acc), Box::new(parse_oracle_primary(c)?));
        } else if c.eat_punct("-") {
            acc = OracleExpr::Sub(Box::new(acc), Box::new(parse_oracle_primary(c)?));
        } else {
            return Ok(acc);
        }
    }
}

/// Parse an injection list: one `inject NODE THING { attr = LITERAL, ... }`
/// per line.
pub fn parse_injections(text: &str) -> Result<Vec<Injection>, Vec<ParseError>> {
    let mut errors = Vec::new();
    let mut injections = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let toks = match tokenize_line(raw, lineno) {
            Ok(t) => t,
            Err(e) => {
                errors.push(e);
                continue;
            }
        };
        if toks.is_empty() {
            continue;
        }
        let mut c = Cursor::new(&toks, lineno);
        let result = (|| -> Result<Injection, ParseError> {
            c.keyword("inject")?;
            let node = c.ident("a node id")?;
            let thing = c.ident("a thing type")?;
            let mut instance = ThingInstance::new(thing);
            if c.eat_punct("{") && !c.eat_punct("}") {
                loop {
                    let attr = c.ident("an attribute name")?;
                    c.punct("=")?;
                    let v: Value = c.literal()?;
                    instance.attrs.insert(attr, v);
                    if !c.eat_punct(",") {
                        break;
                    }
                }
                c.punct("}")?;
            }
            c.finish()?;
            Ok(Injection { node, instance })
        })();
        match result {
            Ok(inj) => injections.push(inj),
            Err(e) => errors.push(e),
        }
    }
    if errors.is_empty() {
        Ok(injections)
    } else {
        Err(errors)
    }
}
