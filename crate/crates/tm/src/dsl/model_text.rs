//! The static-model text format.
//!
//! ```text
//! model vending
//! thimac Machine
//! thimac Box25 in Machine store
//! thing coin attrs value
//! node m_in: transfer_in coin in Machine
//! node m_dep: create coin in Machine effect assign value := coin.value effect append Box25
//! flow m_in -> m_rcv
//! trigger m_sort -> m_dep when coin.value = 25
//! seed Box25 coin value = 25
//! ```
//!
//! One declaration per line; `#` comments; `effect` clauses repeat on a node
//! line. A document only parses when the assembled model passes every
//! reference check, so a successful parse is always a well-formed model.

use super::{tokenize_line, write_value, Cursor, ParseError, Tok};
use crate::model::{
    build_model, ActionKind, AttrPath, CmpOp, Decl, Effect, Expr, Guard, Operand, StaticModel,
    Term, ThingInstance,
};
use crate::model::ArithOp;

pub fn parse_model(text: &str) -> Result<StaticModel, Vec<ParseError>> {
    let mut decls: Vec<(usize, Decl)> = Vec::new();
    let mut errors = Vec::new();
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
        match parse_decl(&toks, lineno) {
            Ok(ds) => decls.extend(ds.into_iter().map(|d| (lineno, d))),
            Err(e) => errors.push(e),
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    let plain: Vec<Decl> = decls.iter().map(|(_, d)| d.clone()).collect();
    build_model(&plain).map_err(|build_errors| {
        build_errors
            .into_iter()
            .map(|e| ParseError {
                line: e.decl.map_or(1, |i| decls[i].0),
                col: 1,
                message: e.message,
            })
            .collect()
    })
}

fn parse_decl(toks: &[super::Token], lineno: usize) -> Result<Vec<Decl>, ParseError> {
    let mut c = Cursor::new(toks, lineno);
    let kw = c.ident("a declaration keyword")?;
    let decls = match kw.as_str() {
        "model" => {
            let name = c.ident("a model name")?;
            vec![Decl::Name(name)]
        }
        "thimac" => {
            let name = c.ident("a thimac name")?;
            let parent = if c.eat_keyword("in") { Some(c.ident("a parent thimac")?) } else { None };
            let store = c.eat_keyword("store");
            vec![Decl::Thimac { name, parent, store }]
        }
        "thing" => {
            let name = c.ident("a thing name")?;
            let mut attrs = Vec::new();
            if c.eat_keyword("attrs") {
                loop {
                    attrs.push(c.ident("an attribute name")?);
                    if !c.eat_punct(",") {
                        break;
                    }
                }
            }
            vec![Decl::Thing { name, attrs }]
        }
        "node" => {
            let id = c.ident("a node id")?;
            c.punct(":")?;
            let kind_name = c.ident("an action kind")?;
            let kind = ActionKind::parse(&kind_name)
                .ok_or_else(|| c.err(format!("unknown action kind `{kind_name}`")))?;
            let thing_type = c.ident("a thing type")?;
            c.keyword("in")?;
            let thimac = c.ident("a thimac name")?;
            let mut out = vec![Decl::Node { id, kind, thing_type, thimac }];
            while c.eat_keyword("effect") {
                out.push(Decl::Effect(parse_effect(&mut c)?));
            }
            out
        }
        "flow" => {
            let from = c.ident("a node id")?;
            c.punct("->")?;
            let to = c.ident("a node id")?;
            vec![Decl::Flow { from, to }]
        }
        "trigger" => {
            let from = c.ident("a node id")?;
            c.punct("->")?;
            let to = c.ident("a node id")?;
            let guard = if c.eat_keyword("when") { Some(parse_guard(&mut c)?) } else { None };
            vec![Decl::Trigger { from, to, guard }]
        }
        "seed" => {
            let store = c.ident("a store name")?;
            let thing_type = c.ident("a thing type")?;
            let mut instance = ThingInstance::new(thing_type);
            if !c.at_end() {
                loop {
                    let attr = c.ident("an attribute name")?;
                    c.punct("=")?;
                    let v = c.literal()?;
                    instance.attrs.insert(attr, v);
                    if !c.eat_punct(",") {
                        break;
                    }
                }
            }
            vec![Decl::Seed { store, instance }]
        }
        other => return Err(c.err(format!("unknown declaration `{other}`"))),
    };
    c.finish()?;
    Ok(decls)
}

fn parse_effect(c: &mut Cursor) -> Result<Effect, ParseError> {
    let kw = c.ident("an effect kind")?;
    match kw.as_str() {
        "pop" => Ok(Effect::Pop { store: c.ident("a store name")? }),
        "append" => Ok(Effect::Append { store: c.ident("a store name")? }),
        "assign" => {
            let attr = c.ident("an attribute name")?;
            c.punct(":=")?;
            Ok(Effect::Assign { attr, expr: parse_expr(c)? })
        }
        "emit" => {
            let thing_type = c.ident("a thing type")?;
            c.keyword("with")?;
            let mut attrs = Vec::new();
            loop {
                let attr = c.ident("an attribute name")?;
                c.punct(":=")?;
                attrs.push((attr, parse_expr(c)?));
                if !c.eat_punct(",") {
                    break;
                }
            }
            Ok(Effect::Emit { thing_type, attrs })
        }
        other => Err(c.err(format!("unknown effect `{other}`"))),
    }
}

fn parse_attr_path(c: &mut Cursor, thing: String) -> Result<AttrPath, ParseError> {
    c.punct(".")?;
    let attr = c.ident("an attribute name")?;
    Ok(AttrPath { thing, attr })
}

fn parse_term(c: &mut Cursor) -> Result<Term, ParseError> {
    match c.peek() {
        Some(Tok::Int(_) | Tok::Str(_) | Tok::Punct("-")) => Ok(Term::Lit(c.literal()?)),
        Some(Tok::Ident(name)) if name == "sum" => {
            c.ident("sum")?;
            c.punct("(")?;
            let store = c.ident("a store name")?;
            c.punct(".")?;
            let attr = c.ident("an attribute name")?;
            c.punct(")")?;
            Ok(Term::SumStore { store, attr })
        }
        Some(Tok::Ident(_)) => {
            let thing = c.ident("a thing name")?;
            Ok(Term::Attr(parse_attr_path(c, thing)?))
        }
        Some(t) => Err(c.err(format!("expected a term, found {t}"))),
        None => Err(c.err("expected a term")),
    }
}

pub(super) fn parse_expr(c: &mut Cursor) -> Result<Expr, ParseError> {
    let first = parse_term(c)?;
    let mut rest = Vec::new();
    loop {
        if c.eat_punct("+") {
            rest.push((ArithOp::Add, parse_term(c)?));
        } else if c.eat_punct("-") {
            rest.push((ArithOp::Sub, parse_term(c)?));
        } else {
            break;
        }
    }
    Ok(Expr { first, rest })
}

fn parse_operand(c: &mut Cursor) -> Result<Operand, ParseError> {
    match c.peek() {
        Some(Tok::Int(_) | Tok::Str(_) | Tok::Punct("-")) => Ok(Operand::Lit(c.literal()?)),
        Some(Tok::Ident(_)) => {
            let thing = c.ident("a thing name")?;
            Ok(Operand::Attr(parse_attr_path(c, thing)?))
        }
        Some(t) => Err(c.err(format!("expected a value or attribute, found {t}"))),
        None => Err(c.err("expected a value or attribute")),
    }
}

pub(super) fn parse_cmp(c: &mut Cursor) -> Result<CmpOp, ParseError> {
    for (p, op) in [
        ("=", CmpOp::Eq),
        ("!=", CmpOp::Ne),
        ("<=", CmpOp::Le),
        (">=", CmpOp::Ge),
        ("<", CmpOp::Lt),
        (">", CmpOp::Gt),
    ] {
        if c.eat_punct(p) {
            return Ok(op);
        }
    }
    Err(c.err("expected a comparison operator"))
}

fn parse_guard(c: &mut Cursor) -> Result<Guard, ParseError> {
    let lhs = parse_operand(c)?;
    let op = parse_cmp(c)?;
    let rhs = parse_operand(c)?;
    Ok(Guard { lhs, op, rhs })
}

fn term_text(t: &Term) -> String {
    match t {
        Term::Lit(v) => write_value(v),
        Term::Attr(p) => format!("{}.{}", p.thing, p.attr),
        Term::SumStore { store, attr } => format!("sum({store}.{attr})"),
    }
}

fn expr_text(e: &Expr) -> String {
    let mut s = term_text(&e.first);
    for (op, t) in &e.rest {
        s.push_str(match op {
            ArithOp::Add => " + ",
            ArithOp::Sub => " - ",
        });
        s.push_str(&term_text(t));
    }
    s
}

fn operand_text(o: &Operand) -> String {
    match o {
        Operand::Lit(v) => write_value(v),
        Operand::Attr(p) => format!("{}.{}", p.thing, p.attr),
    }
}

fn guard_text(g: &Guard) -> String {
    format!("{} {} {}", operand_text(&g.lhs), g.op.symbol(), operand_text(&g.rhs))
}

fn effect_text(e: &Effect) -> String {
    match e {
        Effect::Pop { store } => format!("effect pop {store}"),
        Effect::Append { store } => format!("effect append {store}"),
        Effect::Assign { attr, expr } => format!("effect assign {attr} := {}", expr_text(expr)),
        Effect::Emit { thing_type, attrs } => {
            let parts: Vec<String> =
                attrs.iter().map(|(a, e)| format!("{a} := {}", expr_text(e))).collect();
            format!("effect emit {thing_type} with {}", parts.join(", "))
        }
    }
}

pub fn serialize_model(m: &StaticModel) -> String {
    let mut out = String::new();
    out.push_str(&format!("model {}\n", m.name));

    if !m.thimacs.is_empty() {
        out.push('\n');
    }
    for t in m.thimacs.values() {
        out.push_str("thimac ");
        out.push_str(&t.name);
        if let Some(p) = &t.parent {
            out.push_str(" in ");
            out.push_str(p);
        }
        if t.is_store {
            out.push_str(" store");
        }
        out.push('\n');
    }

    if !m.things.is_empty() {
        out.push('\n');
    }
    for th in m.things.values() {
        out.push_str("thing ");
        out.push_str(&th.name);
        if !th.attrs.is_empty() {
            out.push_str(" attrs ");
            out.push_str(&th.attrs.join(", "));
        }
        out.push('\n');
    }

    if !m.nodes.is_empty() {
        out.push('\n');
    }
    for n in m.nodes.values() {
        out.push_str(&format!("node {}: {} {} in {}", n.id, n.kind.label(), n.thing_type, n.thimac));
        for e in &n.effects {
            out.push(' ');
            out.push_str(&effect_text(e));
        }
        out.push('\n');
    }

    if !m.flows.is_empty() {
        out.push('\n');
    }
    for f in &m.flows {
        out.push_str(&format!("flow {} -> {}\n", f.from, f.to));
    }

    if !m.triggers.is_empty() {
        out.push('\n');
    }
    for t in &m.triggers {
        out.push_str(&format!("trigger {} -> {}", t.from, t.to));
        if let Some(g) = &t.guard {
            out.push_str(" when ");
            out.push_str(&guard_text(g));
        }
        out.push('\n');
    }

    let mut wrote_seed_gap = false;
    for t in m.thimacs.values().filter(|t| t.is_store && !t.contents.is_empty()) {
        if !wrote_seed_gap {
            out.push('\n');
            wrote_seed_gap = true;
        }
        for inst in &t.contents {
            out.push_str(&format!("seed {} {}", t.name, inst.thing_type));
            if !inst.attrs.is_empty() {
                let parts: Vec<String> =
                    inst.attrs.iter().map(|(a, v)| format!("{a} = {}", write_value(v))).collect();
                out.push(' ');
                out.push_str(&parts.join(", "));
            }
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
# A tiny two-part model.
model sample

thimac A
thimac B
thimac Reg in B store

thing doc attrs size
thing note

node a_create: create doc in A
node a_rel: release doc in A
node a_out: transfer_out doc in A
node b_in: transfer_in doc in B
node b_rcv: receive doc in B
node b_proc: process doc in B
node b_note: create note in B effect append Reg
node b_big: create doc in B effect pop Reg effect assign size := doc.size + 1

flow a_create -> a_rel
flow a_rel -> a_out
flow a_out -> b_in
flow b_in -> b_rcv
flow b_rcv -> b_proc

trigger b_proc -> b_note when doc.size >= 10
trigger b_proc -> b_big

seed Reg doc size = 1
"#;

    #[test]
    fn parses_sample() {
        let m = parse_model(SAMPLE).unwrap();
        assert_eq!(m.name, "sample");
        assert_eq!(m.nodes.len(), 8);
        assert_eq!(m.flows.len(), 5);
        assert_eq!(m.triggers.len(), 2);
        assert!(m.thimacs["Reg"].is_store);
        assert_eq!(m.thimacs["Reg"].contents.len(), 1);
        assert_eq!(m.nodes["b_big"].effects.len(), 2);
    }

    #[test]
    fn round_trips() {
        let m = parse_model(SAMPLE).unwrap();
        let text = serialize_model(&m);
        let again = parse_model(&text).unwrap();
        assert_eq!(m, again);
    }

    #[test]
    fn reports_unknown_reference_with_line() {
        let text = "model m\nthimac A\nthing doc\nnode x: create doc in A\nflow x -> nowhere\n";
        let errs = parse_model(text).unwrap_err();
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].line, 5);
        assert!(errs[0].message.contains("nowhere"));
    }

    #[test]
    fn reports_syntax_error_with_column() {
        let errs = parse_model("model m\nnode p1: process in\n").unwrap_err();
        assert_eq!(errs[0].line, 2);
        assert!(errs[0].message.contains("thing type") || errs[0].message.contains("expected"));
    }

    #[test]
    fn collects_errors_from_multiple_lines() {
        let errs = parse_model("model m\nwat 1\nflow ->\n").unwrap_err();
        assert_eq!(errs.len(), 2);
    }

    #[test]
    fn text_guard_and_emit_round_trip() {
        let text = concat!(
            "model g\n",
            "thimac A\n",
            "thimac S in A store\n",
            "thing msg attrs text, kind\n",
            "node a: create msg in A effect assign text := \"hi \\\"you\\\"\" effect emit msg with text := msg.text, kind := \"copy\"\n",
            "node b: process msg in A\n",
            "trigger b -> a when msg.text != \"stop\"\n",
            "seed S msg text = \"first\", kind = \"seed\"\n",
        );
        let m = parse_model(text).unwrap();
        let again = parse_model(&serialize_model(&m)).unwrap();
        assert_eq!(m, again);
    }
}
