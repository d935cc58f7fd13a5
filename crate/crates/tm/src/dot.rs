//! Graphviz renderings of the three graph layers. Output is deterministic:
//! thimacs and nodes in name order, edges in declaration order, so rendered
//! files diff cleanly.

use crate::carve::Carving;
use crate::events::{BehavioralModel, InducedKind};
use crate::model::{natural_cmp, StaticModel, Thimac};
use std::fmt::Write;

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out
}

fn indent(buf: &mut String, depth: usize) {
    for _ in 0..depth {
        buf.push_str("  ");
    }
}

fn write_thimac(buf: &mut String, model: &StaticModel, thimac: &Thimac, depth: usize) {
    if thimac.is_store {
        indent(buf, depth);
        let _ = writeln!(buf, "\"{}\" [shape=cylinder, label=\"{}\"];", esc(&thimac.name), esc(&thimac.name));
        return;
    }
    indent(buf, depth);
    let _ = writeln!(buf, "subgraph \"cluster_{}\" {{", esc(&thimac.name));
    indent(buf, depth + 1);
    let _ = writeln!(buf, "label=\"{}\";", esc(&thimac.name));
    for node in model.nodes.values() {
        if node.thimac == thimac.name {
            indent(buf, depth + 1);
            let _ = writeln!(
                buf,
                "\"{}\" [label=\"{}\\n{} {}\"];",
                esc(&node.id),
                esc(&node.id),
                node.kind,
                esc(&node.thing_type)
            );
        }
    }
    for child in model.thimacs.values() {
        if child.parent.as_deref() == Some(thimac.name.as_str()) {
            write_thimac(buf, model, child, depth + 1);
        }
    }
    indent(buf, depth);
    buf.push_str("}\n");
}

/// Render a static model: one cluster per thimac (nested), store thimacs as
/// cylinder nodes, solid flow arrows, dashed trigger arrows labeled with
/// their guards. Exactly one arrow per flow and trigger edge.
pub fn model_to_dot(model: &StaticModel) -> String {
    let mut buf = String::new();
    let _ = writeln!(buf, "digraph \"{}\" {{", esc(&model.name));
    buf.push_str("  rankdir=LR;\n");
    buf.push_str("  node [shape=box, fontsize=10];\n");
    for thimac in model.thimacs.values() {
        if thimac.parent.is_none() {
            write_thimac(&mut buf, model, thimac, 1);
        }
    }
    for f in &model.flows {
        let _ = writeln!(buf, "  \"{}\" -> \"{}\";", esc(&f.from), esc(&f.to));
    }
    for t in &model.triggers {
        match &t.guard {
            Some(g) => {
                let _ = writeln!(
                    buf,
                    "  \"{}\" -> \"{}\" [style=dashed, label=\"{}\"];",
                    esc(&t.from),
                    esc(&t.to),
                    esc(&g.to_string())
                );
            }
            None => {
                let _ = writeln!(buf, "  \"{}\" -> \"{}\" [style=dashed];", esc(&t.from), esc(&t.to));
            }
        }
    }
    buf.push_str("}\n");
    buf
}

fn edge_attrs(kind: InducedKind, joint: bool) -> String {
    let mut attrs: Vec<&str> = Vec::new();
    match kind {
        InducedKind::PlainFlow => {}
        InducedKind::TransferFlow => attrs.push("penwidth=2"),
        InducedKind::Trigger => attrs.push("style=dashed"),
    }
    if joint {
        attrs.push("color=\"#b22222\"");
    }
    if attrs.is_empty() {
        String::new()
    } else {
        format!(" [{}]", attrs.join(", "))
    }
}

/// Render a behavioral model: events as boxes in natural name order, plain
/// flow solid, transfer flow heavy, triggers dashed.
pub fn behavior_to_dot(behavior: &BehavioralModel) -> String {
    let mut buf = String::new();
    let _ = writeln!(buf, "digraph \"{}\" {{", esc(&behavior.events.model));
    buf.push_str("  rankdir=LR;\n");
    buf.push_str("  node [shape=box, fontsize=10];\n");
    let mut events: Vec<_> = behavior.events.events.iter().collect();
    events.sort_by(|a, b| natural_cmp(&a.name, &b.name));
    for ev in events {
        let _ = writeln!(
            buf,
            "  \"{}\" [label=\"{}\", tooltip=\"{}\"];",
            esc(&ev.name),
            esc(&ev.name),
            esc(&ev.description)
        );
    }
    for e in &behavior.edges {
        let _ = writeln!(
            buf,
            "  \"{}\" -> \"{}\"{};",
            esc(&e.from),
            esc(&e.to),
            edge_attrs(e.kind, false)
        );
    }
    buf.push_str("}\n");
    buf
}

/// Render a grouping: one cluster per super-event, member events inside,
/// joints highlighted.
pub fn carving_to_dot(behavior: &BehavioralModel, carving: &Carving) -> String {
    let mut buf = String::new();
    let _ = writeln!(buf, "digraph \"{}\" {{", esc(&behavior.events.model));
    buf.push_str("  rankdir=LR;\n");
    buf.push_str("  node [shape=box, fontsize=10];\n");
    for part in &carving.parts {
        let _ = writeln!(buf, "  subgraph \"cluster_{}\" {{", esc(&part.name));
        let _ = writeln!(buf, "    label=\"{}\";", esc(&part.name));
        for m in &part.members {
            let _ = writeln!(buf, "    \"{}\";", esc(m));
        }
        buf.push_str("  }\n");
    }
    let part_of = carving.part_of();
    for e in &behavior.edges {
        let joint = part_of.get(e.from.as_str()) != part_of.get(e.to.as_str());
        let _ = writeln!(
            buf,
            "  \"{}\" -> \"{}\"{};",
            esc(&e.from),
            esc(&e.to),
            edge_attrs(e.kind, joint)
        );
    }
    buf.push_str("}\n");
    buf
}
