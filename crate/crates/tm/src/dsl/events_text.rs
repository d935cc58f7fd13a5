//! The events and grouping text formats.
//!
//! `.ev` files name the regions of a model:
//!
//! ```text
//! events vending
//! event E1 "A selection arrives." nodes u_sel_create, u_sel_rel time "t1"
//! ```
//!
//! `.grp` files name groups of events; the text before the colon is the
//! group's name and may contain spaces:
//!
//! ```text
//! super Discount percentage: E10, E11, E12
//! ```

use super::{quote, tokenize_line, Cursor, ParseError};
use crate::events::{Event, EventsModel};
use crate::model::StaticModel;

pub fn parse_events(text: &str, model: &StaticModel) -> Result<EventsModel, Vec<ParseError>> {
    let mut errors = Vec::new();
    let mut header: Option<String> = None;
    let mut events: Vec<Event> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();

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
            if header.is_none() && events.is_empty() && c.eat_keyword("events") {
                let name = c.ident("a model name")?;
                c.finish()?;
                if name != model.name {
                    return Err(ParseError::new(
                        lineno,
                        1,
                        format!("events are for model `{name}`, expected `{}`", model.name),
                    ));
                }
                header = Some(name);
                return Ok(());
            }
            c.keyword("event")?;
            let name = c.ident("an event name")?;
            if !seen.insert(name.clone()) {
                return Err(c.err(format!("duplicate event name `{name}`")));
            }
            let description = c.string()?;
            c.keyword("nodes")?;
            let mut nodes = Vec::new();
            loop {
                let id = c.ident("a node id")?;
                if !model.nodes.contains_key(&id) {
                    return Err(c.err(format!("unknown node `{id}`")));
                }
                nodes.push(id);
                if !c.eat_punct(",") {
                    break;
                }
            }
            let time = if c.eat_keyword("time") { Some(c.string()?) } else { None };
            c.finish()?;
            events.push(Event { name, description, nodes, time });
            Ok(())
        })();
        if let Err(e) = result {
            errors.push(e);
        }
    }

    if header.is_none() {
        errors.push(ParseError::new(1, 1, "missing `events NAME` header".to_string()));
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    Ok(EventsModel { model: header.expect("checked above"), events })
}

pub fn serialize_events(events: &EventsModel) -> String {
    let mut out = format!("events {}\n\n", events.model);
    for e in &events.events {
        out.push_str(&format!("event {} {} nodes {}", e.name, quote(&e.description), e.nodes.join(", ")));
        if let Some(t) = &e.time {
            out.push_str(&format!(" time {}", quote(t)));
        }
        out.push('\n');
    }
    out
}

/// Parse a grouping file into `(name, members)` pairs, preserving file order.
pub fn parse_groups(text: &str) -> Result<Vec<(String, Vec<String>)>, Vec<ParseError>> {
    let mut errors = Vec::new();
    let mut groups = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some(rest) = line.strip_prefix("super ") else {
            errors.push(ParseError::new(lineno, 1, "expected `super NAME: events`"));
            continue;
        };
        let Some((name, members)) = rest.split_once(':') else {
            errors.push(ParseError::new(lineno, 1, "missing `:` after the group name"));
            continue;
        };
        let name = name.trim();
        if name.is_empty() {
            errors.push(ParseError::new(lineno, 1, "empty group name"));
            continue;
        }
        let members: Vec<String> =
            members.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect();
        if members.is_empty() {
            errors.push(ParseError::new(lineno, 1, format!("group `{name}` has no members")));
            continue;
        }
        groups.push((name.to_string(), members));
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    Ok(groups)
}

pub fn serialize_groups(groups: &[(String, Vec<String>)]) -> String {
    let mut out = String::new();
    for (name, members) in groups {
        out.push_str(&format!("super {}: {}\n", name, members.join(", ")));
    }
    out
}
