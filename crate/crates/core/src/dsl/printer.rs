//! Canonical text form of a knowledge base.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::forms::RESERVED_WORDS;
use crate::hybrid::{ElementRef, HybridKb};
use crate::script::{EpisodeStatus, EventObject, EventRef, Observation, Pattern, Script, Term};
use crate::semnet::{is_relation_name, LinkLabel, NodeId, NodeKind, SpaceKind, ROOT_SPACE};

fn bare_safe(s: &str) -> bool {
    !s.is_empty()
        && s != "?"
        && s != "_"
        && !s.starts_with(':')
        && !RESERVED_WORDS.contains(&s)
        && !s.chars().any(|c| c.is_whitespace() || matches!(c, '(' | ')' | '"' | ';' | '\\'))
}

fn quoted(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

/// A symbol, quoted only when it would not read back as the same symbol.
fn sym(s: &str) -> String {
    if bare_safe(s) {
        s.to_string()
    } else {
        quoted(s)
    }
}

/// Relation and action names are never reserved in their own position.
fn rel(s: &str) -> String {
    if is_relation_name(s) {
        s.to_string()
    } else {
        sym(s)
    }
}

/// A symbol that must not be mistaken for a role or prop of `script`.
fn literal(s: &str, script: &Script) -> String {
    if script.is_role(s) || script.is_prop(s) {
        quoted(s)
    } else {
        sym(s)
    }
}

fn term(t: &Term, script: &Script) -> String {
    match t {
        Term::Role(r) => sym(r),
        Term::Node(n) => literal(n.as_str(), script),
        Term::Wildcard => "?".to_string(),
    }
}

fn pattern(p: &Pattern, script: &Script) -> String {
    format!("{} {} {}", term(&p.subject, script), rel(&p.predicate), term(&p.object, script))
}

fn observation(o: &Observation) -> String {
    let mut s = format!(
        "{} {}",
        o.actor.as_deref().map_or_else(|| "_".to_string(), sym),
        rel(&o.action)
    );
    if let Some(obj) = &o.object {
        s.push(' ');
        s.push_str(&sym(obj));
    }
    s
}

fn refs(name: &str, list: &[EventRef]) -> String {
    let mut s = format!("({name}");
    for r in list {
        let _ = write!(s, " ({} {})", r.step, r.index);
    }
    s.push(')');
    s
}

fn write_script(out: &mut String, s: &Script) {
    let _ = write!(out, "(script {}", sym(&s.name));
    if !s.track.is_empty() {
        let _ = write!(out, "\n  (track {})", sym(&s.track));
    }
    if !s.props.is_empty() {
        out.push_str("\n  (props");
        for p in &s.props {
            let _ = write!(out, " {}", sym(p));
        }
        out.push(')');
    }
    for (r, desc) in &s.roles {
        let _ = write!(out, "\n  (role {} {})", sym(r), quoted(desc));
    }
    for p in &s.entry_conditions {
        let _ = write!(out, "\n  (entry {})", pattern(p, s));
    }
    for p in &s.results {
        let _ = write!(out, "\n  (result {})", pattern(p, s));
    }
    for scene in &s.scenes {
        let _ = write!(out, "\n  (scene {} {}", scene.number, sym(&scene.name));
        for e in &scene.events {
            let _ = write!(out, "\n    (event {} {}", sym(&e.actor), rel(&e.action));
            match &e.object {
                Some(EventObject::Role(o)) | Some(EventObject::Prop(o)) => {
                    let _ = write!(out, " {}", sym(o));
                }
                Some(EventObject::Literal(n)) => {
                    let _ = write!(out, " {}", literal(n.as_str(), s));
                }
                None => {}
            }
            out.push(')');
        }
        for t in &scene.transitions {
            let _ = write!(out, "\n    (goto {} ({}))", t.target, pattern(&t.condition, s));
        }
        out.push(')');
    }
    out.push_str(")\n");
}

/// Serializes `kb` so that loading the text yields an equal knowledge base.
/// Output is deterministic: equal knowledge bases give identical text.
pub fn serialize(kb: &HybridKb) -> String {
    let net = kb.net();
    let mut out = format!("(space {ROOT_SPACE})\n");

    let mut spaces: Vec<_> = net.spaces().filter(|s| !s.id.is_root()).collect();
    spaces.sort_by_key(|s| (net.space_depth(&s.id), s.id.clone()));
    for sp in spaces {
        let _ = write!(out, "(space {}", sym(sp.id.as_str()));
        if let Some(p) = sp.parent.as_ref().filter(|p| !p.is_root()) {
            let _ = write!(out, " :parent {}", sym(p.as_str()));
        }
        if sp.kind == SpaceKind::GeneralStatement {
            out.push_str(" :kind general");
        }
        if let Some(a) = &sp.agent {
            let _ = write!(out, " :agent {}", sym(a.as_str()));
        }
        if !sp.vars.is_empty() {
            let vars: Vec<String> = sp.vars.iter().map(|v| sym(v.as_str())).collect();
            let _ = write!(out, " :vars ({})", vars.join(" "));
        }
        out.push_str(")\n");
    }

    let mut links: Vec<_> = net.links().collect();
    let mut member_of: BTreeMap<NodeId, Vec<String>> = BTreeMap::new();
    for l in &links {
        if l.label == LinkLabel::InstanceOf && net.node(&l.from).is_some_and(|n| n.space == l.space) {
            member_of.entry(l.from.clone()).or_default().push(sym(l.to.as_str()));
        }
    }
    for kind in [NodeKind::GenericClass, NodeKind::Instance, NodeKind::Value] {
        for n in net.nodes().filter(|n| n.kind == kind) {
            let head = match kind {
                NodeKind::GenericClass => "class",
                NodeKind::Instance => "instance",
                NodeKind::Value => "value",
            };
            let _ = write!(out, "({head} {}", sym(n.id.as_str()));
            if kind == NodeKind::Instance {
                for c in member_of.get(&n.id).into_iter().flatten() {
                    let _ = write!(out, " {c}");
                }
            }
            if n.label != n.id.as_str() {
                let _ = write!(out, " :label {}", quoted(&n.label));
            }
            if !n.space.is_root() {
                let _ = write!(out, " :space {}", sym(n.space.as_str()));
            }
            out.push_str(")\n");
        }
    }

    // Grouped by head, then (from, label, to) within each group.
    links.sort_by_key(|l| {
        let group = match &l.label {
            LinkLabel::IsA => 0,
            LinkLabel::Has => 1,
            LinkLabel::InstanceOf => 2,
            LinkLabel::Named(_) => {
                if net.node(&l.to).is_some_and(|n| n.kind == NodeKind::Value) {
                    3
                } else {
                    2
                }
            }
        };
        (group, l.from.clone(), l.label.clone(), l.to.clone())
    });
    for l in links {
        let from_space = net.node(&l.from).map(|n| &n.space);
        if l.label == LinkLabel::InstanceOf && from_space == Some(&l.space) {
            continue;
        }
        let (from, to) = (sym(l.from.as_str()), sym(l.to.as_str()));
        let _ = match &l.label {
            LinkLabel::IsA => write!(out, "(isa {from} {to}"),
            LinkLabel::Has => write!(out, "(has {from} {to}"),
            LinkLabel::InstanceOf => write!(out, "(rel {from} instance {to}"),
            LinkLabel::Named(r) => {
                let head = if net.node(&l.to).is_some_and(|n| n.kind == NodeKind::Value) {
                    "attr"
                } else {
                    "rel"
                };
                write!(out, "({head} {from} {} {to}", rel(r))
            }
        };
        if from_space != Some(&l.space) {
            let _ = write!(out, " :space {}", sym(l.space.as_str()));
        }
        out.push_str(")\n");
    }

    for s in kb.scripts() {
        write_script(&mut out, s);
    }

    for l in kb.links() {
        let element = match &l.from.element {
            ElementRef::Role(r) => format!("(role {})", sym(r)),
            ElementRef::Prop(p) => format!("(prop {})", sym(p)),
            ElementRef::EventObject { scene, index } => format!("(event {scene} {index})"),
        };
        let _ = writeln!(out, "(link {} {element} {})", sym(&l.from.script), sym(l.to.as_str()));
    }

    for e in kb.episodes() {
        let _ = write!(out, "(episode {} {}", sym(&e.id), sym(&e.script));
        if e.status == EpisodeStatus::Completed {
            out.push_str(" :status completed");
        }
        for (k, v) in &e.bindings {
            let _ = write!(out, "\n  (bind {} {})", sym(k), sym(v.as_str()));
        }
        for o in &e.observations {
            let _ = write!(out, "\n  (observe {})", observation(o));
        }
        out.push_str("\n  (path");
        for n in &e.scene_path {
            let _ = write!(out, " {n}");
        }
        out.push(')');
        let _ = write!(out, "\n  {}", refs("observed", &e.observed));
        let _ = write!(out, "\n  {}", refs("inferred", &e.inferred));
        out.push_str(")\n");
    }
    out
}
