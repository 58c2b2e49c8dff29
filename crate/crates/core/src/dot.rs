//! Graphviz export.
//!
//! Net nodes keep their ids. Script elements get ids starting with
//! `script:`, which no net node can have.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::hybrid::{ElementRef, HybridKb, ScriptElementRef};
use crate::semnet::{LinkLabel, NodeId, NodeKind, SemNet, SpaceId};

fn q(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

fn element_id(r: &ScriptElementRef) -> String {
    match &r.element {
        ElementRef::Role(role) => format!("script:{}:role:{role}", r.script),
        ElementRef::Prop(p) => format!("script:{}:prop:{p}", r.script),
        ElementRef::EventObject { scene, index } => {
            format!("script:{}:event:{scene}:{index}", r.script)
        }
    }
}

fn write_space(
    out: &mut String,
    net: &SemNet,
    space: &SpaceId,
    children: &BTreeMap<&SpaceId, Vec<&SpaceId>>,
    members: &BTreeMap<&SpaceId, Vec<&NodeId>>,
    indent: usize,
) {
    let pad = "  ".repeat(indent);
    let _ = writeln!(out, "{pad}subgraph {} {{", q(&format!("cluster_{space}")));
    let _ = writeln!(out, "{pad}  label={};", q(space.as_str()));
    for id in members.get(space).into_iter().flatten() {
        let Some(node) = net.node(id) else { continue };
        let shape = match node.kind {
            NodeKind::GenericClass => "ellipse",
            NodeKind::Instance => "box",
            NodeKind::Value => "plaintext",
        };
        let _ = writeln!(out, "{pad}  {} [label={}, shape={shape}];", q(id.as_str()), q(&node.label));
    }
    for child in children.get(space).into_iter().flatten() {
        write_space(out, net, child, children, members, indent + 1);
    }
    let _ = writeln!(out, "{pad}}}");
}

/// Renders the knowledge base as a `digraph`. Output depends only on the
/// contents, never on insertion order.
pub fn export_dot(kb: &HybridKb) -> String {
    let net = kb.net();
    let mut out = String::from("digraph kb {\n  rankdir=BT;\n");

    let mut children: BTreeMap<&SpaceId, Vec<&SpaceId>> = BTreeMap::new();
    for sp in net.spaces() {
        if let Some(p) = &sp.parent {
            children.entry(p).or_default().push(&sp.id);
        }
    }
    let mut members: BTreeMap<&SpaceId, Vec<&NodeId>> = BTreeMap::new();
    for n in net.nodes() {
        members.entry(&n.space).or_default().push(&n.id);
    }
    write_space(&mut out, net, &SpaceId::root(), &children, &members, 1);

    for l in net.links() {
        let attrs = match &l.label {
            LinkLabel::IsA => "style=solid".to_string(),
            LinkLabel::InstanceOf => "style=dashed".to_string(),
            LinkLabel::Has => "style=solid, arrowhead=diamond".to_string(),
            LinkLabel::Named(r) => format!("style=dotted, label={}", q(r)),
        };
        let _ = writeln!(
            out,
            "  {} -> {} [{attrs}];",
            q(l.from.as_str()),
            q(l.to.as_str())
        );
    }

    for s in kb.scripts() {
        let _ = writeln!(out, "  subgraph {} {{", q(&format!("cluster_script_{}", s.name)));
        let _ = writeln!(out, "    label={};", q(&format!("script {}", s.name)));
        for role in s.roles.keys() {
            let r = ScriptElementRef::role(&s.name, role);
            let _ = writeln!(out, "    {} [label={}, shape=hexagon];", q(&element_id(&r)), q(role));
        }
        for prop in &s.props {
            let r = ScriptElementRef::prop(&s.name, prop);
            let _ = writeln!(out, "    {} [label={}, shape=hexagon];", q(&element_id(&r)), q(prop));
        }
        for scene in &s.scenes {
            for (index, e) in scene.events.iter().enumerate() {
                let Some(obj) = &e.object else { continue };
                let r = ScriptElementRef {
                    script: s.name.clone(),
                    element: ElementRef::EventObject {
                        scene: scene.number,
                        index,
                    },
                };
                let label = format!("{} {} {}", e.actor, e.action, obj.text());
                let _ = writeln!(out, "    {} [label={}, shape=note];", q(&element_id(&r)), q(&label));
            }
        }
        let _ = writeln!(out, "  }}");
    }

    for l in kb.links() {
        let _ = writeln!(
            out,
            "  {} -> {} [style=bold];",
            q(&element_id(&l.from)),
            q(l.to.as_str())
        );
    }
    out.push_str("}\n");
    out
}
