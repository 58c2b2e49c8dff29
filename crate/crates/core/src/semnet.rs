//! Semantic network store.
//!
//! Nodes are generic classes, instances or values. Links are directed and
//! labeled; `IsA` and `InstanceOf` form the generalization hierarchy used for
//! inheritance, while `Has` and named relations carry attributes. Every node
//! and link lives in exactly one partition space, and spaces nest into a tree
//! rooted at [`ROOT_SPACE`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// Identifier of the default space, which always exists.
pub const ROOT_SPACE: &str = "s0";

/// Relation names that map onto the built-in link labels.
pub const RESERVED_RELATIONS: [&str; 3] = ["is-a", "instance", "has"];

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        NodeId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_string())
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        NodeId(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpaceId(String);

impl SpaceId {
    pub fn new(id: impl Into<String>) -> Self {
        SpaceId(id.into())
    }

    pub fn root() -> Self {
        SpaceId(ROOT_SPACE.to_string())
    }

    pub fn is_root(&self) -> bool {
        self.0 == ROOT_SPACE
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SpaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for SpaceId {
    fn from(s: &str) -> Self {
        SpaceId(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKind {
    GenericClass,
    Instance,
    Value,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub label: String,
    pub space: SpaceId,
}

impl Node {
    /// A node whose display label equals its id.
    pub fn new(id: impl Into<NodeId>, kind: NodeKind, space: impl Into<SpaceId>) -> Self {
        let id = id.into();
        Node {
            label: id.as_str().to_string(),
            id,
            kind,
            space: space.into(),
        }
    }

    pub fn class(id: &str) -> Self {
        Node::new(id, NodeKind::GenericClass, SpaceId::root())
    }

    pub fn instance(id: &str) -> Self {
        Node::new(id, NodeKind::Instance, SpaceId::root())
    }

    pub fn value(id: &str) -> Self {
        Node::new(id, NodeKind::Value, SpaceId::root())
    }

    pub fn in_space(mut self, space: &str) -> Self {
        self.space = SpaceId::new(space);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }
}

/// Link label. Ordering is `IsA < InstanceOf < Has < Named(..)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LinkLabel {
    IsA,
    InstanceOf,
    Has,
    Named(String),
}

impl LinkLabel {
    /// Maps a relation name to a label; the reserved names select the
    /// built-in labels.
    pub fn from_relation(name: &str) -> Result<Self, SemNetError> {
        match name {
            "is-a" => Ok(LinkLabel::IsA),
            "instance" => Ok(LinkLabel::InstanceOf),
            "has" => Ok(LinkLabel::Has),
            _ if is_relation_name(name) => Ok(LinkLabel::Named(name.to_string())),
            _ => Err(SemNetError::InvalidRelationName(name.to_string())),
        }
    }

    /// The relation name used in text and in attribute maps.
    pub fn relation_name(&self) -> &str {
        match self {
            LinkLabel::IsA => "is-a",
            LinkLabel::InstanceOf => "instance",
            LinkLabel::Has => "has",
            LinkLabel::Named(n) => n,
        }
    }

    pub fn is_generalization(&self) -> bool {
        matches!(self, LinkLabel::IsA | LinkLabel::InstanceOf)
    }
}

impl fmt::Display for LinkLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.relation_name())
    }
}

/// Lowercase kebab-case: `[a-z][a-z0-9]*(-[a-z0-9]+)*`.
pub fn is_relation_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => {}
        _ => return false,
    }
    let mut prev_dash = false;
    for c in chars {
        match c {
            'a'..='z' | '0'..='9' => prev_dash = false,
            '-' if !prev_dash => prev_dash = true,
            _ => return false,
        }
    }
    !prev_dash
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Link {
    pub from: NodeId,
    pub to: NodeId,
    pub label: LinkLabel,
    pub space: SpaceId,
}

impl Link {
    pub fn new(from: &str, label: LinkLabel, to: &str) -> Self {
        Link {
            from: from.into(),
            to: to.into(),
            label,
            space: SpaceId::root(),
        }
    }

    pub fn named(from: &str, relation: &str, to: &str) -> Self {
        Link::new(from, LinkLabel::Named(relation.to_string()), to)
    }

    pub fn in_space(mut self, space: &str) -> Self {
        self.space = SpaceId::new(space);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SpaceKind {
    Ordinary,
    GeneralStatement,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Space {
    pub id: SpaceId,
    pub parent: Option<SpaceId>,
    pub kind: SpaceKind,
    /// Holder of the belief, for belief spaces.
    pub agent: Option<NodeId>,
    /// Universally quantified variable nodes of a general-statement space.
    pub vars: Vec<NodeId>,
}

impl Space {
    pub fn ordinary(id: &str, parent: &str) -> Self {
        Space {
            id: SpaceId::new(id),
            parent: Some(SpaceId::new(parent)),
            kind: SpaceKind::Ordinary,
            agent: None,
            vars: Vec::new(),
        }
    }

    pub fn general(id: &str, parent: &str, vars: &[&str]) -> Self {
        Space {
            kind: SpaceKind::GeneralStatement,
            vars: vars.iter().map(|v| NodeId::new(*v)).collect(),
            ..Space::ordinary(id, parent)
        }
    }

    pub fn with_agent(mut self, agent: &str) -> Self {
        self.agent = Some(NodeId::new(agent));
        self
    }

    fn root() -> Self {
        Space {
            id: SpaceId::root(),
            parent: None,
            kind: SpaceKind::Ordinary,
            agent: None,
            vars: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeRecord {
    pub attribute: String,
    pub value: NodeId,
    /// Node on which the attribute is asserted.
    pub source: NodeId,
    pub depth: usize,
}

/// How a `(subject predicate object)` fact follows from the network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    pub subject: NodeId,
    pub predicate: String,
    pub object: NodeId,
    /// Node where the supporting link is asserted, or `None` for the
    /// reflexive `is-a` of a class.
    pub asserted_at: Option<NodeId>,
    /// Generalization hops from the assertion down to the subject, as
    /// `(child, parent)` pairs ordered from the top of the chain.
    pub hops: Vec<(NodeId, NodeId)>,
}

impl Derivation {
    pub fn depth(&self) -> usize {
        self.hops.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemNetError {
    #[error("duplicate node `{0}`")]
    DuplicateNode(NodeId),
    #[error("duplicate space `{0}`")]
    DuplicateSpace(SpaceId),
    #[error("unknown space `{0}`")]
    UnknownSpace(SpaceId),
    #[error("unknown node `{0}`")]
    UnknownNode(NodeId),
    #[error("is-a link {from} -> {to} would create a cycle")]
    CycleDetected { from: NodeId, to: NodeId },
    #[error("{label} link cannot connect {from} ({from_kind:?}) to {to} ({to_kind:?})")]
    KindMismatch {
        from: NodeId,
        from_kind: NodeKind,
        to: NodeId,
        to_kind: NodeKind,
        label: LinkLabel,
    },
    #[error("link {from} {label} {to} already exists in space {space}")]
    DuplicateLink {
        from: NodeId,
        label: LinkLabel,
        to: NodeId,
        space: SpaceId,
    },
    #[error("invalid relation name `{0}`")]
    InvalidRelationName(String),
    #[error("space `{0}` has no parent")]
    MissingParent(SpaceId),
    #[error("general-statement space `{0}` needs at least one quantified variable")]
    MissingQuantifiedVar(SpaceId),
    #[error("space `{space}` refers to missing node `{node}`")]
    DanglingSpaceRef { space: SpaceId, node: NodeId },
}

type LinkKey = (LinkLabel, NodeId);

/// The semantic network. Append-only; all queries are pure reads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemNet {
    spaces: BTreeMap<SpaceId, Space>,
    nodes: BTreeMap<NodeId, Node>,
    out: BTreeMap<NodeId, BTreeMap<LinkKey, SpaceId>>,
    incoming: BTreeMap<NodeId, BTreeSet<LinkKey>>,
    link_count: usize,
}

impl Default for SemNet {
    fn default() -> Self {
        Self::new()
    }
}

impl SemNet {
    pub fn new() -> Self {
        let mut spaces = BTreeMap::new();
        spaces.insert(SpaceId::root(), Space::root());
        SemNet {
            spaces,
            nodes: BTreeMap::new(),
            out: BTreeMap::new(),
            incoming: BTreeMap::new(),
            link_count: 0,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn link_count(&self) -> usize {
        self.link_count
    }

    pub fn node(&self, id: &NodeId) -> Option<&Node> {
        self.nodes.get(id)
    }

    pub fn space(&self, id: &SpaceId) -> Option<&Space> {
        self.spaces.get(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn spaces(&self) -> impl Iterator<Item = &Space> {
        self.spaces.values()
    }

    /// All links ordered by `(from, label, to)`.
    pub fn links(&self) -> impl Iterator<Item = Link> + '_ {
        self.out.iter().flat_map(|(from, targets)| {
            targets.iter().map(move |((label, to), space)| Link {
                from: from.clone(),
                to: to.clone(),
                label: label.clone(),
                space: space.clone(),
            })
        })
    }

    pub fn link_space(&self, from: &NodeId, label: &LinkLabel, to: &NodeId) -> Option<&SpaceId> {
        self.out
            .get(from)
            .and_then(|t| t.get(&(label.clone(), to.clone())))
    }

    pub fn has_link(&self, from: &NodeId, label: &LinkLabel, to: &NodeId) -> bool {
        self.link_space(from, label, to).is_some()
    }

    fn require(&self, id: &NodeId) -> Result<&Node, SemNetError> {
        self.nodes
            .get(id)
            .ok_or_else(|| SemNetError::UnknownNode(id.clone()))
    }

    /// Depth of a space in the nesting tree; the root is at depth 0.
    pub fn space_depth(&self, id: &SpaceId) -> usize {
        let mut depth = 0;
        let mut cur = self.spaces.get(id).and_then(|s| s.parent.as_ref());
        while let Some(p) = cur {
            depth += 1;
            cur = self.spaces.get(p).and_then(|s| s.parent.as_ref());
        }
        depth
    }

    pub fn add_space(&mut self, space: Space) -> Result<(), SemNetError> {
        if self.spaces.contains_key(&space.id) {
            return Err(SemNetError::DuplicateSpace(space.id));
        }
        let parent = space
            .parent
            .as_ref()
            .ok_or_else(|| SemNetError::MissingParent(space.id.clone()))?;
        if !self.spaces.contains_key(parent) {
            return Err(SemNetError::UnknownSpace(parent.clone()));
        }
        if space.kind == SpaceKind::GeneralStatement && space.vars.is_empty() {
            return Err(SemNetError::MissingQuantifiedVar(space.id));
        }
        self.spaces.insert(space.id.clone(), space);
        Ok(())
    }

    /// Agents and quantified variables may be declared after their space;
    /// this reports the ones that never resolved.
    pub fn dangling_space_refs(&self) -> Vec<SemNetError> {
        let mut errs = Vec::new();
        for space in self.spaces.values() {
            for node in space.agent.iter().chain(space.vars.iter()) {
                if !self.nodes.contains_key(node) {
                    errs.push(SemNetError::DanglingSpaceRef {
                        space: space.id.clone(),
                        node: node.clone(),
                    });
                }
            }
        }
        errs
    }

    pub fn add_node(&mut self, node: Node) -> Result<(), SemNetError> {
        if self.nodes.contains_key(&node.id) {
            return Err(SemNetError::DuplicateNode(node.id));
        }
        if !self.spaces.contains_key(&node.space) {
            return Err(SemNetError::UnknownSpace(node.space));
        }
        self.nodes.insert(node.id.clone(), node);
        Ok(())
    }

    /// Checks every precondition of [`SemNet::add_link`] without mutating.
    pub fn check_link(&self, link: &Link) -> Result<(), SemNetError> {
        let from = self.require(&link.from)?;
        let to = self.require(&link.to)?;
        if !self.spaces.contains_key(&link.space) {
            return Err(SemNetError::UnknownSpace(link.space.clone()));
        }
        if let LinkLabel::Named(name) = &link.label {
            if !is_relation_name(name) || RESERVED_RELATIONS.contains(&name.as_str()) {
                return Err(SemNetError::InvalidRelationName(name.clone()));
            }
        }
        let kinds_ok = match link.label {
            LinkLabel::IsA => {
                from.kind == NodeKind::GenericClass && to.kind == NodeKind::GenericClass
            }
            LinkLabel::InstanceOf => {
                from.kind == NodeKind::Instance && to.kind == NodeKind::GenericClass
            }
            LinkLabel::Has | LinkLabel::Named(_) => true,
        };
        if !kinds_ok {
            return Err(SemNetError::KindMismatch {
                from: from.id.clone(),
                from_kind: from.kind,
                to: to.id.clone(),
                to_kind: to.kind,
                label: link.label.clone(),
            });
        }
        if let Some(space) = self.link_space(&link.from, &link.label, &link.to) {
            return Err(SemNetError::DuplicateLink {
                from: link.from.clone(),
                label: link.label.clone(),
                to: link.to.clone(),
                space: space.clone(),
            });
        }
        if link.label == LinkLabel::IsA && self.reaches_by_isa(&link.to, &link.from) {
            return Err(SemNetError::CycleDetected {
                from: link.from.clone(),
                to: link.to.clone(),
            });
        }
        Ok(())
    }

    pub fn add_link(&mut self, link: Link) -> Result<(), SemNetError> {
        self.check_link(&link)?;
        self.incoming
            .entry(link.to.clone())
            .or_default()
            .insert((link.label.clone(), link.from.clone()));
        self.out
            .entry(link.from)
            .or_default()
            .insert((link.label, link.to), link.space);
        self.link_count += 1;
        Ok(())
    }

    /// Whether `target` is reachable from `start` along `IsA` links
    /// (including `start == target`).
    fn reaches_by_isa(&self, start: &NodeId, target: &NodeId) -> bool {
        let mut seen = BTreeSet::new();
        let mut stack = vec![start];
        while let Some(n) = stack.pop() {
            if n == target {
                return true;
            }
            if !seen.insert(n) {
                continue;
            }
            if let Some(targets) = self.out.get(n) {
                stack.extend(
                    targets
                        .keys()
                        .filter(|(l, _)| *l == LinkLabel::IsA)
                        .map(|(_, to)| to),
                );
            }
        }
        false
    }

    /// Direct generalization parents (`IsA` or `InstanceOf` targets), ascending.
    pub fn parents(&self, id: &NodeId) -> Vec<&NodeId> {
        let mut ps: Vec<&NodeId> = self
            .out
            .get(id)
            .map(|t| {
                t.keys()
                    .filter(|(l, _)| l.is_generalization())
                    .map(|(_, to)| to)
                    .collect()
            })
            .unwrap_or_default();
        ps.sort();
        ps.dedup();
        ps
    }

    /// Nodes with a direct `IsA` link to `class`, ascending.
    pub fn isa_children(&self, class: &NodeId) -> BTreeSet<NodeId> {
        self.incoming
            .get(class)
            .map(|s| {
                s.iter()
                    .filter(|(l, _)| *l == LinkLabel::IsA)
                    .map(|(_, from)| from.clone())
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Breadth-first walk up the generalization hierarchy. Each ancestor is
    /// reported once at its shortest distance, ordered by `(depth, id)`, with
    /// the parent through which it was first reached.
    fn ancestor_tree(&self, id: &NodeId) -> Vec<(NodeId, usize, NodeId)> {
        let mut seen: BTreeSet<&NodeId> = BTreeSet::new();
        seen.insert(id);
        let mut out = Vec::new();
        let mut frontier: Vec<&NodeId> = vec![id];
        let mut depth = 0;
        while !frontier.is_empty() {
            depth += 1;
            let mut next: BTreeMap<&NodeId, &NodeId> = BTreeMap::new();
            for child in &frontier {
                for p in self.parents(child) {
                    if !seen.contains(p) {
                        next.entry(p).or_insert(child);
                    }
                }
            }
            frontier = Vec::with_capacity(next.len());
            for (p, via) in next {
                seen.insert(p);
                out.push((p.clone(), depth, via.clone()));
                frontier.push(p);
            }
        }
        out
    }

    pub fn ancestors(&self, id: &NodeId) -> Result<Vec<(NodeId, usize)>, SemNetError> {
        self.require(id)?;
        Ok(self
            .ancestor_tree(id)
            .into_iter()
            .map(|(n, d, _)| (n, d))
            .collect())
    }

    pub fn inherited_attributes(
        &self,
        id: &NodeId,
    ) -> Result<BTreeMap<String, AttributeRecord>, SemNetError> {
        self.require(id)?;
        let mut result: BTreeMap<String, AttributeRecord> = BTreeMap::new();
        let levels = std::iter::once((id.clone(), 0)).chain(self.ancestors(id)?);
        for (source, depth) in levels {
            let Some(targets) = self.out.get(&source) else {
                continue;
            };
            for (label, value) in targets.keys() {
                if label.is_generalization() {
                    continue;
                }
                let candidate = AttributeRecord {
                    attribute: label.relation_name().to_string(),
                    value: value.clone(),
                    source: source.clone(),
                    depth,
                };
                // Levels arrive in (depth, source) order and values ascend
                // within a source, so the first record seen wins.
                result
                    .entry(candidate.attribute.clone())
                    .or_insert(candidate);
            }
        }
        Ok(result)
    }

    pub fn is_a(&self, a: &NodeId, b: &NodeId) -> Result<bool, SemNetError> {
        let na = self.require(a)?;
        self.require(b)?;
        if a == b {
            return Ok(na.kind == NodeKind::GenericClass);
        }
        Ok(self.ancestor_tree(a).iter().any(|(n, _, _)| n == b))
    }

    pub fn relations_of(
        &self,
        subject: &NodeId,
        relation: Option<&str>,
    ) -> Result<Vec<Link>, SemNetError> {
        self.require(subject)?;
        let Some(targets) = self.out.get(subject) else {
            return Ok(Vec::new());
        };
        let mut links: Vec<Link> = targets
            .iter()
            .filter(|((label, _), _)| relation.is_none_or(|r| label.relation_name() == r))
            .map(|((label, to), space)| Link {
                from: subject.clone(),
                to: to.clone(),
                label: label.clone(),
                space: space.clone(),
            })
            .collect();
        links.sort_by(|a, b| {
            (a.label.relation_name(), &a.to).cmp(&(b.label.relation_name(), &b.to))
        });
        Ok(links)
    }

    pub fn visible_nodes(&self, space: &SpaceId) -> Result<BTreeSet<NodeId>, SemNetError> {
        if !self.spaces.contains_key(space) {
            return Err(SemNetError::UnknownSpace(space.clone()));
        }
        let mut chain = BTreeSet::new();
        let mut cur = Some(space);
        while let Some(s) = cur {
            chain.insert(s);
            cur = self.spaces.get(s).and_then(|sp| sp.parent.as_ref());
        }
        Ok(self
            .nodes
            .values()
            .filter(|n| chain.contains(&n.space))
            .map(|n| n.id.clone())
            .collect())
    }

    /// Every value `o` such that `(subject predicate o)` follows from the
    /// network, each with its most specific derivation.
    ///
    /// `is-a` and `instance` read the generalization hierarchy. Any other
    /// predicate is an attribute: local values shadow inherited ones, and
    /// otherwise only the nearest ancestors asserting the predicate count.
    pub fn derive_values(
        &self,
        subject: &NodeId,
        predicate: &str,
    ) -> Result<Vec<Derivation>, SemNetError> {
        let node = self.require(subject)?;
        let label = LinkLabel::from_relation(predicate)?;
        let tree = self.ancestor_tree(subject);
        let via: BTreeMap<&NodeId, &NodeId> = tree.iter().map(|(n, _, v)| (n, v)).collect();
        let chain_to = |top: &NodeId| -> Vec<(NodeId, NodeId)> {
            // (child, parent) pairs from `top` down to the subject.
            let mut hops = Vec::new();
            let mut cur = top;
            while let Some(child) = via.get(cur) {
                hops.push(((*child).clone(), cur.clone()));
                cur = child;
            }
            hops
        };

        let mut out = Vec::new();
        if label.is_generalization() {
            if node.kind == NodeKind::GenericClass {
                out.push(Derivation {
                    subject: subject.clone(),
                    predicate: predicate.to_string(),
                    object: subject.clone(),
                    asserted_at: None,
                    hops: Vec::new(),
                });
            }
            for (ancestor, _, parent_side) in &tree {
                // The last hop is the asserted link; the rest are inherited.
                let hops = chain_to(parent_side);
                out.push(Derivation {
                    subject: subject.clone(),
                    predicate: predicate.to_string(),
                    object: ancestor.clone(),
                    asserted_at: Some(parent_side.clone()),
                    hops,
                });
            }
            return Ok(out);
        }

        let levels = std::iter::once((subject, 0)).chain(tree.iter().map(|(n, d, _)| (n, *d)));
        let mut found_depth = None;
        for (source, depth) in levels {
            if found_depth.is_some_and(|d| d < depth) {
                break;
            }
            let Some(targets) = self.out.get(source) else {
                continue;
            };
            for (l, value) in targets.keys() {
                if *l != label || out.iter().any(|d: &Derivation| &d.object == value) {
                    continue;
                }
                found_depth = Some(depth);
                out.push(Derivation {
                    subject: subject.clone(),
                    predicate: predicate.to_string(),
                    object: value.clone(),
                    asserted_at: Some(source.clone()),
                    hops: chain_to(source),
                });
            }
        }
        out.sort_by(|a, b| a.object.cmp(&b.object));
        Ok(out)
    }

    /// The most specific derivation of one fact, if any.
    pub fn derive_fact(
        &self,
        subject: &NodeId,
        predicate: &str,
        object: &NodeId,
    ) -> Result<Option<Derivation>, SemNetError> {
        Ok(self
            .derive_values(subject, predicate)?
            .into_iter()
            .find(|d| &d.object == object))
    }
}
