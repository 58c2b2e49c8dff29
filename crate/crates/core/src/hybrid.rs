//! Cross-links from script elements into the semantic network.
//!
//! A [`HybridKb`] owns the network, the script library, the links between
//! them and every stored episode. Links point one way, script to net: roles
//! are bound to classes, props and event objects denote nodes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::script::{Episode, Script};
use crate::semnet::{AttributeRecord, NodeId, NodeKind, SemNet};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ElementRef {
    Role(String),
    Prop(String),
    /// Object of the event at `index` in scene `scene`.
    EventObject { scene: u32, index: usize },
}

impl fmt::Display for ElementRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElementRef::Role(r) => write!(f, "role {r}"),
            ElementRef::Prop(p) => write!(f, "prop {p}"),
            ElementRef::EventObject { scene, index } => write!(f, "event {scene} {index}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ScriptElementRef {
    pub script: String,
    pub element: ElementRef,
}

impl ScriptElementRef {
    pub fn role(script: &str, role: &str) -> Self {
        ScriptElementRef {
            script: script.to_string(),
            element: ElementRef::Role(role.to_string()),
        }
    }

    pub fn prop(script: &str, prop: &str) -> Self {
        ScriptElementRef {
            script: script.to_string(),
            element: ElementRef::Prop(prop.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HybridRelation {
    /// Role to the class its fillers must belong to.
    BoundTo,
    /// Prop or event object to the node it stands for.
    Denotes,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HybridLink {
    pub from: ScriptElementRef,
    pub to: NodeId,
}

impl HybridLink {
    pub fn new(from: ScriptElementRef, to: &str) -> Self {
        HybridLink {
            from,
            to: NodeId::new(to),
        }
    }

    pub fn relation(&self) -> HybridRelation {
        match self.from.element {
            ElementRef::Role(_) => HybridRelation::BoundTo,
            _ => HybridRelation::Denotes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HybridError {
    #[error("script element {0:?} does not exist")]
    DanglingScriptElement(ScriptElementRef),
    #[error("node `{0}` does not exist")]
    DanglingNode(NodeId),
    #[error("role link must target a class, `{0}` is not one")]
    RoleLinkToNonClass(NodeId),
    #[error("link already exists")]
    DuplicateLink,
    #[error("role {role} of {script} has no class link")]
    UnlinkedRole { script: String, role: String },
    #[error("unknown script `{0}`")]
    UnknownScript(String),
}

/// A role filler that is not an instance of the class its role is bound to.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct BindingViolation {
    pub role: String,
    pub instance: NodeId,
    pub class: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoleDetail {
    pub class: NodeId,
    pub attributes: BTreeMap<String, AttributeRecord>,
    /// Direct `IsA` children of the class.
    pub generalizations: BTreeSet<NodeId>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HybridKb {
    pub(crate) net: SemNet,
    pub(crate) scripts: BTreeMap<String, Script>,
    pub(crate) links: BTreeSet<HybridLink>,
    pub(crate) episodes: BTreeMap<String, Episode>,
}

impl HybridKb {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn net(&self) -> &SemNet {
        &self.net
    }

    pub fn script(&self, name: &str) -> Option<&Script> {
        self.scripts.get(name)
    }

    pub fn scripts(&self) -> impl Iterator<Item = &Script> {
        self.scripts.values()
    }

    pub fn links(&self) -> impl Iterator<Item = &HybridLink> {
        self.links.iter()
    }

    pub fn episode(&self, id: &str) -> Option<&Episode> {
        self.episodes.get(id)
    }

    pub fn episodes(&self) -> impl Iterator<Item = &Episode> {
        self.episodes.values()
    }

    /// Next free episode id for `script`.
    pub(crate) fn next_episode_id(&self, script: &str) -> String {
        (1..)
            .map(|n| format!("{script}-{n:03}"))
            .find(|id| !self.episodes.contains_key(id))
            .expect("unbounded id space")
    }

    fn element_exists(&self, r: &ScriptElementRef) -> bool {
        let Some(script) = self.scripts.get(&r.script) else {
            return false;
        };
        match &r.element {
            ElementRef::Role(role) => script.is_role(role),
            ElementRef::Prop(p) => script.is_prop(p),
            ElementRef::EventObject { scene, index } => script
                .scene(*scene)
                .and_then(|s| s.events.get(*index))
                .is_some_and(|e| e.object.is_some()),
        }
    }

    pub fn check_hybrid_link(&self, link: &HybridLink) -> Result<(), HybridError> {
        if !self.element_exists(&link.from) {
            return Err(HybridError::DanglingScriptElement(link.from.clone()));
        }
        let node = self
            .net
            .node(&link.to)
            .ok_or_else(|| HybridError::DanglingNode(link.to.clone()))?;
        if link.relation() == HybridRelation::BoundTo && node.kind != NodeKind::GenericClass {
            return Err(HybridError::RoleLinkToNonClass(link.to.clone()));
        }
        if self.links.contains(link) {
            return Err(HybridError::DuplicateLink);
        }
        Ok(())
    }

    pub fn add_hybrid_link(&mut self, link: HybridLink) -> Result<(), HybridError> {
        self.check_hybrid_link(&link)?;
        self.links.insert(link);
        Ok(())
    }

    /// Classes the given role is bound to, ascending.
    pub fn role_classes(&self, script: &str, role: &str) -> Vec<&NodeId> {
        let from = ScriptElementRef::role(script, role);
        self.links
            .iter()
            .filter(|l| l.from == from)
            .map(|l| &l.to)
            .collect()
    }

    pub fn check_binding_consistency(
        &self,
        episode: &Episode,
    ) -> Result<Vec<BindingViolation>, HybridError> {
        if !self.scripts.contains_key(&episode.script) {
            return Err(HybridError::UnknownScript(episode.script.clone()));
        }
        let mut violations = Vec::new();
        for (role, instance) in &episode.bindings {
            for class in self.role_classes(&episode.script, role) {
                // A filler missing from the net cannot be shown to belong.
                if !self.net.is_a(instance, class).unwrap_or(false) {
                    violations.push(BindingViolation {
                        role: role.clone(),
                        instance: instance.clone(),
                        class: class.clone(),
                    });
                }
            }
        }
        Ok(violations)
    }

    /// Details the net holds about the class a role is bound to: its
    /// inherited attributes and its generalization children. With several
    /// class links the lowest class id is used.
    pub fn resolve_role_attributes(
        &self,
        script: &str,
        role: &str,
    ) -> Result<RoleDetail, HybridError> {
        if !self.scripts.contains_key(script) {
            return Err(HybridError::UnknownScript(script.to_string()));
        }
        let class = self
            .role_classes(script, role)
            .first()
            .map(|c| (*c).clone())
            .ok_or_else(|| HybridError::UnlinkedRole {
                script: script.to_string(),
                role: role.to_string(),
            })?;
        let attributes = self
            .net
            .inherited_attributes(&class)
            .map_err(|_| HybridError::DanglingNode(class.clone()))?;
        Ok(RoleDetail {
            generalizations: self.net.isa_children(&class),
            class,
            attributes,
        })
    }
}
