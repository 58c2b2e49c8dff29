//! TELL/ASK interface over a [`HybridKb`].
//!
//! `tell` routes each assertion to the store that owns it, skips knowledge
//! that is already present and rejects anything the store would refuse,
//! leaving the KB untouched. `ask` answers queries without mutating and
//! attaches a confidence factor plus a trace of the inference steps:
//!
//! * an asserted fact has confidence 1.0;
//! * every inheritance hop multiplies by `confidence.decay`;
//! * an event inferred by gap filling has confidence `confidence.gapfill`.
//!
//! Absence of a derivation yields `Unknown`, never `No`.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::hybrid::{HybridError, HybridKb, HybridLink};
use crate::script::{
    self, EpisodeStatus, Episode, EventRef, Observation, Pattern, Script, ScriptError,
    ScriptIssue, Term,
};
use crate::semnet::{
    Derivation, LinkLabel, Node, NodeId, NodeKind, SemNetError, Space, SpaceId,
};

pub const DEFAULT_DECAY: f64 = 0.9;
pub const DEFAULT_GAPFILL: f64 = 0.7;

/// Confidence parameters. Both factors lie strictly between 0 and 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Confidence {
    pub decay: f64,
    pub gapfill: f64,
}

impl Default for Confidence {
    fn default() -> Self {
        Confidence {
            decay: DEFAULT_DECAY,
            gapfill: DEFAULT_GAPFILL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("`{key}` must be a number strictly between 0 and 1, got `{value}`")]
    OutOfRange { key: String, value: String },
}

impl Confidence {
    pub const KEYS: [&'static str; 2] = ["confidence.decay", "confidence.gapfill"];

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let slot = match key {
            "confidence.decay" => &mut self.decay,
            "confidence.gapfill" => &mut self.gapfill,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        };
        match value.trim().parse::<f64>() {
            Ok(v) if v > 0.0 && v < 1.0 => {
                *slot = v;
                Ok(())
            }
            _ => Err(ConfigError::OutOfRange {
                key: key.to_string(),
                value: value.to_string(),
            }),
        }
    }
}

/// A unit of knowledge handed to [`HybridKb::tell`].
#[derive(Debug, Clone, PartialEq)]
pub enum Assertion {
    Space(Space),
    /// A node plus the classes an instance belongs to.
    Node { node: Node, classes: Vec<NodeId> },
    /// `subject predicate object`. A missing object becomes a value node,
    /// except for the generalization predicates. The space defaults to the
    /// subject's.
    Fact {
        subject: NodeId,
        predicate: String,
        object: NodeId,
        space: Option<SpaceId>,
    },
    Script(Script),
    HybridLink(HybridLink),
    Episode(Episode),
    /// An event observed in the running episode of a script.
    ScriptEvent { script: String, observation: Observation },
}

impl Assertion {
    pub fn fact(subject: &str, predicate: &str, object: &str) -> Self {
        Assertion::Fact {
            subject: subject.into(),
            predicate: predicate.to_string(),
            object: object.into(),
            space: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KbError {
    #[error(transparent)]
    SemNet(#[from] SemNetError),
    #[error(transparent)]
    Script(#[from] ScriptError),
    #[error(transparent)]
    Hybrid(#[from] HybridError),
    #[error("no open episode of script `{0}`")]
    NoOpenEpisode(String),
    #[error("unknown script `{0}`")]
    UnknownScript(String),
    #[error("a different script named `{0}` already exists")]
    DuplicateScript(String),
    #[error("invalid script `{name}`: {}", issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidScript { name: String, issues: Vec<ScriptIssue> },
    #[error("a different episode `{0}` already exists")]
    DuplicateEpisode(String),
    #[error("unknown episode `{0}`")]
    UnknownEpisode(String),
    #[error("episode `{id}` is inconsistent with its script: {reason}")]
    InvalidEpisode { id: String, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum TellOutcome {
    Accepted,
    /// Already known; the KB is unchanged.
    Skipped,
    Rejected(KbError),
}

impl fmt::Display for TellOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TellOutcome::Accepted => f.write_str("accepted"),
            TellOutcome::Skipped => f.write_str("skipped"),
            TellOutcome::Rejected(e) => write!(f, "rejected: {e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Query {
    YesNo(Pattern),
    /// Pattern with exactly one wildcard.
    Wh(Pattern),
    RoleDetail { script: String, role: String },
    DidHappen { script: String, event: Observation },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QueryError {
    #[error("malformed query: {0}")]
    MalformedQuery(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepKind {
    Asserted {
        subject: NodeId,
        predicate: String,
        object: NodeId,
    },
    /// A class is trivially a kind of itself.
    Identity { class: NodeId },
    Inherited {
        depth: usize,
        child: NodeId,
        parent: NodeId,
    },
    Observed {
        episode: String,
        at: EventRef,
        event: String,
    },
    ScriptInferred {
        episode: String,
        at: EventRef,
        event: String,
    },
    RoleLink {
        script: String,
        role: String,
        class: NodeId,
    },
    Generalization { child: NodeId, class: NodeId },
}

impl StepKind {
    /// Steps that rest on stored knowledge alone, without any inference.
    pub fn is_asserted(&self) -> bool {
        !matches!(
            self,
            StepKind::Inherited { .. } | StepKind::ScriptInferred { .. }
        )
    }
}

/// One inference step and the cumulative confidence after it.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub kind: StepKind,
    pub confidence: f64,
}

impl fmt::Display for TraceStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            StepKind::Asserted {
                subject,
                predicate,
                object,
            } => write!(f, "asserted {subject} {predicate} {object}")?,
            StepKind::Identity { class } => write!(f, "asserted {class} is-a {class} (identity)")?,
            StepKind::Inherited {
                depth,
                child,
                parent,
            } => write!(f, "inherited depth {depth} via {child} -> {parent}")?,
            StepKind::Observed { episode, at, event } => {
                write!(f, "asserted by observation in {episode} step {}: {event}", at.step + 1)?
            }
            StepKind::ScriptInferred { episode, at, event } => {
                write!(f, "script-inferred in {episode} step {}: {event}", at.step + 1)?
            }
            StepKind::RoleLink {
                script,
                role,
                class,
            } => write!(f, "asserted role {role} of {script} bound-to {class}")?,
            StepKind::Generalization { child, class } => {
                write!(f, "asserted {child} is-a {class}")?
            }
        }
        write!(f, "; confidence {:.2}", self.confidence)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Binding {
    pub node: NodeId,
    pub confidence: f64,
    pub trace: Vec<TraceStep>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Yes,
    No,
    Unknown,
    /// Sorted by confidence descending, then id ascending.
    Bindings(Vec<Binding>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Answer {
    pub verdict: Verdict,
    /// Absent exactly when the verdict is `Unknown`. For bindings it is the
    /// weakest binding's confidence.
    pub confidence: Option<f64>,
    pub trace: Vec<TraceStep>,
}

impl Answer {
    pub fn unknown() -> Self {
        Answer {
            verdict: Verdict::Unknown,
            confidence: None,
            trace: Vec::new(),
        }
    }

    fn yes(trace: Vec<TraceStep>) -> Self {
        let confidence = trace.last().map_or(1.0, |s| s.confidence);
        Answer {
            verdict: Verdict::Yes,
            confidence: Some(confidence),
            trace,
        }
    }

    fn bindings(mut found: Vec<Binding>) -> Self {
        if found.is_empty() {
            return Answer::unknown();
        }
        found.sort_by(|a, b| {
            b.confidence
                .total_cmp(&a.confidence)
                .then_with(|| a.node.cmp(&b.node))
        });
        let confidence = found.iter().map(|b| b.confidence).fold(1.0, f64::min);
        let trace = found.iter().flat_map(|b| b.trace.clone()).collect();
        Answer {
            verdict: Verdict::Bindings(found),
            confidence: Some(confidence),
            trace,
        }
    }

    pub fn is_unknown(&self) -> bool {
        self.verdict == Verdict::Unknown
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExplainError {
    #[error("nothing to explain")]
    NothingToExplain,
}

/// Renders an answer's trace, one line per inference step.
pub fn explain(answer: &Answer) -> Result<String, ExplainError> {
    let mut out = String::new();
    match &answer.verdict {
        Verdict::Yes => {
            for step in &answer.trace {
                out.push_str(&step.to_string());
                out.push('\n');
            }
        }
        Verdict::Bindings(found) => {
            for b in found {
                for step in &b.trace {
                    out.push_str(&format!("{}: {step}\n", b.node));
                }
            }
        }
        Verdict::No | Verdict::Unknown => return Err(ExplainError::NothingToExplain),
    }
    Ok(out)
}

fn trace_from_derivation(kb: &HybridKb, d: &Derivation, decay: f64) -> Vec<TraceStep> {
    let mut trace = Vec::with_capacity(d.hops.len() + 1);
    let mut confidence = 1.0;
    match &d.asserted_at {
        None => trace.push(TraceStep {
            kind: StepKind::Identity {
                class: d.object.clone(),
            },
            confidence,
        }),
        Some(source) => {
            let mut predicate = d.predicate.clone();
            if LinkLabel::from_relation(&predicate).is_ok_and(|l| l.is_generalization()) {
                predicate = if kb.net.has_link(source, &LinkLabel::IsA, &d.object) {
                    "is-a".into()
                } else {
                    "instance".into()
                };
            }
            trace.push(TraceStep {
                kind: StepKind::Asserted {
                    subject: source.clone(),
                    predicate,
                    object: d.object.clone(),
                },
                confidence,
            });
        }
    }
    for (i, (child, parent)) in d.hops.iter().enumerate() {
        confidence *= decay;
        trace.push(TraceStep {
            kind: StepKind::Inherited {
                depth: i + 1,
                child: child.clone(),
                parent: parent.clone(),
            },
            confidence,
        });
    }
    trace
}

impl HybridKb {
    pub fn tell(&mut self, assertion: Assertion) -> TellOutcome {
        match self.tell_inner(assertion) {
            Ok(true) => TellOutcome::Accepted,
            Ok(false) => TellOutcome::Skipped,
            Err(e) => TellOutcome::Rejected(e),
        }
    }

    /// `Ok(true)` when the KB changed, `Ok(false)` when already known.
    fn tell_inner(&mut self, assertion: Assertion) -> Result<bool, KbError> {
        match assertion {
            Assertion::Space(space) => {
                if self.net.space(&space.id) == Some(&space) {
                    return Ok(false);
                }
                self.net.add_space(space)?;
                Ok(true)
            }
            Assertion::Node { node, classes } => self.tell_node(node, classes),
            Assertion::Fact {
                subject,
                predicate,
                object,
                space,
            } => self.tell_fact(subject, &predicate, object, space),
            Assertion::Script(script) => {
                if let Some(existing) = self.scripts.get(&script.name) {
                    if *existing == script {
                        return Ok(false);
                    }
                    return Err(KbError::DuplicateScript(script.name));
                }
                let issues = script::validate_script(&script);
                if !issues.is_empty() {
                    return Err(KbError::InvalidScript {
                        name: script.name,
                        issues,
                    });
                }
                self.scripts.insert(script.name.clone(), script);
                Ok(true)
            }
            Assertion::HybridLink(link) => {
                if self.links.contains(&link) {
                    return Ok(false);
                }
                self.add_hybrid_link(link)?;
                Ok(true)
            }
            Assertion::Episode(episode) => {
                if let Some(existing) = self.episodes.get(&episode.id) {
                    if *existing == episode {
                        return Ok(false);
                    }
                    return Err(KbError::DuplicateEpisode(episode.id));
                }
                self.insert_episode(episode)?;
                Ok(true)
            }
            Assertion::ScriptEvent {
                script,
                observation,
            } => self.tell_script_event(&script, observation),
        }
    }

    fn tell_node(&mut self, node: Node, classes: Vec<NodeId>) -> Result<bool, KbError> {
        if let Some(existing) = self.net.node(&node.id) {
            if *existing != node {
                return Err(SemNetError::DuplicateNode(node.id).into());
            }
        } else if self.net.space(&node.space).is_none() {
            return Err(SemNetError::UnknownSpace(node.space).into());
        }
        let missing: Vec<NodeId> = classes
            .into_iter()
            .filter(|c| !self.net.has_link(&node.id, &LinkLabel::InstanceOf, c))
            .collect();
        for class in &missing {
            let target = self
                .net
                .node(class)
                .ok_or_else(|| SemNetError::UnknownNode(class.clone()))?;
            if node.kind != NodeKind::Instance || target.kind != NodeKind::GenericClass {
                return Err(SemNetError::KindMismatch {
                    from: node.id.clone(),
                    from_kind: node.kind,
                    to: class.clone(),
                    to_kind: target.kind,
                    label: LinkLabel::InstanceOf,
                }
                .into());
            }
        }
        let created = self.net.node(&node.id).is_none();
        let (id, space) = (node.id.clone(), node.space.clone());
        if created {
            self.net.add_node(node)?;
        }
        for class in &missing {
            self.net.add_link(crate::semnet::Link {
                from: id.clone(),
                to: class.clone(),
                label: LinkLabel::InstanceOf,
                space: space.clone(),
            })?;
        }
        Ok(created || !missing.is_empty())
    }

    fn tell_fact(
        &mut self,
        subject: NodeId,
        predicate: &str,
        object: NodeId,
        space: Option<SpaceId>,
    ) -> Result<bool, KbError> {
        let subject_node = self
            .net
            .node(&subject)
            .ok_or_else(|| SemNetError::UnknownNode(subject.clone()))?;
        let label = LinkLabel::from_relation(predicate)?;
        let space = space.unwrap_or_else(|| subject_node.space.clone());
        if let Some(existing) = self.net.link_space(&subject, &label, &object) {
            if *existing == space {
                return Ok(false);
            }
        }
        if self.net.space(&space).is_none() {
            return Err(SemNetError::UnknownSpace(space).into());
        }
        if self.net.node(&object).is_none() && !label.is_generalization() {
            self.net
                .add_node(Node::new(object.clone(), NodeKind::Value, space.clone()))?;
        }
        self.net.add_link(crate::semnet::Link {
            from: subject,
            to: object,
            label,
            space,
        })?;
        Ok(true)
    }

    fn tell_script_event(&mut self, script: &str, observation: Observation) -> Result<bool, KbError> {
        let template = self
            .scripts
            .get(script)
            .ok_or_else(|| KbError::UnknownScript(script.to_string()))?;
        let episode = self
            .episodes
            .values()
            .find(|e| e.script == script && e.status == EpisodeStatus::Open)
            .ok_or_else(|| KbError::NoOpenEpisode(script.to_string()))?;
        if episode.observations.contains(&observation) {
            return Ok(false);
        }
        let mut observations = episode.observations.clone();
        observations.push(observation);
        let mut updated = script::gap_fill_with(template, &observations, &episode.bindings)?;
        updated.id = episode.id.clone();
        self.episodes.insert(updated.id.clone(), updated);
        Ok(true)
    }

    fn validate_episode(&self, episode: &Episode) -> Result<(), KbError> {
        let script = self
            .scripts
            .get(&episode.script)
            .ok_or_else(|| KbError::UnknownScript(episode.script.clone()))?;
        let bad = |reason: &str| KbError::InvalidEpisode {
            id: episode.id.clone(),
            reason: reason.to_string(),
        };
        if let Some(n) = episode.scene_path.iter().find(|n| script.scene(**n).is_none()) {
            return Err(bad(&format!("unknown scene {n}")));
        }
        let refs = episode.path_refs(script);
        let mut observed = episode.observed.clone();
        observed.sort();
        observed.dedup();
        if observed.len() != episode.observed.len()
            || observed.iter().any(|r| !refs.contains(r))
        {
            return Err(bad("observed events are not on the scene path"));
        }
        let expected: Vec<EventRef> = refs.into_iter().filter(|r| !observed.contains(r)).collect();
        if expected != episode.inferred {
            return Err(bad("inferred events do not complement the observed ones"));
        }
        Ok(())
    }

    /// Stores an episode, assigning an id when it has none.
    pub fn insert_episode(&mut self, mut episode: Episode) -> Result<String, KbError> {
        if episode.id.is_empty() {
            episode.id = self.next_episode_id(&episode.script);
        } else if self.episodes.contains_key(&episode.id) {
            return Err(KbError::DuplicateEpisode(episode.id));
        }
        self.validate_episode(&episode)?;
        let id = episode.id.clone();
        self.episodes.insert(id.clone(), episode);
        Ok(id)
    }

    /// Checks entry conditions and stores a fresh open episode.
    pub fn instantiate(
        &mut self,
        script: &str,
        bindings: &BTreeMap<String, NodeId>,
    ) -> Result<String, KbError> {
        let template = self
            .scripts
            .get(script)
            .ok_or_else(|| KbError::UnknownScript(script.to_string()))?;
        let episode = script::instantiate(&self.net, template, bindings)?;
        self.insert_episode(episode)
    }

    /// Gap-fills a new episode from observations and stores it.
    pub fn gap_fill(&mut self, script: &str, observations: &[Observation]) -> Result<String, KbError> {
        let template = self
            .scripts
            .get(script)
            .ok_or_else(|| KbError::UnknownScript(script.to_string()))?;
        let episode = script::gap_fill(template, observations)?;
        self.insert_episode(episode)
    }

    /// Asserts the script results for an episode and marks it completed.
    /// All or nothing: a rejected result leaves the KB as it was.
    pub fn complete(&mut self, episode_id: &str) -> Result<Vec<TellOutcome>, KbError> {
        let episode = self
            .episodes
            .get(episode_id)
            .ok_or_else(|| KbError::UnknownEpisode(episode_id.to_string()))?;
        let template = self
            .scripts
            .get(&episode.script)
            .ok_or_else(|| KbError::UnknownScript(episode.script.clone()))?;
        let facts = script::result_facts(template, episode)?;
        let mut next = self.clone();
        let mut outcomes = Vec::new();
        for (s, p, o) in facts {
            match next.tell(Assertion::Fact {
                subject: s,
                predicate: p,
                object: o,
                space: None,
            }) {
                TellOutcome::Rejected(e) => return Err(e),
                ok => outcomes.push(ok),
            }
        }
        if let Some(e) = next.episodes.get_mut(episode_id) {
            e.status = EpisodeStatus::Completed;
        }
        *self = next;
        Ok(outcomes)
    }

    pub fn ask(&self, query: &Query, conf: &Confidence) -> Result<Answer, QueryError> {
        let malformed = |m: String| QueryError::MalformedQuery(m);
        match query {
            Query::YesNo(p) => {
                if p.wildcard_count() != 0 {
                    return Err(malformed("yes/no query cannot contain `?`".into()));
                }
                let (Term::Node(s), Term::Node(o)) = (&p.subject, &p.object) else {
                    return Err(malformed("roles are not allowed in queries".into()));
                };
                LinkLabel::from_relation(&p.predicate).map_err(|e| malformed(e.to_string()))?;
                Ok(self
                    .support(s, &p.predicate, o, conf)
                    .map_or_else(Answer::unknown, Answer::yes))
            }
            Query::Wh(p) => {
                if p.wildcard_count() != 1 {
                    return Err(malformed("wh query needs exactly one `?`".into()));
                }
                LinkLabel::from_relation(&p.predicate).map_err(|e| malformed(e.to_string()))?;
                match (&p.subject, &p.object) {
                    (Term::Node(s), Term::Wildcard) => Ok(Answer::bindings(self.objects_of(s, &p.predicate, conf))),
                    (Term::Wildcard, Term::Node(o)) => Ok(Answer::bindings(self.subjects_of(&p.predicate, o, conf))),
                    _ => Err(malformed("roles are not allowed in queries".into())),
                }
            }
            Query::RoleDetail { script, role } => {
                let template = self
                    .scripts
                    .get(script)
                    .ok_or_else(|| malformed(format!("unknown script `{script}`")))?;
                if !template.is_role(role) {
                    return Err(malformed(format!("script `{script}` has no role {role}")));
                }
                Ok(self.role_detail_answer(script, role, conf))
            }
            Query::DidHappen { script, event } => {
                if !self.scripts.contains_key(script) {
                    return Err(malformed(format!("unknown script `{script}`")));
                }
                Ok(self
                    .event_support(script, event, conf)
                    .map_or_else(Answer::unknown, |step| Answer::yes(vec![step])))
            }
        }
    }

    /// Ground events of stored episodes with their trace step.
    fn episode_events<'a>(
        &'a self,
        conf: &'a Confidence,
    ) -> impl Iterator<Item = (&'a Episode, crate::script::GroundEvent, TraceStep)> + 'a {
        self.episodes.values().flat_map(move |ep| {
            let script = self.scripts.get(&ep.script);
            let observed = ep.observed.iter().map(move |r| (*r, true));
            let inferred = ep.inferred.iter().map(move |r| (*r, false));
            let mut all: Vec<_> = observed.chain(inferred).collect();
            all.sort();
            all.into_iter().filter_map(move |(at, seen)| {
                let ground = ep.ground(script?, at)?;
                let event = ground.to_string();
                let step = if seen {
                    TraceStep {
                        kind: StepKind::Observed {
                            episode: ep.id.clone(),
                            at,
                            event,
                        },
                        confidence: 1.0,
                    }
                } else {
                    TraceStep {
                        kind: StepKind::ScriptInferred {
                            episode: ep.id.clone(),
                            at,
                            event,
                        },
                        confidence: conf.gapfill,
                    }
                };
                Some((ep, ground, step))
            })
        })
    }

    /// Best-supported trace for one ground fact, if any.
    fn support(&self, s: &NodeId, p: &str, o: &NodeId, conf: &Confidence) -> Option<Vec<TraceStep>> {
        let mut best: Option<Vec<TraceStep>> = self
            .net
            .derive_fact(s, p, o)
            .ok()
            .flatten()
            .map(|d| trace_from_derivation(self, &d, conf.decay));
        for (_, g, step) in self.episode_events(conf) {
            if g.actor == s.as_str() && g.action == p && g.object.as_deref() == Some(o.as_str()) {
                let better = best
                    .as_ref()
                    .is_none_or(|b| step.confidence > b.last().map_or(0.0, |x| x.confidence));
                if better {
                    best = Some(vec![step]);
                }
            }
        }
        best
    }

    fn merge(found: &mut BTreeMap<NodeId, Binding>, node: NodeId, trace: Vec<TraceStep>) {
        let confidence = trace.last().map_or(1.0, |s| s.confidence);
        let better = found.get(&node).is_none_or(|b| confidence > b.confidence);
        if better {
            found.insert(
                node.clone(),
                Binding {
                    node,
                    confidence,
                    trace,
                },
            );
        }
    }

    fn objects_of(&self, s: &NodeId, p: &str, conf: &Confidence) -> Vec<Binding> {
        let mut found = BTreeMap::new();
        for d in self.net.derive_values(s, p).unwrap_or_default() {
            let trace = trace_from_derivation(self, &d, conf.decay);
            Self::merge(&mut found, d.object, trace);
        }
        for (_, g, step) in self.episode_events(conf) {
            if g.actor == s.as_str() && g.action == p {
                if let Some(o) = g.object {
                    Self::merge(&mut found, NodeId::new(o), vec![step]);
                }
            }
        }
        found.into_values().collect()
    }

    fn subjects_of(&self, p: &str, o: &NodeId, conf: &Confidence) -> Vec<Binding> {
        let mut found = BTreeMap::new();
        for n in self.net.nodes() {
            if let Ok(Some(d)) = self.net.derive_fact(&n.id, p, o) {
                let trace = trace_from_derivation(self, &d, conf.decay);
                Self::merge(&mut found, n.id.clone(), trace);
            }
        }
        for (_, g, step) in self.episode_events(conf) {
            if g.action == p && g.object.as_deref() == Some(o.as_str()) {
                Self::merge(&mut found, NodeId::new(g.actor), vec![step]);
            }
        }
        found.into_values().collect()
    }

    fn role_detail_answer(&self, script: &str, role: &str, conf: &Confidence) -> Answer {
        let Ok(detail) = self.resolve_role_attributes(script, role) else {
            return Answer::unknown();
        };
        let link = TraceStep {
            kind: StepKind::RoleLink {
                script: script.to_string(),
                role: role.to_string(),
                class: detail.class.clone(),
            },
            confidence: 1.0,
        };
        let mut found = BTreeMap::new();
        for child in &detail.generalizations {
            let step = TraceStep {
                kind: StepKind::Generalization {
                    child: child.clone(),
                    class: detail.class.clone(),
                },
                confidence: 1.0,
            };
            Self::merge(&mut found, child.clone(), vec![link.clone(), step]);
        }
        for rec in detail.attributes.values() {
            if let Ok(Some(d)) = self.net.derive_fact(&detail.class, &rec.attribute, &rec.value) {
                let mut trace = vec![link.clone()];
                trace.extend(trace_from_derivation(self, &d, conf.decay));
                Self::merge(&mut found, rec.value.clone(), trace);
            }
        }
        Answer::bindings(found.into_values().collect())
    }

    fn event_support(&self, script: &str, event: &Observation, conf: &Confidence) -> Option<TraceStep> {
        let mut best: Option<TraceStep> = None;
        for (ep, g, step) in self.episode_events(conf) {
            if ep.script != script || g.action != event.action {
                continue;
            }
            let Some(template) = ep.event(&self.scripts[&ep.script], match &step.kind {
                StepKind::Observed { at, .. } | StepKind::ScriptInferred { at, .. } => *at,
                _ => continue,
            }) else {
                continue;
            };
            let actor_ok = event
                .actor
                .as_ref()
                .is_none_or(|a| *a == g.actor || *a == template.actor);
            let object_ok = event.object.as_ref().is_none_or(|o| {
                g.object.as_deref() == Some(o.as_str())
                    || template.object.as_ref().is_some_and(|t| t.text() == o)
            });
            if actor_ok && object_ok && best.as_ref().is_none_or(|b| step.confidence > b.confidence) {
                best = Some(step);
            }
        }
        best
    }
}

/// Re-checks every step of a trace against the KB and recomputes the
/// cumulative confidence. Returns `None` if a step is not supported, breaks
/// the chain, or reports a different confidence.
pub fn replay(kb: &HybridKb, trace: &[TraceStep], conf: &Confidence) -> Option<f64> {
    let mut confidence = 1.0;
    let mut current: Option<&NodeId> = None;
    for step in trace {
        match &step.kind {
            StepKind::Asserted {
                subject,
                predicate,
                object,
            } => {
                let label = LinkLabel::from_relation(predicate).ok()?;
                kb.net.has_link(subject, &label, object).then_some(())?;
                confidence = 1.0;
                current = Some(subject);
            }
            StepKind::Identity { class } => {
                (kb.net.node(class)?.kind == NodeKind::GenericClass).then_some(())?;
                confidence = 1.0;
                current = Some(class);
            }
            StepKind::Inherited { child, parent, .. } => {
                (current? == parent).then_some(())?;
                let linked = kb.net.has_link(child, &LinkLabel::IsA, parent)
                    || kb.net.has_link(child, &LinkLabel::InstanceOf, parent);
                linked.then_some(())?;
                confidence *= conf.decay;
                current = Some(child);
            }
            StepKind::Observed { episode, at, .. } => {
                kb.episode(episode)?.observed.contains(at).then_some(())?;
                confidence = 1.0;
            }
            StepKind::ScriptInferred { episode, at, .. } => {
                kb.episode(episode)?.inferred.contains(at).then_some(())?;
                confidence = conf.gapfill;
            }
            StepKind::RoleLink {
                script,
                role,
                class,
            } => {
                kb.role_classes(script, role).contains(&class).then_some(())?;
                confidence = 1.0;
            }
            StepKind::Generalization { child, class } => {
                kb.net.has_link(child, &LinkLabel::IsA, class).then_some(())?;
                confidence = 1.0;
            }
        }
        ((step.confidence - confidence).abs() < 1e-12).then_some(())?;
    }
    Some(confidence)
}
