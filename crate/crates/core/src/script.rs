//! Scripts: stereotyped event sequences split into numbered scenes.
//!
//! A script is a template. [`instantiate`] binds its roles against the
//! network after checking the entry conditions, [`gap_fill`] aligns a partial
//! list of observations with the cheapest scene path and infers the events
//! that were left out, and [`result_facts`] yields the facts a finished
//! episode asserts.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt;

use thiserror::Error;

use crate::semnet::{NodeId, SemNet};

/// A pattern position: a role of the owning script, a concrete node, or `?`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Role(String),
    Node(NodeId),
    Wildcard,
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Role(r) => f.write_str(r),
            Term::Node(n) => write!(f, "{n}"),
            Term::Wildcard => f.write_str("?"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pattern {
    pub subject: Term,
    pub predicate: String,
    pub object: Term,
}

impl Pattern {
    pub fn new(subject: Term, predicate: &str, object: Term) -> Self {
        Pattern {
            subject,
            predicate: predicate.to_string(),
            object,
        }
    }

    pub fn wildcard_count(&self) -> usize {
        [&self.subject, &self.object]
            .iter()
            .filter(|t| ***t == Term::Wildcard)
            .count()
    }

    fn roles(&self) -> impl Iterator<Item = &str> {
        [&self.subject, &self.object].into_iter().filter_map(|t| match t {
            Term::Role(r) => Some(r.as_str()),
            _ => None,
        })
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} {} {})", self.subject, self.predicate, self.object)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventObject {
    Role(String),
    Prop(String),
    Literal(NodeId),
}

impl EventObject {
    fn symbol(&self) -> Option<&str> {
        match self {
            EventObject::Role(s) | EventObject::Prop(s) => Some(s),
            EventObject::Literal(_) => None,
        }
    }

    pub fn text(&self) -> &str {
        match self {
            EventObject::Role(s) | EventObject::Prop(s) => s,
            EventObject::Literal(n) => n.as_str(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Event {
    /// Role symbol of the actor.
    pub actor: String,
    pub action: String,
    pub object: Option<EventObject>,
}

impl Event {
    pub fn new(actor: &str, action: &str, object: Option<EventObject>) -> Self {
        Event {
            actor: actor.to_string(),
            action: action.to_string(),
            object,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub target: u32,
    pub condition: Pattern,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scene {
    pub number: u32,
    pub name: String,
    pub events: Vec<Event>,
    pub transitions: Vec<Transition>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Script {
    pub name: String,
    pub track: String,
    pub props: Vec<String>,
    /// Role symbol to role description.
    pub roles: BTreeMap<String, String>,
    pub entry_conditions: Vec<Pattern>,
    pub results: Vec<Pattern>,
    pub scenes: Vec<Scene>,
}

impl Script {
    pub fn scene(&self, number: u32) -> Option<&Scene> {
        self.scenes.iter().find(|s| s.number == number)
    }

    pub fn last_scene(&self) -> Option<u32> {
        self.scenes.iter().map(|s| s.number).max()
    }

    /// Successor scenes: the default `n + 1` (when it exists) followed by the
    /// transition targets in declaration order.
    pub fn successors(&self, number: u32) -> Vec<u32> {
        let mut next = Vec::new();
        if self.scene(number + 1).is_some() {
            next.push(number + 1);
        }
        if let Some(scene) = self.scene(number) {
            for t in &scene.transitions {
                if !next.contains(&t.target) && self.scene(t.target).is_some() {
                    next.push(t.target);
                }
            }
        }
        next
    }

    pub fn is_role(&self, symbol: &str) -> bool {
        self.roles.contains_key(symbol)
    }

    pub fn is_prop(&self, name: &str) -> bool {
        self.props.iter().any(|p| p == name)
    }
}

/// A violation of the structural rules for scripts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScriptIssue {
    UndeclaredRole(String),
    UnknownScene(u32),
    DuplicateScene(u32),
    NonContiguousScenes,
    EmptyScene(u32),
    SelfTransition(u32),
    WildcardInResult(Pattern),
    NoScenes,
}

impl fmt::Display for ScriptIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScriptIssue::UndeclaredRole(r) => write!(f, "undeclared role {r}"),
            ScriptIssue::UnknownScene(n) => write!(f, "unknown scene {n}"),
            ScriptIssue::DuplicateScene(n) => write!(f, "duplicate scene {n}"),
            ScriptIssue::NonContiguousScenes => {
                f.write_str("scene numbers must run contiguously from 1")
            }
            ScriptIssue::EmptyScene(n) => write!(f, "scene {n} has no events"),
            ScriptIssue::SelfTransition(n) => write!(f, "scene {n} transitions to itself"),
            ScriptIssue::WildcardInResult(p) => write!(f, "result {p} contains a wildcard"),
            ScriptIssue::NoScenes => f.write_str("script has no scenes"),
        }
    }
}

/// Reports every structural violation; an empty list means the script is valid.
pub fn validate_script(script: &Script) -> Vec<ScriptIssue> {
    let mut issues = Vec::new();
    let mut undeclared = BTreeSet::new();
    let mut check_role = |r: &str, issues: &mut Vec<ScriptIssue>| {
        if !script.is_role(r) && undeclared.insert(r.to_string()) {
            issues.push(ScriptIssue::UndeclaredRole(r.to_string()));
        }
    };

    if script.scenes.is_empty() {
        issues.push(ScriptIssue::NoScenes);
    }
    let mut numbers = BTreeSet::new();
    for scene in &script.scenes {
        if !numbers.insert(scene.number) {
            issues.push(ScriptIssue::DuplicateScene(scene.number));
        }
    }
    if !numbers.is_empty() && numbers.iter().copied().ne(1..=numbers.len() as u32) {
        issues.push(ScriptIssue::NonContiguousScenes);
    }

    for p in script.entry_conditions.iter().chain(&script.results) {
        for r in p.roles() {
            check_role(r, &mut issues);
        }
    }
    for p in &script.results {
        if p.wildcard_count() > 0 {
            issues.push(ScriptIssue::WildcardInResult(p.clone()));
        }
    }
    for scene in &script.scenes {
        if scene.events.is_empty() {
            issues.push(ScriptIssue::EmptyScene(scene.number));
        }
        for e in &scene.events {
            check_role(&e.actor, &mut issues);
            if let Some(EventObject::Role(r)) = &e.object {
                check_role(r, &mut issues);
            }
        }
        for t in &scene.transitions {
            if t.target == scene.number {
                issues.push(ScriptIssue::SelfTransition(t.target));
            } else if !numbers.contains(&t.target) {
                issues.push(ScriptIssue::UnknownScene(t.target));
            }
            for r in t.condition.roles() {
                check_role(r, &mut issues);
            }
        }
    }
    issues
}

/// One observed happening, as reported. Actor and object may be omitted;
/// either may name a role symbol or a concrete node.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Observation {
    pub actor: Option<String>,
    pub action: String,
    pub object: Option<String>,
}

impl Observation {
    pub fn new(actor: Option<&str>, action: &str, object: Option<&str>) -> Self {
        Observation {
            actor: actor.map(str::to_string),
            action: action.to_string(),
            object: object.map(str::to_string),
        }
    }

    pub fn action(action: &str) -> Self {
        Observation::new(None, action, None)
    }
}

impl fmt::Display for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}",
            self.actor.as_deref().unwrap_or("_"),
            self.action
        )?;
        if let Some(o) = &self.object {
            write!(f, " {o}")?;
        }
        Ok(())
    }
}

/// Position of an event along an episode's scene path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventRef {
    /// Index into `scene_path`.
    pub step: usize,
    /// Index into that scene's event list.
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EpisodeStatus {
    Open,
    Completed,
}

/// An event with role and prop symbols replaced by their bindings where known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundEvent {
    pub scene: u32,
    pub actor: String,
    pub action: String,
    pub object: Option<String>,
}

impl fmt::Display for GroundEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.actor, self.action)?;
        if let Some(o) = &self.object {
            write!(f, " {o}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Episode {
    /// Assigned when the episode is stored in a knowledge base.
    pub id: String,
    pub script: String,
    /// Role and prop symbols to the nodes they stand for.
    pub bindings: BTreeMap<String, NodeId>,
    pub observations: Vec<Observation>,
    pub scene_path: Vec<u32>,
    pub observed: Vec<EventRef>,
    pub inferred: Vec<EventRef>,
    pub status: EpisodeStatus,
}

impl Episode {
    pub fn new(script: &str, bindings: BTreeMap<String, NodeId>) -> Self {
        Episode {
            id: String::new(),
            script: script.to_string(),
            bindings,
            observations: Vec::new(),
            scene_path: Vec::new(),
            observed: Vec::new(),
            inferred: Vec::new(),
            status: EpisodeStatus::Open,
        }
    }

    /// All events along the scene path, in order.
    pub fn path_refs(&self, script: &Script) -> Vec<EventRef> {
        let mut refs = Vec::new();
        for (step, n) in self.scene_path.iter().enumerate() {
            let len = script.scene(*n).map_or(0, |s| s.events.len());
            refs.extend((0..len).map(|index| EventRef { step, index }));
        }
        refs
    }

    pub fn event<'s>(&self, script: &'s Script, at: EventRef) -> Option<&'s Event> {
        let n = *self.scene_path.get(at.step)?;
        script.scene(n)?.events.get(at.index)
    }

    pub fn ground(&self, script: &Script, at: EventRef) -> Option<GroundEvent> {
        let e = self.event(script, at)?;
        let subst = |s: &str| {
            self.bindings
                .get(s)
                .map_or_else(|| s.to_string(), |n| n.as_str().to_string())
        };
        Some(GroundEvent {
            scene: self.scene_path[at.step],
            actor: subst(&e.actor),
            action: e.action.clone(),
            object: e.object.as_ref().map(|o| match o {
                EventObject::Literal(n) => n.as_str().to_string(),
                other => subst(other.text()),
            }),
        })
    }

    /// Sets `inferred` to the path events not in `observed`.
    fn infer_rest(&mut self, script: &Script) {
        let observed: BTreeSet<EventRef> = self.observed.iter().copied().collect();
        self.inferred = self
            .path_refs(script)
            .into_iter()
            .filter(|r| !observed.contains(r))
            .collect();
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScriptError {
    #[error("role {0} is not bound")]
    UnboundRole(String),
    #[error("bound node `{0}` does not exist")]
    UnknownNode(NodeId),
    #[error("entry condition {0} does not hold")]
    EntryConditionFailed(Pattern),
    #[error("no observations given")]
    EmptyObservation,
    #[error("observed events cannot be ordered along any scene path")]
    NoAlignment,
    #[error("episode is already completed")]
    AlreadyCompleted,
    #[error("episode has no scene path yet")]
    EmptyPath,
    #[error("script is invalid: {0}")]
    Invalid(String),
}

fn substitute(term: &Term, bindings: &BTreeMap<String, NodeId>) -> Result<Option<NodeId>, ScriptError> {
    match term {
        Term::Role(r) => bindings
            .get(r)
            .cloned()
            .map(Some)
            .ok_or_else(|| ScriptError::UnboundRole(r.clone())),
        Term::Node(n) => Ok(Some(n.clone())),
        Term::Wildcard => Ok(None),
    }
}

/// Whether `pattern` holds in the network after role substitution, by direct
/// assertion or by inheritance.
pub fn pattern_holds(
    net: &SemNet,
    pattern: &Pattern,
    bindings: &BTreeMap<String, NodeId>,
) -> Result<bool, ScriptError> {
    let subject = substitute(&pattern.subject, bindings)?;
    let object = substitute(&pattern.object, bindings)?;
    let Some(subject) = subject else {
        // Wildcard subject: any node satisfying the rest.
        return Ok(net.nodes().any(|n| {
            let p = Pattern::new(Term::Node(n.id.clone()), &pattern.predicate, pattern.object.clone());
            pattern_holds(net, &p, bindings).unwrap_or(false)
        }));
    };
    let values = match net.derive_values(&subject, &pattern.predicate) {
        Ok(v) => v,
        Err(_) => return Ok(false),
    };
    Ok(match object {
        None => !values.is_empty(),
        Some(o) => values.iter().any(|d| d.object == o),
    })
}

/// Binds a script to concrete nodes. Pure: the network is only read.
pub fn instantiate(
    net: &SemNet,
    script: &Script,
    bindings: &BTreeMap<String, NodeId>,
) -> Result<Episode, ScriptError> {
    let issues = validate_script(script);
    if let Some(first) = issues.first() {
        return Err(ScriptError::Invalid(first.to_string()));
    }
    for role in script.roles.keys() {
        let node = bindings
            .get(role)
            .ok_or_else(|| ScriptError::UnboundRole(role.clone()))?;
        if net.node(node).is_none() {
            return Err(ScriptError::UnknownNode(node.clone()));
        }
    }
    for cond in &script.entry_conditions {
        if !pattern_holds(net, cond, bindings)? {
            return Err(ScriptError::EntryConditionFailed(cond.clone()));
        }
    }
    Ok(Episode::new(&script.name, bindings.clone()))
}

/// The facts asserted by completing `episode`, in result declaration order.
pub fn result_facts(
    script: &Script,
    episode: &Episode,
) -> Result<Vec<(NodeId, String, NodeId)>, ScriptError> {
    if episode.status == EpisodeStatus::Completed {
        return Err(ScriptError::AlreadyCompleted);
    }
    if episode.scene_path.is_empty() {
        return Err(ScriptError::EmptyPath);
    }
    script
        .results
        .iter()
        .map(|p| {
            let s = substitute(&p.subject, &episode.bindings)?;
            let o = substitute(&p.object, &episode.bindings)?;
            match (s, o) {
                (Some(s), Some(o)) => Ok((s, p.predicate.clone(), o)),
                _ => Err(ScriptError::Invalid(format!("result {p} contains a wildcard"))),
            }
        })
        .collect()
}

/// Unifies `value` with a script symbol under `bindings`. A value equal to
/// the symbol itself matches without binding.
fn unify(symbol: &str, value: &str, bindings: &mut BTreeMap<String, NodeId>) -> bool {
    if symbol == value {
        return true;
    }
    match bindings.get(symbol) {
        Some(bound) => bound.as_str() == value,
        None => {
            bindings.insert(symbol.to_string(), NodeId::new(value));
            true
        }
    }
}

/// Matches one observation against a script event, extending `bindings` on
/// success and leaving them untouched on failure.
pub fn matches_event(
    obs: &Observation,
    event: &Event,
    bindings: &mut BTreeMap<String, NodeId>,
) -> bool {
    if obs.action != event.action {
        return false;
    }
    let mut trial = bindings.clone();
    if let Some(actor) = &obs.actor {
        if !unify(&event.actor, actor, &mut trial) {
            return false;
        }
    }
    if let Some(object) = &obs.object {
        let ok = match &event.object {
            None => false,
            Some(EventObject::Literal(n)) => n.as_str() == object,
            Some(o) => unify(o.symbol().unwrap_or_default(), object, &mut trial),
        };
        if !ok {
            return false;
        }
    }
    *bindings = trial;
    true
}

/// Greedy left-to-right alignment of observations against one scene's events,
/// starting at `matched`. Returns the new match count and the event indices used.
fn advance(
    scene: &Scene,
    observations: &[Observation],
    mut matched: usize,
    bindings: &mut BTreeMap<String, NodeId>,
) -> (usize, Vec<usize>) {
    let mut used = Vec::new();
    for (i, e) in scene.events.iter().enumerate() {
        if matched < observations.len() && matches_event(&observations[matched], e, bindings) {
            matched += 1;
            used.push(i);
        }
    }
    (matched, used)
}

pub fn gap_fill(script: &Script, observations: &[Observation]) -> Result<Episode, ScriptError> {
    gap_fill_with(script, observations, &BTreeMap::new())
}

/// Finds the cheapest scene path from scene 1 to the last scene along which
/// the observations appear in order, and infers every other event on it.
///
/// Path cost is the number of events traversed; ties go to the
/// lexicographically smallest sequence of scene numbers.
pub fn gap_fill_with(
    script: &Script,
    observations: &[Observation],
    initial: &BTreeMap<String, NodeId>,
) -> Result<Episode, ScriptError> {
    if observations.is_empty() {
        return Err(ScriptError::EmptyObservation);
    }
    if let Some(first) = validate_script(script).first() {
        return Err(ScriptError::Invalid(first.to_string()));
    }
    let last = script.last_scene().ok_or(ScriptError::NoAlignment)?;
    let cost_of = |n: u32| script.scene(n).map_or(0, |s| s.events.len());

    type State = (u32, usize, BTreeMap<String, NodeId>);
    type Entry = (usize, Vec<u32>, usize, BTreeMap<String, NodeId>);
    let mut heap: BinaryHeap<Reverse<Entry>> = BinaryHeap::new();
    let mut done: BTreeSet<State> = BTreeSet::new();

    let first = script.scene(1).ok_or(ScriptError::NoAlignment)?;
    let mut b = initial.clone();
    let (k, _) = advance(first, observations, 0, &mut b);
    heap.push(Reverse((cost_of(1), vec![1], k, b)));

    let path = loop {
        let Some(Reverse((cost, path, k, bindings))) = heap.pop() else {
            return Err(ScriptError::NoAlignment);
        };
        let scene = *path.last().expect("paths are never empty");
        if scene == last && k == observations.len() {
            break path;
        }
        if !done.insert((scene, k, bindings.clone())) {
            continue;
        }
        for next in script.successors(scene) {
            let mut b = bindings.clone();
            let (k2, _) = advance(script.scene(next).unwrap(), observations, k, &mut b);
            if done.contains(&(next, k2, b.clone())) {
                continue;
            }
            let mut p = path.clone();
            p.push(next);
            heap.push(Reverse((cost + cost_of(next), p, k2, b)));
        }
    };

    let mut episode = Episode::new(&script.name, initial.clone());
    episode.observations = observations.to_vec();
    let mut matched = 0;
    for (step, n) in path.iter().enumerate() {
        let (k, used) = advance(script.scene(*n).unwrap(), observations, matched, &mut episode.bindings);
        matched = k;
        episode
            .observed
            .extend(used.into_iter().map(|index| EventRef { step, index }));
    }
    episode.scene_path = path;
    episode.infer_rest(script);
    Ok(episode)
}
