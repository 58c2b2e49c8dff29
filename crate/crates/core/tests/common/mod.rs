//! Random generators and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use hybridkr::{
    dsl, Assertion, ElementRef, Event, EventObject, HybridKb, HybridLink, Node, NodeId, NodeKind,
    Observation, Pattern, Scene, Script, ScriptElementRef, Space, SpaceId, SpaceKind, TellOutcome,
    Term, Transition,
};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture(name: &str) -> String {
    let path = format!("{}/fixtures/{name}.kb", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

pub const FIXTURES: [&str; 5] = ["ramnavami", "lecture", "restaurant", "belief", "quantifier"];

pub fn load_fixture(name: &str) -> HybridKb {
    dsl::load(&fixture(name))
        .unwrap_or_else(|d| panic!("{name}: {d:?}"))
        .kb
}

pub const RELATIONS: [&str; 4] = ["colour", "size", "lives-in", "eats"];

/// Plain description of a generated net, kept beside the KB so the oracles
/// never read the store they are checking.
#[derive(Debug, Clone, Default)]
pub struct NetSpec {
    pub nodes: Vec<(String, NodeKind)>,
    /// Generalization edges `(child, parent)`.
    pub up: Vec<(String, String)>,
    /// Attribute edges `(source, relation, value)`.
    pub attrs: Vec<(String, String, String)>,
}

/// A random KB whose generalization graph is a DAG: classes only point to
/// classes with a lower index.
pub fn random_dag(rng: &mut impl Rng, max_nodes: usize, max_edges: usize) -> (HybridKb, NetSpec) {
    let mut kb = HybridKb::new();
    let mut spec = NetSpec::default();
    let n_classes = rng.random_range(1..=max_nodes.min(30));
    let n_inst = rng.random_range(0..=(max_nodes - n_classes).min(10));
    let n_values = (max_nodes - n_classes - n_inst).min(6);
    let class = |i: usize| format!("c{i:02}");
    for i in 0..n_classes {
        spec.nodes.push((class(i), NodeKind::GenericClass));
    }
    for i in 0..n_inst {
        spec.nodes.push((format!("i{i:02}"), NodeKind::Instance));
    }
    for i in 0..n_values {
        spec.nodes.push((format!("v{i}"), NodeKind::Value));
    }
    let mut order = spec.nodes.clone();
    order.shuffle(rng);
    for (id, kind) in &order {
        let node = Node::new(id.as_str(), *kind, SpaceId::root());
        assert_eq!(
            kb.tell(Assertion::Node { node, classes: vec![] }),
            TellOutcome::Accepted
        );
    }
    let mut edges = 0;
    while edges < max_edges && rng.random_bool(0.97) {
        let roll = rng.random_range(0..10);
        let (from, pred, to) = if roll < 4 && n_classes > 1 {
            let a = rng.random_range(1..n_classes);
            let b = rng.random_range(0..a);
            (class(a), "is-a".to_string(), class(b))
        } else if roll < 6 && n_inst > 0 {
            let a = rng.random_range(0..n_inst);
            let b = rng.random_range(0..n_classes);
            (format!("i{a:02}"), "instance".to_string(), class(b))
        } else if n_values > 0 {
            let (src, _) = spec
                .nodes
                .iter()
                .filter(|(_, k)| *k != NodeKind::Value)
                .collect::<Vec<_>>()
                .choose(rng)
                .copied()
                .unwrap()
                .clone();
            let rel = if rng.random_bool(0.15) { "has" } else { RELATIONS.choose(rng).unwrap() };
            (src, rel.to_string(), format!("v{}", rng.random_range(0..n_values)))
        } else {
            continue;
        };
        edges += 1;
        match kb.tell(Assertion::fact(&from, &pred, &to)) {
            TellOutcome::Accepted => {
                if pred == "is-a" || pred == "instance" {
                    spec.up.push((from, to));
                } else {
                    spec.attrs.push((from, pred, to));
                }
            }
            TellOutcome::Skipped => {}
            TellOutcome::Rejected(e) => panic!("generator produced a bad edge: {e}"),
        }
    }
    (kb, spec)
}

/// Shortest generalization distances by repeated relaxation over the edge
/// list, sorted by `(depth, id)`.
pub fn oracle_ancestors(spec: &NetSpec, id: &str) -> Vec<(String, usize)> {
    let mut dist: BTreeMap<&str, usize> = BTreeMap::new();
    dist.insert(id, 0);
    loop {
        let mut changed = false;
        for (c, p) in &spec.up {
            if let Some(&d) = dist.get(c.as_str()) {
                let e = dist.entry(p.as_str()).or_insert(usize::MAX);
                if d + 1 < *e {
                    *e = d + 1;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    dist.remove(id);
    let mut out: Vec<(String, usize)> = dist.into_iter().map(|(k, d)| (k.to_string(), d)).collect();
    out.sort_by(|a, b| (a.1, &a.0).cmp(&(b.1, &b.0)));
    out
}

/// `attribute -> (value, source, depth)` by enumerating every candidate and
/// taking the minimum of `(depth, source, value)`.
pub fn oracle_attributes(spec: &NetSpec, id: &str) -> BTreeMap<String, (String, String, usize)> {
    let mut levels = vec![(id.to_string(), 0)];
    levels.extend(oracle_ancestors(spec, id));
    let mut best: BTreeMap<String, (usize, String, String)> = BTreeMap::new();
    for (source, depth) in &levels {
        for (s, rel, v) in &spec.attrs {
            if s == source {
                let cand = (*depth, source.clone(), v.clone());
                let slot = best.entry(rel.clone()).or_insert_with(|| cand.clone());
                if cand < *slot {
                    *slot = cand;
                }
            }
        }
    }
    best.into_iter()
        .map(|(k, (d, s, v))| (k, (v, s, d)))
        .collect()
}

/// Identifiers that exercise quoting: spaces, quotes, reserved words and
/// the query markers.
const AWKWARD: [&str; 8] = ["a b", "class", "?", "_", "x\"y", ":kw", "back\\slash", "Upper"];

fn pick_id(rng: &mut impl Rng, prefix: &str, i: usize) -> String {
    if rng.random_bool(0.1) {
        format!("{}{i}", AWKWARD.choose(rng).unwrap())
    } else {
        format!("{prefix}{i}")
    }
}

/// A random script with at most `max_scenes` scenes, `max_events` events per
/// scene and `max_transitions` transitions in total.
pub fn random_script(
    rng: &mut impl Rng,
    name: &str,
    max_scenes: u32,
    max_events: usize,
    max_transitions: usize,
    nodes: &[String],
) -> Script {
    let roles: BTreeMap<String, String> = (0..rng.random_range(1..=3))
        .map(|i| (format!("R{i}"), format!("role number {i}")))
        .collect();
    let role_names: Vec<String> = roles.keys().cloned().collect();
    let props: Vec<String> = (0..rng.random_range(0..=2)).map(|i| format!("p{i}")).collect();
    let actions = ["go", "take", "give", "look", "pay"];
    let n_scenes = rng.random_range(1..=max_scenes);
    let mut scenes: Vec<Scene> = (1..=n_scenes)
        .map(|number| Scene {
            number,
            name: format!("scene-{number}"),
            events: (0..rng.random_range(1..=max_events))
                .map(|_| {
                    let object = match rng.random_range(0..4) {
                        0 => None,
                        1 => Some(EventObject::Role(role_names.choose(rng).unwrap().clone())),
                        2 if !props.is_empty() => Some(EventObject::Prop(props.choose(rng).unwrap().clone())),
                        _ => Some(EventObject::Literal(NodeId::new(format!("o{}", rng.random_range(0..3))))),
                    };
                    Event::new(role_names.choose(rng).unwrap(), actions.choose(rng).unwrap(), object)
                })
                .collect(),
            transitions: Vec::new(),
        })
        .collect();
    if n_scenes > 1 {
        for _ in 0..rng.random_range(0..=max_transitions) {
            let from = rng.random_range(1..=n_scenes);
            let mut target = rng.random_range(1..=n_scenes);
            if target == from {
                target = if from == n_scenes { 1 } else { from + 1 };
            }
            scenes[from as usize - 1].transitions.push(Transition {
                target,
                condition: Pattern::new(Term::Role(role_names[0].clone()), "ready", Term::Wildcard),
            });
        }
    }
    let term = |rng: &mut dyn rand::RngCore| -> Term {
        match rng.random_range(0..3) {
            0 => Term::Role(role_names.choose(rng).unwrap().clone()),
            1 if !nodes.is_empty() => Term::Node(NodeId::new(nodes.choose(rng).unwrap())),
            _ => Term::Node(NodeId::new("thing")),
        }
    };
    let entry_conditions = (0..rng.random_range(0..=1))
        .map(|_| Pattern::new(term(rng), "owns", if rng.random_bool(0.5) { Term::Wildcard } else { term(rng) }))
        .collect();
    let results = (0..rng.random_range(0..=1))
        .map(|_| Pattern::new(Term::Role(role_names[0].clone()), "did", term(rng)))
        .collect();
    Script {
        name: name.to_string(),
        track: if rng.random_bool(0.5) { "a track".into() } else { String::new() },
        props,
        roles,
        entry_conditions,
        results,
        scenes,
    }
}

/// Events along a random walk from scene 1 that ends at the last scene, or
/// `None` if the walk got lost.
pub fn random_walk(rng: &mut impl Rng, script: &Script, max_len: usize) -> Option<Vec<u32>> {
    let last = script.last_scene()?;
    let mut path = vec![1];
    while *path.last().unwrap() != last || (path.len() < max_len && rng.random_bool(0.2)) {
        if path.len() >= max_len {
            return None;
        }
        let next = script.successors(*path.last().unwrap());
        path.push(*next.choose(rng)?);
    }
    (*path.last().unwrap() == last).then_some(path)
}

/// A random subsequence of the events along `path`, as observations that name
/// the script's own symbols or leave positions open. Each observation fits
/// the event it was taken from whatever else got bound, so the leftmost
/// embedding along `path` always exists.
pub fn observe_subsequence(rng: &mut impl Rng, script: &Script, path: &[u32]) -> Vec<Observation> {
    let mut obs = Vec::new();
    for n in path {
        for e in &script.scene(*n).unwrap().events {
            if rng.random_bool(0.4) {
                let actor = rng.random_bool(0.5).then(|| e.actor.clone());
                let object = e
                    .object
                    .as_ref()
                    .filter(|_| rng.random_bool(0.5))
                    .map(|o| o.text().to_string());
                obs.push(Observation {
                    actor,
                    action: e.action.clone(),
                    object,
                });
            }
        }
    }
    if obs.is_empty() {
        let e = &script.scene(path[0]).unwrap().events[0];
        obs.push(Observation::action(&e.action));
    }
    obs
}

/// Whether one observation fits an event. A position naming the event's own
/// symbol always fits; any other value must agree with, or else becomes, the
/// symbol's binding. Literal objects compare as text.
fn fits(o: &Observation, e: &Event, bound: &mut BTreeMap<String, String>) -> bool {
    if o.action != e.action {
        return false;
    }
    let mut trial = bound.clone();
    let bind = |symbol: &str, value: &str, trial: &mut BTreeMap<String, String>| {
        symbol == value || trial.entry(symbol.to_string()).or_insert_with(|| value.to_string()) == value
    };
    if let Some(a) = &o.actor {
        if !bind(&e.actor, a, &mut trial) {
            return false;
        }
    }
    if let Some(x) = &o.object {
        let ok = match &e.object {
            None => false,
            Some(EventObject::Literal(n)) => n.as_str() == x,
            Some(other) => bind(other.text(), x, &mut trial),
        };
        if !ok {
            return false;
        }
    }
    *bound = trial;
    true
}

/// Scene path and `(step, index)` of each observed event.
pub type OracleFill = (Vec<u32>, Vec<(usize, usize)>);

/// Exhaustive gap-fill oracle: every
/// scene path from 1 to the last scene with event cost up to `budget` is
/// enumerated, and the cheapest one embedding the observations wins, ties
/// going to the smaller scene sequence. Returns the path and the indices of
/// the observed events along it.
pub fn oracle_gap_fill(
    script: &Script,
    observations: &[Observation],
    budget: usize,
) -> Option<OracleFill> {
    let last = script.last_scene()?;
    let cost = |n: u32| script.scene(n).unwrap().events.len();
    let mut best: Option<(usize, Vec<u32>)> = None;
    let mut stack = vec![(vec![1u32], cost(1))];
    while let Some((path, c)) = stack.pop() {
        let tail = *path.last().unwrap();
        if tail == last && embeds(script, &path, observations).is_some() {
            let cand = (c, path.clone());
            if best.as_ref().is_none_or(|b| cand < *b) {
                best = Some(cand);
            }
        }
        let mut nexts: Vec<u32> = Vec::new();
        if script.scene(tail + 1).is_some() {
            nexts.push(tail + 1);
        }
        for t in &script.scene(tail).unwrap().transitions {
            nexts.push(t.target);
        }
        for n in nexts {
            if c + cost(n) <= budget {
                let mut p = path.clone();
                p.push(n);
                stack.push((p, c + cost(n)));
            }
        }
    }
    let (_, path) = best?;
    let refs = embeds(script, &path, observations)?;
    Some((path, refs))
}

/// Leftmost embedding of the observations into the events along `path`.
fn embeds(script: &Script, path: &[u32], observations: &[Observation]) -> Option<Vec<(usize, usize)>> {
    let mut refs = Vec::new();
    let mut k = 0;
    let mut bound = BTreeMap::new();
    for (step, n) in path.iter().enumerate() {
        for (i, e) in script.scene(*n).unwrap().events.iter().enumerate() {
            if k < observations.len() && fits(&observations[k], e, &mut bound) {
                refs.push((step, i));
                k += 1;
            }
        }
    }
    (k == observations.len()).then_some(refs)
}

/// A random knowledge base using every construct the language has, built
/// through `tell` so it is valid by construction.
pub fn random_kb(rng: &mut impl Rng) -> HybridKb {
    let mut kb = HybridKb::new();
    let mut spaces = vec![SpaceId::root()];
    let mut pending_vars = Vec::new();
    for i in 0..rng.random_range(0..4) {
        let id = pick_id(rng, "sp", i);
        let parent = spaces.choose(rng).unwrap().clone();
        let general = rng.random_bool(0.3);
        let var = format!("var{i}");
        let space = Space {
            id: SpaceId::new(&id),
            parent: Some(parent),
            kind: if general { SpaceKind::GeneralStatement } else { SpaceKind::Ordinary },
            agent: None,
            vars: if general { vec![NodeId::new(&var)] } else { vec![] },
        };
        if kb.tell(Assertion::Space(space)) == TellOutcome::Accepted {
            if general {
                pending_vars.push((var, SpaceId::new(&id)));
            }
            spaces.push(SpaceId::new(id));
        }
    }

    let mut classes = Vec::new();
    let mut others = Vec::new();
    for i in 0..rng.random_range(1..8) {
        let id = pick_id(rng, "c", i);
        let mut node = Node::new(id.as_str(), NodeKind::GenericClass, spaces.choose(rng).unwrap().clone());
        if rng.random_bool(0.3) {
            node.label = format!("Class {i} \"label\"");
        }
        if kb.tell(Assertion::Node { node, classes: vec![] }) == TellOutcome::Accepted {
            classes.push(id);
        }
    }
    for (var, space) in &pending_vars {
        let node = Node::new(var.as_str(), NodeKind::Instance, space.clone());
        kb.tell(Assertion::Node { node, classes: vec![] });
        others.push(var.clone());
    }
    for i in 0..rng.random_range(0..8) {
        let id = pick_id(rng, "n", i);
        let kind = if rng.random_bool(0.7) { NodeKind::Instance } else { NodeKind::Value };
        let node = Node::new(id.as_str(), kind, spaces.choose(rng).unwrap().clone());
        let cs = if kind == NodeKind::Instance {
            let k = rng.random_range(0..=2);
            classes.choose_multiple(rng, k).cloned().map(NodeId::new).collect()
        } else {
            vec![]
        };
        if kb.tell(Assertion::Node { node, classes: cs }) == TellOutcome::Accepted {
            others.push(id);
        }
    }
    let all: Vec<String> = classes.iter().chain(&others).cloned().collect();
    for _ in 0..rng.random_range(0..15) {
        let space = rng.random_bool(0.2).then(|| spaces.choose(rng).unwrap().clone());
        let (s, p, o) = match rng.random_range(0..4) {
            0 => (classes.choose(rng).unwrap().clone(), "is-a".to_string(), classes.choose(rng).unwrap().clone()),
            1 => (all.choose(rng).unwrap().clone(), "instance".to_string(), classes.choose(rng).unwrap().clone()),
            2 => (all.choose(rng).unwrap().clone(), RELATIONS.choose(rng).unwrap().to_string(), all.choose(rng).unwrap().clone()),
            _ => (
                all.choose(rng).unwrap().clone(),
                if rng.random_bool(0.5) { "has".into() } else { "size".into() },
                format!("fresh value {}", rng.random_range(0..5)),
            ),
        };
        // Rejections (cycles, kind mismatches) are simply not part of the KB.
        kb.tell(Assertion::Fact {
            subject: NodeId::new(s),
            predicate: p,
            object: NodeId::new(o),
            space,
        });
    }

    for si in 0..rng.random_range(0..3) {
        let name = pick_id(rng, "script", si);
        let mut script = random_script(rng, &name, 4, 3, 2, &all);
        if rng.random_bool(0.3) {
            // A literal spelled like a role must stay a literal.
            let role = script.roles.keys().next().unwrap().clone();
            script.scenes[0].events[0].object = Some(EventObject::Literal(NodeId::new(role)));
        }
        if kb.tell(Assertion::Script(script.clone())) != TellOutcome::Accepted {
            continue;
        }
        for role in script.roles.keys() {
            if rng.random_bool(0.5) {
                let link = HybridLink {
                    from: ScriptElementRef::role(&name, role),
                    to: NodeId::new(classes.choose(rng).unwrap()),
                };
                kb.tell(Assertion::HybridLink(link));
            }
        }
        for p in &script.props {
            if let Some(target) = all.choose(rng) {
                kb.tell(Assertion::HybridLink(HybridLink::new(ScriptElementRef::prop(&name, p), target)));
            }
        }
        if script.scenes[0].events[0].object.is_some() && rng.random_bool(0.5) {
            let link = HybridLink {
                from: ScriptElementRef {
                    script: name.clone(),
                    element: ElementRef::EventObject { scene: 1, index: 0 },
                },
                to: NodeId::new(all.choose(rng).unwrap()),
            };
            kb.tell(Assertion::HybridLink(link));
        }
        for _ in 0..rng.random_range(0..3) {
            let Some(path) = random_walk(rng, &script, 6) else { continue };
            let mut obs = observe_subsequence(rng, &script, &path);
            if rng.random_bool(0.3) {
                // Bind a role to a concrete node.
                obs[0].actor = Some(pick_id(rng, "actor", 0));
            }
            if let Ok(id) = kb.gap_fill(&name, &obs) {
                if rng.random_bool(0.3) {
                    let _ = kb.complete(&id);
                }
            }
        }
    }
    kb
}
