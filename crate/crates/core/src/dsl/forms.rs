//! Conversion from s-expressions to typed forms and queries.

use std::collections::{BTreeMap, BTreeSet};

use super::reader::Sexp;
use super::{Diagnostic, Form, Span};
use crate::hybrid::{ElementRef, HybridLink, ScriptElementRef};
use crate::kbsl::{Assertion, Query};
use crate::script::{
    Episode, EpisodeStatus, Event, EventObject, EventRef, Observation, Pattern, Scene, Script,
    Term, Transition,
};
use crate::semnet::{
    is_relation_name, Node, NodeId, NodeKind, Space, SpaceId, SpaceKind, RESERVED_RELATIONS,
    ROOT_SPACE,
};

/// Heads and sub-heads; none of them may be used as an identifier.
pub const RESERVED_WORDS: [&str; 28] = [
    "space", "class", "instance", "value", "isa", "has", "rel", "attr", "script", "track",
    "props", "role", "entry", "result", "scene", "event", "goto", "link", "episode", "bind",
    "observe", "path", "observed", "inferred", "occurred", "prop", "yesno", "wh",
];

type Diags = Vec<Diagnostic>;

fn err(message: impl Into<String>, at: Span) -> Diags {
    vec![Diagnostic::error(message, at)]
}

/// Positional arguments plus `:keyword value` options.
struct Args<'a> {
    head: &'a str,
    span: Span,
    positional: Vec<&'a Sexp>,
    options: BTreeMap<&'a str, &'a Sexp>,
}

impl<'a> Args<'a> {
    fn split(head: &'a str, span: Span, items: &'a [Sexp], allowed: &[&str]) -> Result<Self, Diags> {
        let mut positional = Vec::new();
        let mut options = BTreeMap::new();
        let mut it = items.iter();
        while let Some(item) = it.next() {
            match item.symbol() {
                Some(k) if k.starts_with(':') && k.len() > 1 => {
                    let key = &k[1..];
                    if !allowed.contains(&key) {
                        return Err(err(format!("`{head}` does not accept option `{k}`"), item.span));
                    }
                    let Some(value) = it.next() else {
                        return Err(err(format!("option `{k}` needs a value"), item.span));
                    };
                    if options.insert(key, value).is_some() {
                        return Err(err(format!("option `{k}` given twice"), item.span));
                    }
                }
                _ => positional.push(item),
            }
        }
        Ok(Args {
            head,
            span,
            positional,
            options,
        })
    }

    fn arity(&self, min: usize, max: Option<usize>) -> Result<(), Diags> {
        let n = self.positional.len();
        if n < min || max.is_some_and(|m| n > m) {
            let expected = match max {
                Some(m) if m == min => format!("{min}"),
                Some(m) => format!("{min} to {m}"),
                None => format!("at least {min}"),
            };
            return Err(err(
                format!("`{}` expects {expected} arguments, got {n}", self.head),
                self.span,
            ));
        }
        Ok(())
    }

    fn option_text(&self, key: &str) -> Result<Option<String>, Diags> {
        self.options
            .get(key)
            .map(|s| text(s).map(str::to_string))
            .transpose()
    }

    fn space(&self) -> Result<Option<SpaceId>, Diags> {
        self.options
            .get("space")
            .map(|s| ident(s).map(SpaceId::new))
            .transpose()
    }
}

fn text(s: &Sexp) -> Result<&str, Diags> {
    s.text().ok_or_else(|| err("expected a symbol or string, found a list", s.span))
}

/// An identifier: any symbol or string except reserved words and the
/// `?`/`_` markers.
fn ident(s: &Sexp) -> Result<&str, Diags> {
    let t = text(s)?;
    if t.is_empty() {
        return Err(err("empty identifier", s.span));
    }
    if !s.is_string() {
        if RESERVED_WORDS.contains(&t) {
            return Err(err(format!("reserved word `{t}` cannot be used as an identifier"), s.span));
        }
        if t == "?" || t == "_" || t.starts_with(':') {
            return Err(err(format!("`{t}` cannot be used as an identifier"), s.span));
        }
    }
    Ok(t)
}

fn relation(s: &Sexp) -> Result<&str, Diags> {
    let t = text(s)?;
    if !is_relation_name(t) {
        return Err(err(format!("invalid relation name `{t}` (expected lowercase kebab-case)"), s.span));
    }
    Ok(t)
}

fn number<T: std::str::FromStr>(s: &Sexp) -> Result<T, Diags> {
    s.symbol()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| err("expected a non-negative integer", s.span))
}

fn list(s: &Sexp) -> Result<&[Sexp], Diags> {
    s.list().ok_or_else(|| err("expected a list", s.span))
}

fn sub_head(s: &Sexp) -> Result<(&str, &[Sexp]), Diags> {
    let items = list(s)?;
    let head = items
        .first()
        .and_then(Sexp::symbol)
        .ok_or_else(|| err("expected a form with a head symbol", s.span))?;
    Ok((head, &items[1..]))
}

pub fn convert(s: &Sexp) -> Result<Form, Diags> {
    let (head, rest) = sub_head(s)?;
    let assertion = match head {
        "space" => space(Args::split(head, s.span, rest, &["parent", "kind", "agent", "vars"])?)?,
        "class" | "instance" | "value" => node(head, Args::split(head, s.span, rest, &["label", "space"])?)?,
        "isa" | "has" | "rel" | "attr" => fact(head, Args::split(head, s.span, rest, &["space"])?)?,
        "script" => Assertion::Script(script(s.span, rest)?),
        "link" => link(Args::split(head, s.span, rest, &[])?)?,
        "episode" => episode(Args::split(head, s.span, rest, &["status"])?)?,
        "occurred" => {
            let args = Args::split(head, s.span, rest, &[])?;
            args.arity(3, Some(4))?;
            Assertion::ScriptEvent {
                script: ident(args.positional[0])?.to_string(),
                observation: observation_parts(&args.positional[1..])?,
            }
        }
        other => {
            let msg = if RESERVED_WORDS.contains(&other) {
                format!("`{other}` is only valid inside another form")
            } else {
                format!("unknown form `{other}`")
            };
            return Err(err(msg, s.span));
        }
    };
    Ok(Form {
        head: head.to_string(),
        assertion,
        span: s.span,
    })
}

fn space(args: Args) -> Result<Assertion, Diags> {
    args.arity(1, Some(1))?;
    let id = ident(args.positional[0])?;
    let kind = match args.option_text("kind")?.as_deref() {
        None | Some("ordinary") => SpaceKind::Ordinary,
        Some("general") => SpaceKind::GeneralStatement,
        Some(k) => return Err(err(format!("unknown space kind `{k}`"), args.span)),
    };
    let parent = match args.options.get("parent") {
        Some(p) => Some(SpaceId::new(ident(p)?)),
        None if id == ROOT_SPACE => None,
        None => Some(SpaceId::root()),
    };
    let vars = match args.options.get("vars") {
        Some(v) => list(v)?
            .iter()
            .map(|x| ident(x).map(NodeId::new))
            .collect::<Result<_, _>>()?,
        None => Vec::new(),
    };
    Ok(Assertion::Space(Space {
        id: SpaceId::new(id),
        parent,
        kind,
        agent: args.options.get("agent").map(|a| ident(a).map(NodeId::new)).transpose()?,
        vars,
    }))
}

fn node(head: &str, args: Args) -> Result<Assertion, Diags> {
    let (kind, max) = match head {
        "class" => (NodeKind::GenericClass, Some(1)),
        "value" => (NodeKind::Value, Some(1)),
        _ => (NodeKind::Instance, None),
    };
    args.arity(1, max)?;
    let id = ident(args.positional[0])?;
    let mut n = Node::new(id, kind, args.space()?.unwrap_or_else(SpaceId::root));
    if let Some(label) = args.option_text("label")? {
        n.label = label;
    }
    let classes = args.positional[1..]
        .iter()
        .map(|c| ident(c).map(NodeId::new))
        .collect::<Result<_, _>>()?;
    Ok(Assertion::Node { node: n, classes })
}

fn fact(head: &str, args: Args) -> Result<Assertion, Diags> {
    let (subject, predicate, object) = match head {
        "isa" | "has" => {
            args.arity(2, Some(2))?;
            let p = if head == "isa" { "is-a" } else { "has" };
            (args.positional[0], p, args.positional[1])
        }
        _ => {
            args.arity(3, Some(3))?;
            let r = relation(args.positional[1])?;
            if head == "attr" && RESERVED_RELATIONS.contains(&r) {
                return Err(err(
                    format!("reserved relation `{r}` cannot be an attribute; use the `isa`, `instance` or `has` forms"),
                    args.positional[1].span,
                ));
            }
            (args.positional[0], r, args.positional[2])
        }
    };
    Ok(Assertion::Fact {
        subject: NodeId::new(ident(subject)?),
        predicate: predicate.to_string(),
        object: NodeId::new(ident(object)?),
        space: args.space()?,
    })
}

fn term(s: &Sexp, roles: &BTreeSet<String>) -> Result<Term, Diags> {
    if s.symbol() == Some("?") {
        return Ok(Term::Wildcard);
    }
    let t = ident(s)?;
    Ok(if !s.is_string() && roles.contains(t) {
        Term::Role(t.to_string())
    } else {
        Term::Node(NodeId::new(t))
    })
}

fn pattern(span: Span, items: &[Sexp], roles: &BTreeSet<String>) -> Result<Pattern, Diags> {
    if items.len() != 3 {
        return Err(err(format!("a pattern needs subject, relation and object, got {} items", items.len()), span));
    }
    Ok(Pattern {
        subject: term(&items[0], roles)?,
        predicate: relation(&items[1])?.to_string(),
        object: term(&items[2], roles)?,
    })
}

fn script(span: Span, rest: &[Sexp]) -> Result<Script, Diags> {
    let Some(name) = rest.first() else {
        return Err(err("`script` expects a name", span));
    };
    let mut s = Script {
        name: ident(name)?.to_string(),
        track: String::new(),
        props: Vec::new(),
        roles: BTreeMap::new(),
        entry_conditions: Vec::new(),
        results: Vec::new(),
        scenes: Vec::new(),
    };
    let mut diags = Vec::new();
    let parts: Vec<(&str, &[Sexp], Span)> = rest[1..]
        .iter()
        .filter_map(|p| match sub_head(p) {
            Ok((h, r)) => Some((h, r, p.span)),
            Err(mut d) => {
                diags.append(&mut d);
                None
            }
        })
        .collect();

    // Roles and props first: they decide how symbols in events resolve.
    for (head, args, at) in &parts {
        let res: Result<(), Diags> = (|| {
            match *head {
                "role" => {
                    if args.len() != 2 {
                        return Err(err("`role` expects a symbol and a description", *at));
                    }
                    let sym = ident(&args[0])?.to_string();
                    if s.roles.insert(sym.clone(), text(&args[1])?.to_string()).is_some() {
                        return Err(err(format!("role {sym} declared twice"), *at));
                    }
                }
                "props" => {
                    for p in *args {
                        s.props.push(ident(p)?.to_string());
                    }
                }
                "track" => {
                    if args.len() != 1 {
                        return Err(err("`track` expects one argument", *at));
                    }
                    s.track = text(&args[0])?.to_string();
                }
                _ => {}
            }
            Ok(())
        })();
        if let Err(mut d) = res {
            diags.append(&mut d);
        }
    }
    let roles: BTreeSet<String> = s.roles.keys().cloned().collect();
    for (head, args, at) in &parts {
        let res: Result<(), Diags> = (|| {
            match *head {
                "role" | "props" | "track" => {}
                "entry" => s.entry_conditions.push(pattern(*at, args, &roles)?),
                "result" => s.results.push(pattern(*at, args, &roles)?),
                "scene" => s.scenes.push(scene(*at, args, &s)?),
                other => return Err(err(format!("unknown script part `{other}`"), *at)),
            }
            Ok(())
        })();
        if let Err(mut d) = res {
            diags.append(&mut d);
        }
    }
    if !diags.is_empty() {
        return Err(diags);
    }
    let issues = crate::script::validate_script(&s);
    if !issues.is_empty() {
        return Err(issues
            .into_iter()
            .map(|i| Diagnostic::error(format!("script {}: {i}", s.name), span))
            .collect());
    }
    Ok(s)
}

fn scene(span: Span, args: &[Sexp], script: &Script) -> Result<Scene, Diags> {
    if args.len() < 2 {
        return Err(err("`scene` expects a number and a name", span));
    }
    let roles: BTreeSet<String> = script.roles.keys().cloned().collect();
    let mut scene = Scene {
        number: number(&args[0])?,
        name: text(&args[1])?.to_string(),
        events: Vec::new(),
        transitions: Vec::new(),
    };
    for part in &args[2..] {
        let (head, rest) = sub_head(part)?;
        match head {
            "event" => {
                if !(2..=3).contains(&rest.len()) {
                    return Err(err("`event` expects an actor, an action and an optional object", part.span));
                }
                let object = rest
                    .get(2)
                    .map(|o| {
                        ident(o).map(|t| {
                            if o.is_string() {
                                EventObject::Literal(NodeId::new(t))
                            } else if script.is_role(t) {
                                EventObject::Role(t.to_string())
                            } else if script.is_prop(t) {
                                EventObject::Prop(t.to_string())
                            } else {
                                EventObject::Literal(NodeId::new(t))
                            }
                        })
                    })
                    .transpose()?;
                scene.events.push(Event {
                    actor: ident(&rest[0])?.to_string(),
                    action: relation(&rest[1])?.to_string(),
                    object,
                });
            }
            "goto" => {
                if rest.len() != 2 {
                    return Err(err("`goto` expects a scene number and a condition", part.span));
                }
                scene.transitions.push(Transition {
                    target: number(&rest[0])?,
                    condition: pattern(rest[1].span, list(&rest[1])?, &roles)?,
                });
            }
            other => return Err(err(format!("unknown scene part `{other}`"), part.span)),
        }
    }
    Ok(scene)
}

fn link(args: Args) -> Result<Assertion, Diags> {
    args.arity(3, Some(3))?;
    let script = ident(args.positional[0])?.to_string();
    let (head, rest) = sub_head(args.positional[1])?;
    let at = args.positional[1].span;
    let element = match (head, rest) {
        ("role", [r]) => ElementRef::Role(ident(r)?.to_string()),
        ("prop", [p]) => ElementRef::Prop(ident(p)?.to_string()),
        ("event", [n, i]) => ElementRef::EventObject {
            scene: number(n)?,
            index: number(i)?,
        },
        _ => return Err(err("expected (role SYM), (prop NAME) or (event SCENE INDEX)", at)),
    };
    Ok(Assertion::HybridLink(HybridLink {
        from: ScriptElementRef { script, element },
        to: NodeId::new(ident(args.positional[2])?),
    }))
}

fn optional(s: &Sexp) -> Result<Option<String>, Diags> {
    if s.symbol() == Some("_") {
        Ok(None)
    } else {
        ident(s).map(|t| Some(t.to_string()))
    }
}

fn observation_parts(items: &[&Sexp]) -> Result<Observation, Diags> {
    let actor = optional(items[0])?;
    let action = relation(items[1])?.to_string();
    let object = items.get(2).map(|o| optional(o)).transpose()?.flatten();
    Ok(Observation { actor, action, object })
}

pub fn convert_observation(whole: &Sexp, items: &[Sexp]) -> Result<Observation, Diags> {
    let items: Vec<&Sexp> = items.iter().collect();
    // Accept both `(ACTOR ACTION [OBJ])` and `(observe ACTOR ACTION [OBJ])`.
    let items = match items.first().and_then(|s| s.symbol()) {
        Some("observe") | Some("event") => &items[1..],
        _ => &items[..],
    };
    if !(2..=3).contains(&items.len()) {
        return Err(err("an event needs an actor, an action and an optional object", whole.span));
    }
    observation_parts(items)
}

fn ref_list(rest: &[Sexp]) -> Result<Vec<EventRef>, Diags> {
    rest.iter()
        .map(|r| match list(r)? {
            [step, index] => Ok(EventRef {
                step: number(step)?,
                index: number(index)?,
            }),
            _ => Err(err("expected (STEP INDEX)", r.span)),
        })
        .collect()
}

fn episode(args: Args) -> Result<Assertion, Diags> {
    let Some(id) = args.positional.first() else {
        return Err(err("`episode` expects an id and a script", args.span));
    };
    let Some(script) = args.positional.get(1) else {
        return Err(err("`episode` expects an id and a script", args.span));
    };
    let mut ep = Episode::new(ident(script)?, BTreeMap::new());
    ep.id = ident(id)?.to_string();
    ep.status = match args.option_text("status")?.as_deref() {
        None | Some("open") => EpisodeStatus::Open,
        Some("completed") => EpisodeStatus::Completed,
        Some(s) => return Err(err(format!("unknown episode status `{s}`"), args.span)),
    };
    for part in &args.positional[2..] {
        let (head, rest) = sub_head(part)?;
        match head {
            "bind" => match rest {
                [sym, node] => {
                    ep.bindings
                        .insert(ident(sym)?.to_string(), NodeId::new(ident(node)?));
                }
                _ => return Err(err("`bind` expects a symbol and a node", part.span)),
            },
            "observe" => ep.observations.push(convert_observation(part, rest)?),
            "path" => {
                ep.scene_path = rest.iter().map(number).collect::<Result<_, _>>()?;
            }
            "observed" => ep.observed = ref_list(rest)?,
            "inferred" => ep.inferred = ref_list(rest)?,
            other => return Err(err(format!("unknown episode part `{other}`"), part.span)),
        }
    }
    Ok(Assertion::Episode(ep))
}

fn query_term(s: &Sexp) -> Result<Term, Diags> {
    if s.symbol() == Some("?") {
        Ok(Term::Wildcard)
    } else {
        Ok(Term::Node(NodeId::new(ident(s)?)))
    }
}

pub fn convert_query(s: &Sexp) -> Result<Query, Diags> {
    let (head, rest) = sub_head(s)?;
    let args = Args::split(head, s.span, rest, &[])?;
    match head {
        "yesno" | "wh" => {
            args.arity(3, Some(3))?;
            let p = Pattern {
                subject: query_term(args.positional[0])?,
                predicate: relation(args.positional[1])?.to_string(),
                object: query_term(args.positional[2])?,
            };
            let wild = p.wildcard_count();
            match head {
                "yesno" if wild == 0 => Ok(Query::YesNo(p)),
                "wh" if wild == 1 => Ok(Query::Wh(p)),
                "yesno" => Err(err("`yesno` cannot contain `?`", s.span)),
                _ => Err(err("`wh` needs exactly one `?`", s.span)),
            }
        }
        "roledetail" => {
            args.arity(2, Some(2))?;
            Ok(Query::RoleDetail {
                script: ident(args.positional[0])?.to_string(),
                role: ident(args.positional[1])?.to_string(),
            })
        }
        "didhappen" => {
            args.arity(2, Some(4))?;
            let script = ident(args.positional[0])?.to_string();
            let event = if args.positional.len() == 2 {
                Observation {
                    actor: None,
                    action: relation(args.positional[1])?.to_string(),
                    object: None,
                }
            } else {
                observation_parts(&args.positional[1..])?
            };
            Ok(Query::DidHappen { script, event })
        }
        other => Err(err(format!("unknown query `{other}`"), s.span)),
    }
}
