mod common;

use hybridkr::dsl::{self, Severity};
use hybridkr::{Assertion, HybridKb, Query, Term};
use proptest::prelude::*;

fn first_error(text: &str) -> dsl::Diagnostic {
    let diags = dsl::parse(text).expect_err("should not parse");
    diags.into_iter().find(|d| d.severity == Severity::Error).unwrap()
}

#[test]
fn minimal_instance_form() {
    let forms = dsl::parse("(instance rama Deity)").unwrap();
    assert_eq!(forms.len(), 1);
    match &forms[0].assertion {
        Assertion::Node { node, classes } => {
            assert_eq!(node.id.as_str(), "rama");
            assert_eq!(classes.len(), 1);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn unbalanced_reports_position() {
    let d = first_error("(class a)\n  (isa A B");
    assert!(d.message.contains("unbalanced"), "{d}");
    assert_eq!((d.line, d.column), (2, 3));
}

#[test]
fn head_arity_and_reserved_words() {
    assert!(first_error("(klass a)").message.contains("unknown form"));
    assert!(first_error("(isa a)").message.contains("expects 2"));
    assert!(first_error("(class scene)").message.contains("reserved"));
    assert!(first_error("(attr a is-a b)").message.contains("reserved relation"));
    assert!(first_error("(rel a Son_Of b)").message.contains("invalid relation"));
    assert!(first_error("(class a :colour red)").message.contains("option"));
}

#[test]
fn all_errors_are_reported() {
    let diags = dsl::parse("(klass a)\n(isa b)\n(class c)").unwrap_err();
    assert_eq!(diags.len(), 2);
    assert_eq!(diags[1].line, 2);
}

#[test]
fn first_rejected_form_aborts_the_load() {
    let mut kb = dsl::load("(class a)").unwrap().kb;
    let before = kb.clone();
    let diags = dsl::apply(&mut kb, "(class b)\n(isa b a)\n(isa a b)\n(class c)").unwrap_err();
    assert_eq!(diags.len(), 1);
    assert_eq!(diags[0].line, 3);
    assert!(diags[0].message.contains("cycle"), "{}", diags[0]);
    assert_eq!(kb, before);
}

#[test]
fn duplicates_warn() {
    let loaded = dsl::load("(space s0)\n(class a)\n(class a)").unwrap();
    assert_eq!(loaded.warnings.len(), 1);
    assert_eq!(loaded.warnings[0].line, 3);
}

#[test]
fn unresolved_agent_is_an_error() {
    let diags = dsl::load("(class a)\n(space b1 :agent ghost)").unwrap_err();
    assert!(diags[0].message.contains("ghost"), "{}", diags[0]);
    assert_eq!(diags[0].line, 2);
}

#[test]
fn empty_kb_serializes_to_preamble() {
    assert_eq!(dsl::serialize(&HybridKb::new()), "(space s0)\n");
}

#[test]
fn script_precedes_link() {
    let text = "(class c)\n(link s (role R) c)\n";
    assert!(dsl::load(text).is_err(), "link before its script must be rejected");
    let kb = dsl::load("(class c)\n(script s (role R \"r\") (scene 1 one (event R go)))\n(link s (role R) c)").unwrap().kb;
    let out = dsl::serialize(&kb);
    assert!(out.find("(script s").unwrap() < out.find("(link s").unwrap());
}

#[test]
fn lecture_fixture_shape() {
    let forms = dsl::parse(&common::fixture("lecture")).unwrap();
    let script = forms
        .iter()
        .find_map(|f| match &f.assertion {
            Assertion::Script(s) => Some(s),
            _ => None,
        })
        .unwrap();
    assert_eq!((script.scenes.len(), script.roles.len()), (4, 2));
}

#[test]
fn queries_parse() {
    assert!(matches!(dsl::parse_query("(yesno a b-c d)").unwrap(), Query::YesNo(_)));
    match dsl::parse_query("(wh ? son-of dasharatha)").unwrap() {
        Query::Wh(p) => assert_eq!(p.subject, Term::Wildcard),
        q => panic!("{q:?}"),
    }
    assert!(dsl::parse_query("(wh ? son-of ?)").is_err());
    assert!(dsl::parse_query("(yesno a b ?)").is_err());
    match dsl::parse_query("(didhappen restaurant pay)").unwrap() {
        Query::DidHappen { event, .. } => assert_eq!(event.action, "pay"),
        q => panic!("{q:?}"),
    }
    match dsl::parse_query("(didhappen restaurant _ eat pastries)").unwrap() {
        Query::DidHappen { event, .. } => {
            assert_eq!(event.actor, None);
            assert_eq!(event.object.as_deref(), Some("pastries"));
        }
        q => panic!("{q:?}"),
    }
    assert!(dsl::parse_query("(roledetail lecture-room S)").is_ok());
    assert!(dsl::parse_query("(yesno a b c) (yesno a b c)").is_err());
}

#[test]
fn observations_parse() {
    let o = dsl::parse_observation("eat(pastries)").unwrap();
    assert_eq!((o.action.as_str(), o.object.as_deref()), ("eat", Some("pastries")));
    let o = dsl::parse_observation("enter").unwrap();
    assert_eq!(o.object, None);
    let o = dsl::parse_observation("(rohan enter restaurant)").unwrap();
    assert_eq!(o.actor.as_deref(), Some("rohan"));
    assert!(dsl::parse_observation("eat(").is_err());
}

#[test]
fn quoted_identifiers_survive() {
    let text = "(class \"scene\")\n(instance \"a b\" \"scene\" :label \"A \\\"B\\\"\")\n";
    let kb = dsl::load(text).unwrap().kb;
    let out = dsl::serialize(&kb);
    assert_eq!(dsl::serialize(&dsl::load(&out).unwrap().kb), out);
    assert!(out.contains("(instance \"a b\" \"scene\" :label \"A \\\"B\\\"\")"), "{out}");
}

fn within(text: &str, d: &dsl::Diagnostic) -> bool {
    let lines: Vec<&str> = text.split('\n').collect();
    d.line >= 1
        && d.line <= lines.len()
        && d.column >= 1
        && d.column <= lines[d.line - 1].chars().count() + 1
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn parsing_is_total(text in "\\PC*") {
        if let Err(diags) = dsl::load(&text) {
            for d in &diags {
                prop_assert!(within(&text, d), "{d} outside input");
            }
        }
        let _ = dsl::parse_query(&text);
        let _ = dsl::parse_observation(&text);
    }

    #[test]
    fn parsing_is_total_on_near_miss_input(cut in 0usize..2000, junk in "[()\":; a-z?_\n]{0,6}") {
        let text = common::fixture("lecture");
        let mut at = cut.min(text.len());
        while !text.is_char_boundary(at) {
            at -= 1;
        }
        let mangled = format!("{}{junk}{}", &text[..at], &text[at..]);
        if let Err(diags) = dsl::load(&mangled) {
            prop_assert!(!diags.is_empty());
            for d in &diags {
                prop_assert!(within(&mangled, d), "{d} outside input");
            }
        }
    }
}
