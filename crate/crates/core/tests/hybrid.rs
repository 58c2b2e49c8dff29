mod common;

use std::collections::BTreeMap;

use hybridkr::{
    Assertion, ElementRef, Episode, HybridError, HybridLink, NodeId, ScriptElementRef, TellOutcome,
};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn link_constraints() {
    let mut kb = common::load_fixture("lecture");
    kb.tell(Assertion::fact("asha", "instance", "student"));
    let role = |r: &str| ScriptElementRef::role("lecture-room", r);
    assert_eq!(
        kb.add_hybrid_link(HybridLink::new(role("S"), "asha")),
        Err(HybridError::RoleLinkToNonClass(NodeId::new("asha")))
    );
    assert_eq!(kb.add_hybrid_link(HybridLink::new(role("T"), "teacher")), Err(HybridError::DuplicateLink));
    assert!(matches!(
        kb.add_hybrid_link(HybridLink::new(role("X"), "teacher")),
        Err(HybridError::DanglingScriptElement(_))
    ));
    assert_eq!(
        kb.add_hybrid_link(HybridLink::new(role("T"), "nobody")),
        Err(HybridError::DanglingNode(NodeId::new("nobody")))
    );
    let object = ScriptElementRef {
        script: "lecture-room".into(),
        element: ElementRef::EventObject { scene: 4, index: 2 },
    };
    kb.add_hybrid_link(HybridLink::new(object.clone(), "class-room")).unwrap();
    assert_eq!(kb.links().filter(|l| l.from == object).count(), 1);
    // Events without an object offer nothing to link.
    let bare = ScriptElementRef {
        script: "lecture-room".into(),
        element: ElementRef::EventObject { scene: 3, index: 1 },
    };
    assert!(kb.add_hybrid_link(HybridLink::new(bare, "class-room")).is_err());
}

#[test]
fn role_attributes_compose_link_and_inheritance() {
    let kb = common::load_fixture("lecture");
    for role in ["S", "T"] {
        let detail = kb.resolve_role_attributes("lecture-room", role).unwrap();
        let class = kb.role_classes("lecture-room", role)[0].clone();
        assert_eq!(detail.class, class);
        assert_eq!(detail.attributes, kb.net().inherited_attributes(&class).unwrap());
        assert_eq!(detail.generalizations, kb.net().isa_children(&class));
    }
    let t = kb.resolve_role_attributes("lecture-room", "T").unwrap();
    assert!(t.generalizations.contains(&NodeId::new("permanent")));
    assert!(t.generalizations.contains(&NodeId::new("contract")));
    assert_eq!(t.attributes["teaches"].value.as_str(), "subject");
}

#[test]
fn unlinked_role_and_vacuous_consistency() {
    let kb = common::load_fixture("restaurant");
    let mut kb2 = kb.clone();
    kb2.tell(Assertion::Script(hybridkr::Script {
        name: "bare".into(),
        roles: [("A".to_string(), "anyone".to_string())].into(),
        ..kb.script("restaurant").unwrap().clone()
    }));
    assert!(matches!(
        kb.resolve_role_attributes("restaurant", "nobody"),
        Err(HybridError::UnlinkedRole { .. })
    ));
    let ep = Episode::new("restaurant", BTreeMap::new());
    assert!(kb.check_binding_consistency(&ep).unwrap().is_empty());
    let ghost = Episode::new("ghost", BTreeMap::new());
    assert!(kb.check_binding_consistency(&ghost).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn consistency_is_monotone_in_isa_edges(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let mut kb = common::load_fixture("lecture");
        let classes = ["person", "teacher", "student", "part-time", "full-time", "regular", "permanent", "contract", "subject", "room", "equipment"];
        let instances = ["dr-teacher", "asha", "class-room", "projector-1"];
        let mut ep = Episode::new("lecture-room", BTreeMap::new());
        ep.bindings.insert("T".into(), NodeId::new(instances[rng.random_range(0..4)]));
        ep.bindings.insert("S".into(), NodeId::new(instances[rng.random_range(0..4)]));
        let mut violations = kb.check_binding_consistency(&ep).unwrap().len();
        for _ in 0..10 {
            let a = classes[rng.random_range(0..classes.len())];
            let b = classes[rng.random_range(0..classes.len())];
            if let TellOutcome::Accepted = kb.tell(Assertion::fact(a, "is-a", b)) {
                let now = kb.check_binding_consistency(&ep).unwrap().len();
                prop_assert!(now <= violations);
                violations = now;
            }
        }
    }
}
