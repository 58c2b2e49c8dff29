mod common;

use hybridkr::dsl;

#[test]
fn random_kbs_round_trip() {
    let mut rng = common::rng(7);
    let (mut scripts, mut episodes, mut spaces, mut links) = (0, 0, 0, 0);
    for case in 0..300 {
        let kb = common::random_kb(&mut rng);
        scripts += kb.scripts().count();
        episodes += kb.episodes().count();
        spaces += kb.net().spaces().count() - 1;
        links += kb.links().count();
        let text = dsl::serialize(&kb);
        let again = dsl::load(&text)
            .unwrap_or_else(|d| panic!("case {case}: {d:?}\n{text}"))
            .kb;
        assert_eq!(again, kb, "case {case}\n{text}");
        assert_eq!(dsl::serialize(&again), text, "case {case}");
    }
    // The generator must actually reach every part of the language.
    assert!(scripts > 50 && episodes > 50 && spaces > 50 && links > 50, "{scripts} {episodes} {spaces} {links}");
}
