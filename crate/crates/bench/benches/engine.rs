use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hybridkr::{dsl, gap_fill, Assertion, Confidence, HybridKb, Node, NodeKind, Observation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RESTAURANT: &str = include_str!("../../core/fixtures/restaurant.kb");
const LECTURE: &str = include_str!("../../core/fixtures/lecture.kb");

/// A random class DAG where every class has 1 to 3 parents among earlier ones.
fn random_taxonomy(n: usize, seed: u64) -> HybridKb {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kb = HybridKb::new();
    for i in 0..n {
        let id = format!("c{i}");
        kb.tell(Assertion::Node {
            node: Node::new(id.as_str(), NodeKind::GenericClass, "s0"),
            classes: vec![],
        });
        if i > 0 {
            for _ in 0..rng.random_range(1..=3) {
                let p = rng.random_range(0..i);
                kb.tell(Assertion::fact(&id, "is-a", &format!("c{p}")));
            }
        }
        if rng.random_bool(0.2) {
            kb.tell(Assertion::fact(&id, &format!("attr{}", rng.random_range(0..5)), &format!("v{i}")));
        }
    }
    kb
}

fn inheritance(c: &mut Criterion) {
    let mut group = c.benchmark_group("inherited_attributes");
    for n in [100, 1000, 5000] {
        let kb = random_taxonomy(n, 7);
        let leaf = hybridkr::NodeId::new(format!("c{}", n - 1));
        group.bench_with_input(BenchmarkId::from_parameter(n), &kb, |b, kb| {
            b.iter(|| kb.net().inherited_attributes(black_box(&leaf)).unwrap())
        });
    }
    group.finish();
}

fn ask(c: &mut Criterion) {
    let kb = dsl::load(LECTURE).unwrap().kb;
    let q = dsl::parse_query("(yesno asha mode \"part time, full time or regular\")").unwrap();
    let conf = Confidence::default();
    c.bench_function("ask_inherited_yesno", |b| b.iter(|| kb.ask(black_box(&q), &conf).unwrap()));
}

fn gap_filling(c: &mut Criterion) {
    let kb = dsl::load(RESTAURANT).unwrap().kb;
    let script = kb.script("restaurant").unwrap();
    let obs = [
        Observation::new(Some("rohan"), "enter", Some("restaurant")),
        Observation::new(Some("rohan"), "eat", Some("pastries")),
    ];
    c.bench_function("gap_fill_restaurant", |b| b.iter(|| gap_fill(script, black_box(&obs)).unwrap()));
}

fn text_round_trip(c: &mut Criterion) {
    let kb = random_taxonomy(1000, 11);
    let text = dsl::serialize(&kb);
    c.bench_function("serialize_1000_classes", |b| b.iter(|| dsl::serialize(black_box(&kb))));
    c.bench_function("load_1000_classes", |b| b.iter(|| dsl::load(black_box(&text)).unwrap()));
}

criterion_group!(benches, inheritance, ask, gap_filling, text_round_trip);
criterion_main!(benches);
