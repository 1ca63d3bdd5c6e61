mod common;

use proptest::prelude::*;
use rand::Rng;
use riffle::dataset::Dataset;
use riffle::io::{load_model, parse_dataset, save_model, write_dataset};
use riffle::items::{ItemSet, ItemUniverse};
use riffle::lab::enumerate_partial_rankings;
use riffle::model::seeded_rng;
use riffle::Error;

use common::*;

#[test]
fn every_three_item_partial_ranking_reparses() {
    let u = ItemUniverse::numbered(3).unwrap();
    for p in enumerate_partial_rankings(ItemSet::full(3)) {
        assert_eq!(u.parse_partial(&u.render_partial(&p)).unwrap(), p);
    }
}

proptest! {
    #[test]
    fn random_partial_rankings_reparse(seed in any::<u64>(), n in 1usize..=8) {
        let u = ItemUniverse::new(&["alpha", "b", "c3", "d_d", "e", "f", "g", "h"][..n]).unwrap();
        let p = random_partial(n, &mut seeded_rng(seed));
        prop_assert_eq!(u.parse_partial(&u.render_partial(&p)).unwrap(), p);
    }

    #[test]
    fn datasets_round_trip(seed in any::<u64>()) {
        let mut rng = seeded_rng(seed);
        let n = rng.gen_range(1..=7);
        let mut d = Dataset::new(universe(n));
        for _ in 0..rng.gen_range(0..30) {
            d.push(random_partial(n, &mut rng), rng.gen_range(1..1000)).unwrap();
        }
        let text = write_dataset(&d);
        prop_assert_eq!(parse_dataset(&text).unwrap(), d);
    }
}

#[test]
fn models_round_trip_exactly() {
    for seed in 0..100u64 {
        let mut rng = seeded_rng(seed);
        let n = rng.gen_range(1..=7);
        let m = random_model(n, 3, rng.gen_range(0.5..4.0), &mut rng);
        let text = save_model(&m);
        let back = load_model(&text).unwrap();
        let dev = m
            .tables()
            .iter()
            .flatten()
            .zip(back.tables().iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert_eq!(dev, 0.0);
        assert_eq!(back, m);
        assert_eq!(save_model(&back), text);
    }
}

#[test]
fn uniform_model_round_trip() {
    let m = riffle::RiffleModel::uniform(universe(4), apa_like_four()).unwrap();
    assert_eq!(load_model(&save_model(&m)).unwrap(), m);
}

fn apa_like_four() -> riffle::Hierarchy {
    riffle::Hierarchy::split_sets(ItemSet::from_iter([0, 2]), ItemSet::from_iter([1, 3])).unwrap()
}

#[test]
fn hand_written_model_with_negative_entry_is_rejected() {
    let doc = r#"{
        "format_version": 1,
        "universe": ["a", "b"],
        "hierarchy": {"leaf": ["a", "b"]},
        "tables": [[1.5, -0.5]]
    }"#;
    match load_model(doc) {
        Err(Error::Schema { path, .. }) => assert_eq!(path, "tables[0][1]"),
        other => panic!("unexpected {other:?}"),
    }
    let off = doc.replace("[1.5, -0.5]", "[0.5, 0.6]");
    assert!(matches!(load_model(&off), Err(Error::Schema { path, .. }) if path == "tables[0]"));
    let missing = doc.replace("\"universe\": [\"a\", \"b\"],", "");
    assert!(matches!(load_model(&missing), Err(Error::Schema { path, .. }) if path == "universe"));
}

#[test]
fn election_fixture_round_trips() {
    let d = parse_dataset(include_str!("fixtures/election.ballots")).unwrap();
    assert_eq!(d.len(), 7);
    assert_eq!(d.total_count(), 37 + 30 + 27 + 1198 + 15 + 302 + 186);
    assert_eq!(parse_dataset(&write_dataset(&d)).unwrap(), d);
    let u = d.universe();
    let rows: Vec<String> = d.records().iter().map(|r| u.render_partial(&r.observation)).collect();
    assert_eq!(rows[0], "5|3|4|2|1");
    assert_eq!(rows[2], "1|2|3|4,5");
    assert_eq!(rows[5], "1|3|2,4,5");
}
