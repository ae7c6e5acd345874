//! The Burton musicals fixture: ranking, witnesses, and the brute-force
//! check that froze it.

mod common;

use causaldb::lineage::valuations;
use causaldb::responsibility::{brute_force_with, rank_causes, Mode, ResponsibilityResult, SolverChoice};
use causaldb::storage::DatabaseInstance;
use causaldb::{Budget, Const, Query};
use common::{load_fixture, query_file};
use num_rational::Ratio;

fn setup() -> (Query, DatabaseInstance) {
    let db = load_fixture("burton", Some("burton/annotations.ann"));
    let q = query_file("burton/q.dl")
        .specialize(&[Const::parse("Musical")])
        .unwrap();
    (q, db)
}

fn find<'a>(ranked: &'a [ResponsibilityResult], db: &DatabaseInstance, needle: &str) -> &'a ResponsibilityResult {
    ranked
        .iter()
        .find(|r| db.reference(r.tuple).contains(needle))
        .unwrap_or_else(|| panic!("{needle} is not ranked"))
}

#[test]
fn ranking_matches_the_table() {
    let (q, db) = setup();
    let ranked = rank_causes(&q, &db, Mode::WhySo, SolverChoice::Auto, &Budget::default()).unwrap();
    let rhos: Vec<Ratio<u64>> = ranked.iter().map(|r| r.rho).collect();
    let expected: Vec<Ratio<u64>> = [3, 3, 3, 3, 4, 4, 5, 5, 5].iter().map(|&d| Ratio::new(1, d)).collect();
    assert_eq!(rhos, expected);

    let sweeney = find(&ranked, &db, "Sweeney Todd");
    let gamma: Vec<String> = sweeney
        .contingency
        .as_ref()
        .unwrap()
        .to_vec()
        .into_iter()
        .map(|t| db.reference(t))
        .collect();
    assert_eq!(gamma.len(), 2);
    assert!(gamma.iter().any(|g| g.contains("David")));
    assert!(gamma.iter().any(|g| g.contains("Humphrey")));

    let manon = find(&ranked, &db, "Manon Lescaut");
    assert_eq!(manon.contingency.as_ref().unwrap().len(), 4);
}

#[test]
fn every_solver_gives_the_same_column() {
    let (q, db) = setup();
    let auto = rank_causes(&q, &db, Mode::WhySo, SolverChoice::Auto, &Budget::default()).unwrap();
    for choice in [SolverChoice::Flow, SolverChoice::Exact, SolverChoice::Brute] {
        let other = rank_causes(&q, &db, Mode::WhySo, choice, &Budget::default()).unwrap();
        let a: Vec<_> = auto.iter().map(|r| (r.tuple, r.rho)).collect();
        let b: Vec<_> = other.iter().map(|r| (r.tuple, r.rho)).collect();
        assert_eq!(a, b, "{choice:?}");
    }
}

#[test]
fn brute_force_validates_the_fixture() {
    let (q, db) = setup();
    let db = db.for_query(&q);
    let vs = valuations(&q, &db).unwrap();
    let mut column: Vec<Ratio<u64>> = db
        .endo_ids()
        .map(|t| brute_force_with(&vs, &db, t, &Budget::default()).unwrap().rho)
        .filter(|r| *r.numer() != 0)
        .collect();
    column.sort_by(|a, b| b.cmp(a));
    assert_eq!(column.len(), 9);
    assert_eq!(column.iter().filter(|r| **r == Ratio::new(1, 3)).count(), 4);
    assert_eq!(column.iter().filter(|r| **r == Ratio::new(1, 4)).count(), 2);
    assert_eq!(column.iter().filter(|r| **r == Ratio::new(1, 5)).count(), 3);
}

#[test]
fn json_shape() {
    let (q, db) = setup();
    let ranked = rank_causes(&q, &db, Mode::WhySo, SolverChoice::Auto, &Budget::default()).unwrap();
    let j = find(&ranked, &db, "Sweeney Todd").to_json(&db);
    assert_eq!(j["tuple"], "Movie(526338,'Sweeney Todd',2007)");
    assert_eq!(j["rho"], "1/3");
    assert_eq!(j["rho_float"], 0.3333);
    assert_eq!(j["contingency"].as_array().unwrap().len(), 2);
}
