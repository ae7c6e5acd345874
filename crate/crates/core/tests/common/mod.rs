#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use causaldb::storage::{load_dir, AnnotationSpec, DatabaseInstance};
use causaldb::{parse_query, Const, Query};
use rand::Rng;

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

pub fn load_fixture(dir: &str, annotations: Option<&str>) -> DatabaseInstance {
    let spec = match annotations {
        Some(f) => AnnotationSpec::parse(&std::fs::read_to_string(fixture(f)).unwrap()).unwrap(),
        None => AnnotationSpec::default(),
    };
    load_dir(&fixture(dir), &spec).unwrap()
}

pub fn query_file(rel: &str) -> Query {
    parse_query(&std::fs::read_to_string(fixture(rel)).unwrap()).unwrap()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flags {
    Endo,
    Exo,
    /// Each tuple endogenous with probability 3/4.
    Mixed,
}

/// Random instance: up to `max` distinct tuples per relation over a
/// `domain`-element domain `d0, d1, ...`.
pub fn random_instance(
    rng: &mut impl Rng,
    relations: &[(&str, usize, Flags)],
    max: usize,
    domain: usize,
) -> DatabaseInstance {
    let mut db = DatabaseInstance::default();
    for &(name, arity, flags) in relations {
        db.ensure_relation(name, arity).unwrap();
        let n = rng.gen_range(0..=max);
        let mut seen = BTreeSet::new();
        for _ in 0..n {
            let vals: Vec<Const> = (0..arity)
                .map(|_| Const::parse(&format!("d{}", rng.gen_range(0..domain))))
                .collect();
            if !seen.insert(vals.clone()) {
                continue;
            }
            let endo = match flags {
                Flags::Endo => true,
                Flags::Exo => false,
                Flags::Mixed => rng.gen_range(0..4) != 0,
            };
            db.insert(name, vals, endo).unwrap();
        }
    }
    db
}

/// Relation name, arity and flags of a random instance.
pub type RelationSpec = (&'static str, usize, Flags);

/// Weakly linear queries with the flags their random instances use.
pub const AGREEMENT_QUERIES: &[(&str, &[RelationSpec])] = &[
    (
        "q :- R(x,y), S(y,z).",
        &[("R", 2, Flags::Mixed), ("S", 2, Flags::Mixed)],
    ),
    (
        "q :- R(x,y), S(y,z), T(z,x).",
        &[("R", 2, Flags::Mixed), ("S", 2, Flags::Exo), ("T", 2, Flags::Mixed)],
    ),
    (
        "q :- A(x), R(x,y), S(y,z), B(z).",
        &[
            ("A", 1, Flags::Endo),
            ("R", 2, Flags::Mixed),
            ("S", 2, Flags::Mixed),
            ("B", 1, Flags::Endo),
        ],
    ),
    (
        "q :- A(x), R(x,y), S(y).",
        &[("A", 1, Flags::Endo), ("R", 2, Flags::Mixed), ("S", 1, Flags::Mixed)],
    ),
    (
        "q :- T(x), R(x,y,z), S(z,'d0').",
        &[("T", 1, Flags::Mixed), ("R", 3, Flags::Mixed), ("S", 2, Flags::Mixed)],
    ),
];

/// Flow, exact and brute force agree on every endogenous tuple of the
/// query's relations, and every contingency replays.
pub fn check_agreement(q: &Query, db: &DatabaseInstance) -> Result<usize, String> {
    use causaldb::causality::why_so_causes;
    use causaldb::lineage::valuations;
    use causaldb::responsibility::{brute_force_with, is_why_so_contingency, ExactSolver, FlowSolver};
    use causaldb::Budget;
    use std::sync::Arc;

    let budget = Budget {
        brute_tuples: 40,
        ..Budget::default()
    };
    let vs = Arc::new(valuations(q, db).map_err(|e| e.to_string())?);
    let causes: BTreeSet<_> = match why_so_causes(q, db) {
        Ok(c) => c.into_iter().map(|c| c.tuple).collect(),
        Err(causaldb::Error::NotAnAnswer) => BTreeSet::new(),
        Err(e) => return Err(e.to_string()),
    };
    let exact = ExactSolver::from_valuations((*vs).clone(), db);
    let mut checked = 0;
    for (i, atom) in q.atoms.iter().enumerate() {
        let flow = FlowSolver::build(q, db, vs.clone(), i, &budget).map_err(|e| format!("{q}: {e}"))?;
        for &t in db.relation(&atom.relation) {
            if !db.is_endo(t) {
                continue;
            }
            let f = flow.responsibility(db, t).map_err(|e| e.to_string())?;
            let x = exact.responsibility(db, t, &budget).map_err(|e| e.to_string())?;
            let b = brute_force_with(&vs, db, t, &budget).map_err(|e| e.to_string())?;
            let r = db.reference(t);
            if f.rho != b.rho || x.rho != b.rho {
                return Err(format!("{q} on {r}: flow {} exact {} brute {}", f.rho, x.rho, b.rho));
            }
            if (b.rho != num_rational::Ratio::new(0, 1)) != causes.contains(&t) {
                return Err(format!("{q} on {r}: ρ {} but cause = {}", b.rho, causes.contains(&t)));
            }
            for res in [&f, &x, &b] {
                match &res.contingency {
                    Some(c) => {
                        let g = c.to_vec();
                        if g.len() as u64 + 1 != *res.rho.denom() || *res.rho.numer() != 1 {
                            return Err(format!("{q} on {r}: |Γ| {} vs ρ {}", g.len(), res.rho));
                        }
                        if !is_why_so_contingency(&vs, t, &g) {
                            return Err(format!("{q} on {r}: {} contingency does not replay", res.solver));
                        }
                    }
                    None if *res.rho.numer() != 0 => {
                        return Err(format!("{q} on {r}: ρ {} without contingency", res.rho))
                    }
                    None => {}
                }
            }
            checked += 1;
        }
    }
    Ok(checked)
}
