//! Actual and counterfactual causes for answers (Why-So) and non-answers
//! (Why-No), plus a two-stratum Datalog backend.

mod datalog;
mod eval;
mod generate;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use serde_json::{json, Value};

pub use datalog::{DatalogProgram, Literal, Pred, ProgramAtom, Rule, RuleOrigin};
pub use eval::evaluate_program;
pub use generate::{generate_program, generate_program_with_budget, pattern_of};

use crate::error::{Error, Result};
use crate::lineage::{valuations, Dnf};
use crate::qmodel::Query;
use crate::storage::{DatabaseInstance, RelationStatus, TupleId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CauseKind {
    Counterfactual,
    Actual,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CauseReport {
    pub tuple: TupleId,
    pub kind: CauseKind,
    /// A non-redundant n-lineage conjunct containing the tuple.
    pub witness: Vec<TupleId>,
}

impl CauseReport {
    pub fn to_json(&self, db: &DatabaseInstance) -> Value {
        json!({
            "tuple": db.reference(self.tuple),
            "kind": self.kind,
            "witness": self.witness.iter().map(|&t| db.reference(t)).collect::<Vec<_>>(),
        })
    }
}

/// Causes read off a minimized n-lineage: the variables of its conjuncts.
/// `counterfactual` gets the tuple and the number of conjuncts holding it.
fn causes_of(minimal: &Dnf, counterfactual: impl Fn(TupleId, usize) -> bool) -> Vec<CauseReport> {
    if minimal.is_trivially_true() {
        return Vec::new();
    }
    let mut first: BTreeMap<TupleId, (usize, usize)> = BTreeMap::new();
    for (i, c) in minimal.conjuncts().iter().enumerate() {
        for &t in c {
            first.entry(t).or_insert((i, 0)).1 += 1;
        }
    }
    first
        .into_iter()
        .map(|(t, (i, count))| CauseReport {
            tuple: t,
            kind: if counterfactual(t, count) {
                CauseKind::Counterfactual
            } else {
                CauseKind::Actual
            },
            witness: minimal.conjuncts()[i].clone(),
        })
        .collect()
}

/// Minimal n-lineage of a Boolean query (overrides from the query applied).
pub fn minimal_n_lineage(q: &Query, db: &DatabaseInstance) -> Result<Dnf> {
    let db = db.for_query(q);
    let vs = valuations(q, &db)?;
    Ok(vs.lineage().n_lineage(&db).remove_redundant())
}

/// Why-So causes: the endogenous tuples of the minimized n-lineage.
pub fn why_so_causes(q: &Query, db: &DatabaseInstance) -> Result<Vec<CauseReport>> {
    let minimal = minimal_n_lineage(q, db)?;
    if !minimal.is_satisfiable() {
        return Err(Error::NotAnAnswer);
    }
    let total = minimal.len();
    // counterfactual iff every remaining derivation needs the tuple
    Ok(causes_of(&minimal, |_, count| count == total))
}

/// Why-No causes among `candidates` for a non-answer over `db_exo`.
/// Reported ids refer to `candidates`.
pub fn why_no_causes(q: &Query, db_exo: &DatabaseInstance, candidates: &DatabaseInstance) -> Result<Vec<CauseReport>> {
    q.require_boolean()?;
    let (all, map) = db_exo.with_candidates(candidates)?;
    let back: BTreeMap<TupleId, TupleId> = map.iter().enumerate().map(|(i, &c)| (c, TupleId(i as u32))).collect();
    let minimal = valuations(q, &all)?.lineage().n_lineage(&all).remove_redundant();
    if minimal.is_trivially_true() {
        return Err(Error::IsAnAnswer);
    }
    let singletons: BTreeSet<TupleId> = minimal
        .conjuncts()
        .iter()
        .filter(|c| c.len() == 1)
        .map(|c| c[0])
        .collect();
    let mut out = causes_of(&minimal, |t, _| singletons.contains(&t));
    for r in &mut out {
        r.tuple = back[&r.tuple];
        for w in &mut r.witness {
            *w = back[w];
        }
        r.witness.sort_unstable();
    }
    Ok(out)
}

/// Causes per relation by one join per relation, valid when every relation
/// is fully endogenous or exogenous and no endogenous relation repeats.
pub fn conjunctive_fast_path(q: &Query, db: &DatabaseInstance) -> Result<BTreeMap<String, BTreeSet<TupleId>>> {
    q.require_boolean()?;
    let db = db.for_query(q);
    let mut out: BTreeMap<String, BTreeSet<TupleId>> = BTreeMap::new();
    let mut endo_atoms = Vec::new();
    for (i, atom) in q.atoms.iter().enumerate() {
        match db.relation_status(&atom.relation) {
            RelationStatus::Mixed => {
                return Err(Error::NotApplicable(format!(
                    "relation `{}` mixes endogenous and exogenous tuples",
                    atom.relation
                )))
            }
            RelationStatus::Exogenous if !db.relation(&atom.relation).is_empty() => {}
            _ => {
                if out.insert(atom.relation.clone(), BTreeSet::new()).is_some() {
                    return Err(Error::NotApplicable(format!(
                        "endogenous relation `{}` occurs more than once",
                        atom.relation
                    )));
                }
                endo_atoms.push(i);
            }
        }
    }
    for v in valuations(q, &db)?.valuations {
        for &i in &endo_atoms {
            out.get_mut(&q.atoms[i].relation)
                .expect("endogenous relation")
                .insert(v.atoms[i]);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmodel::parse_query;

    fn chain(exo_a4: bool) -> DatabaseInstance {
        let mut rows: Vec<(&str, Vec<&str>, bool)> = Vec::new();
        for r in [["a1", "a5"], ["a2", "a1"], ["a3", "a3"], ["a4", "a3"], ["a4", "a2"]] {
            rows.push(("R", r.to_vec(), !(exo_a4 && r[0] == "a4")));
        }
        for s in ["a1", "a2", "a3", "a4", "a6"] {
            rows.push(("S", vec![s], true));
        }
        DatabaseInstance::from_rows(rows).unwrap()
    }

    fn names(db: &DatabaseInstance, causes: &[CauseReport]) -> Vec<(String, CauseKind)> {
        causes.iter().map(|c| (db.reference(c.tuple), c.kind)).collect()
    }

    #[test]
    fn answer_a2_has_two_counterfactual_causes() {
        let db = chain(false);
        let q = parse_query("q :- R('a2',y), S(y).").unwrap();
        let causes = why_so_causes(&q, &db).unwrap();
        assert_eq!(
            names(&db, &causes),
            [
                ("R(a2,a1)".to_string(), CauseKind::Counterfactual),
                ("S(a1)".to_string(), CauseKind::Counterfactual)
            ]
        );
    }

    #[test]
    fn answer_a4_has_four_actual_causes() {
        let db = chain(false);
        let q = parse_query("q :- R('a4',y), S(y).").unwrap();
        let causes = why_so_causes(&q, &db).unwrap();
        assert_eq!(causes.len(), 4);
        assert!(causes.iter().all(|c| c.kind == CauseKind::Actual));
    }

    #[test]
    fn exogenous_context_removes_a_cause() {
        let db = chain(true);
        let q = parse_query("q :- R(x,'a3'), S('a3').").unwrap();
        let causes = why_so_causes(&q, &db).unwrap();
        assert_eq!(names(&db, &causes), [("S(a3)".to_string(), CauseKind::Counterfactual)]);
        // without the exogenous R(a4,a3), R(a3,a3) becomes a cause
        let mut rows: Vec<(&str, Vec<crate::value::Const>, bool)> = Vec::new();
        for t in db.tuples() {
            if db.reference(t.id) != "R(a4,a3)" {
                rows.push((t.relation.as_str(), t.values.clone(), t.endo));
            }
        }
        let smaller = DatabaseInstance::from_rows(rows).unwrap();
        let causes = why_so_causes(&q, &smaller).unwrap();
        assert_eq!(causes.len(), 2);
    }

    #[test]
    fn not_an_answer_and_all_exogenous() {
        let db = chain(false);
        let q = parse_query("q :- R('a1',y), S(y).").unwrap();
        assert!(matches!(why_so_causes(&q, &db), Err(Error::NotAnAnswer)));
        let q = parse_query("@exogenous R,S\nq :- R('a2',y), S(y).").unwrap();
        assert!(why_so_causes(&q, &db).unwrap().is_empty());
    }

    #[test]
    fn why_no_candidates() {
        let exo = DatabaseInstance::from_rows([("R", vec!["a", "b"], false)]).unwrap();
        let mut cands = DatabaseInstance::from_rows([("S", vec!["b"], true), ("S", vec!["c"], true)]).unwrap();
        cands.ensure_relation("R", 2).unwrap();
        let q = parse_query("q :- R(x,y), S(y).").unwrap();
        let causes = why_no_causes(&q, &exo, &cands).unwrap();
        assert_eq!(
            names(&cands, &causes),
            [("S(b)".to_string(), CauseKind::Counterfactual)]
        );
        let empty = DatabaseInstance::new(cands.schema().clone());
        assert!(why_no_causes(&q, &exo, &empty).unwrap().is_empty());
        let answer = DatabaseInstance::from_rows([("R", vec!["a", "b"], false), ("S", vec!["b"], false)]).unwrap();
        assert!(matches!(why_no_causes(&q, &answer, &empty), Err(Error::IsAnAnswer)));
    }

    #[test]
    fn fast_path_matches_and_refuses_mixed() {
        let db = chain(false);
        let q = parse_query("q :- R('a4',y), S(y).").unwrap();
        let fast = conjunctive_fast_path(&q, &db).unwrap();
        let mut slow: BTreeMap<String, BTreeSet<TupleId>> = BTreeMap::new();
        for c in why_so_causes(&q, &db).unwrap() {
            slow.entry(db.tuple(c.tuple).relation.clone())
                .or_default()
                .insert(c.tuple);
        }
        assert_eq!(fast, slow);
        assert!(matches!(
            conjunctive_fast_path(&q, &chain(true)),
            Err(Error::NotApplicable(_))
        ));
        let sj = parse_query("q :- S(x), R(x,y), S(y).").unwrap();
        assert!(matches!(conjunctive_fast_path(&sj, &db), Err(Error::NotApplicable(_))));
        let mut empty = DatabaseInstance::default();
        empty.ensure_relation("R", 2).unwrap();
        empty.ensure_relation("S", 1).unwrap();
        let out = conjunctive_fast_path(&q, &empty).unwrap();
        assert!(out.values().all(BTreeSet::is_empty));
        assert_eq!(out.len(), 2);
    }
}
