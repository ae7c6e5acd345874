//! Bottom-up evaluation of non-recursive stratified programs.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::datalog::{DatalogProgram, Literal, Pred, ProgramAtom, Rule};
use crate::error::{Error, Result};
use crate::lineage::join::{join, JoinInput};
use crate::qmodel::Term;
use crate::storage::{DatabaseInstance, TupleId};
use crate::value::Const;

/// Runs the program stratum by stratum and returns the derived `C_R`
/// facts as tuple ids of `db`, keyed by relation. Every relation with a
/// cause rule appears, possibly with an empty set.
pub fn evaluate_program(
    program: &DatalogProgram,
    db: &DatabaseInstance,
) -> Result<BTreeMap<String, BTreeSet<TupleId>>> {
    for rule in &program.rules {
        for l in &rule.body {
            if let Literal::Pos { atom } | Literal::Neg { atom } = l {
                if let Pred::Edb { relation, .. } = &atom.pred {
                    if !db.schema().contains(relation) {
                        return Err(Error::UnknownProgramRelation(relation.clone()));
                    }
                }
            }
        }
    }

    let mut idb: HashMap<usize, BTreeSet<Vec<Const>>> = HashMap::new();
    let mut causes: BTreeMap<String, BTreeSet<TupleId>> = BTreeMap::new();
    for rule in &program.rules {
        if let Pred::Cause { relation } = &rule.head.pred {
            causes.entry(relation.clone()).or_default();
        }
    }
    for k in 1..=program.strata() {
        // heads of one stratum never feed its own bodies
        let mut derived: Vec<(Pred, Vec<Const>)> = Vec::new();
        for rule in program.stratum(k) {
            for fact in fire(rule, db, &idb)? {
                derived.push((rule.head.pred.clone(), fact));
            }
        }
        for (pred, fact) in derived {
            match pred {
                Pred::Blocker { index } => {
                    idb.entry(index).or_default().insert(fact);
                }
                Pred::Cause { relation } => {
                    if let Some(id) = db.find(&relation, &fact) {
                        causes.entry(relation).or_default().insert(id);
                    }
                }
                Pred::Edb { relation, .. } => {
                    return Err(Error::NotApplicable(format!(
                        "rule head `{relation}` is an input relation"
                    )))
                }
            }
        }
    }
    Ok(causes)
}

fn fire(rule: &Rule, db: &DatabaseInstance, idb: &HashMap<usize, BTreeSet<Vec<Const>>>) -> Result<Vec<Vec<Const>>> {
    let positive: Vec<&ProgramAtom> = rule
        .body
        .iter()
        .filter_map(|l| match l {
            Literal::Pos { atom } => Some(atom),
            _ => None,
        })
        .collect();
    let mut vars: Vec<String> = Vec::new();
    for atom in &positive {
        for t in &atom.terms {
            if let Term::Var(v) = t {
                if !vars.contains(v) {
                    vars.push(v.clone());
                }
            }
        }
    }
    let empty = BTreeSet::new();
    let inputs: Vec<JoinInput<'_>> = positive
        .iter()
        .map(|atom| JoinInput {
            terms: &atom.terms,
            rows: match &atom.pred {
                Pred::Edb { relation, endo } => db
                    .relation(relation)
                    .iter()
                    .filter(|&&id| db.is_endo(id) == *endo)
                    .map(|&id| (id.0, db.tuple(id).values.as_slice()))
                    .collect(),
                Pred::Blocker { index } => idb
                    .get(index)
                    .unwrap_or(&empty)
                    .iter()
                    .map(|v| (0, v.as_slice()))
                    .collect(),
                Pred::Cause { .. } => Vec::new(),
            },
        })
        .collect();
    let slots: HashMap<&str, usize> = vars.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
    let value = |binding: &[Const], t: &Term| -> Result<Const> {
        match t {
            Term::Const(c) => Ok(c.clone()),
            Term::Var(v) => slots
                .get(v.as_str())
                .map(|&i| binding[i].clone())
                .ok_or_else(|| Error::NotApplicable(format!("unsafe rule: `{v}` is not bound"))),
        }
    };

    let mut out = Vec::new();
    'rows: for row in join(&inputs, &vars) {
        for l in &rule.body {
            match l {
                Literal::Pos { .. } => {}
                Literal::Neq { left, right } => {
                    if value(&row.binding, left)? == value(&row.binding, right)? {
                        continue 'rows;
                    }
                }
                Literal::Neg { atom } => {
                    let vals = atom
                        .terms
                        .iter()
                        .map(|t| value(&row.binding, t))
                        .collect::<Result<Vec<_>>>()?;
                    let present = match &atom.pred {
                        Pred::Blocker { index } => idb.get(index).is_some_and(|s| s.contains(&vals)),
                        Pred::Edb { relation, endo } => {
                            db.find(relation, &vals).is_some_and(|id| db.is_endo(id) == *endo)
                        }
                        Pred::Cause { .. } => false,
                    };
                    if present {
                        continue 'rows;
                    }
                }
            }
        }
        out.push(
            rule.head
                .terms
                .iter()
                .map(|t| value(&row.binding, t))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    Ok(out)
}
