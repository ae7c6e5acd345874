//! Naive generator of potentially missing tuples for Why-No questions.

use std::collections::BTreeSet;

use super::DatabaseInstance;
use crate::error::Result;
use crate::qmodel::{Query, Term};
use crate::value::Const;

#[derive(Debug, Clone)]
pub struct CandidatePool {
    pub pool: DatabaseInstance,
    /// More candidates existed than `limit` allowed.
    pub truncated: bool,
}

/// Every tuple that agrees with some atom of `q` on its constant positions
/// and takes its other values from Adom(D) ∪ constants(q), minus the tuples
/// already in `db`. Output is in lexicographic `(relation, values)` order and
/// cut at `limit`; every candidate is endogenous.
pub fn generate_whyno_candidates(db: &DatabaseInstance, q: &Query, limit: usize) -> Result<CandidatePool> {
    q.require_boolean()?;
    let mut domain = db.active_domain();
    domain.extend(q.constants());
    let domain: Vec<Const> = domain.into_iter().collect();

    let mut pool = DatabaseInstance::new(db.schema().clone());
    for atom in &q.atoms {
        pool.ensure_relation(&atom.relation, atom.terms.len())?;
    }
    pool.mark_candidate_pool();

    // the first `limit + 1` of each atom's (sorted) stream suffice to find
    // the global first `limit`
    let mut found: BTreeSet<(String, Vec<Const>)> = BTreeSet::new();
    for atom in &q.atoms {
        let free: Vec<usize> = atom
            .terms
            .iter()
            .enumerate()
            .filter(|(_, t)| matches!(t, Term::Var(_)))
            .map(|(i, _)| i)
            .collect();
        if !free.is_empty() && domain.is_empty() {
            continue;
        }
        let mut values: Vec<Const> = atom
            .terms
            .iter()
            .map(|t| match t {
                Term::Const(c) => c.clone(),
                Term::Var(_) => domain[0].clone(),
            })
            .collect();
        let mut digits = vec![0usize; free.len()];
        let mut taken = 0;
        'grid: loop {
            if db.find(&atom.relation, &values).is_none() && found.insert((atom.relation.clone(), values.clone())) {
                taken += 1;
            }
            if taken > limit {
                break;
            }
            // odometer, last free position fastest
            let mut k = free.len();
            loop {
                if k == 0 {
                    break 'grid;
                }
                k -= 1;
                digits[k] += 1;
                if digits[k] < domain.len() {
                    values[free[k]] = domain[digits[k]].clone();
                    continue 'grid;
                }
                digits[k] = 0;
                values[free[k]] = domain[0].clone();
            }
        }
    }

    let truncated = found.len() > limit;
    for (rel, values) in found.into_iter().take(limit) {
        pool.insert(&rel, values, true)?;
    }
    Ok(CandidatePool { pool, truncated })
}
