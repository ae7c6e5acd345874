//! Why-No responsibility: the smallest set of further insertions after
//! which inserting t makes the query true. A valuation has at most m
//! distinct tuples, so |Γ| ≤ m − 1 and enumeration is polynomial.

use num_rational::Ratio;

use super::{Contingency, ResponsibilityResult, SolverKind};
use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::lineage::valuations;
use crate::qmodel::Query;
use crate::storage::{DatabaseInstance, TupleId};

/// Why-No scoring over a fixed exogenous database and candidate pool.
pub struct WhyNoSolver {
    /// Candidate ids (in the candidates instance) used by each valuation
    /// of D^x ∪ candidates, sorted.
    uses: Vec<Vec<TupleId>>,
    m: usize,
    candidates: usize,
}

impl WhyNoSolver {
    pub fn new(q: &Query, db_exo: &DatabaseInstance, candidates: &DatabaseInstance) -> Result<Self> {
        q.require_boolean()?;
        let (all, map) = db_exo.with_candidates(candidates)?;
        let back: std::collections::HashMap<TupleId, TupleId> =
            map.iter().enumerate().map(|(i, &c)| (c, TupleId(i as u32))).collect();
        let vs = valuations(q, &all)?;
        let mut uses: Vec<Vec<TupleId>> = vs
            .valuations
            .iter()
            .map(|v| {
                let mut c: Vec<TupleId> = v.atoms.iter().filter_map(|a| back.get(a).copied()).collect();
                c.sort_unstable();
                c.dedup();
                c
            })
            .collect();
        if uses.iter().any(Vec::is_empty) {
            return Err(Error::IsAnAnswer);
        }
        uses.sort();
        uses.dedup();
        Ok(WhyNoSolver {
            uses,
            m: q.atoms.len(),
            candidates: candidates.len(),
        })
    }

    fn holds(&self, inserted: &[TupleId]) -> bool {
        self.uses
            .iter()
            .any(|u| u.iter().all(|x| inserted.binary_search(x).is_ok()))
    }

    /// `t` is a candidate id.
    pub fn responsibility(&self, t: TupleId, budget: &Budget) -> Result<ResponsibilityResult> {
        if t.index() >= self.candidates {
            return Err(Error::NotEndogenous(format!("#{}", t.0)));
        }
        let mut pool: Vec<TupleId> = self
            .uses
            .iter()
            .filter(|u| u.contains(&t))
            .flatten()
            .copied()
            .filter(|&x| x != t)
            .collect();
        pool.sort_unstable();
        pool.dedup();
        let mut steps = 0u64;
        for size in 0..self.m.min(pool.len() + 1) {
            let mut pick: Vec<usize> = (0..size).collect();
            loop {
                steps += 1;
                if steps > budget.exact_nodes {
                    return Err(Error::limit("why-no subsets"));
                }
                let gamma: Vec<TupleId> = pick.iter().map(|&i| pool[i]).collect();
                let mut with_t = gamma.clone();
                with_t.push(t);
                with_t.sort_unstable();
                if !self.holds(&gamma) && self.holds(&with_t) {
                    return Ok(ResponsibilityResult {
                        tuple: t,
                        rho: Ratio::new(1, gamma.len() as u64 + 1),
                        contingency: Some(Contingency::new(gamma)),
                        solver: SolverKind::WhynoEnum,
                    });
                }
                if !next_combination(&mut pick, pool.len()) {
                    break;
                }
            }
        }
        Ok(ResponsibilityResult::not_a_cause(t, SolverKind::WhynoEnum))
    }
}

/// Advances a sorted k-combination of `0..n`; false when exhausted.
fn next_combination(pick: &mut [usize], n: usize) -> bool {
    let k = pick.len();
    for i in (0..k).rev() {
        if pick[i] < n - k + i {
            pick[i] += 1;
            for j in i + 1..k {
                pick[j] = pick[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Why-No responsibility of candidate `t`.
pub fn whyno_responsibility(
    q: &Query,
    db_exo: &DatabaseInstance,
    candidates: &DatabaseInstance,
    t: TupleId,
    budget: &Budget,
) -> Result<ResponsibilityResult> {
    WhyNoSolver::new(q, db_exo, candidates)?.responsibility(t, budget)
}
