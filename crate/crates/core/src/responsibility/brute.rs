//! Brute-force responsibility: smallest Γ first, checked by replaying the
//! valuations. Used as the oracle for the other solvers.

use num_rational::Ratio;

use super::{Contingency, ResponsibilityResult, SolverKind};
use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::lineage::{valuations, ValuationSet};
use crate::qmodel::Query;
use crate::storage::{DatabaseInstance, TupleId};

/// Enumerates Γ by increasing size among the endogenous tuples that occur
/// in a valuation without t. Dropping any other tuple from a contingency
/// keeps it one: those tuples only destroy valuations through t.
pub fn brute_force_with(
    vs: &ValuationSet,
    db: &DatabaseInstance,
    t: TupleId,
    budget: &Budget,
) -> Result<ResponsibilityResult> {
    super::check_endogenous(db, t)?;
    let mut relevant: Vec<TupleId> = vs
        .valuations
        .iter()
        .filter(|v| !v.atoms.contains(&t))
        .flat_map(|v| v.atoms.iter().copied())
        .filter(|&x| db.is_endo(x))
        .collect();
    relevant.sort_unstable();
    relevant.dedup();
    let n = relevant.len();
    if n > budget.brute_tuples.min(63) {
        return Err(Error::ResourceLimit {
            what: format!("brute force over {n} endogenous tuples"),
            best: None,
        });
    }
    // per valuation: bits of the relevant tuples it uses, and whether it uses t
    let masks: Vec<(u64, bool)> = vs
        .valuations
        .iter()
        .map(|v| {
            let bits = v
                .atoms
                .iter()
                .filter_map(|a| relevant.binary_search(a).ok())
                .fold(0u64, |m, i| m | (1 << i));
            (bits, v.atoms.contains(&t))
        })
        .collect();
    for size in 0..=n {
        let mut found = None;
        for_each_subset(n, size, |gamma| {
            let with_t = masks.iter().any(|&(m, _)| m & gamma == 0);
            let without_t = masks.iter().any(|&(m, uses_t)| !uses_t && m & gamma == 0);
            if with_t && !without_t {
                found = Some(gamma);
                true
            } else {
                false
            }
        });
        if let Some(gamma) = found {
            let ids: Vec<TupleId> = (0..n).filter(|i| gamma & (1 << i) != 0).map(|i| relevant[i]).collect();
            return Ok(ResponsibilityResult {
                tuple: t,
                rho: Ratio::new(1, ids.len() as u64 + 1),
                contingency: Some(Contingency::new(ids)),
                solver: SolverKind::Brute,
            });
        }
    }
    Ok(ResponsibilityResult::not_a_cause(t, SolverKind::Brute))
}

/// Calls `f` on every `k`-subset of `0..n` as a bitmask, in increasing
/// numeric order, until it returns true.
fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(u64) -> bool) {
    if k > n {
        return;
    }
    if k == 0 {
        f(0);
        return;
    }
    let mut s: u64 = (1 << k) - 1;
    let limit: u64 = 1 << n;
    while s < limit {
        if f(s) {
            return;
        }
        // Gosper's hack
        let c = s & s.wrapping_neg();
        let r = s + c;
        s = (((r ^ s) >> 2) / c) | r;
    }
}

/// Brute-force responsibility of `t` for a Boolean query.
pub fn brute_force_responsibility(
    q: &Query,
    db: &DatabaseInstance,
    t: TupleId,
    budget: &Budget,
) -> Result<ResponsibilityResult> {
    let db = db.for_query(q);
    let vs = valuations(q, &db)?;
    brute_force_with(&vs, &db, t, budget)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_in_order() {
        let mut seen = Vec::new();
        for_each_subset(4, 2, |s| {
            seen.push(s);
            false
        });
        assert_eq!(seen, [0b0011, 0b0101, 0b0110, 0b1001, 0b1010, 0b1100]);
        let mut count = 0;
        for_each_subset(3, 0, |_| {
            count += 1;
            false
        });
        assert_eq!(count, 1);
    }
}
