use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;

use serde_json::{json, Value};

use crate::storage::{DatabaseInstance, TupleId};

/// Positive DNF over tuple variables. Each conjunct is a sorted set of ids;
/// no conjuncts means `false`, a single empty conjunct means `true`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Dnf {
    conjuncts: Vec<Vec<TupleId>>,
}

impl Dnf {
    /// Normalizes: sorts each conjunct, drops duplicates, and orders the
    /// conjuncts. An empty conjunct absorbs everything else.
    pub fn new(conjuncts: impl IntoIterator<Item = Vec<TupleId>>) -> Self {
        let mut set: BTreeSet<Vec<TupleId>> = BTreeSet::new();
        for mut c in conjuncts {
            c.sort_unstable();
            c.dedup();
            if c.is_empty() {
                return Dnf::truth();
            }
            set.insert(c);
        }
        Dnf {
            conjuncts: set.into_iter().collect(),
        }
    }

    pub fn falsity() -> Self {
        Dnf::default()
    }

    pub fn truth() -> Self {
        Dnf {
            conjuncts: vec![Vec::new()],
        }
    }

    pub fn conjuncts(&self) -> &[Vec<TupleId>] {
        &self.conjuncts
    }

    pub fn len(&self) -> usize {
        self.conjuncts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conjuncts.is_empty()
    }

    /// Satisfiable iff there is at least one conjunct.
    pub fn is_satisfiable(&self) -> bool {
        !self.conjuncts.is_empty()
    }

    pub fn is_trivially_true(&self) -> bool {
        self.conjuncts.first().is_some_and(Vec::is_empty)
    }

    pub fn variables(&self) -> BTreeSet<TupleId> {
        self.conjuncts.iter().flatten().copied().collect()
    }

    pub fn evaluate(&self, assignment: impl Fn(TupleId) -> bool) -> bool {
        self.conjuncts.iter().any(|c| c.iter().all(|&t| assignment(t)))
    }

    /// Φ[X_t := true for t ∈ D^x].
    pub fn n_lineage(&self, db: &DatabaseInstance) -> Dnf {
        Dnf::new(
            self.conjuncts
                .iter()
                .map(|c| c.iter().copied().filter(|&t| db.is_endo(t)).collect()),
        )
    }

    /// Drops every conjunct that has a strict subset among the others.
    pub fn remove_redundant(&self) -> Dnf {
        if self.is_trivially_true() || self.conjuncts.len() < 2 {
            return self.clone();
        }
        let all: HashSet<&[TupleId]> = self.conjuncts.iter().map(Vec::as_slice).collect();
        let n = self.conjuncts.len();
        let mut by_size: Vec<&Vec<TupleId>> = self.conjuncts.iter().collect();
        by_size.sort_by_key(|c| c.len());
        let kept: Vec<Vec<TupleId>> = self
            .conjuncts
            .iter()
            .filter(|c| {
                let k = c.len();
                if k < 20 && (1usize << k) <= 8 * n {
                    !has_strict_subset_in(c, &all)
                } else {
                    !by_size.iter().take_while(|d| d.len() < k).any(|d| is_subset(d, c))
                }
            })
            .cloned()
            .collect();
        Dnf { conjuncts: kept }
    }

    pub fn to_json(&self, db: &DatabaseInstance) -> Value {
        let conj: Vec<Vec<String>> = self
            .conjuncts
            .iter()
            .map(|c| c.iter().map(|&t| db.reference(t)).collect())
            .collect();
        json!({ "conjuncts": conj })
    }

    /// `X_{R(a,b)} X_{S(b)} ∨ …`, or `true` / `false`.
    pub fn display(&self, db: &DatabaseInstance) -> String {
        if self.conjuncts.is_empty() {
            return "false".into();
        }
        if self.is_trivially_true() {
            return "true".into();
        }
        let mut out = String::new();
        for (i, c) in self.conjuncts.iter().enumerate() {
            if i > 0 {
                out.push_str(" ∨ ");
            }
            for (j, t) in c.iter().enumerate() {
                if j > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "X_{{{}}}", db.reference(*t));
            }
        }
        out
    }
}

fn is_subset(small: &[TupleId], big: &[TupleId]) -> bool {
    let mut it = big.iter();
    small.iter().all(|x| it.any(|y| y == x))
}

fn has_strict_subset_in(c: &[TupleId], all: &HashSet<&[TupleId]>) -> bool {
    let k = c.len();
    let mut buf = Vec::with_capacity(k);
    // every mask except the full one
    for mask in 0..((1u32 << k) - 1) {
        buf.clear();
        buf.extend((0..k).filter(|i| mask & (1 << i) != 0).map(|i| c[i]));
        if all.contains(buf.as_slice()) {
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ids(v: &[u32]) -> Vec<TupleId> {
        v.iter().map(|&i| TupleId(i)).collect()
    }

    #[test]
    fn simplifies_the_textbook_example() {
        let phi = Dnf::new([ids(&[1, 3]), ids(&[1, 2, 3]), ids(&[1, 4])]);
        assert_eq!(phi.remove_redundant(), Dnf::new([ids(&[1, 3]), ids(&[1, 4])]));
    }

    #[test]
    fn antichains_are_fixpoints() {
        let phi = Dnf::new([ids(&[1, 2]), ids(&[2, 3]), ids(&[3, 1])]);
        assert_eq!(phi.remove_redundant(), phi);
    }

    #[test]
    fn truth_and_falsity() {
        assert!(!Dnf::falsity().is_satisfiable());
        assert!(Dnf::truth().is_satisfiable());
        assert!(Dnf::truth().is_trivially_true());
        assert_eq!(Dnf::new([ids(&[1]), vec![]]), Dnf::truth());
        assert!(Dnf::truth().evaluate(|_| false));
        assert!(!Dnf::falsity().evaluate(|_| true));
    }

    #[test]
    fn large_conjuncts_use_the_pairwise_scan() {
        let big: Vec<u32> = (0..30).collect();
        let phi = Dnf::new([ids(&big), ids(&[3, 7])]);
        assert_eq!(phi.remove_redundant(), Dnf::new([ids(&[3, 7])]));
    }

    proptest! {
        #[test]
        fn redundancy_removal_preserves_the_function(
            conj in prop::collection::vec(prop::collection::btree_set(0u32..10, 0..5), 0..8),
            assignments in prop::collection::vec(0u32..1024, 32),
        ) {
            let phi = Dnf::new(conj.into_iter().map(|c| c.into_iter().map(TupleId).collect()));
            let min = phi.remove_redundant();
            for a in assignments {
                let f = |t: TupleId| a & (1 << t.0) != 0;
                prop_assert_eq!(phi.evaluate(f), min.evaluate(f));
            }
            // antichain
            for c in min.conjuncts() {
                for d in min.conjuncts() {
                    prop_assert!(c == d || !is_subset(c, d));
                }
            }
        }
    }
}
