//! Exact responsibility over the minimal n-lineage.
//!
//! Γ is a contingency for t iff some conjunct c ∋ t survives D − Γ while
//! every conjunct without t is hit, so the minimum |Γ| is, over c ∋ t, the
//! minimum hitting set of {c' \ c : t ∉ c'}. Minimizing the lineage first
//! loses nothing: a redundant conjunct survives Γ iff a minimal conjunct
//! inside it does.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};

use num_rational::Ratio;

use super::{Contingency, ResponsibilityResult, SolverKind};
use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::lineage::{valuations, Dnf, ValuationSet};
use crate::qmodel::Query;
use crate::storage::{DatabaseInstance, TupleId};

type Family = Vec<Vec<TupleId>>;

pub struct ExactSolver {
    minimal: Dnf,
    valuations: ValuationSet,
    cache: RefCell<HashMap<Family, Vec<TupleId>>>,
}

impl ExactSolver {
    /// `db` must already carry the query's overrides.
    pub fn new(q: &Query, db: &DatabaseInstance) -> Result<Self> {
        let vs = valuations(q, db)?;
        Ok(Self::from_valuations(vs, db))
    }

    pub fn from_valuations(vs: ValuationSet, db: &DatabaseInstance) -> Self {
        ExactSolver {
            minimal: vs.lineage().n_lineage(db).remove_redundant(),
            valuations: vs,
            cache: RefCell::new(HashMap::new()),
        }
    }

    pub fn responsibility(&self, db: &DatabaseInstance, t: TupleId, budget: &Budget) -> Result<ResponsibilityResult> {
        super::check_endogenous(db, t)?;
        let conjuncts = self.minimal.conjuncts();
        let (with_t, without_t): (Vec<&Vec<TupleId>>, Vec<&Vec<TupleId>>) =
            conjuncts.iter().partition(|c| c.binary_search(&t).is_ok());
        let mut nodes = 0u64;
        let mut best: Option<Vec<TupleId>> = None;
        for c in with_t {
            let family: Family = without_t
                .iter()
                .map(|c2| c2.iter().copied().filter(|x| c.binary_search(x).is_err()).collect())
                .collect();
            let family = Dnf::new(family).remove_redundant().conjuncts().to_vec();
            if let Some(b) = &best {
                if packing_bound(&family) >= b.len() {
                    continue;
                }
            }
            let mut gamma = Vec::new();
            for comp in split(family) {
                let cached = self.cache.borrow().get(&comp).cloned();
                let sol = match cached {
                    Some(s) => s,
                    None => {
                        let s = min_hitting_set(&comp, &mut nodes, budget.exact_nodes).map_err(|_| {
                            Error::ResourceLimit {
                                what: "exact solver nodes".into(),
                                best: best.as_ref().map(Vec::len),
                            }
                        })?;
                        self.cache.borrow_mut().insert(comp, s.clone());
                        s
                    }
                };
                gamma.extend(sol);
            }
            if best.as_ref().is_none_or(|b| gamma.len() < b.len()) {
                let done = gamma.is_empty();
                best = Some(gamma);
                if done {
                    break;
                }
            }
        }
        let Some(mut gamma) = best else {
            return Ok(ResponsibilityResult::not_a_cause(t, SolverKind::Exact));
        };
        gamma.sort_unstable();
        super::verify_why_so(&self.valuations, t, &gamma)?;
        Ok(ResponsibilityResult {
            tuple: t,
            rho: Ratio::new(1, gamma.len() as u64 + 1),
            contingency: Some(Contingency::new(gamma)),
            solver: SolverKind::Exact,
        })
    }
}

/// Exact responsibility of `t` for a Boolean query.
pub fn exact_responsibility(
    q: &Query,
    db: &DatabaseInstance,
    t: TupleId,
    budget: &Budget,
) -> Result<ResponsibilityResult> {
    let db = db.for_query(q);
    ExactSolver::new(q, &db)?.responsibility(&db, t, budget)
}

/// Number of pairwise disjoint sets found greedily, smallest first.
fn packing_bound(family: &[Vec<TupleId>]) -> usize {
    let mut sets: Vec<&Vec<TupleId>> = family.iter().collect();
    sets.sort_by_key(|s| s.len());
    let mut used = std::collections::HashSet::new();
    sets.into_iter()
        .filter(|s| {
            if s.iter().any(|x| used.contains(x)) {
                return false;
            }
            used.extend(s.iter().copied());
            true
        })
        .count()
}

/// Connected components of a set family (sets sharing an element), each
/// sorted so it can serve as a cache key.
fn split(family: Family) -> Vec<Family> {
    let mut owner: HashMap<TupleId, usize> = HashMap::new();
    let mut parent: Vec<usize> = (0..family.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (i, s) in family.iter().enumerate() {
        for &x in s {
            if let Some(&j) = owner.get(&x) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            } else {
                owner.insert(x, i);
            }
        }
    }
    let mut groups: BTreeMap<usize, Family> = BTreeMap::new();
    for (i, s) in family.into_iter().enumerate() {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(s);
    }
    groups
        .into_values()
        .map(|mut g| {
            g.sort();
            g
        })
        .collect()
}

struct Search<'a> {
    sets: &'a [Vec<u32>],
    forbidden: Vec<bool>,
    chosen: Vec<u32>,
    best: Vec<u32>,
    nodes: &'a mut u64,
    limit: u64,
}

impl Search<'_> {
    fn allowed(&self, s: usize) -> impl Iterator<Item = u32> + '_ {
        self.sets[s].iter().copied().filter(|&x| !self.forbidden[x as usize])
    }

    fn go(&mut self, remaining: &[usize]) -> std::result::Result<(), ()> {
        *self.nodes += 1;
        if *self.nodes > self.limit {
            return Err(());
        }
        if remaining.is_empty() {
            if self.chosen.len() < self.best.len() {
                self.best = self.chosen.clone();
            }
            return Ok(());
        }
        // lower bound: disjoint packing over allowed elements
        let mut order: Vec<(usize, usize)> = remaining.iter().map(|&s| (self.allowed(s).count(), s)).collect();
        if order.iter().any(|&(n, _)| n == 0) {
            return Ok(());
        }
        order.sort_unstable();
        let mut used = vec![false; self.forbidden.len()];
        let mut bound = 0;
        for &(_, s) in &order {
            if self.allowed(s).all(|x| !used[x as usize]) {
                bound += 1;
                for x in self.sets[s].iter() {
                    used[*x as usize] = true;
                }
            }
        }
        if self.chosen.len() + bound >= self.best.len() {
            return Ok(());
        }
        let branch: Vec<u32> = self.allowed(order[0].1).collect();
        let mut banned = Vec::new();
        for x in branch {
            self.chosen.push(x);
            let next: Vec<usize> = remaining
                .iter()
                .copied()
                .filter(|&s| self.sets[s].binary_search(&x).is_err())
                .collect();
            let r = self.go(&next);
            self.chosen.pop();
            if r.is_err() {
                for b in banned {
                    self.forbidden[b as usize] = false;
                }
                return r;
            }
            // later branches exclude x: those sets were explored above
            self.forbidden[x as usize] = true;
            banned.push(x);
        }
        for b in banned {
            self.forbidden[b as usize] = false;
        }
        Ok(())
    }
}

/// Minimum hitting set of a family of nonempty sets.
pub(crate) fn min_hitting_set(
    family: &[Vec<TupleId>],
    nodes: &mut u64,
    limit: u64,
) -> std::result::Result<Vec<TupleId>, ()> {
    let mut universe: Vec<TupleId> = family.iter().flatten().copied().collect();
    universe.sort_unstable();
    universe.dedup();
    let index = |t: &TupleId| universe.binary_search(t).expect("in universe") as u32;
    let sets: Vec<Vec<u32>> = family
        .iter()
        .map(|s| {
            let mut v: Vec<u32> = s.iter().map(index).collect();
            v.sort_unstable();
            v
        })
        .collect();

    // greedy start: most frequent element first
    let mut greedy = Vec::new();
    let mut left: Vec<usize> = (0..sets.len()).collect();
    while !left.is_empty() {
        let mut freq = vec![0usize; universe.len()];
        for &s in &left {
            for &x in &sets[s] {
                freq[x as usize] += 1;
            }
        }
        let x = (0..universe.len())
            .max_by_key(|&x| (freq[x], std::cmp::Reverse(x)))
            .unwrap() as u32;
        greedy.push(x);
        left.retain(|&s| sets[s].binary_search(&x).is_err());
    }

    let mut search = Search {
        sets: &sets,
        forbidden: vec![false; universe.len()],
        chosen: Vec::new(),
        best: greedy,
        nodes,
        limit,
    };
    let all: Vec<usize> = (0..sets.len()).collect();
    search.go(&all)?;
    let mut out: Vec<TupleId> = search.best.iter().map(|&x| universe[x as usize]).collect();
    out.sort_unstable();
    Ok(out)
}
