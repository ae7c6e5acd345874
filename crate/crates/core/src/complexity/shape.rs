//! The part of a query the dichotomy looks at: per atom, its relation, its
//! variable set and its endogenous/exogenous status.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::Serialize;

use crate::qmodel::{Query, Term};
use crate::storage::RelationStatus;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct ShapeAtom {
    pub relation: String,
    pub vars: BTreeSet<String>,
    pub status: RelationStatus,
}

impl ShapeAtom {
    /// Endogenous or mixed: may contribute tuples to a contingency.
    pub fn is_endo_like(&self) -> bool {
        self.status != RelationStatus::Exogenous
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct QueryShape {
    pub atoms: Vec<ShapeAtom>,
}

/// Status of `relation` for `q`: the query's own markers and directives
/// first, then `pattern`, then endogenous.
pub(crate) fn relation_status(q: &Query, pattern: &BTreeMap<String, RelationStatus>, relation: &str) -> RelationStatus {
    match q.relation_override(relation) {
        Some(true) => RelationStatus::Endogenous,
        Some(false) => RelationStatus::Exogenous,
        None => pattern.get(relation).copied().unwrap_or(RelationStatus::Endogenous),
    }
}

impl QueryShape {
    /// Head variables count as constants. Exogenous relations used more
    /// than once are renamed apart (`R#1`, `R#2`, ...): their tuples never
    /// enter a contingency, so the copies behave like distinct relations.
    pub fn from_query(q: &Query, pattern: &BTreeMap<String, RelationStatus>) -> Self {
        let head: HashSet<&str> = q.head.iter().map(String::as_str).collect();
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for a in &q.atoms {
            *counts.entry(a.relation.as_str()).or_default() += 1;
        }
        let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
        let atoms = q
            .atoms
            .iter()
            .map(|a| {
                let status = relation_status(q, pattern, &a.relation);
                let k = seen.entry(a.relation.as_str()).or_default();
                *k += 1;
                let relation = if counts[a.relation.as_str()] > 1 && status == RelationStatus::Exogenous {
                    format!("{}#{}", a.relation, k)
                } else {
                    a.relation.clone()
                };
                ShapeAtom {
                    relation,
                    vars: a
                        .terms
                        .iter()
                        .filter_map(Term::as_var)
                        .filter(|v| !head.contains(v))
                        .map(str::to_string)
                        .collect(),
                    status,
                }
            })
            .collect();
        QueryShape { atoms }
    }

    pub fn variables(&self) -> BTreeSet<String> {
        self.atoms.iter().flat_map(|a| a.vars.iter().cloned()).collect()
    }

    pub fn has_self_join(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.atoms.iter().any(|a| !seen.insert(a.relation.as_str()))
    }

    pub fn index_of(&self, relation: &str) -> Option<usize> {
        self.atoms.iter().position(|a| a.relation == relation)
    }

    /// Mixed atoms become endogenous.
    pub fn with_mixed_as_endo(&self) -> Self {
        let mut out = self.clone();
        for a in &mut out.atoms {
            if a.status == RelationStatus::Mixed {
                a.status = RelationStatus::Endogenous;
            }
        }
        out
    }

    pub fn has_mixed(&self) -> bool {
        self.atoms.iter().any(|a| a.status == RelationStatus::Mixed)
    }

    /// Identity of the shape up to atom order.
    pub(crate) fn key(&self) -> Vec<(String, Vec<String>, RelationStatus)> {
        let mut k: Vec<_> = self
            .atoms
            .iter()
            .map(|a| (a.relation.clone(), a.vars.iter().cloned().collect(), a.status))
            .collect();
        k.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
        k
    }
}

impl fmt::Display for QueryShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(&a.relation)?;
            match a.status {
                RelationStatus::Endogenous => f.write_str("^n")?,
                RelationStatus::Exogenous => f.write_str("^x")?,
                RelationStatus::Mixed => {}
            }
            let vars: Vec<&str> = a.vars.iter().map(String::as_str).collect();
            write!(f, "({})", vars.join(","))?;
        }
        Ok(())
    }
}

/// Vertices are atoms; each variable x spans sg(x), the atoms using it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DualHypergraph {
    pub vertices: Vec<usize>,
    pub edges: BTreeMap<String, BTreeSet<usize>>,
}

pub fn dual_hypergraph(shape: &QueryShape) -> DualHypergraph {
    let mut edges: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
    for (i, a) in shape.atoms.iter().enumerate() {
        for v in &a.vars {
            edges.entry(v.clone()).or_default().insert(i);
        }
    }
    DualHypergraph {
        vertices: (0..shape.atoms.len()).collect(),
        edges,
    }
}

/// True iff `order` is a permutation of the atoms in which every sg(x) is
/// a consecutive run.
pub fn is_linear_order(shape: &QueryShape, order: &[usize]) -> bool {
    let m = shape.atoms.len();
    let mut pos = vec![usize::MAX; m];
    for (p, &i) in order.iter().enumerate() {
        if i >= m || pos[i] != usize::MAX {
            return false;
        }
        pos[i] = p;
    }
    if order.len() != m {
        return false;
    }
    dual_hypergraph(shape).edges.values().all(|sg| {
        let ps: Vec<usize> = sg.iter().map(|&i| pos[i]).collect();
        let (lo, hi) = (ps.iter().min().unwrap(), ps.iter().max().unwrap());
        hi - lo + 1 == ps.len()
    })
}

/// A linear atom order if one exists. Backtracking: the next atom must
/// contain every variable that is already started but not finished; dead
/// prefixes are memoized by their atom set. Status is ignored.
///
/// Queries here have a handful of atoms; a PQ-tree test for the
/// consecutive-ones property would make this linear-time if ever needed.
pub fn is_linear(shape: &QueryShape) -> Option<Vec<usize>> {
    let m = shape.atoms.len();
    if m > 64 {
        return None;
    }
    let full: u64 = if m == 64 { u64::MAX } else { (1u64 << m) - 1 };
    let edges: Vec<u64> = dual_hypergraph(shape)
        .edges
        .values()
        .map(|sg| sg.iter().fold(0u64, |acc, &i| acc | (1 << i)))
        .collect();
    let atom_edges: Vec<Vec<usize>> = (0..m)
        .map(|i| (0..edges.len()).filter(|&e| edges[e] & (1 << i) != 0).collect())
        .collect();

    fn go(
        placed: u64,
        full: u64,
        edges: &[u64],
        atom_edges: &[Vec<usize>],
        order: &mut Vec<usize>,
        dead: &mut HashSet<u64>,
    ) -> bool {
        if placed == full {
            return true;
        }
        if dead.contains(&placed) {
            return false;
        }
        let open: Vec<usize> = (0..edges.len())
            .filter(|&e| edges[e] & placed != 0 && edges[e] & !placed != 0)
            .collect();
        for i in 0..atom_edges.len() {
            if placed & (1 << i) != 0 || !open.iter().all(|e| atom_edges[i].contains(e)) {
                continue;
            }
            order.push(i);
            if go(placed | (1 << i), full, edges, atom_edges, order, dead) {
                return true;
            }
            order.pop();
        }
        dead.insert(placed);
        false
    }

    let mut order = Vec::with_capacity(m);
    go(0, full, &edges, &atom_edges, &mut order, &mut HashSet::new()).then_some(order)
}
