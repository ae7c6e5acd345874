//! Static classification of the responsibility problem of a query: PTIME
//! (the query weakens to a linear one) or NP-hard (it rewrites to one of
//! the three canonical hard queries), with replayable certificates.
//!
//! Canonical hard queries, up to renaming:
//! - h1: `A^n(x), B^n(y), C^n(z), W(x,y,z)`
//! - h2: `R^n(x,y), S^n(y,z), T^n(z,x)`
//! - h3: `A^n(x), B^n(y), C^n(z), R(x,y), S(y,z), T(z,x)`
//!
//! Relations holding both endogenous and exogenous tuples count as
//! endogenous for hardness; they never dominate another atom.

mod rewrite;
mod shape;
mod weakening;

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::Serialize;

pub use rewrite::{apply_rewrite, rewrite_steps, RewriteStep};
pub use shape::{dual_hypergraph, is_linear, is_linear_order, DualHypergraph, QueryShape, ShapeAtom};
pub use weakening::{apply_weakening, weakening_closure, weakening_closure_pinned, Weakening, WeakeningStep};

pub(crate) use shape::relation_status;

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::qmodel::{Query, Term};
use crate::storage::{DatabaseInstance, RelationStatus};
use weakening::WeakLinearity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Canonical {
    H1,
    H2,
    H3,
    /// `R^n(x), S(x,y), R^n(y)`: hard despite (because of) the self-join.
    SelfJoinPath,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Verdict {
    Ptime {
        weakening: Vec<WeakeningStep>,
        /// Atoms of the weakened query in linear order.
        order: Vec<String>,
        #[serde(skip_serializing_if = "Vec::is_empty")]
        notes: Vec<String>,
    },
    NpHard {
        chain: Vec<RewriteStep>,
        terminal: Canonical,
        #[serde(skip_serializing_if = "Vec::is_empty")]
        notes: Vec<String>,
    },
    Open {
        note: String,
    },
}

impl Verdict {
    pub fn kind(&self) -> &'static str {
        match self {
            Verdict::Ptime { .. } => "ptime",
            Verdict::NpHard { .. } => "np-hard",
            Verdict::Open { .. } => "open",
        }
    }

    pub fn is_ptime(&self) -> bool {
        matches!(self, Verdict::Ptime { .. })
    }

    /// Replays the certificate against `q`.
    pub fn verify(&self, q: &Query, pattern: &BTreeMap<String, RelationStatus>) -> Result<()> {
        let shape = QueryShape::from_query(q, pattern);
        let bad = |m: String| Err(Error::InvalidWitness(m));
        match self {
            Verdict::Open { .. } => Ok(()),
            Verdict::Ptime { weakening, order, .. } => {
                let mut s = shape;
                for step in weakening {
                    s = apply_weakening(&s, step).map_err(Error::InvalidWitness)?;
                }
                let idx: Option<Vec<usize>> = order.iter().map(|r| s.index_of(r)).collect();
                match idx {
                    Some(idx) if is_linear_order(&s, &idx) => Ok(()),
                    _ => bad(format!("{order:?} is not a linear order of {s}")),
                }
            }
            Verdict::NpHard { chain, terminal, .. } => {
                if *terminal == Canonical::SelfJoinPath {
                    return if chain.is_empty() && self_join_path(q, &shape) {
                        Ok(())
                    } else {
                        bad(format!("{q} is not the self-join path pattern"))
                    };
                }
                let mut s = shape.with_mixed_as_endo();
                if s.has_self_join() {
                    return bad("rewriting needs a query without self-joins".into());
                }
                for step in chain {
                    s = apply_rewrite(&s, step).map_err(Error::InvalidWitness)?;
                }
                if is_isomorphic_canonical(&s) == Some(*terminal) {
                    Ok(())
                } else {
                    bad(format!("chain ends at {s}, not {terminal:?}"))
                }
            }
        }
    }
}

/// Which canonical hard query `shape` is, up to renaming.
pub fn is_isomorphic_canonical(shape: &QueryShape) -> Option<Canonical> {
    if shape.variables().len() != 3 {
        return None;
    }
    let unary: Vec<&ShapeAtom> = shape.atoms.iter().filter(|a| a.vars.len() == 1).collect();
    let binary: Vec<&ShapeAtom> = shape.atoms.iter().filter(|a| a.vars.len() == 2).collect();
    let ternary = shape.atoms.iter().filter(|a| a.vars.len() == 3).count();
    if unary.len() + binary.len() + ternary != shape.atoms.len() {
        return None;
    }
    let distinct = |atoms: &[&ShapeAtom]| atoms.iter().map(|a| &a.vars).collect::<HashSet<_>>().len() == atoms.len();
    let units_ok = unary.len() == 3 && distinct(&unary) && unary.iter().all(|a| a.is_endo_like());
    match (unary.len(), binary.len(), ternary) {
        (0, 3, 0) if distinct(&binary) && binary.iter().all(|a| a.is_endo_like()) => Some(Canonical::H2),
        (3, 0, 1) if units_ok => Some(Canonical::H1),
        (3, 3, 0) if units_ok && distinct(&binary) => Some(Canonical::H3),
        _ => None,
    }
}

/// `R(x), S(x,y), R(y)` with R endogenous (or mixed), x ≠ y.
fn self_join_path(q: &Query, shape: &QueryShape) -> bool {
    if q.atoms.len() != 3 || shape.atoms.len() != 3 {
        return false;
    }
    for s in 0..3 {
        let (i, j) = match s {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let (a, b, c) = (&q.atoms[i], &q.atoms[j], &q.atoms[s]);
        let unary_var = |k: usize| match q.atoms[k].terms.as_slice() {
            [Term::Var(v)] if shape.atoms[k].vars.contains(v) => Some(v.clone()),
            _ => None,
        };
        let (Some(x), Some(y)) = (unary_var(i), unary_var(j)) else {
            continue;
        };
        if a.relation == b.relation
            && c.relation != a.relation
            && x != y
            && shape.atoms[i].is_endo_like()
            && c.terms.len() == 2
            && shape.atoms[s].vars == BTreeSet::from([x, y])
        {
            return true;
        }
    }
    false
}

/// Classifies `q` (head variables count as constants) under the given
/// relation statuses.
pub fn classify(q: &Query, pattern: &BTreeMap<String, RelationStatus>, budget: &Budget) -> Result<Verdict> {
    let shape = QueryShape::from_query(q, pattern);
    if shape.has_self_join() {
        if self_join_path(q, &shape) {
            return Ok(Verdict::NpHard {
                chain: Vec::new(),
                terminal: Canonical::SelfJoinPath,
                notes: Vec::new(),
            });
        }
        return Ok(Verdict::Open {
            note: "an endogenous relation occurs more than once; no dichotomy is known for such queries".into(),
        });
    }
    let mut notes = Vec::new();
    let mixed: Vec<&str> = shape
        .atoms
        .iter()
        .filter(|a| a.status == RelationStatus::Mixed)
        .map(|a| a.relation.as_str())
        .collect();
    if !mixed.is_empty() {
        notes.push(format!(
            "relations with both endogenous and exogenous tuples ({}) are treated as endogenous",
            mixed.join(", ")
        ));
    }
    if let Some(w) = weakening_closure(&shape, budget)? {
        return Ok(Verdict::Ptime {
            order: w.order.iter().map(|&i| w.result.atoms[i].relation.clone()).collect(),
            weakening: w.steps,
            notes,
        });
    }
    let endo = shape.with_mixed_as_endo();
    if !mixed.is_empty() && weakening_closure(&endo, budget)?.is_some() {
        return Ok(Verdict::Open {
            note: format!(
                "weakly linear only if {} could dominate other atoms, which needs fully endogenous relations",
                mixed.join(", ")
            ),
        });
    }

    let mut search = Search {
        budget,
        wl: WeakLinearity::default(),
        visited: HashSet::new(),
        chain: Vec::new(),
        nodes: 0,
    };
    search.visited.insert(endo.key());
    match search.descend(&endo)? {
        Some(terminal) => Ok(Verdict::NpHard {
            chain: search.chain,
            terminal,
            notes,
        }),
        None => Err(Error::ClassifierBug(format!(
            "rewriting from {endo} never reached a final query"
        ))),
    }
}

/// [`classify`] with statuses read off an instance.
pub fn classify_instance(q: &Query, db: &DatabaseInstance, budget: &Budget) -> Result<Verdict> {
    classify(q, &crate::causality::pattern_of(q, db), budget)
}

struct Search<'a> {
    budget: &'a Budget,
    wl: WeakLinearity,
    visited: HashSet<Vec<(String, Vec<String>, RelationStatus)>>,
    chain: Vec<RewriteStep>,
    nodes: usize,
}

impl Search<'_> {
    /// Depth-first over rewrites that stay non-weakly-linear. A query with
    /// no such rewrite is final and must be canonical.
    fn descend(&mut self, shape: &QueryShape) -> Result<Option<Canonical>> {
        let mut stuck = true;
        for (step, next) in rewrite_steps(shape) {
            if self.wl.check(&next, self.budget)? {
                continue;
            }
            stuck = false;
            if !self.visited.insert(next.key()) {
                continue;
            }
            self.nodes += 1;
            if self.nodes > self.budget.rewrite_nodes {
                return Err(Error::limit("rewrite nodes"));
            }
            self.chain.push(step);
            if let Some(c) = self.descend(&next)? {
                return Ok(Some(c));
            }
            self.chain.pop();
        }
        if !stuck {
            return Ok(None);
        }
        is_isomorphic_canonical(shape)
            .map(Some)
            .ok_or_else(|| Error::ClassifierBug(format!("final query {shape} is not canonical")))
    }
}
