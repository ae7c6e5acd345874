//! Weakenings: domination (an endogenous atom whose variables contain those
//! of a fully endogenous atom becomes exogenous) and dissociation (an
//! exogenous atom gains a variable of a neighbor).

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use serde::Serialize;

use super::shape::{is_linear, QueryShape};
use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::storage::RelationStatus;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum WeakeningStep {
    Domination { atom: String },
    Dissociation { atom: String, var: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Weakening {
    pub steps: Vec<WeakeningStep>,
    /// The weakened, linear query.
    pub result: QueryShape,
    /// Linear order of `result` (atom indices, same as the input's).
    pub order: Vec<usize>,
}

fn dominator(shape: &QueryShape, i: usize) -> Option<usize> {
    let g = &shape.atoms[i];
    (0..shape.atoms.len()).find(|&j| {
        j != i && shape.atoms[j].status == RelationStatus::Endogenous && shape.atoms[j].vars.is_subset(&g.vars)
    })
}

fn dissociation_vars(shape: &QueryShape, i: usize) -> BTreeSet<String> {
    let g = &shape.atoms[i];
    shape
        .atoms
        .iter()
        .enumerate()
        .filter(|(j, n)| *j != i && !n.vars.is_disjoint(&g.vars))
        .flat_map(|(_, n)| n.vars.iter().cloned())
        .filter(|v| !g.vars.contains(v))
        .collect()
}

/// Applies one step after checking its side conditions.
pub fn apply_weakening(shape: &QueryShape, step: &WeakeningStep) -> std::result::Result<QueryShape, String> {
    let mut out = shape.clone();
    match step {
        WeakeningStep::Domination { atom } => {
            let i = shape.index_of(atom).ok_or_else(|| format!("no atom `{atom}`"))?;
            if !shape.atoms[i].is_endo_like() {
                return Err(format!("`{atom}` is already exogenous"));
            }
            if dominator(shape, i).is_none() {
                return Err(format!("`{atom}` is not dominated"));
            }
            out.atoms[i].status = RelationStatus::Exogenous;
        }
        WeakeningStep::Dissociation { atom, var } => {
            let i = shape.index_of(atom).ok_or_else(|| format!("no atom `{atom}`"))?;
            if shape.atoms[i].status != RelationStatus::Exogenous {
                return Err(format!("`{atom}` is not exogenous"));
            }
            if !dissociation_vars(shape, i).contains(var) {
                return Err(format!("`{var}` does not occur in a neighbor of `{atom}`"));
            }
            out.atoms[i].vars.insert(var.clone());
        }
    }
    Ok(out)
}

/// Dominations to fixpoint (lowest index first), then a breadth-first
/// search over dissociations for a linear query.
pub fn weakening_closure(shape: &QueryShape, budget: &Budget) -> Result<Option<Weakening>> {
    weakening_closure_pinned(shape, None, budget)
}

/// As [`weakening_closure`], but the `pinned` atom is never dominated.
pub fn weakening_closure_pinned(
    shape: &QueryShape,
    pinned: Option<usize>,
    budget: &Budget,
) -> Result<Option<Weakening>> {
    let mut current = shape.clone();
    let mut steps = Vec::new();
    'fix: loop {
        for i in 0..current.atoms.len() {
            if Some(i) != pinned && current.atoms[i].is_endo_like() && dominator(&current, i).is_some() {
                current.atoms[i].status = RelationStatus::Exogenous;
                steps.push(WeakeningStep::Domination {
                    atom: current.atoms[i].relation.clone(),
                });
                continue 'fix;
            }
        }
        break;
    }

    // parent links: state index -> (parent index, step)
    let mut states: Vec<(QueryShape, Option<(usize, WeakeningStep)>)> = vec![(current.clone(), None)];
    let mut seen: HashSet<Vec<BTreeSet<String>>> = HashSet::new();
    seen.insert(current.atoms.iter().map(|a| a.vars.clone()).collect());
    let mut queue = VecDeque::from([0usize]);
    while let Some(s) = queue.pop_front() {
        if let Some(order) = is_linear(&states[s].0) {
            let result = states[s].0.clone();
            let mut tail = Vec::new();
            let mut at = s;
            while let Some((parent, step)) = &states[at].1 {
                tail.push(step.clone());
                at = *parent;
            }
            tail.reverse();
            steps.extend(tail);
            return Ok(Some(Weakening { steps, result, order }));
        }
        let shape = states[s].0.clone();
        for i in 0..shape.atoms.len() {
            if shape.atoms[i].status != RelationStatus::Exogenous {
                continue;
            }
            for var in dissociation_vars(&shape, i) {
                let mut next = shape.clone();
                next.atoms[i].vars.insert(var.clone());
                if !seen.insert(next.atoms.iter().map(|a| a.vars.clone()).collect()) {
                    continue;
                }
                if states.len() >= budget.weakening_states {
                    return Err(Error::limit("weakening states"));
                }
                let step = WeakeningStep::Dissociation {
                    atom: shape.atoms[i].relation.clone(),
                    var,
                };
                states.push((next, Some((s, step))));
                queue.push_back(states.len() - 1);
            }
        }
    }
    Ok(None)
}

/// Memoized weak-linearity test used by the rewriting search.
#[derive(Default)]
pub(crate) struct WeakLinearity {
    cache: HashMap<Vec<(String, Vec<String>, RelationStatus)>, bool>,
}

impl WeakLinearity {
    pub fn check(&mut self, shape: &QueryShape, budget: &Budget) -> Result<bool> {
        let key = shape.key();
        if let Some(&b) = self.cache.get(&key) {
            return Ok(b);
        }
        let b = weakening_closure(shape, budget)?.is_some();
        self.cache.insert(key, b);
        Ok(b)
    }
}
