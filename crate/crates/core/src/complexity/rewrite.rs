//! Hardness-preserving rewrites: delete a variable, add a variable to every
//! atom holding another one it co-occurs with, or delete an atom that is
//! exogenous or has a variable subset elsewhere.

use std::collections::HashSet;

use serde::Serialize;

use super::shape::QueryShape;
use crate::storage::RelationStatus;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum RewriteStep {
    /// Add `var` to every atom containing `anchor`; `atoms` are the ones
    /// that change.
    AddVar {
        var: String,
        anchor: String,
        atoms: Vec<String>,
    },
    DeleteVar {
        var: String,
    },
    DeleteAtom {
        atom: String,
    },
}

impl RewriteStep {
    fn rank(&self) -> u8 {
        match self {
            RewriteStep::DeleteAtom { .. } => 0,
            RewriteStep::DeleteVar { .. } => 1,
            RewriteStep::AddVar { .. } => 2,
        }
    }
}

/// Applies one step after checking its side conditions.
pub fn apply_rewrite(shape: &QueryShape, step: &RewriteStep) -> std::result::Result<QueryShape, String> {
    let mut out = shape.clone();
    match step {
        RewriteStep::DeleteAtom { atom } => {
            let i = shape.index_of(atom).ok_or_else(|| format!("no atom `{atom}`"))?;
            let g = &shape.atoms[i];
            let allowed = g.status == RelationStatus::Exogenous
                || shape
                    .atoms
                    .iter()
                    .enumerate()
                    .any(|(j, g0)| j != i && g0.vars.is_subset(&g.vars));
            if !allowed {
                return Err(format!("`{atom}` is endogenous and has no atom with fewer variables"));
            }
            out.atoms.remove(i);
        }
        RewriteStep::DeleteVar { var } => {
            if !shape.variables().contains(var) {
                return Err(format!("no variable `{var}`"));
            }
            for a in &mut out.atoms {
                a.vars.remove(var);
            }
        }
        RewriteStep::AddVar { var, anchor, atoms } => {
            if var == anchor {
                return Err("variable added to itself".into());
            }
            if !shape
                .atoms
                .iter()
                .any(|a| a.vars.contains(var) && a.vars.contains(anchor))
            {
                return Err(format!("no atom contains both `{anchor}` and `{var}`"));
            }
            let mut changed = Vec::new();
            for a in &mut out.atoms {
                if a.vars.contains(anchor) && a.vars.insert(var.clone()) {
                    changed.push(a.relation.clone());
                }
            }
            if changed.is_empty() || &changed != atoms {
                return Err(format!(
                    "adding `{var}` next to `{anchor}` changes {changed:?}, not {atoms:?}"
                ));
            }
        }
    }
    Ok(out)
}

/// Every legal single rewrite, ordered delete-atom, delete-var, add-var,
/// without duplicate results.
pub fn rewrite_steps(shape: &QueryShape) -> Vec<(RewriteStep, QueryShape)> {
    let mut candidates: Vec<RewriteStep> = Vec::new();
    for a in &shape.atoms {
        candidates.push(RewriteStep::DeleteAtom {
            atom: a.relation.clone(),
        });
    }
    let vars = shape.variables();
    for v in &vars {
        candidates.push(RewriteStep::DeleteVar { var: v.clone() });
    }
    for x in &vars {
        for y in &vars {
            if x == y {
                continue;
            }
            let atoms: Vec<String> = shape
                .atoms
                .iter()
                .filter(|a| a.vars.contains(x) && !a.vars.contains(y))
                .map(|a| a.relation.clone())
                .collect();
            candidates.push(RewriteStep::AddVar {
                var: y.clone(),
                anchor: x.clone(),
                atoms,
            });
        }
    }
    candidates.sort_by_key(RewriteStep::rank);

    let mut seen = HashSet::new();
    candidates
        .into_iter()
        .filter_map(|step| {
            let next = apply_rewrite(shape, &step).ok()?;
            seen.insert(next.key()).then_some((step, next))
        })
        .collect()
}
