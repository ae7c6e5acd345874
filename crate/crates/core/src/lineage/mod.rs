//! Valuations of Boolean queries and their lineage.

mod dnf;
pub(crate) mod join;

use std::collections::BTreeMap;

pub use dnf::Dnf;

use crate::error::Result;
use crate::qmodel::Query;
use crate::storage::{DatabaseInstance, TupleId};
use crate::value::Const;
use join::{join, JoinInput};

/// θ: one homomorphism from the query atoms into the instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Valuation {
    /// Values of Var(q), aligned with [`ValuationSet::vars`].
    pub binding: Vec<Const>,
    /// θ(g_i) for each atom, in query order.
    pub atoms: Vec<TupleId>,
}

impl Valuation {
    /// c^θ as a sorted set (repeats collapse).
    pub fn conjunct(&self) -> Vec<TupleId> {
        let mut c = self.atoms.clone();
        c.sort_unstable();
        c.dedup();
        c
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValuationSet {
    pub vars: Vec<String>,
    pub valuations: Vec<Valuation>,
}

impl ValuationSet {
    pub fn len(&self) -> usize {
        self.valuations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.valuations.is_empty()
    }

    pub fn binding_map(&self, v: &Valuation) -> BTreeMap<String, Const> {
        self.vars.iter().cloned().zip(v.binding.iter().cloned()).collect()
    }

    pub fn lineage(&self) -> Dnf {
        Dnf::new(self.valuations.iter().map(Valuation::conjunct))
    }

    /// D − Γ ⊨ q, decided on the valuations of D.
    pub fn holds_without(&self, removed: impl Fn(TupleId) -> bool) -> bool {
        self.valuations.iter().any(|v| !v.atoms.iter().any(|&t| removed(t)))
    }
}

/// Homomorphisms from the (Boolean) query into `db`, sorted by binding.
pub fn valuations(q: &Query, db: &DatabaseInstance) -> Result<ValuationSet> {
    q.require_boolean()?;
    Ok(valuations_unchecked(q, db))
}

pub(crate) fn valuations_unchecked(q: &Query, db: &DatabaseInstance) -> ValuationSet {
    let vars = q.variables();
    let inputs: Vec<JoinInput<'_>> = q
        .atoms
        .iter()
        .map(|a| JoinInput {
            terms: &a.terms,
            rows: db
                .relation(&a.relation)
                .iter()
                .map(|&id| (id.0, db.tuple(id).values.as_slice()))
                .collect(),
        })
        .collect();
    let valuations = join(&inputs, &vars)
        .into_iter()
        .map(|r| Valuation {
            binding: r.binding,
            atoms: r.rows.into_iter().map(TupleId).collect(),
        })
        .collect();
    ValuationSet { vars, valuations }
}

/// Φ = ⋁_θ c^θ.
pub fn lineage(q: &Query, db: &DatabaseInstance) -> Result<Dnf> {
    Ok(valuations(q, db)?.lineage())
}

/// Φ^n: exogenous variables set to true.
pub fn n_lineage(phi: &Dnf, db: &DatabaseInstance) -> Dnf {
    phi.n_lineage(db)
}

pub fn remove_redundant(phi: &Dnf) -> Dnf {
    phi.remove_redundant()
}

/// D ⊨ q.
pub fn holds(q: &Query, db: &DatabaseInstance) -> Result<bool> {
    Ok(!valuations(q, db)?.is_empty())
}
