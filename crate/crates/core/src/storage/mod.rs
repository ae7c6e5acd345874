//! In-memory relational instances with an endogenous/exogenous partition.

mod annotations;
mod candidates;
mod load;

use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;

pub use annotations::{AnnotationRule, AnnotationSpec, CmpOp, Predicate, Selector};
pub use candidates::{generate_whyno_candidates, CandidatePool};
pub use load::{load, load_dir, read_candidates_csv, read_relation_csv};

use crate::error::{Error, Result};
use crate::qmodel::{Query, Schema};
use crate::value::Const;

/// Dense handle of a tuple inside one [`DatabaseInstance`] (the lineage
/// variable X_t).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct TupleId(pub u32);

impl TupleId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Debug for TupleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TupleRow {
    pub id: TupleId,
    pub relation: String,
    pub values: Vec<Const>,
    pub endo: bool,
}

impl TupleRow {
    /// `Rel(v1,…,vk)` with plain words unquoted.
    pub fn reference(&self) -> String {
        let vals: Vec<String> = self.values.iter().map(Const::display_ref).collect();
        format!("{}({})", self.relation, vals.join(","))
    }
}

impl fmt::Display for TupleRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.reference())
    }
}

#[derive(Debug, Clone, Default)]
pub struct DatabaseInstance {
    schema: Schema,
    tuples: Vec<TupleRow>,
    by_relation: BTreeMap<String, Vec<TupleId>>,
    index: HashMap<String, HashMap<Vec<Const>, TupleId>>,
    candidate_pool: bool,
}

impl PartialEq for DatabaseInstance {
    fn eq(&self, other: &Self) -> bool {
        self.schema == other.schema && self.tuples == other.tuples && self.candidate_pool == other.candidate_pool
    }
}

impl DatabaseInstance {
    pub fn new(schema: Schema) -> Self {
        let by_relation = schema
            .relations()
            .map(|(name, _)| (name.to_string(), Vec::new()))
            .collect();
        DatabaseInstance {
            schema,
            by_relation,
            ..Default::default()
        }
    }

    /// Builds an instance from `(relation, values, endo)` triples, inferring
    /// column names `c1..ck`. Handy for tests and generated data.
    pub fn from_rows<'a, I, V>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, V, bool)>,
        V: IntoIterator,
        V::Item: Into<Const>,
    {
        let rows: Vec<(&str, Vec<Const>, bool)> = rows
            .into_iter()
            .map(|(r, v, e)| (r, v.into_iter().map(Into::into).collect(), e))
            .collect();
        let mut schema = Schema::new();
        for (rel, vals, _) in &rows {
            let cols = (1..=vals.len()).map(|i| format!("c{i}")).collect();
            schema.add(rel, cols)?;
        }
        let mut db = DatabaseInstance::new(schema);
        for (rel, vals, endo) in rows {
            db.insert(rel, vals, endo)?;
        }
        Ok(db)
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn ensure_relation(&mut self, name: &str, arity: usize) -> Result<()> {
        if !self.schema.contains(name) {
            let cols = (1..=arity).map(|i| format!("c{i}")).collect();
            self.schema.add(name, cols)?;
            self.by_relation.entry(name.to_string()).or_default();
        }
        match self.schema.arity(name) {
            Some(k) if k == arity => Ok(()),
            Some(k) => Err(Error::ArityMismatch {
                relation: name.to_string(),
                expected: k,
                found: arity,
            }),
            None => unreachable!(),
        }
    }

    /// Inserts a tuple, collapsing duplicates. Re-inserting an identical
    /// tuple with the opposite flag is an error.
    pub fn insert(&mut self, relation: &str, values: Vec<Const>, endo: bool) -> Result<TupleId> {
        let arity = self
            .schema
            .arity(relation)
            .ok_or_else(|| Error::UnknownRelation(relation.to_string()))?;
        if arity != values.len() {
            return Err(Error::ArityMismatch {
                relation: relation.to_string(),
                expected: arity,
                found: values.len(),
            });
        }
        if let Some(&id) = self.index.get(relation).and_then(|m| m.get(&values)) {
            if self.tuples[id.index()].endo != endo {
                return Err(Error::ConflictingFlags(self.tuples[id.index()].reference()));
            }
            return Ok(id);
        }
        let id = TupleId(u32::try_from(self.tuples.len()).expect("too many tuples"));
        self.index
            .entry(relation.to_string())
            .or_default()
            .insert(values.clone(), id);
        self.by_relation.entry(relation.to_string()).or_default().push(id);
        self.tuples.push(TupleRow {
            id,
            relation: relation.to_string(),
            values,
            endo,
        });
        Ok(id)
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn is_candidate_pool(&self) -> bool {
        self.candidate_pool
    }

    pub(crate) fn mark_candidate_pool(&mut self) {
        self.candidate_pool = true;
    }

    pub fn tuple(&self, id: TupleId) -> &TupleRow {
        &self.tuples[id.index()]
    }

    pub fn tuples(&self) -> &[TupleRow] {
        &self.tuples
    }

    pub fn reference(&self, id: TupleId) -> String {
        self.tuple(id).reference()
    }

    pub fn is_endo(&self, id: TupleId) -> bool {
        self.tuples[id.index()].endo
    }

    /// Tuple ids of a relation in insertion order (empty for unknown names).
    pub fn relation(&self, name: &str) -> &[TupleId] {
        self.by_relation.get(name).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn relation_names(&self) -> impl Iterator<Item = &str> {
        self.by_relation.keys().map(String::as_str)
    }

    pub fn find(&self, relation: &str, values: &[Const]) -> Option<TupleId> {
        self.index.get(relation)?.get(values).copied()
    }

    /// Looks up a tuple written as `Rel(v1,…)`.
    pub fn find_reference(&self, text: &str) -> Option<TupleId> {
        let open = text.find('(')?;
        let rel = text[..open].trim();
        let inner = text[open + 1..].trim_end().strip_suffix(')')?;
        let values = crate::value::parse_answer(inner).ok()?;
        self.find(rel, &values)
    }

    pub fn endo_ids(&self) -> impl Iterator<Item = TupleId> + '_ {
        self.tuples.iter().filter(|t| t.endo).map(|t| t.id)
    }

    pub fn exo_ids(&self) -> impl Iterator<Item = TupleId> + '_ {
        self.tuples.iter().filter(|t| !t.endo).map(|t| t.id)
    }

    /// Adom(D).
    pub fn active_domain(&self) -> BTreeSet<Const> {
        self.tuples.iter().flat_map(|t| t.values.iter().cloned()).collect()
    }

    /// Endo/exo/mixed status of a relation as currently flagged.
    pub fn relation_status(&self, name: &str) -> RelationStatus {
        let ids = self.relation(name);
        let endo = ids.iter().filter(|id| self.is_endo(**id)).count();
        // an empty relation has nothing to blame
        if ids.is_empty() {
            RelationStatus::Exogenous
        } else if endo == ids.len() {
            RelationStatus::Endogenous
        } else if endo == 0 {
            RelationStatus::Exogenous
        } else {
            RelationStatus::Mixed
        }
    }

    /// Returns a copy with every tuple of the listed relations re-flagged;
    /// ids are unchanged.
    pub fn with_relation_flags(&self, flags: &BTreeMap<String, bool>) -> DatabaseInstance {
        let mut out = self.clone();
        for t in &mut out.tuples {
            if let Some(&endo) = flags.get(&t.relation) {
                t.endo = endo;
            }
        }
        out
    }

    /// Applies the relation-level overrides stated by a query (atom markers
    /// and directives), borrowing when nothing changes.
    pub fn for_query<'a>(&'a self, q: &Query) -> Cow<'a, DatabaseInstance> {
        let flags = q.overrides();
        let changes = flags
            .iter()
            .any(|(rel, &endo)| self.relation(rel).iter().any(|id| self.is_endo(*id) != endo));
        if changes {
            Cow::Owned(self.with_relation_flags(&flags))
        } else {
            Cow::Borrowed(self)
        }
    }

    /// D^x ∪ candidates for the Why-No setting: every tuple of `self` is
    /// made exogenous, every candidate endogenous. Returns the combined
    /// instance and, for each candidate id, its id in the combination.
    pub fn with_candidates(&self, candidates: &DatabaseInstance) -> Result<(DatabaseInstance, Vec<TupleId>)> {
        let mut schema = self.schema.clone();
        schema.merge(&candidates.schema)?;
        let mut out = DatabaseInstance::new(schema);
        for t in &self.tuples {
            out.insert(&t.relation, t.values.clone(), false)?;
        }
        let mut map = Vec::with_capacity(candidates.len());
        for t in &candidates.tuples {
            if self.find(&t.relation, &t.values).is_some() {
                return Err(Error::CandidateOverlap(t.reference()));
            }
            map.push(out.insert(&t.relation, t.values.clone(), true)?);
        }
        Ok((out, map))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RelationStatus {
    Endogenous,
    Exogenous,
    Mixed,
}
