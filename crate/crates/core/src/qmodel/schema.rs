use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RelationSchema {
    pub columns: Vec<String>,
    /// Relation-wide endogenous flag applied when neither the query nor a
    /// more specific annotation decides.
    pub default_endo: Option<bool>,
}

impl RelationSchema {
    pub fn arity(&self) -> usize {
        self.columns.len()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Schema {
    relations: BTreeMap<String, RelationSchema>,
}

impl Schema {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: &str, columns: Vec<String>) -> Result<()> {
        if columns.is_empty() {
            return Err(Error::ArityMismatch {
                relation: name.to_string(),
                expected: 1,
                found: 0,
            });
        }
        if let Some(existing) = self.relations.get(name) {
            if existing.columns.len() != columns.len() {
                return Err(Error::ArityMismatch {
                    relation: name.to_string(),
                    expected: existing.columns.len(),
                    found: columns.len(),
                });
            }
            return Ok(());
        }
        self.relations.insert(
            name.to_string(),
            RelationSchema {
                columns,
                default_endo: None,
            },
        );
        Ok(())
    }

    /// Convenience for tests and fixtures: columns named `c1..ck`.
    pub fn with_arities<'a>(items: impl IntoIterator<Item = (&'a str, usize)>) -> Self {
        let mut schema = Schema::new();
        for (name, arity) in items {
            let cols = (1..=arity).map(|i| format!("c{i}")).collect();
            schema.add(name, cols).expect("positive arity");
        }
        schema
    }

    pub fn set_default(&mut self, name: &str, endo: Option<bool>) -> Result<()> {
        let rel = self
            .relations
            .get_mut(name)
            .ok_or_else(|| Error::UnknownRelation(name.to_string()))?;
        rel.default_endo = endo;
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&RelationSchema> {
        self.relations.get(name)
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.relations.get(name).map(RelationSchema::arity)
    }

    pub fn relations(&self) -> impl Iterator<Item = (&str, &RelationSchema)> {
        self.relations.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.relations.contains_key(name)
    }

    /// Merges another schema into this one; relations present in both must
    /// agree on arity.
    pub fn merge(&mut self, other: &Schema) -> Result<()> {
        for (name, rel) in other.relations() {
            self.add(name, rel.columns.clone())?;
        }
        Ok(())
    }
}
