//! Conjunctive queries: AST, text syntax, schema checks and the structural
//! predicates used by the analyses.

mod parser;
mod schema;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

pub use parser::{parse_query, parse_query_with_schema};
pub use schema::{RelationSchema, Schema};

use crate::error::{Error, Result};
use crate::value::Const;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Term {
    Var(String),
    Const(Const),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn constant(text: &str) -> Term {
        Term::Const(Const::parse(text))
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::Const(c) => f.write_str(&c.display_query()),
        }
    }
}

/// Per-atom endogenous/exogenous marker (`R^n`, `R^x` or none).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Default)]
pub enum Annotation {
    Endogenous,
    Exogenous,
    #[default]
    Unspecified,
}

impl Annotation {
    pub fn as_flag(self) -> Option<bool> {
        match self {
            Annotation::Endogenous => Some(true),
            Annotation::Exogenous => Some(false),
            Annotation::Unspecified => None,
        }
    }

    fn suffix(self) -> &'static str {
        match self {
            Annotation::Endogenous => "^n",
            Annotation::Exogenous => "^x",
            Annotation::Unspecified => "",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Atom {
    pub relation: String,
    pub terms: Vec<Term>,
    pub annotation: Annotation,
}

impl Atom {
    pub fn new(relation: &str, terms: Vec<Term>) -> Self {
        Atom {
            relation: relation.to_string(),
            terms,
            annotation: Annotation::Unspecified,
        }
    }

    pub fn vars(&self) -> BTreeSet<&str> {
        self.terms.iter().filter_map(Term::as_var).collect()
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}(", self.relation, self.annotation.suffix())?;
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Query {
    pub name: String,
    pub head: Vec<String>,
    pub atoms: Vec<Atom>,
    /// Query-level `@endogenous` / `@exogenous` directives.
    pub directives: BTreeMap<String, bool>,
}

impl Query {
    pub fn new(name: &str, head: Vec<&str>, atoms: Vec<Atom>) -> Self {
        Query {
            name: name.to_string(),
            head: head.into_iter().map(str::to_string).collect(),
            atoms,
            directives: BTreeMap::new(),
        }
    }

    pub fn is_boolean(&self) -> bool {
        self.head.is_empty()
    }

    /// Var(q) in order of first occurrence.
    pub fn variables(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for atom in &self.atoms {
            for t in &atom.terms {
                if let Term::Var(v) = t {
                    if seen.insert(v.as_str()) {
                        out.push(v.clone());
                    }
                }
            }
        }
        out
    }

    pub fn constants(&self) -> BTreeSet<Const> {
        self.atoms
            .iter()
            .flat_map(|a| a.terms.iter())
            .filter_map(|t| match t {
                Term::Const(c) => Some(c.clone()),
                Term::Var(_) => None,
            })
            .collect()
    }

    pub fn relations(&self) -> BTreeSet<&str> {
        self.atoms.iter().map(|a| a.relation.as_str()).collect()
    }

    /// True iff some relation name is used by two or more atoms.
    pub fn has_self_join(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.atoms.iter().any(|a| !seen.insert(a.relation.as_str()))
    }

    /// sg(x): indices of the atoms containing each variable.
    pub fn occurrence_sets(&self) -> BTreeMap<String, BTreeSet<usize>> {
        let mut out: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
        for (i, atom) in self.atoms.iter().enumerate() {
            for v in atom.vars() {
                out.entry(v.to_string()).or_default().insert(i);
            }
        }
        out
    }

    /// Relation-level endogenous override coming from the query itself:
    /// an atom marker wins over a directive.
    pub fn relation_override(&self, relation: &str) -> Option<bool> {
        self.atoms
            .iter()
            .filter(|a| a.relation == relation)
            .find_map(|a| a.annotation.as_flag())
            .or_else(|| self.directives.get(relation).copied())
    }

    /// All relation-level overrides stated by the query.
    pub fn overrides(&self) -> BTreeMap<String, bool> {
        let mut out = BTreeMap::new();
        for rel in self.relations() {
            if let Some(flag) = self.relation_override(rel) {
                out.insert(rel.to_string(), flag);
            }
        }
        for (rel, flag) in &self.directives {
            out.entry(rel.clone()).or_insert(*flag);
        }
        out
    }

    /// Checks relation names and arities against a schema.
    pub fn validate(&self, schema: &Schema) -> Result<()> {
        for atom in &self.atoms {
            let arity = schema
                .arity(&atom.relation)
                .ok_or_else(|| Error::UnknownRelation(atom.relation.clone()))?;
            if arity != atom.terms.len() {
                return Err(Error::ArityMismatch {
                    relation: atom.relation.clone(),
                    expected: arity,
                    found: atom.terms.len(),
                });
            }
        }
        for rel in self.directives.keys() {
            if !schema.contains(rel) {
                return Err(Error::UnknownRelation(rel.clone()));
            }
        }
        Ok(())
    }

    /// q[ā/x̄]: substitutes the answer constants for the head variables.
    pub fn specialize(&self, answer: &[Const]) -> Result<Query> {
        if answer.len() != self.head.len() {
            return Err(Error::AnswerArity {
                expected: self.head.len(),
                found: answer.len(),
            });
        }
        let subst: BTreeMap<&str, &Const> = self.head.iter().map(String::as_str).zip(answer.iter()).collect();
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom {
                relation: a.relation.clone(),
                annotation: a.annotation,
                terms: a
                    .terms
                    .iter()
                    .map(|t| match t {
                        Term::Var(v) => match subst.get(v.as_str()) {
                            Some(c) => Term::Const((*c).clone()),
                            None => t.clone(),
                        },
                        Term::Const(_) => t.clone(),
                    })
                    .collect(),
            })
            .collect();
        Ok(Query {
            name: self.name.clone(),
            head: Vec::new(),
            atoms,
            directives: self.directives.clone(),
        })
    }

    pub fn require_boolean(&self) -> Result<()> {
        if self.is_boolean() {
            Ok(())
        } else {
            Err(Error::NotBoolean(self.head.len()))
        }
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let endo: Vec<&str> = self
            .directives
            .iter()
            .filter(|(_, e)| **e)
            .map(|(r, _)| r.as_str())
            .collect();
        let exo: Vec<&str> = self
            .directives
            .iter()
            .filter(|(_, e)| !**e)
            .map(|(r, _)| r.as_str())
            .collect();
        if !endo.is_empty() {
            writeln!(f, "@endogenous {}", endo.join(","))?;
        }
        if !exo.is_empty() {
            writeln!(f, "@exogenous {}", exo.join(","))?;
        }
        f.write_str(&self.name)?;
        if !self.head.is_empty() {
            write!(f, "({})", self.head.join(","))?;
        }
        f.write_str(" :- ")?;
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(".")
    }
}
