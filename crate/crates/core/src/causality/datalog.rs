//! Stratified Datalog programs with negation and inequalities.

use std::fmt;

use serde::Serialize;

use crate::qmodel::Term;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Pred {
    /// `R^n` (endo) or `R^x` over the input instance.
    Edb { relation: String, endo: bool },
    /// Auxiliary blocker `I_k` of the first stratum.
    Blocker { index: usize },
    /// `C_R`: the causes in relation `R`.
    Cause { relation: String },
}

impl fmt::Display for Pred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pred::Edb { relation, endo } => write!(f, "{relation}^{}", if *endo { 'n' } else { 'x' }),
            Pred::Blocker { index } => write!(f, "I{index}"),
            Pred::Cause { relation } => write!(f, "C_{relation}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ProgramAtom {
    pub pred: Pred,
    pub terms: Vec<Term>,
}

impl fmt::Display for ProgramAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.pred)?;
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Literal {
    Pos { atom: ProgramAtom },
    Neg { atom: ProgramAtom },
    Neq { left: Term, right: Term },
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Pos { atom } => write!(f, "{atom}"),
            Literal::Neg { atom } => write!(f, "not {atom}"),
            Literal::Neq { left, right } => write!(f, "{left}!={right}"),
        }
    }
}

/// Where a cause rule came from: the sign pattern of the refinement (one
/// `n`/`x` per query atom) and the substitution applied to its variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct RuleOrigin {
    pub refinement: String,
    pub image: Vec<(String, Term)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Rule {
    pub head: ProgramAtom,
    pub body: Vec<Literal>,
    /// 1 for blockers, 2 for cause rules.
    pub stratum: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub origin: Option<RuleOrigin>,
}

impl Rule {
    pub fn has_negation(&self) -> bool {
        self.body.iter().any(|l| matches!(l, Literal::Neg { .. }))
    }

    pub fn has_inequality(&self) -> bool {
        self.body.iter().any(|l| matches!(l, Literal::Neq { .. }))
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} :- ", self.head)?;
        for (i, l) in self.body.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{l}")?;
        }
        f.write_str(".")
    }
}

/// A program with two strata: blockers first, then one rule family per
/// relation that may contain causes.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DatalogProgram {
    pub rules: Vec<Rule>,
}

impl DatalogProgram {
    /// Always two; the first may be empty.
    pub fn strata(&self) -> u8 {
        2
    }

    pub fn stratum(&self, k: u8) -> impl Iterator<Item = &Rule> {
        self.rules.iter().filter(move |r| r.stratum == k)
    }

    pub fn cause_rules(&self, relation: &str) -> impl Iterator<Item = &Rule> + '_ {
        let relation = relation.to_string();
        self.rules
            .iter()
            .filter(move |r| matches!(&r.head.pred, Pred::Cause { relation: rel } if *rel == relation))
    }
}

impl fmt::Display for DatalogProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for k in 1..=self.strata() {
            writeln!(f, "% stratum {k}")?;
            for r in self.stratum(k) {
                writeln!(f, "{r}")?;
            }
        }
        Ok(())
    }
}
