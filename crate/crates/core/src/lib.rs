//! Causes and responsibility for conjunctive-query answers and non-answers.
//!
//! The crate is organised bottom-up: [`qmodel`] (queries), [`storage`]
//! (instances), [`lineage`] (valuations and DNF provenance), [`causality`]
//! (cause sets and the Datalog backend), [`complexity`] (the dichotomy
//! classifier) and [`responsibility`] (flow, exact and brute-force solvers).

pub mod budget;
pub mod causality;
pub mod complexity;
pub mod error;
pub mod lineage;
pub mod qmodel;
pub mod responsibility;
pub mod storage;
pub mod value;

pub use budget::Budget;
pub use error::{Error, Result};
pub use qmodel::{parse_query, Annotation, Atom, Query, Schema, Term};
pub use value::{parse_answer, Const};
