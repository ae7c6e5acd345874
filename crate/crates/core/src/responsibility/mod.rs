//! Responsibility ρ_t = 1 / (1 + min |Γ|) of causes, by max-flow for
//! weakly linear queries, exact hitting sets otherwise, brute force as an
//! oracle, and bounded enumeration for Why-No.

mod brute;
mod exact;
mod flow;
pub mod maxflow;
mod whyno;

use std::collections::HashMap;
use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use num_rational::Ratio;
use serde::Serialize;
use serde_json::{json, Value};

pub use brute::{brute_force_responsibility, brute_force_with};
pub use exact::{exact_responsibility, ExactSolver};
pub use flow::{responsibility_flow, FlowSolver};
pub use whyno::{whyno_responsibility, WhyNoSolver};

use crate::budget::Budget;
use crate::causality::{why_no_causes, why_so_causes};
use crate::complexity::classify_instance;
use crate::error::{Error, Result};
use crate::lineage::{valuations, ValuationSet};
use crate::qmodel::Query;
use crate::storage::{DatabaseInstance, TupleId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    Flow,
    Exact,
    Brute,
    WhynoEnum,
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::Flow => "flow",
            SolverKind::Exact => "exact",
            SolverKind::Brute => "brute",
            SolverKind::WhynoEnum => "whyno-enum",
        })
    }
}

/// A contingency set. Flow results share the cuts of the other network
/// components between all tuples, so only the local part is owned.
#[derive(Debug, Clone)]
pub struct Contingency {
    local: Vec<TupleId>,
    shared: Option<(Arc<[TupleId]>, Range<usize>)>,
}

impl Contingency {
    pub fn new(mut ids: Vec<TupleId>) -> Self {
        ids.sort_unstable();
        Contingency {
            local: ids,
            shared: None,
        }
    }

    /// `local` plus every id of `all` outside `skip`.
    pub fn with_shared(local: Vec<TupleId>, all: Arc<[TupleId]>, skip: Range<usize>) -> Self {
        Contingency {
            local,
            shared: Some((all, skip)),
        }
    }

    pub fn len(&self) -> usize {
        self.local.len() + self.shared.as_ref().map_or(0, |(all, skip)| all.len() - skip.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = TupleId> + '_ {
        let shared = self
            .shared
            .iter()
            .flat_map(|(all, skip)| all[..skip.start].iter().chain(&all[skip.end..]).copied());
        self.local.iter().copied().chain(shared)
    }

    /// Sorted ids.
    pub fn to_vec(&self) -> Vec<TupleId> {
        let mut v: Vec<TupleId> = self.iter().collect();
        v.sort_unstable();
        v
    }
}

impl PartialEq for Contingency {
    fn eq(&self, other: &Self) -> bool {
        self.len() == other.len() && self.to_vec() == other.to_vec()
    }
}

impl Eq for Contingency {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponsibilityResult {
    pub tuple: TupleId,
    pub rho: Ratio<u64>,
    /// A minimum contingency; `None` iff the tuple is not a cause.
    pub contingency: Option<Contingency>,
    pub solver: SolverKind,
}

impl ResponsibilityResult {
    pub fn not_a_cause(tuple: TupleId, solver: SolverKind) -> Self {
        ResponsibilityResult {
            tuple,
            rho: Ratio::new(0, 1),
            contingency: None,
            solver,
        }
    }

    pub fn rho_string(&self) -> String {
        self.rho.to_string()
    }

    /// ρ rounded to four decimals.
    pub fn rho_float(&self) -> f64 {
        let x = *self.rho.numer() as f64 / *self.rho.denom() as f64;
        (x * 10_000.0).round() / 10_000.0
    }

    /// `db` is the instance the ids refer to.
    pub fn to_json(&self, db: &DatabaseInstance) -> Value {
        json!({
            "tuple": db.reference(self.tuple),
            "rho": self.rho_string(),
            "rho_float": self.rho_float(),
            "contingency": self.contingency.as_ref().map(|c| {
                c.to_vec().into_iter().map(|id| db.reference(id)).collect::<Vec<_>>()
            }),
            "solver": self.solver,
        })
    }
}

pub(crate) fn check_endogenous(db: &DatabaseInstance, t: TupleId) -> Result<()> {
    if t.index() >= db.len() {
        return Err(Error::NotEndogenous(format!("#{}", t.0)));
    }
    if !db.is_endo(t) {
        return Err(Error::NotEndogenous(db.reference(t)));
    }
    Ok(())
}

/// D − Γ ⊨ q and D − Γ − {t} ⊭ q.
pub fn is_why_so_contingency(vs: &ValuationSet, t: TupleId, gamma: &[TupleId]) -> bool {
    let mut g = gamma.to_vec();
    g.sort_unstable();
    let removed = |x: TupleId| g.binary_search(&x).is_ok();
    vs.holds_without(removed) && !vs.holds_without(|x| x == t || removed(x))
}

pub(crate) fn verify_why_so(vs: &ValuationSet, t: TupleId, gamma: &[TupleId]) -> Result<()> {
    if is_why_so_contingency(vs, t, gamma) {
        Ok(())
    } else {
        Err(Error::InvalidWitness(format!(
            "{} tuples do not make #{} counterfactual",
            gamma.len(),
            t.0
        )))
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Mode<'a> {
    WhySo,
    /// `db` is read as D^x; ids in results refer to `candidates`.
    WhyNo {
        candidates: &'a DatabaseInstance,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverChoice {
    /// Flow when the classifier says PTIME, exact otherwise.
    #[default]
    Auto,
    Flow,
    Exact,
    Brute,
}

/// Every cause with its responsibility, by ρ descending then reference.
/// `q` must be Boolean (specialize it to the answer first).
pub fn rank_causes(
    q: &Query,
    db: &DatabaseInstance,
    mode: Mode<'_>,
    choice: SolverChoice,
    budget: &Budget,
) -> Result<Vec<ResponsibilityResult>> {
    match mode {
        Mode::WhySo => rank_why_so(q, db, choice, budget),
        Mode::WhyNo { candidates } => {
            if choice != SolverChoice::Auto {
                return Err(Error::NotApplicable(
                    "Why-No responsibility is always computed by enumeration".into(),
                ));
            }
            let causes = why_no_causes(q, db, candidates)?;
            let solver = WhyNoSolver::new(q, db, candidates)?;
            let mut out = causes
                .iter()
                .map(|c| solver.responsibility(c.tuple, budget))
                .collect::<Result<Vec<_>>>()?;
            sort_results(&mut out, candidates);
            Ok(out)
        }
    }
}

fn rank_why_so(
    q: &Query,
    db: &DatabaseInstance,
    choice: SolverChoice,
    budget: &Budget,
) -> Result<Vec<ResponsibilityResult>> {
    let db = db.for_query(q);
    let db = db.as_ref();
    let causes = why_so_causes(q, db)?;
    let vs = Arc::new(valuations(q, db)?);
    let use_flow = match choice {
        SolverChoice::Flow => true,
        SolverChoice::Auto => classify_instance(q, db, budget)?.is_ptime(),
        _ => false,
    };
    let mut flows: HashMap<usize, Result<FlowSolver>> = HashMap::new();
    let mut exact: Option<ExactSolver> = None;
    let mut out = Vec::with_capacity(causes.len());
    for c in &causes {
        let t = c.tuple;
        let mut result = None;
        if use_flow {
            let relation = &db.tuple(t).relation;
            let atom = q
                .atoms
                .iter()
                .position(|a| &a.relation == relation)
                .expect("a cause occurs in the query");
            let solver = flows
                .entry(atom)
                .or_insert_with(|| FlowSolver::build(q, db, vs.clone(), atom, budget));
            match solver {
                Ok(s) => match s.responsibility(db, t) {
                    Ok(r) => result = Some(r),
                    Err(Error::NotApplicable(_)) if choice == SolverChoice::Auto => {}
                    Err(e) => return Err(e),
                },
                Err(Error::NotApplicable(_)) if choice == SolverChoice::Auto => {}
                Err(e) => return Err(clone_error(e)),
            }
        }
        let result = match result {
            Some(r) => r,
            None if choice == SolverChoice::Brute => brute_force_with(&vs, db, t, budget)?,
            None => exact
                .get_or_insert_with(|| ExactSolver::from_valuations((*vs).clone(), db))
                .responsibility(db, t, budget)?,
        };
        out.push(result);
    }
    sort_results(&mut out, db);
    Ok(out)
}

/// Cached solver construction errors are reported again for every tuple.
fn clone_error(e: &Error) -> Error {
    match e {
        Error::NotApplicable(s) => Error::NotApplicable(s.clone()),
        Error::ResourceLimit { what, best } => Error::ResourceLimit {
            what: what.clone(),
            best: *best,
        },
        Error::InvalidWitness(s) => Error::InvalidWitness(s.clone()),
        other => Error::NotApplicable(other.to_string()),
    }
}

fn sort_results(out: &mut [ResponsibilityResult], db: &DatabaseInstance) {
    out.sort_by_cached_key(|r| (std::cmp::Reverse(r.rho), db.reference(r.tuple)));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmodel::parse_query;
    use crate::value::Const;

    fn chain() -> DatabaseInstance {
        let rows: Vec<(&str, Vec<Const>, bool)> = vec![
            ("R", vec!["a1".into(), "a5".into()], true),
            ("R", vec!["a2".into(), "a1".into()], true),
            ("R", vec!["a3".into(), "a3".into()], true),
            ("R", vec!["a4".into(), "a3".into()], true),
            ("R", vec!["a4".into(), "a2".into()], true),
            ("S", vec!["a1".into()], true),
            ("S", vec!["a2".into()], true),
            ("S", vec!["a3".into()], true),
            ("S", vec!["a4".into()], true),
        ];
        DatabaseInstance::from_rows(rows).unwrap()
    }

    fn s(db: &DatabaseInstance, c: &str) -> TupleId {
        db.find("S", &[c.into()]).unwrap()
    }

    #[test]
    fn chain_all_solvers() {
        let db = chain();
        let q4 = parse_query("q :- R('a4',y), S(y).").unwrap();
        let b = Budget::default();
        let t = s(&db, "a3");
        let flow = responsibility_flow(&q4, &db, t, &b).unwrap();
        assert_eq!(flow.rho, Ratio::new(1, 2));
        assert_eq!(flow.contingency.unwrap().to_vec(), [s(&db, "a2")]);
        // {R(a4,a2)} is an equally small contingency; any minimum one will do
        let vs = valuations(&q4, &db).unwrap();
        for r in [
            exact_responsibility(&q4, &db, t, &b).unwrap(),
            brute_force_responsibility(&q4, &db, t, &b).unwrap(),
        ] {
            assert_eq!(r.rho, Ratio::new(1, 2));
            assert!(is_why_so_contingency(&vs, t, &r.contingency.unwrap().to_vec()));
        }
        let q2 = parse_query("q :- R('a2',y), S(y).").unwrap();
        let r = responsibility_flow(&q2, &db, s(&db, "a1"), &b).unwrap();
        assert_eq!(r.rho, Ratio::new(1, 1));
        assert!(r.contingency.unwrap().is_empty());
        let r = exact_responsibility(&q2, &db, s(&db, "a4"), &b).unwrap();
        assert_eq!(r.rho, Ratio::new(0, 1));
        assert!(r.contingency.is_none());
    }

    #[test]
    fn rank_and_json() {
        let db = chain();
        let q = parse_query("q :- R('a4',y), S(y).").unwrap();
        let ranked = rank_causes(&q, &db, Mode::WhySo, SolverChoice::Auto, &Budget::default()).unwrap();
        assert_eq!(ranked.len(), 4);
        assert!(ranked
            .iter()
            .all(|r| r.rho == Ratio::new(1, 2) && r.solver == SolverKind::Flow));
        let j = ranked[0].to_json(&db);
        assert_eq!(j["rho"], "1/2");
        assert_eq!(j["rho_float"], 0.5);
        assert_eq!(j["solver"], "flow");
        let q9 = parse_query("q :- R('a9',y), S(y).").unwrap();
        assert!(matches!(
            rank_causes(&q9, &db, Mode::WhySo, SolverChoice::Auto, &Budget::default()),
            Err(Error::NotAnAnswer)
        ));
    }

    #[test]
    fn exogenous_tuple_is_rejected() {
        let db = chain();
        let q = parse_query("q :- R^x('a4',y), S(y).").unwrap();
        let r = db.find("R", &["a4".into(), "a3".into()]).unwrap();
        assert!(matches!(
            exact_responsibility(&q, &db, r, &Budget::default()),
            Err(Error::NotEndogenous(_))
        ));
    }

    #[test]
    fn why_no_examples() {
        let q = parse_query("q :- R(x,y), S(y).").unwrap();
        let exo = DatabaseInstance::from_rows(vec![("R", vec!["a", "b"], false)]).unwrap();
        let cands = DatabaseInstance::from_rows(vec![("S", vec!["b"], true)]).unwrap();
        let r = whyno_responsibility(&q, &exo, &cands, TupleId(0), &Budget::default()).unwrap();
        assert_eq!(r.rho, Ratio::new(1, 1));

        let exo = DatabaseInstance::from_rows(Vec::<(&str, Vec<&str>, bool)>::new()).unwrap();
        let cands = DatabaseInstance::from_rows(vec![("R", vec!["a", "b"], true), ("S", vec!["b"], true)]).unwrap();
        let r = whyno_responsibility(&q, &exo, &cands, TupleId(0), &Budget::default()).unwrap();
        assert_eq!(r.rho, Ratio::new(1, 2));
        assert_eq!(r.contingency.unwrap().to_vec(), [TupleId(1)]);
        let ranked = rank_causes(
            &q,
            &exo,
            Mode::WhyNo { candidates: &cands },
            SolverChoice::Auto,
            &Budget::default(),
        )
        .unwrap();
        assert_eq!(ranked.len(), 2);
    }

    #[test]
    fn shared_contingency() {
        let all: Arc<[TupleId]> = vec![TupleId(1), TupleId(2), TupleId(5)].into();
        let c = Contingency::with_shared(vec![TupleId(9), TupleId(0)], all, 1..2);
        assert_eq!(c.len(), 4);
        assert_eq!(c.to_vec(), [TupleId(0), TupleId(1), TupleId(5), TupleId(9)]);
    }
}
