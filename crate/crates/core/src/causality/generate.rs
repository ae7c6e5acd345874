//! Builds the two-stratum cause program for a Boolean query.
//!
//! Every valuation θ has a sign pattern (which atoms hit endogenous tuples)
//! and an equality type on the variables of its endogenous atoms. For each
//! pattern r and each equality type ("image") s we emit, per endogenous
//! atom u of s, a rule deriving u's tuple unless some valuation θ' already
//! needs only tuples of c^n_θ \ {u}. Those θ' are described by blockers
//! `I_k`: the exogenous part of θ' after unifying its endogenous atoms with
//! atoms of s other than u. A tuple is a cause iff it lies in a minimal
//! n-lineage conjunct, which is exactly the condition checked.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use super::datalog::{DatalogProgram, Literal, Pred, ProgramAtom, Rule, RuleOrigin};
use crate::budget::Budget;
use crate::complexity::relation_status;
use crate::error::{Error, Result};
use crate::qmodel::{Query, Term};
use crate::storage::{DatabaseInstance, RelationStatus};
use crate::value::Const;

/// Relation status for each relation of `q`, after the query's own
/// overrides.
pub fn pattern_of(q: &Query, db: &DatabaseInstance) -> BTreeMap<String, RelationStatus> {
    let db = db.for_query(q);
    q.relations()
        .into_iter()
        .map(|r| (r.to_string(), db.relation_status(r)))
        .collect()
}

pub fn generate_program(q: &Query, pattern: &BTreeMap<String, RelationStatus>) -> Result<DatalogProgram> {
    generate_program_with_budget(q, pattern, &Budget::default())
}

#[derive(Clone)]
struct SAtom {
    relation: String,
    terms: Vec<Term>,
    endo: bool,
}

pub fn generate_program_with_budget(
    q: &Query,
    pattern: &BTreeMap<String, RelationStatus>,
    budget: &Budget,
) -> Result<DatalogProgram> {
    q.require_boolean()?;
    let status = |rel: &str| relation_status(q, pattern, rel);
    let options: Vec<Vec<bool>> = q
        .atoms
        .iter()
        .map(|a| match status(&a.relation) {
            RelationStatus::Endogenous => vec![true],
            RelationStatus::Exogenous => vec![false],
            RelationStatus::Mixed => vec![true, false],
        })
        .collect();
    let refinements = product(&options);

    let mut endo_capable: BTreeMap<&str, usize> = BTreeMap::new();
    for a in &q.atoms {
        if status(&a.relation) != RelationStatus::Exogenous {
            *endo_capable.entry(&a.relation).or_default() += 1;
        }
    }
    let self_join = endo_capable.values().any(|&n| n > 1);
    let constants: Vec<Const> = q.constants().into_iter().collect();
    let used: BTreeSet<String> = q.variables().into_iter().collect();

    let mut gen = Generator {
        q,
        refinements: &refinements,
        used: &used,
        blockers: Vec::new(),
        blocker_index: HashMap::new(),
    };
    let mut cause_rules = Vec::new();
    let mut seen_rules: HashSet<String> = HashSet::new();
    let mut images = 0usize;

    for r in &refinements {
        if !r.iter().any(|&e| e) {
            continue;
        }
        let nvars = n_variables(q, r);
        let substitutions = if self_join {
            partitions(&nvars, &constants)
        } else {
            vec![nvars.iter().map(|v| (v.clone(), Term::Var(v.clone()))).collect()]
        };
        for sigma in substitutions {
            images += 1;
            if images > budget.datalog_images {
                return Err(Error::limit("datalog images"));
            }
            let map: HashMap<&str, &Term> = sigma.iter().map(|(v, t)| (v.as_str(), t)).collect();
            let s: Vec<SAtom> = q
                .atoms
                .iter()
                .zip(r)
                .map(|(a, &endo)| SAtom {
                    relation: a.relation.clone(),
                    terms: a
                        .terms
                        .iter()
                        .map(|t| match t {
                            Term::Var(v) => map.get(v.as_str()).map_or_else(|| t.clone(), |&t| t.clone()),
                            Term::Const(_) => t.clone(),
                        })
                        .collect(),
                    endo,
                })
                .collect();
            let Some(body) = dedup_body(&s) else { continue };

            let mut neqs = Vec::new();
            if self_join {
                let reps: Vec<&String> = {
                    let mut seen = BTreeSet::new();
                    sigma
                        .iter()
                        .filter_map(|(_, t)| match t {
                            Term::Var(v) if seen.insert(v) => Some(v),
                            _ => None,
                        })
                        .collect()
                };
                for (i, a) in reps.iter().enumerate() {
                    for b in &reps[i + 1..] {
                        neqs.push(Literal::Neq {
                            left: Term::Var((*a).clone()),
                            right: Term::Var((*b).clone()),
                        });
                    }
                    for c in &constants {
                        neqs.push(Literal::Neq {
                            left: Term::Var((*a).clone()),
                            right: Term::Const(c.clone()),
                        });
                    }
                }
            }

            let targets: Vec<(String, Vec<Term>)> = {
                let mut seen = HashSet::new();
                s.iter()
                    .filter(|a| a.endo)
                    .map(|a| (a.relation.clone(), a.terms.clone()))
                    .filter(|a| seen.insert(a.clone()))
                    .collect()
            };
            for (ui, u) in targets.iter().enumerate() {
                let others: Vec<&(String, Vec<Term>)> = targets
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != ui)
                    .map(|(_, a)| a)
                    .collect();
                let Some(calls) = gen.blockers_for(&others) else {
                    continue;
                };
                let mut rule_body = body.clone();
                rule_body.extend(neqs.iter().cloned());
                rule_body.extend(calls.into_iter().map(|atom| Literal::Neg { atom }));
                let rule = Rule {
                    head: ProgramAtom {
                        pred: Pred::Cause { relation: u.0.clone() },
                        terms: u.1.clone(),
                    },
                    body: rule_body,
                    stratum: 2,
                    origin: Some(RuleOrigin {
                        refinement: r.iter().map(|&e| if e { 'n' } else { 'x' }).collect(),
                        image: sigma.clone(),
                    }),
                };
                if seen_rules.insert(rule.to_string()) {
                    cause_rules.push(rule);
                }
            }
        }
    }

    let mut rules = gen.blockers;
    rules.extend(cause_rules);
    Ok(DatalogProgram { rules })
}

struct Generator<'a> {
    q: &'a Query,
    refinements: &'a [Vec<bool>],
    used: &'a BTreeSet<String>,
    blockers: Vec<Rule>,
    blocker_index: HashMap<String, usize>,
}

impl Generator<'_> {
    /// Blocker calls for one target: every way a valuation can use only the
    /// endogenous atoms in `others`. `None` when one of them needs no
    /// exogenous support at all, so the target can never be a cause here.
    fn blockers_for(&mut self, others: &[&(String, Vec<Term>)]) -> Option<Vec<ProgramAtom>> {
        let mut calls: Vec<ProgramAtom> = Vec::new();
        for r in self.refinements {
            let n_atoms: Vec<usize> = (0..r.len()).filter(|&i| r[i]).collect();
            let choices: Vec<Vec<usize>> = n_atoms
                .iter()
                .map(|&i| {
                    (0..others.len())
                        .filter(|&j| others[j].0 == self.q.atoms[i].relation)
                        .collect()
                })
                .collect();
            for f in product(&choices) {
                let Some(mu) = self.unify(&n_atoms, &f, others) else {
                    continue;
                };
                let x_atoms: Vec<usize> = (0..r.len()).filter(|&i| !r[i]).collect();
                if x_atoms.is_empty() {
                    return None;
                }
                let call = self.blocker(&x_atoms, &mu);
                if !calls.contains(&call) {
                    calls.push(call);
                }
            }
        }
        Some(calls)
    }

    /// μ with μ(n-atoms of θ') = the chosen atoms, if consistent. Distinct
    /// variables of the image and the constants denote distinct values.
    fn unify(&self, n_atoms: &[usize], f: &[usize], others: &[&(String, Vec<Term>)]) -> Option<HashMap<String, Term>> {
        let mut mu: HashMap<String, Term> = HashMap::new();
        for (&i, &j) in n_atoms.iter().zip(f) {
            for (a, b) in self.q.atoms[i].terms.iter().zip(&others[j].1) {
                match a {
                    Term::Const(_) => {
                        if a != b {
                            return None;
                        }
                    }
                    Term::Var(v) => match mu.get(v) {
                        Some(t) if t != b => return None,
                        Some(_) => {}
                        None => {
                            mu.insert(v.clone(), b.clone());
                        }
                    },
                }
            }
        }
        Some(mu)
    }

    fn blocker(&mut self, x_atoms: &[usize], mu: &HashMap<String, Term>) -> ProgramAtom {
        let mut fresh: HashMap<&str, String> = HashMap::new();
        let mut counter = 0usize;
        let mut head_vars: Vec<String> = Vec::new();
        let mut body = Vec::new();
        for &i in x_atoms {
            let atom = &self.q.atoms[i];
            let terms = atom
                .terms
                .iter()
                .map(|t| match t {
                    Term::Const(_) => t.clone(),
                    Term::Var(v) => match mu.get(v) {
                        Some(bound) => {
                            if let Term::Var(sv) = bound {
                                if !head_vars.contains(sv) {
                                    head_vars.push(sv.clone());
                                }
                            }
                            bound.clone()
                        }
                        None => Term::Var(
                            fresh
                                .entry(v.as_str())
                                .or_insert_with(|| loop {
                                    counter += 1;
                                    let name = format!("_{counter}");
                                    if !self.used.contains(&name) {
                                        break name;
                                    }
                                })
                                .clone(),
                        ),
                    },
                })
                .collect();
            body.push(Literal::Pos {
                atom: ProgramAtom {
                    pred: Pred::Edb {
                        relation: atom.relation.clone(),
                        endo: false,
                    },
                    terms,
                },
            });
        }

        // canonical form: variables renamed v0, v1, ... head first
        let mut rename: HashMap<String, String> = HashMap::new();
        for v in &head_vars {
            let k = rename.len();
            rename.insert(v.clone(), format!("v{k}"));
        }
        let canon_body: Vec<Literal> = body
            .into_iter()
            .map(|l| match l {
                Literal::Pos { atom } => Literal::Pos {
                    atom: ProgramAtom {
                        pred: atom.pred,
                        terms: atom
                            .terms
                            .into_iter()
                            .map(|t| match t {
                                Term::Var(v) => {
                                    let k = rename.len();
                                    Term::Var(rename.entry(v).or_insert_with(|| format!("v{k}")).clone())
                                }
                                c => c,
                            })
                            .collect(),
                    },
                },
                other => other,
            })
            .collect();
        let canon_head: Vec<Term> = head_vars.iter().map(|v| Term::Var(rename[v].clone())).collect();
        let key = format!(
            "{}|{}",
            canon_head.len(),
            canon_body.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
        );
        let next = self.blockers.len() + 1;
        let index = *self.blocker_index.entry(key).or_insert(next);
        if index == next {
            self.blockers.push(Rule {
                head: ProgramAtom {
                    pred: Pred::Blocker { index },
                    terms: canon_head,
                },
                body: canon_body,
                stratum: 1,
                origin: None,
            });
        }
        ProgramAtom {
            pred: Pred::Blocker { index },
            terms: head_vars.into_iter().map(Term::Var).collect(),
        }
    }
}

/// Positive body of an image, duplicates merged. `None` if one atom would
/// need to be both endogenous and exogenous.
fn dedup_body(s: &[SAtom]) -> Option<Vec<Literal>> {
    let mut seen: HashMap<(&str, &[Term]), bool> = HashMap::new();
    let mut out = Vec::new();
    for a in s {
        match seen.get(&(a.relation.as_str(), a.terms.as_slice())) {
            Some(&e) if e != a.endo => return None,
            Some(_) => {}
            None => {
                seen.insert((a.relation.as_str(), a.terms.as_slice()), a.endo);
                out.push(Literal::Pos {
                    atom: ProgramAtom {
                        pred: Pred::Edb {
                            relation: a.relation.clone(),
                            endo: a.endo,
                        },
                        terms: a.terms.clone(),
                    },
                });
            }
        }
    }
    Some(out)
}

/// Variables of the endogenous atoms, in order of first occurrence.
fn n_variables(q: &Query, r: &[bool]) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (a, &endo) in q.atoms.iter().zip(r) {
        if endo {
            for t in &a.terms {
                if let Term::Var(v) = t {
                    if seen.insert(v.clone()) {
                        out.push(v.clone());
                    }
                }
            }
        }
    }
    out
}

/// All equality types of `vars`: set partitions whose blocks are either
/// left free (named after their first variable) or pinned to a distinct
/// query constant.
fn partitions(vars: &[String], constants: &[Const]) -> Vec<Vec<(String, Term)>> {
    fn go(
        vars: &[String],
        constants: &[Const],
        i: usize,
        blocks: &mut Vec<(Term, bool)>,
        used_const: &mut Vec<bool>,
        assign: &mut Vec<(String, Term)>,
        out: &mut Vec<Vec<(String, Term)>>,
    ) {
        if i == vars.len() {
            out.push(assign.clone());
            return;
        }
        for b in 0..blocks.len() {
            let t = blocks[b].0.clone();
            assign.push((vars[i].clone(), t));
            go(vars, constants, i + 1, blocks, used_const, assign, out);
            assign.pop();
        }
        // new free block
        blocks.push((Term::Var(vars[i].clone()), true));
        assign.push((vars[i].clone(), Term::Var(vars[i].clone())));
        go(vars, constants, i + 1, blocks, used_const, assign, out);
        assign.pop();
        blocks.pop();
        // new block pinned to an unused constant
        for c in 0..constants.len() {
            if used_const[c] {
                continue;
            }
            used_const[c] = true;
            let t = Term::Const(constants[c].clone());
            blocks.push((t.clone(), false));
            assign.push((vars[i].clone(), t));
            go(vars, constants, i + 1, blocks, used_const, assign, out);
            assign.pop();
            blocks.pop();
            used_const[c] = false;
        }
    }
    let mut out = Vec::new();
    go(
        vars,
        constants,
        0,
        &mut Vec::new(),
        &mut vec![false; constants.len()],
        &mut Vec::new(),
        &mut out,
    );
    out
}

fn product<T: Clone>(options: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut out: Vec<Vec<T>> = vec![Vec::new()];
    for opts in options {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                opts.iter().map(move |o| {
                    let mut p = prefix.clone();
                    p.push(o.clone());
                    p
                })
            })
            .collect();
    }
    out
}
