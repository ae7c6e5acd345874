//! Greedy hash join over atom patterns.

use std::collections::{BTreeMap, HashMap};

use crate::qmodel::Term;
use crate::value::Const;

/// One atom to match: its terms and the candidate rows as
/// `(handle, values)` pairs.
pub(crate) struct JoinInput<'a> {
    pub terms: &'a [Term],
    pub rows: Vec<(u32, &'a [Const])>,
}

/// A match: one row handle per input atom (in input order) and the binding
/// of every variable (in `vars` order).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) struct JoinRow {
    pub binding: Vec<Const>,
    pub rows: Vec<u32>,
}

fn slot_terms(terms: &[Term], slots: &BTreeMap<&str, usize>) -> Vec<Result<usize, Const>> {
    terms
        .iter()
        .map(|t| match t {
            Term::Var(v) => Ok(slots[v.as_str()]),
            Term::Const(c) => Err(c.clone()),
        })
        .collect()
}

/// Rows agreeing with the atom's constants and repeated variables.
fn filter<'a>(pattern: &[Result<usize, Const>], rows: &[(u32, &'a [Const])]) -> Vec<(u32, &'a [Const])> {
    rows.iter()
        .filter(|(_, vals)| {
            vals.len() == pattern.len()
                && pattern.iter().enumerate().all(|(i, p)| match p {
                    Err(c) => vals[i] == *c,
                    Ok(slot) => pattern[..i]
                        .iter()
                        .position(|q| q == &Ok(*slot))
                        .is_none_or(|j| vals[j] == vals[i]),
                })
        })
        .copied()
        .collect()
}

/// All homomorphisms from the atoms into their rows, sorted by binding.
pub(crate) fn join(inputs: &[JoinInput<'_>], vars: &[String]) -> Vec<JoinRow> {
    let slots: BTreeMap<&str, usize> = vars.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
    let patterns: Vec<Vec<Result<usize, Const>>> = inputs.iter().map(|a| slot_terms(a.terms, &slots)).collect();
    let filtered: Vec<Vec<(u32, &[Const])>> = inputs.iter().zip(&patterns).map(|(a, p)| filter(p, &a.rows)).collect();
    if filtered.iter().any(Vec::is_empty) {
        return Vec::new();
    }

    let n = inputs.len();
    let mut placed = vec![false; n];
    let mut bound = vec![false; vars.len()];
    let mut partial: Vec<(Vec<Option<Const>>, Vec<u32>)> = vec![(vec![None; vars.len()], vec![0; n])];

    for _ in 0..n {
        // prefer atoms sharing bound variables, then the smallest
        let next = (0..n)
            .filter(|&i| !placed[i])
            .min_by_key(|&i| {
                let shared = patterns[i].iter().filter(|p| matches!(p, Ok(s) if bound[*s])).count();
                (shared == 0, filtered[i].len(), i)
            })
            .expect("unplaced atom");
        placed[next] = true;

        let pattern = &patterns[next];
        // key = values at the first occurrence of each already-bound slot
        let mut key_pos: Vec<(usize, usize)> = Vec::new();
        for (pos, p) in pattern.iter().enumerate() {
            if let Ok(slot) = p {
                if bound[*slot] && !key_pos.iter().any(|(_, s)| s == slot) {
                    key_pos.push((pos, *slot));
                }
            }
        }
        let mut index: HashMap<Vec<&Const>, Vec<usize>> = HashMap::new();
        for (r, (_, vals)) in filtered[next].iter().enumerate() {
            let key = key_pos.iter().map(|(pos, _)| &vals[*pos]).collect();
            index.entry(key).or_default().push(r);
        }

        let mut out = Vec::new();
        for (binding, rows) in &partial {
            let key: Vec<&Const> = key_pos
                .iter()
                .map(|(_, slot)| binding[*slot].as_ref().expect("bound slot"))
                .collect();
            let Some(hits) = index.get(&key) else { continue };
            for &r in hits {
                let (handle, vals) = filtered[next][r];
                let mut b = binding.clone();
                for (pos, p) in pattern.iter().enumerate() {
                    if let Ok(slot) = p {
                        if b[*slot].is_none() {
                            b[*slot] = Some(vals[pos].clone());
                        }
                    }
                }
                let mut rs = rows.clone();
                rs[next] = handle;
                out.push((b, rs));
            }
        }
        for p in pattern.iter().flatten() {
            bound[*p] = true;
        }
        partial = out;
        if partial.is_empty() {
            return Vec::new();
        }
    }

    let mut result: Vec<JoinRow> = partial
        .into_iter()
        .map(|(b, rows)| JoinRow {
            binding: b.into_iter().map(|v| v.expect("every variable is bound")).collect(),
            rows,
        })
        .collect();
    result.sort_unstable();
    result
}
