//! Responsibility for weakly linear queries by max-flow / min-cut.
//!
//! The query is weakened (dominations, dissociations) to a linear one with
//! the probed tuple's atom kept endogenous. Every valuation becomes a
//! source→target path whose i-th edge is its tuple for atom g_i (or, for an
//! exogenous atom, its projection on the weakened variables of g_i); the
//! boundary nodes between g_i and g_{i+1} are the projections on the shared
//! variables. Endogenous tuple edges have capacity 1, everything else ∞.
//!
//! Domination needs care: a tuple u of a dominated atom can be swapped for
//! the tuple w of its dominator that every valuation through u uses, unless
//! w lies on the valuation that has to survive. So when probing a path p,
//! dominated tuples whose dominator tuple is on p become cuttable again. If
//! such a tuple belongs to a dissociated atom it has no edge of its own and
//! the probe reports [`Error::NotApplicable`].
//!
//! Edges are built from the valuations only: a tuple that joins nothing
//! would only add dead ends. Connected components of the network (through
//! non-terminal nodes) are cut independently, so the base cut of every
//! other component is computed once and shared between probed tuples.
//! Witnesses are the minimum cuts nearest the target, which makes them
//! deterministic.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use num_rational::Ratio;

use super::maxflow::{FlowGraph, INF};
use super::{Contingency, ResponsibilityResult, SolverKind};
use crate::budget::Budget;
use crate::causality::pattern_of;
use crate::complexity::{weakening_closure_pinned, QueryShape};
use crate::error::{Error, Result};
use crate::lineage::ValuationSet;
use crate::qmodel::Query;
use crate::storage::{DatabaseInstance, RelationStatus, TupleId};
use crate::value::Const;

const SOURCE: usize = 0;
const TARGET: usize = 1;

#[derive(Debug, Clone)]
struct Edge {
    from: usize,
    to: usize,
    cap: u64,
    /// Endogenous tuple the edge stands for, if it can be cut.
    tuple: Option<TupleId>,
    /// Dominator tuple that makes this dominated edge cuttable.
    released_by: Option<TupleId>,
}

#[derive(Debug, Clone)]
struct Component {
    graph: FlowGraph,
    /// Endogenous tuple carried by each edge, if any.
    edge_tuple: Vec<Option<TupleId>>,
    /// Dominator tuple → dominated edges it releases.
    releases: HashMap<TupleId, Vec<usize>>,
    /// Dominator tuple → endogenous tuples of dissociated dominated atoms.
    blocked: HashMap<TupleId, Vec<TupleId>>,
    /// (valuation index, edge path)
    paths: Vec<(usize, Vec<usize>)>,
    base: u64,
}

/// The flow network of one query and instance, probing tuples of one atom.
#[derive(Debug, Clone)]
pub struct FlowSolver {
    atom: usize,
    relation: String,
    valuations: Arc<ValuationSet>,
    components: Vec<Component>,
    /// Probed-atom tuple → (component, edge).
    probe: HashMap<TupleId, (usize, usize)>,
    finite_total: u64,
    infinite: usize,
    base_cuts: Arc<[TupleId]>,
    base_ranges: Vec<std::ops::Range<usize>>,
}

#[derive(Hash, PartialEq, Eq)]
enum EdgeKey {
    Tuple(usize, TupleId),
    Projection(usize, Vec<Const>),
}

/// How the edges of one atom are built.
#[derive(Clone, Copy)]
enum AtomKind {
    Endo,
    Exo,
    /// Dominated by a surviving, fully endogenous atom with fewer variables.
    Dominated {
        dominator: usize,
        dissociated: bool,
    },
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

impl FlowSolver {
    /// Builds the network for tuples of atom `atom`. `db` must already carry
    /// the query's overrides and `valuations` must be its valuations.
    pub fn build(
        q: &Query,
        db: &DatabaseInstance,
        valuations: Arc<ValuationSet>,
        atom: usize,
        budget: &Budget,
    ) -> Result<Self> {
        q.require_boolean()?;
        if atom >= q.atoms.len() {
            return Err(Error::NotApplicable(format!("query has no atom {atom}")));
        }
        let shape = QueryShape::from_query(q, &pattern_of(q, db));
        if shape.has_self_join() {
            return Err(Error::NotApplicable(
                "an endogenous relation occurs more than once".into(),
            ));
        }
        let w = weakening_closure_pinned(&shape, Some(atom), budget)?.ok_or_else(|| {
            Error::NotApplicable(format!(
                "`{shape}` is not weakly linear with {} kept endogenous",
                q.atoms[atom].relation
            ))
        })?;
        let kinds: Vec<AtomKind> = (0..shape.atoms.len())
            .map(|i| {
                let before = &shape.atoms[i];
                let after = &w.result.atoms[i];
                if after.is_endo_like() {
                    return Ok(AtomKind::Endo);
                }
                if !before.is_endo_like() {
                    return Ok(AtomKind::Exo);
                }
                let dominator = (0..shape.atoms.len())
                    .find(|&j| {
                        j != i
                            && w.result.atoms[j].status == RelationStatus::Endogenous
                            && shape.atoms[j].vars.is_subset(&before.vars)
                    })
                    .ok_or_else(|| Error::NotApplicable(format!("no dominator left for {}", before.relation)))?;
                Ok(AtomKind::Dominated {
                    dominator,
                    dissociated: after.vars != before.vars,
                })
            })
            .collect::<Result<_>>()?;
        let var_index: HashMap<&str, usize> = valuations
            .vars
            .iter()
            .enumerate()
            .map(|(i, v)| (v.as_str(), i))
            .collect();
        let weak_vars: Vec<Vec<usize>> = w
            .result
            .atoms
            .iter()
            .map(|a| a.vars.iter().map(|v| var_index[v.as_str()]).collect())
            .collect();
        let order = &w.order;
        let m = order.len();
        let interfaces: Vec<Vec<usize>> = (1..m)
            .map(|k| {
                let next: HashSet<usize> = weak_vars[order[k]].iter().copied().collect();
                weak_vars[order[k - 1]]
                    .iter()
                    .copied()
                    .filter(|v| next.contains(v))
                    .collect()
            })
            .collect();

        // global network
        let mut nodes: HashMap<(usize, Vec<Const>), usize> = HashMap::new();
        let mut node_count = 2;
        let mut edge_ids: HashMap<EdgeKey, usize> = HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut paths: Vec<Vec<usize>> = Vec::with_capacity(valuations.len());
        // (dominator tuple, dominated tuple, valuation index)
        let mut blocked: Vec<(TupleId, TupleId, usize)> = Vec::new();
        let project =
            |binding: &[Const], vars: &[usize]| -> Vec<Const> { vars.iter().map(|&i| binding[i].clone()).collect() };
        for (vi, v) in valuations.valuations.iter().enumerate() {
            let mut path = Vec::with_capacity(m);
            let mut from = SOURCE;
            for (k, &a) in order.iter().enumerate() {
                let to = if k + 1 == m {
                    TARGET
                } else {
                    let key = (k + 1, project(&v.binding, &interfaces[k]));
                    *nodes.entry(key).or_insert_with(|| {
                        node_count += 1;
                        node_count - 1
                    })
                };
                let tid = v.atoms[a];
                let endo = db.is_endo(tid);
                let projection = || EdgeKey::Projection(k, project(&v.binding, &weak_vars[a]));
                let (key, cap, tuple, released_by) = match kinds[a] {
                    AtomKind::Endo => (
                        EdgeKey::Tuple(k, tid),
                        if endo { 1 } else { INF },
                        endo.then_some(tid),
                        None,
                    ),
                    AtomKind::Exo => (projection(), INF, None, None),
                    AtomKind::Dominated {
                        dominator,
                        dissociated: false,
                    } => (
                        EdgeKey::Tuple(k, tid),
                        INF,
                        endo.then_some(tid),
                        endo.then_some(v.atoms[dominator]),
                    ),
                    AtomKind::Dominated {
                        dominator,
                        dissociated: true,
                    } => {
                        if endo {
                            blocked.push((v.atoms[dominator], tid, vi));
                        }
                        (projection(), INF, None, None)
                    }
                };
                let e = *edge_ids.entry(key).or_insert_with(|| {
                    edges.push(Edge {
                        from,
                        to,
                        cap,
                        tuple,
                        released_by,
                    });
                    edges.len() - 1
                });
                path.push(e);
                from = to;
            }
            paths.push(path);
        }

        // components through non-terminal nodes
        let mut parent: Vec<usize> = (0..node_count).collect();
        for e in &edges {
            if e.from > TARGET && e.to > TARGET {
                let (ru, rv) = (find(&mut parent, e.from), find(&mut parent, e.to));
                parent[ru] = rv;
            }
        }
        let mut comp_of_root: HashMap<usize, usize> = HashMap::new();
        let mut edge_comp = Vec::with_capacity(edges.len());
        let mut comp_count = 0;
        for e in &edges {
            let inner = if e.from > TARGET {
                Some(e.from)
            } else if e.to > TARGET {
                Some(e.to)
            } else {
                None
            };
            let c = match inner {
                Some(n) => {
                    let r = find(&mut parent, n);
                    *comp_of_root.entry(r).or_insert_with(|| {
                        comp_count += 1;
                        comp_count - 1
                    })
                }
                None => {
                    comp_count += 1;
                    comp_count - 1
                }
            };
            edge_comp.push(c);
        }

        let mut local_nodes: Vec<HashMap<usize, usize>> = vec![HashMap::new(); comp_count];
        let mut local_edges: Vec<Vec<Edge>> = vec![Vec::new(); comp_count];
        let mut local_edge = vec![0usize; edges.len()];
        for (e, edge) in edges.iter().enumerate() {
            let c = edge_comp[e];
            let local = |n: usize, map: &mut HashMap<usize, usize>| {
                if n <= TARGET {
                    n
                } else {
                    let next = map.len() + 2;
                    *map.entry(n).or_insert(next)
                }
            };
            let from = local(edge.from, &mut local_nodes[c]);
            let to = local(edge.to, &mut local_nodes[c]);
            local_edge[e] = local_edges[c].len();
            local_edges[c].push(Edge {
                from,
                to,
                ..edge.clone()
            });
        }
        let mut comp_blocked: Vec<HashMap<TupleId, Vec<TupleId>>> = vec![HashMap::new(); comp_count];
        for (d, u, vi) in blocked {
            comp_blocked[edge_comp[paths[vi][0]]].entry(d).or_default().push(u);
        }
        let mut comp_paths: Vec<Vec<(usize, Vec<usize>)>> = vec![Vec::new(); comp_count];
        for (vi, path) in paths.into_iter().enumerate() {
            let c = edge_comp[path[0]];
            comp_paths[c].push((vi, path.into_iter().map(|e| local_edge[e]).collect()));
        }

        let mut components = Vec::with_capacity(comp_count);
        let mut finite_total: u64 = 0;
        let mut infinite = 0;
        let mut cuts: Vec<TupleId> = Vec::new();
        let mut base_ranges = Vec::with_capacity(comp_count);
        for (c, ((les, cps), blocked)) in local_edges.into_iter().zip(comp_paths).zip(comp_blocked).enumerate() {
            let mut graph = FlowGraph::new(local_nodes[c].len() + 2);
            let mut edge_tuple = Vec::with_capacity(les.len());
            let mut releases: HashMap<TupleId, Vec<usize>> = HashMap::new();
            for (i, e) in les.into_iter().enumerate() {
                graph.add_edge(e.from, e.to, e.cap);
                edge_tuple.push(e.tuple);
                if let Some(d) = e.released_by {
                    releases.entry(d).or_default().push(i);
                }
            }
            let base = graph.max_flow(SOURCE, TARGET);
            let start = cuts.len();
            if base == INF {
                infinite += 1;
            } else {
                finite_total = finite_total.saturating_add(base);
                let cut: HashSet<usize> = graph.min_cut_edges_near_target(TARGET).into_iter().collect();
                if cps.iter().any(|(_, p)| !p.iter().any(|e| cut.contains(e))) {
                    return Err(Error::InvalidWitness(format!(
                        "base cut of component {c} misses a path"
                    )));
                }
                let mut ts: Vec<TupleId> = cut.iter().filter_map(|&e| edge_tuple[e]).collect();
                ts.sort_unstable();
                cuts.extend(ts);
            }
            base_ranges.push(start..cuts.len());
            components.push(Component {
                graph,
                edge_tuple,
                releases,
                blocked,
                paths: cps,
                base,
            });
        }

        let mut probe = HashMap::new();
        for (c, comp) in components.iter().enumerate() {
            for (_, p) in &comp.paths {
                let e = p[order.iter().position(|&a| a == atom).expect("atom in order")];
                if let Some(t) = comp.edge_tuple[e] {
                    probe.insert(t, (c, e));
                }
            }
        }

        Ok(FlowSolver {
            atom,
            relation: q.atoms[atom].relation.clone(),
            valuations,
            components,
            probe,
            finite_total,
            infinite,
            base_cuts: cuts.into(),
            base_ranges,
        })
    }

    pub fn atom(&self) -> usize {
        self.atom
    }

    /// ρ_t for an endogenous tuple of the probed atom's relation.
    pub fn responsibility(&self, db: &DatabaseInstance, t: TupleId) -> Result<ResponsibilityResult> {
        super::check_endogenous(db, t)?;
        if db.tuple(t).relation != self.relation {
            return Err(Error::NotApplicable(format!(
                "network probes {} tuples, not {}",
                self.relation,
                db.reference(t)
            )));
        }
        let none = ResponsibilityResult::not_a_cause(t, SolverKind::Flow);
        let Some(&(c, te)) = self.probe.get(&t) else {
            return Ok(none);
        };
        let comp = &self.components[c];
        let own_infinite = usize::from(comp.base == INF);
        if self.infinite > own_infinite {
            return Ok(none);
        }
        let others = self.finite_total - if comp.base == INF { 0 } else { comp.base };

        // lower bound for every probe: t removed, every dominated edge cuttable
        let mut relaxed = comp.graph.clone();
        relaxed.set_capacity(te, 0);
        for &e in comp.releases.values().flatten() {
            relaxed.set_capacity(e, 1);
        }
        let lower = relaxed.max_flow(SOURCE, TARGET);
        if lower == INF {
            return Ok(none);
        }
        let mut through: Vec<&(usize, Vec<usize>)> = comp.paths.iter().filter(|(_, p)| p.contains(&te)).collect();
        through.sort_by(|a, b| a.1.cmp(&b.1));
        through.dedup_by(|a, b| a.1 == b.1);

        let mut best: Option<(u64, Vec<TupleId>)> = None;
        for (vi, p) in through {
            let on_path = &self.valuations.valuations[*vi].atoms;
            let mut g = comp.graph.clone();
            g.set_capacity(te, 0);
            for w in on_path {
                if let Some(us) = comp.blocked.get(w) {
                    if us.iter().any(|u| !on_path.contains(u)) {
                        return Err(Error::NotApplicable(format!(
                            "{} may need a tuple of a dominated, dissociated atom",
                            db.reference(t)
                        )));
                    }
                }
                for &e in comp.releases.get(w).into_iter().flatten() {
                    g.set_capacity(e, 1);
                }
            }
            for &e in p {
                if e != te {
                    g.set_capacity(e, INF);
                }
            }
            let f = g.max_flow(SOURCE, TARGET);
            if f == INF || best.as_ref().is_some_and(|(b, _)| *b <= f) {
                continue;
            }
            let mut cut: Vec<TupleId> = g
                .min_cut_edges_near_target(TARGET)
                .into_iter()
                .filter(|&e| e != te)
                .filter_map(|e| comp.edge_tuple[e])
                .collect();
            cut.sort_unstable();
            best = Some((f, cut));
            if f == lower {
                break;
            }
        }
        let Some((kappa, local)) = best else {
            return Ok(none);
        };
        if local.len() as u64 != kappa {
            return Err(Error::InvalidWitness(format!(
                "cut of capacity {kappa} has {} tuples",
                local.len()
            )));
        }
        self.verify_local(c, t, &local)?;
        let contingency = Contingency::with_shared(local, self.base_cuts.clone(), self.base_ranges[c].clone());
        let size = kappa.saturating_add(others);
        Ok(ResponsibilityResult {
            tuple: t,
            rho: Ratio::new(1, size.saturating_add(1)),
            contingency: Some(contingency),
            solver: SolverKind::Flow,
        })
    }

    /// Replay inside t's component; the other components' base cuts were
    /// checked when the network was built.
    fn verify_local(&self, c: usize, t: TupleId, gamma: &[TupleId]) -> Result<()> {
        let removed: HashSet<TupleId> = gamma.iter().copied().collect();
        let mut survives = false;
        for (vi, _) in &self.components[c].paths {
            let atoms = &self.valuations.valuations[*vi].atoms;
            if atoms.iter().any(|a| removed.contains(a)) {
                continue;
            }
            if !atoms.contains(&t) {
                return Err(Error::InvalidWitness("a valuation avoiding t survives the cut".into()));
            }
            survives = true;
        }
        if !survives {
            return Err(Error::InvalidWitness("the cut removes every valuation".into()));
        }
        Ok(())
    }
}

/// Flow responsibility of `t` for a Boolean query.
pub fn responsibility_flow(
    q: &Query,
    db: &DatabaseInstance,
    t: TupleId,
    budget: &Budget,
) -> Result<ResponsibilityResult> {
    let db = db.for_query(q);
    super::check_endogenous(&db, t)?;
    let relation = &db.tuple(t).relation;
    let Some(atom) = q.atoms.iter().position(|a| &a.relation == relation) else {
        q.require_boolean()?;
        return Ok(ResponsibilityResult::not_a_cause(t, SolverKind::Flow));
    };
    let vs = Arc::new(crate::lineage::valuations(q, &db)?);
    FlowSolver::build(q, &db, vs, atom, budget)?.responsibility(&db, t)
}
