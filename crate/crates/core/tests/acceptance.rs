//! One PASS/FAIL line per acceptance criterion, with timings.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use causaldb::causality::{evaluate_program, generate_program, pattern_of, why_so_causes};
use causaldb::complexity::{classify, Canonical, Verdict};
use causaldb::responsibility::{rank_causes, Mode, ResponsibilityResult, SolverChoice, SolverKind};
use causaldb::storage::{DatabaseInstance, TupleId};
use causaldb::{parse_query, Budget, Const, Error, Query};
use common::{check_agreement, load_fixture, query_file, random_instance, Flags, RelationSpec, AGREEMENT_QUERIES};
use num_rational::Ratio;
use rand::{rngs::StdRng, Rng, SeedableRng};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn rank(q: &Query, db: &DatabaseInstance) -> Result<Vec<ResponsibilityResult>, String> {
    rank_causes(q, db, Mode::WhySo, SolverChoice::Auto, &Budget::default()).map_err(|e| e.to_string())
}

fn by_ref<'a>(ranked: &'a [ResponsibilityResult], db: &DatabaseInstance, r: &str) -> Option<&'a ResponsibilityResult> {
    ranked.iter().find(|x| db.reference(x.tuple) == r)
}

fn refs(db: &DatabaseInstance, ids: &[TupleId]) -> Vec<String> {
    ids.iter().map(|&t| db.reference(t)).collect()
}

fn answers_a2_a4() -> Outcome {
    let db = load_fixture("chain", None);
    let q = query_file("chain/q.dl");
    let a2 = rank(&q.specialize(&[Const::parse("a2")]).map_err(|e| e.to_string())?, &db)?;
    let s1 = by_ref(&a2, &db, "S(a1)").ok_or("S(a1) is not a cause of a2")?;
    ensure!(s1.rho == Ratio::new(1, 1), "ρ(S(a1)) = {}", s1.rho);

    let a4 = rank(&q.specialize(&[Const::parse("a4")]).map_err(|e| e.to_string())?, &db)?;
    let s3 = by_ref(&a4, &db, "S(a3)").ok_or("S(a3) is not a cause of a4")?;
    ensure!(s3.rho == Ratio::new(1, 2), "ρ(S(a3)) = {}", s3.rho);
    let gamma = refs(&db, &s3.contingency.as_ref().ok_or("no contingency")?.to_vec());
    ensure!(gamma == ["S(a2)"], "Γ = {gamma:?}");
    Ok(format!("a2: S(a1) ρ=1; a4: S(a3) ρ=1/2 Γ={gamma:?}"))
}

fn exogenous_r43() -> Outcome {
    let db = load_fixture("chain", Some("chain/exo_r43.ann"));
    let q = query_file("chain/q_a3.dl");
    let causes: Vec<String> = why_so_causes(&q, &db)
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|c| db.reference(c.tuple))
        .collect();
    ensure!(causes == ["S(a3)"], "causes {causes:?}");
    let ranked = rank(&q, &db)?;
    ensure!(by_ref(&ranked, &db, "R(a3,a3)").is_none(), "R(a3,a3) is ranked");
    Ok(format!("causes {causes:?}"))
}

fn burton() -> Outcome {
    use causaldb::lineage::valuations;
    use causaldb::responsibility::brute_force_with;

    let db = load_fixture("burton", Some("burton/annotations.ann"));
    let q = query_file("burton/q.dl")
        .specialize(&[Const::parse("Musical")])
        .map_err(|e| e.to_string())?;
    let ranked = rank(&q, &db)?;
    let column: Vec<String> = ranked.iter().map(|r| r.rho.to_string()).collect();
    let expected = ["1/3", "1/3", "1/3", "1/3", "1/4", "1/4", "1/5", "1/5", "1/5"];
    ensure!(column == expected, "ρ column {column:?}");

    let find = |needle: &str| ranked.iter().find(|r| db.reference(r.tuple).contains(needle));
    let sweeney = find("Sweeney Todd").ok_or("Sweeney Todd is not ranked")?;
    let gamma = refs(&db, &sweeney.contingency.as_ref().ok_or("no contingency")?.to_vec());
    ensure!(
        gamma.len() == 2
            && gamma
                .iter()
                .all(|g| g.starts_with("Director(") && g.ends_with(",Burton)")),
        "Sweeney Todd Γ = {gamma:?}"
    );
    let manon = find("Manon Lescaut").ok_or("Manon Lescaut is not ranked")?;
    let m = manon.contingency.as_ref().ok_or("no contingency")?.len();
    ensure!(m == 4, "Manon Lescaut |Γ| = {m}");

    // brute force over the whole fixture
    let view = db.for_query(&q);
    let vs = valuations(&q, &view).map_err(|e| e.to_string())?;
    let mut brute: Vec<(String, Ratio<u64>)> = Vec::new();
    for t in view.endo_ids() {
        let r = brute_force_with(&vs, &view, t, &Budget::default()).map_err(|e| e.to_string())?;
        if *r.rho.numer() != 0 {
            brute.push((view.reference(t), r.rho));
        }
    }
    let mut ours: Vec<(String, Ratio<u64>)> = ranked.iter().map(|r| (db.reference(r.tuple), r.rho)).collect();
    brute.sort();
    ours.sort();
    ensure!(brute == ours, "brute force disagrees: {brute:?}");
    Ok(format!("ρ column {}", column.join(" ")))
}

fn classifier() -> Outcome {
    let table: &[(&str, &str, Option<Canonical>)] = &[
        (
            "q :- A^n(x), B^n(y), C^n(z), W^x(x,y,z).",
            "np-hard",
            Some(Canonical::H1),
        ),
        ("q :- R^n(x,y), S^n(y,z), T^n(z,x).", "np-hard", Some(Canonical::H2)),
        (
            "q :- A^n(x), B^n(y), C^n(z), R^x(x,y), S^x(y,z), T^x(z,x).",
            "np-hard",
            Some(Canonical::H3),
        ),
        ("q :- R^n(x,y), S^n(y,z).", "ptime", None),
        ("q :- R^n(x,y), S^x(y,z), T^n(z,x).", "ptime", None),
        ("q :- R^n(x,y), S^n(y,z), T^n(z,x), V^n(x).", "ptime", None),
        (
            "q :- R^n(x,y), S^n(y,z), T^n(z,u), U^n(u,x).",
            "np-hard",
            Some(Canonical::H2),
        ),
        ("q :- R^n(x), S^x(x,y), R^n(y).", "np-hard", None),
        ("q :- R^n(x,y), R^n(y,z).", "open", None),
    ];
    let budget = Budget::default();
    for &(text, kind, terminal) in table {
        let q = parse_query(text).map_err(|e| e.to_string())?;
        let v = classify(&q, &BTreeMap::new(), &budget).map_err(|e| format!("{text}: {e}"))?;
        ensure!(v.kind() == kind, "{text}: {} instead of {kind}", v.kind());
        v.verify(&q, &BTreeMap::new())
            .map_err(|e| format!("{text}: certificate does not replay: {e}"))?;
        if let Some(h) = terminal {
            match &v {
                Verdict::NpHard { terminal, .. } => ensure!(*terminal == h, "{text}: ends in {terminal:?}"),
                _ => unreachable!(),
            }
        }
    }
    Ok(format!("{} queries", table.len()))
}

fn solver_agreement() -> Outcome {
    let mut rng = StdRng::seed_from_u64(5);
    let mut tuples = 0;
    let mut instances = 0;
    for (text, relations) in AGREEMENT_QUERIES {
        let q = parse_query(text).map_err(|e| e.to_string())?;
        for _ in 0..40 {
            let db = random_instance(&mut rng, relations, 8, 4);
            tuples += check_agreement(&q, &db)?;
            instances += 1;
        }
    }
    Ok(format!("{instances} instances, {tuples} tuples"))
}

fn datalog() -> Outcome {
    let cases: &[(&str, &[RelationSpec])] = &[
        ("q :- R(x,y), S(y).", &[("R", 2, Flags::Mixed), ("S", 1, Flags::Endo)]),
        (
            "q :- S(x), R(x,y), S(y).",
            &[("S", 1, Flags::Endo), ("R", 2, Flags::Exo)],
        ),
        ("q :- R(x,y), S(y).", &[("R", 2, Flags::Endo), ("S", 1, Flags::Endo)]),
    ];
    let mut rng = StdRng::seed_from_u64(6);
    for &(text, relations) in cases {
        let q = parse_query(text).map_err(|e| e.to_string())?;
        for _ in 0..100 {
            let max = rng.gen_range(1..=8);
            let db = random_instance(&mut rng, relations, max, 4);
            let program = generate_program(&q, &pattern_of(&q, &db)).map_err(|e| format!("{text}: {e}"))?;
            ensure!(program.strata() == 2, "{text}: {} strata", program.strata());
            let got: BTreeMap<String, BTreeSet<TupleId>> = evaluate_program(&program, &db)
                .map_err(|e| e.to_string())?
                .into_iter()
                .filter(|(_, s)| !s.is_empty())
                .collect();
            let mut want: BTreeMap<String, BTreeSet<TupleId>> = BTreeMap::new();
            match why_so_causes(&q, &db) {
                Ok(cs) => {
                    for c in cs {
                        want.entry(db.tuple(c.tuple).relation.clone())
                            .or_default()
                            .insert(c.tuple);
                    }
                }
                Err(Error::NotAnAnswer) => {}
                Err(e) => return Err(e.to_string()),
            }
            ensure!(got == want, "{text}: program {got:?} vs lineage {want:?}");
        }
    }
    Ok("3 queries × 100 instances".into())
}

fn why_no() -> Outcome {
    let q = parse_query("q :- R(x,y), S(y,z).").map_err(|e| e.to_string())?;
    let mut rng = StdRng::seed_from_u64(8);
    let row = |rng: &mut StdRng| -> (&'static str, Vec<Const>) {
        let rel = if rng.gen_bool(0.5) { "R" } else { "S" };
        (
            rel,
            (0..2)
                .map(|_| Const::parse(&format!("d{}", rng.gen_range(0..4))))
                .collect(),
        )
    };
    let holds = |rows: &[&(&str, Vec<Const>)]| {
        rows.iter()
            .any(|(r, a)| *r == "R" && rows.iter().any(|(s, b)| *s == "S" && a[1] == b[0]))
    };
    let mut done = 0;
    let mut causes = 0;
    while done < 100 {
        let mut seen = BTreeSet::new();
        let exo: Vec<_> = (0..rng.gen_range(0..5))
            .map(|_| row(&mut rng))
            .filter(|r| seen.insert(r.clone()))
            .collect();
        if holds(&exo.iter().collect::<Vec<_>>()) {
            continue;
        }
        let cands: Vec<_> = (0..rng.gen_range(1..=6))
            .map(|_| row(&mut rng))
            .filter(|r| seen.insert(r.clone()))
            .collect();
        done += 1;
        let mut dx = DatabaseInstance::default();
        let mut dc = DatabaseInstance::default();
        for db in [&mut dx, &mut dc] {
            db.ensure_relation("R", 2).map_err(|e| e.to_string())?;
            db.ensure_relation("S", 2).map_err(|e| e.to_string())?;
        }
        for (r, v) in &exo {
            dx.insert(r, v.clone(), false).map_err(|e| e.to_string())?;
        }
        let mut ids = Vec::new();
        for (r, v) in &cands {
            ids.push(dc.insert(r, v.clone(), true).map_err(|e| e.to_string())?);
        }
        let ranked = rank_causes(
            &q,
            &dx,
            Mode::WhyNo { candidates: &dc },
            SolverChoice::Auto,
            &Budget::default(),
        )
        .map_err(|e| e.to_string())?;
        for (i, id) in ids.iter().enumerate() {
            let others: Vec<usize> = (0..cands.len()).filter(|&j| j != i).collect();
            let best = (0u32..1 << others.len())
                .filter(|mask| {
                    let mut rows: Vec<_> = exo.iter().collect();
                    rows.extend(
                        others
                            .iter()
                            .enumerate()
                            .filter(|(b, _)| mask & (1 << b) != 0)
                            .map(|(_, &j)| &cands[j]),
                    );
                    let before = holds(&rows);
                    rows.push(&cands[i]);
                    !before && holds(&rows)
                })
                .map(u32::count_ones)
                .min();
            let got = ranked.iter().find(|r| r.tuple == *id);
            match (best, got) {
                (None, None) => {}
                (Some(k), Some(r)) => {
                    let size = r.contingency.as_ref().map_or(usize::MAX, |c| c.len());
                    ensure!(
                        r.rho == Ratio::new(1, k as u64 + 1),
                        "{}: ρ {} vs |Γ| {k}",
                        dc.reference(*id),
                        r.rho
                    );
                    ensure!(size == k as usize && size <= 2, "{}: |Γ| = {size}", dc.reference(*id));
                    causes += 1;
                }
                (b, g) => {
                    return Err(format!(
                        "{}: enumeration {b:?}, solver {:?}",
                        dc.reference(*id),
                        g.map(|r| r.rho)
                    ))
                }
            }
        }
    }
    Ok(format!("100 instances, {causes} causes"))
}

fn large_flow() -> Outcome {
    let mut db = DatabaseInstance::default();
    db.ensure_relation("R", 2).map_err(|e| e.to_string())?;
    db.ensure_relation("S", 2).map_err(|e| e.to_string())?;
    for i in 0..10_000u32 {
        let r = vec![Const::parse(&format!("r{i}")), Const::parse(&format!("y{}", i % 2000))];
        db.insert("R", r, true).map_err(|e| e.to_string())?;
    }
    for j in 0..10_000u32 {
        let s = vec![Const::parse(&format!("y{}", j % 2000)), Const::parse(&format!("s{j}"))];
        db.insert("S", s, true).map_err(|e| e.to_string())?;
    }
    let q = parse_query("q :- R(x,y), S(y,z).").map_err(|e| e.to_string())?;
    let ranked = rank(&q, &db)?;
    ensure!(ranked.len() == 20_000, "{} causes", ranked.len());
    let rho = Ratio::new(1, 10_000);
    for r in &ranked {
        ensure!(
            r.solver == SolverKind::Flow,
            "{} solved by {}",
            db.reference(r.tuple),
            r.solver
        );
        ensure!(r.rho == rho, "{}: ρ {}", db.reference(r.tuple), r.rho);
        ensure!(
            r.contingency.as_ref().is_some_and(|c| c.len() == 9_999),
            "{}: |Γ|",
            db.reference(r.tuple)
        );
    }
    Ok("20000 causes, ρ=1/10000 each".into())
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome, u64);
    let criteria: &[Criterion] = &[
        ("1 causes of answers a2 and a4", answers_a2_a4, 1),
        ("2 exogenous R(a4,a3)", exogenous_r43, 1),
        ("3 Burton musicals ranking", burton, 5),
        ("4 classifier table", classifier, 10),
        ("5 flow/exact/brute agreement", solver_agreement, 60),
        ("6 Datalog program equivalence", datalog, 60),
        ("7 Why-No vs subset enumeration", why_no, 30),
        ("8 10k-tuple flow instance", large_flow, 10),
    ];
    let mut failed = 0;
    for &(name, run, limit) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(_) if took > Duration::from_secs(limit) => Err(format!("took {took:.2?}, limit {limit} s")),
            o => o,
        };
        match outcome {
            Ok(detail) => println!("PASS  {name}  ({took:.2?}; {detail})"),
            Err(e) => {
                failed += 1;
                println!("FAIL  {name}  ({took:.2?}; {e})");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
