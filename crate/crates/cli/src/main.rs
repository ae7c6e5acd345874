use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use causaldb::causality::{evaluate_program, generate_program_with_budget, pattern_of, why_no_causes, why_so_causes};
use causaldb::complexity::{classify, classify_instance};
use causaldb::lineage::{lineage, n_lineage, remove_redundant};
use causaldb::responsibility::{rank_causes, Mode, ResponsibilityResult, SolverChoice};
use causaldb::storage::{generate_whyno_candidates, load_dir, read_candidates_csv, AnnotationSpec, DatabaseInstance};
use causaldb::{parse_answer, parse_query, Budget, Const, Query};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

/// Causes and responsibility for answers and non-answers of conjunctive
/// queries.
#[derive(Parser)]
#[command(name = "causaldb", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the actual causes of an answer (or non-answer).
    Causes(CauseArgs),
    /// Rank the causes by responsibility.
    Responsibility(ResponsibilityArgs),
    /// Classify the responsibility problem of a query.
    Classify(ClassifyArgs),
    /// Print the lineage, n-lineage and minimized n-lineage.
    Lineage(DataArgs),
    /// Print the causality program and the causes it derives.
    DatalogGen(DataArgs),
}

#[derive(Args)]
struct Common {
    /// Query file.
    #[arg(short, long)]
    query: PathBuf,
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Budget overrides, e.g. `brute-tuples=30,exact-nodes=1000000`.
    #[arg(long, env = "CAUSALDB_BUDGET")]
    budget: Option<String>,
}

#[derive(Args)]
struct DataArgs {
    #[command(flatten)]
    common: Common,
    /// Directory with one CSV file per relation.
    #[arg(short, long)]
    data: PathBuf,
    /// Endogenous/exogenous annotation file.
    #[arg(short, long)]
    annotations: Option<PathBuf>,
    /// Answer tuple, e.g. `a4` or `'Sweeney Todd',2007`.
    #[arg(long)]
    answer: Option<String>,
}

#[derive(Args)]
struct CauseArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value_t = CauseMode::WhySo)]
    mode: CauseMode,
    /// Why-No candidates: `Relation,v1,...` per line.
    #[arg(long, conflicts_with = "generate_candidates")]
    candidates: Option<PathBuf>,
    /// Generate at most this many Why-No candidates from the active domain.
    #[arg(long, value_name = "LIMIT")]
    generate_candidates: Option<usize>,
    /// Attach witnesses to every result.
    #[arg(long)]
    explain: bool,
}

#[derive(Args)]
struct ResponsibilityArgs {
    #[command(flatten)]
    causes: CauseArgs,
    #[arg(long, value_enum, default_value_t = Solver::Auto)]
    solver: Solver,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    common: Common,
    /// Read relation statuses off this data instead of the query's annotations.
    #[arg(short, long)]
    data: Option<PathBuf>,
    #[arg(short, long, requires = "data")]
    annotations: Option<PathBuf>,
    /// Attach the weakening or rewrite certificate.
    #[arg(long)]
    explain: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CauseMode {
    WhySo,
    WhyNo,
}

impl CauseMode {
    fn name(self) -> &'static str {
        match self {
            CauseMode::WhySo => "why-so",
            CauseMode::WhyNo => "why-no",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Solver {
    Auto,
    Flow,
    Exact,
    Brute,
}

/// Wrong or missing arguments; exit code 2.
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<Usage>().is_some() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Causes(args) => cmd_causes(&args, None),
        Command::Responsibility(args) => cmd_causes(&args.causes, Some(args.solver)),
        Command::Classify(args) => cmd_classify(&args),
        Command::Lineage(args) => cmd_lineage(&args),
        Command::DatalogGen(args) => cmd_datalog(&args),
    }
}

fn budget(common: &Common) -> Result<Budget> {
    match &common.budget {
        Some(text) => Budget::default()
            .with_overrides(text)
            .map_err(|e| usage(format!("budget: {e}"))),
        None => Ok(Budget::default()),
    }
}

fn read_query(path: &Path) -> Result<Query> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_query(&text).with_context(|| format!("in {}", path.display()))
}

/// The Boolean query for the requested answer.
fn boolean_query(q: &Query, answer: Option<&str>) -> Result<(Query, Vec<Const>)> {
    let values = match answer {
        Some(text) => parse_answer(text).map_err(|e| usage(format!("--answer: {e}")))?,
        None if q.head.is_empty() => Vec::new(),
        None => {
            return Err(usage(format!(
                "the query has head variables ({}); pass --answer",
                q.head.join(", ")
            )))
        }
    };
    if values.len() != q.head.len() {
        return Err(usage(format!(
            "--answer has {} values but the query head has {}",
            values.len(),
            q.head.len()
        )));
    }
    let b = q.specialize(&values)?;
    Ok((b, values))
}

fn load_data(dir: &Path, annotations: Option<&Path>) -> Result<DatabaseInstance> {
    let spec = match annotations {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
            AnnotationSpec::parse(&text).with_context(|| format!("in {}", p.display()))?
        }
        None => AnnotationSpec::default(),
    };
    Ok(load_dir(dir, &spec)?)
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("JSON values serialize"));
}

fn answer_json(values: &[Const]) -> Value {
    Value::Array(values.iter().map(|c| Value::String(c.text())).collect())
}

fn cmd_causes(args: &CauseArgs, solver: Option<Solver>) -> Result<()> {
    let data = &args.data;
    let budget = budget(&data.common)?;
    let why_no = args.mode == CauseMode::WhyNo;
    if why_no && args.candidates.is_none() && args.generate_candidates.is_none() {
        return Err(usage("--mode why-no needs --candidates or --generate-candidates"));
    }
    if why_no && solver.is_some_and(|s| s != Solver::Auto) {
        return Err(usage("Why-No responsibility has a single solver; drop --solver"));
    }
    if !why_no && (args.candidates.is_some() || args.generate_candidates.is_some()) {
        return Err(usage("candidates only apply to --mode why-no"));
    }
    let q = read_query(&data.common.query)?;
    let (q, answer) = boolean_query(&q, data.answer.as_deref())?;
    let db = load_data(&data.data, data.annotations.as_deref())?;

    let mut truncated = false;
    let candidates = if why_no {
        Some(match (&args.candidates, args.generate_candidates) {
            (Some(path), _) => {
                let bytes = std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
                let mut schema = db.schema().clone();
                for atom in &q.atoms {
                    if schema.arity(&atom.relation).is_none() {
                        let columns = (1..=atom.terms.len()).map(|i| format!("c{i}")).collect();
                        schema.add(&atom.relation, columns)?;
                    }
                }
                read_candidates_csv(&bytes, path, &schema)?
            }
            (None, Some(limit)) => {
                let pool = generate_whyno_candidates(&db, &q, limit)?;
                truncated = pool.truncated;
                pool.pool
            }
            (None, None) => unreachable!("checked above"),
        })
    } else {
        None
    };
    // ids of Why-No results refer to the candidates
    let ids_db = candidates.as_ref().unwrap_or(&db);

    let mut out = json!({
        "format": 1,
        "command": if solver.is_some() { "responsibility" } else { "causes" },
        "query": q.to_string(),
        "answer": answer_json(&answer),
        "mode": args.mode.name(),
    });
    if truncated {
        out["candidates_truncated"] = json!(true);
    }

    match solver {
        None => {
            let causes = match &candidates {
                Some(c) => why_no_causes(&q, &db, c)?,
                None => why_so_causes(&q, &db)?,
            };
            let items: Vec<Value> = causes
                .iter()
                .map(|c| {
                    let mut j = c.to_json(ids_db);
                    if !args.explain {
                        j.as_object_mut().expect("object").remove("witness");
                    }
                    j
                })
                .collect();
            if data.common.format == Format::Table {
                println!("{} cause(s) of {} ({})", items.len(), q, args.mode.name());
                for (c, j) in causes.iter().zip(&items) {
                    let kind = j["kind"].as_str().unwrap_or_default();
                    if args.explain {
                        let w: Vec<String> = c.witness.iter().map(|&t| ids_db.reference(t)).collect();
                        println!("  {:<14} {}  witness: {}", kind, ids_db.reference(c.tuple), w.join(" "));
                    } else {
                        println!("  {:<14} {}", kind, ids_db.reference(c.tuple));
                    }
                }
            } else {
                out["causes"] = Value::Array(items);
                print_json(&out);
            }
        }
        Some(solver) => {
            let choice = match solver {
                Solver::Auto => SolverChoice::Auto,
                Solver::Flow => SolverChoice::Flow,
                Solver::Exact => SolverChoice::Exact,
                Solver::Brute => SolverChoice::Brute,
            };
            let mode = match &candidates {
                Some(c) => Mode::WhyNo { candidates: c },
                None => Mode::WhySo,
            };
            let ranked = rank_causes(&q, &db, mode, choice, &budget)?;
            if data.common.format == Format::Table {
                print_ranking(&q, &ranked, ids_db, args.explain);
            } else {
                let items: Vec<Value> = ranked
                    .iter()
                    .map(|r| {
                        let mut j = r.to_json(ids_db);
                        if !args.explain {
                            j.as_object_mut().expect("object").remove("contingency");
                        }
                        j
                    })
                    .collect();
                out["results"] = Value::Array(items);
                print_json(&out);
            }
        }
    }
    Ok(())
}

fn print_ranking(q: &Query, ranked: &[ResponsibilityResult], db: &DatabaseInstance, explain: bool) {
    println!("{} cause(s) of {}", ranked.len(), q);
    let refs: Vec<String> = ranked.iter().map(|r| db.reference(r.tuple)).collect();
    let width = refs.iter().map(|r| r.chars().count()).max().unwrap_or(5).max(5);
    println!("{:>4}  {:<width$}  {:>8}  {:>8}  solver", "#", "tuple", "rho", "≈");
    for (i, (r, name)) in ranked.iter().zip(&refs).enumerate() {
        println!(
            "{:>4}  {:<width$}  {:>8}  {:>8.4}  {}",
            i + 1,
            name,
            r.rho_string(),
            r.rho_float(),
            r.solver
        );
        if explain {
            if let Some(c) = &r.contingency {
                let g: Vec<String> = c.to_vec().into_iter().map(|t| db.reference(t)).collect();
                println!("      Γ = {{{}}}", g.join(", "));
            }
        }
    }
}

fn cmd_classify(args: &ClassifyArgs) -> Result<()> {
    let budget = budget(&args.common)?;
    let q = read_query(&args.common.query)?;
    let verdict = match &args.data {
        Some(dir) => {
            let db = load_data(dir, args.annotations.as_deref())?;
            classify_instance(&q, &db, &budget)?
        }
        None => classify(&q, &Default::default(), &budget)?,
    };
    if args.common.format == Format::Table {
        println!("{}: {}", q, verdict.kind());
        if args.explain {
            println!("{}", serde_json::to_string_pretty(&verdict)?);
        }
    } else {
        let mut out = json!({
            "format": 1,
            "command": "classify",
            "query": q.to_string(),
            "verdict": verdict.kind(),
        });
        if args.explain {
            out["certificate"] = serde_json::to_value(&verdict)?;
        }
        print_json(&out);
    }
    Ok(())
}

fn cmd_lineage(args: &DataArgs) -> Result<()> {
    budget(&args.common)?;
    let q = read_query(&args.common.query)?;
    let (q, answer) = boolean_query(&q, args.answer.as_deref())?;
    let db = load_data(&args.data, args.annotations.as_deref())?;
    let db = db.for_query(&q);
    let phi = lineage(&q, &db)?;
    let phi_n = n_lineage(&phi, &db);
    let minimal = remove_redundant(&phi_n);
    if args.common.format == Format::Table {
        println!("lineage:    {}", phi.display(&db));
        println!("n-lineage:  {}", phi_n.display(&db));
        println!("minimized:  {}", minimal.display(&db));
    } else {
        print_json(&json!({
            "format": 1,
            "command": "lineage",
            "query": q.to_string(),
            "answer": answer_json(&answer),
            "lineage": phi.to_json(&db),
            "n_lineage": phi_n.to_json(&db),
            "minimized": minimal.to_json(&db),
        }));
    }
    Ok(())
}

fn cmd_datalog(args: &DataArgs) -> Result<()> {
    let budget = budget(&args.common)?;
    let q = read_query(&args.common.query)?;
    let (q, answer) = boolean_query(&q, args.answer.as_deref())?;
    let db = load_data(&args.data, args.annotations.as_deref())?;
    let program = generate_program_with_budget(&q, &pattern_of(&q, &db), &budget)?;
    let derived = evaluate_program(&program, &db.for_query(&q))?;
    if args.common.format == Format::Table {
        print!("{program}");
        for (relation, ids) in &derived {
            let refs: Vec<String> = ids.iter().map(|&t| db.reference(t)).collect();
            println!("% causes in {relation}: {}", refs.join(" "));
        }
    } else {
        let causes: serde_json::Map<String, Value> = derived
            .iter()
            .map(|(rel, ids)| {
                (
                    rel.clone(),
                    json!(ids.iter().map(|&t| db.reference(t)).collect::<Vec<_>>()),
                )
            })
            .collect();
        print_json(&json!({
            "format": 1,
            "command": "datalog-gen",
            "query": q.to_string(),
            "answer": answer_json(&answer),
            "strata": program.strata(),
            "program": program.to_string(),
            "causes": causes,
        }));
    }
    Ok(())
}
