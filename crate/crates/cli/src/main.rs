use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use semiplan_core::decomposition::{validate_ghd, Ghd, GhdEnumerator};
use semiplan_core::emit::{render_script, Dialect, EmitOptions, SemijoinStyle};
use semiplan_core::engine::{
    catalog_of, eval_plan, load_database, write_csv, Database, ExecOptions, Relation,
};
use semiplan_core::hypergraph::Hypergraph;
use semiplan_core::pipeline::{self, GhdSource, PlanOptions, Planned};
use semiplan_core::plan::{Mode, DEFAULT_JOIN_GROUP_CAP};
use semiplan_core::query::ConjunctiveQuery;
use semiplan_core::random;
use semiplan_core::Acyclicity;

#[derive(Parser)]
#[command(
    name = "semiplan",
    version,
    about = "Rewrite conjunctive SQL queries into semi-join programs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Show the hypergraph, join tree, aggregation report and plan.
    Analyze {
        #[command(flatten)]
        query: QueryArgs,
        #[command(flatten)]
        plan: PlanArgs,
    },
    /// Print the SQL statements of the rewritten query.
    Rewrite {
        #[command(flatten)]
        query: QueryArgs,
        #[command(flatten)]
        plan: PlanArgs,
        #[command(flatten)]
        emit: EmitArgs,
    },
    /// Run the plan over a directory of CSV files.
    Exec {
        #[command(flatten)]
        query: QueryArgs,
        #[command(flatten)]
        plan: PlanArgs,
        #[command(flatten)]
        run: RunArgs,
        /// Print per-statement cardinalities and timings to stderr.
        #[arg(long)]
        stats: bool,
    },
    /// Find, validate or enumerate hypertree decompositions.
    #[command(group = clap::ArgGroup::new("source").required(true).args(["width", "ghd"]))]
    Ghd {
        #[command(flatten)]
        query: QueryArgs,
        /// Search for a decomposition of at most this width.
        #[arg(long)]
        width: Option<usize>,
        /// Validate the decomposition stored in this JSON file.
        #[arg(long)]
        ghd: Option<PathBuf>,
        /// List up to this many distinct decompositions.
        #[arg(long)]
        enumerate: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Print decompositions as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Evaluate naively and through the plan; exit 1 unless the bags agree.
    Compare {
        #[command(flatten)]
        query: QueryArgs,
        #[command(flatten)]
        plan: PlanArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Write a random query and database for experiments.
    Generate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = GenKind::Acyclic)]
        kind: GenKind,
        /// Directory receiving query.sql and one CSV per table.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct QueryArgs {
    /// SQL file, or - for standard input.
    sql: PathBuf,
    /// CSV directory whose headers resolve unqualified column names.
    #[arg(long = "catalog")]
    catalog: Option<PathBuf>,
}

#[derive(Args)]
struct PlanArgs {
    /// full-enum, 0ma or partial; chosen automatically when absent.
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long, default_value_t = DEFAULT_JOIN_GROUP_CAP)]
    join_group_cap: usize,
    /// Plan the query projected onto its join variables.
    #[arg(long)]
    join_attrs_only: bool,
    /// Root the zero-materialization plan at this atom.
    #[arg(long)]
    guard: Option<String>,
    /// Decomposition file for cyclic queries.
    #[arg(long = "ghd", conflicts_with = "ghd_width")]
    ghd_path: Option<PathBuf>,
    /// Search for a decomposition of this width when the query is cyclic.
    #[arg(long = "width")]
    ghd_width: Option<usize>,
    /// Seed for decomposition search.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct EmitArgs {
    /// postgres, duckdb, spark or generic.
    #[arg(long, default_value = "postgres")]
    dialect: Dialect,
    /// exists or row-in.
    #[arg(long)]
    semijoin_style: Option<SemijoinStyle>,
    /// Prefix for every created view and table.
    #[arg(long, default_value = "")]
    prefix: String,
    /// Append DROP statements.
    #[arg(long)]
    with_cleanup: bool,
    /// Fail when the dialect cannot render the requested semi-join style.
    #[arg(long)]
    strict_style: bool,
}

#[derive(Args)]
struct RunArgs {
    /// Directory holding <relation>.csv files.
    #[arg(long)]
    db: PathBuf,
    /// Stop after the bottom-up pass when the root relation is empty.
    #[arg(long)]
    short_circuit: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Tsv,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    /// Acyclic query with a random output shape.
    Acyclic,
    /// Aggregates over one atom that are safe to compute on sets.
    Guarded,
    /// Plain SUM over one atom.
    Sum,
    /// Cyclic query with a width-2 decomposition.
    Cyclic,
    /// Three-relation path with two hub values.
    Skewed,
}

enum Outcome {
    Ok,
    VerificationFailed,
}

fn read_sql(path: &Path) -> Result<String> {
    if path == Path::new("-") {
        let mut text = String::new();
        io::stdin()
            .read_to_string(&mut text)
            .context("reading standard input")?;
        return Ok(text);
    }
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_query(args: &QueryArgs, db: Option<&Database>) -> Result<ConjunctiveQuery> {
    let sql = read_sql(&args.sql)?;
    let catalog = match (&args.catalog, db) {
        (Some(dir), _) => Some(catalog_of(&load_database(dir)?)),
        (None, Some(db)) => Some(catalog_of(db)),
        (None, None) => None,
    };
    pipeline::parse(&sql, catalog.as_ref()).with_context(|| format!("{}", args.sql.display()))
}

fn read_ghd(path: &Path) -> Result<Ghd> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ghd::from_json(&text).with_context(|| format!("{}", path.display()))
}

fn plan_options(args: &PlanArgs) -> Result<PlanOptions> {
    let ghd = match (&args.ghd_path, args.ghd_width) {
        (Some(path), _) => Some(GhdSource::Given(read_ghd(path)?)),
        (None, Some(width)) => Some(GhdSource::Search {
            width,
            seed: args.seed,
        }),
        (None, None) => None,
    };
    Ok(PlanOptions {
        mode: args.mode,
        join_group_cap: args.join_group_cap,
        join_attrs_only: args.join_attrs_only,
        guard: args.guard.clone(),
        ghd,
    })
}

fn print_relation(out: &mut impl Write, rel: &Relation, format: Format) -> io::Result<()> {
    match format {
        Format::Text => writeln!(out, "{rel}"),
        Format::Tsv => write!(out, "{}", rel.to_tsv()),
    }
}

fn indent(text: &str) -> String {
    text.lines().map(|l| format!("  {l}\n")).collect()
}

fn analyze(query: &QueryArgs, plan: &PlanArgs, out: &mut impl Write) -> Result<Outcome> {
    let cq = load_query(query, None)?;
    let analysis = pipeline::analyze(&cq, plan.guard.as_deref())?;
    writeln!(out, "query: {cq}")?;
    writeln!(out, "hypergraph:")?;
    write!(out, "{}", indent(&analysis.hypergraph.dump()))?;
    let cyclic = match &analysis.acyclicity {
        Acyclicity::Acyclic(t) => {
            writeln!(out, "join tree (depth {}):", t.depth())?;
            write!(out, "{}", indent(&t.to_string()))?;
            false
        }
        Acyclicity::Cyclic(report) => {
            writeln!(out, "{report}")?;
            true
        }
    };
    writeln!(out, "aggregation:")?;
    write!(out, "{}", indent(&analysis.report.to_string()))?;
    if cyclic && plan.ghd_path.is_none() && plan.ghd_width.is_none() {
        return Ok(Outcome::Ok);
    }
    let planned = pipeline::plan_query(&cq, &plan_options(plan)?)?;
    if let Some(g) = &planned.ghd {
        writeln!(out, "decomposition (width {}):", g.width())?;
        write!(out, "{}", indent(&g.to_string()))?;
    }
    writeln!(out, "plan:")?;
    write!(out, "{}", indent(&planned.plan.to_string()))?;
    Ok(Outcome::Ok)
}

fn rewrite(
    query: &QueryArgs,
    plan: &PlanArgs,
    emit: &EmitArgs,
    out: &mut impl Write,
) -> Result<Outcome> {
    let cq = load_query(query, None)?;
    let planned = pipeline::plan_query(&cq, &plan_options(plan)?)?;
    let dialect = match emit.semijoin_style {
        Some(style) => emit.dialect.with_style(style),
        None => emit.dialect,
    };
    let options = EmitOptions {
        prefix: emit.prefix.clone(),
        with_cleanup: emit.with_cleanup,
        strict_style: emit.strict_style,
    };
    for w in &planned.plan.warnings {
        eprintln!("warning: {w}");
    }
    write!(
        out,
        "{}",
        render_script(&pipeline::rewrite(&planned, &dialect, &options)?)
    )?;
    Ok(Outcome::Ok)
}

fn prepare(query: &QueryArgs, plan: &PlanArgs, run: &RunArgs) -> Result<(Database, Planned)> {
    let db = load_database(&run.db)?;
    let cq = load_query(query, Some(&db))?;
    let planned = pipeline::plan_query(&cq, &plan_options(plan)?)?;
    Ok((db, planned))
}

fn exec(
    query: &QueryArgs,
    plan: &PlanArgs,
    run: &RunArgs,
    stats: bool,
    out: &mut impl Write,
) -> Result<Outcome> {
    let (db, planned) = prepare(query, plan, run)?;
    let result = eval_plan(
        &planned.plan,
        &db,
        ExecOptions {
            short_circuit: run.short_circuit,
        },
    )?;
    print_relation(out, &result.result, run.format)?;
    if stats {
        eprintln!("mode: {}", planned.plan.mode);
        eprintln!("{}", result.stats);
    }
    Ok(Outcome::Ok)
}

fn compare(
    query: &QueryArgs,
    plan: &PlanArgs,
    run: &RunArgs,
    out: &mut impl Write,
) -> Result<Outcome> {
    let (db, planned) = prepare(query, plan, run)?;
    let c = pipeline::compare(
        &planned,
        &db,
        ExecOptions {
            short_circuit: run.short_circuit,
        },
    )?;
    writeln!(out, "mode: {}", planned.plan.mode)?;
    writeln!(out, "bag-equal: {}", c.bag_equal)?;
    writeln!(
        out,
        "naive max intermediate: {}",
        c.naive_stats.max_intermediate()
    )?;
    writeln!(
        out,
        "plan max intermediate: {}",
        c.run.stats.max_intermediate()
    )?;
    writeln!(out, "naive stats:")?;
    write!(out, "{}", indent(&c.naive_stats.to_string()))?;
    writeln!(out, "plan stats:")?;
    write!(out, "{}", indent(&c.run.stats.to_string()))?;
    writeln!(out, "result:")?;
    print_relation(out, &c.run.result, run.format)?;
    if !c.bag_equal {
        writeln!(out, "naive result:")?;
        print_relation(out, &c.naive, run.format)?;
        return Ok(Outcome::VerificationFailed);
    }
    Ok(Outcome::Ok)
}

struct GhdArgs<'a> {
    width: Option<usize>,
    ghd: Option<&'a Path>,
    enumerate: Option<usize>,
    seed: u64,
    json: bool,
}

fn print_ghd(out: &mut impl Write, g: &Ghd, json: bool) -> io::Result<()> {
    if json {
        writeln!(out, "{}", g.to_json())
    } else {
        writeln!(out, "width {}:", g.width())?;
        write!(out, "{}", indent(&g.to_string()))
    }
}

fn ghd(query: &QueryArgs, args: GhdArgs, out: &mut impl Write) -> Result<Outcome> {
    let cq = load_query(query, None)?;
    let h = Hypergraph::from_cq(&cq);
    if let Some(path) = args.ghd {
        let g = read_ghd(path)?;
        let valid = validate_ghd(&h, &g);
        writeln!(out, "valid: {valid}")?;
        print_ghd(out, &g, args.json)?;
        return Ok(if valid {
            Outcome::Ok
        } else {
            Outcome::VerificationFailed
        });
    }
    let Some(width) = args.width else {
        bail!("ghd needs --width or --ghd");
    };
    if let Some(limit) = args.enumerate {
        let found: Vec<Ghd> = GhdEnumerator::new(&h, width, limit)?.collect();
        if found.is_empty() {
            writeln!(out, "no decomposition of width {width}")?;
            return Ok(Outcome::VerificationFailed);
        }
        writeln!(
            out,
            "{} decompositions of width at most {width}",
            found.len()
        )?;
        for g in &found {
            print_ghd(out, g, args.json)?;
        }
        return Ok(Outcome::Ok);
    }
    match semiplan_core::find_ghd(&h, width, args.seed)? {
        Some(g) => {
            print_ghd(out, &g, args.json)?;
            Ok(Outcome::Ok)
        }
        None => {
            writeln!(out, "no decomposition of width {width}")?;
            Ok(Outcome::VerificationFailed)
        }
    }
}

fn generate(seed: u64, kind: GenKind, dir: &Path, out: &mut impl Write) -> Result<Outcome> {
    let mut rng = random::rng(seed);
    let cfg = random::QueryConfig::default();
    let data = random::DataConfig::default();
    let (query, db) = match kind {
        GenKind::Skewed => random::skewed_path(2, 100),
        kind => {
            let query = match kind {
                GenKind::Acyclic => {
                    let shape = random::random_shape(&mut rng);
                    random::random_acyclic_query(&mut rng, &cfg, shape)
                }
                GenKind::Guarded => random::random_guarded_query(&mut rng, &cfg, true),
                GenKind::Sum => random::random_guarded_query(&mut rng, &cfg, false),
                _ => {
                    let h = random::random_width_two_hypergraph(&mut rng, 8);
                    random::query_for_hypergraph(&mut rng, &h, 2)
                }
            };
            let db = random::random_database(&mut rng, &query.schemas, &data);
            (query, db)
        }
    };
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    fs::write(dir.join("query.sql"), format!("{}\n", query.sql))
        .with_context(|| format!("writing {}", dir.join("query.sql").display()))?;
    for (name, rel) in &db {
        write_csv(&dir.join(format!("{name}.csv")), rel)?;
    }
    writeln!(out, "{}", query.sql)?;
    Ok(Outcome::Ok)
}

fn run(cli: Cli) -> Result<Outcome> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let outcome = match &cli.command {
        Command::Analyze { query, plan } => analyze(query, plan, &mut out),
        Command::Rewrite { query, plan, emit } => rewrite(query, plan, emit, &mut out),
        Command::Exec {
            query,
            plan,
            run,
            stats,
        } => exec(query, plan, run, *stats, &mut out),
        Command::Compare { query, plan, run } => compare(query, plan, run, &mut out),
        Command::Ghd {
            query,
            width,
            ghd: path,
            enumerate,
            seed,
            json,
        } => ghd(
            query,
            GhdArgs {
                width: *width,
                ghd: path.as_deref(),
                enumerate: *enumerate,
                seed: *seed,
                json: *json,
            },
            &mut out,
        ),
        Command::Generate {
            seed,
            kind,
            out: dir,
        } => generate(*seed, *kind, dir, &mut out),
    }?;
    out.flush()?;
    Ok(outcome)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::VerificationFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
