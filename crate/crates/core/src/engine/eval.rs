use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use super::load::Database;
use super::ops::{aggregate_column, aggregate_having, natural_join, semi_join};
use super::relation::{Relation, Row, Value};
use super::EngineError;
use crate::classify::normalize_aggregation;
use crate::plan::{atom_scan, AtomScan, Finalize, ScanFilter, Stage, StagePlan, StatementBody};
use crate::query::{Aggregate, ConjunctiveQuery, OutputExpr};

/// Read one atom from `db`: apply its filters and rename attributes to variables.
pub fn scan(s: &AtomScan, db: &Database) -> Result<Relation, EngineError> {
    let rel = db
        .get(&s.relation)
        .ok_or_else(|| EngineError::MissingRelation(s.relation.clone()))?;
    let col = |attr: &str| {
        rel.column(attr)
            .ok_or_else(|| EngineError::UnknownAttribute {
                attribute: format!("{}.{attr}", s.relation),
                schema: rel.schema().to_vec(),
            })
    };
    let out_idx: Vec<usize> = s
        .columns
        .iter()
        .map(|(a, _)| col(a))
        .collect::<Result<_, _>>()?;
    enum Check<'a> {
        Cmp(usize, &'a ScanFilter),
        Same(usize, usize),
    }
    let checks: Vec<Check> = s
        .filters
        .iter()
        .map(|f| match f {
            ScanFilter::Compare { attribute, .. } => Ok(Check::Cmp(col(attribute)?, f)),
            ScanFilter::SameVar { left, right } => Ok(Check::Same(col(left)?, col(right)?)),
        })
        .collect::<Result<_, EngineError>>()?;
    let mut out = Relation::new(s.columns.iter().map(|(_, v)| v.as_str().to_owned()));
    for (row, count) in rel.rows() {
        let keep = checks.iter().all(|c| match c {
            Check::Cmp(i, ScanFilter::Compare { op, value, .. }) => row[*i].compare(*op, value),
            Check::Cmp(..) => unreachable!("compare checks hold compare filters"),
            Check::Same(i, j) => !row[*i].is_null() && row[*i] == row[*j],
        });
        if keep {
            out.insert(out_idx.iter().map(|&i| row[i].clone()).collect(), count);
        }
    }
    Ok(out)
}

/// Grouping, aggregation and output shaping of `f` applied to `input`.
pub fn finalize(f: &Finalize, input: &Relation) -> Result<Relation, EngineError> {
    let names = f.columns.iter().map(|c| c.name.clone());
    if f.boolean {
        let mut out = Relation::new(names);
        if !input.is_empty() {
            let row = f
                .columns
                .iter()
                .map(|c| match &c.expr {
                    OutputExpr::Literal(n) => Value::Int(*n),
                    _ => Value::Null,
                })
                .collect();
            out.insert(row, 1);
        }
        return Ok(out);
    }
    let projected =
        input
            .try_project(&f.projection)
            .ok_or_else(|| EngineError::UnknownAttribute {
                attribute: f
                    .projection
                    .iter()
                    .map(|v| v.as_str())
                    .collect::<Vec<_>>()
                    .join(","),
                schema: input.schema().to_vec(),
            })?;
    let projected = if f.distinct_input {
        projected.distinct()
    } else {
        projected
    };

    let shaped = if f.is_aggregate() {
        let mut aggs: Vec<Aggregate> = Vec::new();
        for c in &f.columns {
            if let OutputExpr::Aggregate(a) = &c.expr {
                if !aggs.contains(a) {
                    aggs.push(a.clone());
                }
            }
        }
        let grouping: Vec<&str> = f.grouping.iter().map(|v| v.as_str()).collect();
        let having = f.having.as_ref().map(|h| (&h.aggregate, h.op, &h.value));
        let grouped = aggregate_having(&projected, &grouping, &aggs, false, having)?;
        shape(f, &grouped, |expr| match expr {
            OutputExpr::Var(v) => Some(v.as_str().to_owned()),
            OutputExpr::Aggregate(a) => Some(aggregate_column(a)),
            OutputExpr::Literal(_) => None,
        })?
    } else {
        shape(f, &projected, |expr| match expr {
            OutputExpr::Var(v) => Some(v.as_str().to_owned()),
            _ => None,
        })?
    };
    Ok(if f.distinct_output {
        shaped.distinct()
    } else {
        shaped
    })
}

/// Output columns of `f` read from `rel`; `source` names the column feeding
/// each expression, `None` for constants.
fn shape(
    f: &Finalize,
    rel: &Relation,
    source: impl Fn(&OutputExpr) -> Option<String>,
) -> Result<Relation, EngineError> {
    enum Cell {
        Column(usize),
        Const(Value),
    }
    let cells: Vec<Cell> =
        f.columns
            .iter()
            .map(|c| match source(&c.expr) {
                Some(name) => rel.column(&name).map(Cell::Column).ok_or_else(|| {
                    EngineError::UnknownAttribute {
                        attribute: name,
                        schema: rel.schema().to_vec(),
                    }
                }),
                None => Ok(Cell::Const(match &c.expr {
                    OutputExpr::Literal(n) => Value::Int(*n),
                    _ => Value::Null,
                })),
            })
            .collect::<Result<_, _>>()?;
    let mut out = Relation::new(f.columns.iter().map(|c| c.name.clone()));
    for (row, count) in rel.rows() {
        let shaped: Row = cells
            .iter()
            .map(|c| match c {
                Cell::Column(i) => row[*i].clone(),
                Cell::Const(v) => v.clone(),
            })
            .collect();
        out.insert(shaped, count);
    }
    Ok(out)
}

/// Finalize step answering `cq` from its full join.
pub fn finalize_spec(cq: &ConjunctiveQuery) -> Finalize {
    let form = normalize_aggregation(cq);
    Finalize {
        input: None,
        projection: form.projection.iter().cloned().collect(),
        distinct_input: false,
        grouping: form.grouping.clone(),
        columns: cq.output.clone(),
        having: form.having.clone(),
        distinct_output: cq.distinct,
        boolean: cq.is_boolean(),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NaiveStats {
    /// Bag size after each atom is joined in, starting with the first scan.
    pub intermediates: Vec<u64>,
    /// Time spent producing each intermediate.
    pub step_micros: Vec<u128>,
    pub micros: u128,
}

impl NaiveStats {
    pub fn max_intermediate(&self) -> u64 {
        self.intermediates.iter().copied().max().unwrap_or(0)
    }
}

impl fmt::Display for NaiveStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "statement, rows, micros")?;
        for (k, (rows, micros)) in self.intermediates.iter().zip(&self.step_micros).enumerate() {
            writeln!(f, "join{}, {rows}, {micros}", k + 1)?;
        }
        write!(f, "total, {}, {}", self.max_intermediate(), self.micros)
    }
}

/// ⋈ of every atom in declaration order, over all variables in name order.
pub fn full_join(
    cq: &ConjunctiveQuery,
    db: &Database,
) -> Result<(Relation, NaiveStats), EngineError> {
    let vars: Vec<String> = cq.vars().iter().map(|v| v.as_str().to_owned()).collect();
    let mut stats = NaiveStats::default();
    if cq.statically_empty {
        return Ok((Relation::new(vars), stats));
    }
    let mut acc: Option<Relation> = None;
    for atom in &cq.atoms {
        let start = Instant::now();
        let r = scan(&atom_scan(atom, cq), db)?;
        let joined = match acc {
            None => r,
            Some(prev) => natural_join(&prev, &r),
        };
        stats.intermediates.push(joined.len());
        stats.step_micros.push(start.elapsed().as_micros());
        acc = Some(joined);
    }
    let joined = acc.unwrap_or_else(Relation::unit);
    Ok((joined.project(&vars), stats))
}

/// Reference evaluation: join every atom, then project, group and filter.
pub fn eval_naive(
    cq: &ConjunctiveQuery,
    db: &Database,
) -> Result<(Relation, NaiveStats), EngineError> {
    let start = Instant::now();
    let (joined, mut stats) = full_join(cq, db)?;
    let out = finalize(&finalize_spec(cq), &joined)?;
    stats.micros = start.elapsed().as_micros();
    Ok((out, stats))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatementStats {
    pub name: String,
    pub stage: Stage,
    /// Bag size of the statement's output.
    pub rows: u64,
    /// Bag size of the input handle (semi-joins) or the largest input.
    pub input_rows: u64,
    pub micros: u128,
}

/// Per-statement cardinalities and timings, in execution order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StageStats {
    pub statements: Vec<StatementStats>,
    pub result_rows: u64,
    pub finalize_micros: u128,
    /// Execution stopped after the up pass because the root was empty.
    pub short_circuited: bool,
}

impl StageStats {
    pub fn rows(&self, name: &str) -> Option<u64> {
        self.statements
            .iter()
            .find(|s| s.name == name)
            .map(|s| s.rows)
    }

    pub fn max_intermediate(&self) -> u64 {
        self.statements.iter().map(|s| s.rows).max().unwrap_or(0)
    }

    pub fn max_in_stage(&self, stage: Stage) -> u64 {
        self.statements
            .iter()
            .filter(|s| s.stage == stage)
            .map(|s| s.rows)
            .max()
            .unwrap_or(0)
    }

    pub fn micros_in_stage(&self, stage: Stage) -> u128 {
        if stage == Stage::Finalize {
            return self.finalize_micros;
        }
        self.statements
            .iter()
            .filter(|s| s.stage == stage)
            .map(|s| s.micros)
            .sum()
    }
}

impl fmt::Display for StageStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "statement, rows, micros")?;
        for s in &self.statements {
            writeln!(f, "{}, {}, {}", s.name, s.rows, s.micros)?;
        }
        write!(f, "final, {}, {}", self.result_rows, self.finalize_micros)?;
        if self.short_circuited {
            write!(f, "\nshort-circuit: root empty after {}", Stage::SemijoinUp)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExecOptions {
    /// Stop after the up pass when the root's reduced relation is empty.
    pub short_circuit: bool,
}

#[derive(Debug, Clone)]
pub struct PlanRun {
    pub result: Relation,
    pub stats: StageStats,
    /// Every handle computed, by name.
    pub handles: BTreeMap<String, Relation>,
}

impl PlanRun {
    /// Latest relation per tree node after `stage`.
    pub fn node_relations(&self, plan: &StagePlan, stage: Stage) -> BTreeMap<String, Relation> {
        plan.handles_after(stage)
            .into_iter()
            .filter_map(|(node, handle)| self.handles.get(&handle).map(|r| (node, r.clone())))
            .collect()
    }
}

fn handle<'a>(
    handles: &'a BTreeMap<String, Relation>,
    name: &str,
) -> Result<&'a Relation, EngineError> {
    handles
        .get(name)
        .ok_or_else(|| EngineError::PlanReference(name.to_owned()))
}

fn join_all<'a>(inputs: impl IntoIterator<Item = &'a Relation>) -> Relation {
    inputs
        .into_iter()
        .fold(Relation::unit(), |acc, r| natural_join(&acc, r))
}

fn names(vars: &[crate::query::Var]) -> Vec<&str> {
    vars.iter().map(|v| v.as_str()).collect()
}

fn project_vars(rel: &Relation, vars: &[crate::query::Var]) -> Result<Relation, EngineError> {
    rel.try_project(&names(vars))
        .ok_or_else(|| EngineError::UnknownAttribute {
            attribute: names(vars).join(","),
            schema: rel.schema().to_vec(),
        })
}

fn run_statement(
    body: &StatementBody,
    handles: &BTreeMap<String, Relation>,
    db: &Database,
) -> Result<(Relation, u64), EngineError> {
    match body {
        StatementBody::Setup {
            scans,
            distinct,
            output,
        } => {
            let mut parts: Vec<Relation> = scans
                .iter()
                .map(|s| scan(s, db))
                .collect::<Result<_, _>>()?;
            for d in distinct {
                let inner: Vec<Relation> = d
                    .scans
                    .iter()
                    .map(|s| scan(s, db))
                    .collect::<Result<_, _>>()?;
                parts.push(project_vars(&join_all(&inner), &d.vars)?.distinct());
            }
            let input_rows = parts.iter().map(Relation::len).max().unwrap_or(0);
            Ok((project_vars(&join_all(&parts), output)?, input_rows))
        }
        StatementBody::SemiJoin { input, reducers } => {
            let mut acc = handle(handles, input)?.clone();
            let input_rows = acc.len();
            for r in reducers {
                let keys: Vec<(&str, &str)> =
                    r.keys.iter().map(|k| (k.as_str(), k.as_str())).collect();
                acc = semi_join(&acc, handle(handles, &r.handle)?, &keys)?;
            }
            Ok((acc, input_rows))
        }
        StatementBody::Join { inputs, output } => {
            let rels: Vec<&Relation> = inputs
                .iter()
                .map(|i| handle(handles, i))
                .collect::<Result<_, _>>()?;
            let input_rows = rels.iter().map(|r| r.len()).max().unwrap_or(0);
            Ok((project_vars(&join_all(rels), output)?, input_rows))
        }
    }
}

/// Interpret `plan` statement by statement over `db`.
pub fn eval_plan(
    plan: &StagePlan,
    db: &Database,
    options: ExecOptions,
) -> Result<PlanRun, EngineError> {
    let mut handles: BTreeMap<String, Relation> = BTreeMap::new();
    let mut stats = StageStats::default();
    let mut latest: BTreeMap<&str, &str> = BTreeMap::new();
    let mut checked = !options.short_circuit;
    for st in &plan.statements {
        if !checked && st.stage > Stage::SemijoinUp {
            checked = true;
            if root_is_empty(plan, &latest, &handles) {
                stats.short_circuited = true;
                break;
            }
        }
        let start = Instant::now();
        let (rel, input_rows) = run_statement(&st.body, &handles, db)?;
        stats.statements.push(StatementStats {
            name: st.name.clone(),
            stage: st.stage,
            rows: rel.len(),
            input_rows,
            micros: start.elapsed().as_micros(),
        });
        if let Some(node) = &st.node {
            latest.insert(node, &st.name);
        }
        handles.insert(st.name.clone(), rel);
    }
    if !checked && root_is_empty(plan, &latest, &handles) {
        stats.short_circuited = true;
    }

    let start = Instant::now();
    let f = &plan.finalize;
    let input = match &f.input {
        _ if stats.short_circuited => {
            let schema = f
                .input
                .as_deref()
                .and_then(|h| plan.schema_of(h))
                .map(|s| names(s).into_iter().map(str::to_owned).collect::<Vec<_>>())
                .unwrap_or_else(|| {
                    names(&f.projection)
                        .into_iter()
                        .map(str::to_owned)
                        .collect()
                });
            Relation::new(schema)
        }
        None => Relation::new(names(&f.projection)),
        Some(h) => handle(&handles, h)?.clone(),
    };
    let result = finalize(f, &input)?;
    stats.result_rows = result.len();
    stats.finalize_micros = start.elapsed().as_micros();
    Ok(PlanRun {
        result,
        stats,
        handles,
    })
}

fn root_is_empty(
    plan: &StagePlan,
    latest: &BTreeMap<&str, &str>,
    handles: &BTreeMap<String, Relation>,
) -> bool {
    plan.root
        .as_deref()
        .and_then(|root| latest.get(root))
        .and_then(|h| handles.get(*h))
        .is_some_and(Relation::is_empty)
}

/// Every tuple of every node relation extends to a tuple of the full join.
pub fn full_reducer_holds(
    nodes: &BTreeMap<String, Relation>,
    cq: &ConjunctiveQuery,
    db: &Database,
) -> Result<bool, EngineError> {
    let (full, _) = full_join(cq, db)?;
    for rel in nodes.values() {
        let Some(reach) = full.try_project(rel.schema()) else {
            return Ok(false);
        };
        if rel.rows().any(|(row, _)| reach.multiplicity(row) == 0) {
            return Ok(false);
        }
    }
    Ok(true)
}
