//! Render a staged plan as SQL for PostgreSQL, DuckDB, Spark SQL or plain SQL-92.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::plan::{
    AtomScan, Finalize, ObjectKind, PlanStatement, Reducer, ScanFilter, StagePlan, StatementBody,
};
use crate::query::{Aggregate, OutputExpr, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DialectName {
    Postgres,
    Duckdb,
    Spark,
    Generic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TempObject {
    TempTable,
    TempView,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SemijoinStyle {
    /// `(k1, k2) IN (SELECT k1, k2 FROM ...)`.
    RowIn,
    /// Correlated `EXISTS` with key equalities.
    Exists,
}

impl FromStr for SemijoinStyle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "row-in" | "rowin" | "in" => Ok(SemijoinStyle::RowIn),
            "exists" => Ok(SemijoinStyle::Exists),
            other => Err(format!(
                "unknown semi-join style {other} (expected row-in or exists)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dialect {
    pub name: DialectName,
    pub temp_object: TempObject,
    pub semijoin_style: SemijoinStyle,
}

impl Dialect {
    pub fn new(name: DialectName) -> Self {
        let temp_object = match name {
            DialectName::Postgres | DialectName::Duckdb => TempObject::TempTable,
            DialectName::Spark | DialectName::Generic => TempObject::TempView,
        };
        Dialect {
            name,
            temp_object,
            semijoin_style: SemijoinStyle::Exists,
        }
    }

    pub fn postgres() -> Self {
        Self::new(DialectName::Postgres)
    }

    pub fn duckdb() -> Self {
        Self::new(DialectName::Duckdb)
    }

    pub fn spark() -> Self {
        Self::new(DialectName::Spark)
    }

    pub fn generic() -> Self {
        Self::new(DialectName::Generic)
    }

    pub fn with_style(mut self, style: SemijoinStyle) -> Self {
        self.semijoin_style = style;
        self
    }

    /// Row-value constructors in `IN` predicates.
    pub fn supports_row_in(&self) -> bool {
        self.name != DialectName::Generic
    }

    fn quote_char(&self) -> char {
        match self.name {
            DialectName::Spark => '`',
            _ => '"',
        }
    }

    fn false_literal(&self) -> &'static str {
        match self.name {
            DialectName::Generic => "1=0",
            _ => "FALSE",
        }
    }
}

impl fmt::Display for Dialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.name {
            DialectName::Postgres => "postgres",
            DialectName::Duckdb => "duckdb",
            DialectName::Spark => "spark",
            DialectName::Generic => "generic",
        })
    }
}

impl FromStr for Dialect {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let name = match s.to_ascii_lowercase().as_str() {
            "postgres" | "postgresql" => DialectName::Postgres,
            "duckdb" => DialectName::Duckdb,
            "spark" | "sparksql" => DialectName::Spark,
            "generic" | "sql92" => DialectName::Generic,
            other => {
                return Err(format!(
                    "unknown dialect {other} (expected postgres, duckdb, spark or generic)"
                ))
            }
        };
        Ok(Dialect::new(name))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EmitOptions {
    /// Prepended to every object the plan creates.
    pub prefix: String,
    /// Append DROP statements for the created objects.
    pub with_cleanup: bool,
    /// Fail instead of falling back to `EXISTS` when the dialect cannot
    /// render the requested semi-join style.
    pub strict_style: bool,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum EmitError {
    #[error("{dialect} cannot render {construct}")]
    UnsupportedInDialect { dialect: String, construct: String },
}

const RESERVED: &[&str] = &[
    "all",
    "and",
    "as",
    "asc",
    "between",
    "by",
    "case",
    "cast",
    "check",
    "column",
    "constraint",
    "create",
    "cross",
    "current",
    "default",
    "delete",
    "desc",
    "distinct",
    "drop",
    "else",
    "end",
    "except",
    "exists",
    "false",
    "fetch",
    "for",
    "foreign",
    "from",
    "full",
    "grant",
    "group",
    "having",
    "in",
    "inner",
    "insert",
    "intersect",
    "into",
    "is",
    "join",
    "left",
    "like",
    "limit",
    "natural",
    "not",
    "null",
    "offset",
    "on",
    "or",
    "order",
    "outer",
    "primary",
    "references",
    "right",
    "select",
    "table",
    "then",
    "to",
    "true",
    "union",
    "unique",
    "update",
    "user",
    "using",
    "values",
    "view",
    "when",
    "where",
    "with",
];

struct Renderer<'a> {
    dialect: &'a Dialect,
    options: &'a EmitOptions,
}

impl Renderer<'_> {
    fn ident(&self, name: &str) -> String {
        let plain = name
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_lowercase() || c == '_')
            && name
                .chars()
                .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
            && !RESERVED.contains(&name);
        if plain {
            name.to_owned()
        } else {
            let q = self.dialect.quote_char();
            let escaped = name.replace(q, &format!("{q}{q}"));
            format!("{q}{escaped}{q}")
        }
    }

    fn handle(&self, name: &str) -> String {
        self.ident(&format!("{}{name}", self.options.prefix))
    }

    fn var(&self, v: &Var) -> String {
        self.ident(v.as_str())
    }

    fn var_list(&self, vs: &[Var]) -> String {
        vs.iter()
            .map(|v| self.var(v))
            .collect::<Vec<_>>()
            .join(", ")
    }

    fn create(&self, s: &PlanStatement) -> String {
        let name = self.handle(&s.name);
        match (self.dialect.name, s.kind, self.dialect.temp_object) {
            (DialectName::Spark, _, _) => format!("CREATE OR REPLACE TEMP VIEW {name} AS"),
            (_, ObjectKind::View, _) | (_, ObjectKind::Temp, TempObject::TempView) => {
                format!("CREATE VIEW {name} AS")
            }
            (_, ObjectKind::Temp, TempObject::TempTable) => format!("CREATE TEMP TABLE {name} AS"),
        }
    }

    fn drop(&self, s: &PlanStatement) -> String {
        let name = self.handle(&s.name);
        let table = s.kind == ObjectKind::Temp && self.dialect.temp_object == TempObject::TempTable;
        if table {
            format!("DROP TABLE IF EXISTS {name};")
        } else {
            format!("DROP VIEW IF EXISTS {name};")
        }
    }

    fn filter(&self, filter: &ScanFilter, qualifier: Option<&str>) -> String {
        let col = |c: &str| match qualifier {
            Some(q) => format!("{q}.{}", self.ident(c)),
            None => self.ident(c),
        };
        match filter {
            ScanFilter::Compare {
                attribute,
                op,
                value,
            } => format!("{}{}{}", col(attribute), op.symbol(), value),
            ScanFilter::SameVar { left, right } => format!("{}={}", col(left), col(right)),
        }
    }

    /// FROM items, WHERE conditions and the expression for each variable of a
    /// join of atom scans. A lone scan is left unqualified unless `qualify`.
    fn scan_block(
        &self,
        scans: &[AtomScan],
        qualify: bool,
    ) -> (Vec<String>, Vec<String>, Vec<(Var, String)>) {
        let mut from = Vec::new();
        let mut conditions = Vec::new();
        let mut exprs: Vec<(Var, String)> = Vec::new();
        if let (false, [scan]) = (qualify, scans) {
            from.push(self.ident(&scan.relation));
            conditions.extend(scan.filters.iter().map(|f| self.filter(f, None)));
            for (attr, var) in &scan.columns {
                exprs.push((var.clone(), self.ident(attr)));
            }
            return (from, conditions, exprs);
        }
        for scan in scans {
            let alias = self.ident(&scan.atom);
            from.push(format!("{} AS {alias}", self.ident(&scan.relation)));
            conditions.extend(scan.filters.iter().map(|f| self.filter(f, Some(&alias))));
            for (attr, var) in &scan.columns {
                let expr = format!("{alias}.{}", self.ident(attr));
                match exprs.iter().find(|(v, _)| v == var) {
                    Some((_, first)) => conditions.push(format!("{first}={expr}")),
                    None => exprs.push((var.clone(), expr)),
                }
            }
        }
        (from, conditions, exprs)
    }

    fn column(&self, var: &Var, expr: &str) -> String {
        let name = self.var(var);
        if expr == name {
            name
        } else {
            format!("{expr} AS {name}")
        }
    }

    fn unit_column(&self, owner: &str) -> String {
        format!("1 AS {}", self.ident(&format!("{owner}_unit")))
    }

    fn select(
        &self,
        distinct: bool,
        columns: &[String],
        from: &[String],
        conditions: &[String],
    ) -> String {
        let mut sql = String::from("SELECT ");
        if distinct {
            sql.push_str("DISTINCT ");
        }
        sql.push_str(&columns.join(", "));
        if !from.is_empty() {
            sql.push_str(" FROM ");
            sql.push_str(&from.join(", "));
        }
        if !conditions.is_empty() {
            sql.push_str(" WHERE ");
            sql.push_str(&conditions.join(" AND "));
        }
        sql
    }

    fn setup(
        &self,
        s: &PlanStatement,
        scans: &[AtomScan],
        distinct: &[crate::plan::DistinctSource],
        output: &[Var],
    ) -> String {
        if distinct.is_empty() {
            let (from, conditions, exprs) = self.scan_block(scans, false);
            let columns = self.project(s, output, &exprs);
            return self.select(false, &columns, &from, &conditions);
        }
        // Owned atoms joined with DISTINCT projections of the cover.
        let (mut from, mut conditions, mut exprs) = self.scan_block(scans, true);
        for (i, d) in distinct.iter().enumerate() {
            let alias = self.ident(&format!(
                "{}_cover{}",
                s.node.as_deref().unwrap_or("node"),
                i + 1
            ));
            let (inner_from, inner_conditions, inner_exprs) = self.scan_block(&d.scans, false);
            let cols: Vec<String> = d
                .vars
                .iter()
                .map(|v| {
                    let e = &inner_exprs
                        .iter()
                        .find(|(x, _)| x == v)
                        .expect("bag covered")
                        .1;
                    self.column(v, e)
                })
                .collect();
            let sub = self.select(true, &cols, &inner_from, &inner_conditions);
            from.push(format!("({sub}) AS {alias}"));
            for v in &d.vars {
                let expr = format!("{alias}.{}", self.var(v));
                match exprs.iter().find(|(x, _)| x == v) {
                    Some((_, first)) => conditions.push(format!("{first}={expr}")),
                    None => exprs.push((v.clone(), expr)),
                }
            }
        }
        let columns = self.project(s, output, &exprs);
        self.select(false, &columns, &from, &conditions)
    }

    fn project(&self, s: &PlanStatement, output: &[Var], exprs: &[(Var, String)]) -> Vec<String> {
        if output.is_empty() {
            return vec![self.unit_column(s.node.as_deref().unwrap_or(&s.name))];
        }
        output
            .iter()
            .map(|v| {
                let e = &exprs
                    .iter()
                    .find(|(x, _)| x == v)
                    .expect("output variable is bound")
                    .1;
                self.column(v, e)
            })
            .collect()
    }

    fn semijoin_condition(&self, input: &str, r: &Reducer) -> Result<String, EmitError> {
        let other = self.handle(&r.handle);
        let exists = || {
            let eqs: Vec<String> = r
                .keys
                .iter()
                .map(|k| format!("{other}.{k}={input}.{k}", k = self.var(k)))
                .collect();
            if eqs.is_empty() {
                format!("EXISTS (SELECT 1 FROM {other})")
            } else {
                format!("EXISTS (SELECT 1 FROM {other} WHERE {})", eqs.join(" AND "))
            }
        };
        match (self.dialect.semijoin_style, r.keys.len()) {
            (SemijoinStyle::Exists, _) | (SemijoinStyle::RowIn, 0) => Ok(exists()),
            (SemijoinStyle::RowIn, 1) => {
                let k = self.var(&r.keys[0]);
                Ok(format!("{k} IN (SELECT {k} FROM {other})"))
            }
            (SemijoinStyle::RowIn, _) if self.dialect.supports_row_in() => {
                let ks = self.var_list(&r.keys);
                Ok(format!("({ks}) IN (SELECT {ks} FROM {other})"))
            }
            (SemijoinStyle::RowIn, _) if self.options.strict_style => {
                Err(EmitError::UnsupportedInDialect {
                    dialect: self.dialect.to_string(),
                    construct: "multi-column IN predicates".into(),
                })
            }
            (SemijoinStyle::RowIn, _) => Ok(exists()),
        }
    }

    fn statement(&self, s: &PlanStatement) -> Result<String, EmitError> {
        let body = match &s.body {
            StatementBody::Setup {
                scans,
                distinct,
                output,
            } => self.setup(s, scans, distinct, output),
            StatementBody::SemiJoin { input, reducers } => {
                let input = self.handle(input);
                let conditions = reducers
                    .iter()
                    .map(|r| self.semijoin_condition(&input, r))
                    .collect::<Result<Vec<_>, _>>()?;
                self.select(
                    false,
                    &["*".to_owned()],
                    std::slice::from_ref(&input),
                    &conditions,
                )
            }
            StatementBody::Join { inputs, output } => {
                let from: Vec<String> = inputs.iter().map(|h| self.handle(h)).collect();
                let columns = if output.is_empty() {
                    vec![self.unit_column(&s.name)]
                } else {
                    output.iter().map(|v| self.var(v)).collect()
                };
                self.select(false, &columns, &[from.join(" NATURAL JOIN ")], &[])
            }
        };
        Ok(format!("{} {body};", self.create(s)))
    }

    fn aggregate(&self, a: &Aggregate) -> String {
        let distinct = if a.distinct { "DISTINCT " } else { "" };
        format!("{}({distinct}{})", a.func.sql_name(), self.var(&a.var))
    }

    fn finalize(&self, f: &Finalize) -> String {
        let source = match &f.input {
            Some(h) => self.handle(h),
            None => {
                let nulls: Vec<String> = if f.projection.is_empty() {
                    vec![format!("NULL AS {}", self.ident("unit"))]
                } else {
                    f.projection
                        .iter()
                        .map(|v| format!("NULL AS {}", self.var(v)))
                        .collect()
                };
                format!(
                    "(SELECT {} WHERE {}) AS empty_input",
                    nulls.join(", "),
                    self.dialect.false_literal()
                )
            }
        };
        if f.boolean {
            let cols: Vec<String> = f
                .columns
                .iter()
                .map(|c| match &c.expr {
                    OutputExpr::Literal(n) => format!("{n} AS {}", self.ident(&c.name)),
                    _ => unreachable!("Boolean queries select constants only"),
                })
                .collect();
            return format!("{};", self.select(true, &cols, &[source], &[]));
        }
        let source = if f.distinct_input {
            format!(
                "(SELECT DISTINCT {} FROM {source}) AS reduced",
                self.var_list(&f.projection)
            )
        } else {
            source
        };
        let cols: Vec<String> = f
            .columns
            .iter()
            .map(|c| {
                let name = self.ident(&c.name);
                let expr = match &c.expr {
                    OutputExpr::Var(v) => self.var(v),
                    OutputExpr::Aggregate(a) => self.aggregate(a),
                    OutputExpr::Literal(n) => n.to_string(),
                };
                if expr == name {
                    expr
                } else {
                    format!("{expr} AS {name}")
                }
            })
            .collect();
        let mut sql = self.select(f.distinct_output, &cols, &[source], &[]);
        if !f.grouping.is_empty() {
            sql.push_str(" GROUP BY ");
            sql.push_str(&self.var_list(&f.grouping));
        }
        if let Some(h) = &f.having {
            sql.push_str(&format!(
                " HAVING {} {} {}",
                self.aggregate(&h.aggregate),
                h.op.symbol(),
                h.value
            ));
        }
        sql.push(';');
        sql
    }
}

/// One `;`-terminated statement per plan statement, then the final SELECT,
/// then DROP statements if requested.
pub fn emit_plan(
    plan: &StagePlan,
    dialect: &Dialect,
    options: &EmitOptions,
) -> Result<Vec<String>, EmitError> {
    let r = Renderer { dialect, options };
    let mut out = plan
        .statements
        .iter()
        .map(|s| r.statement(s))
        .collect::<Result<Vec<_>, _>>()?;
    out.push(r.finalize(&plan.finalize));
    if options.with_cleanup {
        out.extend(plan.statements.iter().rev().map(|s| r.drop(s)));
    }
    Ok(out)
}

/// Statements joined into one script, one per line.
pub fn render_script(statements: &[String]) -> String {
    let mut script = statements.join("\n");
    script.push('\n');
    script
}
