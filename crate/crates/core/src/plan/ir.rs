use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::query::{HavingFilter, OutputColumn, Var};
use crate::sql::ast::{Comparator, Literal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Setup,
    SemijoinUp,
    SemijoinDown,
    Join,
    Finalize,
}

impl Stage {
    pub const ALL: [Stage; 5] = [
        Stage::Setup,
        Stage::SemijoinUp,
        Stage::SemijoinDown,
        Stage::Join,
        Stage::Finalize,
    ];
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Setup => "SETUP",
            Stage::SemijoinUp => "SEMIJOIN_UP",
            Stage::SemijoinDown => "SEMIJOIN_DOWN",
            Stage::Join => "JOIN",
            Stage::Finalize => "FINALIZE",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Full Yannakakis: both semi-join passes and the join pass.
    FullEnum,
    /// Bottom-up pass, then aggregate the reduced root.
    ZeroMa,
    /// Join only the smallest subtree that covers the projected variables.
    Partial,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::FullEnum => "full-enum",
            Mode::ZeroMa => "0ma",
            Mode::Partial => "partial",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "full-enum" | "full" | "fullenum" => Ok(Mode::FullEnum),
            "0ma" | "zero-ma" | "zeroma" => Ok(Mode::ZeroMa),
            "partial" => Ok(Mode::Partial),
            other => Err(format!(
                "unknown mode {other} (expected full-enum, 0ma or partial)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectKind {
    View,
    Temp,
}

/// Row filter applied while scanning an atom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScanFilter {
    Compare {
        attribute: String,
        op: Comparator,
        value: Literal,
    },
    /// Two attributes of one atom bound to the same variable.
    SameVar { left: String, right: String },
}

/// One atom read from its base relation, with attributes renamed to variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomScan {
    pub atom: String,
    pub relation: String,
    /// Attribute supplying each variable, in variable order.
    pub columns: Vec<(String, Var)>,
    pub filters: Vec<ScanFilter>,
}

impl AtomScan {
    pub fn vars(&self) -> Vec<Var> {
        self.columns.iter().map(|(_, v)| v.clone()).collect()
    }
}

/// δ(π_vars(⋈ scans)).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistinctSource {
    pub scans: Vec<AtomScan>,
    pub vars: Vec<Var>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reducer {
    pub handle: String,
    pub keys: Vec<Var>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StatementBody {
    /// π_output(⋈ scans ⋈ distinct sources), bag projection.
    Setup {
        scans: Vec<AtomScan>,
        distinct: Vec<DistinctSource>,
        output: Vec<Var>,
    },
    /// input ⋉ r1 ⋉ r2 ..., keeping multiplicities of the input.
    SemiJoin {
        input: String,
        reducers: Vec<Reducer>,
    },
    /// π_output(⋈ inputs), bag projection.
    Join {
        inputs: Vec<String>,
        output: Vec<Var>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanStatement {
    pub stage: Stage,
    pub kind: ObjectKind,
    pub name: String,
    /// Tree node whose relation this statement produces, if any.
    pub node: Option<String>,
    pub body: StatementBody,
    pub schema: Vec<Var>,
}

impl PlanStatement {
    /// Handles read by this statement.
    pub fn references(&self) -> Vec<&str> {
        match &self.body {
            StatementBody::Setup { .. } => Vec::new(),
            StatementBody::SemiJoin { input, reducers } => std::iter::once(input.as_str())
                .chain(reducers.iter().map(|r| r.handle.as_str()))
                .collect(),
            StatementBody::Join { inputs, .. } => inputs.iter().map(String::as_str).collect(),
        }
    }
}

/// Grouping, aggregation and output shaping over one input handle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finalize {
    /// `None` when the query is statically empty.
    pub input: Option<String>,
    /// S, in variable order.
    pub projection: Vec<Var>,
    /// Apply δ to π_S(input) before grouping.
    pub distinct_input: bool,
    pub grouping: Vec<Var>,
    pub columns: Vec<OutputColumn>,
    pub having: Option<HavingFilter>,
    pub distinct_output: bool,
    /// One row of constants iff the input is nonempty.
    pub boolean: bool,
}

impl Finalize {
    pub fn is_aggregate(&self) -> bool {
        !self.grouping.is_empty()
            || self.having.is_some()
            || self
                .columns
                .iter()
                .any(|c| matches!(c.expr, crate::query::OutputExpr::Aggregate(_)))
    }
}

/// Statements in execution order, grouped by stage, and the final query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StagePlan {
    pub mode: Mode,
    pub root: Option<String>,
    /// Nodes whose relations the down pass and join pass touch.
    pub scope: BTreeSet<String>,
    pub statements: Vec<PlanStatement>,
    pub finalize: Finalize,
    pub warnings: Vec<String>,
}

impl StagePlan {
    pub fn stage_statements(&self, stage: Stage) -> impl Iterator<Item = &PlanStatement> {
        self.statements.iter().filter(move |s| s.stage == stage)
    }

    /// Number of statements per stage; FINALIZE always counts one.
    pub fn count(&self, stage: Stage) -> usize {
        match stage {
            Stage::Finalize => 1,
            _ => self.stage_statements(stage).count(),
        }
    }

    pub fn statement(&self, name: &str) -> Option<&PlanStatement> {
        self.statements.iter().find(|s| s.name == name)
    }

    pub fn schema_of(&self, handle: &str) -> Option<&[Var]> {
        self.statement(handle).map(|s| s.schema.as_slice())
    }

    /// For each node, the handles written for it in order.
    pub fn node_handles(&self) -> BTreeMap<String, Vec<String>> {
        let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for s in &self.statements {
            if let Some(node) = &s.node {
                out.entry(node.clone()).or_default().push(s.name.clone());
            }
        }
        out
    }

    /// Latest handle per node after all statements of `stage` and earlier.
    pub fn handles_after(&self, stage: Stage) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        for s in self.statements.iter().filter(|s| s.stage <= stage) {
            if let Some(node) = &s.node {
                out.insert(node.clone(), s.name.clone());
            }
        }
        out
    }

    /// (dependency, dependent) pairs between statements.
    pub fn dependencies(&self) -> Vec<(String, String)> {
        self.statements
            .iter()
            .flat_map(|s| {
                s.references()
                    .into_iter()
                    .map(|r| (r.to_owned(), s.name.clone()))
            })
            .collect()
    }
}

fn vars(vs: &[Var]) -> String {
    vs.iter().map(Var::as_str).collect::<Vec<_>>().join(", ")
}

impl fmt::Display for AtomScan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cols: Vec<String> = self
            .columns
            .iter()
            .map(|(a, v)| {
                if a == v.as_str() {
                    a.clone()
                } else {
                    format!("{a}->{v}")
                }
            })
            .collect();
        write!(f, "{}", self.relation)?;
        if self.relation != self.atom {
            write!(f, " as {}", self.atom)?;
        }
        write!(f, "({})", cols.join(", "))?;
        for filter in &self.filters {
            match filter {
                ScanFilter::Compare {
                    attribute,
                    op,
                    value,
                } => write!(f, " [{attribute}{op}{value}]")?,
                ScanFilter::SameVar { left, right } => write!(f, " [{left}={right}]")?,
            }
        }
        Ok(())
    }
}

impl fmt::Display for StatementBody {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatementBody::Setup {
                scans,
                distinct,
                output,
            } => {
                let mut parts: Vec<String> = scans.iter().map(ToString::to_string).collect();
                for d in distinct {
                    let inner: Vec<String> = d.scans.iter().map(ToString::to_string).collect();
                    parts.push(format!(
                        "distinct[{}]({})",
                        vars(&d.vars),
                        inner.join(" join ")
                    ));
                }
                write!(f, "project[{}] {}", vars(output), parts.join(" join "))
            }
            StatementBody::SemiJoin { input, reducers } => {
                write!(f, "{input}")?;
                for r in reducers {
                    write!(f, " semijoin {} on ({})", r.handle, vars(&r.keys))?;
                }
                Ok(())
            }
            StatementBody::Join { inputs, output } => {
                write!(f, "project[{}] {}", vars(output), inputs.join(" join "))
            }
        }
    }
}

impl fmt::Display for Finalize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "input {}", self.input.as_deref().unwrap_or("(empty)"))?;
        write!(f, "; project[{}]", vars(&self.projection))?;
        if self.distinct_input {
            f.write_str("; distinct")?;
        }
        if !self.grouping.is_empty() {
            write!(f, "; group by {}", vars(&self.grouping))?;
        }
        let cols: Vec<String> = self
            .columns
            .iter()
            .map(|c| match &c.expr {
                crate::query::OutputExpr::Var(v) if v.as_str() == c.name => c.name.clone(),
                crate::query::OutputExpr::Var(v) => format!("{v} as {}", c.name),
                crate::query::OutputExpr::Aggregate(a) => format!("{a} as {}", c.name),
                crate::query::OutputExpr::Literal(n) => format!("{n} as {}", c.name),
            })
            .collect();
        write!(f, "; output {}", cols.join(", "))?;
        if let Some(h) = &self.having {
            write!(f, "; having {} {} {}", h.aggregate, h.op, h.value)?;
        }
        if self.distinct_output {
            f.write_str("; distinct output")?;
        }
        if self.boolean {
            f.write_str("; exists")?;
        }
        Ok(())
    }
}

impl fmt::Display for StagePlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "mode: {}", self.mode)?;
        if let Some(root) = &self.root {
            writeln!(f, "root: {root}")?;
        }
        for stage in Stage::ALL {
            writeln!(f, "{stage}")?;
            if stage == Stage::Finalize {
                writeln!(f, "  {}", self.finalize)?;
                continue;
            }
            for s in self.stage_statements(stage) {
                let kind = match s.kind {
                    ObjectKind::View => "view",
                    ObjectKind::Temp => "temp",
                };
                writeln!(f, "  {kind} {} = {}", s.name, s.body)?;
            }
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}
