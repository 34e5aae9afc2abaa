//! Syntax tree for the supported SELECT fragment.

use std::fmt;

/// A possibly qualified column reference, `alias.column` or `column`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ColumnRef {
    pub qualifier: Option<String>,
    pub column: String,
}

impl ColumnRef {
    pub fn new(qualifier: Option<&str>, column: &str) -> Self {
        ColumnRef {
            qualifier: qualifier.map(str::to_owned),
            column: column.to_owned(),
        }
    }
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.qualifier {
            Some(q) => write!(f, "{q}.{}", self.column),
            None => f.write_str(&self.column),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AggFunc {
    Min,
    Max,
    Sum,
    Count,
    Avg,
}

impl AggFunc {
    pub fn from_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "min" => Some(AggFunc::Min),
            "max" => Some(AggFunc::Max),
            "sum" => Some(AggFunc::Sum),
            "count" => Some(AggFunc::Count),
            "avg" => Some(AggFunc::Avg),
            _ => None,
        }
    }

    pub fn sql_name(self) -> &'static str {
        match self {
            AggFunc::Min => "MIN",
            AggFunc::Max => "MAX",
            AggFunc::Sum => "SUM",
            AggFunc::Count => "COUNT",
            AggFunc::Avg => "AVG",
        }
    }

    /// MIN and MAX ignore multiplicities.
    pub fn is_min_max(self) -> bool {
        matches!(self, AggFunc::Min | AggFunc::Max)
    }
}

impl fmt::Display for AggFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.sql_name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AggregateCall {
    pub func: AggFunc,
    pub arg: ColumnRef,
    pub distinct: bool,
}

impl fmt::Display for AggregateCall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let distinct = if self.distinct { "DISTINCT " } else { "" };
        write!(f, "{}({distinct}{})", self.func, self.arg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Comparator {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Comparator {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Eq => "=",
            Comparator::Ne => "<>",
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Gt => ">",
            Comparator::Ge => ">=",
        }
    }

    /// The comparator obtained by swapping the operands: `c < x` is `x > c`.
    pub fn flipped(self) -> Self {
        match self {
            Comparator::Lt => Comparator::Gt,
            Comparator::Le => Comparator::Ge,
            Comparator::Gt => Comparator::Lt,
            Comparator::Ge => Comparator::Le,
            other => other,
        }
    }

    pub fn holds(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            Comparator::Eq => ord == Equal,
            Comparator::Ne => ord != Equal,
            Comparator::Lt => ord == Less,
            Comparator::Le => ord != Greater,
            Comparator::Gt => ord == Greater,
            Comparator::Ge => ord != Less,
        }
    }
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// A constant in a predicate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Literal {
    Int(i64),
    Str(String),
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Int(i) => write!(f, "{i}"),
            Literal::Str(s) => write!(f, "'{}'", s.replace('\'', "''")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SelectExpr {
    Column(ColumnRef),
    Aggregate(AggregateCall),
    /// `SELECT 1 FROM ...`; only allowed as the sole select item.
    Literal(i64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectItem {
    pub expr: SelectExpr,
    pub alias: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FromItem {
    pub table: String,
    pub alias: Option<String>,
}

impl FromItem {
    /// The name by which columns of this item are qualified.
    pub fn binding(&self) -> &str {
        self.alias.as_deref().unwrap_or(&self.table)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Conjunct {
    /// Equi-join (or same-table equality) between two columns.
    ColumnEq(ColumnRef, ColumnRef),
    /// Column compared against a constant.
    Compare(ColumnRef, Comparator, Literal),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HavingClause {
    pub aggregate: AggregateCall,
    pub op: Comparator,
    pub value: Literal,
}

/// A parsed statement of the supported fragment.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ParsedQuery {
    pub distinct: bool,
    pub select_items: Vec<SelectItem>,
    pub from_items: Vec<FromItem>,
    pub where_conjuncts: Vec<Conjunct>,
    pub group_by: Vec<ColumnRef>,
    pub having: Option<HavingClause>,
}

impl ParsedQuery {
    pub fn aggregates(&self) -> impl Iterator<Item = &AggregateCall> {
        self.select_items
            .iter()
            .filter_map(|item| match &item.expr {
                SelectExpr::Aggregate(call) => Some(call),
                _ => None,
            })
            .chain(self.having.iter().map(|h| &h.aggregate))
    }
}
