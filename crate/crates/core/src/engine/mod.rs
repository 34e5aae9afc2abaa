//! In-memory bag-semantics executor. Relations map each distinct row to its
//! multiplicity, so cardinalities stay exact without materializing copies.

mod eval;
mod load;
mod ops;
mod relation;

use std::path::PathBuf;

pub use eval::{
    eval_naive, eval_plan, finalize, finalize_spec, full_join, full_reducer_holds, scan,
    ExecOptions, NaiveStats, PlanRun, StageStats, StatementStats,
};
pub use load::{catalog_of, load_csv, load_database, parse_csv, parse_value, write_csv, Database};
pub use ops::{aggregate, aggregate_column, aggregate_having, natural_join, semi_join};
pub use relation::{bag_equal, Relation, Row, Value};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error("{}:{line}: expected {expected} fields, found {found}", path.display())]
    ArityMismatch {
        path: PathBuf,
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("{}: header {found:?} does not match declared columns {expected:?}", path.display())]
    SchemaMismatch {
        path: PathBuf,
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("unknown attribute {attribute} (columns: {})", schema.join(", "))]
    UnknownAttribute {
        attribute: String,
        schema: Vec<String>,
    },
    #[error("no relation named {0} in the database")]
    MissingRelation(String),
    #[error("type error: {0}")]
    TypeError(String),
    #[error("integer overflow in {0}")]
    Overflow(String),
    #[error("plan references unknown handle {0}")]
    PlanReference(String),
}

#[cfg(test)]
mod tests;
