//! SQL frontend: parse the supported SELECT fragment and normalize it into a
//! [`ConjunctiveQuery`](crate::query::ConjunctiveQuery).
//!
//! The fragment is SELECT-FROM-WHERE-GROUP BY-HAVING with comma joins or
//! `INNER JOIN ... ON`, conjunctions of column equalities and column/constant
//! comparisons, the aggregates MIN, MAX, SUM, COUNT and AVG (optionally
//! DISTINCT), and `SELECT 1` for Boolean queries.

pub mod ast;
mod extract;
mod lexer;
mod parser;
mod render;

use thiserror::Error;

pub use extract::{extract_cq, extract_cq_with_catalog, Catalog};
pub use parser::parse_query;
pub use render::to_sql;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SqlError {
    #[error(
        "syntax error at line {line}, column {column}: unexpected {token}, expected {expected}"
    )]
    Syntax {
        line: usize,
        column: usize,
        token: String,
        expected: String,
    },
    #[error("unsupported feature at line {line}, column {column}: {feature}")]
    Unsupported {
        feature: String,
        line: usize,
        column: usize,
    },
    #[error("ambiguous column reference {0}")]
    AmbiguousColumn(String),
    #[error("unknown column {0}")]
    UnknownColumn(String),
    #[error("unknown table or alias {0}")]
    UnknownTable(String),
    #[error("duplicate table alias {0}")]
    DuplicateAlias(String),
    #[error("column {0} must appear in GROUP BY or be aggregated")]
    NonGroupedColumn(String),
    #[error("unsupported query shape: {0}")]
    UnsupportedShape(String),
}

impl SqlError {
    /// The construct named by an `Unsupported` error.
    pub fn unsupported_feature(&self) -> Option<&str> {
        match self {
            SqlError::Unsupported { feature, .. } => Some(feature),
            _ => None,
        }
    }
}

/// Parse and extract in one step, without a catalog.
pub fn sql_to_cq(sql: &str) -> Result<crate::query::ConjunctiveQuery, SqlError> {
    extract_cq(&parse_query(sql)?)
}
