use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::relation::{Relation, Value};
use super::EngineError;
use crate::sql::Catalog;

/// Relations by name.
pub type Database = BTreeMap<String, Relation>;

/// Integers when every character is a digit (after an optional minus sign),
/// NULL for an empty field, strings otherwise.
pub fn parse_value(field: &str) -> Value {
    let digits = field.strip_prefix('-').unwrap_or(field);
    if field.is_empty() {
        Value::Null
    } else if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
        field
            .parse()
            .map_or_else(|_| Value::Str(field.to_owned()), Value::Int)
    } else {
        Value::Str(field.to_owned())
    }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> EngineError {
    EngineError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Read a CSV file whose first line is the header.
pub fn load_csv(path: &Path, declared: Option<&[String]>) -> Result<Relation, EngineError> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    parse_csv(&text, declared).map_err(|e| match e {
        EngineError::ArityMismatch {
            line,
            expected,
            found,
            ..
        } => EngineError::ArityMismatch {
            path: path.to_path_buf(),
            line,
            expected,
            found,
        },
        EngineError::SchemaMismatch {
            expected, found, ..
        } => EngineError::SchemaMismatch {
            path: path.to_path_buf(),
            expected,
            found,
        },
        EngineError::Io { message, .. } => io_error(path, message),
        other => other,
    })
}

/// Parse CSV text; errors carry an empty path.
pub fn parse_csv(text: &str, declared: Option<&[String]>) -> Result<Relation, EngineError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let header: Vec<String> = match records.next() {
        Some(r) => r
            .map_err(|e| io_error(Path::new(""), e))?
            .iter()
            .map(|h| h.trim().to_owned())
            .collect(),
        None => return Err(io_error(Path::new(""), "missing header row")),
    };
    if let Some(declared) = declared {
        if declared != header.as_slice() {
            return Err(EngineError::SchemaMismatch {
                path: PathBuf::new(),
                expected: declared.to_vec(),
                found: header,
            });
        }
    }
    let mut rel = Relation::new(header.clone());
    for record in records {
        let record = record.map_err(|e| io_error(Path::new(""), e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(EngineError::ArityMismatch {
                path: PathBuf::new(),
                line,
                expected: header.len(),
                found: record.len(),
            });
        }
        rel.insert(record.iter().map(parse_value).collect(), 1);
    }
    // The csv reader skips blank lines; for a one-column file each of them
    // is a row holding a single empty field.
    if header.len() == 1 {
        let blanks = text
            .lines()
            .skip(1)
            .filter(|l| l.trim_end_matches('\r').is_empty())
            .count() as u64;
        rel.insert(vec![Value::Null], blanks);
    }
    Ok(rel)
}

/// Load every `<name>.csv` in `dir` as relation `<name>`.
pub fn load_database(dir: &Path) -> Result<Database, EngineError> {
    let entries = fs::read_dir(dir).map_err(|e| io_error(dir, e))?;
    let mut paths: Vec<PathBuf> = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| io_error(dir, e))?.path();
        if path.extension().is_some_and(|x| x == "csv") && path.is_file() {
            paths.push(path);
        }
    }
    paths.sort();
    let mut db = Database::new();
    for path in paths {
        let name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_owned();
        db.insert(name, load_csv(&path, None)?);
    }
    Ok(db)
}

/// Catalog listing each relation's columns, for resolving unqualified names.
pub fn catalog_of(db: &Database) -> Catalog {
    db.iter()
        .map(|(name, rel)| (name.clone(), rel.schema().to_vec()))
        .collect()
}

/// Write `rel` as CSV with a header; NULL becomes an empty field.
pub fn write_csv(path: &Path, rel: &Relation) -> Result<(), EngineError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| io_error(path, e))?;
    writer
        .write_record(rel.schema())
        .map_err(|e| io_error(path, e))?;
    for (row, count) in rel.rows() {
        let fields: Vec<String> = row
            .iter()
            .map(|v| match v {
                Value::Null => String::new(),
                other => other.to_string(),
            })
            .collect();
        for _ in 0..count {
            writer
                .write_record(&fields)
                .map_err(|e| io_error(path, e))?;
        }
    }
    writer.flush().map_err(|e| io_error(path, e))
}
