use std::collections::BTreeMap;
use std::fmt;

use crate::sql::ast::{Comparator, Literal};

/// Cell value. Ordering puts NULL first, then integers, then strings.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Null,
    Int(i64),
    Str(String),
}

impl Value {
    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    /// SQL comparison against a constant: NULL and mismatched types never match.
    pub fn compare(&self, op: Comparator, lit: &Literal) -> bool {
        let ord = match (self, lit) {
            (Value::Int(a), Literal::Int(b)) => a.cmp(b),
            (Value::Str(a), Literal::Str(b)) => a.as_str().cmp(b.as_str()),
            _ => return false,
        };
        op.holds(ord)
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Str(s.to_owned())
    }
}

impl From<Option<i64>> for Value {
    fn from(v: Option<i64>) -> Self {
        v.map_or(Value::Null, Value::Int)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("NULL"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Str(s) => f.write_str(s),
        }
    }
}

pub type Row = Vec<Value>;

/// Multiset of rows over named columns, stored as row → multiplicity.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Relation {
    schema: Vec<String>,
    rows: BTreeMap<Row, u64>,
}

impl Relation {
    pub fn new<S: Into<String>>(schema: impl IntoIterator<Item = S>) -> Self {
        Relation {
            schema: schema.into_iter().map(Into::into).collect(),
            rows: BTreeMap::new(),
        }
    }

    /// The relation with no columns and one row: the identity for joins.
    pub fn unit() -> Self {
        let mut r = Relation::new(Vec::<String>::new());
        r.insert(Vec::new(), 1);
        r
    }

    pub fn from_rows<S: Into<String>>(
        schema: impl IntoIterator<Item = S>,
        rows: impl IntoIterator<Item = Row>,
    ) -> Self {
        let mut r = Relation::new(schema);
        for row in rows {
            r.insert(row, 1);
        }
        r
    }

    pub fn schema(&self) -> &[String] {
        &self.schema
    }

    pub fn arity(&self) -> usize {
        self.schema.len()
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|c| c == name)
    }

    /// Add `count` copies of `row`. Panics on arity mismatch.
    pub fn insert(&mut self, row: Row, count: u64) {
        assert_eq!(
            row.len(),
            self.schema.len(),
            "row arity must match the schema"
        );
        if count > 0 {
            let slot = self.rows.entry(row).or_insert(0);
            *slot = slot.saturating_add(count);
        }
    }

    /// Distinct rows with their multiplicities, in row order.
    pub fn rows(&self) -> impl Iterator<Item = (&Row, u64)> {
        self.rows.iter().map(|(r, c)| (r, *c))
    }

    pub fn multiplicity(&self, row: &[Value]) -> u64 {
        self.rows.get(row).copied().unwrap_or(0)
    }

    /// Bag cardinality: rows counted with multiplicity.
    pub fn len(&self) -> u64 {
        self.rows.values().fold(0u64, |a, c| a.saturating_add(*c))
    }

    pub fn distinct_len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Bag projection onto `columns`, which may repeat. Panics on unknown
    /// columns; see [`Relation::try_project`].
    pub fn project<S: AsRef<str>>(&self, columns: &[S]) -> Relation {
        self.try_project(columns)
            .expect("projection onto known columns")
    }

    pub fn try_project<S: AsRef<str>>(&self, columns: &[S]) -> Option<Relation> {
        let idx: Vec<usize> = columns
            .iter()
            .map(|c| self.column(c.as_ref()))
            .collect::<Option<_>>()?;
        let mut out = Relation::new(columns.iter().map(|c| c.as_ref().to_owned()));
        for (row, count) in self.rows() {
            out.insert(idx.iter().map(|&i| row[i].clone()).collect(), count);
        }
        Some(out)
    }

    /// δ: every multiplicity becomes 1.
    pub fn distinct(&self) -> Relation {
        Relation {
            schema: self.schema.clone(),
            rows: self.rows.keys().map(|r| (r.clone(), 1)).collect(),
        }
    }

    pub fn retain(&mut self, mut keep: impl FnMut(&Row) -> bool) {
        self.rows.retain(|r, _| keep(r));
    }

    pub fn renamed<S: Into<String>>(&self, schema: impl IntoIterator<Item = S>) -> Relation {
        let schema: Vec<String> = schema.into_iter().map(Into::into).collect();
        assert_eq!(schema.len(), self.schema.len(), "rename keeps arity");
        Relation {
            schema,
            rows: self.rows.clone(),
        }
    }

    /// Tab-separated rendering with a header line, one line per copy of a row.
    pub fn to_tsv(&self) -> String {
        let mut out = self.schema.join("\t");
        out.push('\n');
        for (row, count) in self.rows() {
            let line: Vec<String> = row.iter().map(ToString::to_string).collect();
            for _ in 0..count {
                out.push_str(&line.join("\t"));
                out.push('\n');
            }
        }
        out
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cells: Vec<Vec<String>> = self
            .rows()
            .map(|(row, count)| {
                let mut cells: Vec<String> = row.iter().map(ToString::to_string).collect();
                cells.push(count.to_string());
                cells
            })
            .collect();
        let mut header: Vec<String> = self.schema.clone();
        header.push("count".into());
        let widths: Vec<usize> = (0..header.len())
            .map(|i| {
                cells
                    .iter()
                    .map(|r| r[i].len())
                    .chain([header[i].len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |cells: &[String]| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect::<Vec<_>>()
                .join(" | ")
                .trim_end()
                .to_owned()
        };
        writeln!(f, "{}", line(&header))?;
        writeln!(
            f,
            "{}",
            widths
                .iter()
                .map(|w| "-".repeat(*w))
                .collect::<Vec<_>>()
                .join("-+-")
        )?;
        for row in &cells {
            writeln!(f, "{}", line(row))?;
        }
        match self.len() {
            1 => write!(f, "(1 row)"),
            n => write!(f, "({n} rows)"),
        }
    }
}

/// Same multiset of rows after matching columns by name.
pub fn bag_equal(a: &Relation, b: &Relation) -> bool {
    if a.arity() != b.arity() {
        return false;
    }
    // Column i of `a` is read from column perm[i] of `b`; repeated names pair
    // up in order of appearance.
    let mut used = vec![false; b.arity()];
    let mut perm = Vec::with_capacity(a.arity());
    for name in a.schema() {
        let Some(j) = (0..b.arity()).find(|&j| !used[j] && b.schema()[j] == *name) else {
            return false;
        };
        used[j] = true;
        perm.push(j);
    }
    if a.distinct_len() != b.distinct_len() {
        return false;
    }
    b.rows().all(|(row, count)| {
        let reordered: Row = perm.iter().map(|&j| row[j].clone()).collect();
        a.multiplicity(&reordered) == count
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(i: i64) -> Value {
        Value::Int(i)
    }

    #[test]
    fn bag_equal_ignores_column_order() {
        let mut a = Relation::new(["a", "b"]);
        a.insert(vec![v(1), v(2)], 2);
        let mut b = Relation::new(["b", "a"]);
        b.insert(vec![v(2), v(1)], 2);
        assert!(bag_equal(&a, &b));
        let mut c = Relation::new(["a", "b"]);
        c.insert(vec![v(1), v(2)], 1);
        assert!(!bag_equal(&a, &c));
        assert!(bag_equal(&Relation::new(["a"]), &Relation::new(["a"])));
        assert!(!bag_equal(&Relation::new(["a"]), &Relation::new(["b"])));
    }

    #[test]
    fn projection_keeps_multiplicity() {
        let mut r = Relation::new(["a", "b"]);
        r.insert(vec![v(1), v(2)], 2);
        r.insert(vec![v(1), v(3)], 1);
        let p = r.project(&["a"]);
        assert_eq!(p.multiplicity(&[v(1)]), 3);
        assert_eq!(p.distinct().len(), 1);
        assert!(r.try_project(&["zz"]).is_none());
    }

    #[test]
    fn comparisons_follow_sql() {
        assert!(v(3).compare(Comparator::Gt, &Literal::Int(1)));
        assert!(!Value::Null.compare(Comparator::Eq, &Literal::Int(1)));
        assert!(!Value::from("1").compare(Comparator::Eq, &Literal::Int(1)));
        assert!(Value::from("b").compare(Comparator::Ne, &Literal::Str("a".into())));
    }
}
