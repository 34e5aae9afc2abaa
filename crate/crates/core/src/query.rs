//! Normalized conjunctive queries with grouping and aggregation metadata.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::sql::ast::{AggFunc, Comparator, Literal};

/// A query variable: one equivalence class of equi-joined attributes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(String);

impl Var {
    pub fn new(name: impl Into<String>) -> Self {
        Var(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Var {
    fn from(s: &str) -> Self {
        Var(s.to_owned())
    }
}

impl From<String> for Var {
    fn from(s: String) -> Self {
        Var(s)
    }
}

impl AsRef<str> for Var {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl std::borrow::Borrow<str> for Var {
    fn borrow(&self) -> &str {
        &self.0
    }
}

/// Shorthand for building variable sets in code and tests.
pub fn var_set<'a>(names: impl IntoIterator<Item = &'a str>) -> BTreeSet<Var> {
    names.into_iter().map(Var::from).collect()
}

/// One occurrence of a relation in the query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    /// Unique within the query, even for self-joins.
    pub id: String,
    pub relation: String,
    /// Referenced attribute name to variable.
    pub attributes: BTreeMap<String, Var>,
}

impl Atom {
    pub fn vars(&self) -> BTreeSet<Var> {
        self.attributes.values().cloned().collect()
    }

    /// First attribute (in name order) bound to `var`.
    pub fn attribute_for(&self, var: &Var) -> Option<&str> {
        self.attributes
            .iter()
            .find(|(_, v)| *v == var)
            .map(|(a, _)| a.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstantSelection {
    pub atom: String,
    pub attribute: String,
    pub op: Comparator,
    pub value: Literal,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Aggregate {
    pub func: AggFunc,
    pub var: Var,
    pub distinct: bool,
}

impl fmt::Display for Aggregate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.distinct {
            write!(f, "{}(DISTINCT {})", self.func, self.var)
        } else {
            write!(f, "{}({})", self.func, self.var)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OutputExpr {
    Var(Var),
    Aggregate(Aggregate),
    /// Constant projection of a Boolean query.
    Literal(i64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputColumn {
    pub name: String,
    pub expr: OutputExpr,
}

/// HAVING predicate, evaluated after grouping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HavingFilter {
    pub aggregate: Aggregate,
    pub op: Comparator,
    pub value: Literal,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConjunctiveQuery {
    pub atoms: Vec<Atom>,
    pub selections: Vec<ConstantSelection>,
    pub output: Vec<OutputColumn>,
    pub grouping: Vec<Var>,
    pub having: Option<HavingFilter>,
    /// `SELECT DISTINCT`.
    pub distinct: bool,
    /// Two different equality constants were imposed on one variable.
    pub statically_empty: bool,
}

impl ConjunctiveQuery {
    pub fn atom(&self, id: &str) -> Option<&Atom> {
        self.atoms.iter().find(|a| a.id == id)
    }

    pub fn selections_for<'a>(
        &'a self,
        atom: &'a str,
    ) -> impl Iterator<Item = &'a ConstantSelection> + 'a {
        self.selections.iter().filter(move |s| s.atom == atom)
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.atoms
            .iter()
            .flat_map(|a| a.attributes.values().cloned())
            .collect()
    }

    /// Variables projected by plain output columns, in first-use order.
    pub fn output_vars(&self) -> Vec<Var> {
        let mut out: Vec<Var> = Vec::new();
        for col in &self.output {
            if let OutputExpr::Var(v) = &col.expr {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
        }
        out
    }

    /// Aggregates of the select list followed by the HAVING aggregate, without repeats.
    pub fn aggregates(&self) -> Vec<Aggregate> {
        let mut out: Vec<Aggregate> = Vec::new();
        let select = self.output.iter().filter_map(|c| match &c.expr {
            OutputExpr::Aggregate(a) => Some(a),
            _ => None,
        });
        for agg in select.chain(self.having.iter().map(|h| &h.aggregate)) {
            if !out.contains(agg) {
                out.push(agg.clone());
            }
        }
        out
    }

    /// Grouping or aggregation is present, so the answer is a γ over the join.
    pub fn is_aggregate(&self) -> bool {
        !self.grouping.is_empty() || self.having.is_some() || !self.aggregates().is_empty()
    }

    /// Only constants are selected: the answer is whether the join is non-empty.
    pub fn is_boolean(&self) -> bool {
        !self.output.is_empty()
            && self
                .output
                .iter()
                .all(|c| matches!(c.expr, OutputExpr::Literal(_)))
    }

    /// The set S: grouping, aggregated and output variables.
    pub fn projection_vars(&self) -> BTreeSet<Var> {
        let mut s: BTreeSet<Var> = self.grouping.iter().cloned().collect();
        s.extend(self.output_vars());
        s.extend(self.aggregates().into_iter().map(|a| a.var));
        s
    }

    pub fn output_names(&self) -> Vec<String> {
        self.output.iter().map(|c| c.name.clone()).collect()
    }

    /// Variables that occur in at least two atoms.
    pub fn join_vars(&self) -> BTreeSet<Var> {
        let mut count: BTreeMap<Var, usize> = BTreeMap::new();
        for atom in &self.atoms {
            for v in atom.vars() {
                *count.entry(v).or_default() += 1;
            }
        }
        count
            .into_iter()
            .filter(|(_, n)| *n > 1)
            .map(|(v, _)| v)
            .collect()
    }

    /// Rewrite to the full-enumeration benchmark shape: output one column per
    /// join variable, no grouping, bag semantics.
    pub fn project_to_join_vars(&self) -> ConjunctiveQuery {
        let mut q = self.clone();
        q.output = self
            .join_vars()
            .into_iter()
            .map(|v| OutputColumn {
                name: v.as_str().to_owned(),
                expr: OutputExpr::Var(v),
            })
            .collect();
        q.grouping.clear();
        q.having = None;
        q.distinct = false;
        q
    }
}

impl fmt::Display for ConjunctiveQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, atom) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            let vars: Vec<String> = atom
                .attributes
                .iter()
                .map(|(a, v)| {
                    if a == v.as_str() {
                        a.clone()
                    } else {
                        format!("{a}:{v}")
                    }
                })
                .collect();
            write!(f, "{}", atom.id)?;
            if atom.id != atom.relation {
                write!(f, "[{}]", atom.relation)?;
            }
            write!(f, "({})", vars.join(", "))?;
        }
        for s in &self.selections {
            write!(f, ", {}.{}{}{}", s.atom, s.attribute, s.op, s.value)?;
        }
        Ok(())
    }
}
