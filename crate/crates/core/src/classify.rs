//! Aggregation normal form and the 0MA test: a guard atom holding every
//! projected variable, plus an aggregate vocabulary that ignores duplicates.

use std::collections::BTreeSet;
use std::fmt;

use crate::query::{Aggregate, ConjunctiveQuery, HavingFilter, Var};
use crate::sql::ast::AggFunc;

/// γ_U(π_S(Q')) with HAVING split off as a post-filter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregationForm {
    /// The query with its output, grouping and aggregation intact; Q' is its
    /// atoms and selections.
    pub query: ConjunctiveQuery,
    /// S: grouping, aggregated and output variables.
    pub projection: BTreeSet<Var>,
    pub grouping: Vec<Var>,
    pub aggregates: Vec<Aggregate>,
    pub having: Option<HavingFilter>,
}

impl AggregationForm {
    pub fn is_boolean(&self) -> bool {
        self.query.is_boolean()
    }

    /// Q': atoms and selections only.
    pub fn inner(&self) -> ConjunctiveQuery {
        ConjunctiveQuery {
            atoms: self.query.atoms.clone(),
            selections: self.query.selections.clone(),
            statically_empty: self.query.statically_empty,
            ..ConjunctiveQuery::default()
        }
    }
}

pub fn normalize_aggregation(cq: &ConjunctiveQuery) -> AggregationForm {
    AggregationForm {
        projection: cq.projection_vars(),
        grouping: cq.grouping.clone(),
        aggregates: cq.aggregates(),
        having: cq.having.clone(),
        query: cq.clone(),
    }
}

/// Atoms whose variables include all of S, sorted by id.
pub fn find_guards(form: &AggregationForm) -> Vec<String> {
    let mut guards: Vec<String> = form
        .query
        .atoms
        .iter()
        .filter(|a| form.projection.is_subset(&a.vars()))
        .map(|a| a.id.clone())
        .collect();
    guards.sort();
    guards
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnsafeReason {
    /// A plain aggregate that counts duplicates.
    Aggregate(AggFunc),
    /// Bag output without aggregation or DISTINCT.
    BagProjection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetSafety {
    MinMax,
    /// Every aggregate is DISTINCT, or MIN/MAX mixed with DISTINCT ones.
    DistinctAggregate,
    DistinctProjection,
    BooleanQuery,
    NotSafe(UnsafeReason),
}

impl SetSafety {
    pub fn is_safe(self) -> bool {
        !matches!(self, SetSafety::NotSafe(_))
    }
}

impl fmt::Display for SetSafety {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetSafety::MinMax => f.write_str("yes (MIN/MAX aggregates)"),
            SetSafety::DistinctAggregate => f.write_str("yes (DISTINCT aggregates)"),
            SetSafety::DistinctProjection => f.write_str("yes (duplicate-free output)"),
            SetSafety::BooleanQuery => f.write_str("yes (Boolean query)"),
            SetSafety::NotSafe(UnsafeReason::Aggregate(func)) => {
                write!(f, "no ({func} counts duplicates)")
            }
            SetSafety::NotSafe(UnsafeReason::BagProjection) => f.write_str("no (bag output)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZeroMaReport {
    pub projection: BTreeSet<Var>,
    pub guarded: bool,
    pub guards: Vec<String>,
    pub set_safety: SetSafety,
    pub is_0ma: bool,
    pub chosen_root: Option<String>,
    pub notes: Vec<String>,
}

pub fn set_safety(form: &AggregationForm) -> SetSafety {
    if form.aggregates.is_empty() {
        return if form.is_boolean() {
            SetSafety::BooleanQuery
        } else if form.query.distinct || !form.grouping.is_empty() {
            SetSafety::DistinctProjection
        } else {
            SetSafety::NotSafe(UnsafeReason::BagProjection)
        };
    }
    if let Some(bad) = form
        .aggregates
        .iter()
        .find(|a| !a.distinct && !a.func.is_min_max())
    {
        return SetSafety::NotSafe(UnsafeReason::Aggregate(bad.func));
    }
    if form.aggregates.iter().all(|a| a.func.is_min_max()) {
        SetSafety::MinMax
    } else {
        SetSafety::DistinctAggregate
    }
}

pub fn classify_0ma(form: &AggregationForm) -> ZeroMaReport {
    classify_0ma_with_guard(form, None)
}

/// Like [`classify_0ma`], choosing `preferred` as the root when it is a guard.
pub fn classify_0ma_with_guard(form: &AggregationForm, preferred: Option<&str>) -> ZeroMaReport {
    let guards = find_guards(form);
    let safety = set_safety(form);
    let guarded = !guards.is_empty();
    let is_0ma = guarded && safety.is_safe();
    let mut notes = Vec::new();

    let chosen_root = if is_0ma {
        match preferred {
            Some(p) if guards.iter().any(|g| g == p) => Some(p.to_owned()),
            Some(p) => {
                notes.push(format!(
                    "requested guard {p} does not hold every projected variable"
                ));
                guards.first().cloned()
            }
            None => guards.first().cloned(),
        }
    } else {
        None
    };
    if let SetSafety::NotSafe(UnsafeReason::Aggregate(func)) = safety {
        if guarded {
            notes.push(format!(
                "{func} is not set-safe in general; a key on the grouping columns could still rule out duplicates, which is not checked"
            ));
        }
    }
    if form.query.statically_empty {
        notes.push("conflicting equality constants: the join is empty".into());
    }
    ZeroMaReport {
        projection: form.projection.clone(),
        guarded,
        guards,
        set_safety: safety,
        is_0ma,
        chosen_root,
        notes,
    }
}

impl fmt::Display for ZeroMaReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<&str> = self.projection.iter().map(Var::as_str).collect();
        writeln!(
            f,
            "projection: {}",
            if s.is_empty() {
                "(none)".into()
            } else {
                s.join(", ")
            }
        )?;
        if self.guarded {
            writeln!(f, "guards: {}", self.guards.join(", "))?;
        } else {
            writeln!(f, "guards: (none)")?;
        }
        writeln!(f, "set-safe: {}", self.set_safety)?;
        match &self.chosen_root {
            Some(root) => writeln!(f, "0MA: yes, guard: {root}")?,
            None if !self.guarded => {
                writeln!(f, "0MA: no (no atom holds every projected variable)")?
            }
            None => writeln!(f, "0MA: no (not set-safe)")?,
        }
        for note in &self.notes {
            writeln!(f, "note: {note}")?;
        }
        Ok(())
    }
}
