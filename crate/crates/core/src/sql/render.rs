use std::collections::BTreeMap;

use crate::query::{Aggregate, ConjunctiveQuery, OutputExpr, Var};

/// Render a conjunctive query as canonical SQL of the supported fragment.
///
/// Every atom is aliased by its id and every column is qualified, so
/// re-parsing and re-extracting yields the same query.
pub fn to_sql(cq: &ConjunctiveQuery) -> String {
    // First occurrence of each variable, and all occurrences in atom order.
    let mut occurrences: BTreeMap<&Var, Vec<String>> = BTreeMap::new();
    for atom in &cq.atoms {
        for (attr, var) in &atom.attributes {
            occurrences
                .entry(var)
                .or_default()
                .push(format!("{}.{}", atom.id, attr));
        }
    }
    let first = |v: &Var| {
        occurrences
            .get(v)
            .map(|o| o[0].clone())
            .unwrap_or_else(|| v.to_string())
    };
    let agg = |a: &Aggregate| {
        let distinct = if a.distinct { "DISTINCT " } else { "" };
        format!("{}({distinct}{})", a.func, first(&a.var))
    };

    let select: Vec<String> = cq
        .output
        .iter()
        .map(|col| match &col.expr {
            OutputExpr::Var(v) => format!("{} AS {}", first(v), col.name),
            OutputExpr::Aggregate(a) => format!("{} AS {}", agg(a), col.name),
            OutputExpr::Literal(n) => format!("{n} AS {}", col.name),
        })
        .collect();
    let from: Vec<String> = cq
        .atoms
        .iter()
        .map(|a| format!("{} AS {}", a.relation, a.id))
        .collect();

    let mut conditions: Vec<String> = Vec::new();
    for occ in occurrences.values() {
        for pair in occ.windows(2) {
            conditions.push(format!("{} = {}", pair[0], pair[1]));
        }
    }
    for s in &cq.selections {
        conditions.push(format!("{}.{} {} {}", s.atom, s.attribute, s.op, s.value));
    }

    let mut sql = String::from("SELECT ");
    if cq.distinct {
        sql.push_str("DISTINCT ");
    }
    sql.push_str(&select.join(", "));
    sql.push_str(" FROM ");
    sql.push_str(&from.join(", "));
    if !conditions.is_empty() {
        sql.push_str(" WHERE ");
        sql.push_str(&conditions.join(" AND "));
    }
    if !cq.grouping.is_empty() {
        let keys: Vec<String> = cq.grouping.iter().map(first).collect();
        sql.push_str(" GROUP BY ");
        sql.push_str(&keys.join(", "));
    }
    if let Some(h) = &cq.having {
        sql.push_str(&format!(
            " HAVING {} {} {}",
            agg(&h.aggregate),
            h.op,
            h.value
        ));
    }
    sql
}
