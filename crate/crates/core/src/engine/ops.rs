use std::collections::{BTreeMap, HashMap, HashSet};

use super::relation::{Relation, Row, Value};
use super::EngineError;
use crate::query::Aggregate;
use crate::sql::ast::{AggFunc, Comparator, Literal};

fn columns(rel: &Relation, names: &[&str]) -> Result<Vec<usize>, EngineError> {
    names
        .iter()
        .map(|n| {
            rel.column(n).ok_or_else(|| EngineError::UnknownAttribute {
                attribute: (*n).to_owned(),
                schema: rel.schema().to_vec(),
            })
        })
        .collect()
}

/// Key tuple at `idx`, or `None` when any part is NULL.
fn key(row: &Row, idx: &[usize]) -> Option<Row> {
    idx.iter()
        .map(|&i| {
            if row[i].is_null() {
                None
            } else {
                Some(row[i].clone())
            }
        })
        .collect()
}

/// `l ⋉ r` on the given (left, right) attribute pairs, keeping left multiplicities.
pub fn semi_join(
    l: &Relation,
    r: &Relation,
    keys: &[(&str, &str)],
) -> Result<Relation, EngineError> {
    let li = columns(l, &keys.iter().map(|k| k.0).collect::<Vec<_>>())?;
    let ri = columns(r, &keys.iter().map(|k| k.1).collect::<Vec<_>>())?;
    let present: HashSet<Row> = r.rows().filter_map(|(row, _)| key(row, &ri)).collect();
    let mut out = l.clone();
    out.retain(|row| key(row, &li).is_some_and(|k| present.contains(&k)));
    Ok(out)
}

/// Bag natural join on the attributes the two schemas share. The output
/// schema is `l`'s columns followed by `r`'s unshared ones.
pub fn natural_join(l: &Relation, r: &Relation) -> Relation {
    let shared: Vec<&str> = l
        .schema()
        .iter()
        .filter(|c| r.column(c).is_some())
        .map(String::as_str)
        .collect();
    let li = columns(l, &shared).expect("shared columns");
    let ri = columns(r, &shared).expect("shared columns");
    let rest: Vec<usize> = (0..r.arity()).filter(|i| !ri.contains(i)).collect();

    let mut index: HashMap<Row, Vec<(&Row, u64)>> = HashMap::new();
    for (row, count) in r.rows() {
        if let Some(k) = key(row, &ri) {
            index.entry(k).or_default().push((row, count));
        }
    }
    let schema = l
        .schema()
        .iter()
        .cloned()
        .chain(rest.iter().map(|&i| r.schema()[i].clone()));
    let mut out = Relation::new(schema);
    for (lrow, lcount) in l.rows() {
        let Some(k) = key(lrow, &li) else { continue };
        for (rrow, rcount) in index.get(&k).into_iter().flatten() {
            let mut row = lrow.clone();
            row.extend(rest.iter().map(|&i| rrow[i].clone()));
            out.insert(row, lcount.saturating_mul(*rcount));
        }
    }
    out
}

/// Aggregate result before rendering. AVG stays an exact fraction so HAVING
/// can compare it without rounding.
#[derive(Debug, Clone, PartialEq)]
enum AggValue {
    Plain(Value),
    Ratio { num: i128, den: i128 },
}

impl AggValue {
    fn render(&self) -> Value {
        match self {
            AggValue::Plain(v) => v.clone(),
            AggValue::Ratio { num, den } => Value::Str(decimal(*num, *den)),
        }
    }

    fn compare(&self, op: Comparator, lit: &Literal) -> bool {
        match (self, lit) {
            (AggValue::Plain(v), _) => v.compare(op, lit),
            (AggValue::Ratio { num, den }, Literal::Int(c)) => {
                op.holds(num.cmp(&(*c as i128 * den)))
            }
            (AggValue::Ratio { .. }, Literal::Str(_)) => false,
        }
    }
}

/// `num/den` rounded half away from zero to six fractional digits.
fn decimal(num: i128, den: i128) -> String {
    let scaled = num.abs() * 1_000_000;
    let mut q = scaled / den;
    if (scaled % den) * 2 >= den {
        q += 1;
    }
    let sign = if num < 0 && q != 0 { "-" } else { "" };
    format!("{sign}{}.{:06}", q / 1_000_000, q % 1_000_000)
}

fn apply(agg: &Aggregate, values: &[(Value, u64)]) -> Result<AggValue, EngineError> {
    // SQL skips NULLs; DISTINCT counts every value once.
    let mut vals: Vec<(&Value, u64)> = values
        .iter()
        .filter(|(v, _)| !v.is_null())
        .map(|(v, c)| (v, *c))
        .collect();
    if agg.distinct {
        let mut seen: BTreeMap<&Value, u64> = BTreeMap::new();
        for (v, _) in &vals {
            seen.insert(v, 1);
        }
        vals = seen.into_iter().collect();
    }
    let type_error = |what: &str| EngineError::TypeError(format!("{agg} over {what}"));
    let ints = || -> Result<Vec<(i64, u64)>, EngineError> {
        vals.iter()
            .map(|(v, c)| match v {
                Value::Int(i) => Ok((*i, *c)),
                _ => Err(type_error("non-integer values")),
            })
            .collect()
    };
    let sum = |xs: &[(i64, u64)]| -> i128 { xs.iter().map(|(i, c)| *i as i128 * *c as i128).sum() };
    let count: u64 = vals.iter().map(|(_, c)| c).sum();
    Ok(match agg.func {
        AggFunc::Count => AggValue::Plain(Value::Int(count as i64)),
        _ if vals.is_empty() => AggValue::Plain(Value::Null),
        AggFunc::Min | AggFunc::Max => {
            let mixed = vals.iter().any(|(v, _)| matches!(v, Value::Int(_)))
                && vals.iter().any(|(v, _)| matches!(v, Value::Str(_)));
            if mixed {
                return Err(type_error("mixed integer and string values"));
            }
            let v = if agg.func == AggFunc::Min {
                vals.iter().map(|(v, _)| *v).min()
            } else {
                vals.iter().map(|(v, _)| *v).max()
            };
            AggValue::Plain(v.expect("nonempty").clone())
        }
        AggFunc::Sum => {
            let total = sum(&ints()?);
            let total = i64::try_from(total).map_err(|_| EngineError::Overflow(agg.to_string()))?;
            AggValue::Plain(Value::Int(total))
        }
        AggFunc::Avg => AggValue::Ratio {
            num: sum(&ints()?),
            den: count as i128,
        },
    })
}

/// Output column name of an aggregate, e.g. `MIN(grade)`.
pub fn aggregate_column(agg: &Aggregate) -> String {
    agg.to_string()
}

/// Groups of `rel` by `grouping`, with every aggregate evaluated per group.
/// A global aggregate over empty input yields one group.
fn grouped(
    rel: &Relation,
    grouping: &[&str],
    aggs: &[Aggregate],
) -> Result<Vec<(Row, Vec<AggValue>)>, EngineError> {
    let gi = columns(rel, grouping)?;
    let ai = columns(
        rel,
        &aggs.iter().map(|a| a.var.as_str()).collect::<Vec<_>>(),
    )?;
    let mut groups: BTreeMap<Row, Vec<(&Row, u64)>> = BTreeMap::new();
    for (row, count) in rel.rows() {
        let g: Row = gi.iter().map(|&i| row[i].clone()).collect();
        groups.entry(g).or_default().push((row, count));
    }
    if grouping.is_empty() && groups.is_empty() {
        groups.insert(Vec::new(), Vec::new());
    }
    groups
        .into_iter()
        .map(|(g, members)| {
            let values = aggs
                .iter()
                .zip(&ai)
                .map(|(agg, &i)| {
                    let column: Vec<(Value, u64)> =
                        members.iter().map(|(r, c)| (r[i].clone(), *c)).collect();
                    apply(agg, &column)
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok((g, values))
        })
        .collect()
}

/// γ_grouping with `aggs`, optionally over δ(rel). Output columns are the
/// grouping attributes followed by one column per aggregate.
pub fn aggregate(
    rel: &Relation,
    grouping: &[&str],
    aggs: &[Aggregate],
    distinct_input: bool,
) -> Result<Relation, EngineError> {
    aggregate_having(rel, grouping, aggs, distinct_input, None)
}

/// [`aggregate`] keeping only groups where `having.0 op having.2` holds.
pub fn aggregate_having(
    rel: &Relation,
    grouping: &[&str],
    aggs: &[Aggregate],
    distinct_input: bool,
    having: Option<(&Aggregate, Comparator, &Literal)>,
) -> Result<Relation, EngineError> {
    let input = if distinct_input {
        rel.distinct()
    } else {
        rel.clone()
    };
    let mut all: Vec<Aggregate> = aggs.to_vec();
    if let Some((h, _, _)) = having {
        all.push(h.clone());
    }
    let schema = grouping
        .iter()
        .map(|g| (*g).to_owned())
        .chain(aggs.iter().map(aggregate_column));
    let mut out = Relation::new(schema);
    for (mut g, values) in grouped(&input, grouping, &all)? {
        if let Some((_, op, lit)) = having {
            if !values.last().expect("having value").compare(op, lit) {
                continue;
            }
        }
        g.extend(values[..aggs.len()].iter().map(AggValue::render));
        out.insert(g, 1);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::Var;

    fn i(x: i64) -> Value {
        Value::Int(x)
    }

    fn s(x: &str) -> Value {
        Value::from(x)
    }

    fn agg(func: AggFunc, var: &str) -> Aggregate {
        Aggregate {
            func,
            var: Var::new(var),
            distinct: false,
        }
    }

    #[test]
    fn semi_join_preserves_multiplicity() {
        let mut l = Relation::new(["a", "b"]);
        l.insert(vec![i(1), i(2)], 3);
        l.insert(vec![i(9), i(9)], 1);
        let r = Relation::from_rows(["a"], [vec![i(1)]]);
        let out = semi_join(&l, &r, &[("a", "a")]).unwrap();
        assert_eq!(out.len(), 3);
        assert_eq!(out.multiplicity(&[i(1), i(2)]), 3);
        assert!(semi_join(&l, &Relation::new(["a"]), &[("a", "a")])
            .unwrap()
            .is_empty());
        assert!(matches!(
            semi_join(&l, &r, &[("zz", "a")]),
            Err(EngineError::UnknownAttribute { .. })
        ));
    }

    #[test]
    fn null_keys_never_match() {
        let l = Relation::from_rows(["a", "b"], [vec![Value::Null, i(5)]]);
        let r = Relation::from_rows(["a"], [vec![Value::Null]]);
        assert!(semi_join(&l, &r, &[("a", "a")]).unwrap().is_empty());
        assert!(natural_join(&l, &r).is_empty());
    }

    #[test]
    fn join_multiplies_multiplicities() {
        let mut l = Relation::new(["a", "b"]);
        l.insert(vec![i(1), i(2)], 2);
        let mut r = Relation::new(["a", "c"]);
        r.insert(vec![i(1), i(7)], 3);
        let out = natural_join(&l, &r);
        assert_eq!(out.schema(), ["a", "b", "c"]);
        assert_eq!(out.multiplicity(&[i(1), i(2), i(7)]), 6);

        let x = Relation::from_rows(["x"], [vec![i(1)], vec![i(2)]]);
        let y = Relation::from_rows(["y"], [vec![i(3)], vec![i(4)], vec![i(5)]]);
        assert_eq!(natural_join(&x, &y).len(), 6);
    }

    #[test]
    fn triangle_join_by_hand() {
        let r = Relation::from_rows(["a", "b"], [vec![i(1), i(2)], vec![i(2), i(3)]]);
        let s = Relation::from_rows(["b", "c"], [vec![i(2), i(3)], vec![i(3), i(3)]]);
        let t = Relation::from_rows(["c", "a"], [vec![i(3), i(1)]]);
        let out = natural_join(&natural_join(&r, &s), &t);
        assert_eq!(out.len(), 1);
        assert_eq!(out.multiplicity(&[i(1), i(2), i(3)]), 1);
    }

    #[test]
    fn min_per_group() {
        let rel = Relation::from_rows(
            ["student", "grade"],
            [
                vec![s("s1"), i(3)],
                vec![s("s1"), i(5)],
                vec![s("s2"), i(4)],
            ],
        );
        let out = aggregate(&rel, &["student"], &[agg(AggFunc::Min, "grade")], false).unwrap();
        assert_eq!(out.schema(), ["student", "MIN(grade)"]);
        let expected = Relation::from_rows(
            ["student", "MIN(grade)"],
            [vec![s("s1"), i(3)], vec![s("s2"), i(4)]],
        );
        assert_eq!(out, expected);
    }

    #[test]
    fn min_ignores_duplicates_but_sum_does_not() {
        let mut rel = Relation::new(["student", "grade"]);
        rel.insert(vec![s("s1"), i(3)], 4);
        let min = [agg(AggFunc::Min, "grade")];
        assert_eq!(
            aggregate(&rel, &["student"], &min, true).unwrap(),
            aggregate(&rel, &["student"], &min, false).unwrap()
        );
        let mut two = Relation::new(["student", "grade"]);
        two.insert(vec![s("s1"), i(3)], 2);
        let sum = [agg(AggFunc::Sum, "grade")];
        let bag = aggregate(&two, &["student"], &sum, false).unwrap();
        let set = aggregate(&two, &["student"], &sum, true).unwrap();
        assert_eq!(bag.multiplicity(&[s("s1"), i(6)]), 1);
        assert_eq!(set.multiplicity(&[s("s1"), i(3)]), 1);
    }

    #[test]
    fn empty_inputs() {
        let empty = Relation::new(["g", "x"]);
        let aggs = [agg(AggFunc::Count, "x"), agg(AggFunc::Max, "x")];
        let global = aggregate(&empty, &[], &aggs, false).unwrap();
        assert_eq!(global.multiplicity(&[i(0), Value::Null]), 1);
        assert!(aggregate(&empty, &["g"], &aggs, false).unwrap().is_empty());
    }

    #[test]
    fn nulls_are_skipped_and_types_checked() {
        let rel = Relation::from_rows(["x"], [vec![Value::Null], vec![i(4)], vec![i(1)]]);
        let out = aggregate(
            &rel,
            &[],
            &[agg(AggFunc::Count, "x"), agg(AggFunc::Avg, "x")],
            false,
        )
        .unwrap();
        assert_eq!(out.multiplicity(&[i(2), s("2.500000")]), 1);
        let mixed = Relation::from_rows(["x"], [vec![s("a")], vec![i(1)]]);
        assert!(matches!(
            aggregate(&mixed, &[], &[agg(AggFunc::Min, "x")], false),
            Err(EngineError::TypeError(_))
        ));
        assert!(matches!(
            aggregate(&mixed, &[], &[agg(AggFunc::Sum, "x")], false),
            Err(EngineError::TypeError(_))
        ));
    }

    #[test]
    fn distinct_aggregates_and_having() {
        let mut rel = Relation::new(["g", "x"]);
        rel.insert(vec![i(1), i(2)], 3);
        rel.insert(vec![i(2), i(5)], 1);
        let count = Aggregate {
            func: AggFunc::Count,
            var: Var::new("x"),
            distinct: true,
        };
        let out = aggregate(&rel, &["g"], std::slice::from_ref(&count), false).unwrap();
        assert_eq!(out.multiplicity(&[i(1), i(1)]), 1);
        let plain = agg(AggFunc::Count, "x");
        let kept = aggregate_having(
            &rel,
            &["g"],
            std::slice::from_ref(&plain),
            false,
            Some((&plain, Comparator::Gt, &Literal::Int(1))),
        )
        .unwrap();
        assert_eq!(
            kept,
            Relation::from_rows(["g", "COUNT(x)"], [vec![i(1), i(3)]])
        );
    }

    #[test]
    fn decimals_round_half_away_from_zero() {
        assert_eq!(decimal(2, 3), "0.666667");
        assert_eq!(decimal(-2, 3), "-0.666667");
        assert_eq!(decimal(7, 1), "7.000000");
        assert_eq!(decimal(1, 2_000_000), "0.000001");
        assert_eq!(decimal(-1, 4_000_000), "0.000000");
        let avg = AggValue::Ratio { num: 5, den: 2 };
        assert!(avg.compare(Comparator::Gt, &Literal::Int(2)));
        assert!(!avg.compare(Comparator::Ge, &Literal::Int(3)));
    }
}
