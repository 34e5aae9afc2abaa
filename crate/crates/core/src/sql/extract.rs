use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::ast::*;
use super::SqlError;
use crate::query::*;

/// Table name to column names, used to resolve unqualified column references.
pub type Catalog = BTreeMap<String, Vec<String>>;

/// Normalize a parsed query into a conjunctive query without a catalog.
///
/// Unqualified columns resolve only when the FROM clause has a single item.
pub fn extract_cq(pq: &ParsedQuery) -> Result<ConjunctiveQuery, SqlError> {
    Extractor::new(pq, None)?.run()
}

pub fn extract_cq_with_catalog(
    pq: &ParsedQuery,
    catalog: &Catalog,
) -> Result<ConjunctiveQuery, SqlError> {
    Extractor::new(pq, Some(catalog))?.run()
}

/// (from-item index, attribute name)
type Slot = (usize, String);

struct Extractor<'a> {
    pq: &'a ParsedQuery,
    catalog: Option<&'a Catalog>,
    bindings: HashMap<String, usize>,
    atom_ids: Vec<String>,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

impl<'a> Extractor<'a> {
    fn new(pq: &'a ParsedQuery, catalog: Option<&'a Catalog>) -> Result<Self, SqlError> {
        let mut bindings = HashMap::new();
        for (i, item) in pq.from_items.iter().enumerate() {
            if bindings.insert(item.binding().to_owned(), i).is_some() {
                return Err(SqlError::DuplicateAlias(item.binding().to_owned()));
            }
        }
        Ok(Extractor {
            pq,
            catalog,
            bindings,
            atom_ids: atom_ids(&pq.from_items),
        })
    }

    fn resolve(&self, col: &ColumnRef) -> Result<Slot, SqlError> {
        if let Some(q) = &col.qualifier {
            let idx = *self
                .bindings
                .get(q)
                .ok_or_else(|| SqlError::UnknownTable(q.clone()))?;
            if let Some(columns) = self
                .catalog
                .and_then(|c| c.get(&self.pq.from_items[idx].table))
            {
                if !columns.contains(&col.column) {
                    return Err(SqlError::UnknownColumn(col.to_string()));
                }
            }
            return Ok((idx, col.column.clone()));
        }
        if self.pq.from_items.len() == 1 {
            return Ok((0, col.column.clone()));
        }
        let Some(catalog) = self.catalog else {
            return Err(SqlError::AmbiguousColumn(format!(
                "{} (qualify it or supply a catalog)",
                col.column
            )));
        };
        let candidates: Vec<usize> = self
            .pq
            .from_items
            .iter()
            .enumerate()
            .filter(|(_, item)| {
                catalog
                    .get(&item.table)
                    .is_some_and(|cols| cols.contains(&col.column))
            })
            .map(|(i, _)| i)
            .collect();
        match candidates.as_slice() {
            [idx] => Ok((*idx, col.column.clone())),
            [] => Err(SqlError::UnknownColumn(col.column.clone())),
            _ => Err(SqlError::AmbiguousColumn(col.column.clone())),
        }
    }

    fn run(self) -> Result<ConjunctiveQuery, SqlError> {
        let pq = self.pq;

        // Every column reference, in order of appearance.
        let mut refs: Vec<&ColumnRef> = Vec::new();
        for item in &pq.select_items {
            match &item.expr {
                SelectExpr::Column(c) => refs.push(c),
                SelectExpr::Aggregate(a) => refs.push(&a.arg),
                SelectExpr::Literal(_) => {}
            }
        }
        for conj in &pq.where_conjuncts {
            match conj {
                Conjunct::ColumnEq(a, b) => {
                    refs.push(a);
                    refs.push(b);
                }
                Conjunct::Compare(c, _, _) => refs.push(c),
            }
        }
        refs.extend(pq.group_by.iter());
        if let Some(h) = &pq.having {
            refs.push(&h.aggregate.arg);
        }

        let mut slot_index: BTreeMap<Slot, usize> = BTreeMap::new();
        for r in &refs {
            let slot = self.resolve(r)?;
            let next = slot_index.len();
            slot_index.entry(slot).or_insert(next);
        }
        let slot_of = |c: &ColumnRef| self.resolve(c).expect("references resolved above");

        let mut uf = UnionFind {
            parent: (0..slot_index.len()).collect(),
        };
        for conj in &pq.where_conjuncts {
            if let Conjunct::ColumnEq(a, b) = conj {
                uf.union(slot_index[&slot_of(a)], slot_index[&slot_of(b)]);
            }
        }

        // Group slots into classes; BTreeMap order makes each class's member
        // list sorted by (from index, attribute).
        let mut classes: BTreeMap<usize, Vec<Slot>> = BTreeMap::new();
        for (slot, idx) in &slot_index {
            classes.entry(uf.find(*idx)).or_default().push(slot.clone());
        }
        let mut ordered: Vec<Vec<Slot>> = classes.into_values().collect();
        ordered.sort_by(|a, b| a[0].cmp(&b[0]));

        let mut taken: BTreeSet<String> = BTreeSet::new();
        let mut var_of: BTreeMap<Slot, Var> = BTreeMap::new();
        for members in &ordered {
            let preferred = members.iter().map(|(_, attr)| attr.as_str()).min().unwrap();
            let mut name = preferred.to_owned();
            let mut k = 2;
            while taken.contains(&name) {
                name = format!("{preferred}_{k}");
                k += 1;
            }
            taken.insert(name.clone());
            for slot in members {
                var_of.insert(slot.clone(), Var::new(name.clone()));
            }
        }
        let var = |c: &ColumnRef| var_of[&slot_of(c)].clone();

        let atoms: Vec<Atom> = pq
            .from_items
            .iter()
            .enumerate()
            .map(|(i, item)| Atom {
                id: self.atom_ids[i].clone(),
                relation: item.table.clone(),
                attributes: var_of
                    .iter()
                    .filter(|((idx, _), _)| *idx == i)
                    .map(|((_, attr), v)| (attr.clone(), v.clone()))
                    .collect(),
            })
            .collect();

        let mut selections = Vec::new();
        let mut eq_constants: BTreeMap<Var, BTreeSet<&Literal>> = BTreeMap::new();
        for conj in &pq.where_conjuncts {
            if let Conjunct::Compare(c, op, value) = conj {
                let (idx, attr) = slot_of(c);
                selections.push(ConstantSelection {
                    atom: self.atom_ids[idx].clone(),
                    attribute: attr,
                    op: *op,
                    value: value.clone(),
                });
                if *op == Comparator::Eq {
                    eq_constants.entry(var(c)).or_default().insert(value);
                }
            }
        }
        let statically_empty = eq_constants.values().any(|consts| consts.len() > 1);

        let mut grouping: Vec<Var> = Vec::new();
        for c in &pq.group_by {
            let v = var(c);
            if !grouping.contains(&v) {
                grouping.push(v);
            }
        }

        let to_aggregate = |call: &AggregateCall| Aggregate {
            func: call.func,
            var: var(&call.arg),
            distinct: call.distinct,
        };

        let mut output = Vec::new();
        let mut used_names: BTreeSet<String> = BTreeSet::new();
        for item in &pq.select_items {
            let (default_name, expr) = match &item.expr {
                SelectExpr::Column(c) => (c.column.clone(), OutputExpr::Var(var(c))),
                SelectExpr::Aggregate(call) => {
                    let distinct = if call.distinct { "distinct_" } else { "" };
                    (
                        format!(
                            "{}_{distinct}{}",
                            call.func.sql_name().to_ascii_lowercase(),
                            call.arg.column
                        ),
                        OutputExpr::Aggregate(to_aggregate(call)),
                    )
                }
                SelectExpr::Literal(n) => (
                    format!("const_{}", n.unsigned_abs()),
                    OutputExpr::Literal(*n),
                ),
            };
            let base = item.alias.clone().unwrap_or(default_name);
            let mut name = base.clone();
            let mut k = 2;
            while used_names.contains(&name) {
                name = format!("{base}_{k}");
                k += 1;
            }
            used_names.insert(name.clone());
            output.push(OutputColumn { name, expr });
        }

        let having = pq.having.as_ref().map(|h| HavingFilter {
            aggregate: to_aggregate(&h.aggregate),
            op: h.op,
            value: h.value.clone(),
        });

        let cq = ConjunctiveQuery {
            atoms,
            selections,
            output,
            grouping,
            having,
            distinct: pq.distinct,
            statically_empty,
        };

        if cq.is_boolean() && (!cq.grouping.is_empty() || cq.having.is_some()) {
            return Err(SqlError::UnsupportedShape(
                "constant select list combined with GROUP BY or HAVING".into(),
            ));
        }
        if cq.is_aggregate() {
            for (item, col) in pq.select_items.iter().zip(&cq.output) {
                if let (SelectExpr::Column(c), OutputExpr::Var(v)) = (&item.expr, &col.expr) {
                    if !cq.grouping.contains(v) {
                        return Err(SqlError::NonGroupedColumn(c.to_string()));
                    }
                }
            }
        }
        Ok(cq)
    }
}

/// Atom ids: the table name, or `<table>_<k>` (1-based occurrence) for tables
/// that occur more than once.
fn atom_ids(items: &[FromItem]) -> Vec<String> {
    let mut count: HashMap<&str, usize> = HashMap::new();
    for item in items {
        *count.entry(&item.table).or_default() += 1;
    }
    let mut seen: HashMap<&str, usize> = HashMap::new();
    let mut ids: Vec<String> = Vec::with_capacity(items.len());
    for item in items {
        let mut id = if count[item.table.as_str()] > 1 {
            let k = seen.entry(&item.table).or_default();
            *k += 1;
            format!("{}_{}", item.table, k)
        } else {
            item.table.clone()
        };
        while ids.contains(&id) {
            id.push('_');
        }
        ids.push(id);
    }
    ids
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sql::{parse_query, sql_to_cq};

    pub(crate) const UNIVERSITY: &str = "SELECT enrolled.program, exams.cid, MIN(exams.grade)
        FROM exams, courses, enrolled, tutors
        WHERE exams.cid = courses.cid
          AND exams.student = enrolled.student
          AND exams.cid = tutors.cid
          AND courses.faculty = 'ComputerScience'
          AND exams.student = tutors.student
          AND tutors.num_semesters > 1
        GROUP BY enrolled.program, exams.cid;";

    fn attrs(cq: &ConjunctiveQuery, atom: &str) -> Vec<(String, String)> {
        cq.atom(atom)
            .unwrap()
            .attributes
            .iter()
            .map(|(a, v)| (a.clone(), v.to_string()))
            .collect()
    }

    #[test]
    fn min_grade_query() {
        let cq = sql_to_cq(
            "SELECT exams.student, MIN(exams.grade) FROM exams, courses
             WHERE exams.cid = courses.cid AND courses.faculty = 'Biology' GROUP BY exams.student",
        )
        .unwrap();
        assert_eq!(cq.atoms.len(), 2);
        assert_eq!(
            cq.atom("exams").unwrap().attributes["cid"],
            cq.atom("courses").unwrap().attributes["cid"]
        );
        assert_eq!(
            cq.selections,
            vec![ConstantSelection {
                atom: "courses".into(),
                attribute: "faculty".into(),
                op: Comparator::Eq,
                value: Literal::Str("Biology".into()),
            }]
        );
        assert_eq!(cq.grouping, vec![Var::from("student")]);
        assert_eq!(
            cq.aggregates(),
            vec![Aggregate {
                func: AggFunc::Min,
                var: Var::from("grade"),
                distinct: false
            }]
        );
        assert_eq!(cq.output_names(), vec!["student", "min_grade"]);
    }

    #[test]
    fn university_query_classes() {
        let cq = sql_to_cq(UNIVERSITY).unwrap();
        assert_eq!(cq.atoms.len(), 4);
        let cid = Var::from("cid");
        let student = Var::from("student");
        for atom in ["exams", "courses", "tutors"] {
            assert_eq!(cq.atom(atom).unwrap().attributes["cid"], cid);
        }
        for atom in ["exams", "enrolled", "tutors"] {
            assert_eq!(cq.atom(atom).unwrap().attributes["student"], student);
        }
        assert_eq!(cq.selections.len(), 2);
        assert_eq!(cq.selections[1].attribute, "num_semesters");
        assert_eq!(cq.selections[1].op, Comparator::Gt);
        assert_eq!(cq.grouping, vec![Var::from("program"), cid]);
        assert!(!cq.statically_empty);
    }

    #[test]
    fn transitive_equalities_share_one_variable() {
        let cq = sql_to_cq("SELECT r.a FROM r, s, t WHERE r.a = s.b AND s.b = t.c").unwrap();
        let v = Var::from("a");
        assert_eq!(attrs(&cq, "r"), vec![("a".into(), "a".into())]);
        assert_eq!(cq.atom("s").unwrap().attributes["b"], v);
        assert_eq!(cq.atom("t").unwrap().attributes["c"], v);
    }

    #[test]
    fn colliding_preferred_names_get_suffixes() {
        let cq = sql_to_cq("SELECT r.a, t.a FROM r, s, t WHERE r.b = s.a").unwrap();
        // {r.a}, {r.b, s.a}, {t.a}: the first class by (atom, attr) keeps `a`.
        assert_eq!(cq.atom("r").unwrap().attributes["a"], Var::from("a"));
        assert_eq!(cq.atom("s").unwrap().attributes["a"], Var::from("a_2"));
        assert_eq!(cq.atom("t").unwrap().attributes["a"], Var::from("a_3"));
        assert_eq!(cq.output_names(), vec!["a", "a_2"]);
    }

    #[test]
    fn self_joins_are_aliased_apart() {
        let cq = sql_to_cq("SELECT x.a FROM r x, r y WHERE x.b = y.a").unwrap();
        let ids: Vec<_> = cq.atoms.iter().map(|a| a.id.as_str()).collect();
        assert_eq!(ids, vec!["r_1", "r_2"]);
        assert!(cq.atoms.iter().all(|a| a.relation == "r"));
    }

    #[test]
    fn contradictory_constants_flag_empty() {
        let cq = sql_to_cq("SELECT r.a FROM r, s WHERE r.a = s.a AND r.a = 1 AND s.a = 2").unwrap();
        assert!(cq.statically_empty);
        let cq = sql_to_cq("SELECT r.a FROM r WHERE r.a = 1 AND r.a = 1").unwrap();
        assert!(!cq.statically_empty);
    }

    #[test]
    fn unqualified_columns_need_a_catalog() {
        let pq =
            parse_query("SELECT ps_partkey FROM partsupp, supplier WHERE ps_suppkey = s_suppkey")
                .unwrap();
        assert!(matches!(extract_cq(&pq), Err(SqlError::AmbiguousColumn(_))));
        let catalog: Catalog = [
            (
                "partsupp".to_owned(),
                vec!["ps_partkey".to_owned(), "ps_suppkey".to_owned()],
            ),
            (
                "supplier".to_owned(),
                vec!["s_suppkey".to_owned(), "ps_partkey".to_owned()],
            ),
        ]
        .into();
        assert_eq!(
            extract_cq_with_catalog(&pq, &catalog),
            Err(SqlError::AmbiguousColumn("ps_partkey".into()))
        );
    }

    #[test]
    fn non_grouped_column_is_rejected() {
        assert_eq!(
            sql_to_cq("SELECT r.a, MIN(r.b) FROM r"),
            Err(SqlError::NonGroupedColumn("r.a".into()))
        );
    }

    #[test]
    fn boolean_query() {
        let cq = sql_to_cq("SELECT 1 FROM r, s WHERE r.a = s.a").unwrap();
        assert!(cq.is_boolean());
        assert!(cq.projection_vars().is_empty());
        assert!(!cq.is_aggregate());
    }
}
