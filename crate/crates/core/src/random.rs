//! Seeded generators for queries, databases and hypergraphs used by the
//! property tests, the acceptance suite and the benchmarks.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::{Database, Relation, Value};
use crate::hypergraph::Hypergraph;
use crate::query::Var;

/// Deterministic generator for `seed`.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generated SQL together with the schema of every table it reads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomQuery {
    pub sql: String,
    pub schemas: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputShape {
    /// Bag projection onto a few columns.
    Projection,
    /// `SELECT DISTINCT`.
    Distinct,
    /// `GROUP BY` with one aggregate of any kind.
    Aggregate,
    /// `SELECT 1`.
    Boolean,
}

#[derive(Debug, Clone)]
pub struct QueryConfig {
    pub min_atoms: usize,
    pub max_atoms: usize,
    pub min_selections: usize,
    pub max_selections: usize,
    /// Selection constants are drawn from `0..domain`.
    pub domain: i64,
    /// Chance that an atom reuses an earlier table.
    pub self_join: f64,
    /// Chance that an atom equates two of its own columns.
    pub local_equality: f64,
}

impl Default for QueryConfig {
    fn default() -> Self {
        QueryConfig {
            min_atoms: 2,
            max_atoms: 8,
            min_selections: 1,
            max_selections: 3,
            domain: 8,
            self_join: 0.15,
            local_equality: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
struct Table {
    name: String,
    columns: Vec<String>,
}

/// Tree-shaped join skeleton: atom i > 0 joins only its parent, so the
/// resulting query is acyclic.
#[derive(Debug, Clone)]
struct Skeleton {
    tables: Vec<Table>,
    /// (alias, table index)
    atoms: Vec<(String, usize)>,
    conditions: Vec<String>,
}

impl Skeleton {
    fn columns_of(&self, atom: usize) -> &[String] {
        &self.tables[self.atoms[atom].1].columns
    }

    fn column_ref(&self, atom: usize, column: &str) -> String {
        format!("{}.{column}", self.atoms[atom].0)
    }

    fn all_columns(&self) -> Vec<String> {
        (0..self.atoms.len())
            .flat_map(|a| {
                self.columns_of(a)
                    .iter()
                    .map(move |c| self.column_ref(a, c))
            })
            .collect()
    }

    fn table_list(&self) -> String {
        self.atoms
            .iter()
            .map(|(alias, t)| {
                let name = &self.tables[*t].name;
                if alias == name {
                    name.clone()
                } else {
                    format!("{name} AS {alias}")
                }
            })
            .collect::<Vec<_>>()
            .join(", ")
    }

    fn schemas(&self) -> BTreeMap<String, Vec<String>> {
        self.tables
            .iter()
            .map(|t| (t.name.clone(), t.columns.clone()))
            .collect()
    }

    fn sql(&self, select: &str, group_by: &[String]) -> String {
        let mut sql = format!("SELECT {select} FROM {}", self.table_list());
        if !self.conditions.is_empty() {
            sql.push_str(" WHERE ");
            sql.push_str(&self.conditions.join(" AND "));
        }
        if !group_by.is_empty() {
            sql.push_str(" GROUP BY ");
            sql.push_str(&group_by.join(", "));
        }
        sql
    }
}

const COLUMN_NAMES: [&str; 4] = ["a", "b", "c", "d"];

fn skeleton(rng: &mut impl Rng, cfg: &QueryConfig) -> Skeleton {
    let n = rng.random_range(cfg.min_atoms..=cfg.max_atoms.max(cfg.min_atoms));
    let mut sk = Skeleton {
        tables: Vec::new(),
        atoms: Vec::new(),
        conditions: Vec::new(),
    };
    for i in 0..n {
        let reuse = i > 0 && rng.random_bool(cfg.self_join);
        let t = if reuse {
            rng.random_range(0..sk.tables.len())
        } else {
            let arity = rng.random_range(2..=COLUMN_NAMES.len());
            sk.tables.push(Table {
                name: format!("r{}", sk.tables.len()),
                columns: COLUMN_NAMES[..arity]
                    .iter()
                    .map(|c| (*c).to_owned())
                    .collect(),
            });
            sk.tables.len() - 1
        };
        let alias = if reuse {
            format!("x{i}")
        } else {
            sk.tables[t].name.clone()
        };
        sk.atoms.push((alias, t));

        if i > 0 {
            let parent = rng.random_range(0..i);
            let mine = sk.columns_of(i).to_vec();
            let theirs = sk.columns_of(parent).to_vec();
            let shared = rng.random_range(1..=2.min(mine.len() - 1).min(theirs.len()));
            let mut mine_pick: Vec<&String> = mine.choose_multiple(rng, shared).collect();
            mine_pick.sort();
            let theirs_pick: Vec<&String> = theirs.choose_multiple(rng, shared).collect();
            for (m, p) in mine_pick.into_iter().zip(theirs_pick) {
                let cond = format!("{} = {}", sk.column_ref(i, m), sk.column_ref(parent, p));
                sk.conditions.push(cond);
            }
        }
        if rng.random_bool(cfg.local_equality) {
            let cols = sk.columns_of(i).to_vec();
            let pair: Vec<&String> = cols.choose_multiple(rng, 2).collect();
            let cond = format!(
                "{} = {}",
                sk.column_ref(i, pair[0]),
                sk.column_ref(i, pair[1])
            );
            sk.conditions.push(cond);
        }
    }
    let selections =
        rng.random_range(cfg.min_selections..=cfg.max_selections.max(cfg.min_selections));
    let columns = sk.all_columns();
    for _ in 0..selections {
        let col = columns.choose(rng).expect("columns").clone();
        let op = *["=", "=", "<", ">", "<=", ">=", "<>"]
            .choose(rng)
            .expect("ops");
        let value = rng.random_range(0..cfg.domain.max(1));
        sk.conditions.push(format!("{col} {op} {value}"));
    }
    sk
}

/// Random acyclic query with the given output shape.
pub fn random_acyclic_query(
    rng: &mut impl Rng,
    cfg: &QueryConfig,
    shape: OutputShape,
) -> RandomQuery {
    let sk = skeleton(rng, cfg);
    let columns = sk.all_columns();
    let pick = |rng: &mut _, k: usize| -> Vec<String> {
        columns.choose_multiple(rng, k).cloned().collect()
    };
    let sql = match shape {
        OutputShape::Boolean => sk.sql("1", &[]),
        OutputShape::Projection | OutputShape::Distinct => {
            let k = rng.random_range(1..=3);
            let cols = pick(rng, k);
            let select: Vec<String> = cols
                .iter()
                .enumerate()
                .map(|(j, c)| format!("{c} AS o{j}"))
                .collect();
            let distinct = if shape == OutputShape::Distinct {
                "DISTINCT "
            } else {
                ""
            };
            sk.sql(&format!("{distinct}{}", select.join(", ")), &[])
        }
        OutputShape::Aggregate => {
            let k = rng.random_range(0..=2);
            let mut cols = pick(rng, k + 1);
            let target = cols.pop().expect("aggregate column");
            let func = *["MIN", "MAX", "SUM", "COUNT", "AVG"]
                .choose(rng)
                .expect("funcs");
            let distinct = if rng.random_bool(0.2) {
                "DISTINCT "
            } else {
                ""
            };
            let mut select: Vec<String> = cols
                .iter()
                .enumerate()
                .map(|(j, c)| format!("{c} AS g{j}"))
                .collect();
            select.push(format!("{func}({distinct}{target}) AS agg"));
            sk.sql(&select.join(", "), &cols)
        }
    };
    RandomQuery {
        sql,
        schemas: sk.schemas(),
    }
}

/// Random output shape, weighted toward projections and aggregates.
pub fn random_shape(rng: &mut impl Rng) -> OutputShape {
    *[
        OutputShape::Projection,
        OutputShape::Projection,
        OutputShape::Distinct,
        OutputShape::Aggregate,
        OutputShape::Aggregate,
        OutputShape::Boolean,
    ]
    .choose(rng)
    .expect("shapes")
}

/// Aggregate query whose grouping and aggregated columns all come from one
/// atom. With `set_safe` the aggregates are MIN/MAX or DISTINCT ones (or a
/// plain `SELECT DISTINCT`); otherwise a single plain SUM.
pub fn random_guarded_query(rng: &mut impl Rng, cfg: &QueryConfig, set_safe: bool) -> RandomQuery {
    let sk = skeleton(rng, cfg);
    let guard = rng.random_range(0..sk.atoms.len());
    let cols: Vec<String> = sk
        .columns_of(guard)
        .iter()
        .map(|c| sk.column_ref(guard, c))
        .collect();
    let k = rng.random_range(0..=2.min(cols.len() - 1));
    let chosen: Vec<String> = cols.choose_multiple(rng, k + 1).cloned().collect();
    let (group, target) = chosen.split_at(k);
    let group = group.to_vec();
    let target = &target[0];
    let mut select: Vec<String> = group
        .iter()
        .enumerate()
        .map(|(j, c)| format!("{c} AS g{j}"))
        .collect();
    let sql = if !set_safe {
        select.push(format!("SUM({target}) AS agg"));
        sk.sql(&select.join(", "), &group)
    } else if rng.random_bool(0.15) {
        select.push(format!("{target} AS t0"));
        sk.sql(&format!("DISTINCT {}", select.join(", ")), &[])
    } else {
        let aggs = rng.random_range(1..=2);
        for j in 0..aggs {
            let col = cols.choose(rng).expect("guard columns");
            let agg = *[
                "MIN({})",
                "MAX({})",
                "COUNT(DISTINCT {})",
                "SUM(DISTINCT {})",
                "AVG(DISTINCT {})",
            ]
            .choose(rng)
            .expect("aggregates");
            select.push(format!("{} AS agg{j}", agg.replace("{}", col)));
        }
        sk.sql(&select.join(", "), &group)
    };
    RandomQuery {
        sql,
        schemas: sk.schemas(),
    }
}

#[derive(Debug, Clone)]
pub struct DataConfig {
    pub max_rows: usize,
    /// Values are drawn from `0..domain`.
    pub domain: i64,
    /// Chance that a generated row is repeated.
    pub duplicates: f64,
    /// Chance that a cell is NULL.
    pub nulls: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            max_rows: 50,
            domain: 8,
            duplicates: 0.2,
            nulls: 0.02,
        }
    }
}

/// Random relation over `columns` with integer values.
pub fn random_relation(rng: &mut impl Rng, columns: &[String], cfg: &DataConfig) -> Relation {
    let mut rel = Relation::new(columns.iter().cloned());
    let target = rng.random_range(0..=cfg.max_rows);
    let mut produced = 0;
    while produced < target {
        let row: Vec<Value> = columns
            .iter()
            .map(|_| {
                if rng.random_bool(cfg.nulls) {
                    Value::Null
                } else {
                    Value::Int(rng.random_range(0..cfg.domain.max(1)))
                }
            })
            .collect();
        let copies = if rng.random_bool(cfg.duplicates) {
            rng.random_range(2..=3)
        } else {
            1
        };
        let copies = copies.min(target - produced);
        rel.insert(row, copies as u64);
        produced += copies;
    }
    rel
}

/// One random relation per schema entry.
pub fn random_database(
    rng: &mut impl Rng,
    schemas: &BTreeMap<String, Vec<String>>,
    cfg: &DataConfig,
) -> Database {
    schemas
        .iter()
        .map(|(name, cols)| (name.clone(), random_relation(rng, cols, cfg)))
        .collect()
}

fn vertex(i: usize) -> Var {
    Var::new(format!("v{i}"))
}

fn label(i: usize) -> String {
    format!("e{i}")
}

/// Random connected acyclic hypergraph: every new edge takes a nonempty
/// part of one earlier edge plus fresh vertices.
pub fn random_acyclic_hypergraph(
    rng: &mut impl Rng,
    edges: usize,
    max_vertices: usize,
) -> Hypergraph {
    let mut h = Hypergraph::new();
    let mut sets: Vec<BTreeSet<usize>> = Vec::new();
    let mut next = 0;
    for i in 0..edges.max(1) {
        let mut e = BTreeSet::new();
        if let Some(parent) = sets.choose(rng) {
            let parent: Vec<usize> = parent.iter().copied().collect();
            let k = rng.random_range(1..=parent.len());
            e.extend(parent.choose_multiple(rng, k).copied());
        }
        let fresh = if e.is_empty() {
            rng.random_range(1..=2)
        } else {
            rng.random_range(0..=2)
        };
        for _ in 0..fresh {
            if next < max_vertices {
                e.insert(next);
                next += 1;
            }
        }
        if e.is_empty() {
            e.insert(rng.random_range(0..next.max(1)));
            next = next.max(1);
        }
        h.add_edge(label(i + 1), e.iter().map(|&v| vertex(v)).collect());
        sets.push(e);
    }
    h
}

/// Random connected hypergraph with edges of 1 to 3 vertices; each new edge
/// touches a vertex already present.
pub fn random_connected_hypergraph(
    rng: &mut impl Rng,
    edges: usize,
    vertices: usize,
) -> Hypergraph {
    let vertices = vertices.max(1);
    let mut h = Hypergraph::new();
    let mut used: Vec<usize> = Vec::new();
    for i in 0..edges.max(1) {
        let size = rng.random_range(1..=3.min(vertices));
        let mut e = BTreeSet::new();
        if let Some(&v) = used.choose(rng) {
            e.insert(v);
        }
        while e.len() < size {
            e.insert(rng.random_range(0..vertices));
        }
        used.extend(e.iter().copied());
        used.sort_unstable();
        used.dedup();
        h.add_edge(label(i + 1), e.iter().map(|&v| vertex(v)).collect());
    }
    h
}

/// Cyclic hypergraph with a generalized hypertree decomposition of width 2:
/// one or two cycles of binary edges sharing a vertex, plus acyclic ears
/// hanging off existing edges. At most `max_edges` edges (at least 3).
pub fn random_width_two_hypergraph(rng: &mut impl Rng, max_edges: usize) -> Hypergraph {
    let max_edges = max_edges.max(3);
    let mut sets: Vec<BTreeSet<usize>> = Vec::new();
    let mut next = 0;
    let first = rng.random_range(3..=5.min(max_edges));
    let ring = |start: usize, len: usize, anchor: Option<usize>| -> Vec<BTreeSet<usize>> {
        let nodes: Vec<usize> = anchor
            .into_iter()
            .chain(start..start + len - usize::from(anchor.is_some()))
            .collect();
        (0..len)
            .map(|k| BTreeSet::from([nodes[k], nodes[(k + 1) % len]]))
            .collect()
    };
    sets.extend(ring(next, first, None));
    next += first;
    if max_edges - sets.len() >= 3 && rng.random_bool(0.3) {
        let len = rng.random_range(3..=(max_edges - sets.len()).min(4));
        let anchor = rng.random_range(0..next);
        sets.extend(ring(next, len, Some(anchor)));
        next += len - 1;
    }
    let ears = rng.random_range(0..=max_edges - sets.len());
    for _ in 0..ears {
        let parent: Vec<usize> = sets.choose(rng).expect("edges").iter().copied().collect();
        let k = rng.random_range(1..=parent.len());
        let mut e: BTreeSet<usize> = parent.choose_multiple(rng, k).copied().collect();
        for _ in 0..rng.random_range(1..=2) {
            e.insert(next);
            next += 1;
        }
        sets.push(e);
    }
    Hypergraph::from_edges(sets.iter().enumerate().map(|(i, e)| {
        (
            label(i + 1),
            e.iter().map(|&v| vertex(v)).collect::<Vec<_>>(),
        )
    }))
}

/// The triangle r(a, b), s(b, c), t(c, a).
pub fn triangle() -> Hypergraph {
    Hypergraph::from_edges([("r", ["a", "b"]), ("s", ["b", "c"]), ("t", ["c", "a"])])
}

/// A query with one table per edge of `h`; columns are named after the
/// vertices, so the query's hypergraph is `h` up to renaming. The output
/// projects `outputs` vertices, chosen at random.
pub fn query_for_hypergraph(rng: &mut impl Rng, h: &Hypergraph, outputs: usize) -> RandomQuery {
    let mut schemas = BTreeMap::new();
    let mut first: BTreeMap<&Var, &str> = BTreeMap::new();
    let mut conditions = Vec::new();
    for (label, vars) in h.edges() {
        schemas.insert(
            label.clone(),
            vars.iter().map(|v| v.as_str().to_owned()).collect(),
        );
        for v in vars {
            match first.get(v) {
                Some(owner) => conditions.push(format!("{label}.{v} = {owner}.{v}")),
                None => {
                    first.insert(v, label);
                }
            }
        }
    }
    let vertices: Vec<(&&Var, &&str)> = first.iter().collect();
    let chosen: Vec<String> = vertices
        .choose_multiple(rng, outputs.clamp(1, vertices.len().max(1)))
        .map(|(v, owner)| format!("{owner}.{v}"))
        .collect();
    let mut sql = format!(
        "SELECT {} FROM {}",
        chosen.join(", "),
        h.labels().cloned().collect::<Vec<_>>().join(", ")
    );
    if !conditions.is_empty() {
        sql.push_str(" WHERE ");
        sql.push_str(&conditions.join(" AND "));
    }
    RandomQuery { sql, schemas }
}

/// Path r0(a, b), r1(b, c), r2(c, d) where `hubs` values of the middle
/// relation each fan out `fanout` times on both sides. The full join has at
/// least hubs·fanout² distinct tuples while every relation stays small. The
/// query groups by the middle relation, so its answer has only `hubs` rows.
pub fn skewed_path(hubs: i64, fanout: i64) -> (RandomQuery, Database) {
    let sql = "SELECT r1.b, MAX(r1.c) AS top FROM r0, r1, r2 WHERE r0.b = r1.b AND r1.c = r2.c AND r0.a >= 0 AND r2.d >= 0 GROUP BY r1.b".to_owned();
    let schemas: BTreeMap<String, Vec<String>> =
        [("r0", ["a", "b"]), ("r1", ["b", "c"]), ("r2", ["c", "d"])]
            .into_iter()
            .map(|(t, cols)| (t.to_owned(), cols.iter().map(|c| (*c).to_owned()).collect()))
            .collect();
    let mut r0 = Relation::new(["a", "b"]);
    let mut r1 = Relation::new(["b", "c"]);
    let mut r2 = Relation::new(["c", "d"]);
    for h in 0..hubs {
        r1.insert(vec![Value::Int(h), Value::Int(h)], 1);
        for k in 0..fanout {
            r0.insert(vec![Value::Int(h * fanout + k), Value::Int(h)], 1);
            r2.insert(vec![Value::Int(h), Value::Int(h * fanout + k)], 1);
        }
    }
    let db: Database = [("r0", r0), ("r1", r1), ("r2", r2)]
        .into_iter()
        .map(|(n, r)| (n.to_owned(), r))
        .collect();
    (RandomQuery { sql, schemas }, db)
}
