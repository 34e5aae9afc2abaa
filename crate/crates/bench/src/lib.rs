//! Fixtures shared by the benchmarks.

use semiplan_core::engine::Database;
use semiplan_core::pipeline::{plan_query, PlanOptions, Planned};
use semiplan_core::random::{
    self, random_acyclic_query, random_database, random_shape, skewed_path, DataConfig, QueryConfig,
};
use semiplan_core::{sql_to_cq, ConjunctiveQuery};

pub const UNIVERSITY: &str = "SELECT enrolled.program, exams.cid, MIN(exams.grade)
FROM exams, courses, enrolled, tutors
WHERE exams.cid = courses.cid AND exams.student = enrolled.student AND exams.cid = tutors.cid
  AND courses.faculty = 'ComputerScience' AND exams.student = tutors.student
  AND tutors.num_semesters > 1
GROUP BY enrolled.program, exams.cid";

/// SQL text of `n` random acyclic queries.
pub fn acyclic_queries(n: u64, seed: u64) -> Vec<String> {
    let mut rng = random::rng(seed);
    let cfg = QueryConfig::default();
    (0..n)
        .map(|_| {
            let shape = random_shape(&mut rng);
            random_acyclic_query(&mut rng, &cfg, shape).sql
        })
        .collect()
}

/// Random acyclic queries with one database each, planned for full enumeration.
pub fn acyclic_instances(n: u64, seed: u64, data: &DataConfig) -> Vec<(Planned, Database)> {
    let mut rng = random::rng(seed);
    let cfg = QueryConfig::default();
    let options = PlanOptions {
        mode: Some(semiplan_core::Mode::FullEnum),
        ..PlanOptions::default()
    };
    (0..n)
        .map(|_| {
            let shape = random_shape(&mut rng);
            let q = random_acyclic_query(&mut rng, &cfg, shape);
            let db = random_database(&mut rng, &q.schemas, data);
            let cq = sql_to_cq(&q.sql).expect("generated SQL parses");
            (plan_query(&cq, &options).expect("acyclic query plans"), db)
        })
        .collect()
}

/// The skewed path query with its database, planned in the automatic mode.
pub fn skewed(hubs: i64, fanout: i64) -> (ConjunctiveQuery, Planned, Database) {
    let (q, db) = skewed_path(hubs, fanout);
    let cq = sql_to_cq(&q.sql).expect("skewed query parses");
    let planned = plan_query(&cq, &PlanOptions::default()).expect("skewed query plans");
    (cq, planned, db)
}
