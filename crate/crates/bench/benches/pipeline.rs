use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use semiplan_bench::{acyclic_instances, acyclic_queries, skewed, UNIVERSITY};
use semiplan_core::engine::{eval_naive, eval_plan, ExecOptions};
use semiplan_core::pipeline::{plan_query, PlanOptions};
use semiplan_core::random::DataConfig;
use semiplan_core::{emit_plan, sql_to_cq, Dialect, EmitOptions};

fn frontend(c: &mut Criterion) {
    let queries = acyclic_queries(50, 11);
    c.bench_function("parse 50 queries", |b| {
        b.iter(|| {
            for q in &queries {
                black_box(sql_to_cq(q).unwrap());
            }
        })
    });
    let parsed: Vec<_> = queries.iter().map(|q| sql_to_cq(q).unwrap()).collect();
    c.bench_function("plan 50 queries", |b| {
        b.iter(|| {
            for cq in &parsed {
                black_box(plan_query(cq, &PlanOptions::default()).unwrap());
            }
        })
    });
    let university = plan_query(&sql_to_cq(UNIVERSITY).unwrap(), &PlanOptions::default()).unwrap();
    c.bench_function("emit university postgres", |b| {
        b.iter(|| {
            black_box(
                emit_plan(
                    &university.plan,
                    &Dialect::postgres(),
                    &EmitOptions::default(),
                )
                .unwrap(),
            )
        })
    });
}

fn skewed_path(c: &mut Criterion) {
    let mut group = c.benchmark_group("skewed path");
    group.sample_size(10);
    for fanout in [25, 50, 100] {
        let (cq, planned, db) = skewed(2, fanout);
        group.bench_with_input(BenchmarkId::new("naive", fanout), &fanout, |b, _| {
            b.iter(|| black_box(eval_naive(&cq, &db).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("plan", fanout), &fanout, |b, _| {
            b.iter(|| black_box(eval_plan(&planned.plan, &db, ExecOptions::default()).unwrap()))
        });
    }
    group.finish();
}

fn random_corpus(c: &mut Criterion) {
    let instances = acyclic_instances(20, 12, &DataConfig::default());
    let mut group = c.benchmark_group("random acyclic");
    group.sample_size(10);
    group.bench_function("naive", |b| {
        b.iter(|| {
            for (planned, db) in &instances {
                black_box(eval_naive(&planned.query, db).unwrap());
            }
        })
    });
    group.bench_function("plan", |b| {
        b.iter(|| {
            for (planned, db) in &instances {
                black_box(eval_plan(&planned.plan, db, ExecOptions::default()).unwrap());
            }
        })
    });
    group.finish();
}

criterion_group!(benches, frontend, skewed_path, random_corpus);
criterion_main!(benches);
