use super::*;
use crate::classify::normalize_aggregation;
use crate::decomposition::{flat_gyo, JoinTree};
use crate::hypergraph::Hypergraph;
use crate::plan::{build_plan, select_root, Mode, Stage};
use crate::query::ConjunctiveQuery;
use crate::sql::sql_to_cq;

const BIOLOGY_MIN_GRADE: &str = "SELECT exams.student, MIN(exams.grade) FROM exams, courses
    WHERE exams.cid = courses.cid AND courses.faculty = 'Biology' GROUP BY exams.student";

fn rel(schema: &[&str], rows: &[&[&str]]) -> Relation {
    let mut r = Relation::new(schema.iter().copied());
    for row in rows {
        r.insert(row.iter().map(|f| parse_value(f)).collect(), 1);
    }
    r
}

fn grades_db() -> Database {
    let mut db = Database::new();
    db.insert(
        "exams".into(),
        rel(
            &["cid", "student", "grade"],
            &[&["c1", "s1", "3"], &["c1", "s1", "5"], &["c2", "s2", "4"]],
        ),
    );
    db.insert(
        "courses".into(),
        rel(&["cid", "faculty"], &[&["c1", "Biology"], &["c2", "Law"]]),
    );
    db
}

fn plan_for(cq: &ConjunctiveQuery, mode: Mode) -> crate::plan::StagePlan {
    let form = normalize_aggregation(cq);
    let t = flat_gyo(&Hypergraph::from_cq(cq))
        .unwrap()
        .join_tree()
        .unwrap()
        .clone();
    let t = select_root(&t, &form, mode, None).unwrap();
    build_plan(&t, &form, mode, 12).unwrap()
}

#[test]
fn min_grade_naive() {
    let cq = sql_to_cq(BIOLOGY_MIN_GRADE).unwrap();
    let (out, stats) = eval_naive(&cq, &grades_db()).unwrap();
    assert_eq!(
        out,
        rel(&["student", "min_grade"], &[&["s1", "3"]]).renamed(out.schema().to_vec())
    );
    assert_eq!(out.len(), 1);
    assert_eq!(stats.intermediates, [3, 2]);
}

#[test]
fn min_grade_zero_ma_plan() {
    let cq = sql_to_cq(BIOLOGY_MIN_GRADE).unwrap();
    let plan = plan_for(&cq, Mode::ZeroMa);
    let run = eval_plan(&plan, &grades_db(), ExecOptions::default()).unwrap();
    let (naive, _) = eval_naive(&cq, &grades_db()).unwrap();
    assert!(bag_equal(&run.result, &naive));
    assert_eq!(run.stats.rows("exams_sjup"), Some(2));
    assert_eq!(run.stats.rows("exams_setup"), Some(3));
    assert!(run
        .stats
        .to_string()
        .starts_with("statement, rows, micros\n"));
}

#[test]
fn boolean_and_statically_empty_queries() {
    let db = grades_db();
    let boolean = sql_to_cq("SELECT 1 FROM exams, courses WHERE exams.cid = courses.cid").unwrap();
    let (out, _) = eval_naive(&boolean, &db).unwrap();
    assert_eq!(out.len(), 1);
    let run = eval_plan(
        &plan_for(&boolean, Mode::FullEnum),
        &db,
        ExecOptions::default(),
    )
    .unwrap();
    assert!(bag_equal(&run.result, &out));

    let empty =
        sql_to_cq("SELECT exams.student FROM exams WHERE exams.cid = 'c1' AND exams.cid = 'c2'")
            .unwrap();
    assert!(empty.statically_empty);
    let (out, _) = eval_naive(&empty, &db).unwrap();
    assert!(out.is_empty());
    assert_eq!(out.schema(), ["student"]);
    let run = eval_plan(
        &plan_for(&empty, Mode::FullEnum),
        &db,
        ExecOptions::default(),
    )
    .unwrap();
    assert!(run.result.is_empty());
    assert_eq!(run.stats.max_intermediate(), 0);
}

#[test]
fn missing_relation_is_reported() {
    let cq = sql_to_cq("SELECT r.a FROM r").unwrap();
    assert_eq!(
        eval_naive(&cq, &grades_db()).unwrap_err(),
        EngineError::MissingRelation("r".into())
    );
}

fn path_db() -> Database {
    let mut db = Database::new();
    db.insert("r".into(), rel(&["a", "b"], &[&["1", "2"], &["1", "3"]]));
    db.insert(
        "s".into(),
        rel(&["b", "c"], &[&["2", "5"], &["2", "5"], &["4", "6"]]),
    );
    // (c=9) has no partner in s and dangles after the up pass.
    db.insert("t".into(), rel(&["c", "d"], &[&["5", "7"], &["9", "9"]]));
    db
}

#[test]
fn full_reducer_needs_the_down_pass() {
    let cq = sql_to_cq("SELECT r.a, t.d FROM r, s, t WHERE r.b = s.b AND s.c = t.c").unwrap();
    let t = JoinTree::from_base_atoms(&Hypergraph::from_cq(&cq), "r", &[("s", "r"), ("t", "s")])
        .unwrap();
    let plan = build_plan(&t, &normalize_aggregation(&cq), Mode::FullEnum, 12).unwrap();
    let db = path_db();
    let run = eval_plan(&plan, &db, ExecOptions::default()).unwrap();
    let up = run.node_relations(&plan, Stage::SemijoinUp);
    assert!(!full_reducer_holds(&up, &cq, &db).unwrap());
    let down = run.node_relations(&plan, Stage::SemijoinDown);
    assert!(full_reducer_holds(&down, &cq, &db).unwrap());
    assert!(bag_equal(&run.result, &eval_naive(&cq, &db).unwrap().0));
    // Multiplicities of s survive the join pass: (1, 7) appears twice.
    assert_eq!(run.result.multiplicity(&[Value::Int(1), Value::Int(7)]), 2);
}

#[test]
fn single_relation_is_trivially_reduced() {
    let cq = sql_to_cq("SELECT r.a FROM r").unwrap();
    let db = path_db();
    let plan = plan_for(&cq, Mode::FullEnum);
    let run = eval_plan(&plan, &db, ExecOptions::default()).unwrap();
    assert!(full_reducer_holds(&run.node_relations(&plan, Stage::SemijoinDown), &cq, &db).unwrap());
    assert_eq!(run.result.len(), 2);
}

#[test]
fn short_circuit_stops_after_the_up_pass() {
    let cq = sql_to_cq("SELECT r.a, t.d FROM r, s, t WHERE r.b = s.b AND s.c = t.c AND r.a = 8")
        .unwrap();
    let plan = plan_for(&cq, Mode::FullEnum);
    let db = path_db();
    let full = eval_plan(&plan, &db, ExecOptions::default()).unwrap();
    let short = eval_plan(
        &plan,
        &db,
        ExecOptions {
            short_circuit: true,
        },
    )
    .unwrap();
    assert!(short.stats.short_circuited);
    assert!(!full.stats.short_circuited);
    assert!(short.stats.statements.len() < full.stats.statements.len());
    assert!(short
        .stats
        .statements
        .iter()
        .all(|s| s.stage <= Stage::SemijoinUp));
    assert!(bag_equal(&short.result, &full.result));
    assert!(short.result.is_empty());
}

#[test]
fn semi_joins_never_grow_their_input() {
    let cq = sql_to_cq("SELECT r.a, t.d FROM r, s, t WHERE r.b = s.b AND s.c = t.c").unwrap();
    let run = eval_plan(
        &plan_for(&cq, Mode::FullEnum),
        &path_db(),
        ExecOptions::default(),
    )
    .unwrap();
    for s in &run.stats.statements {
        if matches!(s.stage, Stage::SemijoinUp | Stage::SemijoinDown) {
            assert!(s.rows <= s.input_rows, "{}", s.name);
        }
    }
}

#[test]
fn unknown_handle_is_a_plan_reference_error() {
    let cq = sql_to_cq(BIOLOGY_MIN_GRADE).unwrap();
    let mut plan = plan_for(&cq, Mode::ZeroMa);
    plan.finalize.input = Some("nowhere".into());
    assert_eq!(
        eval_plan(&plan, &grades_db(), ExecOptions::default()).unwrap_err(),
        EngineError::PlanReference("nowhere".into())
    );
}
