//! End-to-end driver: SQL text to analysis, staged plan, emitted SQL and
//! executed results.

use thiserror::Error;

use crate::classify::{
    classify_0ma_with_guard, normalize_aggregation, AggregationForm, ZeroMaReport,
};
use crate::decomposition::{
    find_ghd, ghd_to_join_tree, join_tree_for, Acyclicity, CyclicReport, DecompositionError, Ghd,
    JoinTree, ViewDefinition,
};
use crate::emit::{emit_plan, Dialect, EmitError, EmitOptions};
use crate::engine::{
    bag_equal, eval_naive, eval_plan, Database, EngineError, ExecOptions, NaiveStats, PlanRun,
    Relation,
};
use crate::hypergraph::Hypergraph;
use crate::plan::{
    build_plan, choose_mode, select_root, Mode, PlanError, StagePlan, DEFAULT_JOIN_GROUP_CAP,
};
use crate::query::ConjunctiveQuery;
use crate::sql::{extract_cq_with_catalog, parse_query, sql_to_cq, Catalog, SqlError};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum PipelineError {
    #[error(transparent)]
    Sql(#[from] SqlError),
    #[error(transparent)]
    Decomposition(#[from] DecompositionError),
    #[error("{0}")]
    Cyclic(CyclicReport),
    #[error("no decomposition of width {0}")]
    NoDecomposition(usize),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Emit(#[from] EmitError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Parse `sql`, resolving unqualified columns through `catalog` when given.
pub fn parse(sql: &str, catalog: Option<&Catalog>) -> Result<ConjunctiveQuery, PipelineError> {
    Ok(match catalog {
        Some(c) => extract_cq_with_catalog(&parse_query(sql)?, c)?,
        None => sql_to_cq(sql)?,
    })
}

/// Structure of one query: hypergraph, join tree or cyclic residue, and the
/// zero-materialization verdict.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub query: ConjunctiveQuery,
    pub hypergraph: Hypergraph,
    pub acyclicity: Acyclicity,
    pub form: AggregationForm,
    pub report: ZeroMaReport,
}

pub fn analyze(cq: &ConjunctiveQuery, guard: Option<&str>) -> Result<Analysis, PipelineError> {
    let hypergraph = Hypergraph::from_cq(cq);
    let acyclicity = join_tree_for(&hypergraph)?;
    let form = normalize_aggregation(cq);
    let report = classify_0ma_with_guard(&form, guard);
    Ok(Analysis {
        query: cq.clone(),
        hypergraph,
        acyclicity,
        form,
        report,
    })
}

/// How to obtain a tree for a cyclic query.
#[derive(Debug, Clone)]
pub enum GhdSource {
    /// Search for a decomposition of at most this width.
    Search {
        width: usize,
        seed: u64,
    },
    Given(Ghd),
}

#[derive(Debug, Clone)]
pub struct PlanOptions {
    /// `None` picks the cheapest applicable mode.
    pub mode: Option<Mode>,
    pub join_group_cap: usize,
    /// Replace the output by the join variables before planning.
    pub join_attrs_only: bool,
    pub guard: Option<String>,
    /// Used when the query is cyclic; given decompositions also apply to
    /// acyclic queries.
    pub ghd: Option<GhdSource>,
}

impl Default for PlanOptions {
    fn default() -> Self {
        PlanOptions {
            mode: None,
            join_group_cap: DEFAULT_JOIN_GROUP_CAP,
            join_attrs_only: false,
            guard: None,
            ghd: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Planned {
    /// The query actually planned, after `join_attrs_only`.
    pub query: ConjunctiveQuery,
    /// Tree as rooted by the plan.
    pub tree: JoinTree,
    /// View definitions when the tree came from a decomposition.
    pub views: Vec<ViewDefinition>,
    pub ghd: Option<Ghd>,
    pub plan: StagePlan,
}

fn tree_for(
    cq: &ConjunctiveQuery,
    ghd: Option<&GhdSource>,
) -> Result<(JoinTree, Vec<ViewDefinition>, Option<Ghd>), PipelineError> {
    let h = Hypergraph::from_cq(cq);
    if let Some(GhdSource::Given(g)) = ghd {
        let (t, views) = ghd_to_join_tree(g, cq)?;
        return Ok((t, views, Some(g.clone())));
    }
    match join_tree_for(&h)? {
        Acyclicity::Acyclic(t) => Ok((t, Vec::new(), None)),
        Acyclicity::Cyclic(report) => match ghd {
            Some(GhdSource::Search { width, seed }) => {
                let g =
                    find_ghd(&h, *width, *seed)?.ok_or(PipelineError::NoDecomposition(*width))?;
                let (t, views) = ghd_to_join_tree(&g, cq)?;
                Ok((t, views, Some(g)))
            }
            _ => Err(PipelineError::Cyclic(report)),
        },
    }
}

/// Build the staged plan for `cq`.
pub fn plan_query(cq: &ConjunctiveQuery, options: &PlanOptions) -> Result<Planned, PipelineError> {
    let query = if options.join_attrs_only {
        cq.project_to_join_vars()
    } else {
        cq.clone()
    };
    let (tree, views, ghd) = tree_for(&query, options.ghd.as_ref())?;
    let form = normalize_aggregation(&query);
    let mode = options.mode.unwrap_or_else(|| choose_mode(&tree, &form));
    let tree = select_root(&tree, &form, mode, options.guard.as_deref())?;
    let plan = build_plan(&tree, &form, mode, options.join_group_cap)?;
    Ok(Planned {
        query,
        tree,
        views,
        ghd,
        plan,
    })
}

/// SQL statements for `planned` in `dialect`.
pub fn rewrite(
    planned: &Planned,
    dialect: &Dialect,
    options: &EmitOptions,
) -> Result<Vec<String>, PipelineError> {
    Ok(emit_plan(&planned.plan, dialect, options)?)
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub naive: Relation,
    pub naive_stats: NaiveStats,
    pub run: PlanRun,
    pub bag_equal: bool,
}

/// Evaluate the planned query both ways on `db`.
pub fn compare(
    planned: &Planned,
    db: &Database,
    exec: ExecOptions,
) -> Result<Comparison, PipelineError> {
    let (naive, naive_stats) = eval_naive(&planned.query, db)?;
    let run = eval_plan(&planned.plan, db, exec)?;
    let bag_equal = bag_equal(&naive, &run.result);
    Ok(Comparison {
        naive,
        naive_stats,
        run,
        bag_equal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{query_for_hypergraph, random_database, rng, triangle, DataConfig};

    #[test]
    fn cyclic_queries_need_a_decomposition() {
        let mut r = rng(1);
        let q = query_for_hypergraph(&mut r, &triangle(), 2);
        let cq = parse(&q.sql, None).unwrap();
        assert!(!analyze(&cq, None).unwrap().acyclicity.is_acyclic());
        let err = plan_query(&cq, &PlanOptions::default()).unwrap_err();
        assert!(matches!(err, PipelineError::Cyclic(_)));
        assert!(err.to_string().contains("--ghd"));
        let narrow = PlanOptions {
            ghd: Some(GhdSource::Search { width: 1, seed: 0 }),
            ..PlanOptions::default()
        };
        assert_eq!(
            plan_query(&cq, &narrow).unwrap_err(),
            PipelineError::NoDecomposition(1)
        );
        let wide = PlanOptions {
            ghd: Some(GhdSource::Search { width: 2, seed: 0 }),
            ..PlanOptions::default()
        };
        let planned = plan_query(&cq, &wide).unwrap();
        assert!(!planned.views.is_empty());
        let db = random_database(&mut r, &q.schemas, &DataConfig::default());
        assert!(
            compare(&planned, &db, ExecOptions::default())
                .unwrap()
                .bag_equal
        );
    }

    #[test]
    fn automatic_mode_prefers_zero_materialization() {
        let cq = parse(
            "SELECT exams.student, MIN(exams.grade) FROM exams, courses
             WHERE exams.cid = courses.cid GROUP BY exams.student",
            None,
        )
        .unwrap();
        let planned = plan_query(&cq, &PlanOptions::default()).unwrap();
        assert_eq!(planned.plan.mode, Mode::ZeroMa);
        let forced = PlanOptions {
            mode: Some(Mode::FullEnum),
            ..PlanOptions::default()
        };
        assert_eq!(plan_query(&cq, &forced).unwrap().plan.mode, Mode::FullEnum);
    }

    #[test]
    fn join_attributes_only_replaces_the_output() {
        let cq = parse("SELECT r.a FROM r, s WHERE r.b = s.b", None).unwrap();
        let options = PlanOptions {
            join_attrs_only: true,
            ..PlanOptions::default()
        };
        let planned = plan_query(&cq, &options).unwrap();
        assert_eq!(planned.query.output_names(), ["b"]);
    }

    #[test]
    fn catalog_resolves_unqualified_columns() {
        let catalog: Catalog = [
            ("r".to_owned(), vec!["a".to_owned(), "b".to_owned()]),
            ("s".to_owned(), vec!["c".to_owned()]),
        ]
        .into_iter()
        .collect();
        let cq = parse("SELECT a, c FROM r, s WHERE b = c", Some(&catalog)).unwrap();
        assert_eq!(cq.atoms.len(), 2);
        assert!(parse("SELECT a FROM r, s WHERE b = c", None).is_err());
    }
}
