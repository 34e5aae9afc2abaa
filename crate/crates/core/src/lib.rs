//! Semi-join based rewriting of conjunctive SQL queries.
//!
//! A query is parsed into a conjunctive query, its hypergraph is decomposed
//! into a join tree (or a hypertree decomposition when cyclic), and a staged
//! plan of setup views, semi-join passes and joins is built. Plans can be
//! emitted as SQL for several dialects or executed by the in-memory engine.

pub mod classify;
pub mod decomposition;
pub mod emit;
pub mod engine;
pub mod hypergraph;
pub mod pipeline;
pub mod plan;
pub mod query;
pub mod random;
pub mod sql;

pub use classify::{
    classify_0ma, normalize_aggregation, set_safety, AggregationForm, SetSafety, ZeroMaReport,
};
pub use decomposition::{
    find_ghd, flat_gyo, ghd_to_join_tree, is_valid_join_tree, join_tree_for, min_depth_oracle,
    validate_ghd, Acyclicity, CyclicReport, DecompositionError, Ghd, JoinTree,
};
pub use emit::{emit_plan, Dialect, EmitOptions, SemijoinStyle};
pub use engine::{
    bag_equal, eval_naive, eval_plan, Database, EngineError, ExecOptions, Relation, StageStats,
    Value,
};
pub use hypergraph::Hypergraph;
pub use pipeline::{
    analyze, compare, parse, plan_query, Analysis, PipelineError, PlanOptions, Planned,
};
pub use plan::{build_plan, Mode, Stage, StagePlan};
pub use query::{Atom, ConjunctiveQuery, Var};
pub use sql::{sql_to_cq, SqlError};
