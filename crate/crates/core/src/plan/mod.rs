//! Staged plan IR: setup views, bottom-up and top-down semi-join passes, the
//! join pass, and a final aggregation step.

mod builder;
mod ir;

pub use builder::{
    atom_scan, build_plan, choose_mode, covering_subtree, join_groups, select_root, PlanError,
    DEFAULT_JOIN_GROUP_CAP,
};
pub use ir::{
    AtomScan, DistinctSource, Finalize, Mode, ObjectKind, PlanStatement, Reducer, ScanFilter,
    Stage, StagePlan, StatementBody,
};
