//! Join trees for acyclic queries and hypertree decompositions for cyclic ones.

mod ghd;
mod gyo;
mod join_tree;
mod oracle;
mod tree;

use thiserror::Error;

pub use ghd::{
    find_ghd, ghd_to_join_tree, validate_ghd, Ghd, GhdEnumerator, GHD_MAX_EDGES, GHD_MAX_VERTICES,
    GHD_MAX_WIDTH,
};
pub use gyo::{flat_gyo, join_tree_for, Acyclicity, CyclicReport};
pub use join_tree::{is_valid_join_tree, JoinNode, JoinTree, NodeLabel, ViewDefinition};
pub use oracle::{min_depth_oracle, ORACLE_MAX_EDGES};
pub use tree::RootedTree;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum DecompositionError {
    #[error("hypergraph is disconnected")]
    DisconnectedInput,
    #[error("hypergraph has no edges")]
    EmptyHypergraph,
    #[error("too many {what}: {actual} (limit {limit})")]
    TooLarge {
        what: &'static str,
        limit: usize,
        actual: usize,
    },
    #[error("hypergraph is cyclic and has no join tree")]
    NoJoinTree,
    #[error("decomposition width must be between 1 and 3, got {0}")]
    InvalidWidth(usize),
    #[error("invalid decomposition: {0}")]
    InvalidGhd(String),
    #[error("malformed decomposition file: {0}")]
    GhdFormat(String),
}
