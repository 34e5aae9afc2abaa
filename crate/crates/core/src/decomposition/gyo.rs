use std::collections::{BTreeMap, BTreeSet};

use super::join_tree::{JoinNode, JoinTree, NodeLabel};
use super::tree::RootedTree;
use super::DecompositionError;
use crate::hypergraph::Hypergraph;
use crate::query::Var;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CyclicReport {
    /// What is left once no degree-1 vertex and no contained edge remain.
    pub residual: Hypergraph,
}

impl std::fmt::Display for CyclicReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let labels: Vec<&str> = self.residual.labels().map(String::as_str).collect();
        write!(
            f,
            "query is cyclic (irreducible edges: {}); supply a decomposition with --ghd <file> or search with --width <k>",
            labels.join(", ")
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Acyclicity {
    Acyclic(JoinTree),
    Cyclic(CyclicReport),
}

impl Acyclicity {
    pub fn join_tree(&self) -> Option<&JoinTree> {
        match self {
            Acyclicity::Acyclic(t) => Some(t),
            Acyclicity::Cyclic(_) => None,
        }
    }

    pub fn is_acyclic(&self) -> bool {
        matches!(self, Acyclicity::Acyclic(_))
    }
}

/// Flat-GYO: build a join tree of minimum depth for a connected acyclic
/// hypergraph.
///
/// Each round deletes every vertex of degree 1, then visits the maximal edges
/// in label order; each one adopts all remaining edges contained in it. Equal
/// edges count as contained in the one with the smaller label. A round that
/// removes nothing means the hypergraph is cyclic.
pub fn flat_gyo(h: &Hypergraph) -> Result<Acyclicity, DecompositionError> {
    if h.is_empty() {
        return Err(DecompositionError::EmptyHypergraph);
    }
    if !h.is_connected() {
        return Err(DecompositionError::DisconnectedInput);
    }
    let mut current: BTreeMap<String, BTreeSet<Var>> = h.edges().clone();
    let mut parent: BTreeMap<String, String> = BTreeMap::new();

    while current.len() > 1 {
        let mut degree: BTreeMap<Var, usize> = BTreeMap::new();
        for v in current.values().flatten() {
            *degree.entry(v.clone()).or_default() += 1;
        }
        for vs in current.values_mut() {
            vs.retain(|v| degree[v] > 1);
        }

        let maximal: Vec<String> = current
            .iter()
            .filter(|(_, e)| {
                !current
                    .values()
                    .any(|f| e.len() < f.len() && e.is_subset(f))
            })
            .map(|(l, _)| l.clone())
            .collect();

        let mut removed = false;
        for e in maximal {
            let Some(e_vars) = current.get(&e).cloned() else {
                continue;
            };
            let contained: Vec<String> = current
                .iter()
                .filter(|(c, vs)| **c != e && vs.is_subset(&e_vars))
                .map(|(c, _)| c.clone())
                .collect();
            for c in contained {
                current.remove(&c);
                parent.insert(c, e.clone());
                removed = true;
            }
        }
        if !removed {
            return Ok(Acyclicity::Cyclic(CyclicReport {
                residual: Hypergraph::from_edges(current),
            }));
        }
    }

    let root = current.keys().next().expect("one edge remains").clone();
    let tree = RootedTree::from_parents(&root, &parent).expect("parent map is a tree");
    let nodes = h
        .edges()
        .iter()
        .map(|(l, vs)| {
            (
                l.clone(),
                JoinNode {
                    label: NodeLabel::BaseAtom(l.clone()),
                    attrs: vs.clone(),
                },
            )
        })
        .collect();
    Ok(Acyclicity::Acyclic(JoinTree::new(tree, nodes)))
}

/// Flat-GYO per connected component. The trees of later components are
/// grafted below the root of the first, which turns those links into cross
/// products. Cyclic components are reported together.
pub fn join_tree_for(h: &Hypergraph) -> Result<Acyclicity, DecompositionError> {
    if h.is_empty() {
        return Err(DecompositionError::EmptyHypergraph);
    }
    let mut trees = Vec::new();
    let mut residual = Hypergraph::new();
    for component in h.components() {
        match flat_gyo(&component)? {
            Acyclicity::Acyclic(t) => trees.push(t),
            Acyclicity::Cyclic(report) => {
                for (l, vs) in report.residual.edges() {
                    residual.add_edge(l.clone(), vs.clone());
                }
            }
        }
    }
    if !residual.is_empty() {
        return Ok(Acyclicity::Cyclic(CyclicReport { residual }));
    }
    let mut trees = trees.into_iter();
    let mut tree = trees.next().expect("at least one component");
    let root = tree.root().to_owned();
    for other in trees {
        tree.graft(&root, &other);
    }
    Ok(Acyclicity::Acyclic(tree))
}
