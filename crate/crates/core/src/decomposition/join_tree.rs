use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::tree::RootedTree;
use crate::hypergraph::Hypergraph;
use crate::query::Var;

/// Local join computed at one node of a decomposition.
///
/// `owned` atoms contribute their full multiplicity. Cover atoms that are not
/// owned only restrict the bag: they enter as `DISTINCT` projections onto it,
/// so every atom is counted exactly once in the full join.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViewDefinition {
    pub id: String,
    pub bag: BTreeSet<Var>,
    pub cover: Vec<String>,
    pub owned: Vec<String>,
}

impl ViewDefinition {
    /// Cover atoms that are joined as distinct projections.
    pub fn filter_atoms(&self) -> Vec<&String> {
        self.cover
            .iter()
            .filter(|c| !self.owned.contains(c))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeLabel {
    BaseAtom(String),
    View(ViewDefinition),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinNode {
    pub label: NodeLabel,
    /// Att(u).
    pub attrs: BTreeSet<Var>,
}

impl JoinNode {
    /// Atoms whose tuples this node carries.
    pub fn atoms(&self) -> Vec<&String> {
        match &self.label {
            NodeLabel::BaseAtom(a) => vec![a],
            NodeLabel::View(v) => v.owned.iter().collect(),
        }
    }
}

/// Rooted, labelled tree whose nodes are atoms or views.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinTree {
    tree: RootedTree,
    nodes: BTreeMap<String, JoinNode>,
}

impl JoinTree {
    /// Panics if the node map and the tree disagree on ids.
    pub fn new(tree: RootedTree, nodes: BTreeMap<String, JoinNode>) -> Self {
        assert!(
            tree.len() == nodes.len() && tree.nodes().all(|n| nodes.contains_key(n)),
            "tree shape and node labels disagree"
        );
        JoinTree { tree, nodes }
    }

    /// A tree over base atoms given as (child, parent) pairs, with attributes
    /// taken from the hypergraph. `None` if an id is unknown or the pairs do
    /// not form a tree.
    pub fn from_base_atoms(h: &Hypergraph, root: &str, edges: &[(&str, &str)]) -> Option<Self> {
        let parents: BTreeMap<String, String> = edges
            .iter()
            .map(|(c, p)| (c.to_string(), p.to_string()))
            .collect();
        let tree = RootedTree::from_parents(root, &parents)?;
        let mut nodes = BTreeMap::new();
        for id in tree.nodes() {
            let attrs = h.edge(id)?.clone();
            nodes.insert(
                id.clone(),
                JoinNode {
                    label: NodeLabel::BaseAtom(id.clone()),
                    attrs,
                },
            );
        }
        Some(JoinTree { tree, nodes })
    }

    pub fn root(&self) -> &str {
        self.tree.root()
    }

    pub fn shape(&self) -> &RootedTree {
        &self.tree
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &String> {
        self.nodes.keys()
    }

    pub fn node(&self, id: &str) -> Option<&JoinNode> {
        self.nodes.get(id)
    }

    pub fn nodes(&self) -> &BTreeMap<String, JoinNode> {
        &self.nodes
    }

    pub fn attrs(&self, id: &str) -> &BTreeSet<Var> {
        &self.nodes[id].attrs
    }

    pub fn parent(&self, id: &str) -> Option<&str> {
        self.tree.parent(id)
    }

    pub fn children(&self, id: &str) -> impl Iterator<Item = &String> {
        self.tree.children(id)
    }

    pub fn is_leaf(&self, id: &str) -> bool {
        self.tree.is_leaf(id)
    }

    pub fn depth(&self) -> usize {
        self.tree.depth()
    }

    pub fn pre_order(&self) -> Vec<String> {
        self.tree.pre_order()
    }

    pub fn post_order(&self) -> Vec<String> {
        self.tree.post_order()
    }

    /// Variables shared by a node and its parent.
    pub fn keys_to_parent(&self, id: &str) -> BTreeSet<Var> {
        match self.parent(id) {
            Some(p) => self
                .attrs(id)
                .intersection(self.attrs(p))
                .cloned()
                .collect(),
            None => BTreeSet::new(),
        }
    }

    /// Parent/child pairs with no shared variable, i.e. cross products.
    pub fn cross_product_edges(&self) -> Vec<(String, String)> {
        self.tree
            .edges()
            .filter(|(p, c)| self.attrs(p).is_disjoint(self.attrs(c)))
            .map(|(p, c)| (p.to_owned(), c.to_owned()))
            .collect()
    }

    /// Same tree, rooted elsewhere.
    pub fn rerooted(&self, root: &str) -> JoinTree {
        JoinTree {
            tree: self.tree.rerooted(root),
            nodes: self.nodes.clone(),
        }
    }

    /// Attach `other` below `at`. Node ids must be disjoint.
    pub fn graft(&mut self, at: &str, other: &JoinTree) {
        for id in other.pre_order() {
            let parent = other.parent(&id).unwrap_or(at);
            self.tree.add_child(parent, &id);
            self.nodes.insert(id.clone(), other.nodes[&id].clone());
        }
    }

    /// Every variable's occurrences form a connected subtree.
    pub fn is_connected(&self) -> bool {
        self.tree
            .is_connected_labelling(|id| self.nodes.get(id).map(|n| &n.attrs))
    }
}

impl fmt::Display for JoinTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for id in self.pre_order() {
            let indent = "  ".repeat(self.tree.node_depth(&id));
            let vars: Vec<&str> = self.attrs(&id).iter().map(Var::as_str).collect();
            writeln!(f, "{indent}{id} [{}]", vars.join(" "))?;
        }
        Ok(())
    }
}

/// Labels are a bijection onto the hypergraph's edges, node attributes equal
/// the edges, and the connectedness condition holds.
pub fn is_valid_join_tree(h: &Hypergraph, t: &JoinTree) -> bool {
    if t.len() != h.len() {
        return false;
    }
    let mut seen = BTreeSet::new();
    for (id, node) in t.nodes() {
        let NodeLabel::BaseAtom(label) = &node.label else {
            return false;
        };
        if label != id || !seen.insert(label) || h.edge(label) != Some(&node.attrs) {
            return false;
        }
    }
    t.is_connected()
}
