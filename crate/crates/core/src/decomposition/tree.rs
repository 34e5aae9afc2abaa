use std::collections::{BTreeMap, BTreeSet, VecDeque};

/// Rooted tree over string node ids. Children are kept in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootedTree {
    root: String,
    parent: BTreeMap<String, String>,
    children: BTreeMap<String, BTreeSet<String>>,
}

impl RootedTree {
    pub fn new(root: impl Into<String>) -> Self {
        let root = root.into();
        RootedTree {
            children: [(root.clone(), BTreeSet::new())].into(),
            parent: BTreeMap::new(),
            root,
        }
    }

    /// Build from a child→parent map; `None` if the map does not describe a
    /// tree rooted at `root` spanning every mentioned node.
    pub fn from_parents(root: &str, parents: &BTreeMap<String, String>) -> Option<Self> {
        let mut children: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for (c, p) in parents {
            children.entry(p).or_default().insert(c);
        }
        if parents.contains_key(root) {
            return None;
        }
        let mut tree = RootedTree::new(root);
        let mut queue = VecDeque::from([root.to_owned()]);
        while let Some(cur) = queue.pop_front() {
            for &c in children.get(cur.as_str()).into_iter().flatten() {
                if tree.contains(c) {
                    return None;
                }
                tree.add_child(&cur, c);
                queue.push_back(c.to_owned());
            }
        }
        (tree.len() == parents.len() + 1).then_some(tree)
    }

    pub fn root(&self) -> &str {
        &self.root
    }

    pub fn len(&self) -> usize {
        self.children.len()
    }

    pub fn is_empty(&self) -> bool {
        self.children.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.children.contains_key(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &String> {
        self.children.keys()
    }

    pub fn parent(&self, id: &str) -> Option<&str> {
        self.parent.get(id).map(String::as_str)
    }

    pub fn parents(&self) -> &BTreeMap<String, String> {
        &self.parent
    }

    pub fn children(&self, id: &str) -> impl DoubleEndedIterator<Item = &String> {
        self.children.get(id).into_iter().flatten()
    }

    pub fn is_leaf(&self, id: &str) -> bool {
        self.children.get(id).is_none_or(BTreeSet::is_empty)
    }

    /// Panics if `child` is already present or `parent` is not.
    pub fn add_child(&mut self, parent: &str, child: &str) {
        assert!(self.contains(parent), "unknown parent {parent}");
        assert!(!self.contains(child), "duplicate node {child}");
        self.children
            .get_mut(parent)
            .unwrap()
            .insert(child.to_owned());
        self.children.insert(child.to_owned(), BTreeSet::new());
        self.parent.insert(child.to_owned(), parent.to_owned());
    }

    /// Tree edges as (parent, child).
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> {
        self.parent.iter().map(|(c, p)| (p.as_str(), c.as_str()))
    }

    pub fn pre_order(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.len());
        let mut stack = vec![self.root.clone()];
        while let Some(cur) = stack.pop() {
            for c in self.children(&cur).rev() {
                stack.push(c.clone());
            }
            out.push(cur);
        }
        out
    }

    pub fn post_order(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.len());
        self.post_order_from(&self.root, &mut out);
        out
    }

    fn post_order_from(&self, id: &str, out: &mut Vec<String>) {
        for c in self.children(id) {
            self.post_order_from(c, out);
        }
        out.push(id.to_owned());
    }

    /// Nodes of the subtree rooted at `id`.
    pub fn subtree(&self, id: &str) -> Vec<String> {
        let mut out = Vec::new();
        self.post_order_from(id, &mut out);
        out
    }

    pub fn node_depth(&self, id: &str) -> usize {
        let mut d = 0;
        let mut cur = id;
        while let Some(p) = self.parent(cur) {
            d += 1;
            cur = p;
        }
        d
    }

    /// Maximum distance from the root to a leaf.
    pub fn depth(&self) -> usize {
        self.nodes().map(|n| self.node_depth(n)).max().unwrap_or(0)
    }

    /// Nodes on the path from `from` to `to`, both inclusive.
    pub fn path(&self, from: &str, to: &str) -> Vec<String> {
        let up = self.ancestors(from);
        let down = self.ancestors(to);
        let meet = up
            .iter()
            .find(|n| down.contains(n))
            .cloned()
            .expect("nodes of one tree");
        let mut path: Vec<String> = up.iter().take_while(|n| **n != meet).cloned().collect();
        path.push(meet.clone());
        let tail: Vec<String> = down.iter().take_while(|n| **n != meet).cloned().collect();
        path.extend(tail.into_iter().rev());
        path
    }

    /// `id` followed by its ancestors up to the root.
    fn ancestors(&self, id: &str) -> Vec<String> {
        let mut chain = vec![id.to_owned()];
        let mut cur = id;
        while let Some(p) = self.parent(cur) {
            chain.push(p.to_owned());
            cur = p;
        }
        chain
    }

    /// The same undirected tree rooted at `new_root`.
    pub fn rerooted(&self, new_root: &str) -> RootedTree {
        assert!(self.contains(new_root), "unknown node {new_root}");
        let mut adjacency: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (p, c) in self.edges() {
            adjacency.entry(p).or_default().push(c);
            adjacency.entry(c).or_default().push(p);
        }
        let mut tree = RootedTree::new(new_root);
        let mut queue = VecDeque::from([new_root]);
        while let Some(cur) = queue.pop_front() {
            let mut next: Vec<&str> = adjacency.get(cur).cloned().unwrap_or_default();
            next.sort_unstable();
            for n in next {
                if !tree.contains(n) {
                    tree.add_child(cur, n);
                    queue.push_back(n);
                }
            }
        }
        tree
    }

    /// For each set-valued labelling, every element's occurrences form a
    /// connected subtree.
    pub fn is_connected_labelling<'s, T: Ord + 's>(
        &self,
        label: impl Fn(&str) -> Option<&'s BTreeSet<T>>,
    ) -> bool {
        let mut occurrences: BTreeMap<&T, usize> = BTreeMap::new();
        for n in self.nodes() {
            let Some(set) = label(n) else { return false };
            for x in set {
                *occurrences.entry(x).or_default() += 1;
            }
        }
        let mut linked: BTreeMap<&T, usize> = BTreeMap::new();
        for (p, c) in self.edges() {
            let (Some(ps), Some(cs)) = (label(p), label(c)) else {
                return false;
            };
            for x in ps.intersection(cs) {
                *linked.entry(x).or_default() += 1;
            }
        }
        occurrences
            .iter()
            .all(|(x, n)| linked.get(x).copied().unwrap_or(0) + 1 == *n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RootedTree {
        // a -> {b, c}, b -> {d}
        let mut t = RootedTree::new("a");
        t.add_child("a", "c");
        t.add_child("a", "b");
        t.add_child("b", "d");
        t
    }

    #[test]
    fn traversals() {
        let t = sample();
        assert_eq!(t.pre_order(), vec!["a", "b", "d", "c"]);
        assert_eq!(t.post_order(), vec!["d", "b", "c", "a"]);
        assert_eq!(t.depth(), 2);
        assert_eq!(t.path("d", "c"), vec!["d", "b", "a", "c"]);
    }

    #[test]
    fn reroot_preserves_edges() {
        let t = sample().rerooted("d");
        assert_eq!(t.root(), "d");
        assert_eq!(t.parent("b"), Some("d"));
        assert_eq!(t.parent("a"), Some("b"));
        assert_eq!(t.parent("c"), Some("a"));
        assert_eq!(t.depth(), 3);
    }

    #[test]
    fn from_parents_rejects_cycles_and_forests() {
        let parents: BTreeMap<String, String> =
            [("b".into(), "c".into()), ("c".into(), "b".into())].into();
        assert!(RootedTree::from_parents("a", &parents).is_none());
        let parents: BTreeMap<String, String> = [("b".into(), "a".into())].into();
        assert_eq!(RootedTree::from_parents("a", &parents).unwrap().len(), 2);
    }
}
