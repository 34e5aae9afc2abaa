use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::join_tree::{JoinNode, JoinTree, NodeLabel, ViewDefinition};
use super::tree::RootedTree;
use super::DecompositionError;
use crate::hypergraph::Hypergraph;
use crate::query::{ConjunctiveQuery, Var};

pub const GHD_MAX_EDGES: usize = 12;
pub const GHD_MAX_VERTICES: usize = 64;
pub const GHD_MAX_WIDTH: usize = 3;

/// Generalized hypertree decomposition: a tree of bags, each covered by a set
/// of atoms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ghd {
    tree: RootedTree,
    bags: BTreeMap<String, BTreeSet<Var>>,
    covers: BTreeMap<String, BTreeSet<String>>,
}

impl Ghd {
    pub fn new(
        tree: RootedTree,
        bags: BTreeMap<String, BTreeSet<Var>>,
        covers: BTreeMap<String, BTreeSet<String>>,
    ) -> Result<Self, DecompositionError> {
        let ids: BTreeSet<&String> = tree.nodes().collect();
        if ids != bags.keys().collect() || ids != covers.keys().collect() {
            return Err(DecompositionError::InvalidGhd(
                "every node needs exactly one bag and one cover".into(),
            ));
        }
        Ok(Ghd { tree, bags, covers })
    }

    pub fn root(&self) -> &str {
        self.tree.root()
    }

    pub fn shape(&self) -> &RootedTree {
        &self.tree
    }

    pub fn len(&self) -> usize {
        self.tree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tree.is_empty()
    }

    pub fn bag(&self, id: &str) -> &BTreeSet<Var> {
        &self.bags[id]
    }

    pub fn cover(&self, id: &str) -> &BTreeSet<String> {
        &self.covers[id]
    }

    pub fn pre_order(&self) -> Vec<String> {
        self.tree.pre_order()
    }

    /// Largest cover.
    pub fn width(&self) -> usize {
        self.covers.values().map(BTreeSet::len).max().unwrap_or(0)
    }

    /// Node contents and tree edges without node ids, for comparing
    /// decompositions up to renaming.
    pub fn canonical(&self) -> Vec<String> {
        let key = |id: &str| {
            let bag: Vec<&str> = self.bags[id].iter().map(Var::as_str).collect();
            let cover: Vec<&str> = self.covers[id].iter().map(String::as_str).collect();
            format!("{{{}}}/{{{}}}", bag.join(","), cover.join(","))
        };
        let mut out: Vec<String> = self.tree.nodes().map(|n| key(n)).collect();
        out.extend(
            self.tree
                .edges()
                .map(|(p, c)| format!("{} -> {}", key(p), key(c))),
        );
        out.push(format!("root {}", key(self.root())));
        out.sort();
        out
    }

    pub fn to_json(&self) -> String {
        let file = GhdFile {
            nodes: self
                .pre_order()
                .into_iter()
                .map(|id| GhdFileNode {
                    bag: self.bags[&id]
                        .iter()
                        .map(|v| v.as_str().to_owned())
                        .collect(),
                    cover: self.covers[&id].iter().cloned().collect(),
                    id,
                })
                .collect(),
            edges: self
                .pre_order()
                .into_iter()
                .filter_map(|c| self.tree.parent(&c).map(|p| [p.to_owned(), c.clone()]))
                .collect(),
            root: self.root().to_owned(),
        };
        serde_json::to_string_pretty(&file).expect("plain data serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, DecompositionError> {
        let file: GhdFile =
            serde_json::from_str(text).map_err(|e| DecompositionError::GhdFormat(e.to_string()))?;
        let mut parents = BTreeMap::new();
        for [p, c] in file.edges {
            if parents.insert(c.clone(), p).is_some() {
                return Err(DecompositionError::GhdFormat(format!(
                    "node {c} has two parents"
                )));
            }
        }
        let tree = RootedTree::from_parents(&file.root, &parents).ok_or_else(|| {
            DecompositionError::GhdFormat("edges do not form a tree at the root".into())
        })?;
        let mut bags = BTreeMap::new();
        let mut covers = BTreeMap::new();
        for node in file.nodes {
            if bags.contains_key(&node.id) {
                return Err(DecompositionError::GhdFormat(format!(
                    "duplicate node {}",
                    node.id
                )));
            }
            bags.insert(
                node.id.clone(),
                node.bag.into_iter().map(Var::new).collect(),
            );
            covers.insert(node.id, node.cover.into_iter().collect());
        }
        Ghd::new(tree, bags, covers).map_err(|e| DecompositionError::GhdFormat(e.to_string()))
    }
}

impl fmt::Display for Ghd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for id in self.pre_order() {
            let indent = "  ".repeat(self.tree.node_depth(&id));
            let bag: Vec<&str> = self.bags[&id].iter().map(Var::as_str).collect();
            let cover: Vec<&str> = self.covers[&id].iter().map(String::as_str).collect();
            writeln!(
                f,
                "{indent}{id} bag {{{}}} cover {{{}}}",
                bag.join(", "),
                cover.join(", ")
            )?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct GhdFile {
    nodes: Vec<GhdFileNode>,
    edges: Vec<[String; 2]>,
    root: String,
}

#[derive(Serialize, Deserialize)]
struct GhdFileNode {
    id: String,
    bag: Vec<String>,
    cover: Vec<String>,
}

/// Edge coverage, bag containment in its cover, and connectedness over bags.
pub fn validate_ghd(h: &Hypergraph, g: &Ghd) -> bool {
    let covered = h
        .edges()
        .values()
        .all(|e| g.bags.values().any(|bag| e.is_subset(bag)));
    let contained = g.tree.nodes().all(|id| {
        let mut union = BTreeSet::new();
        for label in &g.covers[id] {
            match h.edge(label) {
                Some(vs) => union.extend(vs.iter().cloned()),
                None => return false,
            }
        }
        g.bags[id].is_subset(&union)
    });
    covered && contained && g.tree.is_connected_labelling(|id| g.bags.get(id))
}

fn check_limits(h: &Hypergraph, width: usize) -> Result<(), DecompositionError> {
    if !(1..=GHD_MAX_WIDTH).contains(&width) {
        return Err(DecompositionError::InvalidWidth(width));
    }
    if h.is_empty() {
        return Err(DecompositionError::EmptyHypergraph);
    }
    if h.len() > GHD_MAX_EDGES {
        return Err(DecompositionError::TooLarge {
            what: "edges",
            limit: GHD_MAX_EDGES,
            actual: h.len(),
        });
    }
    let n = h.vertices().len();
    if n > GHD_MAX_VERTICES {
        return Err(DecompositionError::TooLarge {
            what: "vertices",
            limit: GHD_MAX_VERTICES,
            actual: n,
        });
    }
    Ok(())
}

/// Search for a decomposition of width at most `width`.
///
/// Explores vertex elimination orderings in which every eliminated vertex's
/// neighbourhood can be covered by `width` edges, then turns the ordering into
/// a tree of bags. Seed 0 tries vertices in name order and takes the first
/// minimal cover of each bag; other seeds shuffle both choices.
pub fn find_ghd(
    h: &Hypergraph,
    width: usize,
    seed: u64,
) -> Result<Option<Ghd>, DecompositionError> {
    check_limits(h, width)?;
    Ok(Search::new(h, width, seed).run())
}

/// Distinct decompositions of one width, found by searching with successive
/// seeds. Not meant to be shared between threads.
pub struct GhdEnumerator {
    h: Hypergraph,
    width: usize,
    next_seed: u64,
    attempts_left: usize,
    remaining: usize,
    seen: HashSet<Vec<String>>,
}

impl GhdEnumerator {
    pub fn new(h: &Hypergraph, width: usize, limit: usize) -> Result<Self, DecompositionError> {
        check_limits(h, width)?;
        Ok(GhdEnumerator {
            h: h.clone(),
            width,
            next_seed: 0,
            attempts_left: limit.saturating_mul(32).max(32),
            remaining: limit,
            seen: HashSet::new(),
        })
    }
}

impl Iterator for GhdEnumerator {
    type Item = Ghd;

    fn next(&mut self) -> Option<Ghd> {
        while self.remaining > 0 && self.attempts_left > 0 {
            self.attempts_left -= 1;
            let seed = self.next_seed;
            self.next_seed += 1;
            let g = Search::new(&self.h, self.width, seed).run()?;
            if self.seen.insert(g.canonical()) {
                self.remaining -= 1;
                return Some(g);
            }
        }
        None
    }
}

struct Search<'a> {
    h: &'a Hypergraph,
    width: usize,
    vars: Vec<Var>,
    labels: Vec<String>,
    edge_masks: Vec<u64>,
    adjacency: Vec<u64>,
    try_order: Vec<usize>,
    rng: Option<ChaCha8Rng>,
    failed: HashSet<u64>,
    covers: HashMap<u64, Option<Vec<Vec<usize>>>>,
}

fn bits(mask: u64) -> impl Iterator<Item = usize> {
    (0..64).filter(move |i| mask >> i & 1 == 1)
}

impl<'a> Search<'a> {
    fn new(h: &'a Hypergraph, width: usize, seed: u64) -> Self {
        let vars: Vec<Var> = h.vertices().into_iter().collect();
        let index: HashMap<&Var, usize> = vars.iter().enumerate().map(|(i, v)| (v, i)).collect();
        let labels: Vec<String> = h.labels().cloned().collect();
        let edge_masks: Vec<u64> = h
            .edges()
            .values()
            .map(|vs| vs.iter().fold(0u64, |m, v| m | 1 << index[v]))
            .collect();
        let mut adjacency = vec![0u64; vars.len()];
        for &m in &edge_masks {
            for v in bits(m) {
                adjacency[v] |= m & !(1 << v);
            }
        }
        let mut try_order: Vec<usize> = (0..vars.len()).collect();
        let rng = (seed != 0).then(|| ChaCha8Rng::seed_from_u64(seed));
        let mut search = Search {
            h,
            width,
            vars,
            labels,
            edge_masks,
            adjacency,
            try_order: Vec::new(),
            rng,
            failed: HashSet::new(),
            covers: HashMap::new(),
        };
        if let Some(rng) = search.rng.as_mut() {
            try_order.shuffle(rng);
        }
        search.try_order = try_order;
        search
    }

    fn full(&self) -> u64 {
        if self.vars.len() == 64 {
            u64::MAX
        } else {
            (1u64 << self.vars.len()) - 1
        }
    }

    /// `v` plus the uneliminated vertices reachable from it through
    /// eliminated ones.
    fn neighbourhood(&self, eliminated: u64, v: usize) -> u64 {
        let mut seen = 1u64 << v;
        let mut result = seen;
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            let fresh = self.adjacency[u] & !seen;
            seen |= fresh;
            for w in bits(fresh) {
                if eliminated >> w & 1 == 1 {
                    stack.push(w);
                } else {
                    result |= 1 << w;
                }
            }
        }
        result
    }

    /// All covers of `mask` with the fewest edges, up to `width`, in
    /// lexicographic order of edge indices.
    fn minimal_covers(&mut self, mask: u64) -> Option<Vec<Vec<usize>>> {
        if let Some(c) = self.covers.get(&mask) {
            return c.clone();
        }
        let m = self.edge_masks.len();
        let mut found = None;
        if mask == 0 {
            found = Some(vec![Vec::new()]);
        }
        for size in 1..=self.width.min(m) {
            if found.is_some() {
                break;
            }
            let mut all = Vec::new();
            let mut combo: Vec<usize> = (0..size).collect();
            loop {
                let union = combo.iter().fold(0u64, |u, &e| u | self.edge_masks[e]);
                if mask & !union == 0 {
                    all.push(combo.clone());
                }
                // Next combination in lexicographic order.
                let Some(i) = (0..size).rev().find(|&i| combo[i] < m - size + i) else {
                    break;
                };
                combo[i] += 1;
                for j in i + 1..size {
                    combo[j] = combo[j - 1] + 1;
                }
            }
            if !all.is_empty() {
                found = Some(all);
            }
        }
        self.covers.insert(mask, found.clone());
        found
    }

    fn coverable(&mut self, mask: u64) -> bool {
        self.minimal_covers(mask).is_some()
    }

    fn solve(&mut self, eliminated: u64) -> Option<Vec<usize>> {
        if eliminated == self.full() {
            return Some(Vec::new());
        }
        if self.failed.contains(&eliminated) {
            return None;
        }
        let order = self.try_order.clone();
        // A vertex whose neighbourhood sits inside one edge is simplicial and
        // can go first without loss.
        for &v in &order {
            if eliminated >> v & 1 == 1 {
                continue;
            }
            let nb = self.neighbourhood(eliminated, v);
            if self.edge_masks.iter().any(|&e| nb & !e == 0) {
                let result = self.solve(eliminated | 1 << v).map(|mut rest| {
                    rest.insert(0, v);
                    rest
                });
                if result.is_none() {
                    self.failed.insert(eliminated);
                }
                return result;
            }
        }
        for &v in &order {
            if eliminated >> v & 1 == 1 {
                continue;
            }
            let nb = self.neighbourhood(eliminated, v);
            if self.coverable(nb) {
                if let Some(mut rest) = self.solve(eliminated | 1 << v) {
                    rest.insert(0, v);
                    return Some(rest);
                }
            }
        }
        self.failed.insert(eliminated);
        None
    }

    fn run(mut self) -> Option<Ghd> {
        let order = self.solve(0)?;
        let n = order.len();

        // One bag per eliminated vertex; its parent is the bag of the
        // earliest-eliminated other member.
        let mut position = vec![0; n];
        for (i, &v) in order.iter().enumerate() {
            position[v] = i;
        }
        let mut bag = vec![0u64; n];
        let mut parent: Vec<Option<usize>> = vec![None; n];
        let mut eliminated = 0u64;
        for (i, &v) in order.iter().enumerate() {
            bag[i] = self.neighbourhood(eliminated, v);
            parent[i] = bits(bag[i] & !(1 << v)).map(|w| position[w]).min();
            eliminated |= 1 << v;
        }
        let mut alive = vec![true; n];
        if n > 0 {
            for p in parent.iter_mut().take(n - 1) {
                p.get_or_insert(n - 1);
            }
        }

        // Contract edges whose bags are nested, keeping the larger bag.
        while let Some(c) = (0..n).find(|&c| {
            alive[c]
                && parent[c].is_some_and(|p| {
                    let (bc, bp) = (bag[c], bag[p]);
                    bc & !bp == 0 || bp & !bc == 0
                })
        }) {
            let p = parent[c].unwrap();
            bag[p] |= bag[c];
            alive[c] = false;
            for q in parent.iter_mut() {
                if *q == Some(c) {
                    *q = Some(p);
                }
            }
        }

        let mut tree_ids: BTreeMap<usize, String> = BTreeMap::new();
        let live: Vec<usize> = (0..n).filter(|&i| alive[i]).collect();
        for &i in &live {
            tree_ids.insert(i, format!("g{:02}", tree_ids.len() + 1));
        }
        let mut bags = BTreeMap::new();
        let mut covers = BTreeMap::new();
        let tree = if let Some(&root) = live.iter().find(|&&i| parent[i].is_none()) {
            let mut parents = BTreeMap::new();
            for &i in &live {
                if let Some(p) = parent[i] {
                    parents.insert(tree_ids[&i].clone(), tree_ids[&p].clone());
                }
                let covers_of = self.minimal_covers(bag[i]).expect("bag was coverable");
                let pick = match self.rng.as_mut() {
                    Some(rng) => rng.random_range(0..covers_of.len()),
                    None => 0,
                };
                bags.insert(
                    tree_ids[&i].clone(),
                    bits(bag[i]).map(|v| self.vars[v].clone()).collect(),
                );
                covers.insert(
                    tree_ids[&i].clone(),
                    covers_of[pick]
                        .iter()
                        .map(|&e| self.labels[e].clone())
                        .collect(),
                );
            }
            RootedTree::from_parents(&tree_ids[&root], &parents).expect("elimination tree")
        } else {
            // No vertices at all: only empty edges.
            let first = self.labels[0].clone();
            bags.insert(first.clone(), BTreeSet::new());
            covers.insert(first.clone(), BTreeSet::from([first.clone()]));
            RootedTree::new(first)
        };

        // Atoms outside every cover hang off the first node whose bag holds
        // them, as singleton leaves.
        let mut tree = tree;
        let pre = tree.pre_order();
        let used: BTreeSet<String> = covers.values().flatten().cloned().collect();
        for (label, vs) in self.h.edges() {
            if used.contains(label) {
                continue;
            }
            let host = pre
                .iter()
                .find(|id| vs.is_subset(&bags[*id]))
                .expect("every edge lies inside some bag")
                .clone();
            let id = format!("{label}_leaf");
            tree.add_child(&host, &id);
            bags.insert(id.clone(), vs.clone());
            covers.insert(id, BTreeSet::from([label.clone()]));
        }
        Some(Ghd { tree, bags, covers })
    }
}

/// One view per decomposition node, named `v1`, `v2`, ... in pre-order.
///
/// Each atom is owned by exactly one view: the first node that covers it and
/// whose bag holds its variables, else the first node whose bag holds them.
pub fn ghd_to_join_tree(
    g: &Ghd,
    cq: &ConjunctiveQuery,
) -> Result<(JoinTree, Vec<ViewDefinition>), DecompositionError> {
    let h = Hypergraph::from_cq(cq);
    if !validate_ghd(&h, g) {
        return Err(DecompositionError::InvalidGhd(
            "decomposition does not fit the query".into(),
        ));
    }
    let pre = g.pre_order();
    let view_id: BTreeMap<&String, String> = pre
        .iter()
        .enumerate()
        .map(|(i, id)| (id, format!("v{}", i + 1)))
        .collect();

    let mut owned: BTreeMap<&String, Vec<String>> = BTreeMap::new();
    for atom in &cq.atoms {
        let vars = atom.vars();
        let owner = pre
            .iter()
            .find(|id| g.covers[*id].contains(&atom.id) && vars.is_subset(&g.bags[*id]))
            .or_else(|| pre.iter().find(|id| vars.is_subset(&g.bags[*id])))
            .ok_or_else(|| {
                DecompositionError::InvalidGhd(format!("no bag holds atom {}", atom.id))
            })?;
        owned.entry(owner).or_default().push(atom.id.clone());
    }

    let mut views = Vec::new();
    let mut nodes = BTreeMap::new();
    for id in &pre {
        let view = ViewDefinition {
            id: view_id[id].clone(),
            bag: g.bags[id].clone(),
            cover: g.covers[id].iter().cloned().collect(),
            owned: owned.remove(id).unwrap_or_default(),
        };
        nodes.insert(
            view.id.clone(),
            JoinNode {
                label: NodeLabel::View(view.clone()),
                attrs: view.bag.clone(),
            },
        );
        views.push(view);
    }
    let parents: BTreeMap<String, String> = g
        .tree
        .edges()
        .map(|(p, c)| {
            (
                view_id[&c.to_owned()].clone(),
                view_id[&p.to_owned()].clone(),
            )
        })
        .collect();
    let tree =
        RootedTree::from_parents(&view_id[&g.root().to_owned()], &parents).expect("same shape");
    Ok((JoinTree::new(tree, nodes), views))
}
