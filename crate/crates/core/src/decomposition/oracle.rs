use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::DecompositionError;
use crate::hypergraph::Hypergraph;
use crate::query::Var;

pub const ORACLE_MAX_EDGES: usize = 7;

/// Minimum depth over every join tree of `h`, by brute force.
///
/// Enumerates all labelled trees on the edges through Prüfer sequences, keeps
/// those satisfying the connectedness condition, and returns the smallest
/// radius among them (the depth when rooted at a centre).
pub fn min_depth_oracle(h: &Hypergraph) -> Result<usize, DecompositionError> {
    let n = h.len();
    if n > ORACLE_MAX_EDGES {
        return Err(DecompositionError::TooLarge {
            what: "edges",
            limit: ORACLE_MAX_EDGES,
            actual: n,
        });
    }
    if n == 0 {
        return Err(DecompositionError::EmptyHypergraph);
    }
    if n == 1 {
        return Ok(0);
    }
    let sets: Vec<&BTreeSet<Var>> = h.edges().values().collect();
    let mut best: Option<usize> = None;
    let mut seq = vec![0usize; n - 2];
    loop {
        let edges = prufer_decode(&seq, n);
        if is_connected_tree(&sets, &edges) {
            let r = radius(n, &edges);
            best = Some(best.map_or(r, |b| b.min(r)));
        }
        if !advance(&mut seq, n) {
            break;
        }
    }
    best.ok_or(DecompositionError::NoJoinTree)
}

fn advance(seq: &mut [usize], base: usize) -> bool {
    for digit in seq.iter_mut() {
        *digit += 1;
        if *digit < base {
            return true;
        }
        *digit = 0;
    }
    false
}

fn prufer_decode(seq: &[usize], n: usize) -> Vec<(usize, usize)> {
    let mut degree = vec![1usize; n];
    for &s in seq {
        degree[s] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &s in seq {
        let leaf = (0..n)
            .find(|&i| degree[i] == 1)
            .expect("a leaf always exists");
        edges.push((leaf, s));
        degree[leaf] -= 1;
        degree[s] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&i| degree[i] == 1).collect();
    edges.push((rest[0], rest[1]));
    edges
}

/// Per vertex: the tree edges joining two nodes that contain it must number
/// one less than the nodes containing it.
fn is_connected_tree(sets: &[&BTreeSet<Var>], edges: &[(usize, usize)]) -> bool {
    let mut nodes: BTreeMap<&Var, usize> = BTreeMap::new();
    for set in sets {
        for v in set.iter() {
            *nodes.entry(v).or_default() += 1;
        }
    }
    let mut links: BTreeMap<&Var, usize> = BTreeMap::new();
    for &(a, b) in edges {
        for v in sets[a].intersection(sets[b]) {
            *links.entry(v).or_default() += 1;
        }
    }
    nodes
        .iter()
        .all(|(v, n)| links.get(v).copied().unwrap_or(0) + 1 == *n)
}

fn radius(n: usize, edges: &[(usize, usize)]) -> usize {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    (0..n)
        .map(|start| {
            let mut dist = vec![usize::MAX; n];
            dist[start] = 0;
            let mut queue = VecDeque::from([start]);
            while let Some(cur) = queue.pop_front() {
                for &next in &adj[cur] {
                    if dist[next] == usize::MAX {
                        dist[next] = dist[cur] + 1;
                        queue.push_back(next);
                    }
                }
            }
            dist.into_iter().max().unwrap_or(0)
        })
        .min()
        .unwrap_or(0)
}
