//! Query hypergraphs: variables as vertices, one labelled edge per atom.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::query::{ConjunctiveQuery, Var};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Hypergraph {
    edges: BTreeMap<String, BTreeSet<Var>>,
}

impl Hypergraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// One edge per atom, labelled by the atom id.
    ///
    /// An atom that references no columns at all (as in `SELECT 1 FROM r`)
    /// yields an empty edge, which forms its own component.
    pub fn from_cq(cq: &ConjunctiveQuery) -> Self {
        Hypergraph {
            edges: cq.atoms.iter().map(|a| (a.id.clone(), a.vars())).collect(),
        }
    }

    pub fn from_edges<L, I, V>(edges: I) -> Self
    where
        L: Into<String>,
        I: IntoIterator<Item = (L, V)>,
        V: IntoIterator,
        V::Item: Into<Var>,
    {
        Hypergraph {
            edges: edges
                .into_iter()
                .map(|(l, vs)| (l.into(), vs.into_iter().map(Into::into).collect()))
                .collect(),
        }
    }

    pub fn add_edge(&mut self, label: impl Into<String>, vars: BTreeSet<Var>) {
        self.edges.insert(label.into(), vars);
    }

    pub fn edges(&self) -> &BTreeMap<String, BTreeSet<Var>> {
        &self.edges
    }

    pub fn edge(&self, label: &str) -> Option<&BTreeSet<Var>> {
        self.edges.get(label)
    }

    pub fn labels(&self) -> impl Iterator<Item = &String> {
        self.edges.keys()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn vertices(&self) -> BTreeSet<Var> {
        self.edges.values().flatten().cloned().collect()
    }

    /// Connected components of the edge-intersection graph, each as its own
    /// hypergraph, ordered by their smallest label.
    pub fn components(&self) -> Vec<Hypergraph> {
        let labels: Vec<&String> = self.edges.keys().collect();
        let mut component: BTreeMap<&String, usize> = BTreeMap::new();
        let mut count = 0;
        for &start in &labels {
            if component.contains_key(start) {
                continue;
            }
            let mut stack = vec![start];
            component.insert(start, count);
            while let Some(cur) = stack.pop() {
                let cur_vars = &self.edges[cur];
                for &other in &labels {
                    if !component.contains_key(other) && !self.edges[other].is_disjoint(cur_vars) {
                        component.insert(other, count);
                        stack.push(other);
                    }
                }
            }
            count += 1;
        }
        let mut out = vec![Hypergraph::new(); count];
        for (label, idx) in component {
            out[idx]
                .edges
                .insert(label.clone(), self.edges[label].clone());
        }
        out
    }

    /// True iff the edge-intersection graph is connected.
    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }

    /// One line per edge, `label: v1 v2 ...`, labels in lexicographic order.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (label, vars) in &self.edges {
            let vars: Vec<&str> = vars.iter().map(Var::as_str).collect();
            let _ = writeln!(out, "{label}: {}", vars.join(" "));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sql::sql_to_cq;

    fn university() -> Hypergraph {
        let cq = sql_to_cq(
            "SELECT enrolled.program, exams.cid, MIN(exams.grade)
             FROM exams, courses, enrolled, tutors
             WHERE exams.cid = courses.cid AND exams.student = enrolled.student
               AND exams.cid = tutors.cid AND courses.faculty = 'ComputerScience'
               AND exams.student = tutors.student AND tutors.num_semesters > 1
             GROUP BY enrolled.program, exams.cid",
        )
        .unwrap();
        Hypergraph::from_cq(&cq)
    }

    #[test]
    fn university_edges() {
        let h = university();
        assert_eq!(
            h.dump(),
            "courses: cid faculty\n\
             enrolled: program student\n\
             exams: cid grade student\n\
             tutors: cid num_semesters student\n"
        );
        assert!(h.is_connected());
    }

    #[test]
    fn single_atom() {
        let cq = sql_to_cq("SELECT a, b FROM r").unwrap();
        let h = Hypergraph::from_cq(&cq);
        assert_eq!(h.len(), 1);
        assert_eq!(h.edge("r").unwrap().len(), 2);
        assert!(h.is_connected());
    }

    #[test]
    fn triangle_edges_pairwise_share_one_vertex() {
        let cq = sql_to_cq("SELECT r.a FROM r, s, t WHERE r.b = s.b AND s.c = t.c AND t.a = r.a")
            .unwrap();
        let h = Hypergraph::from_cq(&cq);
        let edges: Vec<_> = h.edges().values().collect();
        assert_eq!(edges.len(), 3);
        for i in 0..3 {
            for j in i + 1..3 {
                assert_eq!(edges[i].intersection(edges[j]).count(), 1);
            }
        }
    }

    #[test]
    fn disjoint_edges_are_disconnected() {
        let h = Hypergraph::from_edges([("e1", ["a", "b"]), ("e2", ["c", "d"])]);
        assert!(!h.is_connected());
        assert_eq!(h.components().len(), 2);
    }
}
