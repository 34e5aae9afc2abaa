use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use super::ir::{
    AtomScan, DistinctSource, Finalize, Mode, ObjectKind, PlanStatement, Reducer, ScanFilter,
    Stage, StagePlan, StatementBody,
};
use crate::classify::{set_safety, AggregationForm};
use crate::decomposition::{JoinTree, NodeLabel};
use crate::query::{Atom, ConjunctiveQuery, Var};

pub const DEFAULT_JOIN_GROUP_CAP: usize = 12;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum PlanError {
    #[error("mode {mode} does not fit this query: {reason}")]
    ModeMismatch { mode: Mode, reason: String },
    #[error("join tree has no nodes")]
    EmptyTree,
    #[error("guard {0} is not a node of the join tree holding every projected variable")]
    GuardNotInTree(String),
    #[error("join group cap must be at least 1")]
    InvalidCap,
    #[error("join tree refers to unknown atom {0}")]
    UnknownAtom(String),
}

/// The smallest connected set of nodes whose attributes cover `s`, and the
/// node to root it at.
///
/// For a fixed root the best set is the union of the paths to the nearest
/// node holding each variable; the minimum over all roots is taken, ties
/// going to the smaller node id.
pub fn covering_subtree(t: &JoinTree, s: &BTreeSet<Var>) -> (String, BTreeSet<String>) {
    let adjacency = undirected(t);
    let mut best: Option<(String, BTreeSet<String>)> = None;
    for r in t.ids() {
        let (dist, prev) = bfs(&adjacency, r);
        let mut k: BTreeSet<String> = BTreeSet::from([r.clone()]);
        for v in s {
            let gate = t
                .ids()
                .filter(|id| t.attrs(id).contains(v))
                .min_by_key(|id| (dist[id.as_str()], (*id).clone()));
            let Some(mut cur) = gate.map(String::as_str) else {
                continue;
            };
            while cur != r {
                k.insert(cur.to_owned());
                cur = prev[cur];
            }
        }
        if best.as_ref().is_none_or(|(_, b)| k.len() < b.len()) {
            best = Some((r.clone(), k));
        }
    }
    best.expect("tree has nodes")
}

fn undirected(t: &JoinTree) -> BTreeMap<&str, Vec<&str>> {
    let mut adjacency: BTreeMap<&str, Vec<&str>> =
        t.ids().map(|id| (id.as_str(), Vec::new())).collect();
    for (p, c) in t.shape().edges() {
        adjacency.get_mut(p).unwrap().push(c);
        adjacency.get_mut(c).unwrap().push(p);
    }
    adjacency
}

type Bfs<'a> = (BTreeMap<&'a str, usize>, BTreeMap<&'a str, &'a str>);

fn bfs<'a>(adjacency: &BTreeMap<&'a str, Vec<&'a str>>, start: &'a str) -> Bfs<'a> {
    let mut dist = BTreeMap::from([(start, 0)]);
    let mut prev = BTreeMap::new();
    let mut queue = VecDeque::from([start]);
    while let Some(cur) = queue.pop_front() {
        for &next in &adjacency[cur] {
            if !dist.contains_key(next) {
                dist.insert(next, dist[cur] + 1);
                prev.insert(next, cur);
                queue.push_back(next);
            }
        }
    }
    (dist, prev)
}

fn guard_nodes(t: &JoinTree, s: &BTreeSet<Var>) -> Vec<String> {
    t.ids()
        .filter(|id| s.is_subset(t.attrs(id)))
        .cloned()
        .collect()
}

/// ZeroMa when set-safe with a node holding S, else Partial when set-safe and
/// a proper subtree covers S, else FullEnum.
pub fn choose_mode(t: &JoinTree, form: &AggregationForm) -> Mode {
    if !set_safety(form).is_safe() || t.is_empty() {
        return Mode::FullEnum;
    }
    if !guard_nodes(t, &form.projection).is_empty() {
        return Mode::ZeroMa;
    }
    if covering_subtree(t, &form.projection).1.len() < t.len() {
        Mode::Partial
    } else {
        Mode::FullEnum
    }
}

/// Re-root the tree for `mode`: at the guard for ZeroMa, inside the covering
/// subtree for Partial, unchanged otherwise.
pub fn select_root(
    t: &JoinTree,
    form: &AggregationForm,
    mode: Mode,
    preferred_guard: Option<&str>,
) -> Result<JoinTree, PlanError> {
    if t.is_empty() {
        return Err(PlanError::EmptyTree);
    }
    match mode {
        Mode::FullEnum => Ok(t.clone()),
        Mode::ZeroMa => {
            let guards = guard_nodes(t, &form.projection);
            let root = match preferred_guard {
                Some(g) if guards.iter().any(|x| x == g) => g.to_owned(),
                Some(g) => return Err(PlanError::GuardNotInTree(g.to_owned())),
                None => guards
                    .first()
                    .cloned()
                    .ok_or_else(|| PlanError::GuardNotInTree("(none)".into()))?,
            };
            Ok(t.rerooted(&root))
        }
        Mode::Partial => {
            let (root, _) = covering_subtree(t, &form.projection);
            Ok(t.rerooted(&root))
        }
    }
}

/// Scan of `atom` with its selections and repeated-variable filters.
pub fn atom_scan(atom: &Atom, cq: &ConjunctiveQuery) -> AtomScan {
    let mut columns = Vec::new();
    let mut filters = Vec::new();
    for var in atom.vars() {
        let first = atom
            .attribute_for(&var)
            .expect("variable of this atom")
            .to_owned();
        for (attr, v) in &atom.attributes {
            if *v == var && *attr != first {
                filters.push(ScanFilter::SameVar {
                    left: first.clone(),
                    right: attr.clone(),
                });
            }
        }
        columns.push((first, var));
    }
    for s in cq.selections_for(&atom.id) {
        filters.push(ScanFilter::Compare {
            attribute: s.attribute.clone(),
            op: s.op,
            value: s.value.clone(),
        });
    }
    AtomScan {
        atom: atom.id.clone(),
        relation: atom.relation.clone(),
        columns,
        filters,
    }
}

fn sorted(set: &BTreeSet<Var>) -> Vec<Var> {
    set.iter().cloned().collect()
}

fn shared(a: &[Var], b: &[Var]) -> Vec<Var> {
    a.iter().filter(|v| b.contains(v)).cloned().collect()
}

/// Greedy bottom-up partition of the subtree at `u` (within `scope`) into
/// connected groups of at most `cap` nodes. Closed groups are appended to
/// `closed`; the open group containing `u` is returned.
fn open_group(
    t: &JoinTree,
    scope: &BTreeSet<String>,
    u: &str,
    cap: usize,
    closed: &mut Vec<Vec<String>>,
) -> Vec<String> {
    let mut child_groups: Vec<Vec<String>> = t
        .children(u)
        .filter(|c| scope.contains(*c))
        .map(|c| open_group(t, scope, c, cap, closed))
        .collect();
    let mut total = 1 + child_groups.iter().map(Vec::len).sum::<usize>();
    while total > cap {
        // Close the largest child group; the earliest child wins ties.
        let (idx, _) = child_groups
            .iter()
            .enumerate()
            .max_by_key(|(i, g)| (g.len(), std::cmp::Reverse(*i)))
            .expect("over the cap implies a child group");
        let g = child_groups.remove(idx);
        total -= g.len();
        closed.push(g);
    }
    let mut group = vec![u.to_owned()];
    group.extend(child_groups.into_iter().flatten());
    group
}

/// Join groups for the nodes of `scope`, in the order they are closed.
pub fn join_groups(t: &JoinTree, scope: &BTreeSet<String>, cap: usize) -> Vec<Vec<String>> {
    let mut closed = Vec::new();
    let last = open_group(t, scope, t.root(), cap, &mut closed);
    closed.push(last);
    let order = t.pre_order();
    for g in &mut closed {
        g.sort_by_key(|n| order.iter().position(|o| o == n));
    }
    closed
}

/// Compile a rooted join tree into the staged plan for `mode`.
pub fn build_plan(
    t: &JoinTree,
    form: &AggregationForm,
    mode: Mode,
    cap: usize,
) -> Result<StagePlan, PlanError> {
    if cap == 0 {
        return Err(PlanError::InvalidCap);
    }
    if t.is_empty() {
        return Err(PlanError::EmptyTree);
    }
    let cq = &form.query;
    let s = &form.projection;
    let safety = set_safety(form);
    match mode {
        Mode::ZeroMa if !safety.is_safe() => {
            return Err(PlanError::ModeMismatch {
                mode,
                reason: format!("set-safe: {safety}"),
            })
        }
        Mode::ZeroMa if !s.is_subset(t.attrs(t.root())) => {
            return Err(PlanError::ModeMismatch {
                mode,
                reason: format!("root {} does not hold every projected variable", t.root()),
            })
        }
        Mode::Partial if !safety.is_safe() => {
            return Err(PlanError::ModeMismatch {
                mode,
                reason: format!("set-safe: {safety}"),
            })
        }
        _ => {}
    }

    let mut finalize = Finalize {
        input: None,
        projection: sorted(s),
        distinct_input: mode != Mode::FullEnum,
        grouping: form.grouping.clone(),
        columns: cq.output.clone(),
        having: form.having.clone(),
        distinct_output: cq.distinct,
        boolean: cq.is_boolean(),
    };
    let scope: BTreeSet<String> = match mode {
        Mode::FullEnum => t.ids().cloned().collect(),
        Mode::ZeroMa => BTreeSet::from([t.root().to_owned()]),
        Mode::Partial => {
            let (root, k) = covering_subtree(t, s);
            if !k.contains(t.root()) {
                return Err(PlanError::ModeMismatch {
                    mode,
                    reason: format!(
                        "root {} lies outside the covering subtree rooted at {root}",
                        t.root()
                    ),
                });
            }
            k
        }
    };

    let mut occurrences: BTreeMap<&Var, usize> = BTreeMap::new();
    for id in t.ids() {
        for v in t.attrs(id) {
            *occurrences.entry(v).or_default() += 1;
        }
    }
    let keep = |v: &Var| occurrences.get(v).copied().unwrap_or(0) > 1 || s.contains(v);

    let mut statements = Vec::new();
    let mut latest: BTreeMap<String, (String, Vec<Var>)> = BTreeMap::new();

    for u in t.pre_order() {
        let node = t.node(&u).expect("node of the tree");
        let atom = |id: &String| {
            cq.atom(id)
                .ok_or_else(|| PlanError::UnknownAtom(id.clone()))
        };
        let (scans, distinct) = match &node.label {
            NodeLabel::BaseAtom(id) => (vec![atom_scan(atom(id)?, cq)], Vec::new()),
            NodeLabel::View(view) => {
                let scans = view
                    .owned
                    .iter()
                    .map(|id| atom(id).map(|a| atom_scan(a, cq)))
                    .collect::<Result<_, _>>()?;
                let distinct = if view.filter_atoms().is_empty() {
                    Vec::new()
                } else {
                    vec![DistinctSource {
                        scans: view
                            .cover
                            .iter()
                            .map(|id| atom(id).map(|a| atom_scan(a, cq)))
                            .collect::<Result<_, _>>()?,
                        vars: sorted(&view.bag),
                    }]
                };
                (scans, distinct)
            }
        };
        let output: Vec<Var> = node.attrs.iter().filter(|v| keep(v)).cloned().collect();
        let name = format!("{u}_setup");
        latest.insert(u.clone(), (name.clone(), output.clone()));
        statements.push(PlanStatement {
            stage: Stage::Setup,
            kind: ObjectKind::View,
            name,
            node: Some(u.clone()),
            body: StatementBody::Setup {
                scans,
                distinct,
                output: output.clone(),
            },
            schema: output,
        });
    }

    for u in t.post_order() {
        if t.is_leaf(&u) {
            continue;
        }
        let (input, schema) = latest[&u].clone();
        let reducers = t
            .children(&u)
            .map(|c| {
                let (handle, child_schema) = &latest[c];
                Reducer {
                    handle: handle.clone(),
                    keys: shared(&schema, child_schema),
                }
            })
            .collect();
        let name = format!("{u}_sjup");
        latest.insert(u.clone(), (name.clone(), schema.clone()));
        statements.push(PlanStatement {
            stage: Stage::SemijoinUp,
            kind: ObjectKind::Temp,
            name,
            node: Some(u),
            body: StatementBody::SemiJoin { input, reducers },
            schema,
        });
    }

    if mode == Mode::ZeroMa {
        finalize.input = Some(latest[t.root()].0.clone());
    } else {
        for c in t.pre_order() {
            let Some(p) = t.parent(&c) else { continue };
            if !scope.contains(&c) {
                continue;
            }
            let (input, schema) = latest[&c].clone();
            let (parent_handle, parent_schema) = &latest[p];
            let reducer = Reducer {
                handle: parent_handle.clone(),
                keys: shared(&schema, parent_schema),
            };
            let name = format!("{c}_sjdown");
            latest.insert(c.clone(), (name.clone(), schema.clone()));
            statements.push(PlanStatement {
                stage: Stage::SemijoinDown,
                kind: ObjectKind::Temp,
                name,
                node: Some(c),
                body: StatementBody::SemiJoin {
                    input,
                    reducers: vec![reducer],
                },
                schema,
            });
        }

        if scope.len() == 1 {
            finalize.input = Some(latest[t.root()].0.clone());
        } else {
            let groups = join_groups(t, &scope, cap);
            let mut group_handles = Vec::new();
            for (k, group) in groups.iter().enumerate() {
                let outside: BTreeSet<&Var> = scope
                    .iter()
                    .filter(|n| !group.contains(n))
                    .flat_map(|n| latest[n].1.iter())
                    .collect();
                let inner: BTreeSet<&Var> = group.iter().flat_map(|n| latest[n].1.iter()).collect();
                let output: Vec<Var> = inner
                    .into_iter()
                    .filter(|v| s.contains(*v) || outside.contains(v))
                    .cloned()
                    .collect();
                let name = format!("group{}_join", k + 1);
                statements.push(PlanStatement {
                    stage: Stage::Join,
                    kind: ObjectKind::Temp,
                    name: name.clone(),
                    node: None,
                    body: StatementBody::Join {
                        inputs: group.iter().map(|n| latest[n].0.clone()).collect(),
                        output: output.clone(),
                    },
                    schema: output,
                });
                group_handles.push(name);
            }
            let joined = if group_handles.len() == 1 {
                group_handles.pop().unwrap()
            } else {
                let output = sorted(s);
                statements.push(PlanStatement {
                    stage: Stage::Join,
                    kind: ObjectKind::Temp,
                    name: "final_join".into(),
                    node: None,
                    body: StatementBody::Join {
                        inputs: group_handles,
                        output: output.clone(),
                    },
                    schema: output,
                });
                "final_join".into()
            };
            finalize.input = Some(joined);
        }
    }

    let mut warnings: Vec<String> = t
        .cross_product_edges()
        .into_iter()
        .map(|(p, c)| {
            format!("{p} and {c} share no variable; they are combined as a cross product")
        })
        .collect();
    if cq.statically_empty {
        warnings.push("conflicting equality constants: the result is empty".into());
    }
    Ok(StagePlan {
        mode,
        root: Some(t.root().to_owned()),
        scope,
        statements,
        finalize,
        warnings,
    })
}
