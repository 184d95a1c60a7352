//! Heterogeneous information network: typed nodes, typed relations,
//! meta-path composition and network-schema neighborhoods.
//!
//! Nodes are addressed per type by dense indices `0..count`. A *global*
//! index concatenates the types in declaration order, so `global_index`
//! and `type_of` realize the node-type mapping.

use std::collections::VecDeque;

use crate::csr::Csr;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeType {
    pub name: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    pub name: String,
    pub src_type: usize,
    pub dst_type: usize,
    /// `(src_index, dst_index)` pairs, per-type indices.
    pub edges: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hin {
    types: Vec<NodeType>,
    relations: Vec<Relation>,
    target_type: usize,
    offsets: Vec<usize>,
}

impl Hin {
    pub fn new(types: Vec<NodeType>, relations: Vec<Relation>, target_type: &str) -> Result<Self> {
        for (i, t) in types.iter().enumerate() {
            if types[..i].iter().any(|u| u.name == t.name) {
                return Err(Error::Graph(format!("duplicate node type {:?}", t.name)));
            }
        }
        for (i, r) in relations.iter().enumerate() {
            if relations[..i].iter().any(|q| q.name == r.name) {
                return Err(Error::Graph(format!("duplicate relation {:?}", r.name)));
            }
            if r.src_type >= types.len() || r.dst_type >= types.len() {
                return Err(Error::Graph(format!("relation {:?} references an unknown type", r.name)));
            }
            let (ns, nd) = (types[r.src_type].count, types[r.dst_type].count);
            if let Some(&(s, d)) = r.edges.iter().find(|&&(s, d)| s >= ns || d >= nd) {
                return Err(Error::Graph(format!(
                    "relation {:?}: edge ({s}, {d}) out of range for {} x {} nodes",
                    r.name, ns, nd
                )));
            }
        }
        if types.len() + relations.len() <= 2 {
            return Err(Error::Graph(format!(
                "not heterogeneous: {} node types + {} relations must exceed 2",
                types.len(),
                relations.len()
            )));
        }
        let target = types
            .iter()
            .position(|t| t.name == target_type)
            .ok_or_else(|| Error::Graph(format!("unknown target type {target_type:?}")))?;
        let mut offsets = Vec::with_capacity(types.len() + 1);
        let mut acc = 0;
        for t in &types {
            offsets.push(acc);
            acc += t.count;
        }
        offsets.push(acc);
        Ok(Hin { types, relations, target_type: target, offsets })
    }

    pub fn types(&self) -> &[NodeType] {
        &self.types
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn target_type(&self) -> usize {
        self.target_type
    }

    pub fn target_count(&self) -> usize {
        self.types[self.target_type].count
    }

    pub fn type_index(&self, name: &str) -> Option<usize> {
        self.types.iter().position(|t| t.name == name)
    }

    pub fn relation_index(&self, name: &str) -> Option<usize> {
        self.relations.iter().position(|r| r.name == name)
    }

    pub fn node_count(&self, ty: usize) -> usize {
        self.types[ty].count
    }

    pub fn total_nodes(&self) -> usize {
        self.offsets[self.types.len()]
    }

    /// Start of each type's block in the global index space.
    pub fn type_offset(&self, ty: usize) -> usize {
        self.offsets[ty]
    }

    pub fn global_index(&self, ty: usize, index: usize) -> usize {
        debug_assert!(index < self.types[ty].count);
        self.offsets[ty] + index
    }

    /// Inverse of [`Hin::global_index`]: `(type, per-type index)`.
    pub fn type_of(&self, global: usize) -> (usize, usize) {
        let ty = self.offsets.partition_point(|&o| o <= global) - 1;
        (ty, global - self.offsets[ty])
    }

    /// Adjacency of one relation traversed forward (src -> dst) or reversed.
    /// Rows index the traversal's source type.
    pub fn relation_csr(&self, relation: usize, reversed: bool) -> Csr {
        let r = &self.relations[relation];
        let (rows, cols) = (self.types[r.src_type].count, self.types[r.dst_type].count);
        if reversed {
            Csr::from_pairs(cols, rows, r.edges.iter().map(|&(s, d)| (d, s)))
        } else {
            Csr::from_pairs(rows, cols, r.edges.iter().copied())
        }
    }

    fn step_types(&self, step: Step) -> (usize, usize) {
        let r = &self.relations[step.relation];
        if step.reversed {
            (r.dst_type, r.src_type)
        } else {
            (r.src_type, r.dst_type)
        }
    }
}

/// One traversal of a relation inside a meta-path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Step {
    pub relation: usize,
    /// Traverse dst -> src.
    pub reversed: bool,
}

/// A composite relation between target-type nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetaPath {
    name: String,
    steps: Vec<Step>,
}

impl MetaPath {
    /// Validates type compatibility of the step sequence against `hin`.
    pub fn new(hin: &Hin, name: impl Into<String>, steps: Vec<Step>) -> Result<Self> {
        let mp = MetaPath { name: name.into(), steps };
        mp.validate(hin)?;
        Ok(mp)
    }

    /// Parses a whitespace-separated relation sequence; a `^-1` suffix
    /// traverses the relation in reverse, e.g. `"PA PA^-1"`.
    pub fn parse(hin: &Hin, name: &str, text: &str) -> Result<Self> {
        let mut steps = Vec::new();
        for (i, tok) in text.split_whitespace().enumerate() {
            let (rel, reversed) = match tok.strip_suffix("^-1") {
                Some(r) => (r, true),
                None => (tok, false),
            };
            let relation = hin.relation_index(rel).ok_or_else(|| Error::MetaPath {
                name: name.to_string(),
                step: i,
                detail: format!("unknown relation {rel:?}"),
            })?;
            steps.push(Step { relation, reversed });
        }
        MetaPath::new(hin, name, steps)
    }

    pub fn validate(&self, hin: &Hin) -> Result<()> {
        let err = |step, detail: String| Error::MetaPath { name: self.name.clone(), step, detail };
        if self.steps.is_empty() {
            return Err(err(0, "empty relation sequence".into()));
        }
        let target = hin.target_type();
        let mut cur = target;
        for (i, &s) in self.steps.iter().enumerate() {
            if s.relation >= hin.relations().len() {
                return Err(err(i, format!("relation index {} out of range", s.relation)));
            }
            let (from, to) = hin.step_types(s);
            if from != cur {
                return Err(err(
                    i,
                    format!(
                        "relation {} starts at type {} but the path is at type {}",
                        hin.relations()[s.relation].name,
                        hin.types()[from].name,
                        hin.types()[cur].name
                    ),
                ));
            }
            cur = to;
        }
        if cur != target {
            return Err(err(
                self.steps.len() - 1,
                format!("path ends at type {}, expected target type {}", hin.types()[cur].name, hin.types()[target].name),
            ));
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    /// Reading the path backwards gives the same relation sequence.
    pub fn is_palindromic(&self) -> bool {
        let n = self.steps.len();
        (0..n).all(|i| {
            let (a, b) = (self.steps[i], self.steps[n - 1 - i]);
            a.relation == b.relation && a.reversed != b.reversed
        })
    }

    /// Inverse of [`MetaPath::parse`].
    pub fn describe(&self, hin: &Hin) -> String {
        self.steps
            .iter()
            .map(|s| {
                let name = &hin.relations()[s.relation].name;
                if s.reversed {
                    format!("{name}^-1")
                } else {
                    name.clone()
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Meta-path based neighbors of every target node: row `v` holds the sorted,
/// deduplicated set of target nodes `u != v` reachable by an instance of the
/// meta-path starting at `v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetaPathAdjacency {
    pub name: String,
    pub csr: Csr,
}

impl MetaPathAdjacency {
    pub fn neighbors(&self, v: usize) -> &[usize] {
        self.csr.row(v)
    }

    pub fn n_nodes(&self) -> usize {
        self.csr.n_rows()
    }
}

/// Composes the relation sequence of `mp` with set semantics.
pub fn compose_metapath_adjacency(hin: &Hin, mp: &MetaPath) -> Result<MetaPathAdjacency> {
    mp.validate(hin)?;
    let hops: Vec<Csr> = mp.steps().iter().map(|s| hin.relation_csr(s.relation, s.reversed)).collect();
    let n = hin.target_count();
    // One visit stamp per step level avoids clearing between source nodes.
    let mut stamps: Vec<Vec<usize>> = hops.iter().map(|h| vec![usize::MAX; h.n_cols()]).collect();
    let mut rows = Vec::with_capacity(n);
    let mut frontier = Vec::new();
    let mut next = Vec::new();
    for v in 0..n {
        frontier.clear();
        frontier.push(v);
        for (level, hop) in hops.iter().enumerate() {
            next.clear();
            let stamp = &mut stamps[level];
            for &x in &frontier {
                for &y in hop.row(x) {
                    if stamp[y] != v {
                        stamp[y] = v;
                        next.push(y);
                    }
                }
            }
            std::mem::swap(&mut frontier, &mut next);
        }
        rows.push(frontier.iter().copied().filter(|&u| u != v).collect::<Vec<_>>());
    }
    Ok(MetaPathAdjacency { name: mp.name().to_string(), csr: Csr::from_rows(rows, n) })
}

/// Non-target nodes sharing a network-schema instance with each target node.
/// Columns are global node indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaNeighborhood {
    pub csr: Csr,
}

impl SchemaNeighborhood {
    pub fn neighbors(&self, v: usize) -> &[usize] {
        self.csr.row(v)
    }
}

/// Type-level expansion tree of the network schema rooted at the target
/// type: `(parent type, step, child type)` in breadth-first order. Every
/// non-target type reachable in the schema appears as a child exactly once
/// per level-relation leading to it.
pub fn schema_tree(hin: &Hin) -> Vec<(usize, Step, usize)> {
    let nt = hin.types().len();
    let mut visited = vec![false; nt];
    visited[hin.target_type()] = true;
    let mut level = vec![hin.target_type()];
    let mut tree = Vec::new();
    while !level.is_empty() {
        let mut found = Vec::new();
        for &t in &level {
            for (ri, r) in hin.relations().iter().enumerate() {
                for (reversed, from, to) in [(false, r.src_type, r.dst_type), (true, r.dst_type, r.src_type)] {
                    if from == t && !visited[to] {
                        tree.push((t, Step { relation: ri, reversed }, to));
                        if !found.contains(&to) {
                            found.push(to);
                        }
                    }
                }
            }
        }
        for &t in &found {
            visited[t] = true;
        }
        level = found;
    }
    tree
}

/// Expands every target node along [`schema_tree`].
pub fn schema_neighbors(hin: &Hin) -> SchemaNeighborhood {
    let tree = schema_tree(hin);
    let hops: Vec<Csr> = tree.iter().map(|&(_, s, _)| hin.relation_csr(s.relation, s.reversed)).collect();
    let nt = hin.types().len();
    let target = hin.target_type();
    let mut stamp: Vec<Vec<usize>> = (0..nt).map(|t| vec![usize::MAX; hin.node_count(t)]).collect();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); nt];
    let mut rows = Vec::with_capacity(hin.target_count());
    for v in 0..hin.target_count() {
        for m in members.iter_mut() {
            m.clear();
        }
        members[target].push(v);
        for (&(parent, _, child), hop) in tree.iter().zip(&hops) {
            let (src, dst) = if parent < child {
                let (a, b) = members.split_at_mut(child);
                (&a[parent], &mut b[0])
            } else {
                let (a, b) = members.split_at_mut(parent);
                (&b[0], &mut a[child])
            };
            for &x in src.iter() {
                for &y in hop.row(x) {
                    if stamp[child][y] != v {
                        stamp[child][y] = v;
                        dst.push(y);
                    }
                }
            }
        }
        let mut row = Vec::new();
        for (t, m) in members.iter().enumerate() {
            if t != target {
                row.extend(m.iter().map(|&i| hin.global_index(t, i)));
            }
        }
        rows.push(row);
    }
    SchemaNeighborhood { csr: Csr::from_rows(rows, hin.total_nodes()) }
}

/// Undirected union of all meta-path adjacencies over the target nodes.
pub fn union_graph(adjs: &[MetaPathAdjacency]) -> Csr {
    let n = adjs.first().map_or(0, |a| a.n_nodes());
    let rows = (0..n).map(|v| adjs.iter().flat_map(|a| a.neighbors(v).iter().copied()).collect::<Vec<_>>());
    Csr::from_rows(rows, n).symmetrize()
}

/// Multi-source breadth-first hop counts; `None` when unreachable.
pub fn bfs_distances(graph: &Csr, sources: &[usize]) -> Vec<Option<usize>> {
    let mut dist = vec![None; graph.n_rows()];
    let mut queue = VecDeque::new();
    for &s in sources {
        if dist[s].is_none() {
            dist[s] = Some(0);
            queue.push_back(s);
        }
    }
    while let Some(x) = queue.pop_front() {
        let d = dist[x].unwrap() + 1;
        for &y in graph.row(x) {
            if dist[y].is_none() {
                dist[y] = Some(d);
                queue.push_back(y);
            }
        }
    }
    dist
}

/// Hop count from `v` to the nearest member of `sources`; `None` is infinity.
pub fn hop_distance(graph: &Csr, sources: &[usize], v: usize) -> Option<usize> {
    // Search outward from v; the graph is undirected.
    let mut is_source = vec![false; graph.n_rows()];
    for &s in sources {
        is_source[s] = true;
    }
    if is_source[v] {
        return Some(0);
    }
    let mut dist = vec![usize::MAX; graph.n_rows()];
    dist[v] = 0;
    let mut queue = VecDeque::from([v]);
    while let Some(x) = queue.pop_front() {
        for &y in graph.row(x) {
            if dist[y] == usize::MAX {
                dist[y] = dist[x] + 1;
                if is_source[y] {
                    return Some(dist[y]);
                }
                queue.push_back(y);
            }
        }
    }
    None
}

/// Largest finite hop distance between any two nodes (0 for edgeless graphs).
pub fn diameter(graph: &Csr) -> usize {
    (0..graph.n_rows())
        .map(|s| bfs_distances(graph, &[s]).into_iter().flatten().max().unwrap_or(0))
        .max()
        .unwrap_or(0)
}
