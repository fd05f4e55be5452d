//! Conflict graphs, difference sets, approximate vertex covers and the
//! data-change bound `δ_P = α · |cover|`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::attrs::AttrSet;
use crate::fd::{Fd, FdSet};
use crate::relation::{violations, TupleId, VInstance};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConflictEdge {
    pub a: TupleId,
    pub b: TupleId,
    /// Indices of the violated FDs, ascending and non-empty.
    pub label: Vec<usize>,
}

/// Tuples as vertices, one labeled edge per violating pair (`a < b`),
/// sorted by `(a, b)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConflictGraph {
    pub vertex_count: usize,
    pub edges: Vec<ConflictEdge>,
}

impl ConflictGraph {
    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn edge_pairs(&self) -> impl Iterator<Item = (TupleId, TupleId)> + '_ {
        self.edges.iter().map(|e| (e.a, e.b))
    }
}

pub fn build_conflict_graph(instance: &VInstance, fds: &FdSet) -> ConflictGraph {
    let mut edges: Vec<ConflictEdge> = Vec::new();
    for v in violations(instance, fds) {
        match edges.last_mut() {
            Some(e) if e.a == v.first && e.b == v.second => e.label.push(v.fd),
            _ => edges.push(ConflictEdge {
                a: v.first,
                b: v.second,
                label: vec![v.fd],
            }),
        }
    }
    ConflictGraph {
        vertex_count: instance.len(),
        edges,
    }
}

/// An edge with difference set `d` violates `X -> A` exactly when the pair
/// agrees on all of `X` and disagrees on `A`.
pub fn diffset_violates(d: AttrSet, fd: &Fd) -> bool {
    fd.lhs.is_disjoint(d) && d.contains(fd.rhs)
}

/// True when `d` violates at least one FD of `fds`.
pub fn diffset_violates_any(d: AttrSet, fds: &FdSet) -> bool {
    fds.iter().any(|fd| diffset_violates(d, fd))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiffGroup {
    pub diffset: AttrSet,
    /// Sorted `(a, b)` pairs with `a < b`.
    pub edges: Vec<(TupleId, TupleId)>,
}

impl DiffGroup {
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }
}

/// Conflict edges grouped by difference set, in canonical set order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DifferenceCatalog {
    pub entries: Vec<DiffGroup>,
}

impl DifferenceCatalog {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.entries.iter().map(DiffGroup::edge_count).sum()
    }

    pub fn get(&self, diffset: AttrSet) -> Option<&DiffGroup> {
        self.entries
            .binary_search_by(|g| g.diffset.cmp(&diffset))
            .ok()
            .map(|i| &self.entries[i])
    }
}

pub fn difference_sets(instance: &VInstance, graph: &ConflictGraph) -> DifferenceCatalog {
    let mut groups: BTreeMap<AttrSet, Vec<(TupleId, TupleId)>> = BTreeMap::new();
    for e in &graph.edges {
        groups
            .entry(instance.difference_set(e.a, e.b))
            .or_default()
            .push((e.a, e.b));
    }
    DifferenceCatalog {
        entries: groups
            .into_iter()
            .map(|(diffset, edges)| DiffGroup { diffset, edges })
            .collect(),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VertexCover {
    /// Ascending tuple ids.
    pub cover: Vec<TupleId>,
}

impl VertexCover {
    pub fn len(&self) -> usize {
        self.cover.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cover.is_empty()
    }

    pub fn contains(&self, t: TupleId) -> bool {
        self.cover.binary_search(&t).is_ok()
    }
}

/// How the approximate vertex cover behind `δ_P` is computed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoverStrategy {
    /// Maximal matching in lexicographic edge order; both endpoints of every
    /// matched edge join the cover.
    Greedy,
    /// The greedy cover, then every vertex whose neighbours are all in the
    /// cover is dropped (ascending id order). Never larger than `Greedy`.
    #[default]
    Pruned,
}

/// Greedy matching over edges already sorted by `(a, b)`.
fn matching_cover<I>(vertex_count: usize, sorted_edges: I) -> (Vec<bool>, usize)
where
    I: IntoIterator<Item = (TupleId, TupleId)>,
{
    let mut in_cover = vec![false; vertex_count];
    let mut matched = 0;
    for (a, b) in sorted_edges {
        if !in_cover[a] && !in_cover[b] {
            in_cover[a] = true;
            in_cover[b] = true;
            matched += 1;
        }
    }
    (in_cover, matched)
}

fn collect(in_cover: &[bool]) -> VertexCover {
    VertexCover {
        cover: in_cover
            .iter()
            .enumerate()
            .filter_map(|(t, &c)| c.then_some(t))
            .collect(),
    }
}

/// Edge-greedy 2-approximate cover: take the lexicographically smallest
/// uncovered edge, add both endpoints, repeat.
pub fn greedy_vertex_cover(graph: &ConflictGraph) -> VertexCover {
    let (in_cover, _) = matching_cover(graph.vertex_count, graph.edge_pairs());
    collect(&in_cover)
}

/// Cover of the edge list `sorted_edges` under `strategy`.
pub fn cover_edges(
    vertex_count: usize,
    sorted_edges: &[(TupleId, TupleId)],
    strategy: CoverStrategy,
) -> VertexCover {
    let (mut in_cover, _) = matching_cover(vertex_count, sorted_edges.iter().copied());
    if strategy == CoverStrategy::Pruned {
        prune_redundant(&mut in_cover, sorted_edges);
    }
    collect(&in_cover)
}

pub fn vertex_cover(graph: &ConflictGraph, strategy: CoverStrategy) -> VertexCover {
    let edges: Vec<_> = graph.edge_pairs().collect();
    cover_edges(graph.vertex_count, &edges, strategy)
}

fn prune_redundant(in_cover: &mut [bool], edges: &[(TupleId, TupleId)]) {
    let mut offsets = vec![0usize; in_cover.len() + 1];
    for &(a, b) in edges {
        offsets[a + 1] += 1;
        offsets[b + 1] += 1;
    }
    for i in 1..offsets.len() {
        offsets[i] += offsets[i - 1];
    }
    let mut fill = offsets.clone();
    let mut adjacency = vec![0usize; offsets[in_cover.len()]];
    for &(a, b) in edges {
        adjacency[fill[a]] = b;
        fill[a] += 1;
        adjacency[fill[b]] = a;
        fill[b] += 1;
    }
    for v in 0..in_cover.len() {
        if in_cover[v] && adjacency[offsets[v]..offsets[v + 1]].iter().all(|&u| in_cover[u]) {
            in_cover[v] = false;
        }
    }
}

/// A lower bound on the cover size `strategy` would report for any graph
/// containing `sorted_edges`.
///
/// The greedy matching size `m` bounds the optimum cover of these edges from
/// below, and the optimum only grows with more edges. Greedy covers are
/// always even, so for them `m` rounds up to the next even number.
pub fn cover_lower_bound(
    vertex_count: usize,
    sorted_edges: impl IntoIterator<Item = (TupleId, TupleId)>,
    strategy: CoverStrategy,
) -> usize {
    let (_, matched) = matching_cover(vertex_count, sorted_edges);
    match strategy {
        CoverStrategy::Greedy => matched + (matched & 1),
        CoverStrategy::Pruned => matched,
    }
}

/// `α = min{|R| - 1, |Σ|}` with `|Σ|` the original FD count.
pub fn alpha(width: usize, original_fd_count: usize) -> u64 {
    width.saturating_sub(1).min(original_fd_count) as u64
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DataBound {
    pub delta_p: u64,
    pub cover: VertexCover,
}

/// `δ_P(Σ', I) = α · |cover(conflict graph of I and Σ')|`.
pub fn delta_p(
    fds: &FdSet,
    instance: &VInstance,
    alpha: u64,
    strategy: CoverStrategy,
) -> DataBound {
    let graph = build_conflict_graph(instance, fds);
    let cover = vertex_cover(&graph, strategy);
    DataBound {
        delta_p: alpha * cover.len() as u64,
        cover,
    }
}

#[derive(Debug, Serialize)]
pub struct GraphDump {
    pub vertices: usize,
    pub edges: Vec<EdgeDump>,
    pub difference_sets: Vec<DiffSetDump>,
}

#[derive(Debug, Serialize)]
pub struct EdgeDump {
    pub tuples: [TupleId; 2],
    pub violated: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct DiffSetDump {
    pub attributes: Vec<String>,
    pub edges: usize,
}

/// Debug view of a conflict graph and its difference catalog.
pub fn dump(instance: &VInstance, fds: &FdSet) -> GraphDump {
    let schema = instance.schema();
    let graph = build_conflict_graph(instance, fds);
    let catalog = difference_sets(instance, &graph);
    GraphDump {
        vertices: graph.vertex_count,
        edges: graph
            .edges
            .iter()
            .map(|e| EdgeDump {
                tuples: [e.a, e.b],
                violated: e.label.iter().map(|&i| fds.get(i).render(schema)).collect(),
            })
            .collect(),
        difference_sets: catalog
            .entries
            .iter()
            .map(|g| DiffSetDump {
                attributes: schema.set_names(g.diffset),
                edges: g.edge_count(),
            })
            .collect(),
    }
}
