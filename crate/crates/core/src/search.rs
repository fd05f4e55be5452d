//! The space of LHS extensions, its unique-parent search tree, the gc
//! lower bound and the A* / best-first searches for a goal extension.
//!
//! A state is an [`ExtensionVector`]; it is a goal for budget `τ` when
//! `δ_P(Σ(state), I) ≤ τ`. Every search here returns the goal of least
//! `dist_c`, ties broken by smaller `δ_P` and then by extension order.

use std::cell::RefCell;
use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};

use crate::attrs::{AttrId, AttrSet};
use crate::conflict::{
    alpha, build_conflict_graph, cover_edges, cover_lower_bound, diffset_violates, difference_sets,
    CoverStrategy, DataBound, DiffGroup, DifferenceCatalog,
};
use crate::error::Result;
use crate::fd::{apply_extension, dist_c, ExtensionVector, Fd, FdSet, WeightFn};
use crate::relation::{TupleId, VInstance};

pub const DEFAULT_HEURISTIC_K: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Number of difference sets the gc bound looks at.
    pub k: usize,
    pub cover: CoverStrategy,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            k: DEFAULT_HEURISTIC_K,
            cover: CoverStrategy::default(),
        }
    }
}

/// Counters of one search run. `visited` counts popped states, `expanded`
/// those that pushed at least one child.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    pub visited: u64,
    pub expanded: u64,
    pub generated: u64,
    pub pruned: u64,
    pub gc_evaluations: u64,
}

impl std::ops::AddAssign for SearchStats {
    fn add_assign(&mut self, o: SearchStats) {
        self.visited += o.visited;
        self.expanded += o.expanded;
        self.generated += o.generated;
        self.pruned += o.pruned;
        self.gc_evaluations += o.gc_evaluations;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchState {
    pub extension: ExtensionVector,
    pub cost: f64,
    /// Lower bound on the cheapest goal at or below this state; may be `+∞`.
    pub gc: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GoalTest {
    pub tau: u64,
    pub alpha: u64,
}

impl GoalTest {
    pub fn is_goal(&self, delta_p: u64) -> bool {
        delta_p <= self.tau
    }
}

/// A goal extension with its data-side bound.
#[derive(Clone, Debug, PartialEq)]
pub struct FdModification {
    pub extension: ExtensionVector,
    pub fds: FdSet,
    pub cost: f64,
    pub delta_p: u64,
}

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub goal: Option<FdModification>,
    pub stats: SearchStats,
}

/// Children of `ext` in the search tree.
///
/// Let `g` be the greatest attribute appended anywhere and `j` the last FD
/// whose extension holds `g`. A child appends `B` to FD `i` when `B > g`, or
/// `B = g` and `i > j`, and `B` is not already used by FD `i`.
pub fn tree_children(fds: &FdSet, width: usize, ext: &ExtensionVector) -> Vec<ExtensionVector> {
    let last = last_greatest(ext);
    let mut out = Vec::new();
    for (i, fd) in fds.iter().enumerate() {
        let used = fd.own_attrs().union(ext.get(i));
        for b in 0..width {
            if used.contains(b) {
                continue;
            }
            let allowed = match last {
                None => true,
                Some((g, j)) => b > g || (b == g && i > j),
            };
            if allowed {
                out.push(ext.with_attr(i, b));
            }
        }
    }
    out
}

/// Unique parent: drop the greatest appended attribute from the last FD
/// holding it.
pub fn tree_parent(ext: &ExtensionVector) -> Option<ExtensionVector> {
    last_greatest(ext).map(|(g, j)| ext.without_attr(j, g))
}

fn last_greatest(ext: &ExtensionVector) -> Option<(AttrId, usize)> {
    let g = ext.union_all().max()?;
    let j = (0..ext.len()).rev().find(|&i| ext.get(i).contains(g))?;
    Some((g, j))
}

/// Picks up to `k` difference sets, favouring large edge counts and small
/// pairwise overlap.
pub fn select_diffset_subset(catalog: &DifferenceCatalog, k: usize) -> Vec<AttrSet> {
    let all: Vec<usize> = (0..catalog.len()).collect();
    select_indices(&catalog.entries, &all, k)
        .into_iter()
        .map(|i| catalog.entries[i].diffset)
        .collect()
}

fn select_indices(groups: &[DiffGroup], candidates: &[usize], k: usize) -> Vec<usize> {
    let mut order = candidates.to_vec();
    // Catalog entries are already in canonical order, so index breaks ties.
    order.sort_by_key(|&i| (Reverse(groups[i].edge_count()), i));
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    for &i in &order {
        if chosen.len() == k {
            break;
        }
        let d = groups[i].diffset;
        let small_overlap = chosen.iter().all(|&j| {
            let e = groups[j].diffset;
            2 * d.intersection(e).len() <= d.len().min(e.len())
        });
        if small_overlap {
            chosen.push(i);
        }
    }
    if chosen.len() < k {
        for &i in &order {
            if chosen.len() == k {
                break;
            }
            if !chosen.contains(&i) {
                chosen.push(i);
            }
        }
        let rank: HashMap<usize, usize> = order.iter().enumerate().map(|(r, &i)| (i, r)).collect();
        chosen.sort_by_key(|i| rank[i]);
    }
    chosen
}

/// Shared, cached view of one repair problem `(Σ, I, w)`.
///
/// Relaxing an FD never adds conflict edges, so every edge of any `Σ(ext)`
/// already appears in the catalog of `Σ`, and whether it survives depends
/// only on its difference set.
pub struct SearchSpace<'a> {
    fds: &'a FdSet,
    instance: &'a VInstance,
    weight: &'a dyn WeightFn,
    config: SearchConfig,
    alpha: u64,
    catalog: DifferenceCatalog,
    delta_cache: RefCell<HashMap<ExtensionVector, u64>>,
}

impl<'a> SearchSpace<'a> {
    pub fn new(
        fds: &'a FdSet,
        instance: &'a VInstance,
        weight: &'a dyn WeightFn,
        config: SearchConfig,
    ) -> Result<Self> {
        fds.validate_for(instance.schema())?;
        let graph = build_conflict_graph(instance, fds);
        Ok(SearchSpace {
            fds,
            instance,
            weight,
            config: SearchConfig {
                k: config.k.max(1),
                ..config
            },
            alpha: alpha(instance.width(), fds.len()),
            catalog: difference_sets(instance, &graph),
            delta_cache: RefCell::new(HashMap::new()),
        })
    }

    pub fn fds(&self) -> &FdSet {
        self.fds
    }

    pub fn instance(&self) -> &VInstance {
        self.instance
    }

    pub fn config(&self) -> SearchConfig {
        self.config
    }

    pub fn alpha(&self) -> u64 {
        self.alpha
    }

    pub fn catalog(&self) -> &DifferenceCatalog {
        &self.catalog
    }

    pub fn root(&self) -> ExtensionVector {
        ExtensionVector::empty(self.fds.len())
    }

    pub fn cost(&self, ext: &ExtensionVector) -> f64 {
        dist_c(ext, self.weight)
    }

    pub fn children(&self, ext: &ExtensionVector) -> Vec<ExtensionVector> {
        tree_children(self.fds, self.instance.width(), ext)
    }

    /// `Σ(ext)`; `ext` must be valid for `Σ`.
    pub fn extended(&self, ext: &ExtensionVector) -> FdSet {
        apply_extension(self.fds, ext).expect("search states respect the FD invariant")
    }

    fn extended_fds(&self, ext: &ExtensionVector) -> Vec<Fd> {
        self.fds
            .iter()
            .zip(ext.sets())
            .map(|(fd, y)| Fd::new(fd.lhs.union(*y), fd.rhs))
            .collect()
    }

    fn violated_groups(&self, fds: &[Fd]) -> Vec<usize> {
        (0..self.catalog.len())
            .filter(|&i| {
                let d = self.catalog.entries[i].diffset;
                fds.iter().any(|fd| diffset_violates(d, fd))
            })
            .collect()
    }

    fn edges_of(&self, groups: &[usize]) -> Vec<(TupleId, TupleId)> {
        let mut edges: Vec<_> = groups
            .iter()
            .flat_map(|&i| self.catalog.entries[i].edges.iter().copied())
            .collect();
        edges.sort_unstable();
        edges
    }

    /// `δ_P(Σ(ext), I)` together with the cover behind it.
    pub fn bound(&self, ext: &ExtensionVector) -> DataBound {
        let groups = self.violated_groups(&self.extended_fds(ext));
        let cover = cover_edges(self.instance.len(), &self.edges_of(&groups), self.config.cover);
        DataBound {
            delta_p: self.alpha * cover.len() as u64,
            cover,
        }
    }

    pub fn delta_p(&self, ext: &ExtensionVector) -> u64 {
        if let Some(&d) = self.delta_cache.borrow().get(ext) {
            return d;
        }
        let d = self.bound(ext).delta_p;
        self.delta_cache.borrow_mut().insert(ext.clone(), d);
        d
    }

    /// Lower bound on the cost of the cheapest goal that extends `s`
    /// componentwise, or `+∞` when the bound proves there is none.
    pub fn compute_gc(&self, s: &ExtensionVector, tau: u64) -> f64 {
        let fds = self.extended_fds(s);
        let violated = self.violated_groups(&fds);
        let ds = select_indices(&self.catalog.entries, &violated, self.config.k);
        let mut best = f64::INFINITY;
        self.gc_search(s.clone(), self.cost(s), &[], &ds, tau, &mut best);
        best
    }

    fn gc_search(
        &self,
        sc: ExtensionVector,
        cost: f64,
        gc_edges: &[(TupleId, TupleId)],
        dc: &[usize],
        tau: u64,
        best: &mut f64,
    ) {
        if cost >= *best {
            return;
        }
        let Some((&d, rest)) = dc.split_first() else {
            *best = cost;
            return;
        };
        let group = &self.catalog.entries[d];

        // Leave d unresolved if the edges kept so far still fit the budget.
        let kept = merge_edges(gc_edges, &group.edges);
        if self.unresolved_fits(&kept, tau) {
            self.gc_search(sc.clone(), cost, &kept, rest, tau, best);
        }

        for next in self.resolutions(&sc, group.diffset) {
            let next_cost = self.cost(&next);
            if next_cost >= *best {
                continue;
            }
            let fds = self.extended_fds(&next);
            let remaining: Vec<usize> = rest
                .iter()
                .copied()
                .filter(|&i| {
                    let d = self.catalog.entries[i].diffset;
                    fds.iter().any(|fd| diffset_violates(d, fd))
                })
                .collect();
            self.gc_search(next, next_cost, gc_edges, &remaining, tau, best);
        }
    }

    // Admissible because a matching of a subgraph never exceeds the size of
    // any cover of the full graph.
    fn unresolved_fits(&self, edges: &[(TupleId, TupleId)], tau: u64) -> bool {
        let lb = cover_lower_bound(self.instance.len(), edges.iter().copied(), self.config.cover);
        self.alpha * lb as u64 <= tau
    }

    /// Every extension of `sc` that resolves difference set `d` by adding one
    /// attribute of `d` to each FD that `d` still violates.
    fn resolutions(&self, sc: &ExtensionVector, d: AttrSet) -> Vec<ExtensionVector> {
        let fds = self.extended_fds(sc);
        let mut out = vec![sc.clone()];
        for (i, fd) in fds.iter().enumerate() {
            if !diffset_violates(d, fd) {
                continue;
            }
            let options = d.without(fd.rhs);
            if options.is_empty() {
                return Vec::new();
            }
            out = out
                .iter()
                .flat_map(|e| options.iter().map(move |b| e.with_attr(i, b)))
                .collect();
        }
        out
    }

    /// Minimal goal candidates below `s` for the difference sets `dc`,
    /// enumerated without cost pruning. `compute_gc` is the least cost
    /// among them.
    pub fn desc_goal_states(
        &self,
        s: &ExtensionVector,
        dc: &[AttrSet],
        tau: u64,
    ) -> Vec<ExtensionVector> {
        let dc: Vec<usize> = dc
            .iter()
            .filter_map(|d| self.catalog.entries.iter().position(|g| g.diffset == *d))
            .collect();
        let mut states = Vec::new();
        self.collect_desc(s.clone(), &[], &dc, tau, &mut states);
        states.sort();
        states.dedup();
        let minimal: Vec<ExtensionVector> = states
            .iter()
            .filter(|x| !states.iter().any(|y| y != *x && x.extends(y)))
            .cloned()
            .collect();
        minimal
    }

    fn collect_desc(
        &self,
        sc: ExtensionVector,
        gc_edges: &[(TupleId, TupleId)],
        dc: &[usize],
        tau: u64,
        out: &mut Vec<ExtensionVector>,
    ) {
        let Some((&d, rest)) = dc.split_first() else {
            out.push(sc);
            return;
        };
        let group = &self.catalog.entries[d];
        let kept = merge_edges(gc_edges, &group.edges);
        if self.unresolved_fits(&kept, tau) {
            self.collect_desc(sc.clone(), &kept, rest, tau, out);
        }
        for next in self.resolutions(&sc, group.diffset) {
            let fds = self.extended_fds(&next);
            let remaining: Vec<usize> = rest
                .iter()
                .copied()
                .filter(|&i| fds.iter().any(|fd| diffset_violates(self.catalog.entries[i].diffset, fd)))
                .collect();
            self.collect_desc(next, gc_edges, &remaining, tau, out);
        }
    }

    /// Difference sets the gc bound of `s` would consider.
    pub fn selected_diffsets(&self, s: &ExtensionVector) -> Vec<AttrSet> {
        let violated = self.violated_groups(&self.extended_fds(s));
        select_indices(&self.catalog.entries, &violated, self.config.k)
            .into_iter()
            .map(|i| self.catalog.entries[i].diffset)
            .collect()
    }

    pub fn state(&self, ext: ExtensionVector, tau: u64) -> SearchState {
        SearchState {
            cost: self.cost(&ext),
            gc: self.compute_gc(&ext, tau),
            extension: ext,
        }
    }

    pub fn modification(&self, ext: ExtensionVector, cost: f64, delta_p: u64) -> FdModification {
        FdModification {
            fds: self.extended(&ext),
            extension: ext,
            cost,
            delta_p,
        }
    }
}

fn merge_edges(a: &[(TupleId, TupleId)], b: &[(TupleId, TupleId)]) -> Vec<(TupleId, TupleId)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Open-list entry, ordered by key, then cost, then appended attribute
/// count, then extension.
#[derive(Clone, Debug)]
pub(crate) struct OpenEntry {
    pub key: f64,
    pub cost: f64,
    pub ext: ExtensionVector,
}

impl OpenEntry {
    fn rank(&self, other: &Self) -> Ordering {
        self.key
            .total_cmp(&other.key)
            .then(self.cost.total_cmp(&other.cost))
            .then(self.ext.appended().cmp(&other.ext.appended()))
            .then_with(|| self.ext.cmp(&other.ext))
    }
}

impl PartialEq for OpenEntry {
    fn eq(&self, other: &Self) -> bool {
        self.rank(other) == Ordering::Equal
    }
}

impl Eq for OpenEntry {}

impl PartialOrd for OpenEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OpenEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank(other)
    }
}

pub(crate) type OpenList = BinaryHeap<Reverse<OpenEntry>>;

/// Best goal seen so far under (cost, δ_P, extension).
#[derive(Clone, Debug)]
pub(crate) struct Incumbent {
    pub cost: f64,
    pub delta_p: u64,
    pub ext: ExtensionVector,
}

impl Incumbent {
    pub fn offer(slot: &mut Option<Incumbent>, cost: f64, delta_p: u64, ext: &ExtensionVector) {
        let better = match slot {
            None => true,
            Some(b) => cost
                .total_cmp(&b.cost)
                .then(delta_p.cmp(&b.delta_p))
                .then_with(|| ext.cmp(&b.ext))
                .is_lt(),
        };
        if better {
            *slot = Some(Incumbent {
                cost,
                delta_p,
                ext: ext.clone(),
            });
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Heuristic,
    CostOnly,
}

fn key_for(space: &SearchSpace<'_>, mode: Mode, ext: &ExtensionVector, cost: f64, tau: u64, stats: &mut SearchStats) -> f64 {
    match mode {
        Mode::Heuristic => {
            stats.gc_evaluations += 1;
            space.compute_gc(ext, tau)
        }
        Mode::CostOnly => cost,
    }
}

fn run(space: &SearchSpace<'_>, tau: u64, mode: Mode) -> SearchOutcome {
    let mut stats = SearchStats::default();
    let mut open = OpenList::new();
    let root = space.root();
    let root_cost = space.cost(&root);
    let root_key = key_for(space, mode, &root, root_cost, tau, &mut stats);
    if root_key.is_finite() {
        open.push(Reverse(OpenEntry {
            key: root_key,
            cost: root_cost,
            ext: root,
        }));
    } else {
        stats.pruned += 1;
    }

    let mut best: Option<Incumbent> = None;
    while let Some(Reverse(entry)) = open.pop() {
        if best.as_ref().is_some_and(|b| entry.key > b.cost) {
            break;
        }
        stats.visited += 1;
        let dp = space.delta_p(&entry.ext);
        log::trace!(
            "pop {:?} key={} cost={} delta_p={}",
            entry.ext,
            entry.key,
            entry.cost,
            dp
        );
        if dp <= tau {
            Incumbent::offer(&mut best, entry.cost, dp, &entry.ext);
            continue;
        }
        let mut pushed = false;
        for child in space.children(&entry.ext) {
            stats.generated += 1;
            let cost = space.cost(&child);
            if best.as_ref().is_some_and(|b| cost > b.cost) {
                stats.pruned += 1;
                continue;
            }
            let key = key_for(space, mode, &child, cost, tau, &mut stats);
            if !key.is_finite() {
                stats.pruned += 1;
                continue;
            }
            open.push(Reverse(OpenEntry { key, cost, ext: child }));
            pushed = true;
        }
        if pushed {
            stats.expanded += 1;
        }
    }

    SearchOutcome {
        goal: best.map(|b| space.modification(b.ext, b.cost, b.delta_p)),
        stats,
    }
}

/// A* over the extension tree, ordered by the gc bound.
pub fn modify_fds_astar(
    fds: &FdSet,
    instance: &VInstance,
    tau: u64,
    weight: &dyn WeightFn,
    config: SearchConfig,
) -> Result<SearchOutcome> {
    let space = SearchSpace::new(fds, instance, weight, config)?;
    Ok(astar_in(&space, tau))
}

pub fn astar_in(space: &SearchSpace<'_>, tau: u64) -> SearchOutcome {
    run(space, tau, Mode::Heuristic)
}

/// Best-first baseline ordered by `dist_c` alone.
pub fn modify_fds_bestfirst(
    fds: &FdSet,
    instance: &VInstance,
    tau: u64,
    weight: &dyn WeightFn,
    config: SearchConfig,
) -> Result<SearchOutcome> {
    let space = SearchSpace::new(fds, instance, weight, config)?;
    Ok(run(&space, tau, Mode::CostOnly))
}
