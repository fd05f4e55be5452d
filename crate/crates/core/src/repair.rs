//! Tuple-by-tuple data repair against relaxed FDs, and the end-to-end repair
//! that first picks the FD modification and then edits the data.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::attrs::{AttrId, AttrSet};
use crate::conflict::{alpha, build_conflict_graph, vertex_cover, CoverStrategy, VertexCover};
use crate::error::Result;
use crate::fd::{ExtensionVector, FdSet, WeightFn};
use crate::relation::{dist_d, CellDelta, CellValue, Tuple, TupleId, VInstance};
use crate::search::{astar_in, SearchConfig, SearchSpace, SearchStats};

/// A partial assignment: `None` marks a fresh variable not yet allocated.
pub type Candidate = Vec<Option<CellValue>>;

/// Per-FD lookup from LHS projection to RHS value over the clean tuples.
///
/// The clean tuples satisfy the FDs, so each key has exactly one value.
pub struct CleanIndex<'f> {
    fds: &'f FdSet,
    maps: Vec<HashMap<Vec<CellValue>, CellValue>>,
}

impl<'f> CleanIndex<'f> {
    pub fn new(fds: &'f FdSet) -> Self {
        CleanIndex {
            fds,
            maps: vec![HashMap::new(); fds.len()],
        }
    }

    pub fn build(fds: &'f FdSet, instance: &VInstance, cover: &VertexCover) -> Self {
        let mut index = CleanIndex::new(fds);
        for id in (0..instance.len()).filter(|&t| !cover.contains(t)) {
            index.insert(instance.tuple(id));
        }
        index
    }

    pub fn insert(&mut self, tuple: &[CellValue]) {
        for (fd, map) in self.fds.iter().zip(&mut self.maps) {
            let key = fd.lhs.iter().map(|a| tuple[a].clone()).collect();
            map.entry(key).or_insert_with(|| tuple[fd.rhs].clone());
        }
    }

    /// RHS value a clean tuple forces on `candidate` through FD `i`, if the
    /// candidate's LHS is fully known and matches one.
    fn forced(&self, i: usize, candidate: &Candidate) -> Option<&CellValue> {
        let fd = self.fds.get(i);
        let key: Option<Vec<CellValue>> = fd.lhs.iter().map(|a| candidate[a].clone()).collect();
        self.maps[i].get(&key?)
    }
}

/// Searches for values of the attributes outside `fixed` such that the tuple
/// no longer conflicts with any clean tuple. Returns `None` when no such
/// assignment exists.
pub fn find_assignment_indexed(
    t: &[CellValue],
    fixed: AttrSet,
    index: &CleanIndex<'_>,
) -> Option<Candidate> {
    let mut fixed = fixed;
    let mut tc: Candidate = (0..t.len())
        .map(|a| fixed.contains(a).then(|| t[a].clone()))
        .collect();
    loop {
        let mut changed = false;
        for (i, fd) in index.fds.iter().enumerate() {
            let Some(forced) = index.forced(i, &tc) else {
                continue;
            };
            if tc[fd.rhs].as_ref() == Some(forced) {
                continue;
            }
            if fixed.contains(fd.rhs) {
                return None;
            }
            tc[fd.rhs] = Some(forced.clone());
            fixed.insert(fd.rhs);
            changed = true;
        }
        if !changed {
            return Some(tc);
        }
    }
}

/// [`find_assignment_indexed`] over `instance` minus `cover`, with fresh
/// variables allocated above every index used in `instance`.
pub fn find_assignment(
    t: &[CellValue],
    fixed: AttrSet,
    instance: &VInstance,
    fds: &FdSet,
    cover: &VertexCover,
) -> Option<Tuple> {
    let index = CleanIndex::build(fds, instance, cover);
    let mut fresh = FreshVariables::new(instance);
    find_assignment_indexed(t, fixed, &index).map(|tc| {
        tc.into_iter()
            .enumerate()
            .map(|(a, v)| v.unwrap_or_else(|| fresh.next(a)))
            .collect()
    })
}

pub struct FreshVariables {
    next: Vec<u32>,
}

impl FreshVariables {
    pub fn new(instance: &VInstance) -> Self {
        FreshVariables {
            next: instance.next_variable_indices(),
        }
    }

    pub fn next(&mut self, attr: AttrId) -> CellValue {
        let index = self.next[attr];
        self.next[attr] += 1;
        CellValue::Variable { attr, index }
    }
}

/// One assignment step while repairing a cover tuple.
#[derive(Clone, Debug, PartialEq)]
pub struct RepairStep {
    pub tuple: TupleId,
    pub added: AttrId,
    pub fixed: AttrSet,
    /// Whether an assignment existed with `added` kept.
    pub kept: bool,
    pub candidate: Candidate,
}

/// Repairs `instance` so it satisfies `fds`, editing only cover tuples.
pub fn repair_data(fds: &FdSet, instance: &VInstance, cover: CoverStrategy, seed: u64) -> VInstance {
    repair_data_traced(fds, instance, cover, seed, None)
}

pub fn repair_data_traced(
    fds: &FdSet,
    instance: &VInstance,
    cover: CoverStrategy,
    seed: u64,
    mut trace: Option<&mut Vec<RepairStep>>,
) -> VInstance {
    let graph = build_conflict_graph(instance, fds);
    let cover = vertex_cover(&graph, cover);
    let mut repaired = instance.clone();
    if cover.is_empty() {
        return repaired;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fresh = FreshVariables::new(instance);
    let mut index = CleanIndex::build(fds, instance, &cover);

    let mut order = cover.cover.clone();
    order.shuffle(&mut rng);
    let width = instance.width();
    for id in order {
        let mut attrs: Vec<AttrId> = (0..width).collect();
        attrs.shuffle(&mut rng);
        let mut t = repaired.tuple(id).clone();
        // One fixed attribute always admits an assignment unless an FD with
        // an empty LHS pins that attribute to another value. Then the first
        // attribute that works is used, or none at all.
        let start = attrs
            .iter()
            .position(|&a| find_assignment_indexed(&t, AttrSet::singleton(a), &index).is_some());
        let mut fixed = match start {
            Some(p) => {
                attrs[..=p].rotate_right(1);
                AttrSet::singleton(attrs[0])
            }
            None => AttrSet::EMPTY,
        };
        let mut tc = find_assignment_indexed(&t, fixed, &index)
            .expect("the clean tuples admit an assignment with nothing fixed");
        if let (Some(tr), Some(_)) = (trace.as_deref_mut(), start) {
            tr.push(RepairStep {
                tuple: id,
                added: attrs[0],
                fixed,
                kept: true,
                candidate: tc.clone(),
            });
        }
        let rest = if start.is_some() { &attrs[1..] } else { &attrs[..] };
        for &a in rest {
            fixed.insert(a);
            let kept = match find_assignment_indexed(&t, fixed, &index) {
                Some(next) => {
                    tc = next;
                    true
                }
                None => {
                    let value = match &tc[a] {
                        Some(v) => v.clone(),
                        None => {
                            let v = fresh.next(a);
                            tc[a] = Some(v.clone());
                            v
                        }
                    };
                    t[a] = value;
                    false
                }
            };
            if let Some(tr) = trace.as_deref_mut() {
                tr.push(RepairStep {
                    tuple: id,
                    added: a,
                    fixed,
                    kept,
                    candidate: tc.clone(),
                });
            }
        }
        index.insert(&t);
        repaired.replace_tuple(id, t);
    }
    repaired
}

#[derive(Clone, Debug, PartialEq)]
pub struct RepairResult {
    pub sigma_prime: FdSet,
    pub extension: ExtensionVector,
    pub instance_prime: VInstance,
    pub dist_c: f64,
    pub delta: CellDelta,
    pub delta_p: u64,
    pub cover_size: usize,
    pub seed: u64,
}

impl RepairResult {
    pub fn dist_d(&self) -> usize {
        self.delta.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RepairOutcome {
    Repaired(Box<RepairResult>),
    /// No FD modification meets the budget.
    Empty { reason: String },
}

impl RepairOutcome {
    pub fn result(&self) -> Option<&RepairResult> {
        match self {
            RepairOutcome::Repaired(r) => Some(r),
            RepairOutcome::Empty { .. } => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RepairRun {
    pub outcome: RepairOutcome,
    pub stats: SearchStats,
}

/// Repairs the data of `space`'s instance against `Σ(extension)`.
pub fn materialize(
    space: &SearchSpace<'_>,
    extension: ExtensionVector,
    seed: u64,
) -> Result<RepairResult> {
    let instance = space.instance();
    let sigma_prime = space.extended(&extension);
    let bound = space.bound(&extension);
    let instance_prime = repair_data(&sigma_prime, instance, space.config().cover, seed);
    let delta = dist_d(instance, &instance_prime)?;
    Ok(RepairResult {
        dist_c: space.cost(&extension),
        sigma_prime,
        extension,
        instance_prime,
        delta,
        delta_p: bound.delta_p,
        cover_size: bound.cover.len(),
        seed,
    })
}

pub fn no_goal_reason(tau: u64) -> String {
    format!("no FD modification brings the data-change bound within tau = {tau}")
}

/// Finds the cheapest FD modification whose data-change bound fits `tau`
/// and repairs the data against it.
pub fn repair_data_fds(
    fds: &FdSet,
    instance: &VInstance,
    tau: u64,
    weight: &dyn WeightFn,
    config: SearchConfig,
    seed: u64,
) -> Result<RepairRun> {
    let space = SearchSpace::new(fds, instance, weight, config)?;
    repair_in(&space, tau, seed)
}

pub fn repair_in(space: &SearchSpace<'_>, tau: u64, seed: u64) -> Result<RepairRun> {
    let search = astar_in(space, tau);
    let outcome = match search.goal {
        None => RepairOutcome::Empty {
            reason: no_goal_reason(tau),
        },
        Some(goal) => RepairOutcome::Repaired(Box::new(materialize(space, goal.extension, seed)?)),
    };
    Ok(RepairRun {
        outcome,
        stats: search.stats,
    })
}

/// `min{|R| - 1, |Σ|}`: the most cells one cover tuple can lose.
pub fn per_tuple_bound(fds: &FdSet, instance: &VInstance) -> u64 {
    alpha(instance.width(), fds.len())
}
