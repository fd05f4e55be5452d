//! Enumerating every distinct FD repair over a range of budgets, in one
//! A* sweep or by independent sampling.

use std::cmp::Reverse;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::fd::{ExtensionVector, FdSet, WeightFn};
use crate::relation::VInstance;
use crate::repair::{materialize, RepairResult};
use crate::search::{
    astar_in, FdModification, Incumbent, OpenEntry, OpenList, SearchConfig, SearchSpace,
    SearchStats,
};

#[derive(Clone, Debug)]
pub struct Sweep {
    /// Goals in discovery order: decreasing budget, strictly decreasing δ_P.
    pub points: Vec<FdModification>,
    pub stats: SearchStats,
}

/// Every distinct cheapest FD modification for budgets in `[tau_l, tau_u]`.
pub fn find_repairs_fds(
    fds: &FdSet,
    instance: &VInstance,
    tau_l: u64,
    tau_u: u64,
    weight: &dyn WeightFn,
    config: SearchConfig,
) -> Result<Sweep> {
    let space = SearchSpace::new(fds, instance, weight, config)?;
    sweep_in(&space, tau_l, tau_u)
}

pub fn sweep_in(space: &SearchSpace<'_>, tau_l: u64, tau_u: u64) -> Result<Sweep> {
    if tau_l > tau_u {
        return Err(Error::TauRange { lo: tau_l, hi: tau_u });
    }
    let mut stats = SearchStats::default();
    let mut points = Vec::new();
    let mut tau = tau_u;
    let mut open = OpenList::new();

    let root = space.root();
    stats.gc_evaluations += 1;
    let gc = space.compute_gc(&root, tau);
    if gc.is_finite() {
        open.push(Reverse(OpenEntry {
            key: gc,
            cost: space.cost(&root),
            ext: root,
        }));
    }

    let mut best: Option<Incumbent> = None;
    // Goals popped at the current tau. Their children cost more than the
    // goal, so they are expanded only once tau drops below their delta_p.
    let mut parked: Vec<OpenEntry> = Vec::new();
    loop {
        let level_done = match (open.peek(), &best) {
            (None, _) => true,
            (Some(Reverse(top)), Some(b)) => top.key > b.cost,
            (Some(_), None) => false,
        };
        if level_done {
            let Some(b) = best.take() else { break };
            log::debug!("tau {tau}: recorded {:?} delta_p={} cost={}", b.ext, b.delta_p, b.cost);
            let delta_p = b.delta_p;
            points.push(space.modification(b.ext, b.cost, delta_p));
            if delta_p == 0 || delta_p - 1 < tau_l {
                break;
            }
            tau = delta_p - 1;
            open.extend(parked.drain(..).map(Reverse));
            open = rescore(space, open, tau, &mut stats);
            continue;
        }

        let Reverse(entry) = open.pop().expect("peeked");
        stats.visited += 1;
        let dp = space.delta_p(&entry.ext);
        if dp <= tau {
            Incumbent::offer(&mut best, entry.cost, dp, &entry.ext);
            parked.push(entry);
            continue;
        }
        let mut pushed = false;
        for child in space.children(&entry.ext) {
            stats.generated += 1;
            stats.gc_evaluations += 1;
            let gc = space.compute_gc(&child, tau);
            if !gc.is_finite() {
                stats.pruned += 1;
                continue;
            }
            open.push(Reverse(OpenEntry {
                key: gc,
                cost: space.cost(&child),
                ext: child,
            }));
            pushed = true;
        }
        if pushed {
            stats.expanded += 1;
        }
    }
    Ok(Sweep { points, stats })
}

fn rescore(space: &SearchSpace<'_>, open: OpenList, tau: u64, stats: &mut SearchStats) -> OpenList {
    open.into_iter()
        .filter_map(|Reverse(mut e)| {
            stats.gc_evaluations += 1;
            e.key = space.compute_gc(&e.ext, tau);
            if e.key.is_finite() {
                Some(Reverse(e))
            } else {
                stats.pruned += 1;
                None
            }
        })
        .collect()
}

/// One distinct FD modification found by sampling, with the budgets that
/// produced it (descending).
#[derive(Clone, Debug)]
pub struct SampledModification {
    pub taus: Vec<u64>,
    pub modification: FdModification,
}

#[derive(Clone, Debug)]
pub struct Sampling {
    /// Ordered by decreasing largest budget.
    pub entries: Vec<SampledModification>,
    /// Budgets for which no goal exists.
    pub empty: Vec<u64>,
    /// Summed over all runs.
    pub stats: SearchStats,
}

/// Runs an independent A* search per budget and deduplicates the results.
pub fn sample_modifications(space: &SearchSpace<'_>, taus: &[u64]) -> Sampling {
    let mut stats = SearchStats::default();
    let mut found: BTreeMap<ExtensionVector, SampledModification> = BTreeMap::new();
    let mut empty = Vec::new();
    for &tau in taus {
        let out = astar_in(space, tau);
        stats += out.stats;
        match out.goal {
            None => empty.push(tau),
            Some(goal) => found
                .entry(goal.extension.clone())
                .or_insert_with(|| SampledModification {
                    taus: Vec::new(),
                    modification: goal,
                })
                .taus
                .push(tau),
        }
    }
    let mut entries: Vec<SampledModification> = found
        .into_values()
        .map(|mut e| {
            e.taus.sort_unstable_by(|a, b| b.cmp(a));
            e.taus.dedup();
            e
        })
        .collect();
    entries.sort_by(|a, b| b.taus[0].cmp(&a.taus[0]));
    empty.sort_unstable_by(|a, b| b.cmp(a));
    empty.dedup();
    Sampling {
        entries,
        empty,
        stats,
    }
}

#[derive(Clone, Debug)]
pub struct SampledRepair {
    pub taus: Vec<u64>,
    pub result: RepairResult,
}

/// Sampling baseline: one full repair per distinct FD modification found
/// over `taus`.
pub fn sample_repairs(
    fds: &FdSet,
    instance: &VInstance,
    taus: &[u64],
    weight: &dyn WeightFn,
    config: SearchConfig,
    seed: u64,
) -> Result<(Vec<SampledRepair>, SearchStats)> {
    let space = SearchSpace::new(fds, instance, weight, config)?;
    let sampling = sample_modifications(&space, taus);
    let repairs = sampling
        .entries
        .into_iter()
        .map(|e| {
            Ok(SampledRepair {
                taus: e.taus,
                result: materialize(&space, e.modification.extension, seed)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok((repairs, sampling.stats))
}

#[derive(Clone, Debug)]
pub struct FrontierEntry {
    pub result: RepairResult,
    pub tau_lo: u64,
    pub tau_hi: u64,
}

/// Repairs ordered by decreasing budget with disjoint budget ranges.
#[derive(Clone, Debug, Default)]
pub struct RepairFrontier {
    pub entries: Vec<FrontierEntry>,
}

/// Builds the data repair of every sweep point. Entry `i` covers budgets
/// `[δ_P(i), δ_P(i-1) - 1]`; the first ends at `tau_u`.
pub fn materialize_frontier(
    space: &SearchSpace<'_>,
    points: &[FdModification],
    tau_u: u64,
    seed: u64,
) -> Result<RepairFrontier> {
    let mut entries = Vec::with_capacity(points.len());
    let mut hi = tau_u;
    for p in points {
        let result = materialize(space, p.extension.clone(), seed)?;
        entries.push(FrontierEntry {
            tau_lo: p.delta_p,
            tau_hi: hi,
            result,
        });
        hi = p.delta_p.saturating_sub(1);
    }
    Ok(RepairFrontier { entries })
}
