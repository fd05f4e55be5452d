//! Error injection into clean data and FDs, and quality scores of repairs
//! against the clean originals.

use std::collections::HashSet;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::attrs::{AttrId, AttrSet};
use crate::conflict::{alpha, delta_p, CoverStrategy};
use crate::error::{Error, Result};
use crate::fd::{ExtensionVector, Fd, FdSet, WeightKind};
use crate::relation::{ensure_aligned, CellValue, Schema, TupleId, VInstance};
use crate::repair::{repair_data_fds, RepairOutcome};
use crate::search::SearchConfig;

const EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub data_error_rate: f64,
    pub fd_error_rate: f64,
    pub seed: u64,
}

fn check_rate(rate: f64) -> Result<()> {
    if (0.0..=1.0).contains(&rate) {
        Ok(())
    } else {
        Err(Error::InvalidRate(rate))
    }
}

fn count_for(rate: f64, total: usize) -> usize {
    (rate * total as f64 - EPS).ceil().max(0.0) as usize
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InjectionKind {
    /// Two tuples agree on `XA`; one gets a fresh `A` value.
    Rhs,
    /// Two tuples agree on `X \ {B}` and differ on `B` and `A`; one copies
    /// the other's `B`.
    Lhs,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Injection {
    pub tuple: TupleId,
    pub attribute: AttrId,
    pub old: CellValue,
    pub new: CellValue,
    pub kind: InjectionKind,
}

#[derive(Clone, Debug)]
pub struct DataPerturbation {
    pub instance: VInstance,
    pub injected: Vec<Injection>,
    /// Requested injections that found no opportunity.
    pub shortfall: usize,
}

/// Number of tuples that violate some FD together with `t`.
fn conflicts_of(instance: &VInstance, fds: &FdSet, t: TupleId) -> usize {
    (0..instance.len())
        .filter(|&u| u != t)
        .filter(|&u| {
            fds.iter().any(|fd| {
                fd.lhs.iter().all(|a| instance.cell(t, a) == instance.cell(u, a))
                    && instance.cell(t, fd.rhs) != instance.cell(u, fd.rhs)
            })
        })
        .count()
}

struct Injector<'a> {
    instance: VInstance,
    fds: &'a FdSet,
    rng: ChaCha8Rng,
    touched: HashSet<(TupleId, AttrId)>,
    fresh: usize,
}

impl Injector<'_> {
    fn fresh_constant(&mut self, attr: AttrId) -> CellValue {
        let used: HashSet<&CellValue> = self.instance.tuples().iter().map(|t| &t[attr]).collect();
        loop {
            self.fresh += 1;
            let v = CellValue::constant(&format!("err{}", self.fresh));
            if !used.contains(&v) {
                return v;
            }
        }
    }

    /// Applies the change if it strictly increases `t`'s conflicts.
    fn apply(&mut self, t: TupleId, attr: AttrId, new: CellValue, kind: InjectionKind) -> Option<Injection> {
        let before = conflicts_of(&self.instance, self.fds, t);
        let old = self.instance.cell(t, attr).clone();
        self.instance.set_cell(t, attr, new.clone());
        if conflicts_of(&self.instance, self.fds, t) > before {
            self.touched.insert((t, attr));
            Some(Injection {
                tuple: t,
                attribute: attr,
                old,
                new,
                kind,
            })
        } else {
            self.instance.set_cell(t, attr, old);
            None
        }
    }

    fn fd_order(&mut self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.fds.len()).collect();
        order.shuffle(&mut self.rng);
        order
    }

    /// Tuples grouped by their projection on `attrs`, groups of size ≥ 2.
    fn groups(&self, attrs: AttrSet) -> Vec<Vec<TupleId>> {
        let mut map: std::collections::HashMap<Vec<&CellValue>, Vec<TupleId>> = Default::default();
        for t in 0..self.instance.len() {
            map.entry(self.instance.project(t, attrs)).or_default().push(t);
        }
        let mut groups: Vec<Vec<TupleId>> = map.into_values().filter(|g| g.len() > 1).collect();
        groups.sort();
        groups
    }

    fn inject_rhs(&mut self) -> Option<Injection> {
        for i in self.fd_order() {
            let fd = *self.fds.get(i);
            let mut candidates: Vec<TupleId> = self
                .groups(fd.own_attrs())
                .into_iter()
                .flatten()
                .filter(|&t| !self.touched.contains(&(t, fd.rhs)))
                .collect();
            candidates.shuffle(&mut self.rng);
            for t in candidates {
                let v = self.fresh_constant(fd.rhs);
                if let Some(done) = self.apply(t, fd.rhs, v, InjectionKind::Rhs) {
                    return Some(done);
                }
            }
        }
        None
    }

    fn inject_lhs(&mut self) -> Option<Injection> {
        for i in self.fd_order() {
            let fd = *self.fds.get(i);
            let mut lhs: Vec<AttrId> = fd.lhs.iter().collect();
            lhs.shuffle(&mut self.rng);
            for b in lhs {
                let mut pairs = Vec::new();
                for g in self.groups(fd.lhs.without(b)) {
                    for &ti in &g {
                        if self.touched.contains(&(ti, b)) {
                            continue;
                        }
                        for &tj in &g {
                            let differ = |a: AttrId| self.instance.cell(ti, a) != self.instance.cell(tj, a);
                            if ti != tj && differ(b) && differ(fd.rhs) {
                                pairs.push((ti, tj));
                            }
                        }
                    }
                }
                pairs.shuffle(&mut self.rng);
                for (ti, tj) in pairs {
                    if self.touched.contains(&(ti, b)) {
                        continue;
                    }
                    let v = self.instance.cell(tj, b).clone();
                    if let Some(done) = self.apply(ti, b, v, InjectionKind::Lhs) {
                        return Some(done);
                    }
                }
            }
        }
        None
    }
}

/// Injects `⌈rate · cells⌉` violating cell changes into `clean`, alternating
/// seeded-randomly between the two injection kinds.
pub fn perturb_data(clean: &VInstance, fds: &FdSet, rate: f64, seed: u64) -> Result<DataPerturbation> {
    check_rate(rate)?;
    fds.validate_for(clean.schema())?;
    let target = count_for(rate, clean.len() * clean.width());
    let mut inj = Injector {
        instance: clean.clone(),
        fds,
        rng: ChaCha8Rng::seed_from_u64(seed),
        touched: HashSet::new(),
        fresh: 0,
    };
    let mut injected = Vec::with_capacity(target);
    while injected.len() < target {
        let rhs_first = inj.rng.gen_bool(0.5);
        let next = if rhs_first {
            inj.inject_rhs().or_else(|| inj.inject_lhs())
        } else {
            inj.inject_lhs().or_else(|| inj.inject_rhs())
        };
        match next {
            Some(done) => injected.push(done),
            None => break,
        }
    }
    let shortfall = target - injected.len();
    if shortfall > 0 {
        log::warn!("{shortfall} data injections found no opportunity");
    }
    Ok(DataPerturbation {
        instance: inj.instance,
        injected,
        shortfall,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FdPerturbation {
    pub fds: FdSet,
    /// Attributes removed from each LHS; re-appending them restores the
    /// original FDs.
    pub removed: ExtensionVector,
}

/// Removes `⌈rate · total LHS attributes⌉` LHS attributes at random, never
/// emptying an LHS.
pub fn perturb_fds(fds: &FdSet, rate: f64, seed: u64) -> Result<FdPerturbation> {
    check_rate(rate)?;
    let requested = count_for(rate, fds.lhs_attribute_count());
    let available: usize = fds.iter().map(|fd| fd.lhs.len().saturating_sub(1)).sum();
    if requested > available {
        return Err(Error::LhsExhausted { requested, available });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lhs: Vec<AttrSet> = fds.iter().map(|fd| fd.lhs).collect();
    let mut removed = vec![AttrSet::EMPTY; fds.len()];
    for _ in 0..requested {
        let options: Vec<(usize, AttrId)> = lhs
            .iter()
            .enumerate()
            .filter(|(_, x)| x.len() > 1)
            .flat_map(|(i, x)| x.iter().map(move |a| (i, a)))
            .collect();
        let &(i, a) = options.choose(&mut rng).expect("checked against available");
        lhs[i].remove(a);
        removed[i].insert(a);
    }
    Ok(FdPerturbation {
        fds: FdSet::new(fds.iter().zip(&lhs).map(|(fd, x)| Fd::new(*x, fd.rhs)).collect()),
        removed: ExtensionVector::from_sets(removed),
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QualityScores {
    pub data_precision: f64,
    pub data_recall: f64,
    pub data_f: f64,
    pub fd_precision: f64,
    pub fd_recall: f64,
    pub fd_f: f64,
    pub combined_f: f64,
}

fn ratio(num: usize, den: usize, other: usize) -> f64 {
    match (den, other) {
        (0, 0) => 1.0,
        (0, _) => 0.0,
        _ => num as f64 / den as f64,
    }
}

fn f_score(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn ensure_same_fds(a: &FdSet, b: &FdSet) -> Result<()> {
    if a.len() != b.len() || a.iter().zip(b.iter()).any(|(x, y)| x.rhs != y.rhs) {
        return Err(Error::Misaligned("FD sets do not correspond".into()));
    }
    Ok(())
}

/// Scores a repair `(repaired, fds_repaired)` of the perturbed
/// `(dirty, fds_dirty)` against the clean `(clean, fds_clean)`.
///
/// A repaired cell is correct when it was injected and now holds the clean
/// value or a variable. An appended LHS attribute is correct when it was
/// removed by the perturbation.
pub fn score_repair(
    clean: &VInstance,
    dirty: &VInstance,
    repaired: &VInstance,
    fds_clean: &FdSet,
    fds_dirty: &FdSet,
    fds_repaired: &FdSet,
) -> Result<QualityScores> {
    ensure_aligned(clean, dirty)?;
    ensure_aligned(clean, repaired)?;
    ensure_same_fds(fds_clean, fds_dirty)?;
    ensure_same_fds(fds_clean, fds_repaired)?;

    let (mut modified, mut erroneous, mut correct) = (0, 0, 0);
    for t in 0..clean.len() {
        for a in 0..clean.width() {
            let (c, d, r) = (clean.cell(t, a), dirty.cell(t, a), repaired.cell(t, a));
            let is_error = c != d;
            erroneous += is_error as usize;
            if d != r {
                modified += 1;
                if is_error && (r == c || r.is_variable()) {
                    correct += 1;
                }
            }
        }
    }

    let (mut appended, mut removed, mut right) = (0, 0, 0);
    for ((c, d), r) in fds_clean.iter().zip(fds_dirty.iter()).zip(fds_repaired.iter()) {
        let add = r.lhs.difference(d.lhs);
        let gone = c.lhs.difference(d.lhs);
        appended += add.len();
        removed += gone.len();
        right += add.intersection(gone).len();
    }

    let data_precision = ratio(correct, modified, erroneous);
    let data_recall = ratio(correct, erroneous, modified);
    let fd_precision = ratio(right, appended, removed);
    let fd_recall = ratio(right, removed, appended);
    let data_f = f_score(data_precision, data_recall);
    let fd_f = f_score(fd_precision, fd_recall);
    Ok(QualityScores {
        data_precision,
        data_recall,
        data_f,
        fd_precision,
        fd_recall,
        fd_f,
        combined_f: (data_f + fd_f) / 2.0,
    })
}

/// `⌈τ_r · δ_P⌉`, the absolute budget for relative trust `tau_r`.
pub fn relative_budget(tau_r: f64, delta_p: u64) -> Result<u64> {
    check_rate(tau_r)?;
    Ok((tau_r * delta_p as f64 - EPS).ceil().max(0.0) as u64)
}

/// Absolute budget for `tau_r` measured against `δ_P(Σ, I)`.
pub fn tau_from_relative(
    tau_r: f64,
    fds: &FdSet,
    instance: &VInstance,
    cover: CoverStrategy,
) -> Result<u64> {
    fds.validate_for(instance.schema())?;
    let a = alpha(instance.width(), fds.len());
    relative_budget(tau_r, delta_p(fds, instance, a, cover).delta_p)
}

/// A clean instance over `A, B, C, D, E` with `C` determined by `A, B` and
/// `D`, `E` independent noise, plus its FD `A, B -> C`.
pub fn synthetic(rows: usize, seed: u64) -> (VInstance, FdSet) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let schema = Schema::new(["A", "B", "C", "D", "E"]).expect("fixed schema");
    let tuples = (0..rows)
        .map(|_| {
            let a = rng.gen_range(0..25u32);
            let b = rng.gen_range(0..5u32);
            let d = rng.gen_range(0..2u32);
            let e = rng.gen_range(0..3u32);
            [format!("a{a}"), format!("b{b}"), format!("c{}", a * 5 + b), format!("d{d}"), format!("e{e}")]
                .iter()
                .map(|v| CellValue::constant(v))
                .collect()
        })
        .collect();
    let instance = VInstance::new(schema, tuples).expect("rows match the schema");
    let fds = FdSet::parse("A,B -> C", instance.schema()).expect("valid FD");
    (instance, fds)
}

#[derive(Clone, Debug, Serialize)]
pub struct TrialPoint {
    pub tau_r: f64,
    pub tau: u64,
    pub repaired: bool,
    pub scores: QualityScores,
}

/// Perturbs `(clean, fds)`, repairs at every relative budget of `grid` and
/// scores each repair. A budget without a repair scores the unrepaired
/// input.
pub fn run_trial(
    clean: &VInstance,
    fds: &FdSet,
    spec: PerturbationSpec,
    grid: &[f64],
    weight: WeightKind,
    config: SearchConfig,
) -> Result<Vec<TrialPoint>> {
    let fd_part = perturb_fds(fds, spec.fd_error_rate, spec.seed)?;
    let data_part = perturb_data(clean, fds, spec.data_error_rate, spec.seed.wrapping_add(1))?;
    let dirty = Arc::new(data_part.instance);
    let w = weight.build(&dirty);
    let a = alpha(dirty.width(), fd_part.fds.len());
    let top = delta_p(&fd_part.fds, &dirty, a, config.cover).delta_p;
    grid.iter()
        .map(|&tau_r| {
            let tau = relative_budget(tau_r, top)?;
            let run = repair_data_fds(&fd_part.fds, &dirty, tau, w.as_ref(), config, spec.seed)?;
            let (inst, sigma, repaired) = match &run.outcome {
                RepairOutcome::Repaired(r) => (&r.instance_prime, &r.sigma_prime, true),
                RepairOutcome::Empty { .. } => (dirty.as_ref(), &fd_part.fds, false),
            };
            let scores = score_repair(clean, &dirty, inst, fds, &fd_part.fds, sigma)?;
            Ok(TrialPoint {
                tau_r,
                tau,
                repaired,
                scores,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fd::apply_extension;
    use crate::relation::{check_satisfies, fixtures::d4};
    use proptest::prelude::*;

    fn pairs(inst: &VInstance, fds: &FdSet) -> usize {
        let mut v: Vec<_> = check_satisfies(inst, fds)
            .unwrap()
            .violations
            .iter()
            .map(|v| (v.first, v.second))
            .collect();
        v.dedup();
        v.len()
    }

    #[test]
    fn zero_rates_change_nothing() {
        let (clean, fds) = synthetic(50, 1);
        let d = perturb_data(&clean, &fds, 0.0, 3).unwrap();
        assert_eq!(d.instance, clean);
        assert!(d.injected.is_empty());
        let f = perturb_fds(&fds, 0.0, 3).unwrap();
        assert_eq!(f.fds, fds);
    }

    #[test]
    fn two_tuple_rhs_injection() {
        let clean = VInstance::from_rows(&["A", "B"], &[vec!["1", "1"], vec!["1", "1"]]).unwrap();
        let fds = FdSet::parse("A -> B", clean.schema()).unwrap();
        let d = perturb_data(&clean, &fds, 0.25, 7).unwrap();
        assert_eq!(d.injected.len(), 1);
        let inj = &d.injected[0];
        assert_eq!((inj.attribute, inj.kind), (1, InjectionKind::Rhs));
        assert!(!matches!(&inj.new, CellValue::Constant(c) if &**c == "1"));
        assert_eq!(pairs(&d.instance, &fds), 1);
    }

    #[test]
    fn injections_create_violations() {
        let (clean, fds) = synthetic(200, 4);
        assert!(check_satisfies(&clean, &fds).unwrap().satisfied);
        let d = perturb_data(&clean, &fds, 0.02, 9).unwrap();
        assert_eq!(d.injected.len(), 20);
        assert_eq!(d.shortfall, 0);
        let mut replay = clean.clone();
        let mut last = 0;
        for inj in &d.injected {
            replay.set_cell(inj.tuple, inj.attribute, inj.new.clone());
            let now = pairs(&replay, &fds);
            assert!(now > last);
            last = now;
        }
        assert_eq!(replay, d.instance);
        let kinds: HashSet<_> = d.injected.iter().map(|i| i.kind).collect();
        assert_eq!(kinds.len(), 2);
    }

    #[test]
    fn fd_removal_examples() {
        let inst = d4();
        let fds = FdSet::parse("A,B -> C", inst.schema()).unwrap();
        let mut seen = HashSet::new();
        for seed in 0..20 {
            let p = perturb_fds(&fds, 0.5, seed).unwrap();
            seen.insert(p.fds.render_lines(inst.schema()));
            assert_eq!(apply_extension(&p.fds, &p.removed).unwrap(), fds);
        }
        assert_eq!(seen.len(), 2);
        assert!(matches!(perturb_fds(&fds, 1.0, 0), Err(Error::LhsExhausted { .. })));
        assert!(matches!(perturb_fds(&fds, 1.5, 0), Err(Error::InvalidRate(_))));
    }

    #[test]
    fn scoring_examples() {
        let inst = d4();
        let fds = FdSet::parse("A,B -> C", inst.schema()).unwrap();
        let perfect = score_repair(&inst, &inst, &inst, &fds, &fds, &fds).unwrap();
        assert_eq!(perfect.combined_f, 1.0);
        assert_eq!(perfect.data_precision, 1.0);

        let mut dirty = inst.clone();
        dirty.set_cell(0, 2, CellValue::constant("9"));
        let weak = FdSet::parse("A -> C", inst.schema()).unwrap();
        let none = score_repair(&inst, &dirty, &dirty, &fds, &weak, &weak).unwrap();
        assert_eq!((none.data_recall, none.fd_recall), (0.0, 0.0));

        let mut repaired = dirty.clone();
        repaired.set_cell(0, 2, CellValue::Variable { attr: 2, index: 1 });
        repaired.set_cell(1, 0, CellValue::constant("7"));
        let s = score_repair(&inst, &dirty, &repaired, &fds, &fds, &fds).unwrap();
        assert_eq!((s.data_precision, s.data_recall), (0.5, 1.0));

        let other = VInstance::from_rows(&["A"], &[vec!["1"]]).unwrap();
        assert!(score_repair(&inst, &inst, &other, &fds, &fds, &fds).is_err());
    }

    #[test]
    fn relative_budget_examples() {
        assert_eq!(relative_budget(0.0, 8).unwrap(), 0);
        assert_eq!(relative_budget(1.0, 8).unwrap(), 8);
        assert_eq!(relative_budget(0.25, 8).unwrap(), 2);
        assert_eq!(relative_budget(0.3, 10).unwrap(), 3);
        let inst = d4();
        let fds = FdSet::parse("A -> B\nC -> D", inst.schema()).unwrap();
        assert_eq!(tau_from_relative(0.25, &fds, &inst, CoverStrategy::Greedy).unwrap(), 2);
        assert_eq!(tau_from_relative(1.0, &fds, &inst, CoverStrategy::Greedy).unwrap(), 8);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn removal_round_trips(seed in 0u64..1000, rate in 0.0f64..=0.5) {
            let s = Schema::new(["A", "B", "C", "D", "E"]).unwrap();
            let fds = FdSet::parse("A,B -> C\nA,D,E -> B\nC,D -> E", &s).unwrap();
            let p = perturb_fds(&fds, rate, seed).unwrap();
            prop_assert!(p.fds.iter().all(|fd| !fd.lhs.is_empty()));
            prop_assert_eq!(apply_extension(&p.fds, &p.removed).unwrap(), fds);
        }

        #[test]
        fn scores_are_permutation_invariant(seed in 0u64..200) {
            let (clean, fds) = synthetic(30, seed);
            let d = perturb_data(&clean, &fds, 0.05, seed).unwrap();
            let r = crate::repair::repair_data(&fds, &d.instance, CoverStrategy::Pruned, seed);
            let base = score_repair(&clean, &d.instance, &r, &fds, &fds, &fds).unwrap();
            let mut order: Vec<usize> = (0..clean.len()).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let permute = |x: &VInstance| {
                VInstance::new(x.schema().clone(), order.iter().map(|&i| x.tuple(i).clone()).collect()).unwrap()
            };
            let moved = score_repair(&permute(&clean), &permute(&d.instance), &permute(&r), &fds, &fds, &fds).unwrap();
            prop_assert_eq!(base, moved);
            for v in [base.data_precision, base.data_recall, base.data_f, base.combined_f] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
