//! Fixture generators and brute-force oracles shared by integration tests.
//! Nothing here calls into the search or repair code under test.
#![allow(dead_code)]

use fdrepair::fd::{apply_extension, ExtensionVector, Fd, FdSet, WeightFn};
use fdrepair::relation::{CellValue, Tuple, VInstance};
use fdrepair::AttrSet;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type Edges = Vec<(usize, usize)>;

pub const NAMES: [&str; 8] = ["A", "B", "C", "D", "E", "F", "G", "H"];

pub struct Shape {
    pub rows: (usize, usize),
    pub width: (usize, usize),
    pub fds: (usize, usize),
    pub domain: (usize, usize),
}

pub struct Fixture {
    pub instance: VInstance,
    pub fds: FdSet,
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn random_instance(rng: &mut ChaCha8Rng, rows: usize, width: usize, domain: usize) -> VInstance {
    let data: Vec<Vec<String>> = (0..rows)
        .map(|_| (0..width).map(|_| rng.gen_range(0..domain).to_string()).collect())
        .collect();
    VInstance::from_rows(&NAMES[..width], &data).unwrap()
}

/// FDs with non-empty LHSs of one or two attributes.
pub fn random_fds(rng: &mut ChaCha8Rng, width: usize, count: usize) -> FdSet {
    let fds = (0..count)
        .map(|_| {
            let rhs = rng.gen_range(0..width);
            let others: Vec<usize> = (0..width).filter(|&a| a != rhs).collect();
            let size = rng.gen_range(1..=others.len().min(2));
            let mut lhs = AttrSet::EMPTY;
            while lhs.len() < size {
                lhs.insert(others[rng.gen_range(0..others.len())]);
            }
            Fd::new(lhs, rhs)
        })
        .collect();
    FdSet::new(fds)
}

pub fn random_fixture(rng: &mut ChaCha8Rng, shape: &Shape) -> Fixture {
    let width = rng.gen_range(shape.width.0..=shape.width.1);
    let rows = rng.gen_range(shape.rows.0..=shape.rows.1);
    let domain = rng.gen_range(shape.domain.0..=shape.domain.1);
    let count = rng.gen_range(shape.fds.0..=shape.fds.1);
    Fixture {
        instance: random_instance(rng, rows, width, domain),
        fds: random_fds(rng, width, count),
    }
}

/// Attributes that may be appended to `fd`.
pub fn free_attrs(fd: &Fd, width: usize) -> Vec<usize> {
    (0..width).filter(|&a| a != fd.rhs && !fd.lhs.contains(a)).collect()
}

pub fn subsets(attrs: &[usize]) -> Vec<AttrSet> {
    (0u32..1 << attrs.len())
        .map(|m| {
            attrs
                .iter()
                .enumerate()
                .filter(|(i, _)| m >> i & 1 == 1)
                .map(|(_, &a)| a)
                .collect()
        })
        .collect()
}

/// Every extension vector, by cartesian product of per-FD subsets.
pub fn all_extensions(fds: &FdSet, width: usize) -> Vec<ExtensionVector> {
    let mut acc: Vec<Vec<AttrSet>> = vec![Vec::new()];
    for fd in fds.iter() {
        let options = subsets(&free_attrs(fd, width));
        acc = acc
            .into_iter()
            .flat_map(|prefix| {
                options.iter().map(move |&y| {
                    let mut v = prefix.clone();
                    v.push(y);
                    v
                })
            })
            .collect();
    }
    acc.into_iter().map(ExtensionVector::from_sets).collect()
}

pub fn random_extension(rng: &mut ChaCha8Rng, fds: &FdSet, width: usize) -> ExtensionVector {
    ExtensionVector::from_sets(
        fds.iter()
            .map(|fd| {
                free_attrs(fd, width)
                    .into_iter()
                    .filter(|_| rng.gen_bool(0.3))
                    .collect()
            })
            .collect(),
    )
}

pub fn superset_of(big: &ExtensionVector, small: &ExtensionVector) -> bool {
    big.sets().iter().zip(small.sets()).all(|(b, s)| s.is_subset(*b))
}

pub fn tuple_violates(t: &[CellValue], u: &[CellValue], fd: &Fd) -> bool {
    fd.lhs.iter().all(|a| t[a] == u[a]) && t[fd.rhs] != u[fd.rhs]
}

/// Violating pairs `(i, j)`, `i < j`, in lexicographic order.
pub fn naive_edges(instance: &VInstance, fds: &FdSet) -> Edges {
    let n = instance.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let (t, u) = (instance.tuple(i), instance.tuple(j));
            if fds.iter().any(|fd| tuple_violates(t, u, fd)) {
                edges.push((i, j));
            }
        }
    }
    edges
}

pub fn naive_satisfies(instance: &VInstance, fds: &FdSet) -> bool {
    naive_edges(instance, fds).is_empty()
}

/// Replaces every variable with a constant no input value can collide with.
pub fn ground(instance: &VInstance) -> VInstance {
    let tuples: Vec<Tuple> = instance
        .tuples()
        .iter()
        .map(|t| {
            t.iter()
                .map(|c| match c {
                    CellValue::Variable { attr, index } => CellValue::constant(&format!("#fresh{attr}.{index}")),
                    other => other.clone(),
                })
                .collect()
        })
        .collect();
    VInstance::new(instance.schema().clone(), tuples).unwrap()
}

/// Minimum vertex cover size by exhaustive search.
pub fn min_cover_size(n: usize, edges: &[(usize, usize)]) -> usize {
    assert!(n <= 20);
    let masks: Vec<u32> = edges.iter().map(|&(a, b)| 1 << a | 1 << b).collect();
    (0u32..1 << n)
        .filter(|s| masks.iter().all(|m| s & m != 0))
        .map(|s| s.count_ones() as usize)
        .min()
        .unwrap_or(0)
}

pub fn is_cover(edges: &[(usize, usize)], cover: &[usize]) -> bool {
    edges.iter().all(|(a, b)| cover.contains(a) || cover.contains(b))
}

pub fn cost(ext: &ExtensionVector, w: &dyn WeightFn) -> f64 {
    ext.sets().iter().map(|&y| if y.is_empty() { 0.0 } else { w.weight(y) }).sum()
}

pub fn extended(fds: &FdSet, ext: &ExtensionVector) -> FdSet {
    apply_extension(fds, ext).unwrap()
}

/// Does some completion of `t` on the attributes outside `fixed` conflict
/// with no tuple outside `cover`? Each free attribute ranges over its
/// active domain plus one fresh value.
pub fn assignment_exists(t: &[CellValue], fixed: AttrSet, instance: &VInstance, fds: &FdSet, cover: &[usize]) -> bool {
    let clean: Vec<&Tuple> = (0..instance.len())
        .filter(|i| !cover.contains(i))
        .map(|i| instance.tuple(i))
        .collect();
    let width = t.len();
    let choices: Vec<Vec<CellValue>> = (0..width)
        .map(|a| {
            if fixed.contains(a) {
                return vec![t[a].clone()];
            }
            let mut vals: Vec<CellValue> = Vec::new();
            for u in instance.tuples() {
                if !vals.contains(&u[a]) {
                    vals.push(u[a].clone());
                }
            }
            vals.push(CellValue::constant("#fresh"));
            vals
        })
        .collect();
    let mut candidate: Vec<CellValue> = choices.iter().map(|c| c[0].clone()).collect();
    let mut idx = vec![0usize; width];
    loop {
        for a in 0..width {
            candidate[a] = choices[a][idx[a]].clone();
        }
        if clean.iter().all(|u| fds.iter().all(|fd| !tuple_violates(&candidate, u, fd))) {
            return true;
        }
        let mut a = 0;
        loop {
            if a == width {
                return false;
            }
            idx[a] += 1;
            if idx[a] < choices[a].len() {
                break;
            }
            idx[a] = 0;
            a += 1;
        }
    }
}
