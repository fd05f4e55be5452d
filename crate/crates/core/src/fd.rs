//! Functional dependencies, LHS extension vectors and the FD-side distance.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::attrs::{AttrId, AttrSet};
use crate::error::{Error, Result};
use crate::relation::{distinct_count, Schema, VInstance};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Fd {
    pub lhs: AttrSet,
    pub rhs: AttrId,
}

impl Fd {
    pub fn new(lhs: AttrSet, rhs: AttrId) -> Self {
        Fd { lhs, rhs }
    }

    /// Attributes the extension of this FD may never use.
    pub fn own_attrs(&self) -> AttrSet {
        self.lhs.with(self.rhs)
    }

    pub fn render(&self, schema: &Schema) -> String {
        let lhs = schema.set_names(self.lhs).join(",");
        if lhs.is_empty() {
            format!("-> {}", schema.name(self.rhs))
        } else {
            format!("{} -> {}", lhs, schema.name(self.rhs))
        }
    }
}

/// An ordered list of FDs. Position `i` always refers to the `i`-th original
/// FD, also after extension, so duplicates are kept.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct FdSet {
    fds: Vec<Fd>,
}

impl FdSet {
    pub fn new(fds: Vec<Fd>) -> Self {
        FdSet { fds }
    }

    /// Parses one FD per line in the form `A,B -> C`. Blank lines and lines
    /// starting with `#` are skipped; whitespace around names is ignored.
    pub fn parse(text: &str, schema: &Schema) -> Result<Self> {
        let mut fds = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let syntax = |reason: &str| Error::FdSyntax {
                line: n + 1,
                text: line.to_string(),
                reason: reason.to_string(),
            };
            let (lhs_text, rhs_text) = line.split_once("->").ok_or_else(|| syntax("missing `->`"))?;
            let rhs_name = rhs_text.trim();
            if rhs_name.is_empty() || rhs_name.contains(',') {
                return Err(syntax("right-hand side must be exactly one attribute"));
            }
            let rhs = schema.attr(rhs_name)?;
            let mut lhs = AttrSet::EMPTY;
            if !lhs_text.trim().is_empty() {
                for name in lhs_text.split(',') {
                    let name = name.trim();
                    if name.is_empty() {
                        return Err(syntax("empty attribute name"));
                    }
                    lhs.insert(schema.attr(name)?);
                }
            }
            if lhs.contains(rhs) {
                return Err(Error::TrivialFd { index: fds.len() });
            }
            fds.push(Fd { lhs, rhs });
        }
        Ok(FdSet { fds })
    }

    pub fn render(&self, schema: &Schema) -> String {
        let mut out = String::new();
        for fd in &self.fds {
            out.push_str(&fd.render(schema));
            out.push('\n');
        }
        out
    }

    pub fn render_lines(&self, schema: &Schema) -> Vec<String> {
        self.fds.iter().map(|fd| fd.render(schema)).collect()
    }

    pub fn len(&self) -> usize {
        self.fds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fds.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Fd> {
        self.fds.iter()
    }

    pub fn get(&self, index: usize) -> &Fd {
        &self.fds[index]
    }

    pub fn as_slice(&self) -> &[Fd] {
        &self.fds
    }

    /// Errors when an FD mentions an attribute outside `schema`.
    pub fn validate_for(&self, schema: &Schema) -> Result<()> {
        let all = schema.all();
        for fd in &self.fds {
            if !fd.lhs.is_subset(all) {
                let bad = fd.lhs.difference(all).max().unwrap_or_default();
                return Err(Error::AttributeOutOfRange(bad));
            }
            if fd.rhs >= schema.width() {
                return Err(Error::AttributeOutOfRange(fd.rhs));
            }
        }
        Ok(())
    }

    /// Distinct FDs in first-occurrence order.
    pub fn deduplicated(&self) -> FdSet {
        let mut out: Vec<Fd> = Vec::new();
        for fd in &self.fds {
            if !out.contains(fd) {
                out.push(*fd);
            }
        }
        FdSet { fds: out }
    }

    pub fn lhs_attribute_count(&self) -> usize {
        self.fds.iter().map(|fd| fd.lhs.len()).sum()
    }
}

impl<'a> IntoIterator for &'a FdSet {
    type Item = &'a Fd;
    type IntoIter = std::slice::Iter<'a, Fd>;

    fn into_iter(self) -> Self::IntoIter {
        self.fds.iter()
    }
}

/// Per-FD attribute sets appended to the left-hand sides.
///
/// Ordered lexicographically over the components, each compared in canonical
/// attribute-set order.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExtensionVector(Vec<AttrSet>);

impl ExtensionVector {
    pub fn empty(len: usize) -> Self {
        ExtensionVector(vec![AttrSet::EMPTY; len])
    }

    pub fn from_sets(sets: Vec<AttrSet>) -> Self {
        ExtensionVector(sets)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, index: usize) -> AttrSet {
        self.0[index]
    }

    pub fn sets(&self) -> &[AttrSet] {
        &self.0
    }

    /// Total number of appended attributes.
    pub fn appended(&self) -> usize {
        self.0.iter().map(|s| s.len()).sum()
    }

    pub fn union_all(&self) -> AttrSet {
        self.0.iter().fold(AttrSet::EMPTY, |acc, s| acc.union(*s))
    }

    pub fn with_attr(&self, index: usize, attr: AttrId) -> Self {
        let mut next = self.clone();
        next.0[index].insert(attr);
        next
    }

    pub fn without_attr(&self, index: usize, attr: AttrId) -> Self {
        let mut next = self.clone();
        next.0[index].remove(attr);
        next
    }

    /// Componentwise superset test.
    pub fn extends(&self, other: &ExtensionVector) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| b.is_subset(*a))
    }

    /// Checks the no-trivial-FD invariant against the original FDs.
    pub fn validate(&self, fds: &FdSet) -> Result<()> {
        if self.0.len() != fds.len() {
            return Err(Error::ExtensionArity {
                expected: fds.len(),
                found: self.0.len(),
            });
        }
        for (index, (ext, fd)) in self.0.iter().zip(fds.iter()).enumerate() {
            if !ext.is_disjoint(fd.own_attrs()) {
                return Err(Error::InvalidExtension { index });
            }
        }
        Ok(())
    }

    pub fn to_names(&self, schema: &Schema) -> Vec<Vec<String>> {
        self.0.iter().map(|s| schema.set_names(*s)).collect()
    }
}

impl fmt::Debug for ExtensionVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Ext").field(&self.0).finish()
    }
}

/// Returns `fds` with each LHS extended by the matching entry of `extension`.
pub fn apply_extension(fds: &FdSet, extension: &ExtensionVector) -> Result<FdSet> {
    extension.validate(fds)?;
    Ok(FdSet {
        fds: fds
            .iter()
            .zip(extension.sets())
            .map(|(fd, ext)| Fd::new(fd.lhs.union(*ext), fd.rhs))
            .collect(),
    })
}

/// A non-negative, monotone weight on appended attribute sets with `w(∅) = 0`.
pub trait WeightFn: Send + Sync {
    fn weight(&self, attrs: AttrSet) -> f64;

    fn name(&self) -> &'static str;
}

/// `w(Y) = |Y|`.
#[derive(Clone, Copy, Debug, Default)]
pub struct AttrCount;

impl WeightFn for AttrCount {
    fn weight(&self, attrs: AttrSet) -> f64 {
        attrs.len() as f64
    }

    fn name(&self) -> &'static str {
        "count"
    }
}

/// `w(Y)` = number of distinct `Y`-projections of the input instance.
///
/// Weights are frozen on the instance given at construction and cached per
/// attribute set; each key is computed at most once even under concurrent use.
pub struct DistinctCount {
    instance: Arc<VInstance>,
    cache: Mutex<HashMap<AttrSet, Arc<OnceLock<f64>>>>,
}

impl DistinctCount {
    pub fn new(instance: Arc<VInstance>) -> Self {
        DistinctCount {
            instance,
            cache: Mutex::new(HashMap::new()),
        }
    }
}

impl WeightFn for DistinctCount {
    fn weight(&self, attrs: AttrSet) -> f64 {
        if attrs.is_empty() {
            return 0.0;
        }
        let slot = {
            let mut cache = self.cache.lock().expect("weight cache poisoned");
            Arc::clone(cache.entry(attrs).or_default())
        };
        *slot.get_or_init(|| {
            distinct_count(&self.instance, attrs).expect("extension attributes lie in the schema")
                as f64
        })
    }

    fn name(&self) -> &'static str {
        "distinct"
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightKind {
    Count,
    #[default]
    Distinct,
}

impl WeightKind {
    pub fn build(self, instance: &Arc<VInstance>) -> Box<dyn WeightFn> {
        match self {
            WeightKind::Count => Box::new(AttrCount),
            WeightKind::Distinct => Box::new(DistinctCount::new(Arc::clone(instance))),
        }
    }
}

pub fn weight(attrs: AttrSet, w: &dyn WeightFn) -> f64 {
    w.weight(attrs)
}

/// FD distance: the summed weight of all appended sets.
pub fn dist_c(extension: &ExtensionVector, w: &dyn WeightFn) -> f64 {
    extension.sets().iter().map(|s| w.weight(*s)).sum()
}
