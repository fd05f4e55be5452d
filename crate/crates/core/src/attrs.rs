//! Attribute identifiers and compact attribute sets.
//!
//! Attributes are identified by their column position in the schema, which is
//! also the total order used by the search tree. Sets are stored as a 64-bit
//! mask, so a schema may hold at most [`MAX_ATTRIBUTES`] columns.

use std::cmp::Ordering;
use std::fmt;

/// Column index of an attribute in its schema.
pub type AttrId = usize;

/// Largest schema width supported by [`AttrSet`].
pub const MAX_ATTRIBUTES: usize = 64;

/// A set of attributes, ordered canonically by its ascending member list.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct AttrSet(u64);

impl AttrSet {
    pub const EMPTY: AttrSet = AttrSet(0);

    pub fn singleton(attr: AttrId) -> Self {
        debug_assert!(attr < MAX_ATTRIBUTES);
        AttrSet(1u64 << attr)
    }

    /// All attributes `0..width`.
    pub fn full(width: usize) -> Self {
        debug_assert!(width <= MAX_ATTRIBUTES);
        if width == MAX_ATTRIBUTES {
            AttrSet(u64::MAX)
        } else {
            AttrSet((1u64 << width) - 1)
        }
    }

    pub fn from_bits(bits: u64) -> Self {
        AttrSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, attr: AttrId) -> bool {
        attr < MAX_ATTRIBUTES && self.0 & (1u64 << attr) != 0
    }

    pub fn insert(&mut self, attr: AttrId) {
        self.0 |= 1u64 << attr;
    }

    pub fn remove(&mut self, attr: AttrId) {
        self.0 &= !(1u64 << attr);
    }

    pub fn with(self, attr: AttrId) -> Self {
        AttrSet(self.0 | (1u64 << attr))
    }

    pub fn without(self, attr: AttrId) -> Self {
        AttrSet(self.0 & !(1u64 << attr))
    }

    pub fn union(self, other: AttrSet) -> Self {
        AttrSet(self.0 | other.0)
    }

    pub fn intersection(self, other: AttrSet) -> Self {
        AttrSet(self.0 & other.0)
    }

    pub fn difference(self, other: AttrSet) -> Self {
        AttrSet(self.0 & !other.0)
    }

    pub fn is_disjoint(self, other: AttrSet) -> bool {
        self.0 & other.0 == 0
    }

    pub fn is_subset(self, other: AttrSet) -> bool {
        self.0 & !other.0 == 0
    }

    /// Greatest attribute under the schema order, if any.
    pub fn max(self) -> Option<AttrId> {
        if self.0 == 0 {
            None
        } else {
            Some(63 - self.0.leading_zeros() as usize)
        }
    }

    pub fn iter(self) -> AttrIter {
        AttrIter(self.0)
    }
}

impl FromIterator<AttrId> for AttrSet {
    fn from_iter<I: IntoIterator<Item = AttrId>>(iter: I) -> Self {
        let mut set = AttrSet::EMPTY;
        for a in iter {
            set.insert(a);
        }
        set
    }
}

impl IntoIterator for AttrSet {
    type Item = AttrId;
    type IntoIter = AttrIter;

    fn into_iter(self) -> AttrIter {
        self.iter()
    }
}

/// Ascending iterator over the members of an [`AttrSet`].
#[derive(Clone)]
pub struct AttrIter(u64);

impl Iterator for AttrIter {
    type Item = AttrId;

    fn next(&mut self) -> Option<AttrId> {
        if self.0 == 0 {
            return None;
        }
        let a = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(a)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for AttrIter {}

// Lexicographic over the ascending member lists: {A} < {A,B} < {B}.
impl Ord for AttrSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.iter().cmp(other.iter())
    }
}

impl PartialOrd for AttrSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for AttrSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}
