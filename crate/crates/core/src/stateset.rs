//! Sets of model states as bitsets over dense state indices.

use std::fmt;

use fixedbitset::FixedBitSet;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateSet {
    bits: FixedBitSet,
}

impl StateSet {
    pub fn empty(n: usize) -> StateSet {
        StateSet {
            bits: FixedBitSet::with_capacity(n),
        }
    }

    pub fn full(n: usize) -> StateSet {
        let mut s = StateSet::empty(n);
        s.bits.insert_range(..);
        s
    }

    pub fn from_indices(n: usize, idx: impl IntoIterator<Item = usize>) -> StateSet {
        let mut s = StateSet::empty(n);
        for i in idx {
            s.insert(i);
        }
        s
    }

    /// Number of states in the universe.
    pub fn universe(&self) -> usize {
        self.bits.len()
    }

    pub fn insert(&mut self, i: usize) {
        assert!(i < self.bits.len(), "state index {i} out of range");
        self.bits.insert(i);
    }

    pub fn contains(&self, i: usize) -> bool {
        self.bits.contains(i)
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.ones()
    }

    pub fn union(&self, other: &StateSet) -> StateSet {
        let mut b = self.bits.clone();
        b.union_with(&other.bits);
        StateSet { bits: b }
    }

    pub fn intersection(&self, other: &StateSet) -> StateSet {
        let mut b = self.bits.clone();
        b.intersect_with(&other.bits);
        StateSet { bits: b }
    }

    pub fn complement(&self) -> StateSet {
        let mut b = self.bits.clone();
        b.toggle_range(..);
        StateSet { bits: b }
    }

    pub fn is_subset(&self, other: &StateSet) -> bool {
        self.bits.is_subset(&other.bits)
    }
}

impl fmt::Debug for StateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}
