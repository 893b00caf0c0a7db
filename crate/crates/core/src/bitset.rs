//! Fixed-capacity bitsets over dense indices.
//!
//! States and sources are referenced by index, so all the set machinery
//! (equivalence classes, selections, exhaustive subset enumeration) runs on
//! a single `u64` word. Instances are capped at 64 states and 64 sources.

use std::fmt;

/// Maximum number of elements a [`BitSet`] can hold.
pub const MAX_BITS: usize = 64;

/// A set of indices in `0..64`, ordered by its underlying word. The numeric
/// order doubles as the lexicographic tie-break order used by the solvers.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct BitSet(u64);

impl BitSet {
    pub const EMPTY: BitSet = BitSet(0);

    pub fn empty() -> Self {
        BitSet(0)
    }

    /// The full set `{0, .., n-1}`.
    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_BITS, "bitset capacity is {MAX_BITS}");
        if n == MAX_BITS {
            BitSet(u64::MAX)
        } else {
            BitSet((1u64 << n) - 1)
        }
    }

    pub fn singleton(i: usize) -> Self {
        assert!(i < MAX_BITS);
        BitSet(1u64 << i)
    }

    pub fn from_bits(bits: u64) -> Self {
        BitSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn contains(self, i: usize) -> bool {
        i < MAX_BITS && self.0 & (1u64 << i) != 0
    }

    #[must_use]
    pub fn insert(self, i: usize) -> Self {
        assert!(i < MAX_BITS);
        BitSet(self.0 | (1u64 << i))
    }

    #[must_use]
    pub fn remove(self, i: usize) -> Self {
        assert!(i < MAX_BITS);
        BitSet(self.0 & !(1u64 << i))
    }

    #[must_use]
    pub fn union(self, other: Self) -> Self {
        BitSet(self.0 | other.0)
    }

    #[must_use]
    pub fn intersect(self, other: Self) -> Self {
        BitSet(self.0 & other.0)
    }

    #[must_use]
    pub fn difference(self, other: Self) -> Self {
        BitSet(self.0 & !other.0)
    }

    /// Complement relative to the full set of `n` elements.
    #[must_use]
    pub fn complement(self, n: usize) -> Self {
        BitSet(!self.0).intersect(Self::full(n))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset_of(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i)
            }
        })
    }
}

impl FromIterator<usize> for BitSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        iter.into_iter().fold(BitSet::empty(), BitSet::insert)
    }
}

impl fmt::Debug for BitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// Enumerates all `2^n` subsets of `{0, .., n-1}` in increasing word order.
pub fn all_subsets(n: usize) -> impl Iterator<Item = BitSet> {
    assert!(n < MAX_BITS, "exhaustive enumeration needs n < {MAX_BITS}");
    (0u64..(1u64 << n)).map(BitSet::from_bits)
}
