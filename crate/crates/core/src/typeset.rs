//! Sets of concept ids over a fixed universe, always containing `Top`.

use std::fmt;

use fixedbitset::FixedBitSet;

use crate::kb::{ConceptId, Vocabulary};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeSet {
    bits: FixedBitSet,
}

impl TypeSet {
    /// `{⊤}` over a universe of `universe` concept ids.
    pub fn top(universe: usize) -> Self {
        let mut bits = FixedBitSet::with_capacity(universe.max(2));
        bits.insert(ConceptId::TOP.index());
        TypeSet { bits }
    }

    /// Every concept id of the universe (the ex falso set).
    pub fn full(universe: usize) -> Self {
        let mut bits = FixedBitSet::with_capacity(universe.max(2));
        bits.insert_range(..);
        TypeSet { bits }
    }

    pub fn with_concepts(universe: usize, items: impl IntoIterator<Item = ConceptId>) -> Self {
        let mut s = Self::top(universe);
        for c in items {
            s.insert(c);
        }
        s
    }

    pub fn universe(&self) -> usize {
        self.bits.len()
    }

    /// Inserts `c`; returns true if it was new.
    pub fn insert(&mut self, c: ConceptId) -> bool {
        !self.bits.put(c.index())
    }

    pub fn contains(&self, c: ConceptId) -> bool {
        self.bits.contains(c.index())
    }

    pub fn has_bot(&self) -> bool {
        self.contains(ConceptId::BOT)
    }

    pub fn is_full(&self) -> bool {
        self.bits.count_ones(..) == self.bits.len()
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones(..)
    }

    /// Never true: `Top` is always present.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn iter(&self) -> impl Iterator<Item = ConceptId> + '_ {
        self.bits.ones().map(|i| ConceptId(i as u32))
    }

    pub fn is_subset(&self, other: &TypeSet) -> bool {
        self.bits.is_subset(&other.bits)
    }

    pub fn union_with(&mut self, other: &TypeSet) {
        self.bits.union_with(&other.bits);
    }

    pub fn make_full(&mut self) {
        self.bits.insert_range(..);
    }

    pub fn display<'a>(&'a self, vocab: &'a Vocabulary) -> impl fmt::Display + 'a {
        Named { set: self, vocab }
    }
}

impl fmt::Debug for TypeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.bits.ones()).finish()
    }
}

struct Named<'a> {
    set: &'a TypeSet,
    vocab: &'a Vocabulary,
}

impl fmt::Display for Named<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, c) in self.set.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(self.vocab.concept_name(c))?;
        }
        f.write_str("}")
    }
}
