//! Class identifiers and multi-label audio annotations.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A semantic class index. `0` is always background.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassId(pub u8);

pub const BACKGROUND: ClassId = ClassId(0);

impl ClassId {
    pub fn is_background(self) -> bool {
        self == BACKGROUND
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u8> for ClassId {
    fn from(v: u8) -> Self {
        ClassId(v)
    }
}

/// Set of foreground classes audible in a clip, as a 64-bit mask.
///
/// The empty set denotes silent audio. Background is never a member.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct LabelSet(u64);

pub const MAX_CLASSES: usize = 64;

impl LabelSet {
    pub const EMPTY: LabelSet = LabelSet(0);

    pub fn from_bits(bits: u64) -> Self {
        LabelSet(bits & !1)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn single(c: ClassId) -> Self {
        let mut s = Self::EMPTY;
        s.insert(c);
        s
    }

    /// Inserts `c`. Background and ids past [`MAX_CLASSES`] are ignored.
    pub fn insert(&mut self, c: ClassId) {
        if !c.is_background() && c.index() < MAX_CLASSES {
            self.0 |= 1 << c.0;
        }
    }

    pub fn contains(self, c: ClassId) -> bool {
        c.index() < MAX_CLASSES && self.0 & (1 << c.0) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = ClassId> {
        (1..MAX_CLASSES as u8).filter(move |&c| self.0 & (1 << c) != 0).map(ClassId)
    }
}

impl FromIterator<ClassId> for LabelSet {
    fn from_iter<I: IntoIterator<Item = ClassId>>(iter: I) -> Self {
        let mut s = LabelSet::EMPTY;
        for c in iter {
            s.insert(c);
        }
        s
    }
}

impl Serialize for LabelSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for LabelSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let ids = Vec::<ClassId>::deserialize(d)?;
        Ok(ids.into_iter().collect())
    }
}
