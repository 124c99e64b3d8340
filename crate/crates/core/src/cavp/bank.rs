use std::collections::{BTreeMap, VecDeque};

use crate::labels::ClassId;

pub const DEFAULT_BANK_CAPACITY: usize = 64;

/// Per-class FIFO store of audio items (waveform references, embeddings…)
/// used to synthesize positives for classes missing from a batch.
#[derive(Debug, Clone)]
pub struct MemoryBank<T> {
    capacity: usize,
    slots: BTreeMap<ClassId, VecDeque<T>>,
}

impl<T> Default for MemoryBank<T> {
    fn default() -> Self {
        Self::new(DEFAULT_BANK_CAPACITY)
    }
}

impl<T> MemoryBank<T> {
    pub fn new(capacity: usize) -> Self {
        Self { capacity, slots: BTreeMap::new() }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Stores `item` under `class`, evicting that class's oldest item when full.
    pub fn push(&mut self, class: ClassId, item: T) -> Option<T> {
        if self.capacity == 0 {
            return Some(item);
        }
        let q = self.slots.entry(class).or_default();
        let evicted = if q.len() == self.capacity { q.pop_front() } else { None };
        q.push_back(item);
        evicted
    }

    pub fn len(&self, class: ClassId) -> usize {
        self.slots.get(&class).map_or(0, VecDeque::len)
    }

    pub fn is_empty(&self, class: ClassId) -> bool {
        self.len(class) == 0
    }

    pub fn get(&self, class: ClassId, i: usize) -> Option<&T> {
        self.slots.get(&class)?.get(i)
    }
}
