use std::cmp::Ordering;

use super::Mode;
use crate::annotations::SceneSample;

/// Collection order of an image: eligible before ineligible, then more
/// distinct classes first, then lower image id. Sorting ascending yields the
/// order in which images are collected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PriorityKey {
    pub eligible: bool,
    pub diversity: usize,
    pub image_id: u64,
}

impl Ord for PriorityKey {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .eligible
            .cmp(&self.eligible)
            .then(other.diversity.cmp(&self.diversity))
            .then(self.image_id.cmp(&other.image_id))
    }
}

impl PartialOrd for PriorityKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub fn score_image(s: &SceneSample, mode: Mode) -> PriorityKey {
    let diversity = s.distinct_classes().len();
    let eligible = match mode {
        Mode::Ss => !s.instances.is_empty(),
        Mode::Ms => diversity >= 2 && !s.has_duplicate_classes(),
        Mode::Msmi => s.has_duplicate_classes(),
    };
    PriorityKey { eligible, diversity, image_id: s.image_id }
}
