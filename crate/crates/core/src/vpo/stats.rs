use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ManifestEntry, Mode, Split};
use crate::labels::ClassId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    /// Sounding instances per class.
    pub class_counts: BTreeMap<ClassId, usize>,
    /// Largest over smallest non-zero class count; 1 when there are no counts.
    pub imbalance_ratio: f64,
    pub subset_counts: BTreeMap<Mode, usize>,
    pub split_counts: BTreeMap<Split, usize>,
}

pub fn stats(manifest: &[ManifestEntry]) -> DatasetStats {
    let mut class_counts: BTreeMap<ClassId, usize> = BTreeMap::new();
    let mut subset_counts = BTreeMap::new();
    let mut split_counts = BTreeMap::new();
    for e in manifest {
        for c in e.sounding_classes() {
            *class_counts.entry(c).or_default() += 1;
        }
        *subset_counts.entry(e.subset).or_default() += 1;
        *split_counts.entry(e.split).or_default() += 1;
    }
    let max = class_counts.values().copied().max().unwrap_or(0);
    let min = class_counts.values().copied().min().unwrap_or(0);
    let imbalance_ratio = if min == 0 { 1.0 } else { max as f64 / min as f64 };
    DatasetStats { class_counts, imbalance_ratio, subset_counts, split_counts }
}
