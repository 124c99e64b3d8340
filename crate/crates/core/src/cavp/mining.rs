use serde::{Deserialize, Serialize};

use super::{AnchorRecord, CavpError};
use crate::labels::ClassId;

/// How a pixel label is matched against an audio label set.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelMatch {
    /// `y ∈ t`.
    #[default]
    Membership,
    /// `t == {y}`.
    Equality,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MiningConfig {
    pub label_match: LabelMatch,
    /// Drop unknown records from every set instead of treating them as easy negatives.
    pub exclude_unknown: bool,
}

impl Default for MiningConfig {
    fn default() -> Self {
        Self { label_match: LabelMatch::Membership, exclude_unknown: true }
    }
}

impl MiningConfig {
    fn matches(&self, r: &AnchorRecord, class: ClassId) -> bool {
        match self.label_match {
            LabelMatch::Membership => r.t.contains(class),
            LabelMatch::Equality => r.t.len() == 1 && r.t.contains(class),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Partition {
    /// Foreground pixel whose class is audible in the paired audio.
    Foreground,
    /// Background pixel paired with non-silent audio; its class is ambiguous.
    Unknown,
    Background,
}

impl Partition {
    pub fn name(self) -> &'static str {
        match self {
            Partition::Foreground => "fg",
            Partition::Unknown => "unknown",
            Partition::Background => "bg",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnchorPartition {
    pub foreground: Vec<usize>,
    pub unknown: Vec<usize>,
    pub background: Vec<usize>,
}

impl AnchorPartition {
    pub fn of(&self, index: usize) -> Option<Partition> {
        let has = |v: &Vec<usize>| v.binary_search(&index).is_ok();
        if has(&self.foreground) {
            Some(Partition::Foreground)
        } else if has(&self.unknown) {
            Some(Partition::Unknown)
        } else if has(&self.background) {
            Some(Partition::Background)
        } else {
            None
        }
    }

    pub fn len(&self) -> usize {
        self.foreground.len() + self.unknown.len() + self.background.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn classify(r: &AnchorRecord, cfg: &MiningConfig) -> Partition {
    if !r.y.is_background() && cfg.matches(r, r.y) {
        Partition::Foreground
    } else if r.y.is_background() && !r.t.is_empty() {
        Partition::Unknown
    } else {
        Partition::Background
    }
}

/// Splits record indices into the three anchor groups; each list is sorted.
pub fn partition_anchors(records: &[AnchorRecord], cfg: &MiningConfig) -> AnchorPartition {
    let mut p = AnchorPartition::default();
    for (i, r) in records.iter().enumerate() {
        match classify(r, cfg) {
            Partition::Foreground => p.foreground.push(i),
            Partition::Unknown => p.unknown.push(i),
            Partition::Background => p.background.push(i),
        }
    }
    p
}

/// Positive, hard-negative and easy-negative record indices for one anchor.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ContrastiveSets {
    pub anchor: usize,
    pub positives: Vec<usize>,
    pub hard_negatives: Vec<usize>,
    pub easy_negatives: Vec<usize>,
}

impl ContrastiveSets {
    pub fn negatives(&self) -> impl Iterator<Item = usize> + '_ {
        self.hard_negatives.iter().chain(&self.easy_negatives).copied()
    }

    pub fn num_negatives(&self) -> usize {
        self.hard_negatives.len() + self.easy_negatives.len()
    }
}

/// Mines the contrastive sets of `anchor` against the whole pool.
///
/// For a foreground anchor of class `c`, a record is positive when its audio
/// matches `c` and its pixel is `c`; it is a hard negative when exactly one of
/// those holds; everything else is an easy negative. A background anchor has
/// the other background records as positives and the foreground records as
/// (easy) negatives. The anchor never appears in its own sets.
pub fn mine_sets(
    anchor: usize,
    records: &[AnchorRecord],
    partition: &AnchorPartition,
    cfg: &MiningConfig,
) -> Result<ContrastiveSets, CavpError> {
    let a = records.get(anchor).ok_or(CavpError::Index(anchor))?;
    let mut sets = ContrastiveSets { anchor, ..Default::default() };
    match classify(a, cfg) {
        Partition::Unknown => return Err(CavpError::UnknownAnchor(anchor)),
        Partition::Background => {
            sets.positives = partition.background.iter().copied().filter(|&j| j != anchor).collect();
            sets.easy_negatives = partition.foreground.clone();
        }
        Partition::Foreground => {
            let c = a.y;
            for (j, r) in records.iter().enumerate() {
                if j == anchor || (cfg.exclude_unknown && classify(r, cfg) == Partition::Unknown) {
                    continue;
                }
                match (cfg.matches(r, c), r.y == c) {
                    (true, true) => sets.positives.push(j),
                    (true, false) | (false, true) => sets.hard_negatives.push(j),
                    (false, false) => sets.easy_negatives.push(j),
                }
            }
        }
    }
    Ok(sets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cavp::Origin;
    use crate::labels::LabelSet;

    fn rec(pixel: usize, y: u8, t: &[u8]) -> AnchorRecord {
        AnchorRecord {
            origin: Origin { item: 0, pixel },
            y: ClassId(y),
            t: t.iter().map(|&c| ClassId(c)).collect::<LabelSet>(),
            z: Vec::new(),
        }
    }

    #[test]
    fn partition_rules() {
        let pool = vec![rec(0, 1, &[1]), rec(1, 1, &[2]), rec(2, 0, &[2]), rec(3, 0, &[]), rec(4, 2, &[]), rec(5, 1, &[1, 2])];
        let cfg = MiningConfig::default();
        let p = partition_anchors(&pool, &cfg);
        assert_eq!(p.foreground, vec![0, 5]);
        assert_eq!(p.unknown, vec![2]);
        assert_eq!(p.background, vec![1, 3, 4]);
        let eq = partition_anchors(&pool, &MiningConfig { label_match: LabelMatch::Equality, ..cfg });
        assert_eq!(eq.foreground, vec![0]);
        assert_eq!(eq.of(5), Some(Partition::Background));
    }

    #[test]
    fn foreground_sets() {
        // anchor 0 is class 1 heard in its own audio.
        let pool = vec![
            rec(0, 1, &[1]),
            rec(1, 1, &[1, 3]), // positive
            rec(2, 2, &[1]),    // hard: audio matches, pixel differs
            rec(3, 1, &[2]),    // hard: pixel matches, audio differs
            rec(4, 2, &[2]),    // easy
            rec(5, 0, &[1]),    // unknown
            rec(6, 0, &[]),     // easy (background)
        ];
        let cfg = MiningConfig::default();
        let p = partition_anchors(&pool, &cfg);
        let s = mine_sets(0, &pool, &p, &cfg).unwrap();
        assert_eq!(s.positives, vec![1]);
        assert_eq!(s.hard_negatives, vec![2, 3]);
        assert_eq!(s.easy_negatives, vec![4, 6]);
        let keep = MiningConfig { exclude_unknown: false, ..cfg };
        let s = mine_sets(0, &pool, &p, &keep).unwrap();
        assert_eq!(s.hard_negatives, vec![2, 3, 5]);
        assert_eq!(mine_sets(5, &pool, &p, &cfg), Err(CavpError::UnknownAnchor(5)));
        let b = mine_sets(6, &pool, &p, &cfg).unwrap();
        assert_eq!(b.positives, vec![2, 3]);
        assert_eq!(b.easy_negatives, vec![0, 1, 4]);
        assert!(b.hard_negatives.is_empty());
    }
}
