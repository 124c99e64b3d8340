//! Contrastive audio-visual pairing.
//!
//! Audio is shuffled across a batch and fused with every image, producing a
//! pool of per-pixel records `(z, t, y)`: fused feature, audio label set and
//! pixel label. Records are partitioned into foreground, unknown and
//! background anchors; each anchor gets positive and (hard/easy) negative sets
//! that a balanced sampler draws from before the supervised InfoNCE loss.

mod balance;
mod bank;
mod dump;
mod loss;
mod mining;
mod records;

use thiserror::Error;

pub use balance::{balance, split_budget, BalanceConfig, BalanceStats, BalancedSample, PositiveDraw};
pub use bank::{MemoryBank, DEFAULT_BANK_CAPACITY};
pub use dump::{dump_sets, parse_pool, write_pool};
pub use loss::{info_nce, l2_normalize, l2_normalize_backward, total_loss, ContrastiveTerm, InfoNce, TotalLoss};
pub use mining::{mine_sets, partition_anchors, AnchorPartition, ContrastiveSets, LabelMatch, MiningConfig, Partition};
pub use records::{pair_with_permutation, random_pairing, AnchorRecord, Origin, PairedBatch, PairingItem, DEFAULT_ANCHORS_PER_ITEM};

use crate::fusion::FusionError;

/// Temperature of the contrastive loss.
pub const DEFAULT_TEMPERATURE: f64 = 0.1;

#[derive(Debug, Error, PartialEq)]
pub enum CavpError {
    #[error("empty batch")]
    EmptyBatch,
    #[error("permutation {0:?} is not a permutation of the batch indices")]
    Permutation(Vec<usize>),
    #[error("item {item}: {labels} pixel labels for {pixels} feature cells")]
    LabelCount { item: usize, labels: usize, pixels: usize },
    #[error("record {0} is an unknown anchor and cannot be mined")]
    UnknownAnchor(usize),
    #[error("record index {0} out of range")]
    Index(usize),
    #[error("positive proportion {0} outside (0, 1)")]
    Proportion(f64),
    #[error("sampling budget {0} is below 2")]
    Budget(usize),
    #[error("anchor {0} has no negatives")]
    NoNegatives(usize),
    #[error("contrastive term needs at least one positive")]
    NoPositives,
    #[error("temperature must be positive, got {0}")]
    Temperature(f64),
    #[error("label {label} outside 0..{num_classes}")]
    Label { label: u8, num_classes: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("record pool line {line}: {message}")]
    Pool { line: usize, message: String },
    #[error(transparent)]
    Fusion(#[from] FusionError),
}
