//! Attention-based audio-visual fusion with hand-written backward passes.

mod attention;
mod cross;

use thiserror::Error;

pub use attention::{mha, Activation, MhaCache};
pub use cross::{cross_attend, AudioEmbedding, CrossAttention, FeatureMap, FusionCache, FusionGrads, FusionSession, QueryMode};

#[derive(Debug, Error, PartialEq)]
pub enum FusionError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("feature width {dim} is not divisible by {heads} heads")]
    Heads { dim: usize, heads: usize },
    #[error("backward called before a forward pass")]
    MissingForward,
}
