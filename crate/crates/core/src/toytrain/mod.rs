//! Desk-scale training loop on synthetic audio-visual scenes.
//!
//! Linear visual and audio encoders feed a cross-attention layer and a
//! per-pixel linear classifier, trained with SGD under one of three losses:
//! cross-entropy alone, cross-entropy plus a supervised contrastive term on
//! the original pairs, or cross-entropy plus the shuffled-pair contrastive
//! term with mined hard negatives.

mod model;
mod scenes;
mod train;

use thiserror::Error;

pub use model::{objective, Encoded, Model, Objective, ParamSet};
pub use scenes::{gen_scenes, SceneConfig, SyntheticScene};
pub use train::{evaluate, parse_trace, poly_lr, run, train, write_trace, LossMode, ToyRunConfig, TraceRecord, TrainConfig, TrainOutcome};

use crate::cavp::CavpError;
use crate::fusion::FusionError;
use crate::metrics::MetricsError;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("loss diverged at epoch {epoch}, step {step} (ce {ce}, cp {cp})")]
    Diverged { epoch: usize, step: usize, ce: f64, cp: f64 },
    #[error("unknown loss mode {0:?} (expected ce_only, ce+supcon or ce+cavp)")]
    LossMode(String),
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error(transparent)]
    Cavp(#[from] CavpError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}
