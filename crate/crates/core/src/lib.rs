//! Audio-visual segmentation toolkit.
//!
//! Two halves share this crate:
//!
//! * benchmark synthesis: COCO-style scenes are paired with class-matched
//!   audio clips, panned into stereo from mask geometry and mixed
//!   ([`annotations`], [`audio`], [`vpo`]);
//! * the learning core: visual-query cross-attention fusion with analytic
//!   gradients, contrastive audio-visual pair mining with a supervised
//!   InfoNCE objective, segmentation metrics and a desk-scale trainer
//!   ([`fusion`], [`cavp`], [`metrics`], [`toytrain`]).

pub mod annotations;
pub mod audio;
pub mod blob;
pub mod cavp;
mod error;
pub mod fusion;
pub mod labels;
pub mod metrics;
pub mod raster;
pub mod rng;
pub mod toytrain;
pub mod vpo;

pub use annotations::{ClassTable, InstanceMask, MaskEncoding, SceneSample};
pub use audio::{PanCoefficient, Waveform, SAMPLE_RATE};
pub use error::{Error, Result};
pub use labels::{ClassId, LabelSet, BACKGROUND};
pub use raster::{BinaryMask, LabelRaster};
