//! Dataset synthesis: pairs segmented images with class-matched audio clips.
//!
//! The builder ranks images by class diversity, assigns clips to sounding
//! instances (single source, multiple distinct sources, or multiple sources
//! with repeated classes), drops some sounds, pans every clip by its object's
//! horizontal position and splits the result into train and test.

mod assign;
mod build;
mod manifest;
mod pool;
mod priority;
mod render;
mod split;
mod stats;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use assign::{assign_audio, drop_sounds, AssignConfig};
pub use build::{build_manifest, BuildConfig, BuildOutput};
pub use manifest::{parse_manifest, validate_entry, validate_manifest, write_manifest, ManifestEntry, SoundingSource, Split};
pub use pool::{AudioPool, ClipRef};
pub use priority::{score_image, PriorityKey};
pub use render::{load_clip, render_entry, Rendered};
pub use split::{default_test_fraction, dominant_class, split};
pub use stats::{stats, DatasetStats};

use crate::annotations::AnnotationError;
use crate::audio::AudioError;

/// Most sounding sources kept in a multi-source entry.
pub const MAX_SOURCES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// One sounding instance per image.
    #[serde(rename = "SS")]
    Ss,
    /// Several sounding instances of pairwise distinct classes.
    #[serde(rename = "MS")]
    Ms,
    /// Several sounding instances, classes may repeat.
    #[serde(rename = "MSMI")]
    Msmi,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Ss, Mode::Ms, Mode::Msmi];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Ss => "SS",
            Mode::Ms => "MS",
            Mode::Msmi => "MSMI",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = BuildError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ss" => Ok(Mode::Ss),
            "ms" => Ok(Mode::Ms),
            "msmi" => Ok(Mode::Msmi),
            _ => Err(BuildError::Mode(s.to_string())),
        }
    }
}

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("unknown mode {0:?} (expected ss, ms or msmi)")]
    Mode(String),
    #[error("audio index line {line}: {message}")]
    Pool { line: usize, message: String },
    #[error("image {image_id}: no audio clip for class {class} (tags: {tags})")]
    NoClip { image_id: u64, class: String, tags: String },
    #[error("image {image_id} is not eligible for {mode}")]
    NotEligible { image_id: u64, mode: Mode },
    #[error("test fraction {0} outside (0, 1)")]
    Fraction(f64),
    #[error("drop probability {0} outside [0, 1]")]
    DropProbability(f64),
    #[error("nothing to split")]
    NoEntries,
    #[error("manifest entry {image_id}: {reason}")]
    Invalid { image_id: u64, reason: String },
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("thread pool: {0}")]
    Threads(String),
    #[error(transparent)]
    Annotation(#[from] AnnotationError),
    #[error(transparent)]
    Audio(#[from] AudioError),
}
