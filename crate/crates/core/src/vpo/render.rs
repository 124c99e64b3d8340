use std::path::Path;

use super::{BuildError, ManifestEntry};
use crate::annotations::SceneSample;
use crate::audio::{apply_pan, load_wav, mix, trim, PanCoefficient, PanLaw, Waveform, CLIP_SECONDS};
use crate::labels::LabelSet;
use crate::raster::{BinaryMask, LabelRaster};

/// Rendered assets of one manifest entry.
#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    /// Union of the sounding instances.
    pub mask: BinaryMask,
    pub audio: Waveform,
    /// Sounding instances painted with their class; everything else background.
    pub labels: LabelRaster,
    pub audio_labels: LabelSet,
}

/// Reads a WAV clip from `root/relative`.
pub fn load_clip(root: &Path, relative: &str) -> Result<Waveform, BuildError> {
    let path = root.join(relative);
    let bytes = std::fs::read(&path).map_err(|e| BuildError::Io { path: path.display().to_string(), message: e.to_string() })?;
    load_wav(&bytes).map_err(|e| BuildError::Io { path: path.display().to_string(), message: e.to_string() })
}

/// Synthesizes the stereo mixture and label raster of `e`.
///
/// Each clip is downmixed to mono, trimmed (or tiled) to the clip length,
/// panned by its source's coefficient and the mixture peak-normalized.
pub fn render_entry(
    e: &ManifestEntry,
    scene: &SceneSample,
    load: impl Fn(&str) -> Result<Waveform, BuildError>,
    law: PanLaw,
) -> Result<Rendered, BuildError> {
    let mut mask = BinaryMask::zeros(scene.height, scene.width);
    let mut labels = LabelRaster::background(scene.height, scene.width);
    let mut tracks = Vec::with_capacity(e.sounding.len());
    for s in &e.sounding {
        let inst = scene
            .instance(s.instance_id)
            .ok_or_else(|| BuildError::Invalid { image_id: e.image_id, reason: format!("instance {} not in scene", s.instance_id) })?;
        let m = scene.raster(inst)?;
        labels.paint(m, s.class_id);
        for (r, c) in m.foreground() {
            mask.set(r, c, true);
        }
        let clip = trim(&load(&s.clip)?.to_mono(), CLIP_SECONDS)?;
        tracks.push(apply_pan(&clip, PanCoefficient::new(s.alpha)?, law)?);
    }
    let audio = mix(&tracks)?;
    Ok(Rendered { mask, audio, labels, audio_labels: e.audio_labels() })
}
