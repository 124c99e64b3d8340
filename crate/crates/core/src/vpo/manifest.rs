use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{BuildError, Mode, MAX_SOURCES};
use crate::annotations::SceneSample;
use crate::labels::{ClassId, LabelSet};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    #[default]
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoundingSource {
    pub instance_id: u64,
    pub class_id: ClassId,
    pub tag: String,
    /// Clip path relative to the audio pool root.
    pub clip: String,
    pub alpha: f64,
    /// `[left, right]`.
    pub gains: [f64; 2],
}

/// One synthesized sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub image_id: u64,
    pub subset: Mode,
    pub split: Split,
    pub sounding: Vec<SoundingSource>,
    pub silent_instances: Vec<u64>,
    /// Output paths relative to the build directory.
    pub mixed_audio: String,
    pub label_raster: String,
}

impl ManifestEntry {
    pub fn audio_labels(&self) -> LabelSet {
        self.sounding.iter().map(|s| s.class_id).collect()
    }

    pub fn sounding_classes(&self) -> impl Iterator<Item = ClassId> + '_ {
        self.sounding.iter().map(|s| s.class_id)
    }
}

fn invalid(e: &ManifestEntry, reason: impl Into<String>) -> BuildError {
    BuildError::Invalid { image_id: e.image_id, reason: reason.into() }
}

/// Checks one entry's invariants, and its consistency with `scene` when given.
pub fn validate_entry(e: &ManifestEntry, scene: Option<&SceneSample>) -> Result<(), BuildError> {
    let n = e.sounding.len();
    match e.subset {
        Mode::Ss if n != 1 => return Err(invalid(e, format!("SS entry has {n} sounding instances"))),
        Mode::Ms | Mode::Msmi if !(1..=MAX_SOURCES).contains(&n) => {
            return Err(invalid(e, format!("{} entry has {n} sounding instances", e.subset)))
        }
        _ => {}
    }
    if e.subset == Mode::Ms {
        let classes: BTreeSet<ClassId> = e.sounding_classes().collect();
        if classes.len() != n {
            return Err(invalid(e, "MS entry repeats a sounding class"));
        }
    }
    let mut ids = BTreeSet::new();
    for id in e.sounding.iter().map(|s| s.instance_id).chain(e.silent_instances.iter().copied()) {
        if !ids.insert(id) {
            return Err(invalid(e, format!("instance {id} listed twice")));
        }
    }
    for s in &e.sounding {
        if s.class_id.is_background() {
            return Err(invalid(e, format!("instance {} sounds as background", s.instance_id)));
        }
        if !(0.0..=1.0).contains(&s.alpha) {
            return Err(invalid(e, format!("instance {} has alpha {}", s.instance_id, s.alpha)));
        }
        if s.gains.iter().any(|g| !(0.0..=1.0).contains(g)) {
            return Err(invalid(e, format!("instance {} has gains {:?}", s.instance_id, s.gains)));
        }
    }
    if let Some(scene) = scene {
        if scene.image_id != e.image_id {
            return Err(invalid(e, format!("paired with scene {}", scene.image_id)));
        }
        for s in &e.sounding {
            match scene.instance(s.instance_id) {
                Some(inst) if inst.class_id == s.class_id => {}
                Some(_) => return Err(invalid(e, format!("instance {} has a different class in the scene", s.instance_id))),
                None => return Err(invalid(e, format!("instance {} is not in the scene", s.instance_id))),
            }
            if !scene.distinct_classes().contains(&s.class_id) {
                return Err(invalid(e, format!("class {} absent from the scene", s.class_id)));
            }
        }
        let all: BTreeSet<u64> = scene.instances.iter().map(|i| i.instance_id).collect();
        if all != ids {
            return Err(invalid(e, "sounding and silent instances do not cover the scene"));
        }
    }
    Ok(())
}

/// Validates every entry and checks image ids are unique.
pub fn validate_manifest<'a>(
    entries: &[ManifestEntry],
    scene: impl Fn(u64) -> Option<&'a SceneSample>,
) -> Result<(), BuildError> {
    let mut seen = BTreeSet::new();
    for e in entries {
        if !seen.insert(e.image_id) {
            return Err(invalid(e, "duplicate image id"));
        }
        validate_entry(e, scene(e.image_id))?;
    }
    Ok(())
}

/// One JSON object per line.
pub fn write_manifest(entries: &[ManifestEntry]) -> String {
    let mut s = String::new();
    for e in entries {
        s.push_str(&serde_json::to_string(e).expect("manifest entries serialize"));
        s.push('\n');
    }
    s
}

pub fn parse_manifest(text: &str) -> Result<Vec<ManifestEntry>, BuildError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| BuildError::Manifest { line: i + 1, message: e.to_string() }))
        .collect()
}
