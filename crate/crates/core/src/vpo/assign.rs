use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{score_image, AudioPool, BuildError, ManifestEntry, Mode, SoundingSource, Split, MAX_SOURCES};
use crate::annotations::{center_of_mass, ClassTable, InstanceMask, SceneSample};
use crate::audio::{pan_alpha, PanLaw};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AssignConfig {
    /// Chance that each droppable sounding instance is silenced.
    pub p_drop: f64,
    /// Dropping only happens above this many sounding instances.
    pub drop_threshold: usize,
    pub max_sources: usize,
    pub pan_law: PanLaw,
}

impl Default for AssignConfig {
    fn default() -> Self {
        Self { p_drop: 0.5, drop_threshold: 2, max_sources: MAX_SOURCES, pan_law: PanLaw::Linear }
    }
}

fn no_clip(s: &SceneSample, table: &ClassTable, inst: &InstanceMask) -> BuildError {
    let entry = table.get(inst.class_id);
    BuildError::NoClip {
        image_id: s.image_id,
        class: entry.map_or_else(|| inst.class_id.to_string(), |e| e.visual_label.clone()),
        tags: entry.map_or_else(String::new, |e| e.audio_tags.join("; ")),
    }
}

fn source<R: Rng + ?Sized>(
    s: &SceneSample,
    inst: &InstanceMask,
    pool: &AudioPool,
    table: &ClassTable,
    law: PanLaw,
    rng: &mut R,
) -> Result<SoundingSource, BuildError> {
    let clips = pool.clips_for_class(table, inst.class_id);
    if clips.is_empty() {
        return Err(no_clip(s, table, inst));
    }
    let clip = clips[rng.random_range(0..clips.len())];
    let (_, cw) = center_of_mass(s.raster(inst)?)?;
    let alpha = pan_alpha(cw, s.width)?;
    let (l, r) = law.gains(alpha);
    Ok(SoundingSource {
        instance_id: inst.instance_id,
        class_id: inst.class_id,
        tag: clip.tag.clone(),
        clip: clip.path.clone(),
        alpha: alpha.value(),
        gains: [l, r],
    })
}

/// Chooses sounding instances and clips for one image.
///
/// SS picks one instance uniformly among those whose class has clips. MS and
/// MSMI start with every instance sounding, apply [`drop_sounds`], then keep
/// at most `max_sources` survivors chosen uniformly.
pub fn assign_audio<R: Rng + ?Sized>(
    s: &SceneSample,
    mode: Mode,
    rng: &mut R,
    pool: &AudioPool,
    table: &ClassTable,
    cfg: &AssignConfig,
) -> Result<ManifestEntry, BuildError> {
    if !score_image(s, mode).eligible {
        return Err(BuildError::NotEligible { image_id: s.image_id, mode });
    }
    if !(0.0..=1.0).contains(&cfg.p_drop) {
        return Err(BuildError::DropProbability(cfg.p_drop));
    }
    let mut entry = ManifestEntry {
        image_id: s.image_id,
        subset: mode,
        split: Split::Train,
        sounding: Vec::new(),
        silent_instances: Vec::new(),
        mixed_audio: format!("audio/{}.wav", s.image_id),
        label_raster: format!("labels/{}.pgm", s.image_id),
    };
    match mode {
        Mode::Ss => {
            let candidates: Vec<&InstanceMask> = s.instances.iter().filter(|i| pool.has_class(table, i.class_id)).collect();
            if candidates.is_empty() {
                return Err(no_clip(s, table, &s.instances[0]));
            }
            let chosen = candidates[rng.random_range(0..candidates.len())];
            entry.sounding.push(source(s, chosen, pool, table, cfg.pan_law, rng)?);
            entry.silent_instances = s.instances.iter().map(|i| i.instance_id).filter(|&id| id != chosen.instance_id).collect();
        }
        Mode::Ms | Mode::Msmi => {
            for inst in &s.instances {
                entry.sounding.push(source(s, inst, pool, table, cfg.pan_law, rng)?);
            }
            entry = drop_sounds(entry, rng, cfg.p_drop, cfg.drop_threshold);
            if entry.sounding.len() > cfg.max_sources {
                let mut keep = rand::seq::index::sample(rng, entry.sounding.len(), cfg.max_sources).into_vec();
                keep.sort_unstable();
                let all = std::mem::take(&mut entry.sounding);
                for (i, src) in all.into_iter().enumerate() {
                    if keep.binary_search(&i).is_ok() {
                        entry.sounding.push(src);
                    } else {
                        entry.silent_instances.push(src.instance_id);
                    }
                }
                entry.silent_instances.sort_unstable();
            }
        }
    }
    Ok(entry)
}

/// Silences some sources when more than `threshold` are sounding: one
/// uniformly chosen source always survives, each other one is dropped with
/// probability `p_drop`.
pub fn drop_sounds<R: Rng + ?Sized>(mut e: ManifestEntry, rng: &mut R, p_drop: f64, threshold: usize) -> ManifestEntry {
    let n = e.sounding.len();
    if n <= threshold {
        return e;
    }
    let keeper = rng.random_range(0..n);
    let all = std::mem::take(&mut e.sounding);
    for (i, src) in all.into_iter().enumerate() {
        if i == keeper || !rng.random_bool(p_drop.clamp(0.0, 1.0)) {
            e.sounding.push(src);
        } else {
            e.silent_instances.push(src.instance_id);
        }
    }
    e.silent_instances.sort_unstable();
    e
}
