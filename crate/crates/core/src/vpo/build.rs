use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{assign_audio, default_test_fraction, score_image, split, AssignConfig, AudioPool, BuildError, ManifestEntry, Mode};
use crate::annotations::{ClassTable, SceneSample};
use crate::rng::item_stream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildConfig {
    pub mode: Mode,
    pub seed: u64,
    #[serde(flatten)]
    pub assign: AssignConfig,
    /// Defaults to the published subset's test share.
    #[serde(default)]
    pub test_fraction: Option<f64>,
    /// Keep only the first `limit` eligible images in priority order.
    #[serde(default)]
    pub limit: Option<usize>,
}

impl BuildConfig {
    pub fn new(mode: Mode, seed: u64) -> Self {
        Self { mode, seed, assign: AssignConfig::default(), test_fraction: None, limit: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildOutput {
    /// Entries in priority order.
    pub entries: Vec<ManifestEntry>,
    pub ineligible: usize,
}

/// Ranks, assigns and splits a whole corpus.
///
/// Each image draws from its own seeded stream, so the output does not
/// depend on `threads`.
pub fn build_manifest(
    scenes: &[SceneSample],
    pool: &AudioPool,
    table: &ClassTable,
    cfg: &BuildConfig,
    threads: usize,
) -> Result<BuildOutput, BuildError> {
    let mut ranked: Vec<_> = scenes.iter().map(|s| (score_image(s, cfg.mode), s)).collect();
    ranked.sort_by_key(|r| r.0);
    let ineligible = ranked.iter().filter(|(k, _)| !k.eligible).count();
    let mut chosen: Vec<&SceneSample> = ranked.into_iter().filter(|(k, _)| k.eligible).map(|(_, s)| s).collect();
    if let Some(limit) = cfg.limit {
        chosen.truncate(limit);
    }
    let run = || {
        chosen
            .par_iter()
            .map(|s| {
                let mut rng = item_stream(cfg.seed, cfg.mode.name(), s.image_id);
                assign_audio(s, cfg.mode, &mut rng, pool, table, &cfg.assign)
            })
            .collect::<Result<Vec<_>, _>>()
    };
    let mut entries = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| BuildError::Threads(e.to_string()))?
        .install(run)?;
    if !entries.is_empty() {
        split(&mut entries, cfg.test_fraction.unwrap_or_else(|| default_test_fraction(cfg.mode)), cfg.seed)?;
    }
    Ok(BuildOutput { entries, ineligible })
}
