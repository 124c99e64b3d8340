use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::labels::{ClassId, LabelSet, BACKGROUND};
use crate::rng::item_stream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    pub scenes: usize,
    /// Class count including background.
    pub classes: usize,
    pub height: usize,
    pub width: usize,
    /// Standard deviation of the feature noise.
    pub sigma: f64,
    /// Chance that a scene also holds a silent object of another class.
    pub distractor_prob: f64,
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self { scenes: 128, classes: 5, height: 8, width: 8, sigma: 0.5, distractor_prob: 0.75, seed: 0 }
    }
}

/// One synthetic image/audio pair.
///
/// Visual cells carry the one-hot pattern of their object's class (class 0
/// for empty cells) plus noise. Audio has one token: the sounding class's
/// one-hot pattern plus noise, followed by `[1 − α, α]` for the object's
/// horizontal position. Silent distractors are labeled background.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub height: usize,
    pub width: usize,
    /// `(height·width) × classes`.
    pub features: Array2<f64>,
    pub labels: Vec<ClassId>,
    /// `1 × (classes + 2)`.
    pub audio: Array2<f64>,
    pub audio_labels: LabelSet,
    /// Classes visible in the image but absent from the audio.
    pub distractors: LabelSet,
}

impl SyntheticScene {
    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    /// Audio token width for `classes` classes.
    pub fn audio_dim(classes: usize) -> usize {
        classes + 2
    }
}

fn place<R: Rng + ?Sized>(rng: &mut R, h: usize, c_lo: usize, c_hi: usize) -> (usize, usize, usize, usize) {
    let span = c_hi - c_lo;
    let rh = rng.random_range(2.min(h)..=h);
    let rw = rng.random_range(1.max(span / 2)..=span);
    let r0 = rng.random_range(0..=h - rh);
    let c0 = c_lo + rng.random_range(0..=span - rw);
    (r0, c0, r0 + rh, c0 + rw)
}

pub fn gen_scenes(cfg: &SceneConfig) -> Result<Vec<SyntheticScene>, TrainError> {
    if cfg.scenes == 0 || cfg.classes < 2 {
        return Err(TrainError::Config("need at least one scene and two classes".into()));
    }
    if cfg.classes > crate::labels::MAX_CLASSES || cfg.width < 2 || cfg.height < 1 {
        return Err(TrainError::Config(format!("unsupported grid {}×{} or class count {}", cfg.height, cfg.width, cfg.classes)));
    }
    if cfg.sigma.is_nan() || cfg.sigma < 0.0 || !(0.0..=1.0).contains(&cfg.distractor_prob) {
        return Err(TrainError::Config("sigma must be non-negative and distractor_prob in [0, 1]".into()));
    }
    let (h, w, c) = (cfg.height, cfg.width, cfg.classes);
    let scenes = (0..cfg.scenes as u64)
        .map(|i| {
            let mut rng = item_stream(cfg.seed, "toy-scene", i);
            let sounding = ClassId(rng.random_range(1..c) as u8);
            let left = rng.random_bool(0.5);
            let half = w / 2;
            let (lo, hi) = if left { (0, half) } else { (half, w) };
            let mut classes = vec![BACKGROUND; h * w];
            let mut labels = vec![BACKGROUND; h * w];
            let (r0, c0, r1, c1) = place(&mut rng, h, lo, hi);
            for r in r0..r1 {
                for col in c0..c1 {
                    classes[r * w + col] = sounding;
                    labels[r * w + col] = sounding;
                }
            }
            let mut distractors = LabelSet::EMPTY;
            if c > 2 && rng.random_bool(cfg.distractor_prob) {
                let mut d = rng.random_range(1..c - 1) as u8;
                if d >= sounding.0 {
                    d += 1;
                }
                distractors.insert(ClassId(d));
                let (lo, hi) = if left { (half, w) } else { (0, half) };
                let (r0, c0, r1, c1) = place(&mut rng, h, lo, hi);
                for r in r0..r1 {
                    for col in c0..c1 {
                        classes[r * w + col] = ClassId(d);
                    }
                }
            }
            let mut features = Array2::zeros((h * w, c));
            for (p, k) in classes.iter().enumerate() {
                for j in 0..c {
                    let noise: f64 = rng.sample(StandardNormal);
                    features[[p, j]] = if j == k.index() { 1.0 } else { 0.0 } + cfg.sigma * noise;
                }
            }
            let alpha = (c0 + c1) as f64 / 2.0 / w as f64;
            let mut audio = Array2::zeros((1, c + 2));
            for j in 0..c {
                let noise: f64 = rng.sample(StandardNormal);
                audio[[0, j]] = if j == sounding.index() { 1.0 } else { 0.0 } + cfg.sigma * noise;
            }
            audio[[0, c]] = 1.0 - alpha;
            audio[[0, c + 1]] = alpha;
            SyntheticScene { height: h, width: w, features, labels, audio, audio_labels: LabelSet::single(sounding), distractors }
        })
        .collect();
    Ok(scenes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_labeled() {
        let cfg = SceneConfig { scenes: 20, ..Default::default() };
        let a = gen_scenes(&cfg).unwrap();
        assert_eq!(a, gen_scenes(&cfg).unwrap());
        for s in &a {
            let sounding = s.audio_labels.iter().next().unwrap();
            assert!(s.labels.iter().all(|&y| y == BACKGROUND || y == sounding));
            assert!(s.labels.contains(&sounding));
            assert!(!s.distractors.contains(sounding));
        }
        assert!(a.iter().any(|s| !s.distractors.is_empty()));
        assert!(gen_scenes(&SceneConfig { classes: 1, ..cfg }).is_err());
    }
}
