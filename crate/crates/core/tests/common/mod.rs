#![allow(dead_code)]

use avs_core::annotations::{ClassTable, InstanceMask, MaskEncoding, SceneSample};
use avs_core::labels::ClassId;
use avs_core::raster::BinaryMask;
use avs_core::vpo::{AudioPool, ClipRef};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Axis-aligned object: `(instance id, class, row0, col0, row1, col1)`, half-open.
pub type Rect = (u64, u8, usize, usize, usize, usize);

pub fn rect_mask(h: usize, w: usize, r0: usize, c0: usize, r1: usize, c1: usize) -> BinaryMask {
    let mut m = BinaryMask::zeros(h, w);
    for r in r0..r1 {
        for c in c0..c1 {
            m.set(r, c, true);
        }
    }
    m
}

pub fn rect_scene(image_id: u64, h: usize, w: usize, objects: &[Rect]) -> SceneSample {
    let instances = objects
        .iter()
        .map(|&(id, class, r0, c0, r1, c1)| {
            InstanceMask::new(id, ClassId(class), MaskEncoding::rle_from_mask(&rect_mask(h, w, r0, c0, r1, c1)))
        })
        .collect();
    SceneSample::new(image_id, w, h, instances).unwrap()
}

/// One 10 s clip for the first tag of every class in `table`.
pub fn full_pool(table: &ClassTable) -> AudioPool {
    let mut pool = AudioPool::default();
    for e in table.entries() {
        for (k, tag) in e.audio_tags.iter().enumerate().take(2) {
            pool.insert(ClipRef { tag: tag.clone(), path: format!("clips/{}_{k}.wav", e.id.0), duration: 10.0 });
        }
    }
    pool
}

/// Random scenes of 1–6 rectangles over classes 1..=`classes`.
pub fn random_corpus(seed: u64, n: usize, classes: u8) -> Vec<SceneSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let (h, w) = (24, 32);
            let k = rng.random_range(1..=6);
            let objs: Vec<Rect> = (0..k)
                .map(|j| {
                    let r0 = rng.random_range(0..h - 2);
                    let c0 = rng.random_range(0..w - 2);
                    let r1 = rng.random_range(r0 + 1..=h);
                    let c1 = rng.random_range(c0 + 1..=w);
                    (100 * i as u64 + j as u64, rng.random_range(1..=classes), r0, c0, r1, c1)
                })
                .collect();
            rect_scene(1000 + i as u64, h, w, &objs)
        })
        .collect()
}

/// Largest relative error between analytic and central-difference gradients,
/// with `floor` added to the denominator.
pub fn rel_err(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs().max(numeric.abs()) + floor)
}

/// Central difference of `f` along every coordinate of `x`.
pub fn numeric_grad(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut v = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = v[i];
            v[i] = orig + h;
            let up = f(&v);
            v[i] = orig - h;
            let down = f(&v);
            v[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Three-sigma band of a binomial proportion.
pub fn within_3_sigma(hits: usize, trials: usize, p: f64) -> bool {
    let mean = trials as f64 * p;
    let sd = (trials as f64 * p * (1.0 - p)).sqrt();
    (hits as f64 - mean).abs() <= 3.0 * sd
}
