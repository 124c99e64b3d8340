//! Input generators shared by the benchmarks.

use avs_core::cavp::{AnchorRecord, Origin};
use avs_core::rng::stream;
use avs_core::{ClassId, LabelRaster, LabelSet, Waveform};
use ndarray::Array2;
use rand::Rng;

pub fn matrix(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut rng = stream(seed);
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-1.0..1.0))
}

/// `n` anchor records over `classes` classes with random audio label sets.
pub fn record_pool(n: usize, classes: u8, seed: u64) -> Vec<AnchorRecord> {
    let mut rng = stream(seed);
    (0..n)
        .map(|i| AnchorRecord {
            origin: Origin { item: i / 64, pixel: i % 64 },
            y: ClassId(rng.random_range(0..classes)),
            t: (1..classes).filter(|_| rng.random_bool(0.3)).map(ClassId).collect::<LabelSet>(),
            z: vec![],
        })
        .collect()
}

/// A prediction that agrees with the ground truth on roughly 70% of pixels.
pub fn raster_pair(h: usize, w: usize, classes: u8, seed: u64) -> (LabelRaster, LabelRaster) {
    let mut rng = stream(seed);
    let gt: Vec<u8> = (0..h * w).map(|_| rng.random_range(0..classes)).collect();
    let pred = gt.iter().map(|&g| if rng.random_bool(0.7) { g } else { rng.random_range(0..classes) }).collect();
    (LabelRaster::from_vec(h, w, pred).unwrap(), LabelRaster::from_vec(h, w, gt).unwrap())
}

pub fn noise(seconds: f64, seed: u64) -> Waveform {
    let mut rng = stream(seed);
    Waveform::mono((0..(seconds * 16_000.0) as usize).map(|_| rng.random_range(-0.5..0.5)).collect())
}
