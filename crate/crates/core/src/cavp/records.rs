use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::CavpError;
use crate::fusion::{AudioEmbedding, CrossAttention, FeatureMap, FusionCache};
use crate::labels::{ClassId, LabelSet};

/// Per-image cap on sampled anchor pixels.
pub const DEFAULT_ANCHORS_PER_ITEM: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Origin {
    /// Index of the visual item in the batch.
    pub item: usize,
    /// Cell index in that item's feature grid.
    pub pixel: usize,
}

/// One fused pixel: feature `z`, audio label set `t`, pixel label `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorRecord {
    #[serde(flatten)]
    pub origin: Origin,
    pub y: ClassId,
    pub t: LabelSet,
    #[serde(default)]
    pub z: Vec<f64>,
}

/// One image/audio training pair at feature-map resolution.
#[derive(Debug, Clone)]
pub struct PairingItem {
    pub visual: FeatureMap,
    /// Pixel labels, one per feature cell.
    pub labels: Vec<ClassId>,
    pub audio: AudioEmbedding,
    pub audio_labels: LabelSet,
}

/// Fused features of every visual item with its permuted audio partner.
#[derive(Debug, Clone)]
pub struct PairedBatch {
    /// Visual item `i` was fused with audio of item `permutation[i]`.
    pub permutation: Vec<usize>,
    pub fused: Vec<FeatureMap>,
    pub caches: Vec<FusionCache>,
    pub records: Vec<AnchorRecord>,
}

/// Shuffles audio across the batch with a uniform permutation, then fuses.
pub fn random_pairing<R: Rng + ?Sized>(
    batch: &[PairingItem],
    layer: &CrossAttention,
    rng: &mut R,
    max_per_item: usize,
) -> Result<PairedBatch, CavpError> {
    let mut perm: Vec<usize> = (0..batch.len()).collect();
    perm.shuffle(rng);
    pair_with_permutation(batch, layer, &perm, rng, max_per_item)
}

/// Fuses visual item `i` with audio `permutation[i]` and emits one record per
/// retained cell, carrying the partner's audio labels and the cell's own
/// label. Items with more than `max_per_item` cells keep a uniform subset.
pub fn pair_with_permutation<R: Rng + ?Sized>(
    batch: &[PairingItem],
    layer: &CrossAttention,
    permutation: &[usize],
    rng: &mut R,
    max_per_item: usize,
) -> Result<PairedBatch, CavpError> {
    if batch.is_empty() {
        return Err(CavpError::EmptyBatch);
    }
    let mut seen = vec![false; batch.len()];
    if permutation.len() != batch.len() || permutation.iter().any(|&j| j >= batch.len() || std::mem::replace(&mut seen[j], true)) {
        return Err(CavpError::Permutation(permutation.to_vec()));
    }
    let mut fused = Vec::with_capacity(batch.len());
    let mut caches = Vec::with_capacity(batch.len());
    let mut records = Vec::new();
    for (i, item) in batch.iter().enumerate() {
        let n = item.visual.pixels();
        if item.labels.len() != n {
            return Err(CavpError::LabelCount { item: i, labels: item.labels.len(), pixels: n });
        }
        let partner = &batch[permutation[i]];
        let (z, cache) = layer.forward(&item.visual, &partner.audio)?;
        let pixels: Vec<usize> = if n > max_per_item {
            let mut p = rand::seq::index::sample(rng, n, max_per_item).into_vec();
            p.sort_unstable();
            p
        } else {
            (0..n).collect()
        };
        for pixel in pixels {
            records.push(AnchorRecord {
                origin: Origin { item: i, pixel },
                y: item.labels[pixel],
                t: partner.audio_labels,
                z: z.data.row(pixel).to_vec(),
            });
        }
        fused.push(z);
        caches.push(cache);
    }
    Ok(PairedBatch { permutation: permutation.to_vec(), fused, caches, records })
}

#[cfg(test)]
mod tests {
    use ndarray::Array2;

    use super::*;
    use crate::fusion::Activation;
    use crate::rng::stream;

    fn item(seed: f64, label: u8, audio: u8) -> PairingItem {
        PairingItem {
            visual: FeatureMap::new(1, 2, Array2::from_shape_fn((2, 2), |(i, j)| seed + i as f64 - j as f64)).unwrap(),
            labels: vec![ClassId(0), ClassId(label)],
            audio: AudioEmbedding::new(Array2::from_elem((1, 2), seed)),
            audio_labels: LabelSet::single(ClassId(audio)),
        }
    }

    #[test]
    fn identity_permutation_keeps_pairs() {
        let batch = vec![item(0.1, 1, 1), item(0.2, 2, 2)];
        let layer = CrossAttention::identity(2, Activation::Sigmoid);
        let p = pair_with_permutation(&batch, &layer, &[0, 1], &mut stream(0), 256).unwrap();
        assert_eq!(p.records.len(), 4);
        for r in &p.records {
            assert_eq!(r.t, batch[r.origin.item].audio_labels);
            assert_eq!(r.y, batch[r.origin.item].labels[r.origin.pixel]);
        }
    }

    #[test]
    fn swap_exchanges_audio_labels() {
        let batch = vec![item(0.1, 1, 1), item(0.2, 2, 2)];
        let layer = CrossAttention::identity(2, Activation::Sigmoid);
        let p = pair_with_permutation(&batch, &layer, &[1, 0], &mut stream(0), 256).unwrap();
        for r in &p.records {
            assert_eq!(r.t, batch[1 - r.origin.item].audio_labels);
        }
        let (z, _) = layer.forward(&batch[0].visual, &batch[1].audio).unwrap();
        assert_eq!(p.records[1].z, z.data.row(1).to_vec());
    }

    #[test]
    fn errors_and_subsampling() {
        let layer = CrossAttention::identity(2, Activation::Sigmoid);
        assert_eq!(random_pairing(&[], &layer, &mut stream(0), 8).unwrap_err(), CavpError::EmptyBatch);
        let batch = vec![item(0.1, 1, 1), item(0.2, 2, 2)];
        assert!(matches!(
            pair_with_permutation(&batch, &layer, &[0, 0], &mut stream(0), 8),
            Err(CavpError::Permutation(_))
        ));
        let p = random_pairing(&batch, &layer, &mut stream(3), 1).unwrap();
        assert_eq!(p.records.len(), 2);
        assert_eq!(p.records.iter().map(|r| r.origin.item).collect::<Vec<_>>(), vec![0, 1]);
    }
}
