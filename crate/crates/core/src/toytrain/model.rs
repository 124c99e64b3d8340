use std::collections::BTreeMap;

use ndarray::{s, Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{LossMode, SyntheticScene, TrainConfig, TrainError};
use crate::cavp::{
    balance, mine_sets, partition_anchors, random_pairing, total_loss, BalanceConfig, BalanceStats, ContrastiveSets, ContrastiveTerm,
    MemoryBank, MiningConfig, PairingItem, PositiveDraw,
};
use crate::fusion::{Activation, AudioEmbedding, CrossAttention, FeatureMap, FusionCache, QueryMode};
use crate::labels::ClassId;

/// Trainable weights, or gradients with the same shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    pub w_vis: Array2<f64>,
    pub w_aud: Array2<f64>,
    pub w_q: Array2<f64>,
    pub w_k: Array2<f64>,
    pub w_val: Array2<f64>,
    pub w_cls: Array2<f64>,
    pub b_cls: Array1<f64>,
}

impl ParamSet {
    pub fn zeros_like(&self) -> Self {
        Self {
            w_vis: Array2::zeros(self.w_vis.dim()),
            w_aud: Array2::zeros(self.w_aud.dim()),
            w_q: Array2::zeros(self.w_q.dim()),
            w_k: Array2::zeros(self.w_k.dim()),
            w_val: Array2::zeros(self.w_val.dim()),
            w_cls: Array2::zeros(self.w_cls.dim()),
            b_cls: Array1::zeros(self.b_cls.len()),
        }
    }

    fn slices(&self) -> [&[f64]; 7] {
        fn f(a: &Array2<f64>) -> &[f64] {
            a.as_slice().expect("standard layout")
        }
        [f(&self.w_vis), f(&self.w_aud), f(&self.w_q), f(&self.w_k), f(&self.w_val), f(&self.w_cls), self.b_cls.as_slice().expect("contiguous")]
    }

    fn slices_mut(&mut self) -> [&mut [f64]; 7] {
        [
            self.w_vis.as_slice_mut().expect("standard layout"),
            self.w_aud.as_slice_mut().expect("standard layout"),
            self.w_q.as_slice_mut().expect("standard layout"),
            self.w_k.as_slice_mut().expect("standard layout"),
            self.w_val.as_slice_mut().expect("standard layout"),
            self.w_cls.as_slice_mut().expect("standard layout"),
            self.b_cls.as_slice_mut().expect("contiguous"),
        ]
    }

    pub fn len(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.slices().concat()
    }

    pub fn set_flat(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.len(), "flat parameter length");
        let mut rest = values;
        for dst in self.slices_mut() {
            let (head, tail) = rest.split_at(dst.len());
            dst.copy_from_slice(head);
            rest = tail;
        }
    }

    /// `self += a · other`.
    pub fn axpy(&mut self, a: f64, other: &ParamSet) {
        for (dst, src) in self.slices_mut().into_iter().zip(other.slices()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += a * s;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }
}

/// Linear encoders, cross-attention fusion and a per-pixel linear classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub params: ParamSet,
    pub activation: Activation,
    pub heads: usize,
}

/// Encoded inputs of one scene.
#[derive(Debug, Clone)]
pub struct Encoded {
    pub visual: FeatureMap,
    pub audio: AudioEmbedding,
}

fn gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, scale: f64, rng: &mut R) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || scale * rng.sample::<f64, _>(StandardNormal))
}

impl Model {
    /// Random initialization scaled by `1/√fan_in`.
    pub fn init<R: Rng + ?Sized>(classes: usize, dim: usize, activation: Activation, heads: usize, rng: &mut R) -> Self {
        let vis = classes;
        let aud = SyntheticScene::audio_dim(classes);
        let inv = |n: usize| 1.0 / (n as f64).sqrt();
        let params = ParamSet {
            w_vis: gaussian(vis, dim, inv(vis), rng),
            w_aud: gaussian(aud, dim, inv(aud), rng),
            w_q: gaussian(dim, dim, inv(dim), rng),
            w_k: gaussian(dim, dim, inv(dim), rng),
            w_val: gaussian(dim, dim, inv(dim), rng),
            w_cls: gaussian(dim, classes, inv(dim), rng),
            b_cls: Array1::zeros(classes),
        };
        Self { params, activation, heads }
    }

    pub fn classes(&self) -> usize {
        self.params.b_cls.len()
    }

    pub fn layer(&self) -> CrossAttention {
        CrossAttention {
            wq: self.params.w_q.clone(),
            wk: self.params.w_k.clone(),
            wv: self.params.w_val.clone(),
            activation: self.activation,
            heads: self.heads,
            mode: QueryMode::Visual,
        }
    }

    pub fn encode(&self, scene: &SyntheticScene) -> Result<Encoded, TrainError> {
        Ok(Encoded {
            visual: FeatureMap::new(scene.height, scene.width, scene.features.dot(&self.params.w_vis))?,
            audio: AudioEmbedding::new(scene.audio.dot(&self.params.w_aud)),
        })
    }

    pub fn logits(&self, scene: &SyntheticScene) -> Result<Array2<f64>, TrainError> {
        let e = self.encode(scene)?;
        let (z, _) = self.layer().forward(&e.visual, &e.audio)?;
        Ok(z.data.dot(&self.params.w_cls) + &self.params.b_cls)
    }

    /// Argmax class per pixel.
    pub fn predict(&self, scene: &SyntheticScene) -> Result<Vec<ClassId>, TrainError> {
        Ok(self
            .logits(scene)?
            .axis_iter(Axis(0))
            .map(|row| {
                let best = row.iter().enumerate().fold(0, |b, (k, &v)| if v > row[b] { k } else { b });
                ClassId(best as u8)
            })
            .collect())
    }
}

/// Value and gradient of the training objective on one batch.
#[derive(Debug, Clone)]
pub struct Objective {
    pub loss: f64,
    pub cross_entropy: f64,
    pub contrastive: f64,
    pub grads: ParamSet,
    /// Anchors that contributed a contrastive term.
    pub anchors: usize,
    pub balance: BalanceStats,
    /// Anchors dropped because they had no negatives.
    pub no_negatives: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Row {
    /// Original pairing: item, pixel.
    Orig(usize, usize),
    /// Shuffled pairing.
    Perm(usize, usize),
    /// Anchor image fused with a bank item: extra-fusion index, pixel.
    Extra(usize, usize),
}

struct Extra {
    item: usize,
    tokens: Array2<f64>,
    fused: FeatureMap,
    cache: FusionCache,
}

fn sample_indices<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Vec<usize> {
    let mut v = if n > k { rand::seq::index::sample(rng, n, k).into_vec() } else { (0..n).collect() };
    v.sort_unstable();
    v
}

/// Up to `total` indices drawn round-robin across groups sharing a key, so
/// rare groups are represented. Returned sorted.
fn balanced_sample<K: Ord + Copy, R: Rng + ?Sized>(keys: &[K], total: usize, rng: &mut R) -> Vec<usize> {
    let mut groups: BTreeMap<K, Vec<usize>> = BTreeMap::new();
    for (i, k) in keys.iter().enumerate() {
        groups.entry(*k).or_default().push(i);
    }
    let mut queues: Vec<Vec<usize>> = groups
        .into_values()
        .map(|mut g| {
            g.shuffle(rng);
            g.reverse();
            g
        })
        .collect();
    let mut out = Vec::with_capacity(total.min(keys.len()));
    while out.len() < total && queues.iter().any(|q| !q.is_empty()) {
        for q in queues.iter_mut() {
            if out.len() == total {
                break;
            }
            if let Some(i) = q.pop() {
                out.push(i);
            }
        }
    }
    out.sort_unstable();
    out
}

/// Cross-entropy on the original pairs plus, depending on `mode`, a
/// contrastive term. All sampling draws from `rng`; parameters do not affect
/// which anchors or samples are drawn.
pub fn objective<R: Rng + ?Sized>(
    model: &Model,
    batch: &[&SyntheticScene],
    mode: LossMode,
    cfg: &TrainConfig,
    rng: &mut R,
    bank: &MemoryBank<Array2<f64>>,
) -> Result<Objective, TrainError> {
    if batch.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let p = &model.params;
    let layer = model.layer();
    let encoded: Vec<Encoded> = batch.iter().map(|s| model.encode(s)).collect::<Result<_, _>>()?;
    let mut fused = Vec::with_capacity(batch.len());
    let mut caches = Vec::with_capacity(batch.len());
    for e in &encoded {
        let (z, c) = layer.forward(&e.visual, &e.audio)?;
        fused.push(z);
        caches.push(c);
    }
    let offsets: Vec<usize> = batch.iter().scan(0, |acc, s| Some(std::mem::replace(acc, *acc + s.pixels()))).collect();
    let total_pixels: usize = batch.iter().map(|s| s.pixels()).sum();
    let mut logits = Array2::zeros((total_pixels, model.classes()));
    let mut labels = Vec::with_capacity(total_pixels);
    for (i, z) in fused.iter().enumerate() {
        logits.slice_mut(s![offsets[i]..offsets[i] + batch[i].pixels(), ..]).assign(&(z.data.dot(&p.w_cls) + &p.b_cls));
        labels.extend_from_slice(&batch[i].labels);
    }

    let mut rows: BTreeMap<Row, usize> = BTreeMap::new();
    let mut row_list: Vec<Row> = Vec::new();
    let mut row_id = |r: Row| {
        *rows.entry(r).or_insert_with(|| {
            row_list.push(r);
            row_list.len() - 1
        })
    };
    let mut terms = Vec::new();
    let mut stats = BalanceStats::default();
    let mut no_negatives = 0;
    let mut permuted: Option<(Vec<usize>, Vec<FeatureMap>, Vec<FusionCache>)> = None;
    let mut extras: Vec<Extra> = Vec::new();
    let bcfg = BalanceConfig { proportion: cfg.proportion, budget: cfg.budget };

    match mode {
        LossMode::CeOnly => {}
        LossMode::CeSupCon => {
            let mut recs: Vec<(usize, usize, ClassId)> = Vec::new();
            for (i, s) in batch.iter().enumerate() {
                for px in sample_indices(s.pixels(), cfg.anchors_per_item, rng) {
                    recs.push((i, px, s.labels[px]));
                }
            }
            let empty: MemoryBank<Array2<f64>> = MemoryBank::new(0);
            let keys: Vec<ClassId> = recs.iter().map(|r| r.2).collect();
            for a in balanced_sample(&keys, cfg.anchors_per_batch, rng) {
                let y = recs[a].2;
                let mut sets = ContrastiveSets { anchor: a, ..Default::default() };
                for (j, r) in recs.iter().enumerate() {
                    if j == a {
                        continue;
                    }
                    if r.2 == y {
                        sets.positives.push(j);
                    } else {
                        sets.easy_negatives.push(j);
                    }
                }
                if sets.num_negatives() == 0 {
                    no_negatives += 1;
                    continue;
                }
                let Some(sample) = balance(&sets, y, &bcfg, rng, &empty, &mut stats)? else { continue };
                let row = |j: usize| Row::Orig(recs[j].0, recs[j].1);
                terms.push(ContrastiveTerm {
                    anchor: row_id(row(a)),
                    positives: sample
                        .positives
                        .iter()
                        .map(|d| match d {
                            PositiveDraw::Record(j) => row_id(row(*j)),
                            PositiveDraw::Bank(_) => unreachable!("empty bank"),
                        })
                        .collect(),
                    negatives: sample.negatives.iter().map(|&j| row_id(row(j))).collect(),
                });
            }
        }
        LossMode::CeCavp => {
            let items: Vec<PairingItem> = batch
                .iter()
                .zip(&encoded)
                .map(|(s, e)| PairingItem {
                    visual: e.visual.clone(),
                    labels: s.labels.clone(),
                    audio: e.audio.clone(),
                    audio_labels: s.audio_labels,
                })
                .collect();
            let paired = random_pairing(&items, &layer, rng, cfg.anchors_per_item)?;
            let mining = MiningConfig::default();
            let part = partition_anchors(&paired.records, &mining);
            let mut candidates: Vec<usize> = part.foreground.iter().chain(&part.background).copied().collect();
            candidates.sort_unstable();
            let keys: Vec<(bool, ClassId)> = candidates
                .iter()
                .map(|&j| (part.foreground.binary_search(&j).is_ok(), paired.records[j].y))
                .collect();
            let row = |j: usize| Row::Perm(paired.records[j].origin.item, paired.records[j].origin.pixel);
            for k in balanced_sample(&keys, cfg.anchors_per_batch, rng) {
                let a = candidates[k];
                let sets = mine_sets(a, &paired.records, &part, &mining)?;
                if sets.num_negatives() == 0 {
                    no_negatives += 1;
                    continue;
                }
                let y = paired.records[a].y;
                let Some(sample) = balance(&sets, y, &bcfg, rng, bank, &mut stats)? else { continue };
                let anchor_origin = paired.records[a].origin;
                let mut positives = Vec::with_capacity(sample.positives.len());
                for d in sample.positives {
                    match d {
                        PositiveDraw::Record(j) => positives.push(row_id(row(j))),
                        PositiveDraw::Bank(tokens) => {
                            let audio = AudioEmbedding::new(tokens.dot(&p.w_aud));
                            let (z, cache) = layer.forward(&encoded[anchor_origin.item].visual, &audio)?;
                            extras.push(Extra { item: anchor_origin.item, tokens, fused: z, cache });
                            positives.push(row_id(Row::Extra(extras.len() - 1, anchor_origin.pixel)));
                        }
                    }
                }
                terms.push(ContrastiveTerm {
                    anchor: row_id(row(a)),
                    positives,
                    negatives: sample.negatives.iter().map(|&j| row_id(row(j))).collect(),
                });
            }
            permuted = Some((paired.permutation, paired.fused, paired.caches));
        }
    }

    let dim = layer.dim();
    let mut features = Array2::zeros((row_list.len(), dim));
    for (k, r) in row_list.iter().enumerate() {
        let src = match *r {
            Row::Orig(i, px) => fused[i].data.row(px),
            Row::Perm(i, px) => permuted.as_ref().expect("shuffled rows need a pairing").1[i].data.row(px),
            Row::Extra(e, px) => extras[e].fused.data.row(px),
        };
        features.row_mut(k).assign(&src);
    }
    let out = total_loss(logits.view(), &labels, features.view(), &terms, cfg.tau)?;

    // Backward.
    let mut g = p.zeros_like();
    let mut d_fused: Vec<Array2<f64>> = fused.iter().map(|z| Array2::zeros(z.data.dim())).collect();
    for (i, z) in fused.iter().enumerate() {
        let dl = out.d_logits.slice(s![offsets[i]..offsets[i] + batch[i].pixels(), ..]);
        g.w_cls += &z.data.t().dot(&dl);
        g.b_cls += &dl.sum_axis(Axis(0));
        d_fused[i] += &dl.dot(&p.w_cls.t());
    }
    let mut d_perm: Vec<Array2<f64>> = match &permuted {
        Some((_, maps, _)) => maps.iter().map(|z| Array2::zeros(z.data.dim())).collect(),
        None => Vec::new(),
    };
    let mut d_extra: Vec<Array2<f64>> = extras.iter().map(|e| Array2::zeros(e.fused.data.dim())).collect();
    for (k, r) in row_list.iter().enumerate() {
        let grad = out.d_features.row(k);
        match *r {
            Row::Orig(i, px) => d_fused[i].row_mut(px).scaled_add(1.0, &grad),
            Row::Perm(i, px) => d_perm[i].row_mut(px).scaled_add(1.0, &grad),
            Row::Extra(e, px) => d_extra[e].row_mut(px).scaled_add(1.0, &grad),
        }
    }
    let mut d_vis: Vec<Array2<f64>> = encoded.iter().map(|e| Array2::zeros(e.visual.data.dim())).collect();
    let mut d_aud: Vec<Array2<f64>> = encoded.iter().map(|e| Array2::zeros(e.audio.tokens.dim())).collect();
    let accumulate = |fg: crate::fusion::FusionGrads, g: &mut ParamSet| {
        g.w_q += &fg.wq;
        g.w_k += &fg.wk;
        g.w_val += &fg.wv;
        (fg.visual, fg.audio)
    };
    for (i, cache) in caches.iter().enumerate() {
        let (dv, da) = accumulate(layer.backward(cache, &d_fused[i])?, &mut g);
        d_vis[i] += &dv;
        d_aud[i] += &da;
    }
    if let Some((perm, _, pcaches)) = &permuted {
        for (i, cache) in pcaches.iter().enumerate() {
            let (dv, da) = accumulate(layer.backward(cache, &d_perm[i])?, &mut g);
            d_vis[i] += &dv;
            d_aud[perm[i]] += &da;
        }
    }
    for (e, up) in extras.iter().zip(&d_extra) {
        let (dv, da) = accumulate(layer.backward(&e.cache, up)?, &mut g);
        d_vis[e.item] += &dv;
        g.w_aud += &e.tokens.t().dot(&da);
    }
    for (i, s) in batch.iter().enumerate() {
        g.w_vis += &s.features.t().dot(&d_vis[i]);
        g.w_aud += &s.audio.t().dot(&d_aud[i]);
    }

    Ok(Objective {
        loss: out.value,
        cross_entropy: out.cross_entropy,
        contrastive: out.contrastive,
        grads: g,
        anchors: terms.len(),
        balance: stats,
        no_negatives,
    })
}
