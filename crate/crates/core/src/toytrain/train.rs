use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{gen_scenes, objective, Model, ParamSet, SceneConfig, SyntheticScene, TrainError};
use crate::cavp::MemoryBank;
use crate::fusion::Activation;
use crate::metrics::{miou, ConfusionTallies};
use crate::rng::item_stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LossMode {
    #[serde(rename = "ce_only")]
    CeOnly,
    /// Contrastive term on the original pairs, positives share the pixel label.
    #[serde(rename = "ce+supcon")]
    CeSupCon,
    /// Contrastive term on shuffled pairs with mined sets.
    #[serde(rename = "ce+cavp")]
    CeCavp,
}

impl LossMode {
    pub const ALL: [LossMode; 3] = [LossMode::CeOnly, LossMode::CeSupCon, LossMode::CeCavp];

    pub fn name(self) -> &'static str {
        match self {
            LossMode::CeOnly => "ce_only",
            LossMode::CeSupCon => "ce+supcon",
            LossMode::CeCavp => "ce+cavp",
        }
    }
}

impl fmt::Display for LossMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossMode {
    type Err = TrainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LossMode::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| TrainError::LossMode(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr0: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub power: f64,
    pub epochs: usize,
    pub batch: usize,
    pub tau: f64,
    pub proportion: f64,
    /// Samples per anchor in the contrastive term.
    pub budget: usize,
    pub anchors_per_batch: usize,
    pub anchors_per_item: usize,
    pub dim: usize,
    pub heads: usize,
    pub activation: Activation,
    pub bank_capacity: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr0: 1e-3,
            momentum: 0.9,
            weight_decay: 5e-4,
            power: 0.9,
            epochs: 10,
            batch: 8,
            tau: 0.1,
            proportion: 0.5,
            budget: 16,
            anchors_per_batch: 32,
            anchors_per_item: 256,
            dim: 8,
            heads: 1,
            activation: Activation::Sigmoid,
            bank_capacity: 64,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let positive = [self.lr0, self.tau, self.power];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(TrainError::Config("lr0, tau and power must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) || self.weight_decay.is_nan() || self.weight_decay < 0.0 {
            return Err(TrainError::Config("momentum must be in [0, 1) and weight_decay non-negative".into()));
        }
        if !(self.proportion > 0.0 && self.proportion < 1.0) {
            return Err(TrainError::Config(format!("proportion {} outside (0, 1)", self.proportion)));
        }
        if self.epochs == 0 || self.batch == 0 || self.dim == 0 || self.budget < 2 || self.heads == 0 || !self.dim.is_multiple_of(self.heads) {
            return Err(TrainError::Config("epochs, batch, dim, heads must be positive, budget ≥ 2, heads | dim".into()));
        }
        Ok(())
    }
}

/// `lr0 · (1 − t/T)^power`.
pub fn poly_lr(lr0: f64, t: usize, total: usize, power: f64) -> f64 {
    if total == 0 || t >= total {
        return 0.0;
    }
    lr0 * (1.0 - t as f64 / total as f64).powf(power)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub epoch: usize,
    /// Learning rate of the epoch's last step.
    pub lr: f64,
    pub ce: f64,
    pub cp: f64,
    pub miou: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Model,
    pub trace: Vec<TraceRecord>,
    pub final_miou: f64,
}

/// mIoU of the model's argmax predictions over `scenes`.
pub fn evaluate(model: &Model, scenes: &[SyntheticScene]) -> Result<f64, TrainError> {
    let mut t = ConfusionTallies::new(model.classes());
    for s in scenes {
        let pred: Vec<u8> = model.predict(s)?.into_iter().map(|c| c.0).collect();
        let gt: Vec<u8> = s.labels.iter().map(|c| c.0).collect();
        t.add(&pred, &gt)?;
    }
    Ok(miou(&t)?)
}

/// Mini-batch SGD with momentum, decoupled into `v ← μv + g + λθ`,
/// `θ ← θ − lr·v`, under the polynomial schedule over all steps.
pub fn train(dataset: &[SyntheticScene], eval: &[SyntheticScene], cfg: &TrainConfig, mode: LossMode) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let classes = dataset[0].features.ncols();
    let mut model = Model::init(classes, cfg.dim, cfg.activation, cfg.heads, &mut item_stream(cfg.seed, "toy-init", 0));
    let mut velocity = model.params.zeros_like();
    let mut bank: MemoryBank<Array2<f64>> = MemoryBank::new(cfg.bank_capacity);
    let steps_per_epoch = dataset.len().div_ceil(cfg.batch);
    let total = cfg.epochs * steps_per_epoch;
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);
    let mut t = 0;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut item_stream(cfg.seed, "toy-order", epoch as u64));
        let (mut ce_sum, mut cp_sum, mut lr) = (0.0, 0.0, 0.0);
        for (step, chunk) in order.chunks(cfg.batch).enumerate() {
            let batch: Vec<&SyntheticScene> = chunk.iter().map(|&i| &dataset[i]).collect();
            let mut rng = item_stream(cfg.seed, mode.name(), t as u64);
            let obj = objective(&model, &batch, mode, cfg, &mut rng, &bank)?;
            if !obj.loss.is_finite() || !obj.grads.is_finite() {
                return Err(TrainError::Diverged { epoch, step, ce: obj.cross_entropy, cp: obj.contrastive });
            }
            lr = poly_lr(cfg.lr0, t, total, cfg.power);
            let mut g = obj.grads;
            g.axpy(cfg.weight_decay, &model.params);
            scale(&mut velocity, cfg.momentum);
            velocity.axpy(1.0, &g);
            model.params.axpy(-lr, &velocity);
            ce_sum += obj.cross_entropy;
            cp_sum += obj.contrastive;
            if mode == LossMode::CeCavp {
                for s in &batch {
                    for c in s.audio_labels.iter() {
                        bank.push(c, s.audio.clone());
                    }
                }
            }
            t += 1;
        }
        let n = steps_per_epoch as f64;
        let m = if eval.is_empty() { f64::NAN } else { evaluate(&model, eval)? };
        log::debug!("{mode} epoch {epoch}: ce {:.5} cp {:.5} miou {m:.4}", ce_sum / n, cp_sum / n);
        trace.push(TraceRecord { epoch, lr, ce: ce_sum / n, cp: cp_sum / n, miou: m });
    }
    let final_miou = trace.last().map_or(f64::NAN, |r| r.miou);
    Ok(TrainOutcome { model, trace, final_miou })
}

fn scale(p: &mut ParamSet, a: f64) {
    let flat: Vec<f64> = p.to_flat().into_iter().map(|v| v * a).collect();
    p.set_flat(&flat);
}

/// Scene generation, training and evaluation in one flat configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyRunConfig {
    pub mode: LossMode,
    /// Held-out scenes generated from a derived seed.
    #[serde(default = "default_eval_scenes")]
    pub eval_scenes: usize,
    #[serde(flatten)]
    pub scenes: SceneConfig,
    #[serde(flatten)]
    pub train: TrainConfig,
}

fn default_eval_scenes() -> usize {
    64
}

pub fn run(cfg: &ToyRunConfig) -> Result<TrainOutcome, TrainError> {
    let train_set = gen_scenes(&cfg.scenes)?;
    let eval_cfg = SceneConfig {
        scenes: cfg.eval_scenes.max(1),
        seed: cfg.scenes.seed ^ 0x0005_EED0_E7A1_u64,
        ..cfg.scenes.clone()
    };
    let eval_set = gen_scenes(&eval_cfg)?;
    train(&train_set, &eval_set, &cfg.train, cfg.mode)
}

pub fn write_trace(trace: &[TraceRecord]) -> String {
    trace.iter().map(|r| serde_json::to_string(r).expect("trace serializes") + "\n").collect()
}

pub fn parse_trace(text: &str) -> Result<Vec<TraceRecord>, TrainError> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| TrainError::Config(e.to_string())))
        .collect()
}
