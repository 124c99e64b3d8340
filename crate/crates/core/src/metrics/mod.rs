//! Pixel-count segmentation metrics: mIoU, F-beta, FDR/PPV.
//!
//! Counting is exact (64-bit tallies that merge additively across images);
//! ratios are formed only at report time.

mod report;

use std::ops::AddAssign;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use report::{evaluate, ClassMetrics, Degenerate, MetricsReport};

use crate::raster::LabelRaster;

/// `β²` of the precision-weighted F-measure.
pub const BETA_SQUARED: f64 = 0.3;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("shape mismatch: prediction {pred:?} vs ground truth {gt:?}")]
    Shape { pred: (usize, usize), gt: (usize, usize) },
    #[error("label {label} outside 0..{num_classes}")]
    Label { label: u8, num_classes: usize },
    #[error("no class is present in either prediction or ground truth")]
    NothingToEvaluate,
    #[error("tallies cover {0} and {1} classes")]
    ClassCount(usize, usize),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassTally {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ClassTally {
    /// Present in the prediction or in the ground truth.
    pub fn is_evaluated(&self) -> bool {
        self.tp + self.fp + self.fn_ > 0
    }
}

/// Per-class confusion counts.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionTallies {
    classes: Vec<ClassTally>,
}

impl ConfusionTallies {
    pub fn new(num_classes: usize) -> Self {
        Self { classes: vec![ClassTally::default(); num_classes] }
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn class(&self, c: usize) -> &ClassTally {
        &self.classes[c]
    }

    pub fn classes(&self) -> &[ClassTally] {
        &self.classes
    }

    /// Total pixels counted (identical for every class).
    pub fn pixels(&self) -> u64 {
        self.classes.first().map_or(0, |t| t.tp + t.fp + t.fn_ + t.tn)
    }

    /// Adds one prediction/ground-truth pair of class-index rasters.
    pub fn add(&mut self, pred: &[u8], gt: &[u8]) -> Result<(), MetricsError> {
        if pred.len() != gt.len() {
            return Err(MetricsError::Shape { pred: (1, pred.len()), gt: (1, gt.len()) });
        }
        let c = self.classes.len();
        let mut tp = vec![0u64; c];
        let mut pred_count = vec![0u64; c];
        let mut gt_count = vec![0u64; c];
        for (&p, &g) in pred.iter().zip(gt) {
            for label in [p, g] {
                if label as usize >= c {
                    return Err(MetricsError::Label { label, num_classes: c });
                }
            }
            pred_count[p as usize] += 1;
            gt_count[g as usize] += 1;
            if p == g {
                tp[p as usize] += 1;
            }
        }
        let n = pred.len() as u64;
        for (k, t) in self.classes.iter_mut().enumerate() {
            let fp = pred_count[k] - tp[k];
            let fn_ = gt_count[k] - tp[k];
            t.tp += tp[k];
            t.fp += fp;
            t.fn_ += fn_;
            t.tn += n - tp[k] - fp - fn_;
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &ConfusionTallies) -> Result<(), MetricsError> {
        if other.classes.len() != self.classes.len() {
            return Err(MetricsError::ClassCount(self.classes.len(), other.classes.len()));
        }
        for (a, b) in self.classes.iter_mut().zip(&other.classes) {
            a.tp += b.tp;
            a.fp += b.fp;
            a.fn_ += b.fn_;
            a.tn += b.tn;
        }
        Ok(())
    }
}

impl AddAssign<&ConfusionTallies> for ConfusionTallies {
    fn add_assign(&mut self, rhs: &ConfusionTallies) {
        self.merge(rhs).expect("tallies over the same class count");
    }
}

/// Tallies one raster pair.
pub fn tally(pred: &LabelRaster, gt: &LabelRaster, num_classes: usize) -> Result<ConfusionTallies, MetricsError> {
    if (pred.height(), pred.width()) != (gt.height(), gt.width()) {
        return Err(MetricsError::Shape {
            pred: (pred.height(), pred.width()),
            gt: (gt.height(), gt.width()),
        });
    }
    let mut t = ConfusionTallies::new(num_classes);
    t.add(pred.as_slice(), gt.as_slice())?;
    Ok(t)
}

/// `num / den`, or `None` when `den == 0`.
pub(crate) fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn class_iou(t: &ClassTally) -> Option<f64> {
    ratio(t.tp, t.tp + t.fp + t.fn_)
}

/// Mean IoU over classes present in prediction or ground truth (background
/// included).
pub fn miou(t: &ConfusionTallies) -> Result<f64, MetricsError> {
    let ious: Vec<f64> = t.classes.iter().filter(|c| c.is_evaluated()).filter_map(class_iou).collect();
    if ious.is_empty() {
        return Err(MetricsError::NothingToEvaluate);
    }
    Ok(ious.iter().sum::<f64>() / ious.len() as f64)
}

/// `(1+β²)PR / (β²P + R)`; `None` when precision, recall or the combination
/// has a zero denominator.
pub fn class_f_beta(t: &ClassTally, beta2: f64) -> Option<f64> {
    let p = ratio(t.tp, t.tp + t.fp)?;
    let r = ratio(t.tp, t.tp + t.fn_)?;
    let den = beta2 * p + r;
    (den > 0.0).then(|| (1.0 + beta2) * p * r / den)
}

/// `FP / (FP + TP)`.
pub fn class_fdr(t: &ClassTally) -> Option<f64> {
    ratio(t.fp, t.fp + t.tp)
}

fn foreground_macro(t: &ConfusionTallies, f: impl Fn(&ClassTally) -> Option<f64>) -> f64 {
    let evaluated: Vec<&ClassTally> = t.classes.iter().skip(1).filter(|c| c.is_evaluated()).collect();
    if evaluated.is_empty() {
        return 0.0;
    }
    evaluated.iter().map(|c| f(c).unwrap_or(0.0)).sum::<f64>() / evaluated.len() as f64
}

/// Macro F-beta over evaluated foreground classes; degenerate classes count as 0.
pub fn f_beta(t: &ConfusionTallies, beta2: f64) -> f64 {
    foreground_macro(t, |c| class_f_beta(c, beta2))
}

/// Macro FDR over evaluated foreground classes; degenerate classes count as 0.
pub fn fdr(t: &ConfusionTallies) -> f64 {
    foreground_macro(t, class_fdr)
}

/// Mean per-image F-beta of foreground-vs-background masks (any nonzero
/// label is foreground).
pub fn binary_f_beta_per_image(pairs: &[(&LabelRaster, &LabelRaster)], beta2: f64) -> Result<f64, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::NothingToEvaluate);
    }
    let mut sum = 0.0;
    for (pred, gt) in pairs {
        let p: Vec<u8> = pred.as_slice().iter().map(|&v| (v != 0) as u8).collect();
        let g: Vec<u8> = gt.as_slice().iter().map(|&v| (v != 0) as u8).collect();
        if p.len() != g.len() {
            return Err(MetricsError::Shape { pred: (pred.height(), pred.width()), gt: (gt.height(), gt.width()) });
        }
        let mut t = ConfusionTallies::new(2);
        t.add(&p, &g)?;
        sum += class_f_beta(t.class(1), beta2).unwrap_or(0.0);
    }
    Ok(sum / pairs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raster(h: usize, w: usize, v: Vec<u8>) -> LabelRaster {
        LabelRaster::from_vec(h, w, v).unwrap()
    }

    #[test]
    fn identical_rasters() {
        let r = raster(2, 3, vec![0, 1, 2, 2, 1, 0]);
        let t = tally(&r, &r, 3).unwrap();
        assert!(t.classes().iter().all(|c| c.fp == 0 && c.fn_ == 0));
        assert_eq!(miou(&t).unwrap(), 1.0);
        assert_eq!(f_beta(&t, BETA_SQUARED), 1.0);
        assert_eq!(fdr(&t), 0.0);
    }

    #[test]
    fn all_background_prediction() {
        let t = tally(&raster(4, 4, vec![0; 16]), &raster(4, 4, vec![1; 16]), 2).unwrap();
        assert_eq!(*t.class(1), ClassTally { tp: 0, fp: 0, fn_: 16, tn: 0 });
        assert_eq!(*t.class(0), ClassTally { tp: 0, fp: 16, fn_: 0, tn: 0 });
        assert_eq!(miou(&t).unwrap(), 0.0);
    }

    #[test]
    fn shape_and_label_errors() {
        let a = raster(2, 2, vec![0; 4]);
        assert!(matches!(tally(&a, &raster(1, 4, vec![0; 4]), 2), Err(MetricsError::Shape { .. })));
        assert_eq!(
            tally(&a, &raster(2, 2, vec![0, 0, 0, 5]), 3).unwrap_err(),
            MetricsError::Label { label: 5, num_classes: 3 }
        );
        assert_eq!(miou(&ConfusionTallies::new(3)).unwrap_err(), MetricsError::NothingToEvaluate);
    }

    #[test]
    fn hand_counted_two_class_fixture() {
        let t = ConfusionTallies {
            classes: vec![ClassTally { tp: 6, fp: 2, fn_: 2, tn: 10 }, ClassTally { tp: 8, fp: 0, fn_: 4, tn: 8 }],
        };
        let expected = (0.6 + 8.0 / 12.0) / 2.0;
        assert!((miou(&t).unwrap() - expected).abs() < 1e-15);
        assert!((miou(&t).unwrap() - 0.633_333_333_333_333_3).abs() < 1e-12);
    }

    #[test]
    fn f_beta_closed_forms() {
        let perfect = ClassTally { tp: 5, fp: 0, fn_: 0, tn: 0 };
        assert_eq!(class_f_beta(&perfect, 0.3), Some(1.0));
        assert_eq!(class_fdr(&perfect), Some(0.0));
        // P = 0.5, R = 1
        let half = ClassTally { tp: 2, fp: 2, fn_: 0, tn: 0 };
        let f = class_f_beta(&half, 0.3).unwrap();
        assert!((f - 1.3 * 0.5 / 1.15).abs() < 1e-15);
        assert!((f - 0.565_217_391_304_347_8).abs() < 1e-12);
        assert_eq!(class_fdr(&ClassTally { tp: 1, fp: 3, fn_: 0, tn: 0 }), Some(0.75));
        assert_eq!(class_f_beta(&ClassTally { tp: 0, fp: 0, fn_: 3, tn: 0 }, 0.3), None);
    }

    #[test]
    fn imagewise_tallies_merge() {
        let p1 = raster(1, 4, vec![0, 1, 1, 2]);
        let g1 = raster(1, 4, vec![0, 1, 2, 2]);
        let p2 = raster(1, 3, vec![2, 2, 0]);
        let g2 = raster(1, 3, vec![2, 1, 0]);
        let mut merged = tally(&p1, &g1, 3).unwrap();
        merged += &tally(&p2, &g2, 3).unwrap();
        let mut joint = ConfusionTallies::new(3);
        joint.add(&[0, 1, 1, 2, 2, 2, 0], &[0, 1, 2, 2, 2, 1, 0]).unwrap();
        assert_eq!(merged, joint);
        assert_eq!(merged.pixels(), 7);
    }

    #[test]
    fn binary_mode() {
        let p = raster(1, 4, vec![0, 3, 3, 0]);
        let g = raster(1, 4, vec![0, 1, 0, 0]);
        // P = 1/2, R = 1
        let f = binary_f_beta_per_image(&[(&p, &g)], 0.3).unwrap();
        assert!((f - 1.3 * 0.5 / 1.15).abs() < 1e-15);
    }
}
