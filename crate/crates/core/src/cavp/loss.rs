use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use super::CavpError;
use crate::labels::ClassId;

const NORM_FLOOR: f64 = 1e-12;

/// Unit-length copy of `x` and the norm it was divided by.
pub fn l2_normalize(x: ArrayView1<f64>) -> (Array1<f64>, f64) {
    let norm = x.dot(&x).sqrt().max(NORM_FLOOR);
    (x.mapv(|v| v / norm), norm)
}

/// Gradient with respect to `x` given the output `y` of [`l2_normalize`].
pub fn l2_normalize_backward(y: ArrayView1<f64>, norm: f64, dy: ArrayView1<f64>) -> Array1<f64> {
    let proj = y.dot(&dy);
    (&dy - &(&y * proj)) / norm
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfoNce {
    pub loss: f64,
    pub d_anchor: Array1<f64>,
    /// One row per positive.
    pub d_positives: Array2<f64>,
    /// One row per negative.
    pub d_negatives: Array2<f64>,
}

/// Supervised InfoNCE of one anchor over its sampled positives and negatives.
pub fn info_nce(
    anchor: ArrayView1<f64>,
    positives: ArrayView2<f64>,
    negatives: ArrayView2<f64>,
    tau: f64,
) -> Result<InfoNce, CavpError> {
    if positives.nrows() == 0 {
        return Err(CavpError::NoPositives);
    }
    if tau.is_nan() || tau <= 0.0 {
        return Err(CavpError::Temperature(tau));
    }
    let d = anchor.len();
    if positives.ncols() != d || (negatives.nrows() > 0 && negatives.ncols() != d) {
        return Err(CavpError::Shape(format!(
            "anchor dim {d}, positives {:?}, negatives {:?}",
            positives.dim(),
            negatives.dim()
        )));
    }
    let np = positives.nrows() as f64;
    let s_pos = positives.dot(&anchor) / tau;
    let s_neg = if negatives.nrows() > 0 { negatives.dot(&anchor) / tau } else { Array1::zeros(0) };
    let neg_max = s_neg.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut loss = 0.0;
    let mut d_anchor = Array1::zeros(d);
    let mut d_positives = Array2::zeros(positives.dim());
    let mut w_neg_total = Array1::<f64>::zeros(s_neg.len());
    for (p, &sp) in s_pos.iter().enumerate() {
        let m = sp.max(neg_max);
        // Every term is shifted by the max; the max itself contributes exactly 1.
        let mut rest = 0.0;
        let mut max_taken = false;
        for &s in std::iter::once(&sp).chain(s_neg.iter()) {
            if s == m && !max_taken {
                max_taken = true;
            } else {
                rest += (s - m).exp();
            }
        }
        let lse_shift = rest.ln_1p();
        loss += (m - sp) + lse_shift;
        let w_p = (sp - m - lse_shift).exp();
        let w_n = s_neg.mapv(|s| (s - m - lse_shift).exp());
        d_anchor.scaled_add((w_p - 1.0) / tau, &positives.row(p));
        d_positives.row_mut(p).scaled_add((w_p - 1.0) / tau, &anchor);
        w_neg_total += &w_n;
    }
    if negatives.nrows() > 0 {
        d_anchor += &(negatives.t().dot(&w_neg_total) / tau);
    }
    let mut d_negatives = Array2::zeros(negatives.dim());
    for (n, &w) in w_neg_total.iter().enumerate() {
        d_negatives.row_mut(n).scaled_add(w / tau, &anchor);
    }
    Ok(InfoNce {
        loss: loss / np,
        d_anchor: d_anchor / np,
        d_positives: d_positives / np,
        d_negatives: d_negatives / np,
    })
}

/// One anchor's term in the contrastive loss, as row indices of a feature matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContrastiveTerm {
    pub anchor: usize,
    pub positives: Vec<usize>,
    pub negatives: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TotalLoss {
    pub value: f64,
    pub cross_entropy: f64,
    pub contrastive: f64,
    pub d_logits: Array2<f64>,
    /// Gradient with respect to the raw (unnormalized) feature rows.
    pub d_features: Array2<f64>,
}

/// Mean pixel cross-entropy plus the mean contrastive term over `terms`.
///
/// `logits` holds one row of class scores per pixel. Feature rows are
/// L2-normalized before the contrastive term; an empty `terms` contributes 0.
pub fn total_loss(
    logits: ArrayView2<f64>,
    labels: &[ClassId],
    features: ArrayView2<f64>,
    terms: &[ContrastiveTerm],
    tau: f64,
) -> Result<TotalLoss, CavpError> {
    let (n, c) = logits.dim();
    if labels.len() != n {
        return Err(CavpError::Shape(format!("{} labels for {n} logit rows", labels.len())));
    }
    if n == 0 {
        return Err(CavpError::Shape("no pixels".into()));
    }
    let mut ce = 0.0;
    let mut d_logits = Array2::zeros((n, c));
    for (i, (row, &y)) in logits.axis_iter(Axis(0)).zip(labels).enumerate() {
        if y.index() >= c {
            return Err(CavpError::Label { label: y.0, num_classes: c });
        }
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = row.iter().map(|&v| (v - m).exp()).sum();
        let lse = m + z.ln();
        ce += lse - row[y.index()];
        let mut g = d_logits.row_mut(i);
        for k in 0..c {
            g[k] = (row[k] - lse).exp() / n as f64;
        }
        g[y.index()] -= 1.0 / n as f64;
    }
    ce /= n as f64;

    let mut d_features = Array2::zeros(features.dim());
    let mut cp = 0.0;
    if !terms.is_empty() {
        let rows = features.nrows();
        let check = |j: usize| if j < rows { Ok(j) } else { Err(CavpError::Index(j)) };
        let mut unit = Array2::zeros(features.dim());
        let mut norms = vec![0.0; rows];
        for (i, r) in features.axis_iter(Axis(0)).enumerate() {
            let (u, nrm) = l2_normalize(r);
            unit.row_mut(i).assign(&u);
            norms[i] = nrm;
        }
        let mut d_unit = Array2::<f64>::zeros(features.dim());
        for term in terms {
            let pos = term.positives.iter().map(|&j| check(j)).collect::<Result<Vec<_>, _>>()?;
            let neg = term.negatives.iter().map(|&j| check(j)).collect::<Result<Vec<_>, _>>()?;
            let a = check(term.anchor)?;
            let out = info_nce(unit.row(a), unit.select(Axis(0), &pos).view(), unit.select(Axis(0), &neg).view(), tau)?;
            cp += out.loss;
            d_unit.row_mut(a).scaled_add(1.0, &out.d_anchor);
            for (k, &j) in pos.iter().enumerate() {
                d_unit.row_mut(j).scaled_add(1.0, &out.d_positives.row(k));
            }
            for (k, &j) in neg.iter().enumerate() {
                d_unit.row_mut(j).scaled_add(1.0, &out.d_negatives.row(k));
            }
        }
        let e = terms.len() as f64;
        cp /= e;
        for (i, &norm) in norms.iter().enumerate() {
            let g = l2_normalize_backward(unit.row(i), norm, d_unit.row(i)) / e;
            d_features.row_mut(i).assign(&g);
        }
    }
    Ok(TotalLoss { value: ce + cp, cross_entropy: ce, contrastive: cp, d_logits, d_features })
}
