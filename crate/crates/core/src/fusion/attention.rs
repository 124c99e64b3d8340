use ndarray::{s, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::FusionError;

const MINMAX_EPS: f64 = 1e-8;

/// How attention logits become weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    /// Row-wise softmax over keys.
    Softmax,
    /// Independent elementwise sigmoid; several keys can be fully active.
    Sigmoid,
    /// Row-wise `(L − min) / (max − min + ε)`.
    MinMax,
    /// Column-wise softmax over queries (channel-style attention).
    Channel,
}

impl Activation {
    pub const ALL: [Activation; 4] = [Activation::Softmax, Activation::Sigmoid, Activation::MinMax, Activation::Channel];

    pub fn apply(self, logits: &Array2<f64>) -> Array2<f64> {
        match self {
            Activation::Sigmoid => logits.mapv(|x| 1.0 / (1.0 + (-x).exp())),
            Activation::Softmax => softmax_rows(logits.view()),
            Activation::Channel => softmax_rows(logits.t()).reversed_axes(),
            Activation::MinMax => {
                let mut a = logits.clone();
                for mut row in a.rows_mut() {
                    let (lo, hi) = row.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
                    let den = hi - lo + MINMAX_EPS;
                    row.mapv_inplace(|x| (x - lo) / den);
                }
                a
            }
        }
    }

    /// Gradient w.r.t. the logits given the gradient w.r.t. the weights.
    fn backward(self, logits: &Array2<f64>, attn: &Array2<f64>, d_attn: &Array2<f64>) -> Array2<f64> {
        match self {
            Activation::Sigmoid => d_attn * &attn.mapv(|a| a * (1.0 - a)),
            Activation::Softmax => softmax_rows_backward(attn.view(), d_attn.view()),
            Activation::Channel => softmax_rows_backward(attn.t(), d_attn.t()).reversed_axes(),
            Activation::MinMax => {
                let mut out = Array2::zeros(logits.raw_dim());
                for ((lrow, grow), mut orow) in logits.rows().into_iter().zip(d_attn.rows()).zip(out.rows_mut()) {
                    let (mut imin, mut imax) = (0, 0);
                    for (j, &x) in lrow.iter().enumerate() {
                        if x < lrow[imin] {
                            imin = j;
                        }
                        if x > lrow[imax] {
                            imax = j;
                        }
                    }
                    let lo = lrow[imin];
                    let r = lrow[imax] - lo + MINMAX_EPS;
                    let sum_g: f64 = grow.sum();
                    let sum_gn: f64 = grow.iter().zip(lrow).map(|(g, l)| g * (l - lo)).sum();
                    for (j, o) in orow.iter_mut().enumerate() {
                        *o = grow[j] / r;
                    }
                    orow[imin] -= sum_g / r;
                    orow[imin] += sum_gn / (r * r);
                    orow[imax] -= sum_gn / (r * r);
                }
                out
            }
        }
    }
}

fn softmax_rows(x: ArrayView2<f64>) -> Array2<f64> {
    let mut out = x.to_owned();
    for mut row in out.rows_mut() {
        let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - m).exp());
        let z = row.sum();
        row.mapv_inplace(|v| v / z);
    }
    out
}

fn softmax_rows_backward(a: ArrayView2<f64>, g: ArrayView2<f64>) -> Array2<f64> {
    let dot = (&a * &g).sum_axis(Axis(1)).insert_axis(Axis(1));
    &a * &(&g - &dot)
}

/// Saved activations of one attention call.
#[derive(Debug, Clone)]
pub struct MhaCache {
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    activation: Activation,
    heads: usize,
    logits: Vec<Array2<f64>>,
    attn: Vec<Array2<f64>>,
}

impl MhaCache {
    /// Attention weights of head `h` (queries × keys).
    pub fn attention(&self, h: usize) -> &Array2<f64> {
        &self.attn[h]
    }
}

fn check(q: &Array2<f64>, k: &Array2<f64>, v: &Array2<f64>, heads: usize) -> Result<(), FusionError> {
    let d = q.ncols();
    if d == 0 || k.ncols() != d || v.ncols() != d || k.nrows() != v.nrows() {
        return Err(FusionError::Shape(format!(
            "Q {:?}, K {:?}, V {:?}",
            q.dim(),
            k.dim(),
            v.dim()
        )));
    }
    if k.nrows() == 0 {
        return Err(FusionError::Shape("no keys".into()));
    }
    if heads == 0 || !d.is_multiple_of(heads) {
        return Err(FusionError::Heads { dim: d, heads });
    }
    Ok(())
}

pub(crate) fn mha_forward(
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    activation: Activation,
    heads: usize,
) -> Result<(Array2<f64>, MhaCache), FusionError> {
    check(&q, &k, &v, heads)?;
    let dh = q.ncols() / heads;
    let scale = 1.0 / (dh as f64).sqrt();
    let mut out = Array2::zeros((q.nrows(), q.ncols()));
    let (mut logits, mut attn) = (Vec::with_capacity(heads), Vec::with_capacity(heads));
    for h in 0..heads {
        let cols = s![.., h * dh..(h + 1) * dh];
        let l = q.slice(cols).dot(&k.slice(cols).t()) * scale;
        let a = activation.apply(&l);
        out.slice_mut(cols).assign(&a.dot(&v.slice(cols)));
        logits.push(l);
        attn.push(a);
    }
    Ok((out, MhaCache { q, k, v, activation, heads, logits, attn }))
}

/// Returns `(dQ, dK, dV)`.
pub(crate) fn mha_backward(cache: &MhaCache, d_out: &Array2<f64>) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
    let dh = cache.q.ncols() / cache.heads;
    let scale = 1.0 / (dh as f64).sqrt();
    let mut dq = Array2::zeros(cache.q.raw_dim());
    let mut dk = Array2::zeros(cache.k.raw_dim());
    let mut dv = Array2::zeros(cache.v.raw_dim());
    for h in 0..cache.heads {
        let cols = s![.., h * dh..(h + 1) * dh];
        let a = &cache.attn[h];
        let g = d_out.slice(cols);
        let d_attn = g.dot(&cache.v.slice(cols).t());
        dv.slice_mut(cols).assign(&a.t().dot(&g));
        let dl = cache.activation.backward(&cache.logits[h], a, &d_attn) * scale;
        dq.slice_mut(cols).assign(&dl.dot(&cache.k.slice(cols)));
        dk.slice_mut(cols).assign(&dl.t().dot(&cache.q.slice(cols)));
    }
    (dq, dk, dv)
}

/// `activation(QKᵀ/√d)·V`, computed per head on `D / heads` column blocks.
pub fn mha(
    q: &Array2<f64>,
    k: &Array2<f64>,
    v: &Array2<f64>,
    activation: Activation,
    heads: usize,
) -> Result<Array2<f64>, FusionError> {
    mha_forward(q.clone(), k.clone(), v.clone(), activation, heads).map(|(o, _)| o)
}

#[cfg(test)]
mod tests {
    use ndarray::array;
    use rand::Rng;

    use super::*;
    use crate::rng::stream;

    fn random(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
        let mut rng = stream(seed);
        Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..1.0))
    }

    /// Direct evaluation of the attention formula, one entry at a time.
    fn reference(q: &Array2<f64>, k: &Array2<f64>, v: &Array2<f64>, act: Activation) -> Array2<f64> {
        let (n, m, d) = (q.nrows(), k.nrows(), q.ncols());
        let mut l = vec![vec![0.0; m]; n];
        for i in 0..n {
            for j in 0..m {
                l[i][j] = (0..d).map(|c| q[[i, c]] * k[[j, c]]).sum::<f64>() / (d as f64).sqrt();
            }
        }
        let mut a = vec![vec![0.0; m]; n];
        for i in 0..n {
            for j in 0..m {
                a[i][j] = match act {
                    Activation::Sigmoid => 1.0 / (1.0 + (-l[i][j]).exp()),
                    Activation::Softmax => l[i][j].exp() / (0..m).map(|jj| l[i][jj].exp()).sum::<f64>(),
                    Activation::Channel => l[i][j].exp() / (0..n).map(|ii| l[ii][j].exp()).sum::<f64>(),
                    Activation::MinMax => {
                        let lo = l[i].iter().cloned().fold(f64::INFINITY, f64::min);
                        let hi = l[i].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                        (l[i][j] - lo) / (hi - lo + 1e-8)
                    }
                };
            }
        }
        Array2::from_shape_fn((n, d), |(i, c)| (0..m).map(|j| a[i][j] * v[[j, c]]).sum())
    }

    #[test]
    fn singleton_key() {
        let q = random(3, 4, 1);
        let k = random(1, 4, 2);
        let v = random(1, 4, 3);
        let out = mha(&q, &k, &v, Activation::Softmax, 1).unwrap();
        for row in out.rows() {
            for c in 0..4 {
                assert!((row[c] - v[[0, c]]).abs() < 1e-15);
            }
        }
        let q = array![[1.0, 0.0], [0.0, 2.0]];
        let k = array![[0.0, 0.0]];
        let v = array![[2.0, -4.0]];
        let out = mha(&q, &k, &v, Activation::Sigmoid, 1).unwrap();
        assert_eq!(out, array![[1.0, -2.0], [1.0, -2.0]]);
    }

    #[test]
    fn matches_direct_evaluation() {
        let q = random(3, 4, 10);
        let k = random(2, 4, 11);
        let v = random(2, 4, 12);
        for act in Activation::ALL {
            let got = mha(&q, &k, &v, act, 1).unwrap();
            let want = reference(&q, &k, &v, act);
            let err = (&got - &want).mapv(f64::abs).fold(0.0f64, |m, &x| m.max(x));
            assert!(err < 1e-12, "{act:?}: {err}");
        }
    }

    #[test]
    fn heads_split_columns() {
        let q = random(3, 4, 20);
        let k = random(2, 4, 21);
        let v = random(2, 4, 22);
        let two = mha(&q, &k, &v, Activation::Softmax, 2).unwrap();
        for h in 0..2 {
            let cols = s![.., 2 * h..2 * h + 2];
            let want = reference(&q.slice(cols).to_owned(), &k.slice(cols).to_owned(), &v.slice(cols).to_owned(), Activation::Softmax);
            assert!((&two.slice(cols) - &want).mapv(f64::abs).sum() < 1e-12);
        }
        assert_eq!(mha(&q, &k, &v, Activation::Softmax, 3).unwrap_err(), FusionError::Heads { dim: 4, heads: 3 });
        assert!(matches!(mha(&q, &random(2, 3, 0), &v, Activation::Softmax, 1), Err(FusionError::Shape(_))));
    }

    #[test]
    fn weight_ranges() {
        let l = random(5, 6, 30) * 4.0;
        let sm = Activation::Softmax.apply(&l);
        for row in sm.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-9);
        }
        assert!(Activation::Sigmoid.apply(&l).iter().all(|&a| a > 0.0 && a < 1.0));
        assert!(Activation::MinMax.apply(&l).iter().all(|&a| (0.0..=1.0).contains(&a)));
        let ch = Activation::Channel.apply(&l);
        for col in ch.columns() {
            assert!((col.sum() - 1.0).abs() < 1e-9);
        }
        let constant = Array2::from_elem((2, 3), 0.7);
        assert!(Activation::MinMax.apply(&constant).iter().all(|&a| a == 0.0));
    }
}
