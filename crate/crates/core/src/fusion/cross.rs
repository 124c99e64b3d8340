use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use super::attention::{mha_backward, mha_forward, MhaCache};
use super::{Activation, FusionError};

/// Visual features on an `height × width` grid, one `D`-vector per cell,
/// stored row-major as a `(height·width) × D` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub height: usize,
    pub width: usize,
    pub data: Array2<f64>,
}

impl FeatureMap {
    pub fn new(height: usize, width: usize, data: Array2<f64>) -> Result<Self, FusionError> {
        if data.nrows() != height * width {
            return Err(FusionError::Shape(format!("{} rows for a {height}×{width} grid", data.nrows())));
        }
        Ok(Self { height, width, data })
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn pixels(&self) -> usize {
        self.data.nrows()
    }
}

/// Audio tokens, `T × D`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioEmbedding {
    pub tokens: Array2<f64>,
}

impl AudioEmbedding {
    pub fn new(tokens: Array2<f64>) -> Self {
        Self { tokens }
    }

    pub fn dim(&self) -> usize {
        self.tokens.ncols()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryMode {
    /// `z = u_v + MHA(u_v, u_a, u_a)`: each pixel queries the audio tokens.
    #[default]
    Visual,
    /// `z = u_v + u_v ⊙ mean_t MHA(u_a, u_v, u_v)`: audio queries the image
    /// and gates it multiplicatively. Kept for comparison.
    Audio,
}

/// Cross-attention fusion layer with learned `D × D` projections.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossAttention {
    pub wq: Array2<f64>,
    pub wk: Array2<f64>,
    pub wv: Array2<f64>,
    pub activation: Activation,
    pub heads: usize,
    pub mode: QueryMode,
}

/// Per-call saved state for [`CrossAttention::backward`].
#[derive(Debug, Clone)]
pub struct FusionCache {
    visual: Array2<f64>,
    audio: Array2<f64>,
    mha: MhaCache,
    /// Audio mode only: the gating vector.
    gate: Option<Array1<f64>>,
    height: usize,
    width: usize,
}

impl FusionCache {
    pub fn attention(&self) -> &MhaCache {
        &self.mha
    }
}

#[derive(Debug, Clone)]
pub struct FusionGrads {
    pub visual: Array2<f64>,
    pub audio: Array2<f64>,
    pub wq: Array2<f64>,
    pub wk: Array2<f64>,
    pub wv: Array2<f64>,
}

impl CrossAttention {
    /// Identity projections: the layer computes the raw formula.
    pub fn identity(dim: usize, activation: Activation) -> Self {
        let eye = Array2::eye(dim);
        Self { wq: eye.clone(), wk: eye.clone(), wv: eye, activation, heads: 1, mode: QueryMode::Visual }
    }

    pub fn dim(&self) -> usize {
        self.wq.nrows()
    }

    pub fn forward(&self, visual: &FeatureMap, audio: &AudioEmbedding) -> Result<(FeatureMap, FusionCache), FusionError> {
        let d = self.dim();
        if visual.dim() != d || audio.dim() != d {
            return Err(FusionError::Shape(format!(
                "visual D={}, audio D={}, layer D={d}",
                visual.dim(),
                audio.dim()
            )));
        }
        let (uv, ua) = (&visual.data, &audio.tokens);
        let (z, mha, gate) = match self.mode {
            QueryMode::Visual => {
                let (o, cache) = mha_forward(uv.dot(&self.wq), ua.dot(&self.wk), ua.dot(&self.wv), self.activation, self.heads)?;
                (uv + &o, cache, None)
            }
            QueryMode::Audio => {
                let (o, cache) = mha_forward(ua.dot(&self.wq), uv.dot(&self.wk), uv.dot(&self.wv), self.activation, self.heads)?;
                let g = o.mean_axis(Axis(0)).expect("at least one audio token");
                (uv + &(uv * &g), cache, Some(g))
            }
        };
        let out = FeatureMap { height: visual.height, width: visual.width, data: z };
        let cache = FusionCache {
            visual: uv.clone(),
            audio: ua.clone(),
            mha,
            gate,
            height: visual.height,
            width: visual.width,
        };
        Ok((out, cache))
    }

    pub fn backward(&self, cache: &FusionCache, upstream: &Array2<f64>) -> Result<FusionGrads, FusionError> {
        if upstream.dim() != cache.visual.dim() {
            return Err(FusionError::Shape(format!(
                "upstream {:?} for a {}×{} output",
                upstream.dim(),
                cache.height,
                cache.width
            )));
        }
        let (uv, ua) = (&cache.visual, &cache.audio);
        match (&self.mode, &cache.gate) {
            (QueryMode::Visual, _) => {
                let (dq, dk, dv) = mha_backward(&cache.mha, upstream);
                Ok(FusionGrads {
                    visual: upstream + &dq.dot(&self.wq.t()),
                    audio: dk.dot(&self.wk.t()) + dv.dot(&self.wv.t()),
                    wq: uv.t().dot(&dq),
                    wk: ua.t().dot(&dk),
                    wv: ua.t().dot(&dv),
                })
            }
            (QueryMode::Audio, Some(g)) => {
                let d_gate = (upstream * uv).sum_axis(Axis(0));
                let t = ua.nrows() as f64;
                let d_o = Array2::from_shape_fn(ua.dim(), |(_, c)| d_gate[c] / t);
                let (dq, dk, dv) = mha_backward(&cache.mha, &d_o);
                Ok(FusionGrads {
                    visual: upstream + &(upstream * g) + dk.dot(&self.wk.t()) + dv.dot(&self.wv.t()),
                    audio: dq.dot(&self.wq.t()),
                    wq: ua.t().dot(&dq),
                    wk: uv.t().dot(&dk),
                    wv: uv.t().dot(&dv),
                })
            }
            (QueryMode::Audio, None) => Err(FusionError::Shape("cache was produced in visual mode".into())),
        }
    }
}

/// `u_v + MHA(u_v, u_a, u_a)` with identity projections and one head.
pub fn cross_attend(visual: &FeatureMap, audio: &AudioEmbedding, activation: Activation) -> Result<FeatureMap, FusionError> {
    CrossAttention::identity(visual.dim(), activation).forward(visual, audio).map(|(z, _)| z)
}

/// A forward/backward pairing that remembers the last forward pass.
#[derive(Debug)]
pub struct FusionSession<'a> {
    layer: &'a CrossAttention,
    cache: Option<FusionCache>,
}

impl<'a> FusionSession<'a> {
    pub fn new(layer: &'a CrossAttention) -> Self {
        Self { layer, cache: None }
    }

    pub fn forward(&mut self, visual: &FeatureMap, audio: &AudioEmbedding) -> Result<FeatureMap, FusionError> {
        let (z, cache) = self.layer.forward(visual, audio)?;
        self.cache = Some(cache);
        Ok(z)
    }

    pub fn backward(&self, upstream: &Array2<f64>) -> Result<FusionGrads, FusionError> {
        let cache = self.cache.as_ref().ok_or(FusionError::MissingForward)?;
        self.layer.backward(cache, upstream)
    }
}

#[cfg(test)]
mod tests {
    use ndarray::Array2;
    use rand::Rng;

    use super::*;
    use crate::rng::stream;

    fn random(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
        let mut rng = stream(seed);
        Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..1.0))
    }

    fn grid(seed: u64) -> FeatureMap {
        FeatureMap::new(2, 2, random(4, 4, seed)).unwrap()
    }

    #[test]
    fn zero_audio_token_leaves_visual_unchanged() {
        let v = grid(1);
        let a = AudioEmbedding::new(Array2::zeros((1, 4)));
        assert_eq!(cross_attend(&v, &a, Activation::Sigmoid).unwrap(), v);
    }

    #[test]
    fn per_pixel_formula() {
        let v = grid(2);
        let a = AudioEmbedding::new(random(2, 4, 3));
        let z = cross_attend(&v, &a, Activation::Sigmoid).unwrap();
        for p in 0..4 {
            for c in 0..4 {
                let mut want = v.data[[p, c]];
                for t in 0..2 {
                    let logit: f64 = (0..4).map(|k| v.data[[p, k]] * a.tokens[[t, k]]).sum::<f64>() / 2.0;
                    want += a.tokens[[t, c]] / (1.0 + (-logit).exp());
                }
                assert!((z.data[[p, c]] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn softmax_and_sigmoid_disagree() {
        let v = grid(4);
        let a = AudioEmbedding::new(random(2, 4, 5));
        let s = cross_attend(&v, &a, Activation::Softmax).unwrap();
        let g = cross_attend(&v, &a, Activation::Sigmoid).unwrap();
        assert!((&s.data - &g.data).mapv(f64::abs).sum() > 1e-6);
    }

    #[test]
    fn session_requires_forward() {
        let layer = CrossAttention::identity(4, Activation::Sigmoid);
        let mut session = FusionSession::new(&layer);
        assert_eq!(session.backward(&Array2::zeros((4, 4))).unwrap_err(), FusionError::MissingForward);
        session.forward(&grid(6), &AudioEmbedding::new(random(2, 4, 7))).unwrap();
        let g = session.backward(&Array2::zeros((4, 4))).unwrap();
        assert!(g.visual.iter().chain(g.audio.iter()).chain(g.wq.iter()).all(|&x| x == 0.0));
        assert!(matches!(session.backward(&Array2::zeros((3, 4))), Err(FusionError::Shape(_))));
    }

    #[test]
    fn residual_path_has_identity_gradient() {
        let layer = CrossAttention::identity(4, Activation::Sigmoid);
        let (_, cache) = layer.forward(&grid(8), &AudioEmbedding::new(Array2::zeros((2, 4)))).unwrap();
        let up = random(4, 4, 9);
        let g = layer.backward(&cache, &up).unwrap();
        // zero keys and values: the attention branch has no visual dependence
        assert!((&g.visual - &up).mapv(f64::abs).sum() < 1e-15);
    }

    #[test]
    fn dimension_mismatch() {
        let r = cross_attend(&grid(1), &AudioEmbedding::new(random(1, 3, 2)), Activation::Softmax);
        assert!(matches!(r, Err(FusionError::Shape(_))));
    }
}
