use serde::{Deserialize, Serialize};

use super::{AudioError, Waveform, SAMPLE_RATE};

/// Clip length used throughout the benchmark.
pub const CLIP_SECONDS: f64 = 10.0;

/// Horizontal position of a sound source, `0` at the left image edge.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PanCoefficient(f64);

impl PanCoefficient {
    pub const CENTER: PanCoefficient = PanCoefficient(0.5);

    pub fn new(alpha: f64) -> Result<Self, AudioError> {
        if (0.0..=1.0).contains(&alpha) {
            Ok(Self(alpha))
        } else {
            Err(AudioError::Alpha(alpha))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PanLaw {
    /// `left = 1 − α`, `right = α`; channels sum back to the mono source.
    #[default]
    Linear,
    /// `left = cos(απ/2)`, `right = sin(απ/2)`.
    ConstantPower,
}

impl PanLaw {
    /// `(left, right)` gains.
    pub fn gains(self, alpha: PanCoefficient) -> (f64, f64) {
        let a = alpha.value();
        match self {
            PanLaw::Linear => (1.0 - a, a),
            PanLaw::ConstantPower => {
                let t = a * std::f64::consts::FRAC_PI_2;
                (t.cos(), t.sin())
            }
        }
    }
}

/// Splits `x` into `((1 − a)·x, a·x)` so that the two parts sum back to `x`
/// exactly: the larger part is a rounded product, the smaller one the exact
/// remainder (Sterbenz: the product lies within a factor of two of `x`).
fn linear_split(x: f64, a: f64) -> (f64, f64) {
    if a >= 0.5 {
        let right = a * x;
        (x - right, right)
    } else {
        let left = (1.0 - a) * x;
        (left, x - left)
    }
}

/// Cuts to the first `seconds`; shorter clips are tiled up to that length.
pub fn trim(w: &Waveform, seconds: f64) -> Result<Waveform, AudioError> {
    if w.is_empty() {
        return Err(AudioError::Empty);
    }
    let target = (seconds * SAMPLE_RATE as f64).round() as usize;
    let channels = w
        .channels()
        .iter()
        .map(|c| c.iter().copied().cycle().take(target).collect())
        .collect();
    Waveform::new(channels)
}

/// `α = c_w / W`.
pub fn pan_alpha(center_w: f64, width: usize) -> Result<PanCoefficient, AudioError> {
    if width == 0 {
        return Err(AudioError::ZeroWidth);
    }
    if !(0.0..=width as f64).contains(&center_w) {
        return Err(AudioError::CenterOutOfRange { cw: center_w, width });
    }
    PanCoefficient::new(center_w / width as f64)
}

/// Pans a mono clip into stereo.
pub fn apply_pan(w: &Waveform, alpha: PanCoefficient, law: PanLaw) -> Result<Waveform, AudioError> {
    if w.num_channels() != 1 {
        return Err(AudioError::ChannelMismatch { expected: "mono", found: w.num_channels() });
    }
    let src = w.channel(0);
    let (left, right) = match law {
        PanLaw::Linear => src.iter().map(|&x| linear_split(x, alpha.value())).unzip(),
        PanLaw::ConstantPower => {
            let (gl, gr) = law.gains(alpha);
            src.iter().map(|&x| (gl * x, gr * x)).unzip()
        }
    };
    Waveform::stereo(left, right)
}

/// Samplewise sum. A mix peaking above 1 is rescaled by `1 / peak` as a whole.
pub fn mix(clips: &[Waveform]) -> Result<Waveform, AudioError> {
    let first = clips.first().ok_or(AudioError::NoClips)?;
    let mut acc: Vec<Vec<f64>> = first.channels().to_vec();
    for c in &clips[1..] {
        if c.num_channels() != first.num_channels() {
            return Err(AudioError::ChannelMismatch {
                expected: if first.num_channels() == 1 { "mono" } else { "stereo" },
                found: c.num_channels(),
            });
        }
        if c.len() != first.len() {
            return Err(AudioError::LengthMismatch(first.len(), c.len()));
        }
        for (dst, src) in acc.iter_mut().zip(c.channels()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
    }
    let peak = acc.iter().flatten().fold(0.0f64, |m, &x| m.max(x.abs()));
    if peak > 1.0 {
        let scale = 1.0 / peak;
        for x in acc.iter_mut().flatten() {
            *x *= scale;
        }
    }
    Waveform::new(acc)
}
