//! Waveforms, 16-bit WAV I/O, the stereo synthesis chain and log-mel features.

mod mel;
mod synth;
mod wav;

use thiserror::Error;

pub use mel::{hz_to_mel, log_mel, mel_to_hz, MelConfig, MelSpectrogram};
pub use synth::{apply_pan, mix, pan_alpha, trim, PanCoefficient, PanLaw, CLIP_SECONDS};
pub use wav::{load_wav, write_wav};

pub const SAMPLE_RATE: u32 = 16_000;

#[derive(Debug, Error, PartialEq)]
pub enum AudioError {
    #[error("unsupported WAV {field}: found {found}, expected {expected}")]
    Format { field: &'static str, found: String, expected: &'static str },
    #[error("malformed WAV: {0}")]
    Malformed(String),
    #[error("waveform is empty")]
    Empty,
    #[error("channel count {0} is not 1 or 2")]
    Channels(usize),
    #[error("channel lengths differ")]
    RaggedChannels,
    #[error("expected a {expected} waveform, got {found} channel(s)")]
    ChannelMismatch { expected: &'static str, found: usize },
    #[error("clip lengths differ: {0} vs {1} samples")]
    LengthMismatch(usize, usize),
    #[error("nothing to mix")]
    NoClips,
    #[error("image width must be positive")]
    ZeroWidth,
    #[error("mask center {cw} lies outside [0, {width}]")]
    CenterOutOfRange { cw: f64, width: usize },
    #[error("pan coefficient {0} outside [0, 1]")]
    Alpha(f64),
    #[error("window of {0} s is not supported (use 1 or 3)")]
    Window(u32),
    #[error("waveform of {have} samples is shorter than the {need}-sample window")]
    TooShort { have: usize, need: usize },
}

/// Multi-channel audio at [`SAMPLE_RATE`]; samples are nominally in [−1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    channels: Vec<Vec<f64>>,
}

impl Waveform {
    pub fn new(channels: Vec<Vec<f64>>) -> Result<Self, AudioError> {
        if channels.is_empty() || channels.len() > 2 {
            return Err(AudioError::Channels(channels.len()));
        }
        if channels.iter().any(|c| c.len() != channels[0].len()) {
            return Err(AudioError::RaggedChannels);
        }
        Ok(Self { channels })
    }

    pub fn mono(samples: Vec<f64>) -> Self {
        Self { channels: vec![samples] }
    }

    pub fn stereo(left: Vec<f64>, right: Vec<f64>) -> Result<Self, AudioError> {
        Self::new(vec![left, right])
    }

    pub fn silence(channels: usize, len: usize) -> Result<Self, AudioError> {
        Self::new(vec![vec![0.0; len]; channels])
    }

    pub fn sample_rate(&self) -> u32 {
        SAMPLE_RATE
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn duration_seconds(&self) -> f64 {
        self.len() as f64 / SAMPLE_RATE as f64
    }

    pub fn channel(&self, i: usize) -> &[f64] {
        &self.channels[i]
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn peak(&self) -> f64 {
        self.channels.iter().flatten().fold(0.0, |m, &x| m.max(x.abs()))
    }

    /// Average of the channels.
    pub fn to_mono(&self) -> Waveform {
        if self.num_channels() == 1 {
            return self.clone();
        }
        let n = self.num_channels() as f64;
        let samples = (0..self.len()).map(|i| self.channels.iter().map(|c| c[i]).sum::<f64>() / n).collect();
        Waveform::mono(samples)
    }

    pub fn swap_channels(&self) -> Waveform {
        let mut channels = self.channels.clone();
        channels.reverse();
        Waveform { channels }
    }

    pub fn energy(&self, channel: usize) -> f64 {
        self.channels[channel].iter().map(|x| x * x).sum()
    }
}
