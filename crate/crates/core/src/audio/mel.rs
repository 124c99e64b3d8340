use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{AudioError, Waveform, SAMPLE_RATE};

/// Short-time analysis parameters: 25 ms periodic Hann window, 10 ms hop,
/// 512-point transform, 64 triangular HTK-mel bands over 125–7500 Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct MelConfig {
    pub window: usize,
    pub hop: usize,
    pub n_fft: usize,
    pub n_mels: usize,
    pub fmin: f64,
    pub fmax: f64,
    pub log_offset: f64,
}

impl Default for MelConfig {
    fn default() -> Self {
        Self { window: 400, hop: 160, n_fft: 512, n_mels: 64, fmin: 125.0, fmax: 7500.0, log_offset: 1e-6 }
    }
}

pub fn hz_to_mel(hz: f64) -> f64 {
    1127.0 * (1.0 + hz / 700.0).ln()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * ((mel / 1127.0).exp() - 1.0)
}

impl MelConfig {
    /// The `n_mels + 2` band edge frequencies, evenly spaced in mel.
    pub fn band_edges_hz(&self) -> Vec<f64> {
        let (lo, hi) = (hz_to_mel(self.fmin), hz_to_mel(self.fmax));
        let n = self.n_mels + 1;
        (0..=n).map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / n as f64)).collect()
    }

    /// Peak frequency of band `k`.
    pub fn band_center_hz(&self, k: usize) -> f64 {
        self.band_edges_hz()[k + 1]
    }

    /// `n_mels × (n_fft/2 + 1)` triangular weights evaluated at bin frequencies.
    pub fn filterbank(&self) -> Vec<Vec<f64>> {
        let edges = self.band_edges_hz();
        let bins = self.n_fft / 2 + 1;
        (0..self.n_mels)
            .map(|k| {
                let (lo, c, hi) = (edges[k], edges[k + 1], edges[k + 2]);
                (0..bins)
                    .map(|b| {
                        let f = b as f64 * SAMPLE_RATE as f64 / self.n_fft as f64;
                        ((f - lo) / (c - lo)).min((hi - f) / (hi - c)).max(0.0)
                    })
                    .collect()
            })
            .collect()
    }
}

/// `frames × bands` log energies. Stereo input yields per-channel banks
/// concatenated along the band axis (left bands first).
#[derive(Debug, Clone, PartialEq)]
pub struct MelSpectrogram {
    pub frames: usize,
    pub bands: usize,
    pub channels: usize,
    pub window_seconds: u32,
    /// Row-major, one row per frame.
    pub data: Vec<f64>,
}

impl MelSpectrogram {
    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.bands..(t + 1) * self.bands]
    }

    /// Per-band mean over frames.
    pub fn mean_frame(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.bands];
        for t in 0..self.frames {
            for (acc, &x) in m.iter_mut().zip(self.row(t)) {
                *acc += x;
            }
        }
        m.iter_mut().for_each(|x| *x /= self.frames as f64);
        m
    }
}

struct Analyzer {
    cfg: MelConfig,
    fft: Arc<dyn Fft<f64>>,
    hann: Vec<f64>,
    bank: Vec<Vec<f64>>,
}

impl Analyzer {
    fn new(cfg: MelConfig) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(cfg.n_fft);
        let n = cfg.window as f64;
        let hann = (0..cfg.window).map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n).cos()).collect();
        let bank = cfg.filterbank();
        Self { cfg, fft, hann, bank }
    }

    fn frames(&self, samples: &[f64]) -> usize {
        1 + (samples.len() - self.cfg.window) / self.cfg.hop
    }

    /// Appends `frames × n_mels` log energies of one channel into `out`,
    /// writing band block `block` of each row of width `stride`.
    fn analyze(&self, samples: &[f64], out: &mut [f64], stride: usize, block: usize) {
        let bins = self.cfg.n_fft / 2 + 1;
        let mut buf = vec![Complex::new(0.0, 0.0); self.cfg.n_fft];
        let mut power = vec![0.0; bins];
        for t in 0..self.frames(samples) {
            let start = t * self.cfg.hop;
            buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
            for (i, (&x, &h)) in samples[start..start + self.cfg.window].iter().zip(&self.hann).enumerate() {
                buf[i].re = x * h;
            }
            self.fft.process(&mut buf);
            for (p, c) in power.iter_mut().zip(&buf) {
                *p = c.norm_sqr();
            }
            let row = &mut out[t * stride + block * self.cfg.n_mels..][..self.cfg.n_mels];
            for (dst, w) in row.iter_mut().zip(&self.bank) {
                let e: f64 = w.iter().zip(&power).map(|(a, b)| a * b).sum();
                *dst = (e + self.cfg.log_offset).ln();
            }
        }
    }
}

/// Log-mel features of the first `window_seconds` (1 or 3) of `w`.
pub fn log_mel(w: &Waveform, window_seconds: u32) -> Result<MelSpectrogram, AudioError> {
    log_mel_with(w, window_seconds, &MelConfig::default())
}

pub fn log_mel_with(w: &Waveform, window_seconds: u32, cfg: &MelConfig) -> Result<MelSpectrogram, AudioError> {
    if window_seconds != 1 && window_seconds != 3 {
        return Err(AudioError::Window(window_seconds));
    }
    let need = window_seconds as usize * SAMPLE_RATE as usize;
    if w.len() < need {
        return Err(AudioError::TooShort { have: w.len(), need });
    }
    let analyzer = Analyzer::new(cfg.clone());
    let frames = analyzer.frames(&w.channel(0)[..need]);
    let bands = cfg.n_mels * w.num_channels();
    let mut data = vec![0.0; frames * bands];
    for c in 0..w.num_channels() {
        analyzer.analyze(&w.channel(c)[..need], &mut data, bands, c);
    }
    Ok(MelSpectrogram { frames, bands, channels: w.num_channels(), window_seconds, data })
}
