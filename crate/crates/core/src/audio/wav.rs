use super::{AudioError, Waveform, SAMPLE_RATE};

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Reads a RIFF/WAVE file holding 16-bit little-endian PCM at 16 kHz with one
/// or two channels. Samples map to reals as `i / 32768`.
pub fn load_wav(bytes: &[u8]) -> Result<Waveform, AudioError> {
    let malformed = |m: &str| AudioError::Malformed(m.to_string());
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(malformed("missing RIFF/WAVE header"));
    }
    let mut pos = 12;
    let mut format: Option<(u16, u16, u32, u16)> = None;
    let mut data: Option<&[u8]> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body = bytes.get(pos + 8..pos + 8 + size).ok_or_else(|| malformed("chunk runs past end of file"))?;
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(malformed("fmt chunk too short"));
                }
                format = Some((u16_at(body, 0), u16_at(body, 2), u32_at(body, 4), u16_at(body, 14)));
            }
            b"data" => data = Some(body),
            _ => {}
        }
        pos += 8 + size + (size & 1);
    }
    let (tag, channels, rate, bits) = format.ok_or_else(|| malformed("no fmt chunk"))?;
    if tag != 1 {
        return Err(AudioError::Format { field: "audio format", found: tag.to_string(), expected: "1 (PCM)" });
    }
    if rate != SAMPLE_RATE {
        return Err(AudioError::Format { field: "sample rate", found: rate.to_string(), expected: "16000" });
    }
    if bits != 16 {
        return Err(AudioError::Format { field: "bits per sample", found: bits.to_string(), expected: "16" });
    }
    if !(1..=2).contains(&channels) {
        return Err(AudioError::Format { field: "channel count", found: channels.to_string(), expected: "1 or 2" });
    }
    let data = data.ok_or_else(|| malformed("no data chunk"))?;
    let nch = channels as usize;
    let frame = 2 * nch;
    if data.len() % frame != 0 {
        return Err(malformed("data chunk is not a whole number of frames"));
    }
    let mut out = vec![Vec::with_capacity(data.len() / frame); nch];
    for f in data.chunks_exact(frame) {
        for (c, s) in f.chunks_exact(2).enumerate() {
            out[c].push(i16::from_le_bytes([s[0], s[1]]) as f64 / 32768.0);
        }
    }
    Waveform::new(out)
}

fn quantize(x: f64) -> i16 {
    (x * 32768.0).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16
}

/// Writes a canonical 44-byte-header PCM16 WAV.
pub fn write_wav(w: &Waveform) -> Vec<u8> {
    let nch = w.num_channels();
    let data_len = w.len() * nch * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVEfmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&(nch as u16).to_le_bytes());
    out.extend_from_slice(&SAMPLE_RATE.to_le_bytes());
    out.extend_from_slice(&(SAMPLE_RATE * 2 * nch as u32).to_le_bytes());
    out.extend_from_slice(&((2 * nch) as u16).to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for i in 0..w.len() {
        for c in 0..nch {
            out.extend_from_slice(&quantize(w.channel(c)[i]).to_le_bytes());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(rate: u32, bits: u16, channels: u16) -> Vec<u8> {
        let mut b = write_wav(&Waveform::silence(channels.into(), 4).unwrap());
        b[22..24].copy_from_slice(&channels.to_le_bytes());
        b[24..28].copy_from_slice(&rate.to_le_bytes());
        b[34..36].copy_from_slice(&bits.to_le_bytes());
        b
    }

    #[test]
    fn one_second_of_silence() {
        let bytes = write_wav(&Waveform::silence(1, 16_000).unwrap());
        let w = load_wav(&bytes).unwrap();
        assert_eq!(w.len(), 16_000);
        assert_eq!(w.num_channels(), 1);
        assert!(w.channel(0).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn rejects_wrong_rate_and_depth() {
        let e = load_wav(&header(8000, 16, 1)).unwrap_err();
        assert!(matches!(e, AudioError::Format { field: "sample rate", .. }), "{e}");
        assert!(e.to_string().contains("8000"));
        let e = load_wav(&header(16000, 24, 1)).unwrap_err();
        assert!(matches!(e, AudioError::Format { field: "bits per sample", .. }));
        assert!(load_wav(b"RIFX....WAVE").is_err());
    }

    #[test]
    fn skips_unknown_chunks() {
        let plain = write_wav(&Waveform::stereo(vec![0.5, -0.25], vec![-1.0, 0.0]).unwrap());
        let mut with_list = plain[..36].to_vec();
        with_list.extend_from_slice(b"LIST");
        with_list.extend_from_slice(&3u32.to_le_bytes());
        with_list.extend_from_slice(b"abc\0");
        with_list.extend_from_slice(&plain[36..]);
        assert_eq!(load_wav(&with_list).unwrap(), load_wav(&plain).unwrap());
    }

    #[test]
    fn load_write_load_is_a_fixed_point() {
        let samples: Vec<f64> = (0..999).map(|i| ((i * 7919) % 65536) as f64 / 32768.0 - 1.0).collect();
        let bytes = write_wav(&Waveform::mono(samples));
        let once = load_wav(&bytes).unwrap();
        let again = write_wav(&once);
        assert_eq!(again, bytes);
        assert_eq!(load_wav(&again).unwrap(), once);
    }

    #[test]
    fn quantization_saturates() {
        let w = load_wav(&write_wav(&Waveform::mono(vec![1.0, -1.0, 2.0]))).unwrap();
        assert_eq!(w.channel(0), &[32767.0 / 32768.0, -1.0, 32767.0 / 32768.0]);
    }
}
