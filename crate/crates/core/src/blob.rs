//! Flat little-endian `f32` tensor blobs with a `key=value` text sidecar.
//!
//! A blob `name` is stored as `name.f32` (raw data) and `name.txt`
//! (descriptor, e.g. `rows=98`, `cols=64`).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::audio::MelSpectrogram;
use crate::{Error, Result};

pub type Descriptor = BTreeMap<String, String>;

pub fn encode_f32_le(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|&v| (v as f32).to_le_bytes()).collect()
}

pub fn decode_f32_le(bytes: &[u8]) -> Option<Vec<f32>> {
    bytes.len().is_multiple_of(4).then(|| bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect())
}

pub fn descriptor_to_text(d: &Descriptor) -> String {
    d.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

pub fn descriptor_from_text(text: &str) -> Descriptor {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}

fn paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("f32"), stem.with_extension("txt"))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

pub fn write_blob(stem: &Path, values: &[f64], descriptor: &Descriptor) -> Result<()> {
    let (data, side) = paths(stem);
    fs::write(&data, encode_f32_le(values)).map_err(io_err(&data))?;
    fs::write(&side, descriptor_to_text(descriptor)).map_err(io_err(&side))?;
    Ok(())
}

pub fn read_blob(stem: &Path) -> Result<(Vec<f32>, Descriptor)> {
    let (data, side) = paths(stem);
    let bytes = fs::read(&data).map_err(io_err(&data))?;
    let values = decode_f32_le(&bytes).ok_or_else(|| Error::Io {
        path: data.clone(),
        source: std::io::Error::new(std::io::ErrorKind::InvalidData, "length is not a multiple of 4"),
    })?;
    let text = fs::read_to_string(&side).map_err(io_err(&side))?;
    Ok((values, descriptor_from_text(&text)))
}

pub fn mel_descriptor(m: &MelSpectrogram) -> Descriptor {
    [
        ("rows", m.frames.to_string()),
        ("cols", m.bands.to_string()),
        ("window_seconds", m.window_seconds.to_string()),
        ("channels", m.channels.to_string()),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

pub fn write_mel(stem: &Path, m: &MelSpectrogram) -> Result<()> {
    write_blob(stem, &m.data, &mel_descriptor(m))
}
