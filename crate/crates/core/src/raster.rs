//! Row-major pixel rasters and their 8-bit PGM (P5) serialization.

use std::io::{self, Write};

use crate::labels::ClassId;

/// Binary H×W mask, row-major: pixel `(row, col)` lives at `row * width + col`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    height: usize,
    width: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self { height, width, data: vec![false; height * width] }
    }

    pub fn from_vec(height: usize, width: usize, data: Vec<bool>) -> Option<Self> {
        (data.len() == height * width).then_some(Self { height, width, data })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.data[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: bool) {
        self.data[row * self.width + col] = v;
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.data
    }

    pub fn area(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// Iterates the `(row, col)` of every foreground pixel.
    pub fn foreground(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.data.iter().enumerate().filter(|(_, &b)| b).map(move |(i, _)| (i / w, i % w))
    }

    /// Mirror across the vertical axis.
    pub fn flip_horizontal(&self) -> Self {
        let mut out = Self::zeros(self.height, self.width);
        for (r, c) in self.foreground() {
            out.set(r, self.width - 1 - c, true);
        }
        out
    }

    /// Inclusive `(min_row, min_col, max_row, max_col)` of the foreground.
    pub fn bounding_box(&self) -> Option<(usize, usize, usize, usize)> {
        self.foreground().fold(None, |acc, (r, c)| {
            Some(match acc {
                None => (r, c, r, c),
                Some((r0, c0, r1, c1)) => (r0.min(r), c0.min(c), r1.max(r), c1.max(c)),
            })
        })
    }
}

/// Per-pixel class-index raster (8-bit).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelRaster {
    height: usize,
    width: usize,
    data: Vec<u8>,
}

impl LabelRaster {
    pub fn background(height: usize, width: usize) -> Self {
        Self { height, width, data: vec![0; height * width] }
    }

    pub fn from_vec(height: usize, width: usize, data: Vec<u8>) -> Option<Self> {
        (data.len() == height * width).then_some(Self { height, width, data })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> ClassId {
        ClassId(self.data[row * self.width + col])
    }

    /// Writes `class` wherever `mask` is set.
    pub fn paint(&mut self, mask: &BinaryMask, class: ClassId) {
        assert_eq!((mask.height(), mask.width()), (self.height, self.width));
        for (dst, &m) in self.data.iter_mut().zip(mask.as_slice()) {
            if m {
                *dst = class.0;
            }
        }
    }

    pub fn write_pgm<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "P5\n{} {}\n255\n", self.width, self.height)?;
        w.write_all(&self.data)
    }

    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.data.len() + 16);
        self.write_pgm(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    /// Parses a binary 8-bit PGM (P5, maxval ≤ 255).
    pub fn from_pgm(bytes: &[u8]) -> Result<Self, String> {
        let mut pos = 0;
        let mut fields = Vec::with_capacity(4);
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err("truncated PGM header".into());
            }
            fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|e| e.to_string())?);
        }
        if fields[0] != "P5" {
            return Err(format!("unsupported magic {:?}, expected P5", fields[0]));
        }
        let parse = |s: &str, what: &str| s.parse::<usize>().map_err(|_| format!("bad PGM {what}: {s:?}"));
        let width = parse(fields[1], "width")?;
        let height = parse(fields[2], "height")?;
        let maxval = parse(fields[3], "maxval")?;
        if maxval == 0 || maxval > 255 {
            return Err(format!("unsupported PGM maxval {maxval}"));
        }
        // exactly one whitespace byte separates the header from the raster
        pos += 1;
        let n = width * height;
        let data = bytes.get(pos..pos + n).ok_or("truncated PGM raster")?.to_vec();
        Ok(Self { height, width, data })
    }
}
