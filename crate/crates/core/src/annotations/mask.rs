//! COCO mask encodings.
//!
//! RLE counts follow the COCO convention: runs alternate starting with
//! background and walk pixels in column-major order (down each column, then
//! across). Rasters produced here are row-major [`BinaryMask`]s.

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};
use serde_json::Number;

use super::AnnotationError;
use crate::raster::BinaryMask;

#[derive(Debug, Clone, PartialEq)]
pub enum MaskEncoding {
    /// One or more polygons of interleaved `x, y` vertex coordinates.
    Polygons(Vec<Vec<Number>>),
    /// Uncompressed RLE; `size` is `[height, width]`.
    Rle { counts: Vec<u64>, size: [usize; 2] },
    /// COCO's compressed RLE string.
    CompressedRle { counts: String, size: [usize; 2] },
}

impl Serialize for MaskEncoding {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            MaskEncoding::Polygons(p) => p.serialize(s),
            MaskEncoding::Rle { counts, size } => {
                let mut m = s.serialize_map(Some(2))?;
                m.serialize_entry("counts", counts)?;
                m.serialize_entry("size", size)?;
                m.end()
            }
            MaskEncoding::CompressedRle { counts, size } => {
                let mut m = s.serialize_map(Some(2))?;
                m.serialize_entry("counts", counts)?;
                m.serialize_entry("size", size)?;
                m.end()
            }
        }
    }
}

impl MaskEncoding {
    pub(crate) fn from_json(v: &serde_json::Value) -> Result<Self, String> {
        use serde_json::Value;
        match v {
            Value::Array(polys) => {
                let mut out = Vec::with_capacity(polys.len());
                for p in polys {
                    let coords = p.as_array().ok_or("polygon must be an array of numbers")?;
                    let nums = coords
                        .iter()
                        .map(|c| match c {
                            Value::Number(n) => Ok(n.clone()),
                            _ => Err("polygon coordinate is not a number".to_string()),
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    if nums.len() < 6 || nums.len() % 2 != 0 {
                        return Err(format!("polygon needs an even number (≥6) of coordinates, got {}", nums.len()));
                    }
                    out.push(nums);
                }
                if out.is_empty() {
                    return Err("empty polygon list".into());
                }
                Ok(MaskEncoding::Polygons(out))
            }
            Value::Object(obj) => {
                let size = obj
                    .get("size")
                    .and_then(Value::as_array)
                    .filter(|a| a.len() == 2)
                    .and_then(|a| Some([a[0].as_u64()? as usize, a[1].as_u64()? as usize]))
                    .ok_or("RLE needs size [height, width]")?;
                match obj.get("counts") {
                    Some(Value::String(s)) => Ok(MaskEncoding::CompressedRle { counts: s.clone(), size }),
                    Some(Value::Array(a)) => {
                        let counts = a
                            .iter()
                            .map(|c| c.as_u64().ok_or("RLE count is not a non-negative integer"))
                            .collect::<Result<Vec<_>, _>>()?;
                        Ok(MaskEncoding::Rle { counts, size })
                    }
                    _ => Err("RLE needs counts".into()),
                }
            }
            _ => Err("segmentation must be a polygon list or an RLE object".into()),
        }
    }

    /// Uncompressed RLE of a row-major mask.
    pub fn rle_from_mask(mask: &BinaryMask) -> Self {
        MaskEncoding::Rle { counts: rle_counts(mask), size: [mask.height(), mask.width()] }
    }

    pub fn compressed_from_mask(mask: &BinaryMask) -> Self {
        MaskEncoding::CompressedRle {
            counts: counts_to_string(&rle_counts(mask)),
            size: [mask.height(), mask.width()],
        }
    }
}

fn rle_counts(mask: &BinaryMask) -> Vec<u64> {
    let (h, w) = (mask.height(), mask.width());
    let mut counts = Vec::new();
    let mut current = false;
    let mut run = 0u64;
    for col in 0..w {
        for row in 0..h {
            let v = mask.get(row, col);
            if v != current {
                counts.push(run);
                run = 0;
                current = v;
            }
            run += 1;
        }
    }
    counts.push(run);
    counts
}

/// COCO's LEB128-like RLE string: 5 data bits per char (offset by 48),
/// bit 0x20 marks continuation, and counts from index 3 on are stored as
/// differences against the count two positions earlier.
pub fn counts_to_string(counts: &[u64]) -> String {
    let mut out = String::new();
    for (i, &c) in counts.iter().enumerate() {
        let mut x = c as i64;
        if i > 2 {
            x -= counts[i - 2] as i64;
        }
        loop {
            let mut ch = (x & 0x1f) as u8;
            x >>= 5;
            let more = if ch & 0x10 != 0 { x != -1 } else { x != 0 };
            if more {
                ch |= 0x20;
            }
            out.push((ch + 48) as char);
            if !more {
                break;
            }
        }
    }
    out
}

pub fn counts_from_string(s: &str) -> Result<Vec<u64>, AnnotationError> {
    let bytes = s.as_bytes();
    let mut counts: Vec<u64> = Vec::new();
    let mut p = 0;
    while p < bytes.len() {
        let mut x: i64 = 0;
        let mut k = 0;
        loop {
            let b = bytes[p];
            if !(48..48 + 64).contains(&b) {
                return Err(AnnotationError::Decode(format!("invalid RLE character {:?} at {}", b as char, p)));
            }
            let c = (b - 48) as i64;
            if k >= 12 {
                return Err(AnnotationError::Decode("RLE count overflows".into()));
            }
            x |= (c & 0x1f) << (5 * k);
            let more = c & 0x20 != 0;
            p += 1;
            k += 1;
            if !more {
                if c & 0x10 != 0 {
                    x |= -1i64 << (5 * k);
                }
                break;
            }
            if p >= bytes.len() {
                return Err(AnnotationError::Decode("truncated RLE string".into()));
            }
        }
        let m = counts.len();
        if m > 2 {
            x += counts[m - 2] as i64;
        }
        if x < 0 {
            return Err(AnnotationError::Decode(format!("negative run length at run {m}")));
        }
        counts.push(x as u64);
    }
    Ok(counts)
}

fn decode_counts(counts: &[u64], height: usize, width: usize) -> Result<BinaryMask, AnnotationError> {
    let total: u64 = counts.iter().sum();
    let n = (height * width) as u64;
    if total != n {
        return Err(AnnotationError::Decode(format!("run lengths sum to {total}, expected {height}×{width} = {n}")));
    }
    let mut mask = BinaryMask::zeros(height, width);
    let mut k = 0usize;
    let mut value = false;
    for &run in counts {
        if value {
            for idx in k..k + run as usize {
                mask.set(idx % height, idx / height, true);
            }
        }
        k += run as usize;
        value = !value;
    }
    Ok(mask)
}

/// Rasterizes polygons with the even-odd rule sampled at pixel centers: pixel
/// `(row, col)` is set when `(col + 0.5, row + 0.5)` lies inside. Multiple
/// polygons are unioned.
fn rasterize_polygons(polys: &[Vec<Number>], height: usize, width: usize) -> BinaryMask {
    let mut mask = BinaryMask::zeros(height, width);
    for poly in polys {
        let pts: Vec<(f64, f64)> = poly
            .chunks_exact(2)
            .map(|xy| (xy[0].as_f64().unwrap_or(0.0), xy[1].as_f64().unwrap_or(0.0)))
            .collect();
        for row in 0..height {
            let y = row as f64 + 0.5;
            // scanline crossings
            let mut xs: Vec<f64> = Vec::new();
            for i in 0..pts.len() {
                let (x0, y0) = pts[i];
                let (x1, y1) = pts[(i + 1) % pts.len()];
                if (y0 <= y) != (y1 <= y) {
                    xs.push(x0 + (y - y0) * (x1 - x0) / (y1 - y0));
                }
            }
            xs.sort_by(|a, b| a.total_cmp(b));
            for span in xs.chunks_exact(2) {
                for col in 0..width {
                    let x = col as f64 + 0.5;
                    if x >= span[0] && x < span[1] {
                        mask.set(row, col, true);
                    }
                }
            }
        }
    }
    mask
}

/// Decodes an encoding into an `height × width` raster.
pub fn decode_mask(encoding: &MaskEncoding, height: usize, width: usize) -> Result<BinaryMask, AnnotationError> {
    let check_size = |size: &[usize; 2]| {
        if *size != [height, width] {
            return Err(AnnotationError::Decode(format!(
                "RLE size {}×{} does not match image {height}×{width}",
                size[0], size[1]
            )));
        }
        Ok(())
    };
    match encoding {
        MaskEncoding::Polygons(p) => Ok(rasterize_polygons(p, height, width)),
        MaskEncoding::Rle { counts, size } => {
            check_size(size)?;
            decode_counts(counts, height, width)
        }
        MaskEncoding::CompressedRle { counts, size } => {
            check_size(size)?;
            decode_counts(&counts_from_string(counts)?, height, width)
        }
    }
}

/// Mean foreground pixel position with pixel `(i, j)` at `(i + 0.5, j + 0.5)`.
/// Returns `(c_h, c_w)`.
pub fn center_of_mass(mask: &BinaryMask) -> Result<(f64, f64), AnnotationError> {
    let mut n = 0u64;
    let (mut sr, mut sc) = (0u64, 0u64);
    for (r, c) in mask.foreground() {
        n += 1;
        sr += r as u64;
        sc += c as u64;
    }
    if n == 0 {
        return Err(AnnotationError::EmptyRaster);
    }
    let n = n as f64;
    Ok((sr as f64 / n + 0.5, sc as f64 / n + 0.5))
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn rle(counts: &[u64], h: usize, w: usize) -> MaskEncoding {
        MaskEncoding::Rle { counts: counts.to_vec(), size: [h, w] }
    }

    #[test]
    fn hand_unrolled_rle() {
        // [4 off, 2 on, 3 off] over 3×3, column-major linear indices 4 and 5
        let m = decode_mask(&rle(&[4, 2, 3], 3, 3), 3, 3).unwrap();
        let mut expected = BinaryMask::zeros(3, 3);
        for k in [4usize, 5] {
            expected.set(k % 3, k / 3, true);
        }
        assert_eq!(m, expected);
        assert!(m.get(1, 1) && m.get(2, 1));
        assert_eq!(m.area(), 2);
        // idempotent
        assert_eq!(decode_mask(&rle(&[4, 2, 3], 3, 3), 3, 3).unwrap(), m);
    }

    #[test]
    fn rle_length_mismatch_is_an_error() {
        assert!(matches!(decode_mask(&rle(&[4, 2], 3, 3), 3, 3), Err(AnnotationError::Decode(_))));
        assert!(matches!(decode_mask(&rle(&[9], 3, 4), 3, 3), Err(AnnotationError::Decode(_))));
    }

    #[test]
    fn full_rectangle_polygon_fills_raster() {
        let poly: Vec<Number> = [0, 0, 5, 0, 5, 4, 0, 4].iter().map(|&v| Number::from(v)).collect();
        let m = decode_mask(&MaskEncoding::Polygons(vec![poly]), 4, 5).unwrap();
        assert_eq!(m.area(), 20);
    }

    #[test]
    fn triangle_polygon() {
        // lower-left triangle of a 4x4 square: centers with x < y
        let poly: Vec<Number> = [0, 0, 0, 4, 4, 4].iter().map(|&v| Number::from(v)).collect();
        let m = decode_mask(&MaskEncoding::Polygons(vec![poly]), 4, 4).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                assert_eq!(m.get(r, c), c < r, "({r},{c})");
            }
        }
    }

    #[test]
    fn known_coco_string() {
        // 100 = 0b11_00100: low 5 bits with continuation (4 | 0x20) + 48 = 'T',
        // then 3 + 48 = '3'
        let s = counts_to_string(&[3, 2, 100]);
        assert_eq!(s, "32T3");
        assert_eq!(counts_from_string(&s).unwrap(), vec![3, 2, 100]);
        assert!(counts_from_string("3\u{7f}").is_err());
    }

    #[test]
    fn center_of_mass_cases() {
        let mut m = BinaryMask::zeros(4, 4);
        m.set(0, 0, true);
        assert_eq!(center_of_mass(&m).unwrap(), (0.5, 0.5));
        let full = BinaryMask::from_vec(4, 4, vec![true; 16]).unwrap();
        assert_eq!(center_of_mass(&full).unwrap(), (2.0, 2.0));
        assert!(matches!(center_of_mass(&BinaryMask::zeros(3, 3)), Err(AnnotationError::EmptyRaster)));
    }

    #[test]
    fn l_shaped_blob_matches_enumeration() {
        let pixels = [(0usize, 0usize), (1, 0), (2, 0), (2, 1), (2, 2)];
        let mut m = BinaryMask::zeros(5, 5);
        for &(r, c) in &pixels {
            m.set(r, c, true);
        }
        let n = pixels.len() as f64;
        let ch = pixels.iter().map(|&(r, _)| r as f64 + 0.5).sum::<f64>() / n;
        let cw = pixels.iter().map(|&(_, c)| c as f64 + 0.5).sum::<f64>() / n;
        let (gh, gw) = center_of_mass(&m).unwrap();
        assert!((gh - ch).abs() < 1e-12 && (gw - cw).abs() < 1e-12);
        assert!((ch - 1.9).abs() < 1e-12 && (cw - 1.1).abs() < 1e-12);
    }

    fn arb_mask() -> impl Strategy<Value = BinaryMask> {
        (1usize..9, 1usize..9).prop_flat_map(|(h, w)| {
            proptest::collection::vec(any::<bool>(), h * w)
                .prop_map(move |d| BinaryMask::from_vec(h, w, d).unwrap())
        })
    }

    proptest! {
        #[test]
        fn rle_round_trips(m in arb_mask()) {
            let (h, w) = (m.height(), m.width());
            prop_assert_eq!(&decode_mask(&MaskEncoding::rle_from_mask(&m), h, w).unwrap(), &m);
            prop_assert_eq!(&decode_mask(&MaskEncoding::compressed_from_mask(&m), h, w).unwrap(), &m);
        }

        #[test]
        fn center_inside_bbox_and_flip_equivariant(m in arb_mask()) {
            prop_assume!(m.area() > 0);
            let (ch, cw) = center_of_mass(&m).unwrap();
            let (r0, c0, r1, c1) = m.bounding_box().unwrap();
            prop_assert!(ch >= r0 as f64 && ch <= (r1 + 1) as f64);
            prop_assert!(cw >= c0 as f64 && cw <= (c1 + 1) as f64);
            let (fh, fw) = center_of_mass(&m.flip_horizontal()).unwrap();
            prop_assert!((fh - ch).abs() < 1e-12);
            prop_assert!((fw - (m.width() as f64 - cw)).abs() < 1e-12);
        }

        #[test]
        fn string_codec_round_trips(counts in proptest::collection::vec(0u64..100_000, 0..40)) {
            prop_assert_eq!(counts_from_string(&counts_to_string(&counts)).unwrap(), counts);
        }
    }
}
